//! Per-mode method of lines for the half-line heat equation.
//!
//! `∂_t w = c(∂_r² − |ξ|²)w + F`, `w(t, 0) = b(t)`, `w(t, Y_max) = 0`, on the
//! graded grid, Crank–Nicolson in time with linear interpolation of `b` and
//! `F` across substeps.

use num_complex::Complex64;

use crate::error::{Result, StefanError};
use crate::model::laplacian_weights;

type C64 = Complex64;

/// Real tridiagonal matrix stored by diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Thomas factorization of a [`Tridiag`].
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagLu {
    lower: Vec<f64>,
    upper_mod: Vec<f64>,
    pivot: Vec<f64>,
}

impl Tridiag {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn factor(&self) -> Result<TridiagLu> {
        let n = self.diag.len();
        let mut pivot = vec![0.0; n];
        let mut upper_mod = vec![0.0; n];
        pivot[0] = self.diag[0];
        for k in 0..n {
            if k > 0 {
                pivot[k] = self.diag[k] - self.lower[k] * upper_mod[k - 1];
            }
            if pivot[k].abs() < 1e-300 || !pivot[k].is_finite() {
                return Err(StefanError::LinearSolve(format!("zero pivot at row {k}")));
            }
            if k + 1 < n {
                upper_mod[k] = self.upper[k] / pivot[k];
            }
        }
        Ok(TridiagLu {
            lower: self.lower.clone(),
            upper_mod,
            pivot,
        })
    }

    /// `y = A x`
    pub fn mul(&self, x: &[C64]) -> Vec<C64> {
        let n = self.len();
        (0..n)
            .map(|k| {
                let mut s = x[k] * self.diag[k];
                if k > 0 {
                    s += x[k - 1] * self.lower[k];
                }
                if k + 1 < n {
                    s += x[k + 1] * self.upper[k];
                }
                s
            })
            .collect()
    }
}

impl TridiagLu {
    pub fn solve(&self, rhs: &mut [C64]) {
        let n = self.pivot.len();
        rhs[0] /= self.pivot[0];
        for k in 1..n {
            rhs[k] = (rhs[k] - rhs[k - 1] * self.lower[k]) / self.pivot[k];
        }
        for k in (0..n - 1).rev() {
            let next = rhs[k + 1];
            rhs[k] -= next * self.upper_mod[k];
        }
    }
}

/// Spatial operator `c(∂_r² − |ξ|²)` on the interior nodes `1..M−1`.
///
/// `boundary_coef` is the weight of `w(0)` in the first interior row.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineOperator {
    pub op: Tridiag,
    pub boundary_coef: f64,
}

impl HalfLineOperator {
    pub fn new(y: &[f64], c: f64, xi2: f64) -> Self {
        let m = y.len();
        let n = m - 2;
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let mut boundary_coef = 0.0;
        for k in 1..m - 1 {
            let [a, b, e] = laplacian_weights(y[k] - y[k - 1], y[k + 1] - y[k]);
            let i = k - 1;
            if i == 0 {
                boundary_coef = c * a;
            } else {
                lower[i] = c * a;
            }
            diag[i] = c * b - c * xi2;
            if i + 1 < n {
                upper[i] = c * e;
            }
        }
        HalfLineOperator {
            op: Tridiag { lower, diag, upper },
            boundary_coef,
        }
    }

    /// `I − θ·dt·L`
    pub fn shifted(&self, theta_dt: f64) -> Tridiag {
        Tridiag {
            lower: self.op.lower.iter().map(|v| -theta_dt * v).collect(),
            diag: self.op.diag.iter().map(|v| 1.0 - theta_dt * v).collect(),
            upper: self.op.upper.iter().map(|v| -theta_dt * v).collect(),
        }
    }
}

/// Integrates one mode of the half-line problem and returns `w` at every time node.
///
/// `boundary[i]` is `b(t_i)`; `source`, if given, holds `F(t_i, ·)` on the y grid.
pub fn integrate_half_line(
    y: &[f64],
    c: f64,
    xi2: f64,
    t: &[f64],
    w0: &[C64],
    boundary: &[C64],
    source: Option<&[Vec<C64>]>,
    substeps: usize,
) -> Result<Vec<Vec<C64>>> {
    let m = y.len();
    if w0.len() != m || boundary.len() != t.len() {
        return Err(StefanError::Shape(
            "initial profile or boundary series does not match the grids".into(),
        ));
    }
    if let Some(src) = source {
        if src.len() != t.len() || src.iter().any(|s| s.len() != m) {
            return Err(StefanError::Shape("source does not match the grids".into()));
        }
    }
    let substeps = substeps.max(1);
    let dt = (t[1] - t[0]) / substeps as f64;
    let lop = HalfLineOperator::new(y, c, xi2);
    let lu = lop.shifted(0.5 * dt).factor()?;
    let n = m - 2;
    let mut out = Vec::with_capacity(t.len());
    let mut w = w0.to_vec();
    w[0] = boundary[0];
    w[m - 1] = C64::new(0.0, 0.0);
    out.push(w.clone());
    let src_at = |i: usize, theta: f64, k: usize| -> C64 {
        match source {
            Some(s) => s[i][k] * (1.0 - theta) + s[i + 1][k] * theta,
            None => C64::new(0.0, 0.0),
        }
    };
    for i in 0..t.len() - 1 {
        let step = (t[i + 1] - t[i]) / substeps as f64;
        if (step - dt).abs() > 1e-9 * dt {
            return Err(StefanError::InvalidGrid("method of lines needs a uniform t grid".into()));
        }
        for s in 0..substeps {
            let th0 = s as f64 / substeps as f64;
            let th1 = (s + 1) as f64 / substeps as f64;
            let b0 = w[0];
            let b1 = boundary[i] * (1.0 - th1) + boundary[i + 1] * th1;
            let interior = &w[1..m - 1];
            let lw = lop.op.mul(interior);
            let mut rhs: Vec<C64> = (0..n)
                .map(|k| {
                    interior[k]
                        + lw[k] * (0.5 * dt)
                        + (src_at(i, th0, k + 1) + src_at(i, th1, k + 1)) * (0.5 * dt)
                })
                .collect();
            rhs[0] += (b0 + b1) * (0.5 * dt * lop.boundary_coef);
            lu.solve(&mut rhs);
            w[0] = b1;
            w[1..m - 1].copy_from_slice(&rhs);
        }
        if w.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(StefanError::Integrator {
                mode: 0,
                reason: format!("non-finite state at t = {}", t[i + 1]),
            });
        }
        out.push(w.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn thomas_solves() {
        let a = Tridiag {
            lower: vec![0.0, 1.0, -0.5],
            diag: vec![4.0, 3.0, 5.0],
            upper: vec![1.0, 2.0, 0.0],
        };
        let x = vec![C64::new(1.0, 2.0), C64::new(-1.0, 0.5), C64::new(0.25, -3.0)];
        let mut b = a.mul(&x);
        a.factor().unwrap().solve(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert_abs_diff_eq!((u - v).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn decaying_mode_without_boundary_forcing() {
        // w = e^{-c(1+ξ²)t} sin(r) is exact up to the far boundary for r ∈ [0, π]
        let m = 201;
        let y: Vec<f64> = (0..m).map(|k| std::f64::consts::PI * k as f64 / (m - 1) as f64).collect();
        let t: Vec<f64> = (0..=10).map(|i| 0.05 * i as f64).collect();
        let w0: Vec<C64> = y.iter().map(|r| C64::new(r.sin(), 0.0)).collect();
        let b = vec![C64::new(0.0, 0.0); t.len()];
        let (c, xi2) = (0.7, 2.0);
        let w = integrate_half_line(&y, c, xi2, &t, &w0, &b, None, 4).unwrap();
        let decay = (-c * (1.0 + xi2) * 0.5_f64).exp();
        assert_abs_diff_eq!(w[10][100].re, decay, epsilon = 1e-4);
    }
}

//! Tangential FFT and numerical Laplace inversion.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Result, StefanError};

type C64 = Complex64;

/// Unitary discrete Fourier transform on the periodic x grid.
#[derive(Clone)]
pub struct Tangential {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Tangential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tangential").field("n", &self.n).finish()
    }
}

impl Tangential {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Tangential {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Mode coefficients in FFT order, scaled by `1/√N`.
    pub fn forward(&self, field: &[f64]) -> Vec<C64> {
        assert_eq!(field.len(), self.n, "field length does not match the grid");
        let mut buf: Vec<C64> = field.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.fwd.process(&mut buf);
        let s = 1.0 / (self.n as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= s);
        buf
    }

    pub fn try_forward(&self, field: &[f64]) -> Result<Vec<C64>> {
        if field.len() != self.n {
            return Err(StefanError::Shape(format!(
                "field has {} samples, grid has {}",
                field.len(),
                self.n
            )));
        }
        Ok(self.forward(field))
    }

    pub fn forward_complex(&self, field: &[C64]) -> Vec<C64> {
        assert_eq!(field.len(), self.n, "field length does not match the grid");
        let mut buf = field.to_vec();
        self.fwd.process(&mut buf);
        let s = 1.0 / (self.n as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= s);
        buf
    }

    pub fn inverse_complex(&self, modes: &[C64]) -> Vec<C64> {
        assert_eq!(modes.len(), self.n, "mode count does not match the grid");
        let mut buf = modes.to_vec();
        self.inv.process(&mut buf);
        let s = 1.0 / (self.n as f64).sqrt();
        buf.iter_mut().for_each(|v| *v *= s);
        buf
    }

    /// Real part of the inverse transform.
    pub fn inverse_real(&self, modes: &[C64]) -> Vec<f64> {
        self.inverse_complex(modes).into_iter().map(|v| v.re).collect()
    }

    pub fn try_inverse(&self, modes: &[C64]) -> Result<Vec<C64>> {
        if modes.len() != self.n {
            return Err(StefanError::Shape(format!(
                "{} modes given, grid has {}",
                modes.len(),
                self.n
            )));
        }
        Ok(self.inverse_complex(modes))
    }
}

/// Fixed-N quadrature contour for the Bromwich integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ContourKind {
    /// Weideman's optimized cotangent contour
    #[default]
    Talbot,
    /// hyperbolic deformation of the Bromwich line
    Bromwich,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContourSpec {
    pub kind: ContourKind,
    #[serde(rename = "N_nodes")]
    pub n_nodes: usize,
    /// relative change allowed between N and 2N nodes
    pub tol: f64,
    /// number of refinements tried before giving up
    pub refine_max: usize,
}

impl Default for ContourSpec {
    fn default() -> Self {
        ContourSpec {
            kind: ContourKind::Talbot,
            n_nodes: 48,
            tol: 1e-8,
            refine_max: 2,
        }
    }
}

impl ContourSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_nodes < 16 {
            return Err(StefanError::InvalidParam {
                name: "N_nodes",
                reason: format!("must be >= 16, got {}", self.n_nodes),
            });
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(StefanError::InvalidParam {
                name: "tol",
                reason: "must be > 0".into(),
            });
        }
        Ok(())
    }

    pub fn with_nodes(&self, n_nodes: usize) -> Self {
        ContourSpec { n_nodes, ..*self }
    }
}

/// Quadrature rule for one target time: `f(t) ≈ Σ w_k F(z_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourRule {
    pub z: Vec<C64>,
    /// weights including the factor `e^{z t}`
    pub w: Vec<C64>,
    /// true when only the upper half of a conjugate-symmetric contour is kept
    pub half: bool,
}

impl ContourRule {
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Applies the rule to precomputed values `F(z_k)`.
    pub fn apply(&self, values: &[C64]) -> C64 {
        let s: C64 = self.w.iter().zip(values).map(|(w, v)| w * v).sum();
        if self.half {
            C64::new(s.re, 0.0)
        } else {
            s
        }
    }

    pub fn eval<F: Fn(C64) -> C64>(&self, f: F) -> C64 {
        let vals: Vec<C64> = self.z.iter().map(|&z| f(z)).collect();
        self.apply(&vals)
    }
}

/// Contour nodes and weights for time `t > 0`, shifted right by `shift`.
///
/// The shift evaluates `F` on `ν + shift` and multiplies by `e^{shift·t}`,
/// which keeps every node at real part above `shift` minus the contour depth.
/// With `half = true` only nodes with `Im ν ≥ 0` are returned and the rule
/// is valid for functions with `F(z̄) = conj F(z)`.
pub fn contour_rule(spec: &ContourSpec, t: f64, shift: f64, half: bool) -> ContourRule {
    assert!(t > 0.0, "contour rule needs t > 0");
    let n = spec.n_nodes;
    let mut z = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let eshift = (shift * t).exp();
    match spec.kind {
        ContourKind::Talbot => {
            let (sig, mu, nu, beta) = (-0.6122, 0.5017, 0.6407, 0.2645);
            let scale = n as f64 / t;
            for k in 0..n {
                let theta = -PI + (k as f64 + 0.5) * 2.0 * PI / n as f64;
                if half && theta < 0.0 {
                    continue;
                }
                let cot = 1.0 / (nu * theta).tan();
                let s = (nu * theta).sin();
                let zk = C64::new(sig + mu * theta * cot, beta * theta) * scale;
                let dz = C64::new(mu * cot - mu * nu * theta / (s * s), beta) * scale;
                let mut wk = (zk * t).exp() * dz / C64::new(0.0, n as f64) * eshift;
                if half {
                    wk *= 2.0;
                }
                z.push(zk + shift);
                w.push(wk);
            }
        }
        ContourKind::Bromwich => {
            let m = (n / 2) as i64;
            let h = 1.0818 / m as f64;
            let mu = 4.4921 * m as f64 / t;
            let alpha = 1.1721;
            for k in -m..=m {
                if half && k < 0 {
                    continue;
                }
                let u = k as f64 * h;
                let arg = C64::new(-alpha, u);
                let zk = (C64::new(1.0, 0.0) + arg.sin()) * mu;
                let dz = C64::new(0.0, mu) * arg.cos();
                let mut wk = (zk * t).exp() * dz * h / C64::new(0.0, 2.0 * PI) * eshift;
                if half && k > 0 {
                    wk *= 2.0;
                }
                z.push(zk + shift);
                w.push(wk);
            }
        }
    }
    ContourRule { z, w, half }
}

/// Numerical inverse Laplace transform of `F` at time `t`.
///
/// The node count grows by a factor 4/3 until two successive results agree
/// to `spec.tol` relative to `max(1, |f|)`, at most `refine_max` times.
/// Doubling is avoided: the fixed-shape contours lose about `e^{0.17N}·ε` to
/// roundoff, which is visible in double precision beyond N ≈ 100.
pub fn inverse_laplace<F: Fn(C64) -> C64>(f: F, t: f64, spec: &ContourSpec) -> Result<C64> {
    inverse_laplace_shifted(f, t, spec, 0.0)
}

pub fn inverse_laplace_shifted<F: Fn(C64) -> C64>(
    f: F,
    t: f64,
    spec: &ContourSpec,
    shift: f64,
) -> Result<C64> {
    spec.validate()?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(StefanError::InvalidParam {
            name: "t",
            reason: format!("inverse Laplace transform needs t > 0, got {t}"),
        });
    }
    let mut cur = *spec;
    let mut prev = contour_rule(&cur, t, shift, false).eval(&f);
    let mut change = f64::INFINITY;
    for _ in 0..=spec.refine_max {
        cur = cur.with_nodes((cur.n_nodes * 4).div_ceil(3));
        let next = contour_rule(&cur, t, shift, false).eval(&f);
        change = (next - prev).norm() / next.norm().max(1.0);
        if change <= spec.tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(StefanError::ContourNonConvergence {
        change,
        tol: spec.tol,
    })
}

/// Clenshaw–Curtis nodes and weights on `[-1, 1]` with `n + 1` points.
pub fn clenshaw_curtis(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let x: Vec<f64> = (0..=n).map(|k| (k as f64 * PI / n as f64).cos()).collect();
    let mut w = vec![0.0; n + 1];
    for (k, wk) in w.iter_mut().enumerate() {
        let theta = k as f64 * PI / n as f64;
        let mut s = 0.0;
        for j in 1..=n / 2 {
            let b = if 2 * j == n { 1.0 } else { 2.0 };
            s += b / (4.0 * (j * j) as f64 - 1.0) * (2.0 * j as f64 * theta).cos();
        }
        let c = if k == 0 || k == n { 1.0 } else { 2.0 };
        *wk = c / n as f64 * (1.0 - s);
    }
    (x, w)
}

/// Laplace transforms of a retracted time series at given nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTransform {
    pub values: Vec<C64>,
    pub warning: Option<String>,
}

/// `∫₀^{2T} e^{-λt} e^{-κt} (ℰ u)(t) dt` for the reflection extension `ℰ u`.
///
/// `u` is taken piecewise linear between the nodes `t` (with `t[0] = 0`,
/// `t[last] = T`); every cell on either side of `T` is integrated with an
/// `(order + 1)`-point Clenshaw–Curtis rule.
pub fn laplace_of_data(
    t: &[f64],
    u: &[C64],
    kappa: f64,
    lambdas: &[C64],
    zero_trace: bool,
    order: usize,
) -> Result<DataTransform> {
    if t.len() != u.len() || t.len() < 2 {
        return Err(StefanError::Shape(format!(
            "time series has {} values on {} nodes",
            u.len(),
            t.len()
        )));
    }
    if t[0] != 0.0 || t.windows(2).any(|w| w[1] <= w[0]) {
        return Err(StefanError::InvalidGrid(
            "time nodes must start at 0 and increase strictly".into(),
        ));
    }
    let big_t = *t.last().unwrap();
    let scale = u.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let warning = (zero_trace && u[0].norm() > 1e-10 * scale.max(1.0)).then(|| {
        format!(
            "series does not vanish at t = 0 (|u(0)| = {:.3e}) but a zero-trace transform was requested",
            u[0].norm()
        )
    });
    let (xc, wc) = clenshaw_curtis(order.max(2));
    let values = lambdas
        .iter()
        .map(|&lam| {
            let a = lam + kappa;
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..t.len() - 1 {
                let (t0, t1) = (t[j], t[j + 1]);
                let half = 0.5 * (t1 - t0);
                let mid = 0.5 * (t1 + t0);
                for (x, w) in xc.iter().zip(&wc) {
                    let s = mid + half * x;
                    let theta = (s - t0) / (t1 - t0);
                    let val = u[j] * (1.0 - theta) + u[j + 1] * theta;
                    // reflected copy lives at 2T - s
                    let e = (-a * s).exp() + (-a * (2.0 * big_t - s)).exp();
                    acc += val * e * (w * half);
                }
            }
            acc
        })
        .collect();
    Ok(DataTransform { values, warning })
}

/// Reflection extension `ℰ u` evaluated at `s ∈ [0, 2T]`, zero beyond.
pub fn reflect_extend(t: &[f64], u: &[f64], s: f64) -> f64 {
    let big_t = *t.last().unwrap();
    if !(0.0..=2.0 * big_t).contains(&s) {
        return 0.0;
    }
    let r = if s <= big_t { s } else { 2.0 * big_t - s };
    interp_linear(t, u, r)
}

pub fn interp_linear(t: &[f64], u: &[f64], s: f64) -> f64 {
    let n = t.len();
    if s <= t[0] {
        return u[0];
    }
    if s >= t[n - 1] {
        return u[n - 1];
    }
    let j = t.partition_point(|&v| v <= s) - 1;
    let theta = (s - t[j]) / (t[j + 1] - t[j]);
    u[j] * (1.0 - theta) + u[j + 1] * theta
}

/// Piecewise-linear representation `d(t) = d₀ + Σ_j s_j (t − t_j)₊` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RampDecomposition<T> {
    pub d0: T,
    /// slope increments at `t_0, …, t_{N-1}`
    pub slopes: Vec<T>,
}

pub fn ramp_decomposition<T>(values: &[T], dt: f64) -> RampDecomposition<T>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = values.len();
    assert!(n >= 2);
    let inv = 1.0 / dt;
    let mut slopes = Vec::with_capacity(n - 1);
    slopes.push((values[1] - values[0]) * inv);
    for j in 1..n - 1 {
        slopes.push((values[j + 1] - values[j] - (values[j] - values[j - 1])) * inv);
    }
    RampDecomposition {
        d0: values[0],
        slopes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cc_integrates_polynomials() {
        let (x, w) = clenshaw_curtis(8);
        let s: f64 = w.iter().sum();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-14);
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(6)).sum();
        assert_abs_diff_eq!(q, 2.0 / 7.0, epsilon = 1e-14);
    }

    #[test]
    fn ramp_decomposition_reconstructs() {
        let dt = 0.25;
        let vals = [1.0, 2.0, 2.5, 2.0, 4.0];
        let r = ramp_decomposition(&vals, dt);
        for (i, v) in vals.iter().enumerate() {
            let t = i as f64 * dt;
            let rec: f64 = r.d0
                + r.slopes
                    .iter()
                    .enumerate()
                    .map(|(j, s)| s * (t - j as f64 * dt).max(0.0))
                    .sum::<f64>();
            assert_abs_diff_eq!(rec, *v, epsilon = 1e-13);
        }
    }

    #[test]
    fn half_rule_matches_full_rule() {
        let spec = ContourSpec::default();
        let f = |z: C64| 1.0 / (z * z + 1.0);
        for kind in [ContourKind::Talbot, ContourKind::Bromwich] {
            let spec = ContourSpec { kind, ..spec };
            let full = contour_rule(&spec, 1.3, 0.5, false).eval(f);
            let half = contour_rule(&spec, 1.3, 0.5, true).eval(f);
            assert_abs_diff_eq!(full.re, half.re, epsilon = 1e-12);
            assert_abs_diff_eq!(full.im, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(half.re, 1.3_f64.sin(), epsilon = 1e-9);
        }
    }

    #[test]
    fn reflection_is_continuous() {
        let t = [0.0, 0.5, 1.0];
        let u = [0.0, 0.3, 0.7];
        assert_abs_diff_eq!(reflect_extend(&t, &u, 1.0 - 1e-12), 0.7, epsilon = 1e-10);
        assert_abs_diff_eq!(reflect_extend(&t, &u, 1.0 + 1e-12), 0.7, epsilon = 1e-10);
        assert_eq!(reflect_extend(&t, &u, 2.5), 0.0);
    }
}

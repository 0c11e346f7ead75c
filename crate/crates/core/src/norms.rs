//! Discrete Sobolev–Slobodeckij norms and the parameter-dependent norms of
//! solutions and data.
//!
//! Fields are read as piecewise-linear interpolants of their nodal values.
//! Seminorm double integrals are summed cell pair by cell pair: a cell against
//! itself in closed form, neighbouring cells after a Duffy substitution that
//! removes the corner singularity, distant cells by 3×3 Gauss–Legendre.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ndarray::{Array2, Array3};

use crate::error::{Result, StefanError};
use crate::model::{
    fd_derivative, trapezoid_weights, BulkSeries, BulkSlice, DataTuple, Grids, PhysicalParams,
    SolutionTriple,
};
use crate::transform::Tangential;

type C64 = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Interval,
    Torus { period: f64 },
}

/// A one-dimensional grid with its domain type.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis1 {
    pub nodes: Vec<f64>,
    pub domain: Domain,
}

impl Axis1 {
    pub fn torus(grids: &Grids) -> Self {
        Axis1 {
            nodes: grids.x.to_vec(),
            domain: Domain::Torus {
                period: grids.spec.l_x,
            },
        }
    }

    pub fn time(grids: &Grids) -> Self {
        Axis1 {
            nodes: grids.t.to_vec(),
            domain: Domain::Interval,
        }
    }

    pub fn radial(grids: &Grids) -> Self {
        Axis1 {
            nodes: grids.y.to_vec(),
            domain: Domain::Interval,
        }
    }

    /// `n` equispaced nodes on `[a, b]`.
    pub fn interval(a: f64, b: f64, n: usize) -> Self {
        Axis1 {
            nodes: (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
            domain: Domain::Interval,
        }
    }

    /// `n` nodes `−L/2 + jL/n` of a torus of length `L`.
    pub fn periodic(period: f64, n: usize) -> Self {
        Axis1 {
            nodes: (0..n).map(|j| -0.5 * period + period * j as f64 / n as f64).collect(),
            domain: Domain::Torus { period },
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature weights of the piecewise-linear interpolant.
    pub fn weights(&self) -> Vec<f64> {
        match self.domain {
            Domain::Interval => trapezoid_weights(&self.nodes),
            Domain::Torus { period } => vec![period / self.len() as f64; self.len()],
        }
    }

    /// `(start node, end node, left coordinate, length)` of every cell.
    fn cells(&self) -> Vec<Cell> {
        let n = self.len();
        match self.domain {
            Domain::Interval => (0..n - 1)
                .map(|j| Cell {
                    start: j,
                    end: j + 1,
                    left: self.nodes[j],
                    h: self.nodes[j + 1] - self.nodes[j],
                })
                .collect(),
            Domain::Torus { period } => (0..n)
                .map(|j| Cell {
                    start: j,
                    end: (j + 1) % n,
                    left: self.nodes[j],
                    h: period / n as f64,
                })
                .collect(),
        }
    }

    fn distance(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        match self.domain {
            Domain::Interval => d,
            Domain::Torus { period } => {
                let r = d % period;
                r.min(period - r)
            }
        }
    }

    /// First derivative: spectral on the torus, second-order differences on intervals.
    pub fn derivative(&self, u: &[f64]) -> Vec<f64> {
        match self.domain {
            Domain::Interval => fd_derivative(&self.nodes, u),
            Domain::Torus { period } => spectral_derivative(u, period, 1),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    start: usize,
    end: usize,
    left: f64,
    h: f64,
}

/// Order and exponent of a fractional norm along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub s: f64,
    pub p: f64,
}

impl NormSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(StefanError::NormSpec(format!("order s = {} must be >= 0", self.s)));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(StefanError::NormSpec(format!("exponent p = {} must be >= 1", self.p)));
        }
        Ok(())
    }

    /// `(⌊s⌋, s − ⌊s⌋)`
    pub fn split(&self) -> (usize, f64) {
        let k = self.s.floor();
        (k as usize, self.s - k)
    }
}

/// `k`-th spectral derivative of a periodic real field.
pub fn spectral_derivative(u: &[f64], period: f64, order: usize) -> Vec<f64> {
    if order == 0 {
        return u.to_vec();
    }
    let n = u.len();
    let tang = Tangential::new(n);
    let mut modes = tang.forward(u);
    for (k, m) in modes.iter_mut().enumerate() {
        if 2 * k == n && order % 2 == 1 {
            *m = C64::new(0.0, 0.0);
            continue;
        }
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let ik = C64::new(0.0, 2.0 * std::f64::consts::PI * kk / period);
        *m *= ik.powu(order as u32);
    }
    tang.inverse_real(&modes)
}

pub fn lp_norm(u: &[f64], axis: &Axis1, p: f64) -> f64 {
    axis.weights()
        .iter()
        .zip(u)
        .map(|(w, v)| w * v.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

const GL3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 0.277_777_777_777_777_8),
    (0.5, 0.444_444_444_444_444_4),
    (0.887_298_334_620_741_7, 0.277_777_777_777_777_8),
];

const GL6: [(f64, f64); 6] = [
    (0.033_765_242_898_423_99, 0.085_662_246_189_585_17),
    (0.169_395_306_766_867_74, 0.180_380_786_524_069_3),
    (0.380_690_406_958_401_55, 0.233_956_967_286_345_5),
    (0.619_309_593_041_598_5, 0.233_956_967_286_345_5),
    (0.830_604_693_233_132_3, 0.180_380_786_524_069_3),
    (0.966_234_757_101_576, 0.085_662_246_189_585_17),
];

/// `∫∫ ‖u(a) − u(b)‖^p / |a − b|^{1+θp}` for a field given through
/// `normp(combination)`, which returns `‖Σ c_k u_{i_k}‖^p`.
pub fn seminorm_integral<F>(axis: &Axis1, theta: f64, p: f64, normp: F) -> f64
where
    F: Fn(&[(usize, f64)]) -> f64 + Sync,
{
    let cells = axis.cells();
    let nc = cells.len();
    let q = p - theta * p - 1.0;
    let e = p - theta * p + 1.0;
    let expo = 1.0 + theta * p;
    let torus = matches!(axis.domain, Domain::Torus { .. });
    let rows: Vec<f64> = (0..nc)
        .into_par_iter()
        .map(|i| {
            let ci = cells[i];
            let mut acc = normp(&[(ci.end, 1.0), (ci.start, -1.0)]) * ci.h.powf(-p) * 2.0
                * ci.h.powf(q + 2.0)
                / ((q + 1.0) * (q + 2.0));
            for (j, &cj) in cells.iter().enumerate().skip(i + 1) {
                let pair = if ci.end == cj.start {
                    Some((ci, cj))
                } else if torus && cj.end == ci.start {
                    Some((cj, ci))
                } else {
                    None
                };
                let v = match pair {
                    Some((a, b)) => adjacent_pair(a, b, p, e, &normp),
                    None => {
                        let mut s = 0.0;
                        for &(ga, wa) in &GL3 {
                            let xa = ci.left + ga * ci.h;
                            for &(gb, wb) in &GL3 {
                                let xb = cj.left + gb * cj.h;
                                let d = axis.distance(xa, xb);
                                let np = normp(&[
                                    (ci.start, 1.0 - ga),
                                    (ci.end, ga),
                                    (cj.start, gb - 1.0),
                                    (cj.end, -gb),
                                ]);
                                s += wa * wb * np / d.powf(expo);
                            }
                        }
                        s * ci.h * cj.h
                    }
                };
                let _ = j;
                acc += 2.0 * v;
            }
            acc
        })
        .collect();
    rows.iter().sum()
}

/// Cell `a` ends where cell `b` starts; Duffy-substituted corner integral.
fn adjacent_pair<F>(a: Cell, b: Cell, p: f64, e: f64, normp: &F) -> f64
where
    F: Fn(&[(usize, f64)]) -> f64,
{
    let wstar = a.h / (a.h + b.h);
    let mut s = 0.0;
    for (lo, hi) in [(0.0, wstar), (wstar, 1.0)] {
        for &(g, wg) in &GL6 {
            let w = lo + (hi - lo) * g;
            let r = (a.h / w).min(b.h / (1.0 - w));
            let ca = w / a.h;
            let cb = (1.0 - w) / b.h;
            let np = normp(&[(a.end, ca), (a.start, -ca), (b.end, cb), (b.start, -cb)]);
            s += wg * (hi - lo) * np * r.powf(e) / e;
        }
    }
    let _ = p;
    s
}

fn scalar_normp<'a>(u: &'a [f64], p: f64) -> impl Fn(&[(usize, f64)]) -> f64 + Sync + 'a {
    move |c: &[(usize, f64)]| c.iter().map(|&(i, w)| w * u[i]).sum::<f64>().abs().powf(p)
}

/// Slobodeckij seminorm of order `θ ∈ (0, 1)` of a scalar field.
pub fn slobodeckij_seminorm(u: &[f64], axis: &Axis1, theta: f64, p: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(StefanError::NormSpec(format!(
            "fractional part {theta} must lie in (0, 1)"
        )));
    }
    if u.len() != axis.len() {
        return Err(StefanError::Shape("field does not match the axis".into()));
    }
    if u.iter().all(|v| *v == u[0]) {
        return Ok(0.0);
    }
    Ok(seminorm_integral(axis, theta, p, scalar_normp(u, p)).powf(1.0 / p))
}

/// `W^s_p` norm: derivative `L_p` norms up to `⌊s⌋` plus the seminorm of the top derivative.
pub fn space_norm(u: &[f64], axis: &Axis1, s: f64, p: f64) -> Result<f64> {
    let spec = NormSpec { s, p };
    spec.validate()?;
    if u.len() != axis.len() {
        return Err(StefanError::Shape("field does not match the axis".into()));
    }
    let (k, theta) = spec.split();
    let mut d = u.to_vec();
    let mut total = lp_norm(&d, axis, p);
    for _ in 0..k {
        d = axis.derivative(&d);
        total += lp_norm(&d, axis, p);
    }
    if theta > 1e-12 {
        total += slobodeckij_seminorm(&d, axis, theta, p)?;
    }
    Ok(total)
}

/// `W^s_p` seminorm of order `θ` on `torus × [0, Y]` by the cell-midpoint rule,
/// skipping each cell paired with itself.
pub fn slobodeckij_2d(u: &Array2<f64>, grids: &Grids, theta: f64, p: f64) -> f64 {
    let (nx, ny) = u.dim();
    let hx = grids.spec.l_x / nx as f64;
    let y = &grids.y;
    let mut pts: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(nx * (ny - 1));
    for j in 0..nx {
        let j1 = (j + 1) % nx;
        for k in 0..ny - 1 {
            let v = 0.25 * (u[[j, k]] + u[[j1, k]] + u[[j, k + 1]] + u[[j1, k + 1]]);
            let hy = y[k + 1] - y[k];
            pts.push((grids.x[j] + 0.5 * hx, 0.5 * (y[k] + y[k + 1]), v, hx * hy));
        }
    }
    let period = grids.spec.l_x;
    let expo = 2.0 + theta * p;
    let rows: Vec<f64> = (0..pts.len())
        .into_par_iter()
        .map(|a| {
            let (xa, ya, va, wa) = pts[a];
            let mut s = 0.0;
            for &(xb, yb, vb, wb) in &pts[a + 1..] {
                let dx = {
                    let r = (xa - xb).abs() % period;
                    r.min(period - r)
                };
                let dy = ya - yb;
                let d2 = dx * dx + dy * dy;
                s += wa * wb * (va - vb).abs().powf(p) / d2.powf(0.5 * expo);
            }
            2.0 * s
        })
        .collect();
    rows.iter().sum::<f64>().powf(1.0 / p)
}

/// `L_p(J; W^{sx}_p(torus))` of an interface series.
fn lp_time_space(u: &Array2<f64>, grids: &Grids, sx: f64, p: f64) -> Result<f64> {
    let xa = Axis1::torus(grids);
    let wt = trapezoid_weights(grids.t.as_slice().expect("contiguous"));
    let mut acc = 0.0;
    for (it, w) in wt.iter().enumerate() {
        let row: Vec<f64> = u.row(it).to_vec();
        acc += w * space_norm(&row, &xa, sx, p)?.powf(p);
    }
    Ok(acc.powf(1.0 / p))
}

/// Second-order time derivative of an interface series.
pub fn time_derivative(u: &Array2<f64>, grids: &Grids) -> Array2<f64> {
    let t = grids.t.as_slice().expect("contiguous");
    let (nt, nx) = u.dim();
    let mut out = Array2::zeros((nt, nx));
    for j in 0..nx {
        let col: Vec<f64> = u.column(j).to_vec();
        for (it, v) in fd_derivative(t, &col).into_iter().enumerate() {
            out[[it, j]] = v;
        }
    }
    out
}

/// `W^{st}_p(J; W^{sx}_p(torus))` for `st < 2`; `ut` is `∂_t u` when `st ≥ 1`.
pub fn time_space_norm(
    u: &Array2<f64>,
    ut: Option<&Array2<f64>>,
    grids: &Grids,
    st: f64,
    sx: f64,
    p: f64,
) -> Result<f64> {
    let spec = NormSpec { s: st, p };
    spec.validate()?;
    let (k, theta) = spec.split();
    if k > 1 {
        return Err(StefanError::NormSpec(format!("time order {st} above 2 is not supported")));
    }
    let mut total = lp_time_space(u, grids, sx, p)?;
    let owned;
    let top = if k == 1 {
        let d = match ut {
            Some(d) => d,
            None => {
                owned = time_derivative(u, grids);
                &owned
            }
        };
        total += lp_time_space(d, grids, sx, p)?;
        d
    } else {
        u
    };
    if theta > 1e-12 {
        let xa = Axis1::torus(grids);
        let ta = Axis1::time(grids);
        let nx = grids.n_x();
        let normp = |c: &[(usize, f64)]| {
            let mut v = vec![0.0; nx];
            for &(i, w) in c {
                for (j, x) in v.iter_mut().enumerate() {
                    *x += w * top[[i, j]];
                }
            }
            space_norm(&v, &xa, sx, p).map(|n| n.powf(p)).unwrap_or(f64::NAN)
        };
        total += seminorm_integral(&ta, theta, p, normp).powf(1.0 / p);
    }
    Ok(total)
}

/// Derivatives of a bulk series used by the `E¹` norm.
struct BulkDerivs {
    dt: Array3<f64>,
    dx: Array3<f64>,
    dxx: Array3<f64>,
    dy: Array3<f64>,
    dyy: Array3<f64>,
    dxy: Array3<f64>,
}

fn bulk_derivs(w: &Array3<f64>, grids: &Grids) -> BulkDerivs {
    let (nt, nx, ny) = w.dim();
    let t = grids.t.as_slice().expect("contiguous");
    let period = grids.spec.l_x;
    let mut d = BulkDerivs {
        dt: Array3::zeros((nt, nx, ny)),
        dx: Array3::zeros((nt, nx, ny)),
        dxx: Array3::zeros((nt, nx, ny)),
        dy: Array3::zeros((nt, nx, ny)),
        dyy: Array3::zeros((nt, nx, ny)),
        dxy: Array3::zeros((nt, nx, ny)),
    };
    for j in 0..nx {
        for r in 0..ny {
            let col: Vec<f64> = (0..nt).map(|i| w[[i, j, r]]).collect();
            for (i, v) in fd_derivative(t, &col).into_iter().enumerate() {
                d.dt[[i, j, r]] = v;
            }
        }
    }
    for i in 0..nt {
        for r in 0..ny {
            let row: Vec<f64> = (0..nx).map(|j| w[[i, j, r]]).collect();
            let d1 = spectral_derivative(&row, period, 1);
            let d2 = spectral_derivative(&row, period, 2);
            for j in 0..nx {
                d.dx[[i, j, r]] = d1[j];
                d.dxx[[i, j, r]] = d2[j];
            }
        }
        for j in 0..nx {
            let prof: Vec<f64> = (0..ny).map(|r| w[[i, j, r]]).collect();
            let d1 = grids.dr_profile(&prof);
            let d2 = grids.drr_profile(&prof);
            for r in 0..ny {
                d.dy[[i, j, r]] = d1[r];
                d.dyy[[i, j, r]] = d2[r];
            }
        }
        for r in 0..ny {
            let row: Vec<f64> = (0..nx).map(|j| d.dy[[i, j, r]]).collect();
            let d1 = spectral_derivative(&row, period, 1);
            for j in 0..nx {
                d.dxy[[i, j, r]] = d1[j];
            }
        }
    }
    d
}

/// `∫_J ∫ |w|^p` over both half-spaces, before the root.
fn bulk_lp_pow(plus: &Array3<f64>, minus: &Array3<f64>, grids: &Grids, p: f64) -> f64 {
    let wt = trapezoid_weights(grids.t.as_slice().expect("contiguous"));
    let wy = grids.y_weights();
    let hx = grids.spec.l_x / grids.n_x() as f64;
    let (nt, nx, ny) = plus.dim();
    let mut acc = 0.0;
    for i in 0..nt {
        for j in 0..nx {
            for r in 0..ny {
                let w = wt[i] * hx * wy[r];
                acc += w * (plus[[i, j, r]].abs().powf(p) + minus[[i, j, r]].abs().powf(p));
            }
        }
    }
    acc
}

/// `L_p(J × Ṙ²)` of a bulk series.
pub fn bulk_lp_norm(w: &BulkSeries, grids: &Grids, p: f64) -> f64 {
    bulk_lp_pow(&w.plus, &w.minus, grids, p).powf(1.0 / p)
}

/// `‖w‖_{W¹_p(J;L_p)} + ‖w‖_{L_p(J;W²_p)}` over both half-spaces.
pub fn e1_norm(w: &BulkSeries, grids: &Grids, p: f64) -> f64 {
    let dp = bulk_derivs(&w.plus, grids);
    let dm = bulk_derivs(&w.minus, grids);
    let n = |a: &Array3<f64>, b: &Array3<f64>| bulk_lp_pow(a, b, grids, p).powf(1.0 / p);
    let base = n(&w.plus, &w.minus);
    let time = base + n(&dp.dt, &dm.dt);
    let space = base
        + n(&dp.dx, &dm.dx)
        + n(&dp.dy, &dm.dy)
        + n(&dp.dxx, &dm.dxx)
        + n(&dp.dxy, &dm.dxy)
        + n(&dp.dyy, &dm.dyy);
    time + space
}

/// `W^s_p(Ṙ²)` norm of an initial bulk slice for `s ∈ (1, 2)` or `s = 1`.
pub fn bulk_slice_norm(v: &BulkSlice, grids: &Grids, s: f64, p: f64) -> Result<f64> {
    let spec = NormSpec { s, p };
    spec.validate()?;
    let (k, theta) = spec.split();
    if k > 1 {
        return Err(StefanError::NormSpec(format!("bulk order {s} above 2 is not supported")));
    }
    let wy = grids.y_weights();
    let hx = grids.spec.l_x / grids.n_x() as f64;
    let (nx, ny) = v.plus.dim();
    let lp = |a: &Array2<f64>| {
        let mut acc = 0.0;
        for j in 0..nx {
            for r in 0..ny {
                acc += hx * wy[r] * a[[j, r]].abs().powf(p);
            }
        }
        acc
    };
    let mut total = 0.0;
    for side in [&v.plus, &v.minus] {
        let mut dx = Array2::zeros((nx, ny));
        let mut dy = Array2::zeros((nx, ny));
        for r in 0..ny {
            let row: Vec<f64> = side.column(r).to_vec();
            for (j, d) in spectral_derivative(&row, grids.spec.l_x, 1).into_iter().enumerate() {
                dx[[j, r]] = d;
            }
        }
        for j in 0..nx {
            let prof: Vec<f64> = side.row(j).to_vec();
            for (r, d) in grids.dr_profile(&prof).into_iter().enumerate() {
                dy[[j, r]] = d;
            }
        }
        total += lp(side).powf(1.0 / p);
        if k == 1 {
            total += lp(&dx).powf(1.0 / p) + lp(&dy).powf(1.0 / p);
            if theta > 1e-12 {
                total += slobodeckij_2d(&dx, grids, theta, p) + slobodeckij_2d(&dy, grids, theta, p);
            }
        } else if theta > 1e-12 {
            total += slobodeckij_2d(side, grids, theta, p);
        }
    }
    Ok(total)
}

/// Norm classes of the solution and data spaces.
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormTag {
    E1,
    E2_00,
    E2_10,
    E2_01,
    F2,
    F3,
}

/// A field handed to [`anisotropic_norm`].
#[derive(Debug, Clone, Copy)]
pub enum FieldRef<'a> {
    Bulk(&'a BulkSeries),
    /// interface series with optional `∂_t`
    Interface(&'a Array2<f64>, Option<&'a Array2<f64>>),
}

/// Intersection-space norm of a field, as the sum of its constituent norms.
pub fn anisotropic_norm(field: FieldRef<'_>, tag: NormTag, p: f64, grids: &Grids) -> Result<f64> {
    match (field, tag) {
        (FieldRef::Bulk(w), NormTag::E1) => Ok(e1_norm(w, grids, p)),
        (FieldRef::Interface(u, ut), tag) => {
            let n = |st: f64, sx: f64| time_space_norm(u, ut, grids, st, sx, p);
            match tag {
                NormTag::E2_00 => Ok(n(1.5 - 0.5 / p, 0.0)? + n(1.0, 1.0 - 1.0 / p)? + n(0.0, 2.0 - 1.0 / p)?),
                NormTag::E2_10 => Ok(n(2.0 - 0.5 / p, 0.0)? + n(1.0, 2.0 - 1.0 / p)?),
                NormTag::E2_01 => Ok(n(1.0 - 0.5 / p, 2.0)? + n(0.0, 4.0 - 1.0 / p)?),
                NormTag::F2 => Ok(n(1.0 - 0.5 / p, 0.0)? + n(0.0, 2.0 - 1.0 / p)?),
                NormTag::F3 => Ok(n(0.5 - 0.5 / p, 0.0)? + n(0.0, 1.0 - 1.0 / p)?),
                NormTag::E1 => Err(StefanError::NormSpec("E1 needs a bulk field".into())),
            }
        }
        (FieldRef::Bulk(_), t) => Err(StefanError::NormSpec(format!("{t:?} needs an interface field"))),
    }
}

/// Norms of a solution triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionNorms {
    pub e1_v: f64,
    pub e1_rho_e: f64,
    pub e2_00: f64,
    pub e2_10: f64,
    pub e2_01: f64,
    /// `E2_00 + δ·E2_10 + σ·E2_01`
    pub e2_param: f64,
    /// `E1(v) + E2_param + E1(ρ_E)`
    pub total: f64,
}

/// Norms entering the data side of the uniform estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataNorms {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
    /// `ρ₀` in `W^{2−2/p}`
    pub f5: f64,
    /// `F(0,0)` total
    pub f00: f64,
    /// `‖ρ₀‖_{W^{4−3/p}}`
    pub rho0_high: f64,
    /// `‖h(0) − [[cγ∂_y v₀]]‖_{W^{2−6/p}}`
    pub trace_term: f64,
    /// `F(0,0) + (δ+σ)·rho0_high + σ·trace_term`
    pub rhs: f64,
}

/// Solution and data norms side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub solution: SolutionNorms,
    pub data: DataNorms,
}

/// `‖(v, ρ, ρ_E)‖_{𝔼_T(δ, σ)}` with `(δ, σ)` taken from `params`.
pub fn solution_norms(sol: &SolutionTriple, params: &PhysicalParams, grids: &Grids) -> Result<SolutionNorms> {
    let p = params.p;
    let rho = FieldRef::Interface(&sol.rho, Some(&sol.rho_t));
    let e1_v = anisotropic_norm(FieldRef::Bulk(&sol.v), NormTag::E1, p, grids)?;
    let e1_rho_e = anisotropic_norm(FieldRef::Bulk(&sol.rho_e), NormTag::E1, p, grids)?;
    let e2_00 = anisotropic_norm(rho, NormTag::E2_00, p, grids)?;
    let e2_10 = if params.delta > 0.0 {
        anisotropic_norm(rho, NormTag::E2_10, p, grids)?
    } else {
        0.0
    };
    let e2_01 = if params.sigma > 0.0 {
        anisotropic_norm(rho, NormTag::E2_01, p, grids)?
    } else {
        0.0
    };
    let e2_param = e2_00 + params.delta * e2_10 + params.sigma * e2_01;
    Ok(SolutionNorms {
        e1_v,
        e1_rho_e,
        e2_00,
        e2_10,
        e2_01,
        e2_param,
        total: e1_v + e2_param + e1_rho_e,
    })
}

/// Data norms and the right-hand side of the uniform estimate.
pub fn data_norm_report(data: &DataTuple, params: &PhysicalParams, grids: &Grids) -> Result<DataNorms> {
    let p = params.p;
    let xa = Axis1::torus(grids);
    let f1 = bulk_lp_norm(&data.f, grids, p);
    let f2 = anisotropic_norm(FieldRef::Interface(&data.g, None), NormTag::F2, p, grids)?;
    let f3 = anisotropic_norm(FieldRef::Interface(&data.h, None), NormTag::F3, p, grids)?;
    let f4 = bulk_slice_norm(&data.v0.values, grids, 2.0 - 2.0 / p, p)?;
    let rho0 = data.rho0.as_slice().expect("contiguous");
    let f5 = space_norm(rho0, &xa, 2.0 - 2.0 / p, p)?;
    let rho0_high = space_norm(rho0, &xa, 4.0 - 3.0 / p, p)?;
    let jump = data.v0.jump(params.c_plus, params.c_minus);
    let tr: Vec<f64> = (0..grids.n_x()).map(|j| data.h[[0, j]] - jump[j]).collect();
    let trace_term = space_norm(&tr, &xa, 2.0 - 6.0 / p, p)?;
    let f00 = f1 + f2 + f3 + f4 + f5;
    Ok(DataNorms {
        f1,
        f2,
        f3,
        f4,
        f5,
        f00,
        rho0_high,
        trace_term,
        rhs: f00 + (params.delta + params.sigma) * rho0_high + params.sigma * trace_term,
    })
}

pub fn norm_report(
    sol: &SolutionTriple,
    data: &DataTuple,
    params: &PhysicalParams,
    grids: &Grids,
) -> Result<NormReport> {
    Ok(NormReport {
        solution: solution_norms(sol, params, grids)?,
        data: data_norm_report(data, params, grids)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn linear_field_seminorm_matches_closed_form() {
        // u(x) = x on [0, 1]: ∫∫ |x−y|^{p−1−θp} = 2/((q+1)(q+2))
        let (theta, p): (f64, f64) = (0.5, 2.0);
        let axis = Axis1::interval(0.0, 1.0, 9);
        let u = axis.nodes.clone();
        let q = p - theta * p - 1.0;
        let exact = (2.0 / ((q + 1.0) * (q + 2.0))).powf(1.0 / p);
        let got = slobodeckij_seminorm(&u, &axis, theta, p).unwrap();
        assert_relative_eq!(got, exact, max_relative = 1e-3);
    }

    #[test]
    fn spectral_derivative_of_sine() {
        let axis = Axis1::periodic(2.0 * std::f64::consts::PI, 16);
        let u: Vec<f64> = axis.nodes.iter().map(|x| (2.0 * x).sin()).collect();
        let d = spectral_derivative(&u, 2.0 * std::f64::consts::PI, 1);
        for (x, v) in axis.nodes.iter().zip(&d) {
            assert_relative_eq!(*v, 2.0 * (2.0 * x).cos(), epsilon = 1e-12);
        }
    }
}

//! Spectral solver: explicit Fourier–Laplace formulas for zero-trace data and
//! the reduction of general data to that case.
//!
//! Interface data are piecewise linear in time, `d(t) = d₀ + Σ_j s_j (t − t_j)₊`,
//! so every solution component is a sum of shifted ramp (and step) responses.
//! A ramp response is the inverse transform of `H(μ)/μ²` for the transfer
//! function `H`, computed once per time lag on the contour; the solution at
//! `t_i` is then a discrete convolution with the slope increments.

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StefanError};
use crate::model::{
    bessel_half, compatibility_residual, validate_params, BulkSeries, DataTuple, Grids,
    NormalTraces, PhysicalParams, SolutionTriple,
};
use crate::mol::integrate_half_line;
use crate::symbols::ModeSymbols;
use crate::transform::{contour_rule, ramp_decomposition, ContourSpec, RampDecomposition, Tangential};

type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Tolerances of the solver stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// allowed compatibility residual at t = 0
    pub tol_compat: f64,
    /// allowed interface residual of returned solutions
    pub tol_residual: f64,
    /// relative size of f at `Y_max` tolerated before truncation is reported
    pub y_truncation_tol: f64,
    /// Crank–Nicolson substeps per time interval in the auxiliary problems
    #[serde(default = "default_substeps")]
    pub substeps: usize,
}

fn default_substeps() -> usize {
    4
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_compat: 1e-8,
            tol_residual: 1e-6,
            y_truncation_tol: 1e-12,
            substeps: default_substeps(),
        }
    }
}

/// `k(y, s) = (e^{−β|y−s|} − e^{−β(y+s)}) / (2ω√c)` with `β = ω/√c`.
pub fn kernel(y: f64, s: f64, omega: C64, c: f64) -> C64 {
    let sc = c.sqrt();
    let beta = omega / sc;
    ((-beta * (y - s).abs()).exp() - (-beta * (y + s)).exp()) / (omega * (2.0 * sc))
}

/// One tangential mode of every solution component, indexed `[t]` or `[t][r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSolution {
    pub rho: Vec<C64>,
    pub rho_t: Vec<C64>,
    pub v_plus: Vec<Vec<C64>>,
    pub v_minus: Vec<Vec<C64>>,
    pub rhoe_plus: Vec<Vec<C64>>,
    pub rhoe_minus: Vec<Vec<C64>>,
    pub v_dy_plus: Vec<C64>,
    pub v_dy_minus: Vec<C64>,
    pub rhoe_dy_plus: Vec<C64>,
    pub rhoe_dy_minus: Vec<C64>,
}

impl ModeSolution {
    pub fn zeros(nt: usize, ny: usize) -> Self {
        let s = vec![ZERO; nt];
        let b = vec![vec![ZERO; ny]; nt];
        ModeSolution {
            rho: s.clone(),
            rho_t: s.clone(),
            v_plus: b.clone(),
            v_minus: b.clone(),
            rhoe_plus: b.clone(),
            rhoe_minus: b,
            v_dy_plus: s.clone(),
            v_dy_minus: s.clone(),
            rhoe_dy_plus: s.clone(),
            rhoe_dy_minus: s,
        }
    }

    pub fn add_assign(&mut self, o: &ModeSolution) {
        let add_s = |a: &mut Vec<C64>, b: &Vec<C64>| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        let add_b = |a: &mut Vec<Vec<C64>>, b: &Vec<Vec<C64>>| {
            a.iter_mut()
                .zip(b)
                .for_each(|(x, y)| x.iter_mut().zip(y).for_each(|(u, v)| *u += v))
        };
        add_s(&mut self.rho, &o.rho);
        add_s(&mut self.rho_t, &o.rho_t);
        add_b(&mut self.v_plus, &o.v_plus);
        add_b(&mut self.v_minus, &o.v_minus);
        add_b(&mut self.rhoe_plus, &o.rhoe_plus);
        add_b(&mut self.rhoe_minus, &o.rhoe_minus);
        add_s(&mut self.v_dy_plus, &o.v_dy_plus);
        add_s(&mut self.v_dy_minus, &o.v_dy_minus);
        add_s(&mut self.rhoe_dy_plus, &o.rhoe_dy_plus);
        add_s(&mut self.rhoe_dy_minus, &o.rhoe_dy_minus);
    }
}

/// Data of one mode, indexed `[t]` or `[t][r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeData {
    pub k: usize,
    pub xi: f64,
    pub g: Vec<C64>,
    pub h: Vec<C64>,
    pub f_plus: Vec<Vec<C64>>,
    pub f_minus: Vec<Vec<C64>>,
    pub v0_plus: Vec<C64>,
    pub v0_minus: Vec<C64>,
    pub v0_dy_plus: C64,
    pub v0_dy_minus: C64,
    pub rho0: C64,
}

impl ModeData {
    pub fn zeros(k: usize, xi: f64, nt: usize, ny: usize) -> Self {
        ModeData {
            k,
            xi,
            g: vec![ZERO; nt],
            h: vec![ZERO; nt],
            f_plus: vec![vec![ZERO; ny]; nt],
            f_minus: vec![vec![ZERO; ny]; nt],
            v0_plus: vec![ZERO; ny],
            v0_minus: vec![ZERO; ny],
            v0_dy_plus: ZERO,
            v0_dy_minus: ZERO,
            rho0: ZERO,
        }
    }

    fn f_is_zero(&self) -> bool {
        self.f_plus.iter().chain(&self.f_minus).all(|r| r.iter().all(|v| *v == ZERO))
    }

    fn is_zero(&self) -> bool {
        self.f_is_zero()
            && self.g.iter().chain(&self.h).chain(&self.v0_plus).chain(&self.v0_minus).all(|v| *v == ZERO)
            && self.v0_dy_plus == ZERO
            && self.v0_dy_minus == ZERO
            && self.rho0 == ZERO
    }
}

/// Mode coefficients `[k][t]` of an interface series `[t, x]`.
pub fn series_modes(a: &Array2<f64>, tang: &Tangential) -> Vec<Vec<C64>> {
    let (nt, nx) = a.dim();
    let mut out = vec![vec![ZERO; nt]; nx];
    for it in 0..nt {
        let row: Vec<f64> = a.row(it).to_vec();
        for (k, v) in tang.forward(&row).into_iter().enumerate() {
            out[k][it] = v;
        }
    }
    out
}

/// Mode coefficients `[k][t][r]` of a bulk series `[t, x, r]`.
pub fn bulk_modes(a: &Array3<f64>, tang: &Tangential) -> Vec<Vec<Vec<C64>>> {
    let (nt, nx, ny) = a.dim();
    let mut out = vec![vec![vec![ZERO; ny]; nt]; nx];
    let mut col = vec![0.0; nx];
    for it in 0..nt {
        for r in 0..ny {
            for (j, c) in col.iter_mut().enumerate() {
                *c = a[[it, j, r]];
            }
            for (k, v) in tang.forward(&col).into_iter().enumerate() {
                out[k][it][r] = v;
            }
        }
    }
    out
}

/// Mode coefficients `[k][r]` of a bulk slice `[x, r]`.
pub fn slice_modes(a: &Array2<f64>, tang: &Tangential) -> Vec<Vec<C64>> {
    let (nx, ny) = a.dim();
    let mut out = vec![vec![ZERO; ny]; nx];
    for r in 0..ny {
        let col: Vec<f64> = a.column(r).to_vec();
        for (k, v) in tang.forward(&col).into_iter().enumerate() {
            out[k][r] = v;
        }
    }
    out
}

/// Modes `0..=N/2` of a data tuple.
pub fn data_modes(data: &DataTuple, grids: &Grids) -> Vec<ModeData> {
    let tang = grids.tangential();
    let g = series_modes(&data.g, &tang);
    let h = series_modes(&data.h, &tang);
    let fp = bulk_modes(&data.f.plus, &tang);
    let fm = bulk_modes(&data.f.minus, &tang);
    let vp = slice_modes(&data.v0.values.plus, &tang);
    let vm = slice_modes(&data.v0.values.minus, &tang);
    let dyp = tang.forward(data.v0.dy_plus.as_slice().expect("contiguous"));
    let dym = tang.forward(data.v0.dy_minus.as_slice().expect("contiguous"));
    let r0 = tang.forward(data.rho0.as_slice().expect("contiguous"));
    (0..=grids.n_x() / 2)
        .map(|k| ModeData {
            k,
            xi: grids.xi[k],
            g: g[k].clone(),
            h: h[k].clone(),
            f_plus: fp[k].clone(),
            f_minus: fm[k].clone(),
            v0_plus: vp[k].clone(),
            v0_minus: vm[k].clone(),
            v0_dy_plus: dyp[k],
            v0_dy_minus: dym[k],
            rho0: r0[k],
        })
        .collect()
}

/// Fills the modes above `N/2` by conjugation.
fn full_spectrum(half: &[C64], n: usize) -> Vec<C64> {
    let mut out = vec![ZERO; n];
    out[..half.len()].copy_from_slice(half);
    for k in 1..n / 2 {
        out[n - k] = half[k].conj();
    }
    out
}

pub fn series_from_modes(modes: &[&Vec<C64>], grids: &Grids, tang: &Tangential) -> Array2<f64> {
    let (nt, nx) = (grids.n_t(), grids.n_x());
    let mut out = Array2::zeros((nt, nx));
    for it in 0..nt {
        let half: Vec<C64> = modes.iter().map(|m| m[it]).collect();
        let vals = tang.inverse_real(&full_spectrum(&half, nx));
        for (j, v) in vals.into_iter().enumerate() {
            out[[it, j]] = v;
        }
    }
    out
}

pub fn bulk_from_modes(modes: &[&Vec<Vec<C64>>], grids: &Grids, tang: &Tangential) -> Array3<f64> {
    let (nt, nx, ny) = (grids.n_t(), grids.n_x(), grids.n_y());
    let mut out = Array3::zeros((nt, nx, ny));
    for it in 0..nt {
        for r in 0..ny {
            let half: Vec<C64> = modes.iter().map(|m| m[it][r]).collect();
            let vals = tang.inverse_real(&full_spectrum(&half, nx));
            for (j, v) in vals.into_iter().enumerate() {
                out[[it, j, r]] = v;
            }
        }
    }
    out
}

/// Synthesizes gridded fields from modes `0..=N/2`.
pub fn assemble_solution(modes: &[ModeSolution], grids: &Grids) -> SolutionTriple {
    let tang = grids.tangential();
    let s = |f: fn(&ModeSolution) -> &Vec<C64>| {
        let refs: Vec<&Vec<C64>> = modes.iter().map(f).collect();
        series_from_modes(&refs, grids, &tang)
    };
    let b = |f: fn(&ModeSolution) -> &Vec<Vec<C64>>| {
        let refs: Vec<&Vec<Vec<C64>>> = modes.iter().map(f).collect();
        bulk_from_modes(&refs, grids, &tang)
    };
    SolutionTriple {
        v: BulkSeries {
            plus: b(|m| &m.v_plus),
            minus: b(|m| &m.v_minus),
        },
        rho: s(|m| &m.rho),
        rho_t: s(|m| &m.rho_t),
        rho_e: BulkSeries {
            plus: b(|m| &m.rhoe_plus),
            minus: b(|m| &m.rhoe_minus),
        },
        v_dy: NormalTraces {
            plus: s(|m| &m.v_dy_plus),
            minus: s(|m| &m.v_dy_minus),
        },
        rho_e_dy: NormalTraces {
            plus: s(|m| &m.rhoe_dy_plus),
            minus: s(|m| &m.rhoe_dy_minus),
        },
    }
}

/// Solution quantities per unit transform of an interface datum.
#[derive(Clone, Copy)]
struct Response {
    eta: C64,
    b: C64,
}

/// Ramp responses (inverse transforms of `H/μ²`) for lags `τ_k = kΔt`.
struct RampKernels {
    rho: Vec<f64>,
    rho_t: Vec<f64>,
    v_plus: Vec<Vec<f64>>,
    v_minus: Vec<Vec<f64>>,
    rhoe_plus: Vec<Vec<f64>>,
    rhoe_minus: Vec<Vec<f64>>,
    v_dy_plus: Vec<f64>,
    v_dy_minus: Vec<f64>,
    rhoe_dy_plus: Vec<f64>,
    rhoe_dy_minus: Vec<f64>,
}

impl RampKernels {
    fn zeros(nt: usize, ny: usize) -> Self {
        RampKernels {
            rho: vec![0.0; nt],
            rho_t: vec![0.0; nt],
            v_plus: vec![vec![0.0; ny]; nt],
            v_minus: vec![vec![0.0; ny]; nt],
            rhoe_plus: vec![vec![0.0; ny]; nt],
            rhoe_minus: vec![vec![0.0; ny]; nt],
            v_dy_plus: vec![0.0; nt],
            v_dy_minus: vec![0.0; nt],
            rhoe_dy_plus: vec![0.0; nt],
            rhoe_dy_minus: vec![0.0; nt],
        }
    }
}

/// `exp(-β y)` on the grid.
fn decay_profile(beta: C64, y: &[f64]) -> Vec<C64> {
    y.iter().map(|&r| (-beta * r).exp()).collect()
}

/// Ramp kernels for a unit `g` and a unit `h`.
fn interface_ramp_kernels(
    xi2: f64,
    params: &PhysicalParams,
    grids: &Grids,
    contour: &ContourSpec,
) -> (RampKernels, RampKernels) {
    let ramp = |mu: C64| 1.0 / (mu * mu);
    interface_kernels(xi2, params, grids, contour, ramp, ramp)
}

/// Responses to `h = √t` and `h = t^{3/2}`.
fn interface_root_kernels(
    xi2: f64,
    params: &PhysicalParams,
    grids: &Grids,
    contour: &ContourSpec,
) -> (RampKernels, RampKernels) {
    let c = 0.5 * std::f64::consts::PI.sqrt();
    let (_, k1) = interface_kernels(xi2, params, grids, contour, |_| ZERO, |mu| c / (mu * mu.sqrt()));
    let (_, k3) = interface_kernels(xi2, params, grids, contour, |_| ZERO, |mu| 1.5 * c / (mu * mu * mu.sqrt()));
    (k1, k3)
}

/// Kernels for data `g`, `h` whose time profiles have transforms `basis_g(μ)`, `basis_h(μ)`.
fn interface_kernels(
    xi2: f64,
    params: &PhysicalParams,
    grids: &Grids,
    contour: &ContourSpec,
    basis_g: impl Fn(C64) -> C64,
    basis_h: impl Fn(C64) -> C64,
) -> (RampKernels, RampKernels) {
    let nt = grids.n_t();
    let y = grids.y.as_slice().expect("contiguous");
    let ny = y.len();
    let dt = grids.dt();
    let mut kg = RampKernels::zeros(nt, ny);
    let mut kh = RampKernels::zeros(nt, ny);
    let (sp, sm) = (params.c_plus.sqrt(), params.c_minus.sqrt());
    let z = C64::new(xi2, 0.0);
    for k in 1..nt {
        let rule = contour_rule(contour, k as f64 * dt, params.kappa, true);
        for (&mu, &w) in rule.z.iter().zip(&rule.w) {
            let s = ModeSymbols::at(mu, z, params);
            let lift = z * params.sigma + mu * params.delta;
            let inv_m = 1.0 / s.m;
            let rg = Response {
                eta: s.sum * inv_m,
                b: lift * s.sum * inv_m - 1.0,
            };
            let rh = Response {
                eta: inv_m,
                b: lift * inv_m,
            };
            let bp = s.omega_plus / sp;
            let bm = s.omega_minus / sm;
            let ep = decay_profile(bp, y);
            let em = decay_profile(bm, y);
            for (ker, r, wq) in [(&mut kg, rg, w * basis_g(mu)), (&mut kh, rh, w * basis_h(mu))] {
                let we = wq * r.eta;
                let wb = wq * r.b;
                ker.rho[k] += we.re;
                ker.rho_t[k] += (we * mu).re;
                for i in 0..ny {
                    ker.v_plus[k][i] -= (wb * ep[i]).re;
                    ker.v_minus[k][i] -= (wb * em[i]).re;
                    ker.rhoe_plus[k][i] += (we * ep[i]).re;
                    ker.rhoe_minus[k][i] += (we * em[i]).re;
                }
                ker.v_dy_plus[k] += (wb * s.omega_plus * sp).re / params.c_plus;
                ker.v_dy_minus[k] -= (wb * s.omega_minus * sm).re / params.c_minus;
                ker.rhoe_dy_plus[k] -= (we * bp).re;
                ker.rhoe_dy_minus[k] += (we * bm).re;
            }
        }
    }
    (kg, kh)
}

/// Adds `Σ_j s_j K(t_i − t_j)` to `out`.
fn convolve_into(out: &mut ModeSolution, slopes: &[C64], ker: &RampKernels) {
    let nt = out.rho.len();
    for (j, &sj) in slopes.iter().enumerate() {
        if sj == ZERO {
            continue;
        }
        for i in j + 1..nt {
            let k = i - j;
            out.rho[i] += sj * ker.rho[k];
            out.rho_t[i] += sj * ker.rho_t[k];
            out.v_dy_plus[i] += sj * ker.v_dy_plus[k];
            out.v_dy_minus[i] += sj * ker.v_dy_minus[k];
            out.rhoe_dy_plus[i] += sj * ker.rhoe_dy_plus[k];
            out.rhoe_dy_minus[i] += sj * ker.rhoe_dy_minus[k];
            for r in 0..ker.v_plus[k].len() {
                out.v_plus[i][r] += sj * ker.v_plus[k][r];
                out.v_minus[i][r] += sj * ker.v_minus[k][r];
                out.rhoe_plus[i][r] += sj * ker.rhoe_plus[k][r];
                out.rhoe_minus[i][r] += sj * ker.rhoe_minus[k][r];
            }
        }
    }
}

/// `(1 − e^{−x})/x` and `(1 − e^{−x}(1 + x))/x²`.
fn phi12(x: C64) -> (C64, C64) {
    if x.norm() < 0.25 {
        let mut p1 = ZERO;
        let mut p2 = ZERO;
        let mut pow = C64::new(1.0, 0.0);
        let mut fact = 1.0;
        for n in 0..14 {
            // fact = n!
            p1 += pow / (fact * (n + 1) as f64);
            p2 += pow * ((n + 1) as f64 / (fact * ((n + 1) * (n + 2)) as f64));
            pow *= -x;
            fact *= (n + 1) as f64;
        }
        (p1, p2)
    } else {
        let e = (-x).exp();
        ((1.0 - e) / x, (1.0 - e * (1.0 + x)) / (x * x))
    }
}

/// Exact integrals of `e^{−β|y−s|}` against a piecewise-linear profile.
struct ProductIntegrator {
    e: Vec<C64>,
    near: Vec<C64>,
    far: Vec<C64>,
    decay: Vec<C64>,
}

impl ProductIntegrator {
    fn new(beta: C64, y: &[f64]) -> Self {
        let cells = y.len() - 1;
        let mut e = Vec::with_capacity(cells);
        let mut near = Vec::with_capacity(cells);
        let mut far = Vec::with_capacity(cells);
        for i in 0..cells {
            let h = y[i + 1] - y[i];
            let x = beta * h;
            let (p1, p2) = phi12(x);
            e.push((-x).exp());
            near.push((p1 - p2) * h);
            far.push(p2 * h);
        }
        ProductIntegrator {
            e,
            near,
            far,
            decay: decay_profile(beta, y),
        }
    }

    /// `(∫₀^Y e^{−βs}φ ds, ∫₀^Y e^{−β|y−s|}φ ds on the grid)`.
    fn apply(&self, phi: &[C64]) -> (C64, Vec<C64>) {
        let n = phi.len();
        let mut left = vec![ZERO; n];
        let mut right = vec![ZERO; n];
        for i in 0..n - 1 {
            left[i + 1] = self.e[i] * left[i] + self.far[i] * phi[i] + self.near[i] * phi[i + 1];
        }
        for i in (0..n - 1).rev() {
            right[i] = self.e[i] * right[i + 1] + self.near[i] * phi[i] + self.far[i] * phi[i + 1];
        }
        let total = right[0];
        let conv = left.iter().zip(&right).map(|(a, b)| a + b).collect();
        (total, conv)
    }
}

/// [`ramp_decomposition`] applied node by node to a series of profiles.
fn profile_ramps(series: &[Vec<C64>], dt: f64) -> RampDecomposition<Vec<C64>> {
    let ny = series[0].len();
    let per_node: Vec<RampDecomposition<C64>> = (0..ny)
        .map(|r| {
            let col: Vec<C64> = series.iter().map(|s| s[r]).collect();
            ramp_decomposition(&col, dt)
        })
        .collect();
    RampDecomposition {
        d0: per_node.iter().map(|d| d.d0).collect(),
        slopes: (0..series.len() - 1)
            .map(|j| per_node.iter().map(|d| d.slopes[j]).collect())
            .collect(),
    }
}

/// Adds the response to the bulk source `f` of one mode.
fn add_source_response(
    out: &mut ModeSolution,
    md: &ModeData,
    params: &PhysicalParams,
    grids: &Grids,
    contour: &ContourSpec,
) {
    let nt = grids.n_t();
    let dt = grids.dt();
    let y = grids.y.as_slice().expect("contiguous");
    let ny = y.len();
    let (sp, sm) = (params.c_plus.sqrt(), params.c_minus.sqrt());
    let z = C64::new(md.xi * md.xi, 0.0);
    let dp = profile_ramps(&md.f_plus, dt);
    let dm = profile_ramps(&md.f_minus, dt);
    let nonzero = |v: &Vec<C64>| v.iter().any(|x| *x != ZERO);
    // (basis profile plus, minus, start index j, step flag)
    let mut bases: Vec<(&Vec<C64>, &Vec<C64>, usize, bool)> = Vec::new();
    if nonzero(&dp.d0) || nonzero(&dm.d0) {
        bases.push((&dp.d0, &dm.d0, 0, true));
    }
    for j in 0..dp.slopes.len() {
        if nonzero(&dp.slopes[j]) || nonzero(&dm.slopes[j]) {
            bases.push((&dp.slopes[j], &dm.slopes[j], j, false));
        }
    }
    if bases.is_empty() {
        return;
    }
    for k in 1..nt {
        let rule = contour_rule(contour, k as f64 * dt, params.kappa, false);
        for (&mu, &w) in rule.z.iter().zip(&rule.w) {
            let s = ModeSymbols::at(mu, z, params);
            let lift = z * params.sigma + mu * params.delta;
            let bp = s.omega_plus / sp;
            let bm = s.omega_minus / sm;
            let pip = ProductIntegrator::new(bp, y);
            let pim = ProductIntegrator::new(bm, y);
            let kp = 1.0 / (s.omega_plus * (2.0 * sp));
            let km = 1.0 / (s.omega_minus * (2.0 * sm));
            for &(fp, fm, j, step) in &bases {
                let (i, wq) = if step {
                    (k, w / mu)
                } else {
                    if j + k >= nt {
                        continue;
                    }
                    (j + k, w / (mu * mu))
                };
                let (fpl, up) = pip.apply(fp);
                let (fmi, um) = pim.apply(fm);
                let eta = -(fpl + fmi) / s.m;
                let b = lift * eta;
                let we = wq * eta;
                let wb = wq * b;
                out.rho[i] += we;
                out.rho_t[i] += we * mu;
                for r in 0..ny {
                    let kup = (up[r] - pip.decay[r] * fpl) * kp;
                    let kum = (um[r] - pim.decay[r] * fmi) * km;
                    out.v_plus[i][r] += wq * kup - wb * pip.decay[r];
                    out.v_minus[i][r] += wq * kum - wb * pim.decay[r];
                    out.rhoe_plus[i][r] += we * pip.decay[r];
                    out.rhoe_minus[i][r] += we * pim.decay[r];
                }
                out.v_dy_plus[i] += (wq * fpl + wb * s.omega_plus * sp) / params.c_plus;
                out.v_dy_minus[i] += (-wq * fmi - wb * s.omega_minus * sm) / params.c_minus;
                out.rhoe_dy_plus[i] -= we * bp;
                out.rhoe_dy_minus[i] += we * bm;
            }
        }
    }
}

/// Zero-trace solve of one mode; `g(0) = h(0) = 0` is assumed.
pub fn solve_zero_trace_mode(
    md: &ModeData,
    params: &PhysicalParams,
    grids: &Grids,
    contour: &ContourSpec,
) -> ModeSolution {
    let (nt, ny) = (grids.n_t(), grids.n_y());
    let mut out = ModeSolution::zeros(nt, ny);
    let g_zero = md.g.iter().all(|v| *v == ZERO);
    let h_zero = md.h.iter().all(|v| *v == ZERO);
    if !(g_zero && h_zero) {
        let (kg, kh) = interface_ramp_kernels(md.xi * md.xi, params, grids, contour);
        let dt = grids.dt();
        if !g_zero {
            convolve_into(&mut out, &ramp_decomposition(&md.g, dt).slopes, &kg);
        }
        if !h_zero {
            convolve_into(&mut out, &ramp_decomposition(&md.h, dt).slopes, &kh);
        }
    }
    if !md.f_is_zero() {
        add_source_response(&mut out, md, params, grids, contour);
    }
    out
}

fn check_zero_trace(data: &DataTuple) -> Result<()> {
    let scale = data
        .g
        .iter()
        .chain(data.h.iter())
        .chain(data.f.plus.iter())
        .chain(data.f.minus.iter())
        .fold(1.0_f64, |m, v| m.max(v.abs()));
    let tol = 1e-10 * scale;
    let worst = |it: &mut dyn Iterator<Item = &f64>| it.fold(0.0_f64, |m, v| m.max(v.abs()));
    let checks = [
        ("g(0)", worst(&mut data.g.row(0).iter())),
        ("h(0)", worst(&mut data.h.row(0).iter())),
        ("v0", worst(&mut data.v0.values.plus.iter().chain(data.v0.values.minus.iter()))),
        ("rho0", worst(&mut data.rho0.iter())),
    ];
    for (name, v) in checks {
        if v > tol {
            return Err(StefanError::ZeroTrace(format!("|{name}| = {v:.3e} exceeds {tol:.1e}")));
        }
    }
    Ok(())
}

/// Relative size of `f` at the far end of the y grid.
pub fn source_tail(data: &DataTuple) -> f64 {
    let (nt, nx, ny) = data.f.plus.dim();
    let scale = data.f.plus.iter().chain(data.f.minus.iter()).fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let mut tail: f64 = 0.0;
    for it in 0..nt {
        for j in 0..nx {
            tail = tail
                .max(data.f.plus[[it, j, ny - 1]].abs())
                .max(data.f.minus[[it, j, ny - 1]].abs());
        }
    }
    tail / scale
}

/// Solves the system for data with vanishing initial values and traces.
pub fn solve_zero_trace(
    data: &DataTuple,
    params: &PhysicalParams,
    grids: &Grids,
    contour: &ContourSpec,
) -> Result<SolutionTriple> {
    let params = validate_params(*params)?;
    contour.validate()?;
    data.check_shape(grids)?;
    check_zero_trace(data)?;
    let modes = data_modes(data, grids);
    let sols: Vec<ModeSolution> = modes
        .par_iter()
        .map(|md| solve_zero_trace_mode(md, &params, grids, contour))
        .collect();
    Ok(assemble_solution(&sols, grids))
}

/// `Σ c_i e^{-α_i t}` as `(c_i, α_i)` pairs.
#[derive(Debug, Clone, Default)]
struct ExpSum(Vec<(C64, f64)>);

impl ExpSum {
    fn transform(&self, mu: C64) -> C64 {
        self.0.iter().map(|&(c, a)| c / (mu + a)).sum()
    }

    fn map(&self, f: impl Fn(C64) -> C64) -> ExpSum {
        ExpSum(self.0.iter().map(|&(c, a)| (f(c), a)).collect())
    }
}

/// Closed-form parts of the reduced data of one mode.
///
/// `g̃` is fully explicit. Of `h̃` everything but the `v₁` flux is: `ρ_{1,E}` equals
/// `ρ₀e^{ct−By}` plus the Dirichlet response to `ρ₁ − ρ₀e^{ct}`, so its outward flux
/// transforms to `−(ω/√c)ρ̂₁ + ρ₀/(√c ω + cB)`. `g_step` and `step` are the initial values
/// of the gridded rests of `g` and `h`.
#[derive(Debug, Clone)]
struct ClosedForm {
    rho1: ExpSum,
    rho0: C64,
    /// coefficient of `−e^{-(1+|ξ|²)t}` in the `g` datum
    decay: C64,
    g_step: C64,
    step: C64,
    xi: f64,
}

impl ClosedForm {
    fn map(&self, f: impl Fn(C64) -> C64) -> ClosedForm {
        ClosedForm {
            rho1: self.rho1.map(&f),
            rho0: f(self.rho0),
            decay: f(self.decay),
            g_step: f(self.g_step),
            step: f(self.step),
            xi: self.xi,
        }
    }

    fn is_zero(&self) -> bool {
        self.rho1.0.iter().all(|&(c, _)| c == ZERO) && self.rho0 == ZERO && self.decay == ZERO && self.g_step == ZERO && self.step == ZERO
    }

    fn g(&self, mu: C64, params: &PhysicalParams) -> C64 {
        let xi2 = self.xi * self.xi;
        let r = self.rho1.transform(mu);
        -r * (params.sigma * xi2) - (mu * r - self.rho0) * params.delta - self.decay / (mu + 1.0 + xi2) + self.g_step / mu
    }

    /// Transform of the outward flux `∂_r ρ_{1,E}` on a side with diffusivity `c`.
    fn rho_e_flux(&self, mu: C64, c: f64) -> C64 {
        let om = (mu + c * self.xi * self.xi).sqrt();
        -om / c.sqrt() * self.rho1.transform(mu) + self.rho0 / (om * c.sqrt() + c * bessel_half(self.xi))
    }

    fn h(&self, mu: C64, params: &PhysicalParams) -> C64 {
        let r = self.rho1.transform(mu);
        let ext = self.rho_e_flux(mu, params.c_plus) * (params.c_plus * params.a_plus())
            + self.rho_e_flux(mu, params.c_minus) * (params.c_minus * params.a_minus());
        self.rho0 - mu * r + ext + self.step / mu
    }

    /// `∂_r ρ_{1,E}` on both sides at the time nodes.
    fn rho_e_flux_traces(&self, params: &PhysicalParams, grids: &Grids, contour: &ContourSpec) -> (Vec<C64>, Vec<C64>) {
        let b = bessel_half(self.xi);
        let mut plus = vec![-self.rho0 * b; grids.n_t()];
        let mut minus = plus.clone();
        for it in 1..grids.n_t() {
            let rule = contour_rule(contour, grids.t[it], params.kappa, false);
            plus[it] = rule.eval(|mu| self.rho_e_flux(mu, params.c_plus));
            minus[it] = rule.eval(|mu| self.rho_e_flux(mu, params.c_minus));
        }
        (plus, minus)
    }
}

/// `ρ₁` of one mode as an exponential sum; see [`extend_traces_mode`].
fn extension_terms(rho0: C64, eta1: C64, xi: f64) -> ExpSum {
    let a = 1.0 + xi * xi;
    let b = a.sqrt();
    let r = eta1 / (a * a);
    ExpSum(vec![
        (rho0 * 4.0, a + b),
        (-rho0 * 2.0, 2.0 * a + b),
        (-rho0 * 2.0, a + 2.0 * b),
        (rho0, 2.0 * (a + b)),
        (r, a + a * a),
        (-r, a + 2.0 * a * a),
    ])
}

/// `ρ₁` and `∂_tρ₁` of one mode at time `t`.
pub fn extend_traces_mode(rho0: C64, eta1: C64, xi: f64, t: f64) -> (C64, C64) {
    let a = 1.0 + xi * xi;
    let b = a.sqrt();
    let (eb, e2b) = ((-t * b).exp(), (-2.0 * t * b).exp());
    let (ea, e2a) = ((-t * a).exp(), (-2.0 * t * a).exp());
    let p = 2.0 * eb - e2b;
    let dp = -2.0 * b * eb + 2.0 * b * e2b;
    let q = 2.0 * ea - e2a;
    let dq = -2.0 * a * ea + 2.0 * a * e2a;
    let (c1, c2) = (a + a * a, a + 2.0 * a * a);
    let (e1, e2) = ((-t * c1).exp(), (-t * c2).exp());
    let r = (e1 - e2) / (a * a);
    let dr = (-c1 * e1 + c2 * e2) / (a * a);
    (rho0 * (p * q) + eta1 * r, rho0 * (dp * q + p * dq) + eta1 * dr)
}

/// Gridded `ρ₁`, `∂_tρ₁` from `ρ₀` and the prescribed initial rate `η₁`.
pub fn extend_traces(
    rho0: &Array1<f64>,
    eta1: &Array1<f64>,
    grids: &Grids,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if rho0.len() != grids.n_x() || eta1.len() != grids.n_x() {
        return Err(StefanError::Shape("trace pair does not match the x grid".into()));
    }
    let tang = grids.tangential();
    let r0 = tang.forward(rho0.as_slice().expect("contiguous"));
    let e1 = tang.forward(eta1.as_slice().expect("contiguous"));
    let nt = grids.n_t();
    let half = grids.n_x() / 2 + 1;
    let mut rho = vec![vec![ZERO; nt]; half];
    let mut rho_t = vec![vec![ZERO; nt]; half];
    for k in 0..half {
        for it in 0..nt {
            let (a, b) = extend_traces_mode(r0[k], e1[k], grids.xi[k], grids.t[it]);
            rho[k][it] = a;
            rho_t[k][it] = b;
        }
    }
    let rr: Vec<&Vec<C64>> = rho.iter().collect();
    let rt: Vec<&Vec<C64>> = rho_t.iter().collect();
    Ok((series_from_modes(&rr, grids, &tang), series_from_modes(&rt, grids, &tang)))
}

/// Intermediate fields of the reduction to zero-trace data.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionBundle {
    /// `γv₀ − g(0)`
    pub zeta: Array1<f64>,
    /// `h(0) − [[cγ∂_y(v₀ − aρ_E(0))]]`
    pub eta1: Array1<f64>,
    pub v1: BulkSeries,
    pub rho1: Array2<f64>,
    pub rho1_t: Array2<f64>,
    pub rho1_e: BulkSeries,
    pub reduced_g: Array2<f64>,
    pub reduced_h: Array2<f64>,
}

struct ReductionMode {
    v1_plus: Vec<Vec<C64>>,
    v1_minus: Vec<Vec<C64>>,
    rho1: Vec<C64>,
    rho1_t: Vec<C64>,
    rho1e_plus: Vec<Vec<C64>>,
    rho1e_minus: Vec<Vec<C64>>,
    g_tilde: Vec<C64>,
    h_tilde: Vec<C64>,
    /// `ρ₁` in closed form
    rho1_terms: ExpSum,
    eta1: C64,
    zeta: C64,
}

/// `(v₁, ρ_E)` helper: the mode of `ŵ` solving the half-line heat problem.
pub fn solve_rho_e_mode(
    rho: &[C64],
    rho0: C64,
    xi: f64,
    c: f64,
    grids: &Grids,
    substeps: usize,
) -> Result<Vec<Vec<C64>>> {
    let y = grids.y.as_slice().expect("contiguous");
    let b = bessel_half(xi);
    let w0: Vec<C64> = y.iter().map(|&r| rho0 * (-b * r).exp()).collect();
    integrate_half_line(y, c, xi * xi, grids.t.as_slice().expect("contiguous"), &w0, rho, None, substeps)
}

/// Extension `ρ_E` of a gridded interface field by the heat flow of both phases.
pub fn solve_rho_e(
    rho: &Array2<f64>,
    rho0: &Array1<f64>,
    params: &PhysicalParams,
    grids: &Grids,
    substeps: usize,
) -> Result<BulkSeries> {
    if rho.dim() != (grids.n_t(), grids.n_x()) || rho0.len() != grids.n_x() {
        return Err(StefanError::Shape("interface field does not match the grids".into()));
    }
    let tang = grids.tangential();
    let modes = series_modes(rho, &tang);
    let r0 = tang.forward(rho0.as_slice().expect("contiguous"));
    let half = grids.n_x() / 2 + 1;
    let res: Result<Vec<(Vec<Vec<C64>>, Vec<Vec<C64>>)>> = (0..half)
        .into_par_iter()
        .map(|k| {
            let p = solve_rho_e_mode(&modes[k], r0[k], grids.xi[k], params.c_plus, grids, substeps)
                .map_err(|e| tag_mode(e, k))?;
            let m = solve_rho_e_mode(&modes[k], r0[k], grids.xi[k], params.c_minus, grids, substeps)
                .map_err(|e| tag_mode(e, k))?;
            Ok((p, m))
        })
        .collect();
    let res = res?;
    let p: Vec<&Vec<Vec<C64>>> = res.iter().map(|r| &r.0).collect();
    let m: Vec<&Vec<Vec<C64>>> = res.iter().map(|r| &r.1).collect();
    Ok(BulkSeries {
        plus: bulk_from_modes(&p, grids, &tang),
        minus: bulk_from_modes(&m, grids, &tang),
    })
}

fn tag_mode(e: StefanError, k: usize) -> StefanError {
    match e {
        StefanError::Integrator { reason, .. } => StefanError::Integrator { mode: k, reason },
        other => other,
    }
}

/// Auxiliary field `v₁` solving the heat equations with Dirichlet value `g + e^{−(1−Δ_x)t}ζ`.
pub fn solve_auxiliary_v1(
    data: &DataTuple,
    zeta: &Array1<f64>,
    params: &PhysicalParams,
    grids: &Grids,
    substeps: usize,
) -> Result<BulkSeries> {
    data.check_shape(grids)?;
    let tang = grids.tangential();
    let modes = data_modes(data, grids);
    let zh = tang.forward(zeta.as_slice().expect("contiguous"));
    let res: Result<Vec<(Vec<Vec<C64>>, Vec<Vec<C64>>)>> = modes
        .par_iter()
        .map(|md| v1_mode(md, zh[md.k], params, grids, substeps))
        .collect();
    let res = res?;
    let p: Vec<&Vec<Vec<C64>>> = res.iter().map(|r| &r.0).collect();
    let m: Vec<&Vec<Vec<C64>>> = res.iter().map(|r| &r.1).collect();
    Ok(BulkSeries {
        plus: bulk_from_modes(&p, grids, &tang),
        minus: bulk_from_modes(&m, grids, &tang),
    })
}

type SidePair = (Vec<Vec<C64>>, Vec<Vec<C64>>);

/// The part of `v₁` without `f` and `g − g(0)e^{-(1+|ξ|²)t}`: initial value `v₀`, boundary
/// `γv₀ e^{-(1+|ξ|²)t}`. The boundary is evaluated at every substep.
fn v1_homogeneous_mode(md: &ModeData, params: &PhysicalParams, grids: &Grids, substeps: usize) -> Result<SidePair> {
    let y = grids.y.as_slice().expect("contiguous");
    let substeps = substeps.max(1);
    let nt = grids.n_t();
    let dt = grids.dt() / substeps as f64;
    let fine: Vec<f64> = (0..(nt - 1) * substeps + 1).map(|i| i as f64 * dt).collect();
    let a = 1.0 + md.xi * md.xi;
    let xi2 = md.xi * md.xi;
    let side = |v0: &[C64], c: f64| -> Result<Vec<Vec<C64>>> {
        let boundary: Vec<C64> = fine.iter().map(|&s| v0[0] * (-a * s).exp()).collect();
        let w = integrate_half_line(y, c, xi2, &fine, v0, &boundary, None, 1).map_err(|e| tag_mode(e, md.k))?;
        Ok(w.into_iter().step_by(substeps).collect())
    };
    Ok((side(&md.v0_plus, params.c_plus)?, side(&md.v0_minus, params.c_minus)?))
}

fn v1_mode(md: &ModeData, zeta: C64, params: &PhysicalParams, grids: &Grids, substeps: usize) -> Result<SidePair> {
    let y = grids.y.as_slice().expect("contiguous");
    let t = grids.t.as_slice().expect("contiguous");
    let a = 1.0 + md.xi * md.xi;
    let boundary: Vec<C64> = t
        .iter()
        .zip(&md.g)
        .map(|(&s, &g)| g + zeta * (-a * s).exp())
        .collect();
    let xi2 = md.xi * md.xi;
    let p = integrate_half_line(y, params.c_plus, xi2, t, &md.v0_plus, &boundary, Some(&md.f_plus), substeps)
        .map_err(|e| tag_mode(e, md.k))?;
    let m = integrate_half_line(y, params.c_minus, xi2, t, &md.v0_minus, &boundary, Some(&md.f_minus), substeps)
        .map_err(|e| tag_mode(e, md.k))?;
    Ok((p, m))
}

fn reduction_mode(
    md: &ModeData,
    zeta: C64,
    params: &PhysicalParams,
    grids: &Grids,
    substeps: usize,
) -> Result<ReductionMode> {
    let t = grids.t.as_slice().expect("contiguous");
    let nt = t.len();
    let (ap, am) = (params.a_plus(), params.a_minus());
    let (cp, cm) = (params.c_plus, params.c_minus);
    let a = 1.0 + md.xi * md.xi;
    let b = a.sqrt();
    let (v1_plus, v1_minus) = v1_mode(md, zeta, params, grids, substeps)?;
    let jump_v0 = md.v0_dy_plus * cp - md.v0_dy_minus * cm;
    let eta1 = md.h[0] - jump_v0 - md.rho0 * ((ap * cp + am * cm) * b);
    let mut rho1 = vec![ZERO; nt];
    let mut rho1_t = vec![ZERO; nt];
    for it in 0..nt {
        let (r, rt) = extend_traces_mode(md.rho0, eta1, md.xi, t[it]);
        rho1[it] = r;
        rho1_t[it] = rt;
    }
    let rho1e_plus = solve_rho_e_mode(&rho1, md.rho0, md.xi, cp, grids, substeps).map_err(|e| tag_mode(e, md.k))?;
    let rho1e_minus = solve_rho_e_mode(&rho1, md.rho0, md.xi, cm, grids, substeps).map_err(|e| tag_mode(e, md.k))?;
    let mut g_tilde = vec![ZERO; nt];
    let mut h_tilde = vec![ZERO; nt];
    for it in 0..nt {
        g_tilde[it] = -rho1[it] * (params.sigma * md.xi * md.xi)
            - rho1_t[it] * params.delta
            - zeta * (-a * t[it]).exp();
        // exact initial traces at t = 0, one-sided differences afterwards
        let (dvp, dvm, dep, dem) = if it == 0 {
            (md.v0_dy_plus, md.v0_dy_minus, -b * md.rho0, b * md.rho0)
        } else {
            let tr = |w: &Vec<C64>| grids.dr_trace(w[0], w[1], w[2]);
            (
                tr(&v1_plus[it]),
                -tr(&v1_minus[it]),
                tr(&rho1e_plus[it]),
                -tr(&rho1e_minus[it]),
            )
        };
        let jump = (dvp - dep * ap) * cp - (dvm - dem * am) * cm;
        h_tilde[it] = md.h[it] - rho1_t[it] - jump;
    }
    Ok(ReductionMode {
        rho1_terms: extension_terms(md.rho0, eta1, md.xi),
        v1_plus,
        v1_minus,
        rho1,
        rho1_t,
        rho1e_plus,
        rho1e_minus,
        g_tilde,
        h_tilde,
        eta1,
        zeta,
    })
}

/// `(β, ε)` in `u ≈ β√t + γt + εt^{3/2}`, fitted on the first three steps of a series with
/// `u(0) = 0`.
fn root_coefficients(u: &[C64], dt: f64) -> (C64, C64) {
    if u.len() < 4 {
        return (ZERO, ZERO);
    }
    // columns √i, i, i^{3/2} for i = 1, 2, 3; solved by Cramer's rule
    let col = |i: f64| [i.sqrt(), i, i * i.sqrt()];
    let m = [col(1.0), col(2.0), col(3.0)];
    let det3 = |c0: [f64; 3], c1: [f64; 3], c2: [f64; 3]| {
        c0[0] * (c1[1] * c2[2] - c1[2] * c2[1]) - c0[1] * (c1[0] * c2[2] - c1[2] * c2[0])
            + c0[2] * (c1[0] * c2[1] - c1[1] * c2[0])
    };
    let d = det3(m[0], m[1], m[2]);
    let solve = |k: usize, rhs: [f64; 3]| {
        let mut rows = m;
        for r in 0..3 {
            rows[r][k] = rhs[r];
        }
        det3(rows[0], rows[1], rows[2]) / d
    };
    let comp = |f: fn(C64) -> f64| {
        let rhs = [f(u[1]), f(u[2]), f(u[3])];
        (solve(0, rhs), solve(2, rhs))
    };
    let (br, er) = comp(|z| z.re);
    let (bi, ei) = comp(|z| z.im);
    (C64::new(br, bi) / dt.sqrt(), C64::new(er, ei) / (dt * dt.sqrt()))
}

/// Full solution of general compatible data by reduction to zero traces.
pub fn solve_full(
    data: &DataTuple,
    params: &PhysicalParams,
    grids: &Grids,
    contour: &ContourSpec,
    opts: &SolverOptions,
) -> Result<(SolutionTriple, ReductionBundle)> {
    let params = validate_params(*params)?;
    contour.validate()?;
    data.check_shape(grids)?;
    let scale = data
        .g
        .iter()
        .chain(data.h.iter())
        .chain(data.rho0.iter())
        .chain(data.v0.values.plus.iter())
        .fold(1.0_f64, |m, v| m.max(v.abs()));
    let res = compatibility_residual(&params, grids, data);
    if res > opts.tol_compat * scale {
        return Err(StefanError::Incompatible(format!(
            "compatibility residual {res:.3e} exceeds {:.1e}",
            opts.tol_compat * scale
        )));
    }
    let tang = grids.tangential();
    let nx = grids.n_x();
    let zeta = Array1::from_iter((0..nx).map(|j| data.v0.values.plus[[j, 0]] - data.g[[0, j]]));
    let zh = tang.forward(zeta.as_slice().expect("contiguous"));
    let modes = data_modes(data, grids);
    let ny = grids.n_y();
    let nt = grids.n_t();
    let results: Result<Vec<(ModeSolution, ReductionMode)>> = modes
        .par_iter()
        .map(|md| {
            let red = reduction_mode(md, zh[md.k], &params, grids, opts.substeps)?;
            // v = v₁' + w + v₂ where v₁' is the source-free part of v₁ and w carries f and
            // g − g(0)e^{-(1+|ξ|²)t}; w + v₂ solves one zero-trace problem whose gridded data go
            // through ramps and whose closed-form parts (ρ₁ has rates up to ~|ξ|⁴) go through
            // exact kernels
            let (v1h_plus, v1h_minus) = v1_homogeneous_mode(md, &params, grids, opts.substeps)?;
            let t = grids.t.as_slice().expect("contiguous");
            let (cp, cm) = (params.c_plus, params.c_minus);
            let tr = |w: &Vec<C64>| grids.dr_trace(w[0], w[1], w[2]);
            let mut h_rest: Vec<C64> = (0..nt)
                .map(|it| {
                    let (dp, dm) = if it == 0 {
                        (md.v0_dy_plus, -md.v0_dy_minus)
                    } else {
                        (tr(&v1h_plus[it]), tr(&v1h_minus[it]))
                    };
                    md.h[it] - dp * cp - dm * cm
                })
                .collect();
            let step = h_rest[0];
            for v in h_rest.iter_mut() {
                *v -= step;
            }
            // the flux of v₁' behaves like √t
            let (beta, eps) = root_coefficients(&h_rest, grids.dt());
            let mut reduced = ModeData::zeros(md.k, md.xi, nt, ny);
            for it in 1..nt {
                reduced.h[it] = h_rest[it] - (beta + eps * t[it]) * t[it].sqrt();
                reduced.g[it] = md.g[it] - md.g[0];
            }
            reduced.f_plus = md.f_plus.clone();
            reduced.f_minus = md.f_minus.clone();
            let mut sol = if reduced.is_zero() {
                ModeSolution::zeros(nt, ny)
            } else {
                solve_zero_trace_mode(&reduced, &params, grids, contour)
            };
            let xi2 = md.xi * md.xi;
            if beta != ZERO || eps != ZERO {
                let (kb, ke) = interface_root_kernels(xi2, &params, grids, contour);
                convolve_into(&mut sol, &[beta], &kb);
                convolve_into(&mut sol, &[eps], &ke);
            }
            let closed = ClosedForm {
                rho1: red.rho1_terms.clone(),
                rho0: md.rho0,
                decay: red.zeta + md.g[0],
                g_step: md.g[0],
                step,
                xi: md.xi,
            };
            // the kernels are real, so real and imaginary parts go separately
            for (part, unit) in [(closed.map(|c| c.re.into()), C64::new(1.0, 0.0)), (closed.map(|c| c.im.into()), C64::new(0.0, 1.0))] {
                if part.is_zero() {
                    continue;
                }
                let (kg, kh) = interface_kernels(
                    xi2,
                    &params,
                    grids,
                    contour,
                    |mu| part.g(mu, &params),
                    |mu| part.h(mu, &params),
                );
                convolve_into(&mut sol, &[unit], &kg);
                convolve_into(&mut sol, &[unit], &kh);
            }
            let mut aux = aux_solution(&red, &v1h_plus, &v1h_minus, md, grids);
            // the zero-trace data used the exact ρ_{1,E} flux; report the same traces
            let (fp, fm) = closed.rho_e_flux_traces(&params, grids, contour);
            aux.rhoe_dy_plus = fp;
            aux.rhoe_dy_minus = fm.iter().map(|v| -v).collect();
            sol.add_assign(&aux);
            Ok((sol, red))
        })
        .collect();
    let results = results?;
    let sols: Vec<ModeSolution> = results.iter().map(|r| r.0.clone()).collect();
    let solution = assemble_solution(&sols, grids);
    let reds: Vec<&ReductionMode> = results.iter().map(|r| &r.1).collect();
    let s = |f: fn(&ReductionMode) -> &Vec<C64>| {
        let refs: Vec<&Vec<C64>> = reds.iter().map(|r| f(r)).collect();
        series_from_modes(&refs, grids, &tang)
    };
    let b = |f: fn(&ReductionMode) -> &Vec<Vec<C64>>| {
        let refs: Vec<&Vec<Vec<C64>>> = reds.iter().map(|r| f(r)).collect();
        bulk_from_modes(&refs, grids, &tang)
    };
    let eta1_half: Vec<C64> = reds.iter().map(|r| r.eta1).collect();
    let zeta_half: Vec<C64> = reds.iter().map(|r| r.zeta).collect();
    let bundle = ReductionBundle {
        zeta: Array1::from(tang.inverse_real(&full_spectrum(&zeta_half, nx))),
        eta1: Array1::from(tang.inverse_real(&full_spectrum(&eta1_half, nx))),
        v1: BulkSeries {
            plus: b(|r| &r.v1_plus),
            minus: b(|r| &r.v1_minus),
        },
        rho1: s(|r| &r.rho1),
        rho1_t: s(|r| &r.rho1_t),
        rho1_e: BulkSeries {
            plus: b(|r| &r.rho1e_plus),
            minus: b(|r| &r.rho1e_minus),
        },
        reduced_g: s(|r| &r.g_tilde),
        reduced_h: s(|r| &r.h_tilde),
    };
    Ok((solution, bundle))
}

/// The `(v₁, ρ₁, ρ_{1,E})` part of a mode as a [`ModeSolution`].
fn aux_solution(red: &ReductionMode, v1_plus: &[Vec<C64>], v1_minus: &[Vec<C64>], md: &ModeData, grids: &Grids) -> ModeSolution {
    let nt = grids.n_t();
    let b = bessel_half(md.xi);
    let tr = |w: &Vec<C64>| grids.dr_trace(w[0], w[1], w[2]);
    let mut out = ModeSolution {
        rho: red.rho1.clone(),
        rho_t: red.rho1_t.clone(),
        v_plus: v1_plus.to_vec(),
        v_minus: v1_minus.to_vec(),
        rhoe_plus: red.rho1e_plus.clone(),
        rhoe_minus: red.rho1e_minus.clone(),
        v_dy_plus: (0..nt).map(|i| tr(&v1_plus[i])).collect(),
        v_dy_minus: (0..nt).map(|i| -tr(&v1_minus[i])).collect(),
        rhoe_dy_plus: (0..nt).map(|i| tr(&red.rho1e_plus[i])).collect(),
        rhoe_dy_minus: (0..nt).map(|i| -tr(&red.rho1e_minus[i])).collect(),
    };
    out.v_dy_plus[0] = md.v0_dy_plus;
    out.v_dy_minus[0] = md.v0_dy_minus;
    out.rhoe_dy_plus[0] = -b * md.rho0;
    out.rhoe_dy_minus[0] = b * md.rho0;
    out
}

/// Max nodal residuals of the interface rows of a solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterfaceResiduals {
    /// `γv± − σΔ_xρ + δ∂_tρ − g`
    pub boundary: f64,
    /// `∂_tρ + [[cγ∂_y(v − aρ_E)]] − h`
    pub stefan: f64,
    /// `γρ_E± − ρ`
    pub trace: f64,
    /// `ρ(0) − ρ₀`
    pub initial: f64,
}

pub fn interface_residuals(
    sol: &SolutionTriple,
    data: &DataTuple,
    params: &PhysicalParams,
    grids: &Grids,
) -> InterfaceResiduals {
    let tang = grids.tangential();
    let (nt, nx) = (grids.n_t(), grids.n_x());
    let (ap, am) = (params.a_plus(), params.a_minus());
    let mut boundary: f64 = 0.0;
    let mut stefan: f64 = 0.0;
    for it in 0..nt {
        let row: Vec<f64> = sol.rho.row(it).to_vec();
        let lap: Vec<C64> = tang
            .forward(&row)
            .into_iter()
            .zip(grids.xi.iter())
            .map(|(r, &xi)| -r * (xi * xi))
            .collect();
        let lap = tang.inverse_real(&lap);
        for j in 0..nx {
            let rest = -params.sigma * lap[j] + params.delta * sol.rho_t[[it, j]] - data.g[[it, j]];
            boundary = boundary
                .max((sol.v.plus[[it, j, 0]] + rest).abs())
                .max((sol.v.minus[[it, j, 0]] + rest).abs());
            let jump = params.c_plus * (sol.v_dy.plus[[it, j]] - ap * sol.rho_e_dy.plus[[it, j]])
                - params.c_minus * (sol.v_dy.minus[[it, j]] - am * sol.rho_e_dy.minus[[it, j]]);
            stefan = stefan.max((sol.rho_t[[it, j]] + jump - data.h[[it, j]]).abs());
        }
    }
    let initial = (0..nx).fold(0.0_f64, |m, j| m.max((sol.rho[[0, j]] - data.rho0[j]).abs()));
    InterfaceResiduals {
        boundary,
        stefan,
        trace: sol.trace_defect(),
        initial,
    }
}

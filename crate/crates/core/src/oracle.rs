//! Independent finite-difference integrator of the coupled system, one
//! tangential mode at a time.
//!
//! Bulk fields use the same graded y grid as the spectral path with
//! Dirichlet zero at `Y_max`. Each trapezoidal step eliminates the bulk
//! interiors through `A⁻¹e₁` and solves the remaining 2×2 system for
//! `(ρ, ∂_tρ)` formed by the trapezoidal rule for `ρ` and the Stefan row;
//! the boundary rows `γv = g − σ|ξ|²ρ − δ∂_tρ` and `γρ_E = ρ` are imposed
//! exactly.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, StefanError};
use crate::model::{bessel_half, DataTuple, Grids, PhysicalParams, SolutionTriple};
use crate::mol::{HalfLineOperator, TridiagLu};
use crate::solver::{assemble_solution, data_modes, ModeData, ModeSolution};

type C64 = Complex64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// State of one mode: full profiles including the interface node.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSystemState {
    pub v_plus: Vec<C64>,
    pub v_minus: Vec<C64>,
    pub rho: C64,
    pub rho_t: C64,
    pub rhoe_plus: Vec<C64>,
    pub rhoe_minus: Vec<C64>,
}

/// Data of one mode at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDataSlice {
    pub g: C64,
    pub h: C64,
    pub f_plus: Vec<C64>,
    pub f_minus: Vec<C64>,
}

impl ModeDataSlice {
    fn lerp(a: &ModeDataSlice, b: &ModeDataSlice, th: f64) -> Self {
        let mix = |x: &[C64], y: &[C64]| x.iter().zip(y).map(|(u, v)| u * (1.0 - th) + v * th).collect();
        ModeDataSlice {
            g: a.g * (1.0 - th) + b.g * th,
            h: a.h * (1.0 - th) + b.h * th,
            f_plus: mix(&a.f_plus, &b.f_plus),
            f_minus: mix(&a.f_minus, &b.f_minus),
        }
    }
}

struct Side {
    op: HalfLineOperator,
    lu: TridiagLu,
    /// `(dt/2)·bc·A⁻¹e₁`
    psi: Vec<C64>,
    c: f64,
    a: f64,
}

impl Side {
    fn new(y: &[f64], c: f64, a: f64, xi2: f64, dt: f64) -> Result<Self> {
        let op = HalfLineOperator::new(y, c, xi2);
        let lu = op.shifted(0.5 * dt).factor()?;
        let n = y.len() - 2;
        let mut psi = vec![ZERO; n];
        psi[0] = C64::new(0.5 * dt * op.boundary_coef, 0.0);
        lu.solve(&mut psi);
        Ok(Side { op, lu, psi, c, a })
    }

    /// Interior update without the new boundary value.
    fn known(&self, u: &[C64], src_old: &[C64], src_new: &[C64], dt: f64) -> Vec<C64> {
        let m = u.len();
        let interior = &u[1..m - 1];
        let lw = self.op.op.mul(interior);
        let mut rhs: Vec<C64> = (0..m - 2)
            .map(|k| interior[k] + lw[k] * (0.5 * dt) + (src_old[k + 1] + src_new[k + 1]) * (0.5 * dt))
            .collect();
        rhs[0] += u[0] * (0.5 * dt * self.op.boundary_coef);
        self.lu.solve(&mut rhs);
        rhs
    }
}

/// Trapezoidal stepper for one mode and one step size.
pub struct ModeStepper {
    plus: Side,
    minus: Side,
    trace: [f64; 3],
    xi2: f64,
    delta: f64,
    sigma: f64,
    dt: f64,
}

impl ModeStepper {
    pub fn new(xi: f64, params: &PhysicalParams, grids: &Grids, dt: f64) -> Result<Self> {
        let y = grids.y.as_slice().expect("contiguous");
        let xi2 = xi * xi;
        Ok(ModeStepper {
            plus: Side::new(y, params.c_plus, params.a_plus(), xi2, dt)?,
            minus: Side::new(y, params.c_minus, params.a_minus(), xi2, dt)?,
            trace: grids.trace_weights(),
            xi2,
            delta: params.delta,
            sigma: params.sigma,
            dt,
        })
    }

    fn d(&self, u0: C64, u1: C64, u2: C64) -> C64 {
        u0 * self.trace[0] + u1 * self.trace[1] + u2 * self.trace[2]
    }

    /// `c₊(∂_r v⁺ − a₊∂_r ρ_E⁺) + c₋(∂_r v⁻ − a₋∂_r ρ_E⁻)`, the jump in `|y|` form.
    pub fn jump(&self, s: &ModeSystemState) -> C64 {
        let dp = self.d(s.v_plus[0], s.v_plus[1], s.v_plus[2])
            - self.d(s.rhoe_plus[0], s.rhoe_plus[1], s.rhoe_plus[2]) * self.plus.a;
        let dm = self.d(s.v_minus[0], s.v_minus[1], s.v_minus[2])
            - self.d(s.rhoe_minus[0], s.rhoe_minus[1], s.rhoe_minus[2]) * self.minus.a;
        dp * self.plus.c + dm * self.minus.c
    }

    /// Advances by one step from data `now` to data `next`.
    pub fn step(&self, s: &ModeSystemState, now: &ModeDataSlice, next: &ModeDataSlice) -> Result<ModeSystemState> {
        let dt = self.dt;
        let zero_src = vec![ZERO; s.v_plus.len()];
        let vk_p = self.plus.known(&s.v_plus, &now.f_plus, &next.f_plus, dt);
        let vk_m = self.minus.known(&s.v_minus, &now.f_minus, &next.f_minus, dt);
        let wk_p = self.plus.known(&s.rhoe_plus, &zero_src, &zero_src, dt);
        let wk_m = self.minus.known(&s.rhoe_minus, &zero_src, &zero_src, dt);
        let [t0, t1, t2] = self.trace;
        // ∂_r of an interior update: K + γ·(boundary value)
        let kappa_of = |known: &[C64]| known[0] * t1 + known[1] * t2;
        let gamma_of = |psi: &[C64]| psi[0] * t1 + psi[1] * t2 + t0;
        let (kv_p, gv_p) = (kappa_of(&vk_p), gamma_of(&self.plus.psi));
        let (kv_m, gv_m) = (kappa_of(&vk_m), gamma_of(&self.minus.psi));
        let (kw_p, gw_p) = (kappa_of(&wk_p), gamma_of(&self.plus.psi));
        let (kw_m, gw_m) = (kappa_of(&wk_m), gamma_of(&self.minus.psi));
        let (cp, cm, ap, am) = (self.plus.c, self.minus.c, self.plus.a, self.minus.a);
        // v₀ = g − σ|ξ|²ρ − δP
        let sz = self.sigma * self.xi2;
        let gsum = gv_p * cp + gv_m * cm;
        let wsum = gw_p * (cp * ap) + gw_m * (cm * am);
        let known = kv_p * cp + kv_m * cm - kw_p * (cp * ap) - kw_m * (cm * am);
        // Stefan row: P + known + gsum·(g − szρ − δP) − wsum·ρ = h
        let a11 = C64::new(1.0, 0.0);
        let a12 = C64::new(-0.5 * dt, 0.0);
        let b1 = s.rho + s.rho_t * (0.5 * dt);
        let a21 = -gsum * sz - wsum;
        let a22 = C64::new(1.0, 0.0) - gsum * self.delta;
        let b2 = next.h - known - gsum * next.g;
        let det = a11 * a22 - a12 * a21;
        if det.norm() < 1e-300 || !det.re.is_finite() {
            return Err(StefanError::LinearSolve("singular interface system".into()));
        }
        let rho = (b1 * a22 - a12 * b2) / det;
        let rho_t = (a11 * b2 - a21 * b1) / det;
        let v0 = next.g - rho * sz - rho_t * self.delta;
        let build = |known: &[C64], psi: &[C64], b: C64| {
            let mut out = Vec::with_capacity(known.len() + 2);
            out.push(b);
            out.extend(known.iter().zip(psi).map(|(k, p)| k + p * b));
            out.push(ZERO);
            out
        };
        Ok(ModeSystemState {
            v_plus: build(&vk_p, &self.plus.psi, v0),
            v_minus: build(&vk_m, &self.minus.psi, v0),
            rho,
            rho_t,
            rhoe_plus: build(&wk_p, &self.plus.psi, rho),
            rhoe_minus: build(&wk_m, &self.minus.psi, rho),
        })
    }
}

/// Convenience wrapper of [`ModeStepper::step`].
pub fn step_mode(
    state: &ModeSystemState,
    xi: f64,
    now: &ModeDataSlice,
    next: &ModeDataSlice,
    params: &PhysicalParams,
    grids: &Grids,
    dt: f64,
) -> Result<ModeSystemState> {
    ModeStepper::new(xi, params, grids, dt)?.step(state, now, next)
}

/// Largest interface-row residuals seen at the output nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct ModeResiduals {
    pub boundary: f64,
    pub stefan: f64,
    pub trace: f64,
}

fn slice_at(md: &ModeData, it: usize) -> ModeDataSlice {
    ModeDataSlice {
        g: md.g[it],
        h: md.h[it],
        f_plus: md.f_plus[it].clone(),
        f_minus: md.f_minus[it].clone(),
    }
}

/// Integrates one mode over the time grid with `substeps` steps per interval.
pub fn integrate_mode(
    md: &ModeData,
    params: &PhysicalParams,
    grids: &Grids,
    substeps: usize,
) -> Result<(ModeSolution, ModeResiduals)> {
    let substeps = substeps.max(1);
    let (nt, ny) = (grids.n_t(), grids.n_y());
    let dt = grids.dt() / substeps as f64;
    let stepper = ModeStepper::new(md.xi, params, grids, dt)?;
    let b = bessel_half(md.xi);
    let y = grids.y.as_slice().expect("contiguous");
    let mut v_plus = md.v0_plus.clone();
    let mut v_minus = md.v0_minus.clone();
    v_plus[ny - 1] = ZERO;
    v_minus[ny - 1] = ZERO;
    let mut rhoe: Vec<C64> = y.iter().map(|&r| md.rho0 * (-b * r).exp()).collect();
    rhoe[ny - 1] = ZERO;
    let (ap, am) = (params.a_plus(), params.a_minus());
    // exact initial traces: ∂_r v₀⁻ = −∂_y v₀⁻, ∂_rρ_E(0) = −bρ₀ on both sides
    let jump0 = (md.v0_dy_plus + md.rho0 * (ap * b)) * params.c_plus
        + (-md.v0_dy_minus + md.rho0 * (am * b)) * params.c_minus;
    let mut state = ModeSystemState {
        v_plus,
        v_minus,
        rho: md.rho0,
        rho_t: md.h[0] - jump0,
        rhoe_plus: rhoe.clone(),
        rhoe_minus: rhoe,
    };
    let mut out = ModeSolution::zeros(nt, ny);
    let mut res = ModeResiduals::default();
    let record = |out: &mut ModeSolution, it: usize, s: &ModeSystemState, exact0: bool| {
        out.rho[it] = s.rho;
        out.rho_t[it] = s.rho_t;
        out.v_plus[it] = s.v_plus.clone();
        out.v_minus[it] = s.v_minus.clone();
        out.rhoe_plus[it] = s.rhoe_plus.clone();
        out.rhoe_minus[it] = s.rhoe_minus.clone();
        if exact0 {
            out.v_dy_plus[it] = md.v0_dy_plus;
            out.v_dy_minus[it] = md.v0_dy_minus;
            out.rhoe_dy_plus[it] = -b * md.rho0;
            out.rhoe_dy_minus[it] = b * md.rho0;
        } else {
            out.v_dy_plus[it] = grids.dr_trace(s.v_plus[0], s.v_plus[1], s.v_plus[2]);
            out.v_dy_minus[it] = -grids.dr_trace(s.v_minus[0], s.v_minus[1], s.v_minus[2]);
            out.rhoe_dy_plus[it] = grids.dr_trace(s.rhoe_plus[0], s.rhoe_plus[1], s.rhoe_plus[2]);
            out.rhoe_dy_minus[it] = -grids.dr_trace(s.rhoe_minus[0], s.rhoe_minus[1], s.rhoe_minus[2]);
        }
    };
    record(&mut out, 0, &state, true);
    for it in 0..nt - 1 {
        let a = slice_at(md, it);
        let bnext = slice_at(md, it + 1);
        for s in 0..substeps {
            let now = ModeDataSlice::lerp(&a, &bnext, s as f64 / substeps as f64);
            let next = ModeDataSlice::lerp(&a, &bnext, (s + 1) as f64 / substeps as f64);
            state = stepper.step(&state, &now, &next)?;
        }
        if !(state.rho.norm().is_finite() && state.rho_t.norm().is_finite()) {
            return Err(StefanError::Integrator {
                mode: md.k,
                reason: format!("non-finite state at t = {}", grids.t[it + 1]),
            });
        }
        let sz = params.sigma * md.xi * md.xi;
        let g = md.g[it + 1];
        let bres = (state.v_plus[0] - g + state.rho * sz + state.rho_t * params.delta)
            .norm()
            .max((state.v_minus[0] - g + state.rho * sz + state.rho_t * params.delta).norm());
        let sres = (state.rho_t + stepper.jump(&state) - md.h[it + 1]).norm();
        let tres = (state.rhoe_plus[0] - state.rho).norm().max((state.rhoe_minus[0] - state.rho).norm());
        res.boundary = res.boundary.max(bres);
        res.stefan = res.stefan.max(sres);
        res.trace = res.trace.max(tres);
        record(&mut out, it + 1, &state, false);
    }
    Ok((out, res))
}

/// Gridded FD solution together with the worst residuals over all modes.
pub fn fd_solve(
    data: &DataTuple,
    params: &PhysicalParams,
    grids: &Grids,
    substeps: usize,
) -> Result<(SolutionTriple, ModeResiduals)> {
    data.check_shape(grids)?;
    let modes = data_modes(data, grids);
    let sols: Result<Vec<(ModeSolution, ModeResiduals)>> = modes
        .par_iter()
        .map(|md| integrate_mode(md, params, grids, substeps))
        .collect();
    let sols = sols?;
    let mut worst = ModeResiduals::default();
    for (_, r) in &sols {
        worst.boundary = worst.boundary.max(r.boundary);
        worst.stefan = worst.stefan.max(r.stefan);
        worst.trace = worst.trace.max(r.trace);
    }
    let ms: Vec<ModeSolution> = sols.into_iter().map(|s| s.0).collect();
    Ok((assemble_solution(&ms, grids), worst))
}

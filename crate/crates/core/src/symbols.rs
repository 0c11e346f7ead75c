//! Fourier–Laplace symbols of the interface problem and sector sampling.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StefanError};
use crate::model::PhysicalParams;

type C64 = Complex64;

/// Distance in argument from the negative real axis below which `omega` refuses.
pub const BRANCH_TOL: f64 = 1e-10;

/// Principal `√(λ + κ + c z)`.
pub fn omega(lambda: C64, z: C64, c: f64, kappa: f64) -> Result<C64> {
    let w = lambda + kappa + z * c;
    if w.norm() > 0.0 && PI - w.arg().abs() < BRANCH_TOL {
        return Err(StefanError::BranchCut {
            arg: w.arg(),
            tol: BRANCH_TOL,
        });
    }
    Ok(w.sqrt())
}

/// Symbol values at one spectral point, expressed in `μ = λ + κ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSymbols {
    pub mu: C64,
    pub omega_plus: C64,
    pub omega_minus: C64,
    /// `√c₊ω₊ + √c₋ω₋`
    pub sum: C64,
    /// `a₊√c₊ω₊ + a₋√c₋ω₋`
    pub a_sum: C64,
    pub m: C64,
}

impl ModeSymbols {
    /// Evaluates without branch checks; `μ` with positive real part or
    /// real `z ≥ 0` off the negative axis never touches the cut.
    pub fn at(mu: C64, z: C64, params: &PhysicalParams) -> Self {
        let omega_plus = (mu + z * params.c_plus).sqrt();
        let omega_minus = (mu + z * params.c_minus).sqrt();
        let (sp, sm) = (params.c_plus.sqrt(), params.c_minus.sqrt());
        let sum = omega_plus * sp + omega_minus * sm;
        let a_sum = omega_plus * (params.a_plus() * sp) + omega_minus * (params.a_minus() * sm);
        let m = mu + (z * params.sigma + mu * params.delta) * sum + a_sum;
        ModeSymbols {
            mu,
            omega_plus,
            omega_minus,
            sum,
            a_sum,
            m,
        }
    }

    /// `(f₁, f₂)` with `f₁ = (λ+κ)(δΣ + 1)`, `f₂ = σzΣ + A`.
    pub fn split(&self, z: C64, params: &PhysicalParams) -> (C64, C64) {
        let f1 = self.mu * (self.sum * params.delta + 1.0);
        let f2 = z * self.sum * params.sigma + self.a_sum;
        (f1, f2)
    }
}

/// A sample point `(λ, z, δ, σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorPoint {
    pub lambda: C64,
    pub z: C64,
    pub delta: f64,
    pub sigma: f64,
}

impl SectorPoint {
    pub fn new(lambda: C64, z: C64, delta: f64, sigma: f64) -> Self {
        SectorPoint {
            lambda,
            z,
            delta,
            sigma,
        }
    }

    /// Strictly inside `Σ_{π−φ₀} × Σ_φ`.
    pub fn is_admissible(&self, geom: &SectorGeometry) -> bool {
        let inside = |w: C64, half: f64| w.norm() > 0.0 && w.arg().abs() < half;
        inside(self.lambda, PI - geom.phi0) && inside(self.z, geom.phi)
    }

    fn params(&self, params: &PhysicalParams) -> PhysicalParams {
        params.with_mu(self.delta, self.sigma)
    }
}

/// Opening angles: `λ ∈ Σ_{π−φ₀}`, `z ∈ Σ_φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorGeometry {
    pub phi0: f64,
    pub phi: f64,
}

impl SectorGeometry {
    /// `φ₀ = phi0_over_pi·π`, `φ = phi_fraction·(φ₀ − π/3)`.
    pub fn new(phi0_over_pi: f64, phi_fraction: f64) -> Result<Self> {
        let phi0 = phi0_over_pi * PI;
        if !(phi0 > PI / 3.0 && phi0 < PI / 2.0) {
            return Err(StefanError::Sector(format!(
                "phi0 = {phi0_over_pi}·π must lie in (π/3, π/2)"
            )));
        }
        if !(phi_fraction > 0.0 && phi_fraction < 1.0) {
            return Err(StefanError::Sector(format!(
                "phi_fraction = {phi_fraction} must lie in (0, 1)"
            )));
        }
        Ok(SectorGeometry {
            phi0,
            phi: phi_fraction * (phi0 - PI / 3.0),
        })
    }
}

fn symbols_at_point(point: &SectorPoint, params: &PhysicalParams) -> (ModeSymbols, PhysicalParams) {
    let p = point.params(params);
    (ModeSymbols::at(point.lambda + p.kappa, point.z, &p), p)
}

/// `m(λ, z)` with `(δ, σ)` taken from the point.
pub fn m_symbol(point: &SectorPoint, params: &PhysicalParams) -> C64 {
    symbols_at_point(point, params).0.m
}

/// `m₀ … m₆`.
pub fn m_family(point: &SectorPoint, params: &PhysicalParams) -> [C64; 7] {
    let (s, p) = symbols_at_point(point, params);
    family_from(&s, point.z, &p)
}

fn family_from(s: &ModeSymbols, z: C64, p: &PhysicalParams) -> [C64; 7] {
    let inv = 1.0 / s.m;
    let sz = z.sqrt();
    let smu = s.mu.sqrt();
    [
        inv,
        s.mu * inv,
        sz * inv,
        z * smu * p.sigma * inv,
        z * sz * p.sigma * inv,
        s.mu * smu * p.delta * inv,
        s.mu * sz * p.delta * inv,
    ]
}

/// `|f₁ + f₂| / (|f₁| + |f₂|)`.
pub fn triangle_ratio(f1: C64, f2: C64) -> Result<f64> {
    let d = f1.norm() + f2.norm();
    if d == 0.0 {
        return Err(StefanError::InvalidParam {
            name: "f1, f2",
            reason: "triangle ratio undefined at (0, 0)".into(),
        });
    }
    Ok(((f1 + f2).norm() / d).min(1.0))
}

/// One evaluated sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolProbe {
    pub point: SectorPoint,
    pub omega_plus: C64,
    pub omega_minus: C64,
    pub m_value: C64,
    pub m_family: [C64; 7],
    pub triangle_ratio: f64,
    /// `|m| / (|f₁| + |f₂|)`
    pub m_ratio: f64,
}

pub fn probe(point: &SectorPoint, params: &PhysicalParams) -> SymbolProbe {
    let (s, p) = symbols_at_point(point, params);
    let (f1, f2) = s.split(point.z, &p);
    let tr = triangle_ratio(f1, f2).unwrap_or(0.0);
    SymbolProbe {
        point: *point,
        omega_plus: s.omega_plus,
        omega_minus: s.omega_minus,
        m_value: s.m,
        m_family: family_from(&s, point.z, &p),
        triangle_ratio: tr,
        m_ratio: s.m.norm() / (f1.norm() + f2.norm()),
    }
}

/// Sampling plan for the sector product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectorSpec {
    pub phi0_over_pi: f64,
    pub phi_fraction: f64,
    pub lambda_range: [f64; 2],
    pub z_range: [f64; 2],
    pub n_lambda: usize,
    pub n_z: usize,
    /// arguments per modulus for both λ and z
    #[serde(default = "default_n_arg")]
    pub n_arg: usize,
    pub n_delta: usize,
    pub n_sigma: usize,
    pub kappa_list: Vec<f64>,
    pub floor: f64,
    pub ceiling: f64,
}

fn default_n_arg() -> usize {
    5
}

impl Default for SectorSpec {
    fn default() -> Self {
        SectorSpec {
            phi0_over_pi: 0.45,
            phi_fraction: 0.5,
            lambda_range: [1e-3, 1e6],
            z_range: [1e-3, 1e6],
            n_lambda: 40,
            n_z: 40,
            n_arg: 5,
            n_delta: 5,
            n_sigma: 5,
            kappa_list: (0..9).map(|k| (1u32 << k) as f64).collect(),
            floor: 1e-6,
            ceiling: 1e6,
        }
    }
}

impl SectorSpec {
    pub fn geometry(&self) -> Result<SectorGeometry> {
        SectorGeometry::new(self.phi0_over_pi, self.phi_fraction)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry()?;
        let range_ok = |r: [f64; 2]| r[0] > 0.0 && r[1] > r[0] && r[1].is_finite();
        if !range_ok(self.lambda_range) || !range_ok(self.z_range) {
            return Err(StefanError::Sector(
                "ranges must satisfy 0 < lo < hi < ∞".into(),
            ));
        }
        if self.n_lambda < 2 || self.n_z < 2 || self.n_arg < 1 {
            return Err(StefanError::Sector(
                "need at least 2 moduli per variable and 1 argument".into(),
            ));
        }
        if self.n_delta < 1 || self.n_sigma < 1 {
            return Err(StefanError::Sector("empty (δ, σ) grid".into()));
        }
        if self.kappa_list.is_empty() || self.kappa_list.iter().any(|k| !(*k >= 1.0)) {
            return Err(StefanError::Sector("kappa_list must hold values >= 1".into()));
        }
        Ok(())
    }

    /// Same plan with every sample count doubled.
    pub fn doubled(&self) -> Self {
        SectorSpec {
            n_lambda: 2 * self.n_lambda,
            n_z: 2 * self.n_z,
            n_arg: 2 * self.n_arg - 1,
            ..self.clone()
        }
    }

    pub fn lambda_samples(&self) -> Result<Vec<C64>> {
        let g = self.geometry()?;
        Ok(polar_grid(self.lambda_range, self.n_lambda, PI - g.phi0, self.n_arg))
    }

    pub fn z_samples(&self) -> Result<Vec<C64>> {
        let g = self.geometry()?;
        Ok(polar_grid(self.z_range, self.n_z, g.phi, self.n_arg))
    }

    /// `(δ, σ)` tensor grid on `[0, R]²`, δ slowest.
    pub fn mu_grid(&self, r_bound: f64) -> Vec<(f64, f64)> {
        let lin = |n: usize, k: usize| {
            if n == 1 {
                0.0
            } else {
                r_bound * k as f64 / (n - 1) as f64
            }
        };
        let mut out = Vec::with_capacity(self.n_delta * self.n_sigma);
        for i in 0..self.n_delta {
            for j in 0..self.n_sigma {
                out.push((lin(self.n_delta, i), lin(self.n_sigma, j)));
            }
        }
        out
    }
}

/// Log-uniform moduli times uniform arguments strictly inside `|arg| < half`.
fn polar_grid(range: [f64; 2], n_mod: usize, half: f64, n_arg: usize) -> Vec<C64> {
    let (lo, hi) = (range[0].ln(), range[1].ln());
    let edge = half * (1.0 - 1e-3);
    let mut out = Vec::with_capacity(n_mod * n_arg);
    for i in 0..n_mod {
        let r = (lo + (hi - lo) * i as f64 / (n_mod - 1) as f64).exp();
        for j in 0..n_arg {
            let th = if n_arg == 1 {
                0.0
            } else {
                -edge + 2.0 * edge * j as f64 / (n_arg - 1) as f64
            };
            out.push(C64::from_polar(r, th));
        }
    }
    out
}

/// Extremes over all samples for one `(δ, σ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuBounds {
    pub delta: f64,
    pub sigma: f64,
    pub min_triangle: f64,
    pub min_m_ratio: f64,
    pub sup_m: [f64; 7],
    pub all_admissible: bool,
    /// probes attaining each extreme: triangle, m-ratio, then m₀ … m₆
    pub extremal: Vec<SymbolProbe>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorReport {
    pub kappa: f64,
    pub min_triangle: f64,
    pub min_m_ratio: f64,
    pub sup_m: [f64; 7],
    pub all_admissible: bool,
    pub per_mu: Vec<MuBounds>,
    pub fail: bool,
    pub reasons: Vec<String>,
}

/// Samples the sector product at shift `params.kappa` for every `(δ, σ)` of the plan.
pub fn probe_sector_bounds(params: &PhysicalParams, spec: &SectorSpec) -> Result<SectorReport> {
    spec.validate()?;
    let geom = spec.geometry()?;
    let lambdas = spec.lambda_samples()?;
    let zs = spec.z_samples()?;
    let mus = spec.mu_grid(params.r_bound);
    let per_mu: Vec<MuBounds> = mus
        .par_iter()
        .map(|&(delta, sigma)| {
            let mut best_tr: Option<SymbolProbe> = None;
            let mut best_mr: Option<SymbolProbe> = None;
            let mut best_m: [Option<SymbolProbe>; 7] = [None; 7];
            let mut admissible = true;
            for &lambda in &lambdas {
                for &z in &zs {
                    let pt = SectorPoint::new(lambda, z, delta, sigma);
                    admissible &= pt.is_admissible(&geom);
                    let pr = probe(&pt, params);
                    if best_tr.is_none_or(|b| pr.triangle_ratio < b.triangle_ratio) {
                        best_tr = Some(pr);
                    }
                    if best_mr.is_none_or(|b| pr.m_ratio < b.m_ratio) {
                        best_mr = Some(pr);
                    }
                    for (j, slot) in best_m.iter_mut().enumerate() {
                        if slot.is_none_or(|b| pr.m_family[j].norm() > b.m_family[j].norm()) {
                            *slot = Some(pr);
                        }
                    }
                }
            }
            let best_tr = best_tr.expect("non-empty sample");
            let best_mr = best_mr.expect("non-empty sample");
            let mut sup_m = [0.0; 7];
            for (j, s) in sup_m.iter_mut().enumerate() {
                *s = best_m[j].expect("non-empty sample").m_family[j].norm();
            }
            let mut extremal = vec![best_tr, best_mr];
            extremal.extend(best_m.iter().map(|b| b.expect("non-empty sample")));
            MuBounds {
                delta,
                sigma,
                min_triangle: best_tr.triangle_ratio,
                min_m_ratio: best_mr.m_ratio,
                sup_m,
                all_admissible: admissible,
                extremal,
            }
        })
        .collect();
    let min_triangle = per_mu.iter().map(|b| b.min_triangle).fold(f64::INFINITY, f64::min);
    let min_m_ratio = per_mu.iter().map(|b| b.min_m_ratio).fold(f64::INFINITY, f64::min);
    let mut sup_m = [0.0_f64; 7];
    for b in &per_mu {
        for j in 0..7 {
            sup_m[j] = sup_m[j].max(b.sup_m[j]);
        }
    }
    let all_admissible = per_mu.iter().all(|b| b.all_admissible);
    let mut reasons = Vec::new();
    if !(min_triangle >= spec.floor) {
        reasons.push(format!("min triangle ratio {min_triangle:.3e} below floor {:.1e}", spec.floor));
    }
    if !(min_m_ratio >= spec.floor) {
        reasons.push(format!("min |m|/(|f1|+|f2|) {min_m_ratio:.3e} below floor {:.1e}", spec.floor));
    }
    for (j, s) in sup_m.iter().enumerate() {
        if !(s.is_finite() && *s <= spec.ceiling) {
            reasons.push(format!("sup |m{j}| = {s:.3e} above ceiling {:.1e}", spec.ceiling));
        }
    }
    if !all_admissible {
        reasons.push("a sample left the sector product".into());
    }
    Ok(SectorReport {
        kappa: params.kappa,
        min_triangle,
        min_m_ratio,
        sup_m,
        all_admissible,
        per_mu,
        fail: !reasons.is_empty(),
        reasons,
    })
}

/// `sup |a₊√c₊ω₊ + a₋√c₋ω₋| / |m − a₊√c₊ω₊ − a₋√c₋ω₋|` over the (λ, z) samples.
pub fn perturbation_margin(params: &PhysicalParams, spec: &SectorSpec) -> Result<f64> {
    if params.delta <= 0.0 && params.sigma <= 0.0 {
        return Err(StefanError::InvalidParam {
            name: "delta, sigma",
            reason: "perturbation margin needs delta > 0 or sigma > 0".into(),
        });
    }
    spec.validate()?;
    let lambdas = spec.lambda_samples()?;
    let zs = spec.z_samples()?;
    let sup = lambdas
        .par_iter()
        .map(|&lambda| {
            zs.iter().fold(0.0_f64, |acc, &z| {
                let s = ModeSymbols::at(lambda + params.kappa, z, params);
                let g = s.m - s.a_sum;
                acc.max(s.a_sum.norm() / g.norm())
            })
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .fold(0.0_f64, f64::max);
    Ok(sup)
}

/// Outcome of the shift search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaChoice {
    pub kappa: f64,
    /// worst margin over the nonzero `(δ, σ)` grid points at that κ
    pub margin: f64,
    /// `(κ, worst margin)` for every κ tried
    pub trail: Vec<(f64, f64)>,
}

/// Smallest κ in the plan whose margin is ≤ 1/2 at every nonzero grid `(δ, σ)`.
pub fn choose_kappa(params: &PhysicalParams, spec: &SectorSpec) -> Result<KappaChoice> {
    spec.validate()?;
    let mus: Vec<(f64, f64)> = spec
        .mu_grid(params.r_bound)
        .into_iter()
        .filter(|&(d, s)| d > 0.0 || s > 0.0)
        .collect();
    let mut kappas = spec.kappa_list.clone();
    kappas.sort_by(f64::total_cmp);
    let mut trail = Vec::new();
    for &kappa in &kappas {
        let mut worst: f64 = 0.0;
        for &(d, s) in &mus {
            worst = worst.max(perturbation_margin(&params.with_mu(d, s).with_kappa(kappa), spec)?);
        }
        trail.push((kappa, worst));
        if worst <= 0.5 {
            return Ok(KappaChoice {
                kappa,
                margin: worst,
                trail,
            });
        }
    }
    let (kappa, best) = *trail.last().expect("non-empty kappa list");
    Err(StefanError::MarginNotReached { best, kappa })
}

/// Sampled `min |ω| / (√|λ| + √κ + c√|z|)` over the sector product.
pub fn omega_lower_constant(spec: &SectorSpec, c: f64, kappa: f64) -> Result<f64> {
    spec.validate()?;
    let lambdas = spec.lambda_samples()?;
    let zs = spec.z_samples()?;
    let mut best = f64::INFINITY;
    for &lambda in &lambdas {
        for &z in &zs {
            let w = omega(lambda, z, c, kappa)?;
            let scale = lambda.norm().sqrt() + kappa.sqrt() + c * z.norm().sqrt();
            best = best.min(w.norm() / scale);
        }
    }
    Ok(best)
}

//! Batch studies: uniform maximal-regularity ratios, singular-limit sweeps,
//! sector-bound probes, a validation run and the spectral/FD cross-check.
//!
//! Every study reads one JSON [`Config`] and produces a typed table; the
//! writers emit CSV with a versioned comment line plus a JSON summary.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StefanError};
use crate::model::{
    bessel_half, make_compatible_data, trapezoid_weights, validate_params, Coefficient, DataTuple,
    GridSpec, Grids, PhysicalParams, SeedFamily, SolutionTriple,
};
use crate::norms::{bulk_lp_norm, data_norm_report, norm_report, solution_norms, space_norm, Axis1, NormReport};
use crate::oracle::fd_solve;
use crate::solver::{interface_residuals, solve_full, solve_zero_trace, source_tail, InterfaceResiduals, SolverOptions};
use crate::symbols::{choose_kappa, probe_sector_bounds, SectorReport, SectorSpec};
use crate::transform::ContourSpec;

/// Version tag written in the first line of every CSV table.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// The `model` block: grids, physical parameters and the data seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(rename = "N_x")]
    pub n_x: usize,
    #[serde(rename = "L_x")]
    pub l_x: f64,
    #[serde(rename = "Y_max")]
    pub y_max: f64,
    #[serde(rename = "N_y")]
    pub n_y: usize,
    pub grading_ratio: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(rename = "N_t")]
    pub n_t: usize,
    pub c_plus: f64,
    pub c_minus: f64,
    pub kappa: f64,
    pub p: f64,
    #[serde(rename = "R")]
    pub r_bound: f64,
    pub delta: f64,
    pub sigma: f64,
    pub seed_family: SeedFamily,
    pub a_plus: Coefficient,
    pub a_minus: Coefficient,
}

impl Default for ModelBlock {
    fn default() -> Self {
        let g = GridSpec::default();
        let p = PhysicalParams::default();
        ModelBlock {
            n_x: g.n_x,
            l_x: g.l_x,
            y_max: g.y_max,
            n_y: g.n_y,
            grading_ratio: g.grading_ratio,
            t_final: g.t_final,
            n_t: g.n_t,
            c_plus: p.c_plus,
            c_minus: p.c_minus,
            kappa: p.kappa,
            p: p.p,
            r_bound: p.r_bound,
            delta: p.delta,
            sigma: p.sigma,
            seed_family: SeedFamily::default(),
            a_plus: p.a_plus,
            a_minus: p.a_minus,
        }
    }
}

impl ModelBlock {
    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            n_x: self.n_x,
            l_x: self.l_x,
            y_max: self.y_max,
            n_y: self.n_y,
            grading_ratio: self.grading_ratio,
            t_final: self.t_final,
            n_t: self.n_t,
        }
    }

    pub fn grids(&self) -> Result<Grids> {
        Grids::new(self.grid_spec())
    }

    pub fn params(&self) -> Result<PhysicalParams> {
        validate_params(PhysicalParams {
            c_plus: self.c_plus,
            c_minus: self.c_minus,
            delta: self.delta,
            sigma: self.sigma,
            kappa: self.kappa,
            a_plus: self.a_plus,
            a_minus: self.a_minus,
            p: self.p,
            r_bound: self.r_bound,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniformityBlock {
    pub n_delta: usize,
    pub n_sigma: usize,
    /// allowed max ratio / min ratio
    pub spread_max: f64,
    /// growth along the diagonal toward (0,0) counted as blow-up
    pub blowup_factor: f64,
}

impl Default for UniformityBlock {
    fn default() -> Self {
        UniformityBlock {
            n_delta: 5,
            n_sigma: 5,
            spread_max: 10.0,
            blowup_factor: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitBlock {
    /// 1 … 5
    pub limit_type: u8,
    pub n_points: usize,
    pub factor: f64,
    /// first offset from the limit; `R` minus the fixed component when absent
    pub start: Option<f64>,
    /// limit value of δ in type 2
    pub delta0: f64,
    /// limit value of σ in type 3
    pub sigma0: f64,
    /// allowed e_last / e_first
    pub decrease_max: f64,
}

impl Default for LimitBlock {
    fn default() -> Self {
        LimitBlock {
            limit_type: 5,
            n_points: 7,
            factor: 0.5,
            start: None,
            delta0: 0.5,
            sigma0: 0.5,
            decrease_max: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossCheckBlock {
    /// values used for both δ and σ
    pub values: Vec<f64>,
    pub tol_rho: f64,
    pub tol_v: f64,
    /// FD steps per time interval
    pub substeps: usize,
}

impl Default for CrossCheckBlock {
    fn default() -> Self {
        CrossCheckBlock {
            values: vec![0.0, 0.5, 1.0],
            tol_rho: 1e-3,
            tol_v: 5e-3,
            substeps: 8,
        }
    }
}

/// Aggregated configuration of all studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelBlock,
    pub sector: SectorSpec,
    pub contour: ContourSpec,
    pub solver: SolverOptions,
    pub uniformity: UniformityBlock,
    pub limit: LimitBlock,
    pub cross_check: CrossCheckBlock,
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| StefanError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowFlag {
    #[serde(rename = "ok")]
    Ok,
    /// both sides of a ratio vanish
    #[serde(rename = "0/0")]
    Degenerate,
    #[serde(rename = "FAIL")]
    Fail,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn seeded_data(params: &PhysicalParams, grids: &Grids, seed: SeedFamily) -> Result<DataTuple> {
    Ok(make_compatible_data(params, grids, &seed.seeds(grids))?.0)
}

// ---------------------------------------------------------------- uniformity

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityRow {
    pub delta: f64,
    pub sigma: f64,
    pub sol_norm: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub flag: RowFlag,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityTable {
    pub rows: Vec<UniformityRow>,
    pub max_ratio: f64,
    pub min_ratio: f64,
    /// max / min over rows flagged ok
    pub spread: f64,
    /// ratios along the diagonal, from `(R, R)` toward `(0, 0)`
    pub diagonal: Vec<f64>,
    pub blowup: bool,
    pub fail: bool,
    pub reasons: Vec<String>,
}

fn uniformity_row(cfg: &Config, grids: &Grids, base: &PhysicalParams, delta: f64, sigma: f64) -> UniformityRow {
    let run = || -> Result<(f64, f64)> {
        let params = validate_params(base.with_mu(delta, sigma))?;
        let data = seeded_data(&params, grids, cfg.model.seed_family)?;
        let (sol, _) = solve_full(&data, &params, grids, &cfg.contour, &cfg.solver)?;
        let sol_norm = solution_norms(&sol, &params, grids)?.total;
        let rhs = data_norm_report(&data, &params, grids)?.rhs;
        Ok((sol_norm, rhs))
    };
    match run() {
        Ok((sol_norm, rhs)) if sol_norm == 0.0 && rhs == 0.0 => UniformityRow {
            delta,
            sigma,
            sol_norm,
            rhs,
            ratio: f64::NAN,
            flag: RowFlag::Degenerate,
            note: "zero data".into(),
        },
        Ok((sol_norm, rhs)) => {
            let ratio = sol_norm / rhs;
            let ok = ratio.is_finite();
            UniformityRow {
                delta,
                sigma,
                sol_norm,
                rhs,
                ratio,
                flag: if ok { RowFlag::Ok } else { RowFlag::Fail },
                note: if ok { String::new() } else { "non-finite ratio".into() },
            }
        }
        Err(e) => UniformityRow {
            delta,
            sigma,
            sol_norm: f64::NAN,
            rhs: f64::NAN,
            ratio: f64::NAN,
            flag: RowFlag::Fail,
            note: e.to_string(),
        },
    }
}

/// Ratio of solution norm to the data side of the uniform estimate over a `(δ, σ)` grid on `[0, R]²`.
pub fn run_uniformity_study(cfg: &Config) -> Result<UniformityTable> {
    let base = cfg.model.params()?;
    let grids = cfg.model.grids()?;
    let u = &cfg.uniformity;
    if u.n_delta == 0 || u.n_sigma == 0 {
        return Err(StefanError::Config("uniformity grid needs at least one point per axis".into()));
    }
    let ds = linspace(0.0, base.r_bound, u.n_delta);
    let ss = linspace(0.0, base.r_bound, u.n_sigma);
    let mus: Vec<(f64, f64)> = ds.iter().flat_map(|&d| ss.iter().map(move |&s| (d, s))).collect();
    let rows: Vec<UniformityRow> = mus
        .par_iter()
        .map(|&(d, s)| uniformity_row(cfg, &grids, &base, d, s))
        .collect();
    let ok: Vec<f64> = rows.iter().filter(|r| r.flag == RowFlag::Ok).map(|r| r.ratio).collect();
    let max_ratio = ok.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min_ratio = ok.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max_ratio / min_ratio;
    let mut diagonal = Vec::new();
    if u.n_delta == u.n_sigma {
        for i in (0..u.n_delta).rev() {
            diagonal.push(rows[i * u.n_sigma + i].ratio);
        }
    }
    let blowup = diagonal.len() > 1
        && diagonal.windows(2).all(|w| w[1] > w[0])
        && diagonal[diagonal.len() - 1] > u.blowup_factor * diagonal[0];
    let mut reasons = Vec::new();
    let failed = rows.iter().filter(|r| r.flag == RowFlag::Fail).count();
    if failed > 0 {
        reasons.push(format!("{failed} rows failed"));
    }
    if !ok.is_empty() && !(spread <= u.spread_max) {
        reasons.push(format!("ratio spread {spread:.3} exceeds {}", u.spread_max));
    }
    if blowup {
        reasons.push("ratios grow monotonically toward (0,0)".into());
    }
    Ok(UniformityTable {
        rows,
        max_ratio,
        min_ratio,
        spread,
        diagonal,
        blowup,
        fail: !reasons.is_empty(),
        reasons,
    })
}

// ------------------------------------------------------------ singular limit

/// Limit point and parameter sequence of a singular-limit type.
pub fn limit_sequence(block: &LimitBlock, r_bound: f64) -> Result<((f64, f64), Vec<(f64, f64)>)> {
    let (mu0, offset) = match block.limit_type {
        1 | 4 | 5 => ((0.0, 0.0), 0.0),
        2 => ((block.delta0, 0.0), block.delta0),
        3 => ((0.0, block.sigma0), block.sigma0),
        t => return Err(StefanError::Config(format!("limit_type must be 1..=5, got {t}"))),
    };
    if block.limit_type == 2 && block.delta0 <= 0.0 {
        return Err(StefanError::Config("type 2 needs delta0 > 0".into()));
    }
    if block.limit_type == 3 && block.sigma0 <= 0.0 {
        return Err(StefanError::Config("type 3 needs sigma0 > 0".into()));
    }
    if block.n_points < 2 || !(block.factor > 0.0 && block.factor < 1.0) {
        return Err(StefanError::Config("need n_points >= 2 and 0 < factor < 1".into()));
    }
    let start = block.start.unwrap_or(r_bound - offset);
    if !(start > 0.0 && offset + start <= r_bound * (1.0 + 1e-12)) {
        return Err(StefanError::Config(format!(
            "sequence start {start} leaves [0, R] with R = {r_bound}"
        )));
    }
    let seq = (0..block.n_points)
        .map(|k| {
            let s = start * block.factor.powi(k as i32);
            match block.limit_type {
                1 => (s, s),
                2 => (block.delta0 + s, s),
                3 => (s, block.sigma0 + s),
                4 => (s, 0.0),
                _ => (0.0, s),
            }
        })
        .collect();
    Ok((mu0, seq))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitRow {
    pub k: usize,
    pub delta: f64,
    pub sigma: f64,
    /// `‖solution(μ_k) − solution(μ₀)‖` in the norm of `μ₀`
    pub error: f64,
    /// `W^{2−6/p}` distance of `σ(h(0) − [[cγ∂_y v₀]])` from its limit
    pub trace_gap: f64,
    pub flag: RowFlag,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitTable {
    pub limit_type: u8,
    pub mu0: (f64, f64),
    pub rows: Vec<LimitRow>,
    pub monotone: bool,
    /// e_last / e_first
    pub decrease: f64,
    pub fail: bool,
    pub reasons: Vec<String>,
}

/// `σ(h(0) − [[cγ∂_y v₀]])` of a data tuple.
fn sigma_trace_field(data: &DataTuple, params: &PhysicalParams, grids: &Grids) -> Vec<f64> {
    let jump = data.v0.jump(params.c_plus, params.c_minus);
    (0..grids.n_x()).map(|j| params.sigma * (data.h[[0, j]] - jump[j])).collect()
}

/// Solves at each `μ_k` of the selected type and measures the distance to the solution at `μ₀`.
pub fn run_singular_limit(cfg: &Config) -> Result<LimitTable> {
    let base = cfg.model.params()?;
    let grids = cfg.model.grids()?;
    let (mu0, seq) = limit_sequence(&cfg.limit, base.r_bound)?;
    let p0 = validate_params(base.with_mu(mu0.0, mu0.1))?;
    let data0 = seeded_data(&p0, &grids, cfg.model.seed_family)?;
    let (sol0, _) = solve_full(&data0, &p0, &grids, &cfg.contour, &cfg.solver)?;
    let trace0 = sigma_trace_field(&data0, &p0, &grids);
    let axis = Axis1::torus(&grids);
    let s_trace = 2.0 - 6.0 / base.p;
    let rows: Vec<LimitRow> = seq
        .par_iter()
        .enumerate()
        .map(|(k, &(delta, sigma))| {
            let run = || -> Result<(f64, f64)> {
                let params = validate_params(base.with_mu(delta, sigma))?;
                let data = seeded_data(&params, &grids, cfg.model.seed_family)?;
                let (sol, _) = solve_full(&data, &params, &grids, &cfg.contour, &cfg.solver)?;
                let err = solution_norms(&sol.difference(&sol0), &p0, &grids)?.total;
                let tr = sigma_trace_field(&data, &params, &grids);
                let gap: Vec<f64> = tr.iter().zip(&trace0).map(|(a, b)| a - b).collect();
                Ok((err, space_norm(&gap, &axis, s_trace, base.p)?))
            };
            match run() {
                Ok((error, trace_gap)) => LimitRow {
                    k,
                    delta,
                    sigma,
                    error,
                    trace_gap,
                    flag: if error.is_finite() { RowFlag::Ok } else { RowFlag::Fail },
                    note: String::new(),
                },
                Err(e) => LimitRow {
                    k,
                    delta,
                    sigma,
                    error: f64::NAN,
                    trace_gap: f64::NAN,
                    flag: RowFlag::Fail,
                    note: e.to_string(),
                },
            }
        })
        .collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    let decrease = errs[errs.len() - 1] / errs[0];
    let mut reasons = Vec::new();
    let failed = rows.iter().filter(|r| r.flag == RowFlag::Fail).count();
    if failed > 0 {
        reasons.push(format!("{failed} rows failed"));
    }
    if !monotone {
        reasons.push("errors are not strictly decreasing".into());
    }
    if !(decrease <= cfg.limit.decrease_max) {
        reasons.push(format!("e_last/e_first = {decrease:.3e} exceeds {}", cfg.limit.decrease_max));
    }
    // with δ₀ > 0 the trace condition must follow from compatibility and data convergence
    if mu0.0 > 0.0 {
        let gaps: Vec<f64> = rows.iter().map(|r| r.trace_gap).collect();
        let scale = gaps.iter().copied().fold(0.0_f64, f64::max).max(f64::MIN_POSITIVE);
        if !gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12 * scale) {
            reasons.push("trace term does not converge although delta0 > 0".into());
        }
    }
    Ok(LimitTable {
        limit_type: cfg.limit.limit_type,
        mu0,
        rows,
        monotone,
        decrease,
        fail: !reasons.is_empty(),
        reasons,
    })
}

// --------------------------------------------------------------------- sector

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorRow {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub z_re: f64,
    pub z_im: f64,
    pub delta: f64,
    pub sigma: f64,
    pub triangle_ratio: f64,
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
    pub m5: f64,
    pub m6: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorStudy {
    pub kappa: f64,
    pub margin: Option<f64>,
    pub kappa_trail: Vec<(f64, f64)>,
    pub report: SectorReport,
    pub doubled: SectorReport,
    /// largest relative change of any extremum under doubling
    pub refinement_change: f64,
    pub fail: bool,
    pub reasons: Vec<String>,
}

impl SectorStudy {
    /// Extremal probes of the base sampling, one row each.
    pub fn rows(&self) -> Vec<SectorRow> {
        self.report
            .per_mu
            .iter()
            .flat_map(|b| b.extremal.iter())
            .map(|pr| {
                let m = pr.m_family.map(|v| v.norm());
                SectorRow {
                    lambda_re: pr.point.lambda.re,
                    lambda_im: pr.point.lambda.im,
                    z_re: pr.point.z.re,
                    z_im: pr.point.z.im,
                    delta: pr.point.delta,
                    sigma: pr.point.sigma,
                    triangle_ratio: pr.triangle_ratio,
                    m0: m[0],
                    m1: m[1],
                    m2: m[2],
                    m3: m[3],
                    m4: m[4],
                    m5: m[5],
                    m6: m[6],
                }
            })
            .collect()
    }
}

fn rel_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Symbol extrema with κ chosen by the perturbation margin, plus a doubled-sample refinement.
pub fn run_sector_report(cfg: &Config) -> Result<SectorStudy> {
    let base = cfg.model.params()?;
    let spec = &cfg.sector;
    spec.validate()?;
    let mut reasons = Vec::new();
    let (kappa, margin, kappa_trail) = match choose_kappa(&base, spec) {
        Ok(c) => (c.kappa, Some(c.margin), c.trail),
        Err(StefanError::MarginNotReached { best, kappa }) => {
            reasons.push(format!("perturbation margin {best:.3} > 1/2 at the largest kappa {kappa}"));
            (kappa, None, Vec::new())
        }
        Err(e) => return Err(e),
    };
    let params = base.with_kappa(kappa);
    let report = probe_sector_bounds(&params, spec)?;
    let doubled = probe_sector_bounds(&params, &spec.doubled())?;
    let mut refinement_change = rel_change(report.min_triangle, doubled.min_triangle)
        .max(rel_change(report.min_m_ratio, doubled.min_m_ratio));
    for j in 0..7 {
        refinement_change = refinement_change.max(rel_change(report.sup_m[j], doubled.sup_m[j]));
    }
    reasons.extend(report.reasons.iter().cloned());
    if refinement_change > 0.1 {
        reasons.push(format!("extrema change by {refinement_change:.3} under doubling"));
    }
    Ok(SectorStudy {
        kappa,
        margin,
        kappa_trail,
        report,
        doubled,
        refinement_change,
        fail: !reasons.is_empty(),
        reasons,
    })
}

// ------------------------------------------------------------------- validate

/// Consistency of the two t = 0 conditions when δ > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceImplication {
    /// `W^{2−6/p}` norm of `σ(h(0) − [[cγ∂_y v₀]])` from the data
    pub direct: f64,
    /// the same quantity rebuilt from `g(0)`, `v₀`, `ρ₀` via the compatibility condition
    pub derived: f64,
    pub relative_gap: f64,
}

/// Rebuilds `σ(h(0) − [[cγ∂_y v₀]])` from the compatibility condition and compares.
pub fn trace_implication(params: &PhysicalParams, grids: &Grids, data: &DataTuple) -> Result<TraceImplication> {
    if params.delta <= 0.0 {
        return Err(StefanError::InvalidParam {
            name: "delta",
            reason: "the implication needs delta > 0".into(),
        });
    }
    let tang = grids.tangential();
    let nx = grids.n_x();
    let trace = data.v0.trace_plus();
    let rho_hat = tang.forward(data.rho0.as_slice().expect("contiguous"));
    let (ap, am) = (params.a_plus(), params.a_minus());
    let corr: Vec<Complex64> = rho_hat
        .iter()
        .zip(grids.xi.iter())
        .map(|(r, &xi)| {
            // (σ|ξ|²ρ₀)/δ − (a₊c₊ + a₋c₋)(1+|ξ|²)^{1/2}ρ₀
            r * (params.sigma * xi * xi / params.delta
                - (ap * params.c_plus + am * params.c_minus) * bessel_half(xi))
        })
        .collect();
    let corr = tang.inverse_real(&corr);
    let derived: Vec<f64> = (0..nx)
        .map(|j| params.sigma * ((data.g[[0, j]] - trace[j]) / params.delta - corr[j]))
        .collect();
    let jump = data.v0.jump(params.c_plus, params.c_minus);
    let direct: Vec<f64> = (0..nx).map(|j| params.sigma * (data.h[[0, j]] - jump[j])).collect();
    let axis = Axis1::torus(grids);
    let s = 2.0 - 6.0 / params.p;
    let dn = space_norm(&direct, &axis, s, params.p)?;
    let gap: Vec<f64> = direct.iter().zip(&derived).map(|(a, b)| a - b).collect();
    let gn = space_norm(&gap, &axis, s, params.p)?;
    Ok(TraceImplication {
        direct: dn,
        derived: space_norm(&derived, &axis, s, params.p)?,
        relative_gap: if dn > 0.0 { gn / dn } else { gn },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub delta: f64,
    pub sigma: f64,
    pub compat_residual: f64,
    pub sigma_trace_norm: Option<f64>,
    pub trace_implication: Option<TraceImplication>,
    pub source_tail: f64,
    pub residuals: InterfaceResiduals,
    pub norms: NormReport,
    pub fail: bool,
    pub reasons: Vec<String>,
}

/// One solve at the configured `(δ, σ)` with all a-posteriori checks.
pub fn run_validation(cfg: &Config) -> Result<ValidationReport> {
    let params = cfg.model.params()?;
    let grids = cfg.model.grids()?;
    cfg.contour.validate()?;
    cfg.sector.validate()?;
    let (data, compat) = make_compatible_data(&params, &grids, &cfg.model.seed_family.seeds(&grids))?;
    let (sol, _) = solve_full(&data, &params, &grids, &cfg.contour, &cfg.solver)?;
    let residuals = interface_residuals(&sol, &data, &params, &grids);
    let norms = norm_report(&sol, &data, &params, &grids)?;
    let implication = if params.delta > 0.0 {
        Some(trace_implication(&params, &grids, &data)?)
    } else {
        None
    };
    let tail = source_tail(&data);
    let mut reasons = Vec::new();
    let scale = data
        .g
        .iter()
        .chain(data.h.iter())
        .fold(1.0_f64, |m, v| m.max(v.abs()));
    if residuals.boundary > cfg.solver.tol_residual * scale || residuals.stefan > cfg.solver.tol_residual * scale {
        reasons.push(format!(
            "interface residuals ({:.3e}, {:.3e}) exceed {:.1e}",
            residuals.boundary, residuals.stefan, cfg.solver.tol_residual
        ));
    }
    if compat.residual > cfg.solver.tol_compat * scale {
        reasons.push(format!("compatibility residual {:.3e}", compat.residual));
    }
    if let Some(t) = implication {
        if t.relative_gap > 1e-8 {
            reasons.push(format!("trace condition not implied: relative gap {:.3e}", t.relative_gap));
        }
    }
    if tail > cfg.solver.y_truncation_tol {
        reasons.push(format!("f is {tail:.3e} of its maximum at Y_max"));
    }
    Ok(ValidationReport {
        delta: params.delta,
        sigma: params.sigma,
        compat_residual: compat.residual,
        sigma_trace_norm: compat.sigma_trace_norm,
        trace_implication: implication,
        source_tail: tail,
        residuals,
        norms,
        fail: !reasons.is_empty(),
        reasons,
    })
}

// ---------------------------------------------------------------- cross-check

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheckRow {
    pub delta: f64,
    pub sigma: f64,
    pub rho_rel_l2: f64,
    pub v_rel_l2: f64,
    pub fd_stefan_residual: f64,
    pub flag: RowFlag,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossCheckTable {
    pub rows: Vec<CrossCheckRow>,
    pub fail: bool,
    pub reasons: Vec<String>,
}

/// `L²(0,T; L²(torus))` norm of an interface field.
pub fn interface_l2(u: &Array2<f64>, grids: &Grids) -> f64 {
    let wt = trapezoid_weights(grids.t.as_slice().expect("contiguous"));
    let hx = grids.spec.l_x / grids.n_x() as f64;
    let mut s = 0.0;
    for (it, row) in u.outer_iter().enumerate() {
        s += wt[it] * hx * row.iter().map(|v| v * v).sum::<f64>();
    }
    s.sqrt()
}

/// Relative `L²` distances of `ρ` and `v` between two solutions, against `reference`.
pub fn relative_l2(sol: &SolutionTriple, reference: &SolutionTriple, grids: &Grids) -> (f64, f64) {
    let d = sol.difference(reference);
    let rel = |a: f64, b: f64| if b > 0.0 { a / b } else { a };
    (
        rel(interface_l2(&d.rho, grids), interface_l2(&reference.rho, grids)),
        rel(bulk_lp_norm(&d.v, grids, 2.0), bulk_lp_norm(&reference.v, grids, 2.0)),
    )
}

/// Spectral zero-trace solutions against the FD oracle on the two-mode zero-trace family.
pub fn run_cross_check(cfg: &Config) -> Result<CrossCheckTable> {
    let base = cfg.model.params()?;
    let grids = cfg.model.grids()?;
    let cc = &cfg.cross_check;
    let mus: Vec<(f64, f64)> = cc
        .values
        .iter()
        .flat_map(|&d| cc.values.iter().map(move |&s| (d, s)))
        .collect();
    let rows: Vec<CrossCheckRow> = mus
        .par_iter()
        .map(|&(delta, sigma)| {
            let run = || -> Result<(f64, f64, f64)> {
                let params = validate_params(base.with_mu(delta, sigma))?;
                let data = seeded_data(&params, &grids, SeedFamily::TwoModeZeroTrace)?;
                let sp = solve_zero_trace(&data, &params, &grids, &cfg.contour)?;
                let (fd, res) = fd_solve(&data, &params, &grids, cc.substeps)?;
                let (r, v) = relative_l2(&sp, &fd, &grids);
                Ok((r, v, res.stefan))
            };
            match run() {
                Ok((rho_rel_l2, v_rel_l2, fd_stefan_residual)) => {
                    let ok = rho_rel_l2 <= cc.tol_rho && v_rel_l2 <= cc.tol_v;
                    CrossCheckRow {
                        delta,
                        sigma,
                        rho_rel_l2,
                        v_rel_l2,
                        fd_stefan_residual,
                        flag: if ok { RowFlag::Ok } else { RowFlag::Fail },
                        note: String::new(),
                    }
                }
                Err(e) => CrossCheckRow {
                    delta,
                    sigma,
                    rho_rel_l2: f64::NAN,
                    v_rel_l2: f64::NAN,
                    fd_stefan_residual: f64::NAN,
                    flag: RowFlag::Fail,
                    note: e.to_string(),
                },
            }
        })
        .collect();
    let failed = rows.iter().filter(|r| r.flag == RowFlag::Fail).count();
    let reasons = if failed > 0 {
        vec![format!("{failed} rows outside ({:.0e}, {:.0e})", cc.tol_rho, cc.tol_v)]
    } else {
        Vec::new()
    };
    Ok(CrossCheckTable {
        rows,
        fail: failed > 0,
        reasons,
    })
}

// -------------------------------------------------------------------- output

/// Writes `rows` as CSV preceded by `# stefan-limits <table> schema v<N>`.
pub fn write_csv<T: Serialize>(path: &Path, table: &str, rows: &[T]) -> Result<()> {
    let mut file = File::create(path)?;
    writeln!(file, "# stefan-limits {table} schema v{CSV_SCHEMA_VERSION}")?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path)?;
    serde_json::to_writer_pretty(file, value)?;
    Ok(())
}

/// Subcommands of the driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Study {
    Uniformity,
    Limit,
    Sector,
    Validate,
    CrossCheck,
}

/// Files written by a study and whether any row or check failed.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutcome {
    pub files: Vec<PathBuf>,
    pub fail: bool,
    pub reasons: Vec<String>,
}

/// Runs `study` and writes its artifacts into `out`.
pub fn run_study(study: Study, cfg: &Config, out: &Path) -> Result<StudyOutcome> {
    std::fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut emit_csv = |name: &str, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let p = out.join(name);
        f(&p)?;
        files.push(p);
        Ok(())
    };
    let (fail, reasons) = match study {
        Study::Uniformity => {
            let t = run_uniformity_study(cfg)?;
            emit_csv("uniformity.csv", &|p| write_csv(p, "uniformity", &t.rows))?;
            emit_csv("uniformity_summary.json", &|p| write_json(p, &t))?;
            (t.fail, t.reasons)
        }
        Study::Limit => {
            let t = run_singular_limit(cfg)?;
            let stem = format!("limit_type{}", t.limit_type);
            emit_csv(&format!("{stem}.csv"), &|p| write_csv(p, "limit", &t.rows))?;
            emit_csv(&format!("{stem}_summary.json"), &|p| write_json(p, &t))?;
            (t.fail, t.reasons)
        }
        Study::Sector => {
            let s = run_sector_report(cfg)?;
            emit_csv("sector.csv", &|p| write_csv(p, "sector", &s.rows()))?;
            emit_csv("sector_summary.json", &|p| write_json(p, &s))?;
            (s.fail, s.reasons)
        }
        Study::Validate => {
            let v = run_validation(cfg)?;
            emit_csv("validate.json", &|p| write_json(p, &v))?;
            (v.fail, v.reasons)
        }
        Study::CrossCheck => {
            let t = run_cross_check(cfg)?;
            emit_csv("cross_check.csv", &|p| write_csv(p, "cross-check", &t.rows))?;
            (t.fail, t.reasons)
        }
    };
    Ok(StudyOutcome { files, fail, reasons })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequences_stay_in_the_parameter_box() {
        for t in 1..=5 {
            let b = LimitBlock {
                limit_type: t,
                ..LimitBlock::default()
            };
            let (mu0, seq) = limit_sequence(&b, 1.0).unwrap();
            assert_eq!(seq.len(), 7);
            for (d, s) in seq {
                assert!(d >= mu0.0 && s >= mu0.1 && d <= 1.0 && s <= 1.0);
            }
        }
        assert!(limit_sequence(&LimitBlock { limit_type: 6, ..LimitBlock::default() }, 1.0).is_err());
    }

    #[test]
    fn empty_config_is_the_default() {
        assert_eq!(Config::from_json("{}").unwrap(), Config::default());
        assert!(Config::from_json(r#"{"modle": {}}"#).is_err());
    }
}

//! Domain types, grids, parameter validation and the compatible-data factory.
//!
//! Tangential space is a periodic grid in one variable `x`; the two bulk
//! phases share one graded grid in the distance `r = |y|` from the interface,
//! clustered at `r = 0`. Time is a uniform grid `0 = t_0 < … < t_N = T`; index
//! 0 of every time series is the initial slice.

use ndarray::{Array1, Array2, Array3, Axis};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StefanError};
use crate::transform::Tangential;

/// Coefficient function `a(δ, σ)` in front of the interface extension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficient {
    Constant { value: f64 },
    /// `base + d_delta·δ + d_sigma·σ`
    Affine {
        base: f64,
        d_delta: f64,
        d_sigma: f64,
    },
}

impl Coefficient {
    pub const fn constant(value: f64) -> Self {
        Coefficient::Constant { value }
    }

    pub fn eval(&self, delta: f64, sigma: f64) -> f64 {
        match *self {
            Coefficient::Constant { value } => value,
            Coefficient::Affine {
                base,
                d_delta,
                d_sigma,
            } => base + d_delta * delta + d_sigma * sigma,
        }
    }
}

impl Default for Coefficient {
    fn default() -> Self {
        Coefficient::constant(1.0)
    }
}

/// Physical and numerical parameters of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub c_plus: f64,
    pub c_minus: f64,
    /// kinetic undercooling
    pub delta: f64,
    /// surface tension
    pub sigma: f64,
    /// spectral shift, ≥ 1
    pub kappa: f64,
    pub a_plus: Coefficient,
    pub a_minus: Coefficient,
    /// Lebesgue exponent, > 3
    pub p: f64,
    /// parameter box bound
    pub r_bound: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            c_plus: 1.0,
            c_minus: 1.0,
            delta: 0.0,
            sigma: 0.0,
            kappa: 1.0,
            a_plus: Coefficient::default(),
            a_minus: Coefficient::default(),
            p: 4.0,
            r_bound: 1.0,
        }
    }
}

impl PhysicalParams {
    pub fn a_plus(&self) -> f64 {
        self.a_plus.eval(self.delta, self.sigma)
    }

    pub fn a_minus(&self) -> f64 {
        self.a_minus.eval(self.delta, self.sigma)
    }

    /// Same parameters with `(δ, σ)` replaced.
    pub fn with_mu(&self, delta: f64, sigma: f64) -> Self {
        PhysicalParams {
            delta,
            sigma,
            ..*self
        }
    }

    pub fn with_kappa(&self, kappa: f64) -> Self {
        PhysicalParams { kappa, ..*self }
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> StefanError {
    StefanError::InvalidParam {
        name,
        reason: reason.into(),
    }
}

/// Checks every parameter invariant and returns the parameters unchanged.
///
/// The coefficient functions are probed on a 9×9 lattice of `[0,R]²` for
/// finiteness; continuity cannot be decided from samples.
pub fn validate_params(params: PhysicalParams) -> Result<PhysicalParams> {
    let finite_pos = |v: f64| v.is_finite() && v > 0.0;
    if !finite_pos(params.c_plus) {
        return Err(invalid("c_plus", format!("must be > 0, got {}", params.c_plus)));
    }
    if !finite_pos(params.c_minus) {
        return Err(invalid("c_minus", format!("must be > 0, got {}", params.c_minus)));
    }
    if !(params.kappa.is_finite() && params.kappa >= 1.0) {
        return Err(invalid("kappa", format!("must be >= 1, got {}", params.kappa)));
    }
    if !finite_pos(params.r_bound) {
        return Err(invalid("R", format!("must be > 0, got {}", params.r_bound)));
    }
    if !(params.delta.is_finite() && (0.0..=params.r_bound).contains(&params.delta)) {
        return Err(invalid(
            "delta",
            format!("must lie in [0, R={}], got {}", params.r_bound, params.delta),
        ));
    }
    if !(params.sigma.is_finite() && (0.0..=params.r_bound).contains(&params.sigma)) {
        return Err(invalid(
            "sigma",
            format!("must lie in [0, R={}], got {}", params.r_bound, params.sigma),
        ));
    }
    if !(params.p.is_finite() && params.p > 3.0) {
        return Err(invalid("p", format!("must be > 3, got {}", params.p)));
    }
    if !(params.a_plus.eval(0.0, 0.0) > 0.0) {
        return Err(invalid("a_plus", "a_plus(0,0) must be > 0"));
    }
    if !(params.a_minus.eval(0.0, 0.0) > 0.0) {
        return Err(invalid("a_minus", "a_minus(0,0) must be > 0"));
    }
    let n = 8;
    for i in 0..=n {
        for j in 0..=n {
            let d = params.r_bound * i as f64 / n as f64;
            let s = params.r_bound * j as f64 / n as f64;
            if !params.a_plus.eval(d, s).is_finite() {
                return Err(invalid("a_plus", format!("not finite at ({d}, {s})")));
            }
            if !params.a_minus.eval(d, s).is_finite() {
                return Err(invalid("a_minus", format!("not finite at ({d}, {s})")));
            }
        }
    }
    Ok(params)
}

/// Grid resolution and extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_x: usize,
    pub l_x: f64,
    pub y_max: f64,
    /// number of intervals of each half-line grid
    pub n_y: usize,
    /// ratio of consecutive y spacings, ≥ 1
    pub grading_ratio: f64,
    pub t_final: f64,
    /// number of time intervals
    pub n_t: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n_x: 16,
            l_x: 2.0 * std::f64::consts::PI,
            y_max: 8.0,
            n_y: 96,
            grading_ratio: 1.03,
            t_final: 1.0,
            n_t: 32,
        }
    }
}

/// Discretization of `x ∈ torus`, `r = |y| ∈ [0, Y_max]` and `t ∈ [0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    pub spec: GridSpec,
    /// `x_j = -L/2 + j·L/N`
    pub x: Array1<f64>,
    /// shared by both half-spaces; `y[0] = 0`, `y[last] = Y_max`
    pub y: Array1<f64>,
    /// uniform, `t[0] = 0`, `t[last] = T`
    pub t: Array1<f64>,
    /// tangential frequencies in FFT order
    pub xi: Array1<f64>,
}

impl Grids {
    pub fn new(spec: GridSpec) -> Result<Self> {
        if spec.n_x < 8 || spec.n_x % 2 != 0 {
            return Err(StefanError::InvalidGrid(format!(
                "N_x must be even and >= 8, got {}",
                spec.n_x
            )));
        }
        if !(spec.l_x.is_finite() && spec.l_x > 0.0) {
            return Err(StefanError::InvalidGrid("L_x must be > 0".into()));
        }
        if !(spec.y_max.is_finite() && spec.y_max > 0.0) {
            return Err(StefanError::InvalidGrid("Y_max must be > 0".into()));
        }
        if spec.n_y < 4 {
            return Err(StefanError::InvalidGrid("N_y must be >= 4".into()));
        }
        if !(spec.grading_ratio.is_finite() && spec.grading_ratio >= 1.0) {
            return Err(StefanError::InvalidGrid(
                "grading_ratio must be >= 1 (clustering at the interface)".into(),
            ));
        }
        if !(spec.t_final.is_finite() && spec.t_final > 0.0) {
            return Err(StefanError::InvalidGrid("T must be > 0".into()));
        }
        if spec.n_t < 2 {
            return Err(StefanError::InvalidGrid("N_t must be >= 2".into()));
        }
        let n = spec.n_x;
        let dx = spec.l_x / n as f64;
        let x = Array1::from_iter((0..n).map(|j| -0.5 * spec.l_x + j as f64 * dx));
        let xi = Array1::from_iter((0..n).map(|k| {
            let kk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
            2.0 * std::f64::consts::PI * kk / spec.l_x
        }));
        let r = spec.grading_ratio;
        let m = spec.n_y;
        let y = if (r - 1.0).abs() < 1e-14 {
            Array1::from_iter((0..=m).map(|k| spec.y_max * k as f64 / m as f64))
        } else {
            let denom = r.powi(m as i32) - 1.0;
            Array1::from_iter((0..=m).map(|k| spec.y_max * (r.powi(k as i32) - 1.0) / denom))
        };
        let dt = spec.t_final / spec.n_t as f64;
        let mut t = Array1::from_iter((0..=spec.n_t).map(|i| i as f64 * dt));
        t[spec.n_t] = spec.t_final;
        Ok(Grids { spec, x, y, t, xi })
    }

    pub fn n_x(&self) -> usize {
        self.x.len()
    }

    pub fn n_y(&self) -> usize {
        self.y.len()
    }

    pub fn n_t(&self) -> usize {
        self.t.len()
    }

    pub fn dt(&self) -> f64 {
        self.spec.t_final / self.spec.n_t as f64
    }

    pub fn tangential(&self) -> Tangential {
        Tangential::new(self.n_x())
    }

    /// Weights `(w0, w1, w2)` of the second-order one-sided derivative at r = 0.
    pub fn trace_weights(&self) -> [f64; 3] {
        one_sided_weights(self.y[1] - self.y[0], self.y[2] - self.y[1])
    }

    /// Second-order one-sided `∂_r` at `r = 0` of a profile on `y`.
    pub fn dr_trace<T>(&self, u0: T, u1: T, u2: T) -> T
    where
        T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T>,
    {
        let [w0, w1, w2] = self.trace_weights();
        u0 * w0 + u1 * w1 + u2 * w2
    }

    /// Second-order `∂_r` of a real profile at every node of `y`.
    pub fn dr_profile(&self, u: &[f64]) -> Vec<f64> {
        fd_derivative(self.y.as_slice().expect("contiguous"), u)
    }

    /// Second-order `∂_r²` at interior nodes, first-order at the ends.
    pub fn drr_profile(&self, u: &[f64]) -> Vec<f64> {
        let y = self.y.as_slice().expect("contiguous");
        let m = y.len();
        let mut out = vec![0.0; m];
        for k in 1..m - 1 {
            let [a, b, c] = laplacian_weights(y[k] - y[k - 1], y[k + 1] - y[k]);
            out[k] = a * u[k - 1] + b * u[k] + c * u[k + 1];
        }
        out[0] = out[1];
        out[m - 1] = out[m - 2];
        out
    }

    /// Trapezoid weights of the y grid.
    pub fn y_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.y.as_slice().expect("contiguous"))
    }
}

/// Second-order first derivative on a nonuniform grid, one-sided at the ends.
pub fn fd_derivative(y: &[f64], u: &[f64]) -> Vec<f64> {
    let m = y.len();
    let mut out = vec![0.0; m];
    let [a, b, c] = one_sided_weights(y[1] - y[0], y[2] - y[1]);
    out[0] = a * u[0] + b * u[1] + c * u[2];
    for k in 1..m - 1 {
        let hm = y[k] - y[k - 1];
        let hp = y[k + 1] - y[k];
        out[k] = -hp / (hm * (hm + hp)) * u[k - 1]
            + (hp - hm) / (hm * hp) * u[k]
            + hm / (hp * (hm + hp)) * u[k + 1];
    }
    let [a, b, c] = one_sided_weights(y[m - 1] - y[m - 2], y[m - 2] - y[m - 3]);
    out[m - 1] = -(a * u[m - 1] + b * u[m - 2] + c * u[m - 3]);
    out
}

/// Weights of `u'(0)` from nodes `0, h1, h1 + h2`.
pub fn one_sided_weights(h1: f64, h2: f64) -> [f64; 3] {
    let x1 = h1;
    let x2 = h1 + h2;
    [
        -(x1 + x2) / (x1 * x2),
        x2 / (x1 * (x2 - x1)),
        -x1 / (x2 * (x2 - x1)),
    ]
}

/// Three-point weights of `u''` on a nonuniform stencil.
pub fn laplacian_weights(hm: f64, hp: f64) -> [f64; 3] {
    [
        2.0 / (hm * (hm + hp)),
        -2.0 / (hm * hp),
        2.0 / (hp * (hm + hp)),
    ]
}

pub fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    for k in 0..n - 1 {
        let h = nodes[k + 1] - nodes[k];
        w[k] += 0.5 * h;
        w[k + 1] += 0.5 * h;
    }
    w
}

/// Values of both bulk phases at one instant, indexed `[x, r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BulkSlice {
    pub plus: Array2<f64>,
    pub minus: Array2<f64>,
}

impl BulkSlice {
    pub fn zeros(grids: &Grids) -> Self {
        let shape = (grids.n_x(), grids.n_y());
        BulkSlice {
            plus: Array2::zeros(shape),
            minus: Array2::zeros(shape),
        }
    }
}

/// A bulk field over time, indexed `[t, x, r]` on each side.
#[derive(Debug, Clone, PartialEq)]
pub struct BulkSeries {
    pub plus: Array3<f64>,
    pub minus: Array3<f64>,
}

impl BulkSeries {
    pub fn zeros(grids: &Grids) -> Self {
        let shape = (grids.n_t(), grids.n_x(), grids.n_y());
        BulkSeries {
            plus: Array3::zeros(shape),
            minus: Array3::zeros(shape),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.plus.iter().chain(self.minus.iter()).all(|v| *v == 0.0)
    }

    pub fn scaled_add(&mut self, alpha: f64, other: &BulkSeries) {
        self.plus.scaled_add(alpha, &other.plus);
        self.minus.scaled_add(alpha, &other.minus);
    }

    pub fn slice(&self, it: usize) -> BulkSlice {
        BulkSlice {
            plus: self.plus.index_axis(Axis(0), it).to_owned(),
            minus: self.minus.index_axis(Axis(0), it).to_owned(),
        }
    }
}

/// One-sided normal derivative traces `∂_y w(0±)` over `[t, x]`.
///
/// `minus` holds the derivative with respect to `y` (not `|y|`) at `0⁻`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalTraces {
    pub plus: Array2<f64>,
    pub minus: Array2<f64>,
}

impl NormalTraces {
    pub fn zeros(grids: &Grids) -> Self {
        NormalTraces {
            plus: Array2::zeros((grids.n_t(), grids.n_x())),
            minus: Array2::zeros((grids.n_t(), grids.n_x())),
        }
    }

    pub fn scaled_add(&mut self, alpha: f64, other: &NormalTraces) {
        self.plus.scaled_add(alpha, &other.plus);
        self.minus.scaled_add(alpha, &other.minus);
    }

    /// `c₊·plus − c₋·minus`
    pub fn jump(&self, c_plus: f64, c_minus: f64) -> JumpTrace {
        JumpTrace(&self.plus * c_plus - &self.minus * c_minus)
    }
}

/// Initial bulk field with its one-sided traces.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialBulk {
    pub values: BulkSlice,
    /// `∂_y v₀(0⁺)` per x node
    pub dy_plus: Array1<f64>,
    /// `∂_y v₀(0⁻)` per x node
    pub dy_minus: Array1<f64>,
}

impl InitialBulk {
    pub fn zeros(grids: &Grids) -> Self {
        InitialBulk {
            values: BulkSlice::zeros(grids),
            dy_plus: Array1::zeros(grids.n_x()),
            dy_minus: Array1::zeros(grids.n_x()),
        }
    }

    /// Builds the derivative traces by one-sided second-order differences.
    pub fn from_values(grids: &Grids, values: BulkSlice) -> Self {
        let nx = grids.n_x();
        let dy_plus = Array1::from_iter((0..nx).map(|j| {
            grids.dr_trace(values.plus[[j, 0]], values.plus[[j, 1]], values.plus[[j, 2]])
        }));
        let dy_minus = Array1::from_iter((0..nx).map(|j| {
            -grids.dr_trace(values.minus[[j, 0]], values.minus[[j, 1]], values.minus[[j, 2]])
        }));
        InitialBulk {
            values,
            dy_plus,
            dy_minus,
        }
    }

    pub fn trace_plus(&self) -> Array1<f64> {
        self.values.plus.column(0).to_owned()
    }

    pub fn trace_minus(&self) -> Array1<f64> {
        self.values.minus.column(0).to_owned()
    }

    /// `[[c γ∂_y v₀]] = c₊∂_y v₀(0⁺) − c₋∂_y v₀(0⁻)`
    pub fn jump(&self, c_plus: f64, c_minus: f64) -> Array1<f64> {
        &self.dy_plus * c_plus - &self.dy_minus * c_minus
    }
}

/// The inhomogeneities `(f, g, h, v₀, ρ₀)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTuple {
    pub f: BulkSeries,
    /// `[t, x]`
    pub g: Array2<f64>,
    /// `[t, x]`
    pub h: Array2<f64>,
    pub v0: InitialBulk,
    pub rho0: Array1<f64>,
}

impl DataTuple {
    pub fn zeros(grids: &Grids) -> Self {
        DataTuple {
            f: BulkSeries::zeros(grids),
            g: Array2::zeros((grids.n_t(), grids.n_x())),
            h: Array2::zeros((grids.n_t(), grids.n_x())),
            v0: InitialBulk::zeros(grids),
            rho0: Array1::zeros(grids.n_x()),
        }
    }

    pub fn check_shape(&self, grids: &Grids) -> Result<()> {
        let (nt, nx, ny) = (grids.n_t(), grids.n_x(), grids.n_y());
        let bulk = [nt, nx, ny];
        let ok = self.f.plus.shape() == bulk
            && self.f.minus.shape() == bulk
            && self.g.shape() == [nt, nx]
            && self.h.shape() == [nt, nx]
            && self.v0.values.plus.shape() == [nx, ny]
            && self.v0.values.minus.shape() == [nx, ny]
            && self.v0.dy_plus.len() == nx
            && self.v0.dy_minus.len() == nx
            && self.rho0.len() == nx;
        if !ok {
            return Err(StefanError::Shape("data tuple does not match the grids".into()));
        }
        let finite = self
            .f
            .plus
            .iter()
            .chain(self.f.minus.iter())
            .chain(self.g.iter())
            .chain(self.h.iter())
            .chain(self.v0.values.plus.iter())
            .chain(self.v0.values.minus.iter())
            .chain(self.v0.dy_plus.iter())
            .chain(self.v0.dy_minus.iter())
            .chain(self.rho0.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(StefanError::Shape("data tuple contains non-finite values".into()));
        }
        Ok(())
    }

    /// `α·self + β·other`, field by field.
    pub fn combine(&self, alpha: f64, other: &DataTuple, beta: f64) -> DataTuple {
        DataTuple {
            f: BulkSeries {
                plus: &self.f.plus * alpha + &other.f.plus * beta,
                minus: &self.f.minus * alpha + &other.f.minus * beta,
            },
            g: &self.g * alpha + &other.g * beta,
            h: &self.h * alpha + &other.h * beta,
            v0: InitialBulk {
                values: BulkSlice {
                    plus: &self.v0.values.plus * alpha + &other.v0.values.plus * beta,
                    minus: &self.v0.values.minus * alpha + &other.v0.values.minus * beta,
                },
                dy_plus: &self.v0.dy_plus * alpha + &other.v0.dy_plus * beta,
                dy_minus: &self.v0.dy_minus * alpha + &other.v0.dy_minus * beta,
            },
            rho0: &self.rho0 * alpha + &other.rho0 * beta,
        }
    }

    pub fn scaled(&self, alpha: f64) -> DataTuple {
        self.combine(alpha, self, 0.0)
    }
}

/// `(v, ρ, ρ_E)` together with `∂_tρ` and the normal-derivative traces.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionTriple {
    pub v: BulkSeries,
    /// `[t, x]`
    pub rho: Array2<f64>,
    /// `∂_tρ` on `[t, x]`
    pub rho_t: Array2<f64>,
    pub rho_e: BulkSeries,
    pub v_dy: NormalTraces,
    pub rho_e_dy: NormalTraces,
}

impl SolutionTriple {
    pub fn zeros(grids: &Grids) -> Self {
        SolutionTriple {
            v: BulkSeries::zeros(grids),
            rho: Array2::zeros((grids.n_t(), grids.n_x())),
            rho_t: Array2::zeros((grids.n_t(), grids.n_x())),
            rho_e: BulkSeries::zeros(grids),
            v_dy: NormalTraces::zeros(grids),
            rho_e_dy: NormalTraces::zeros(grids),
        }
    }

    pub fn scaled_add(&mut self, alpha: f64, other: &SolutionTriple) {
        self.v.scaled_add(alpha, &other.v);
        self.rho.scaled_add(alpha, &other.rho);
        self.rho_t.scaled_add(alpha, &other.rho_t);
        self.rho_e.scaled_add(alpha, &other.rho_e);
        self.v_dy.scaled_add(alpha, &other.v_dy);
        self.rho_e_dy.scaled_add(alpha, &other.rho_e_dy);
    }

    pub fn difference(&self, other: &SolutionTriple) -> SolutionTriple {
        let mut d = self.clone();
        d.scaled_add(-1.0, other);
        d
    }

    /// Largest deviation of the extension traces from `ρ`.
    pub fn trace_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for it in 0..self.rho.nrows() {
            for j in 0..self.rho.ncols() {
                let r = self.rho[[it, j]];
                worst = worst
                    .max((self.rho_e.plus[[it, j, 0]] - r).abs())
                    .max((self.rho_e.minus[[it, j, 0]] - r).abs());
            }
        }
        worst
    }
}

/// `c₊γ∂_y w⁺ − c₋γ∂_y w⁻` on `[t, x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpTrace(pub Array2<f64>);

/// Jump of the weighted normal derivatives of a gridded bulk field.
pub fn jump_trace(w: &BulkSeries, grids: &Grids, params: &PhysicalParams) -> Result<JumpTrace> {
    let bulk = [grids.n_t(), grids.n_x(), grids.n_y()];
    if w.plus.shape() != bulk || w.minus.shape() != bulk {
        return Err(StefanError::Shape(format!(
            "bulk field has shape {:?}/{:?}, grid is {:?}",
            w.plus.shape(),
            w.minus.shape(),
            bulk
        )));
    }
    Ok(normal_traces(w, grids).jump(params.c_plus, params.c_minus))
}

/// One-sided second-order `∂_y` traces of a gridded bulk field.
pub fn normal_traces(w: &BulkSeries, grids: &Grids) -> NormalTraces {
    let (nt, nx) = (grids.n_t(), grids.n_x());
    let mut out = NormalTraces::zeros(grids);
    for it in 0..nt {
        for j in 0..nx {
            out.plus[[it, j]] =
                grids.dr_trace(w.plus[[it, j, 0]], w.plus[[it, j, 1]], w.plus[[it, j, 2]]);
            out.minus[[it, j]] =
                -grids.dr_trace(w.minus[[it, j, 0]], w.minus[[it, j, 1]], w.minus[[it, j, 2]]);
        }
    }
    out
}

/// Built-in seed families for the data factory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeedFamily {
    /// everything zero
    Zero,
    /// `h = t e^{-t} cos(k₁x)`, all else zero
    SingleModeH,
    /// zero-trace `(f, g, h)` on two tangential modes, zero initial values
    TwoModeZeroTrace,
    /// full data on two tangential modes with nonzero `v₀`, `ρ₀`
    #[default]
    Smooth,
}

/// Seeds for [`make_compatible_data`]: everything except the compatible `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeParts {
    pub f: BulkSeries,
    pub g_free: Array2<f64>,
    pub h: Array2<f64>,
    pub v0: InitialBulk,
    pub rho0: Array1<f64>,
}

impl FreeParts {
    pub fn zeros(grids: &Grids) -> Self {
        FreeParts {
            f: BulkSeries::zeros(grids),
            g_free: Array2::zeros((grids.n_t(), grids.n_x())),
            h: Array2::zeros((grids.n_t(), grids.n_x())),
            v0: InitialBulk::zeros(grids),
            rho0: Array1::zeros(grids.n_x()),
        }
    }
}

impl SeedFamily {
    /// Seeds on `grids`; frequencies are the first two nonzero grid modes.
    pub fn seeds(&self, grids: &Grids) -> FreeParts {
        let mut out = FreeParts::zeros(grids);
        let k1 = grids.xi[1];
        let k2 = grids.xi[2];
        let (nt, nx, ny) = (grids.n_t(), grids.n_x(), grids.n_y());
        match self {
            SeedFamily::Zero => {}
            SeedFamily::SingleModeH => {
                for it in 0..nt {
                    let t = grids.t[it];
                    for j in 0..nx {
                        out.h[[it, j]] = t * (-t).exp() * (k1 * grids.x[j]).cos();
                    }
                }
            }
            SeedFamily::TwoModeZeroTrace => {
                for it in 0..nt {
                    let t = grids.t[it];
                    for j in 0..nx {
                        let x = grids.x[j];
                        out.h[[it, j]] =
                            t * (-t).exp() * ((k1 * x).cos() + 0.5 * (k2 * x).sin());
                        out.g_free[[it, j]] =
                            t * t * (-t).exp() * (0.3 * (k1 * x).cos() - 0.2 * (k2 * x).cos());
                        for k in 0..ny {
                            let r = grids.y[k];
                            let prof = r * (-r * r).exp();
                            out.f.plus[[it, j, k]] = 0.4 * t * (-2.0 * t).exp() * prof * (k1 * x).cos();
                            out.f.minus[[it, j, k]] =
                                -0.2 * t * (-2.0 * t).exp() * prof * (k2 * x).sin();
                        }
                    }
                }
            }
            SeedFamily::Smooth => {
                let (ap, am) = (0.5, -0.3);
                let phi = |x: f64| 0.4 * (k1 * x).cos() + 0.1 * (k2 * x).sin();
                for j in 0..nx {
                    let x = grids.x[j];
                    out.rho0[j] = 0.5 * (k1 * x).cos() + 0.2 * (k2 * x).cos();
                    for k in 0..ny {
                        let r = grids.y[k];
                        let e = (-r * r).exp();
                        out.v0.values.plus[[j, k]] = phi(x) * (1.0 + ap * r) * e;
                        out.v0.values.minus[[j, k]] = phi(x) * (1.0 + am * r) * e;
                    }
                    // analytic traces: ∂_r[(1 + a r)e^{-r²}] at 0 is a; ∂_y = -∂_r below.
                    out.v0.dy_plus[j] = ap * phi(x);
                    out.v0.dy_minus[j] = -am * phi(x);
                }
                for it in 0..nt {
                    let t = grids.t[it];
                    for j in 0..nx {
                        let x = grids.x[j];
                        out.h[[it, j]] =
                            (-t).exp() * (0.2 * (k1 * x).cos() + 0.1 * (k2 * x).cos());
                        out.g_free[[it, j]] = t * (-t).exp() * 0.2 * (k2 * x).cos();
                        for k in 0..ny {
                            let r = grids.y[k];
                            let e = (-r * r).exp();
                            out.f.plus[[it, j, k]] = 0.1 * (1.0 - (-t).exp()) * e * (k1 * x).cos();
                            out.f.minus[[it, j, k]] = 0.05 * t * e * (k2 * x).sin();
                        }
                    }
                }
            }
        }
        out
    }
}

/// Diagnostics of the compatibility construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompatReport {
    /// max over x of the (assum b) residual at t = 0
    pub residual: f64,
    /// `W^{2-6/p}` norm of `σ(h(0) − [[cγ∂_y v₀]])` when δ = 0
    pub sigma_trace_norm: Option<f64>,
}

/// Per-mode multiplier `(1 + |ξ|²)^{1/2}`.
pub fn bessel_half(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// The t = 0 combination `γv₀ − σΔ_xρ₀ + δ(h(0) − [[cγ∂_y(v₀ − a e^{−|y|(1−Δ_x)^{1/2}}ρ₀)]])`.
///
/// `trace` is the interface value of `v₀` used for `γv₀`.
pub fn compatibility_functional(
    params: &PhysicalParams,
    grids: &Grids,
    trace: &Array1<f64>,
    h0: &Array1<f64>,
    v0: &InitialBulk,
    rho0: &Array1<f64>,
) -> Array1<f64> {
    let tang = grids.tangential();
    let (ap, am) = (params.a_plus(), params.a_minus());
    let jump_v0 = v0.jump(params.c_plus, params.c_minus);
    let rho_hat = tang.forward(rho0.as_slice().expect("contiguous"));
    // −σΔ_x ρ₀ and the a-term, per mode
    let lap_term: Vec<Complex64> = rho_hat
        .iter()
        .zip(grids.xi.iter())
        .map(|(r, &xi)| r * (params.sigma * xi * xi))
        .collect();
    // [[c ∂_y(a e^{−|y|B}ρ₀)]] = −(a₊c₊ + a₋c₋) B ρ₀
    let a_term: Vec<Complex64> = rho_hat
        .iter()
        .zip(grids.xi.iter())
        .map(|(r, &xi)| r * (-(ap * params.c_plus + am * params.c_minus) * bessel_half(xi)))
        .collect();
    let lap = tang.inverse_real(&lap_term);
    let ajump = tang.inverse_real(&a_term);
    Array1::from_iter((0..grids.n_x()).map(|j| {
        trace[j] + lap[j] + params.delta * (h0[j] - (jump_v0[j] - ajump[j]))
    }))
}

/// Closes the seeds into a tuple satisfying the t = 0 compatibility condition.
///
/// `g = g_free + e^{-t} G₀` with `G₀` the compatibility functional, so the
/// condition holds exactly at `t = 0` whenever `g_free(0) = 0`.
pub fn make_compatible_data(
    params: &PhysicalParams,
    grids: &Grids,
    free: &FreeParts,
) -> Result<(DataTuple, CompatReport)> {
    let nx = grids.n_x();
    let scale = free
        .g_free
        .iter()
        .chain(free.h.iter())
        .chain(free.rho0.iter())
        .chain(free.v0.values.plus.iter())
        .fold(1.0_f64, |m, v| m.max(v.abs()));
    if free.g_free.row(0).iter().any(|v| v.abs() > 1e-12 * scale) {
        return Err(StefanError::Incompatible(
            "g_free must vanish at t = 0".into(),
        ));
    }
    let tp = free.v0.trace_plus();
    let tm = free.v0.trace_minus();
    let trace_gap = tp
        .iter()
        .zip(tm.iter())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    if trace_gap > 1e-10 * scale {
        return Err(StefanError::Incompatible(format!(
            "one-sided traces of v0 differ by {trace_gap:.3e}; the interface condition forces them equal"
        )));
    }
    let h0 = free.h.row(0).to_owned();
    let g0 = compatibility_functional(params, grids, &tp, &h0, &free.v0, &free.rho0);
    let mut g = free.g_free.clone();
    for it in 0..grids.n_t() {
        let damp = (-grids.t[it]).exp();
        for j in 0..nx {
            g[[it, j]] += damp * g0[j];
        }
    }
    g.row_mut(0).assign(&g0);
    let data = DataTuple {
        f: free.f.clone(),
        g,
        h: free.h.clone(),
        v0: free.v0.clone(),
        rho0: free.rho0.clone(),
    };
    let residual = compatibility_residual(params, grids, &data);
    let sigma_trace_norm = if params.delta == 0.0 {
        let jump = data.v0.jump(params.c_plus, params.c_minus);
        let w = Array1::from_iter((0..nx).map(|j| params.sigma * (h0[j] - jump[j])));
        Some(crate::norms::space_norm(
            w.as_slice().expect("contiguous"),
            &crate::norms::Axis1::torus(grids),
            2.0 - 6.0 / params.p,
            params.p,
        )?)
    } else {
        None
    };
    Ok((
        data,
        CompatReport {
            residual,
            sigma_trace_norm,
        },
    ))
}

/// Max over x and both sides of the t = 0 compatibility residual.
pub fn compatibility_residual(params: &PhysicalParams, grids: &Grids, data: &DataTuple) -> f64 {
    let h0 = data.h.row(0).to_owned();
    let mut worst: f64 = 0.0;
    for trace in [data.v0.trace_plus(), data.v0.trace_minus()] {
        let lhs = compatibility_functional(params, grids, &trace, &h0, &data.v0, &data.rho0);
        for j in 0..grids.n_x() {
            worst = worst.max((lhs[j] - data.g[[0, j]]).abs());
        }
    }
    worst
}

//! Numerical laboratory for the linearized two-phase Stefan problem with
//! surface tension and kinetic undercooling.
//!
//! The crate evaluates the Fourier–Laplace solution formulas of the flat
//! interface problem, checks the symbol bounds behind its uniform maximal
//! regularity estimate by sampling, and measures the singular limits
//! `(δ, σ) → (δ₀, σ₀)` numerically.

pub mod error;
pub mod experiments;
pub mod model;
pub mod mol;
pub mod norms;
pub mod oracle;
pub mod solver;
pub mod symbols;
pub mod transform;

pub use error::{Result, StefanError};
pub use model::{
    jump_trace, make_compatible_data, validate_params, Coefficient, DataTuple, GridSpec, Grids,
    PhysicalParams, SeedFamily, SolutionTriple,
};

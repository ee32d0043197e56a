//! Polyhomogeneous boundary expansions and finite-part integration.

mod expansion;
mod finite_part;
mod geometry;

pub use expansion::{
    cusp_basis, fit_boundary_expansion, funnel_basis, Anchor, Order, PhgExpansion, PhgTerm,
    MAX_LOG_POWER,
};
pub use finite_part::{
    finite_part_hadamard, finite_part_hadamard_halves, finite_part_riesz, model_integral, DivergentTerm, EndChart,
    HadamardOptions, Integrand, Method, RenormalizedValue, RieszOptions,
};
pub use geometry::{
    area_multiplier, construct_area_prescribing_factor, renormalized_area, renormalized_area_geodesic, renormalized_integral_geodesic,
    renormalized_curvature_integral, renormalized_integral, AreaOptions, AreaPrescription,
    CurvatureIntegral, GaussBonnetWarning, GEODESIC_TOL,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenormError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("ill-conditioned fit: {0}")]
    Conditioning(String),
    #[error("unsupported model: {0}")]
    Model(String),
    #[error("estimated error {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    Accuracy { estimate: f64, tolerance: f64 },
    #[error("target {target} unreachable: {reason}")]
    Range { target: f64, reason: String },
}

//! Determinant of the Laplacian on cylinders: conformal variation (Polyakov)
//! along flows and in closed form, Selberg-zeta baselines for hyperbolic
//! metrics, and the heat-trace route to `log det`.

mod heat;
mod polyakov;
mod selberg;
mod special;

pub use heat::{
    heat_coefficients, logdet_from_heat_trace, renormalized_zeta, renormalized_zeta_derivative_at_zero,
    EstimatedValue, HeatCoefficients, HeatTraceModel, TRUNCATION_TOL,
};
pub use polyakov::{
    check_admissible, integrate_polyakov_along_flow, polyakov_increment_closed_form,
    polyakov_increment_closed_form_trusted, polyakov_rate, polyakov_rate_trusted,
    PolyakovLedger, ADMISSIBILITY_TOL, INCREMENT_TOL, NORMALIZATION_TOL,
};
pub use selberg::{
    det_from_selberg, det_hyperbolic, selberg_zeta, selberg_zeta_derivative, selberg_zeta_truncated,
    CuspPrefactor, LengthSpectrum, SelbergParams, SelbergValue, TAIL_TOL,
};

pub use special::{
    barnes_g, barnes_gamma2, gamma_log, ln_barnes_g, riemann_zeta_with_derivative,
    zeta_prime_minus_one, EULER_GAMMA,
};

use thiserror::Error;

use crate::renorm::RenormError;
use crate::surface::Side;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeterminantError {
    #[error("argument outside the domain: {0}")]
    Domain(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("heat trace samples: {0}")]
    Samples(String),
    #[error("quadrature or truncation error estimate {estimate:e} above tolerance")]
    Truncation { estimate: f64 },
    #[error("end {side:?} has curvature {curvature}, only -2 is supported")]
    UnsupportedNormalization { side: Side, curvature: f64 },
    #[error("variation is not O(x^2) at the {side:?} end (linear coefficient {linear_coefficient:e})")]
    Admissibility { side: Side, linear_coefficient: f64 },
    #[error("run does not satisfy the monotonicity hypotheses: {0}")]
    Hypothesis(String),
    #[error("negative log det increment {rate:e} at t = {t}")]
    NegativeIncrement { t: f64, rate: f64 },
    #[error(transparent)]
    Renorm(#[from] RenormError),
}

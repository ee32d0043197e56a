//! Normalized Ricci flow `d omega/dt = C - R` written as a scalar
//! degenerate parabolic equation on the compactified grid.

mod laws;
mod monitor;
mod stepper;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use laws::{asymptotic_curvature, predicted_renormalized_area};
pub use monitor::{convergence_report, sandwich_constants};
pub use stepper::{advance, boundary_ode_step, explicit_dt_limit, rhs, stiffness_bound, Stepper};

use crate::renorm::{renormalized_area, renormalized_area_geodesic, RenormError, RenormalizedValue};
use crate::surface::{
    laplacian_apply, scalar_curvature, ConformalFactor, ConformalSurface, Side, SurfaceError,
};

/// Curvature magnitude treated as a blow-up.
pub const BLOW_UP_CURVATURE: f64 = 1e6;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("invalid flow configuration: {0}")]
    Config(String),
    #[error("time step {dt} exceeds the explicit stability limit {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("curvature blew up at t = {t}")]
    BlowUp { t: f64, state: Box<FlowState> },
    #[error("asymptotic curvature is singular by t = {t}")]
    SingularTime { t: f64 },
    #[error("renormalized average curvature is undefined: renormalized area vanishes")]
    UndefinedAverage,
    #[error(transparent)]
    Renorm(#[from] RenormError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// Policy for the constant `C` in `R_t - C`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Normalization {
    Fixed(f64),
    /// `4 pi chi / ^R Area_0`.
    RenormalizedAverage,
    /// The asymptotic curvature `r_i` of one end, which then stays constant.
    AsymptoticCurvature(Side),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub normalization: Normalization,
    pub dt: f64,
    pub t_end: f64,
    pub stepper: Stepper,
    /// The run stops once `sup |R - C|` drops to this value. Zero runs to
    /// `t_end`.
    pub convergence_threshold: f64,
    /// Keep every k-th state (the first and last are always kept).
    pub record_every: usize,
    /// The first steps grow geometrically, by `ramp_growth` per step, from
    /// `dt / 2^startup_ramp`, so the stiff start-up transient is resolved.
    pub startup_ramp: u32,
    /// Step growth factor during the start-up ramp. Close to 1 keeps time
    /// integrals along the run (such as the Polyakov ledger) accurate
    /// through the transient.
    pub ramp_growth: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            normalization: Normalization::Fixed(-2.0),
            dt: 5e-3,
            t_end: 20.0,
            stepper: Stepper::Imex,
            convergence_threshold: 1e-8,
            record_every: 1,
            startup_ramp: 8,
            ramp_growth: 1.05,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(FlowError::Config(format!("dt must be positive (got {})", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(FlowError::Config(format!("t_end must be nonnegative (got {})", self.t_end)));
        }
        if !(self.convergence_threshold >= 0.0) {
            return Err(FlowError::Config("convergence threshold must be nonnegative".into()));
        }
        if !(self.ramp_growth > 1.0 && self.ramp_growth.is_finite()) {
            return Err(FlowError::Config(format!("ramp_growth must exceed 1 (got {})", self.ramp_growth)));
        }
        if self.record_every == 0 {
            return Err(FlowError::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub t: f64,
    pub omega: ConformalFactor,
    /// `scalar_curvature(surface, omega)`.
    pub curvature: Vec<f64>,
    /// `sup |R - C|`.
    pub sup_deviation: f64,
    /// Renormalized area, taken with totally geodesic funnel ends.
    pub area: RenormalizedValue,
}

impl FlowState {
    pub fn new(surface: &ConformalSurface, t: f64, omega: ConformalFactor, c: f64) -> Result<Self, FlowError> {
        omega.check_len(surface)?;
        let curvature = scalar_curvature(surface, &omega);
        let sup_deviation = sup_dev(&curvature, c);
        let area = renormalized_area_geodesic(surface, &omega)?;
        Ok(Self { t, omega, curvature, sup_deviation, area })
    }

    /// `e^{-omega_i} r_i(0)` at the end.
    pub fn end_curvature(&self, side: Side) -> f64 {
        let n = self.curvature.len() - 1;
        match side {
            Side::Left => self.curvature[0],
            Side::Right => self.curvature[n],
        }
    }
}

fn sup_dev(r: &[f64], c: f64) -> f64 {
    r.iter().map(|v| (v - c).abs()).fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) })
}

pub fn normalization_constant(
    surface: &ConformalSurface,
    omega: &ConformalFactor,
    choice: Normalization,
) -> Result<f64, FlowError> {
    match choice {
        Normalization::Fixed(c) => Ok(c),
        Normalization::RenormalizedAverage => {
            let area = renormalized_area(surface, omega)?.finite_part;
            if area.abs() < 1e-8 {
                return Err(FlowError::UndefinedAverage);
            }
            // 4 pi chi over the full area, i.e. 2 chi over the per-angle area.
            Ok(2.0 * surface.euler_characteristic as f64 / area)
        }
        Normalization::AsymptoticCurvature(side) => {
            Ok((-omega.boundary_value(side)).exp() * surface.end(side).curvature_asymptote)
        }
    }
}

/// Advances the state by `dt`; a blow-up carries the last valid state.
pub fn step(
    surface: &ConformalSurface,
    state: &FlowState,
    c: f64,
    dt: f64,
    stepper: Stepper,
) -> Result<FlowState, FlowError> {
    let next = advance(surface, &state.omega.omega, c, dt, stepper)?;
    let blow_up = || FlowError::BlowUp { t: state.t + dt, state: Box::new(state.clone()) };
    if next.iter().any(|w| !w.is_finite()) {
        return Err(blow_up());
    }
    let omega = ConformalFactor::new(next);
    let r = scalar_curvature(surface, &omega);
    if r.iter().any(|v| !v.is_finite() || v.abs() > BLOW_UP_CURVATURE) {
        return Err(blow_up());
    }
    FlowState::new(surface, state.t + dt, omega, c)
}

/// Recorded states of one run together with the constant `C` it used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub normalization: f64,
    pub stepper: Stepper,
    pub states: Vec<FlowState>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Slope of `log sup |R - C|` over the final two decades of decay.
    pub fitted_rate: Option<f64>,
    /// Lower constant of `C_low e^{C t} <= R - C <= K e^{C t}`.
    pub c_low: f64,
    pub k_high: f64,
    pub converged: bool,
    pub final_sup_deviation: f64,
}

pub fn run_flow(
    surface: &ConformalSurface,
    omega0: &ConformalFactor,
    config: &FlowConfig,
) -> Result<(Trajectory, ConvergenceReport), FlowError> {
    config.validate()?;
    let c = normalization_constant(surface, omega0, config.normalization)?;
    let mut state = FlowState::new(surface, 0.0, omega0.clone(), c)?;
    let mut states = vec![state.clone()];
    let mut k = 0;
    let mut h = config.dt / 2f64.powi(config.startup_ramp as i32);
    let t_stop = config.t_end - 1e-9 * config.dt;
    while state.sup_deviation > config.convergence_threshold && state.t < t_stop {
        let dt = h.min(config.t_end - state.t);
        state = step(surface, &state, c, dt, config.stepper)?;
        h = (config.ramp_growth * h).min(config.dt);
        k += 1;
        if k % config.record_every == 0 {
            states.push(state.clone());
        }
    }
    if k % config.record_every != 0 {
        states.push(state);
    }
    let traj = Trajectory { normalization: c, stepper: config.stepper, states };
    let report = convergence_report(&traj, config.convergence_threshold);
    Ok((traj, report))
}

/// Max over interior nodes of `|dR/dt - (-Delta R + R (R - C))|` with
/// three-point time differences.
pub fn curvature_evolution_residual(surface: &ConformalSurface, traj: &Trajectory) -> Result<f64, FlowError> {
    let s = &traj.states;
    if s.len() < 3 {
        return Err(FlowError::Config("residual needs at least three states".into()));
    }
    let c = traj.normalization;
    let n = surface.intervals();
    let mut worst = 0.0f64;
    for w in s.windows(3) {
        // Three-point derivative, second order on uneven spacing.
        let (h1, h2) = (w[1].t - w[0].t, w[2].t - w[1].t);
        let c0 = -h2 / (h1 * (h1 + h2));
        let c1 = (h2 - h1) / (h1 * h2);
        let c2 = h1 / (h2 * (h1 + h2));
        let lr = laplacian_apply(surface, &w[1].omega, &w[1].curvature);
        for i in 1..n {
            let r = w[1].curvature[i];
            let dr = c0 * w[0].curvature[i] + c1 * r + c2 * w[2].curvature[i];
            worst = worst.max((dr - (-lr[i] + r * (r - c))).abs());
        }
    }
    Ok(worst)
}

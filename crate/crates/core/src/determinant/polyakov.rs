use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::DeterminantError;
use crate::flow::Trajectory;
use crate::renorm::{renormalized_area_geodesic, renormalized_integral_geodesic};
use crate::surface::{scalar_curvature, ConformalFactor, ConformalSurface, Side};

/// Tolerance on the linear coefficient `c` in `u - u_i = c x + O(x^2)` for a
/// variation to count as admissible, relative to `1 + sup |u|`.
pub const ADMISSIBILITY_TOL: f64 = 1e-4;

/// Lower bound accepted for a Polyakov increment along the flow.
pub const INCREMENT_TOL: f64 = 1e-10;

/// Least-squares `c` in `u_j - u_b = c x_j + d x_j^2` over the four nodes
/// next to the face.
fn linear_coefficient(surface: &ConformalSurface, u: &[f64], side: Side) -> f64 {
    let n = surface.intervals();
    let x = surface.bdf(side);
    let (b, idx): (usize, Vec<usize>) = match side {
        Side::Left => (0, (1..=4).collect()),
        Side::Right => (n, (n - 4..n).collect()),
    };
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for j in idx {
        let (p, q, y) = (x[j], x[j] * x[j], u[j] - u[b]);
        s11 += p * p;
        s12 += p * q;
        s22 += q * q;
        r1 += p * y;
        r2 += q * y;
    }
    (r1 * s22 - r2 * s12) / (s11 * s22 - s12 * s12)
}

/// Checks `u = u_i + O(x_i^2)` at both ends.
pub fn check_admissible(surface: &ConformalSurface, u: &[f64]) -> Result<(), DeterminantError> {
    let scale = 1.0 + u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for side in [Side::Left, Side::Right] {
        let c = linear_coefficient(surface, u, side);
        if !(c.abs() <= ADMISSIBILITY_TOL * scale) {
            return Err(DeterminantError::Admissibility { side, linear_coefficient: c });
        }
    }
    Ok(())
}

fn check_len(surface: &ConformalSurface, u: &[f64]) -> Result<(), DeterminantError> {
    if u.len() != surface.intervals() + 1 {
        return Err(DeterminantError::Domain(format!(
            "field has {} nodes, grid has {}",
            u.len(),
            surface.intervals() + 1
        )));
    }
    Ok(())
}

/// `d/dtau log det Delta` for `g = e^{omega} g_0` moving with `omega'`:
/// `-(1/24 pi) ^R int omega' R dvol`, plus `d/dtau log Area` when the area
/// is finite. Integrals over the surface include the angular `2 pi`.
pub fn polyakov_rate(
    surface: &ConformalSurface,
    omega: &ConformalFactor,
    omega_dot: &[f64],
    finite_area: bool,
) -> Result<f64, DeterminantError> {
    check_len(surface, omega_dot)?;
    check_admissible(surface, omega_dot)?;
    polyakov_rate_trusted(surface, omega, omega_dot, finite_area)
}

/// [`polyakov_rate`] without the end fit of `omega'`. For variations that are
/// admissible by construction, such as the velocity of the flow: its
/// end corrections travel toward the faces as fronts in `log x`, which a
/// fit over the last few nodes cannot resolve.
pub fn polyakov_rate_trusted(
    surface: &ConformalSurface,
    omega: &ConformalFactor,
    omega_dot: &[f64],
    finite_area: bool,
) -> Result<f64, DeterminantError> {
    check_len(surface, omega_dot)?;
    if finite_area != surface.finite_area() {
        return Err(DeterminantError::Domain("finite_area does not match the surface ends".into()));
    }
    let r = scalar_curvature(surface, omega);
    let u: Vec<f64> = omega_dot.iter().zip(&r).map(|(w, r)| w * r).collect();
    let curvature_term = TAU * renormalized_integral_geodesic(surface, omega, &u)?.finite_part;
    let mut rate = -curvature_term / (24.0 * PI);
    if finite_area {
        let moved = renormalized_integral_geodesic(surface, omega, omega_dot)?.finite_part;
        rate += moved / renormalized_area_geodesic(surface, omega)?.finite_part;
    }
    Ok(rate)
}

/// `int |grad u|^2 dvol` per unit angle, `sum a_{i+1/2} (u_{i+1} - u_i)^2 / h`.
fn dirichlet_energy(surface: &ConformalSurface, u: &[f64]) -> f64 {
    let h = surface.h();
    surface
        .a_half()
        .iter()
        .zip(u.windows(2))
        .map(|(a, w)| a * (w[1] - w[0]).powi(2))
        .sum::<f64>()
        / h
}

/// `log det Delta_{e^{omega} g_0} - log det Delta_{g_0}` with
/// `g_0 = e^{background}` times the chart metric. For infinite area
/// `omega = omega_0 + omega~` with `omega_0` constant and `omega~ = O(x^2)`, and
/// `F = -(chi/6) omega_0 - (1/24 pi) int (omega~ R_0 + |grad omega~|^2 / 2) dvol_0`.
/// For finite area the log-area change is added and `omega` is used whole.
pub fn polyakov_increment_closed_form(
    surface: &ConformalSurface,
    background: &ConformalFactor,
    omega: &ConformalFactor,
) -> Result<f64, DeterminantError> {
    closed_form(surface, background, omega, true)
}

/// [`polyakov_increment_closed_form`] without the end fit, for differences
/// of flowed factors (see [`polyakov_rate_trusted`]).
pub fn polyakov_increment_closed_form_trusted(
    surface: &ConformalSurface,
    background: &ConformalFactor,
    omega: &ConformalFactor,
) -> Result<f64, DeterminantError> {
    closed_form(surface, background, omega, false)
}

fn closed_form(
    surface: &ConformalSurface,
    background: &ConformalFactor,
    omega: &ConformalFactor,
    checked: bool,
) -> Result<f64, DeterminantError> {
    check_len(surface, &background.omega)?;
    check_len(surface, &omega.omega)?;
    let r0 = scalar_curvature(surface, background);
    let (wl, wr) = omega.boundary_values();
    let (w0, tilde): (f64, Vec<f64>) = if surface.finite_area() {
        (0.0, omega.omega.clone())
    } else {
        if (wl - wr).abs() > 1e-12 * (1.0 + wl.abs()) {
            return Err(DeterminantError::Domain(format!(
                "boundary values {wl} and {wr} differ; the constant part is not defined"
            )));
        }
        (wl, omega.omega.iter().map(|w| w - wl).collect())
    };
    if checked {
        check_admissible(surface, &tilde)?;
    }
    let u: Vec<f64> = tilde.iter().zip(&r0).map(|(w, r)| w * r).collect();
    let linear = renormalized_integral_geodesic(surface, background, &u)?.finite_part;
    let quadratic = 0.5 * dirichlet_energy(surface, &tilde);
    let mut f = -(surface.euler_characteristic as f64) / 6.0 * w0 - TAU * (linear + quadratic) / (24.0 * PI);
    if surface.finite_area() {
        let moved = ConformalFactor::new(background.omega.iter().zip(&omega.omega).map(|(b, w)| b + w).collect());
        let a1 = renormalized_area_geodesic(surface, &moved)?.finite_part;
        let a0 = renormalized_area_geodesic(surface, background)?.finite_part;
        f += (a1 / a0).ln();
    }
    Ok(f)
}

/// `d/dt log det` sampled along a flow and its time integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyakovLedger {
    /// `(t, d/dt log det Delta_t)` at the recorded states.
    pub increments: Vec<(f64, f64)>,
    /// Trapezoid rule of the increments in `t`.
    pub accumulated: f64,
    /// Minus the closed form `F` of the change from the last recorded metric
    /// back to the first, i.e. the predicted total `log det` change.
    pub closed_form_target: Option<f64>,
    /// Largest difference between the increment and the Polyakov rate
    /// evaluated without the Gauss-Bonnet reduction.
    pub identity_defect: f64,
}

impl PolyakovLedger {
    pub fn min_increment(&self) -> Option<(f64, f64)> {
        self.increments.iter().copied().min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// Fails on the first increment below `-INCREMENT_TOL`.
    pub fn check_monotone(&self) -> Result<(), DeterminantError> {
        match self.increments.iter().find(|(_, r)| !(*r >= -INCREMENT_TOL)) {
            Some(&(t, rate)) => Err(DeterminantError::NegativeIncrement { t, rate }),
            None => Ok(()),
        }
    }
}

/// Tolerance on `^R Area + 2 pi chi` (per unit angle) for a run to satisfy
/// the monotonicity hypotheses.
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Integrates `d/dt log det` over the recorded states of a run with
/// `C = -2`, ends of curvature `-2` and `^R Area = -2 pi chi`.
///
/// Under these hypotheses Gauss-Bonnet turns the Polyakov rate with
/// `omega' = C - R` into `(1/24 pi) int (R - C)^2 dvol`, which needs no
/// renormalization; the increments are evaluated in that form. The rate in
/// its original form is evaluated as well and its largest deviation is
/// reported: on the grid the two identities used hold only to
/// discretization accuracy. Fails if an increment is below `-INCREMENT_TOL`.
pub fn integrate_polyakov_along_flow(
    surface: &ConformalSurface,
    traj: &Trajectory,
) -> Result<PolyakovLedger, DeterminantError> {
    let c = traj.normalization;
    let first = traj
        .states
        .first()
        .ok_or_else(|| DeterminantError::Domain("empty trajectory".into()))?;
    if c != -2.0 {
        return Err(DeterminantError::Hypothesis(format!("normalization {c}, need -2")));
    }
    if surface.finite_area() {
        return Err(DeterminantError::Hypothesis("finite area cannot equal -2 pi chi".into()));
    }
    for side in [Side::Left, Side::Right] {
        let r = first.end_curvature(side);
        if (r + 2.0).abs() > 1e-8 {
            return Err(DeterminantError::Hypothesis(format!("{side:?} end curvature {r}, need -2")));
        }
    }
    let area_defect = first.area.finite_part + surface.euler_characteristic as f64;
    if area_defect.abs() > NORMALIZATION_TOL {
        return Err(DeterminantError::Hypothesis(format!(
            "renormalized area misses -2 pi chi by {area_defect:e} per unit angle"
        )));
    }
    let mut increments = Vec::with_capacity(traj.states.len());
    let mut identity_defect = 0.0f64;
    for s in &traj.states {
        let dev: Vec<f64> = s.curvature.iter().map(|r| (r - c) * (r - c)).collect();
        let rate = TAU * renormalized_integral_geodesic(surface, &s.omega, &dev)?.finite_part / (24.0 * PI);
        let velocity: Vec<f64> = s.curvature.iter().map(|r| c - r).collect();
        identity_defect = identity_defect.max((polyakov_rate_trusted(surface, &s.omega, &velocity, false)? - rate).abs());
        increments.push((s.t, rate));
    }
    let accumulated = increments
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum();
    let last = traj.states.last().unwrap();
    let back = ConformalFactor::new(first.omega.omega.iter().zip(&last.omega.omega).map(|(a, b)| a - b).collect());
    let closed_form_target = polyakov_increment_closed_form_trusted(surface, &last.omega, &back)
        .ok()
        .map(|f| -f);
    let ledger = PolyakovLedger {
        increments,
        accumulated,
        closed_form_target,
        identity_defect,
    };
    ledger.check_monotone()?;
    Ok(ledger)
}

//! Potential function `-Delta f = R - C` and the entropy `h = -Delta f + |grad f|^2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow::Trajectory;
use crate::numerics::{lagrange_eval, linear_fit};
use crate::surface::{
    gradient_norm_sq, laplacian_apply, scalar_curvature, ConformalFactor, ConformalSurface, EndKind,
    Side, SurfaceError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("no solution: compatibility defect {defect:e} exceeds {tolerance:e}")]
    Solvability { defect: f64, tolerance: f64 },
    #[error("invalid potential problem: {0}")]
    Config(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryCondition {
    /// The regular part vanishes at the first funnel end.
    DirichletAtFirstFunnel,
    /// Vanishing flux at cusps, no linear term at funnel ends of a
    /// funnel-funnel cylinder; `int x_F^2 f dvol = 0`.
    NeumannAll,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSolution {
    /// `f` on the grid. Boundary nodes hold the discrete closure of the
    /// flux relation, which is finite even when `c_i != 0`.
    pub f: Vec<f64>,
    /// Coefficient of `log x_i` at each end.
    pub log_coefficients: [f64; 2],
    /// `max |-Delta f - (R - C)|` over interior nodes.
    pub residual_norm: f64,
    pub grad_sup: f64,
    pub boundary_condition: BoundaryCondition,
}

/// Relative tolerance on the compatibility condition when both flux
/// constants are prescribed.
const COMPATIBILITY_TOL: f64 = 1e-6;

/// `e^{phi_i}(C - r_i)` at funnel ends and `e^{phi_i}(r_i - C)` at cusps,
/// with `phi_i` the full factor of the end relative to the model.
pub fn log_coefficient(surface: &ConformalSurface, omega: &ConformalFactor, side: Side, c: f64) -> f64 {
    let end = surface.end(side);
    let w = omega.boundary_value(side);
    let phi = end.phi_asymptote + w;
    let r = (-w).exp() * end.curvature_asymptote;
    match end.kind {
        EndKind::Funnel => phi.exp() * (c - r),
        EndKind::Cusp => phi.exp() * (r - c),
    }
}

pub fn solve_potential(
    surface: &ConformalSurface,
    omega: &ConformalFactor,
    c: f64,
    bc: BoundaryCondition,
) -> Result<PotentialSolution, PotentialError> {
    omega.check_len(surface)?;
    let n = surface.intervals();
    let h = surface.h();
    let r = scalar_curvature(surface, omega);
    let k0 = surface.kappa0();
    let a = surface.a_half();
    let chart = surface.chart;
    let kinds = [surface.end(Side::Left).kind, surface.end(Side::Right).kind];
    let coeffs = [
        log_coefficient(surface, omega, Side::Left, c),
        log_coefficient(surface, omega, Side::Right, c),
    ];

    // (a f')' = g with g = (R - C) e^omega / kappa_0; flux F = a f' on half
    // nodes, F_{i+1/2} = F_{1/2} + partial[i].
    let mut partial = vec![0.0; n];
    for i in 1..n {
        let g = (r[i] - c) * omega.omega[i].exp() / k0[i];
        partial[i] = partial[i - 1] + h * g;
    }
    let total = partial[n - 1];
    let scale = partial.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);

    // Limit of the flux minus its log part at a funnel face, as an affine
    // function `F_{1/2} + offset`.
    let funnel_offset = |side: Side| -> f64 {
        let k = if side == Side::Left { 0 } else { 1 };
        let ys: Vec<f64> = (0..3)
            .map(|j| {
                let (idx, sig) = match side {
                    Side::Left => (j, (j as f64 + 0.5) * h),
                    Side::Right => (n - 1 - j, 1.0 - (j as f64 + 0.5) * h),
                };
                let dx = match side {
                    Side::Left => chart.bdf_derivative(side, sig),
                    Side::Right => -chart.bdf_derivative(side, sig),
                };
                let q = coeffs[k] * chart.a(sig) * dx / chart.bdf(side, sig);
                partial[idx] - q
            })
            .collect();
        lagrange_eval(&[0.5, 1.5, 2.5], &ys, 0.0)
    };
    let cusp_offset = |side: Side| match side {
        Side::Left => 0.0,
        Side::Right => total,
    };
    let offset = |side: Side| {
        let k = if side == Side::Left { 0 } else { 1 };
        match kinds[k] {
            EndKind::Funnel => funnel_offset(side),
            EndKind::Cusp => cusp_offset(side),
        }
    };

    // Each prescribed end gives F_{1/2} = -offset.
    // A cusp fixes the flux by itself; funnel conditions only enter on
    // funnel-funnel cylinders.
    let has_cusp = kinds.contains(&EndKind::Cusp);
    let mut prescribed: Vec<f64> = Vec::new();
    for (k, side) in [Side::Left, Side::Right].into_iter().enumerate() {
        let wanted = match (kinds[k], bc) {
            (EndKind::Cusp, _) => true,
            (EndKind::Funnel, BoundaryCondition::NeumannAll) => !has_cusp,
            (EndKind::Funnel, BoundaryCondition::DirichletAtFirstFunnel) => !has_cusp && k == 0,
        };
        if wanted {
            prescribed.push(-offset(side));
        }
    }
    if bc == BoundaryCondition::DirichletAtFirstFunnel && !kinds.contains(&EndKind::Funnel) {
        return Err(PotentialError::Config("Dirichlet condition needs a funnel end".into()));
    }
    let f_half = match prescribed.as_slice() {
        [v] => *v,
        [u, v] => {
            let defect = (u - v).abs();
            let tolerance = COMPATIBILITY_TOL * scale;
            if defect > tolerance {
                return Err(PotentialError::Solvability { defect, tolerance });
            }
            0.5 * (u + v)
        }
        _ => unreachable!("every end kind prescribes at most one flux condition"),
    };

    let mut f = vec![0.0; n + 1];
    for i in 0..n {
        f[i + 1] = f[i] + h * (f_half + partial[i]) / a[i];
    }

    let regular_limit = |side: Side, f: &[f64]| -> f64 {
        let k = if side == Side::Left { 0 } else { 1 };
        let ys: Vec<f64> = (1..4)
            .map(|j| {
                let i = if side == Side::Left { j } else { n - j };
                f[i] - coeffs[k] * chart.bdf(side, surface.sigma[i]).ln()
            })
            .collect();
        lagrange_eval(&[1.0, 2.0, 3.0], &ys, 0.0)
    };
    let shift = match bc {
        BoundaryCondition::DirichletAtFirstFunnel => {
            let side = if kinds[0] == EndKind::Funnel { Side::Left } else { Side::Right };
            regular_limit(side, &f)
        }
        BoundaryCondition::NeumannAll => {
            let x = surface.total_bdf();
            let weight = |i: usize| {
                let xf = if surface.has_funnel() { x[i] * x[i] } else { 1.0 };
                xf * omega.omega[i].exp() / k0[i]
            };
            let (num, den) = (1..n).fold((0.0, 0.0), |(p, q), i| (p + weight(i) * f[i], q + weight(i)));
            num / den
        }
    };
    for v in &mut f {
        *v -= shift;
    }

    let lf = laplacian_apply(surface, omega, &f);
    let residual_norm = (1..n).map(|i| (-lf[i] - (r[i] - c)).abs()).fold(0.0, f64::max);
    let grad = gradient_norm_sq(surface, omega, &f);
    let grad_sup = grad[1..n].iter().fold(0.0f64, |m, g| m.max(g.sqrt()));
    Ok(PotentialSolution {
        f,
        log_coefficients: coeffs,
        residual_norm,
        grad_sup,
        boundary_condition: bc,
    })
}

/// `h = -Delta f + |grad f|^2`; boundary values extrapolated.
pub fn entropy_field(surface: &ConformalSurface, omega: &ConformalFactor, f: &[f64]) -> Vec<f64> {
    let n = surface.intervals();
    let lf = laplacian_apply(surface, omega, f);
    let grad = gradient_norm_sq(surface, omega, f);
    let mut h: Vec<f64> = lf.iter().zip(&grad).map(|(l, g)| -l + g).collect();
    let xs = [1.0, 2.0, 3.0];
    h[0] = lagrange_eval(&xs, &h[1..4], 0.0);
    let tail = [h[n - 1], h[n - 2], h[n - 3]];
    h[n] = lagrange_eval(&xs, &tail, 0.0);
    h
}

/// Limit of `h` at an end: `r_i - C + c_i^2 e^{-phi_i}`, since
/// `|grad log x|^2 = e^{-phi_i}` there.
pub fn entropy_end_limit(surface: &ConformalSurface, omega: &ConformalFactor, side: Side, c: f64) -> f64 {
    let end = surface.end(side);
    let w = omega.boundary_value(side);
    let ci = log_coefficient(surface, omega, side, c);
    (-w).exp() * end.curvature_asymptote - c + ci * ci * (-(end.phi_asymptote + w)).exp()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyMonitor {
    pub t: Vec<f64>,
    pub h_max: Vec<f64>,
    /// Slope of `log h_max` over the final two decades.
    pub fitted_rate: Option<f64>,
    /// Largest relative rise of `h_max e^{-C t}` above its running minimum,
    /// counted while that minimum is positive.
    pub max_drift: f64,
}

impl EntropyMonitor {
    /// Whether `h_max e^{-C t}` is non-increasing within `tolerance`.
    pub fn non_increasing(&self, tolerance: f64) -> bool {
        self.max_drift <= tolerance
    }
}

pub fn monitor_entropy(
    surface: &ConformalSurface,
    traj: &Trajectory,
    bc: BoundaryCondition,
) -> Result<EntropyMonitor, PotentialError> {
    let c = traj.normalization;
    let mut t = Vec::with_capacity(traj.states.len());
    let mut h_max = Vec::with_capacity(traj.states.len());
    for s in &traj.states {
        let sol = solve_potential(surface, &s.omega, c, bc)?;
        let h = entropy_field(surface, &s.omega, &sol.f);
        // The ends lie at infinity: the supremum is over interior nodes and
        // the end limits, not the extrapolated boundary nodes.
        let ends = [Side::Left, Side::Right].map(|side| entropy_end_limit(surface, &s.omega, side, c));
        let n = surface.intervals();
        t.push(s.t);
        h_max.push(h[1..n].iter().chain(&ends).fold(f64::NEG_INFINITY, |m, v| m.max(*v)));
    }
    let mut max_drift = 0.0f64;
    let mut running = f64::INFINITY;
    for (ti, hi) in t.iter().zip(&h_max) {
        let g = hi * (-c * ti).exp();
        if running.is_finite() && running > 0.0 {
            max_drift = max_drift.max(g / running - 1.0);
        }
        running = running.min(g);
    }
    // Fit up to the last positive value: afterwards the supremum sits at an
    // end limit.
    let fitted_rate = h_max.iter().rposition(|v| *v > 0.0).and_then(|end| {
        let last = h_max[end];
        let start = h_max[..end].iter().rposition(|v| *v > 100.0 * last).map_or(0, |i| i + 1);
        let tail: Vec<(f64, f64)> = t[start..=end]
            .iter()
            .zip(&h_max[start..=end])
            .filter(|(_, v)| **v > 0.0)
            .map(|(a, b)| (*a, b.ln()))
            .collect();
        if tail.len() < 3 {
            return None;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = tail.into_iter().unzip();
        Some(linear_fit(&x, &y).0)
    });
    Ok(EntropyMonitor { t, h_max, fitted_rate, max_drift })
}

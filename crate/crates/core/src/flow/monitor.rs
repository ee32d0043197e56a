use super::{ConvergenceReport, Trajectory};
use crate::numerics::linear_fit;

/// `(C_low, K)` with `C_low e^{C t} <= R - C <= K e^{C t}` over the run.
pub fn sandwich_constants(traj: &Trajectory) -> (f64, f64) {
    let c = traj.normalization;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in &traj.states {
        let scale = (-c * s.t).exp();
        for r in &s.curvature {
            let d = (r - c) * scale;
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    (lo, hi)
}

/// Slope of `log sup |R - C|` against `t` over the trailing states whose
/// deviation lies within two decades of the final one.
fn fitted_rate(traj: &Trajectory) -> Option<f64> {
    let last = traj.states.last()?.sup_deviation;
    if !(last > 0.0) {
        return None;
    }
    let start = traj
        .states
        .iter()
        .rposition(|s| s.sup_deviation > 100.0 * last)
        .map_or(0, |i| i + 1);
    let tail = &traj.states[start..];
    if tail.len() < 3 {
        return None;
    }
    let t: Vec<f64> = tail.iter().map(|s| s.t).collect();
    let y: Vec<f64> = tail.iter().map(|s| s.sup_deviation.ln()).collect();
    Some(linear_fit(&t, &y).0)
}

pub fn convergence_report(traj: &Trajectory, threshold: f64) -> ConvergenceReport {
    let (c_low, k_high) = sandwich_constants(traj);
    let final_sup_deviation = traj.states.last().map_or(f64::NAN, |s| s.sup_deviation);
    ConvergenceReport {
        fitted_rate: fitted_rate(traj),
        c_low,
        k_high,
        converged: final_sup_deviation <= threshold,
        final_sup_deviation,
    }
}

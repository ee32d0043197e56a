use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::special::{gamma_log, EULER_GAMMA};
use super::DeterminantError;
use crate::renorm::renormalized_area_geodesic;
use crate::surface::{ConformalFactor, ConformalSurface, Side};

/// Tolerance on the estimated quadrature and truncation error of the
/// heat-trace integrals, relative to `max(1, |result|)`.
pub const TRUNCATION_TOL: f64 = 1e-9;

/// Leading short-time coefficients of the renormalized heat trace,
/// `a_{-1}/t + a~_{-1/2} t^{-1/2} log t + a_{-1/2} t^{-1/2} + a_0 + ...`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HeatCoefficients {
    pub a_minus_one: f64,
    pub a_tilde_minus_half: f64,
    pub a_minus_half: f64,
    pub a_zero: f64,
}

impl HeatCoefficients {
    /// The subtracted model `f_0(t)`.
    pub fn f0(&self, t: f64) -> f64 {
        let r = t.sqrt();
        self.a_minus_one / t + (self.a_tilde_minus_half * t.ln() + self.a_minus_half) / r + self.a_zero
    }
}

/// Renormalized heat trace sampled on a grid uniform in `log t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatTraceModel {
    pub coefficients: HeatCoefficients,
    /// `(t, ^R Tr e^{-t Delta})`.
    pub trace_samples: Vec<(f64, f64)>,
    /// Rank of the projection onto the null space: 1 for finite area.
    pub projection_rank: u8,
}

/// `log det` together with an estimate of its numerical error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatedValue {
    pub value: f64,
    pub error_estimate: f64,
}

impl HeatTraceModel {
    /// Samples `trace` at `t = e^u` for `u` in `[u_min, u_max]` with
    /// `per_unit` points per unit of `u`.
    pub fn from_fn(
        coefficients: HeatCoefficients,
        projection_rank: u8,
        trace: impl Fn(f64) -> f64,
        u_min: i32,
        u_max: i32,
        per_unit: usize,
    ) -> Self {
        let n = (u_max - u_min) as usize * per_unit;
        let h = 1.0 / per_unit as f64;
        let trace_samples = (0..=n)
            .map(|i| {
                let t = (u_min as f64 + i as f64 * h).exp();
                (t, trace(t))
            })
            .collect();
        Self {
            coefficients,
            trace_samples,
            projection_rank,
        }
    }

    /// Step in `log t`, checking that the samples are geometric.
    fn log_step(&self) -> Result<f64, DeterminantError> {
        let s = &self.trace_samples;
        if s.len() < 5 {
            return Err(DeterminantError::Samples("need at least five trace samples".into()));
        }
        if s.iter().any(|(t, v)| !(*t > 0.0) || !v.is_finite()) {
            return Err(DeterminantError::Samples("sample times must be positive, values finite".into()));
        }
        let h = (s[1].0 / s[0].0).ln();
        let uniform = s
            .windows(2)
            .all(|w| ((w[1].0 / w[0].0).ln() - h).abs() <= 1e-9 * h.abs());
        if !(h > 0.0) || !uniform {
            return Err(DeterminantError::Samples("sample times must be increasing and geometric".into()));
        }
        if self.projection_rank > 1 {
            return Err(DeterminantError::Samples("projection rank is 0 or 1".into()));
        }
        Ok(h)
    }

    /// Index of the sample at `t = 1`.
    fn unit_index(&self, h: f64) -> Result<usize, DeterminantError> {
        let i = self
            .trace_samples
            .iter()
            .position(|(t, _)| t.ln().abs() <= 1e-9 * h)
            .ok_or_else(|| DeterminantError::Samples("no sample at t = 1".into()))?;
        if i < 2 || self.trace_samples.len() - 1 - i < 2 {
            return Err(DeterminantError::Samples("t = 1 too close to the sample range ends".into()));
        }
        Ok(i)
    }
}

fn quadrature(values: &[f64], h: f64) -> (f64, f64) {
    crate::numerics::simpson_with_error(values, h)
}

fn check(value: f64, err: f64) -> Result<EstimatedValue, DeterminantError> {
    if !(err <= TRUNCATION_TOL * value.abs().max(1.0)) {
        return Err(DeterminantError::Truncation { estimate: err });
    }
    Ok(EstimatedValue {
        value,
        error_estimate: err,
    })
}

/// `log det(Delta + w)` from
/// `-log det = int_0^inf (Tr - f_0) e^{-tw} dt/t - a_0 log w - 2 sqrt(pi) a_{-1/2} sqrt(w)
///   + a_{-1} w (log w - 1) + a~_{-1/2} sqrt(w) (Gamma_log(-1/2) - log w Gamma(-1/2))`.
pub fn logdet_from_heat_trace(model: &HeatTraceModel, w: f64) -> Result<EstimatedValue, DeterminantError> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(DeterminantError::Domain(format!("need w > 0, got {w}")));
    }
    let h = model.log_step()?;
    let c = &model.coefficients;
    let g: Vec<f64> = model
        .trace_samples
        .iter()
        .map(|&(t, tr)| (tr - c.f0(t)) * (-t * w).exp())
        .collect();
    let (integral, quad_err) = quadrature(&g, h);
    // The integrand is O(t^{1/2}) as t -> 0 and decays like e^{-tw}.
    let t_end = model.trace_samples.last().unwrap().0;
    let tail = 2.0 * g[0].abs() + g.last().unwrap().abs() / (w * t_end);
    let sw = w.sqrt();
    let lw = w.ln();
    let minus_logdet = integral - c.a_zero * lw - 2.0 * PI.sqrt() * c.a_minus_half * sw
        + c.a_minus_one * w * (lw - 1.0)
        + c.a_tilde_minus_half * sw * (gamma_log(-0.5)? - lw * gamma(-0.5));
    check(-minus_logdet, quad_err + tail)
}

/// Integrals over `t < 1` and `t > 1` of `t^s (Tr - f_0)` and
/// `t^s (Tr - P)` in `dt/t`, with their error estimates.
fn split_integrals(model: &HeatTraceModel, s: f64) -> Result<(f64, f64, f64), DeterminantError> {
    let h = model.log_step()?;
    let m = model.unit_index(h)?;
    let c = &model.coefficients;
    let p = model.projection_rank as f64;
    let lower: Vec<f64> = model.trace_samples[..=m]
        .iter()
        .map(|&(t, tr)| t.powf(s) * (tr - c.f0(t)))
        .collect();
    let upper: Vec<f64> = model.trace_samples[m..]
        .iter()
        .map(|&(t, tr)| t.powf(s) * (tr - p))
        .collect();
    let (lo, e_lo) = quadrature(&lower, h);
    let (hi, e_hi) = quadrature(&upper, h);
    if !(s > -0.5) {
        return Err(DeterminantError::Domain(format!("subtracted Mellin integral needs s > -1/2, got {s}")));
    }
    let tail = lower[0].abs() / (s + 0.5) + upper.last().unwrap().abs();
    Ok((lo, hi, e_lo + e_hi + tail))
}

/// `zeta(s) = Gamma(s)^{-1} int_0^inf t^s (^R Tr e^{-t Delta} - P) dt/t`, the
/// part over `t < 1` continued term by term through the coefficients.
pub fn renormalized_zeta(model: &HeatTraceModel, s: f64) -> Result<EstimatedValue, DeterminantError> {
    let c = &model.coefficients;
    let p = model.projection_rank as f64;
    if s == 0.0 {
        model.log_step()?;
        return Ok(EstimatedValue {
            value: c.a_zero - p,
            error_estimate: 0.0,
        });
    }
    for pole in [1.0, 0.5] {
        if (s - pole).abs() < 1e-12 {
            return Err(DeterminantError::Domain(format!("zeta has a pole at s = {pole}")));
        }
    }
    let (lo, hi, err) = split_integrals(model, s)?;
    let cont = c.a_minus_one / (s - 1.0) + c.a_minus_half / (s - 0.5)
        - c.a_tilde_minus_half / ((s - 0.5) * (s - 0.5))
        + (c.a_zero - p) / s;
    let g = gamma(s);
    check((lo + hi + cont) / g, err / g.abs())
}

/// `zeta'(0) = gamma (a_0 - P) + J(0)`, where `J(0)` is the regular part at
/// `s = 0` of the continued Mellin integral.
pub fn renormalized_zeta_derivative_at_zero(model: &HeatTraceModel) -> Result<EstimatedValue, DeterminantError> {
    let c = &model.coefficients;
    let p = model.projection_rank as f64;
    let (lo, hi, err) = split_integrals(model, 0.0)?;
    let j0 = lo + hi - c.a_minus_one - 2.0 * c.a_minus_half - 4.0 * c.a_tilde_minus_half;
    check(EULER_GAMMA * (c.a_zero - p) + j0, err)
}

/// Short-time coefficients of `e^{omega} g_0` with totally geodesic ends of
/// curvature `-2`:
/// `a_{-1} = ^R Area / 4 pi`, `a~_{-1/2} = n_C / 4 sqrt(pi)`, `a_0 = chi / 6`,
/// `a_{-1/2} = (n_C / 2 sqrt(pi)) (Gamma_log(-1/2) / 4 sqrt(pi) + 1 - log 2)`.
///
/// The renormalized area of the surface is `2 pi` times the per-angle value
/// computed on the grid.
pub fn heat_coefficients(
    surface: &ConformalSurface,
    omega: &ConformalFactor,
) -> Result<HeatCoefficients, DeterminantError> {
    for side in [Side::Left, Side::Right] {
        let r = surface.end(side).curvature_asymptote * (-omega.boundary_value(side)).exp();
        if (r + 2.0).abs() > 1e-8 {
            return Err(DeterminantError::UnsupportedNormalization { side, curvature: r });
        }
    }
    let area = TAU * renormalized_area_geodesic(surface, omega)?.finite_part;
    let nc = surface.n_cusps as f64;
    let sp = PI.sqrt();
    Ok(HeatCoefficients {
        a_minus_one: area / (4.0 * PI),
        a_tilde_minus_half: nc / (4.0 * sp),
        a_zero: surface.euler_characteristic as f64 / 6.0,
        a_minus_half: nc / (2.0 * sp) * (gamma_log(-0.5)? / (4.0 * sp) + 1.0 - 2f64.ln()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{build_model_surface, Chart, EndKind};

    fn one_eigenvalue(lambda: f64) -> HeatTraceModel {
        let c = HeatCoefficients {
            a_zero: 1.0,
            ..Default::default()
        };
        HeatTraceModel::from_fn(c, 0, move |t| (-t * lambda).exp(), -40, 8, 128)
    }

    #[test]
    fn one_eigenvalue_logdet() {
        for (lambda, w) in [(1.0, 1.0), (0.3, 2.0), (5.0, 0.5)] {
            let d = logdet_from_heat_trace(&one_eigenvalue(lambda), w).unwrap();
            assert!((d.value.exp() - (lambda + w)).abs() < 1e-8, "{lambda} {w}");
        }
    }

    #[test]
    fn pure_area_term() {
        let c = HeatCoefficients {
            a_minus_one: 0.7,
            ..Default::default()
        };
        let m = HeatTraceModel::from_fn(c, 0, |t| 0.7 / t, -10, 5, 16);
        let w: f64 = 1.7;
        let d = logdet_from_heat_trace(&m, w).unwrap();
        assert!((-d.value - 0.7 * w * (w.ln() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn derivative_matches_resolvent_trace() {
        // Two eigenvalues: d/dw log det(Delta + w) = int_0^inf Tr e^{-t(Delta + w)} dt.
        let c = HeatCoefficients {
            a_zero: 2.0,
            ..Default::default()
        };
        let m = HeatTraceModel::from_fn(c, 0, |t| (-0.5 * t).exp() + (-3.0 * t).exp(), -40, 8, 64);
        let w = 0.8;
        let dw = 1e-4;
        let fd = (logdet_from_heat_trace(&m, w + dw).unwrap().value
            - logdet_from_heat_trace(&m, w - dw).unwrap().value)
            / (2.0 * dw);
        // Oracle: trapezoid in t of the resolvent integrand on a long range.
        let n = 400_000;
        let h = 80.0 / n as f64;
        let vals: Vec<f64> = (0..=n)
            .map(|i| {
                let t = i as f64 * h;
                ((-0.5 * t).exp() + (-3.0 * t).exp()) * (-t * w).exp()
            })
            .collect();
        let resolvent = crate::numerics::simpson(&vals, h);
        assert!((fd - resolvent).abs() < 1e-7);
    }

    #[test]
    fn truncated_samples_are_rejected() {
        let c = HeatCoefficients {
            a_zero: 1.0,
            ..Default::default()
        };
        let m = HeatTraceModel::from_fn(c, 0, |t| (-t).exp(), -3, 1, 32);
        assert!(matches!(
            logdet_from_heat_trace(&m, 1.0),
            Err(DeterminantError::Truncation { .. })
        ));
        let mut bad = one_eigenvalue(1.0);
        bad.trace_samples[3].0 *= 1.01;
        assert!(matches!(logdet_from_heat_trace(&bad, 1.0), Err(DeterminantError::Samples(_))));
    }

    #[test]
    fn zeta_of_one_eigenvalue() {
        let lambda: f64 = 2.5;
        let m = one_eigenvalue(lambda);
        for s in [0.25, 0.75, 1.5, 2.0] {
            let z = renormalized_zeta(&m, s).unwrap();
            assert!((z.value - lambda.powf(-s)).abs() < 1e-9, "s = {s}");
        }
        assert_eq!(renormalized_zeta(&m, 0.0).unwrap().value, 1.0);
        let d = renormalized_zeta_derivative_at_zero(&m).unwrap();
        assert!(((-d.value).exp() - lambda).abs() < 1e-8);
        // Agrees with the small-w limit of the log det formula.
        let long = HeatTraceModel::from_fn(m.coefficients, 0, |t| (-t * lambda).exp(), -40, 20, 128);
        let small = logdet_from_heat_trace(&long, 1e-6).unwrap().value.exp() - 1e-6;
        assert!((small - (-d.value).exp()).abs() < 1e-8);
    }

    #[test]
    fn zeta_at_zero_counts_projection() {
        let c = HeatCoefficients {
            a_zero: 2.0,
            ..Default::default()
        };
        let m = HeatTraceModel::from_fn(c, 1, |t| 1.0 + (-2.0 * t).exp(), -40, 8, 128);
        assert_eq!(renormalized_zeta(&m, 0.0).unwrap().value, 1.0);
        // The null space drops out: the rest is the eigenvalue 2.
        let z = renormalized_zeta(&m, 1.5).unwrap();
        assert!((z.value - 2f64.powf(-1.5)).abs() < 1e-9);
    }

    #[test]
    fn model_surface_coefficients() {
        let horn = build_model_surface(EndKind::Funnel, EndKind::Cusp, 256).unwrap();
        let c = heat_coefficients(&horn, &ConformalFactor::zero(&horn)).unwrap();
        assert!(c.a_minus_one.abs() < 1e-6);
        assert!((c.a_tilde_minus_half - 1.0 / (4.0 * PI.sqrt())).abs() < 1e-15);
        assert_eq!(c.a_zero, 0.0);
        let gl = -2.0 * PI.sqrt() * (2.0 - EULER_GAMMA - 2.0 * 2f64.ln());
        let expected = 1.0 / (2.0 * PI.sqrt()) * (gl / (4.0 * PI.sqrt()) + 1.0 - 2f64.ln());
        assert!((c.a_minus_half - expected).abs() < 1e-12);

        let cyl = ConformalSurface::new(Chart::HyperbolicCylinder { length: 1.0 }, 256, None).unwrap();
        let c = heat_coefficients(&cyl, &ConformalFactor::zero(&cyl)).unwrap();
        assert!(c.a_minus_one.abs() < 1e-6);
        assert_eq!((c.a_tilde_minus_half, c.a_minus_half, c.a_zero), (0.0, 0.0, 0.0));

        let shifted = ConformalFactor::constant(&horn, 0.2);
        assert!(matches!(
            heat_coefficients(&horn, &shifted),
            Err(DeterminantError::UnsupportedNormalization { .. })
        ));
    }
}

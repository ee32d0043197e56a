use serde::{Deserialize, Serialize};

use super::{
    finite_part_hadamard, finite_part_hadamard_halves, DivergentTerm, HadamardOptions, Method,
    RenormError, RenormalizedValue,
};
use crate::numerics::trapezoid;
use crate::surface::{
    check_totally_geodesic, scalar_curvature, smooth_step, ConformalFactor, ConformalSurface, Side,
};

fn check_factor(surface: &ConformalSurface, omega: &ConformalFactor) -> Result<(), RenormError> {
    omega
        .check_len(surface)
        .map_err(|e| RenormError::Input(e.to_string()))
}

/// `^R Area` of `e^{omega} g_0` with respect to the fixed total bdf.
pub fn renormalized_area(
    surface: &ConformalSurface,
    omega: &ConformalFactor,
) -> Result<RenormalizedValue, RenormError> {
    check_factor(surface, omega)?;
    let f = surface.integrand(surface.area_density(&omega.omega));
    finite_part_hadamard(&f, &HadamardOptions::default())
}

/// `^R Area` for a factor whose funnel ends are totally geodesic, i.e.
/// `omega - omega_i = O(x_i^2)`. The divergent part is then exactly
/// `e^{omega_i}` times that of the background on each half, and the rest is
/// a bounded integrand. Unlike [`renormalized_area`] this needs no fit of
/// the factor near the ends, which matters for flowed factors whose `x^2`
/// coefficient varies on the scale of `log x`.
pub fn renormalized_area_geodesic(
    surface: &ConformalSurface,
    omega: &ConformalFactor,
) -> Result<RenormalizedValue, RenormError> {
    let n = surface.intervals();
    renormalized_integral_geodesic(surface, omega, &vec![1.0; n + 1])
}

/// `^R int u dvol` for `u e^{omega} = u_i e^{omega_i} + O(x_i^2)` at each
/// funnel end, split as in [`renormalized_area_geodesic`].
pub fn renormalized_integral_geodesic(
    surface: &ConformalSurface,
    omega: &ConformalFactor,
    u: &[f64],
) -> Result<RenormalizedValue, RenormError> {
    check_factor(surface, omega)?;
    let n = surface.intervals();
    if u.len() != n + 1 {
        return Err(RenormError::Input(format!("field has {} nodes, grid has {}", u.len(), n + 1)));
    }
    let m = n / 2;
    let h = surface.h();
    let background = surface.area_density(&vec![0.0; n + 1]);
    let halves = finite_part_hadamard_halves(&surface.integrand(background.clone()), &HadamardOptions::default())?;
    let mut total = 0.0;
    let mut err = 0.0;
    let mut divergent = Vec::new();
    for (k, (lo, hi, b)) in [(0, m, 0), (m, n, n)].into_iter().enumerate() {
        let scale = u[b] * omega.omega[b].exp();
        let mut rem: Vec<f64> = (lo..=hi)
            .map(|i| (u[i] * omega.omega[i].exp() - scale) * background[i])
            .collect();
        let last = rem.len() - 1;
        // Funnel faces have infinite background density; take the limit.
        if !rem[0].is_finite() {
            rem[0] = 3.0 * rem[1] - 3.0 * rem[2] + rem[3];
        }
        if !rem[last].is_finite() {
            rem[last] = 3.0 * rem[last - 1] - 3.0 * rem[last - 2] + rem[last - 3];
        }
        // Trapezoid weights make the sum of `Delta_0 omega / kappa_0`
        // telescope to boundary fluxes, as the continuous integral does.
        let q = trapezoid(&rem, h);
        let coarse: Vec<f64> = rem.iter().step_by(2).copied().collect();
        let e = (q - trapezoid(&coarse, 2.0 * h)).abs() / 3.0;
        total += scale * halves[k].finite_part + q;
        err += (scale * halves[k].estimated_error).abs() + e;
        divergent.extend(halves[k].divergent_coefficients.iter().map(|d| DivergentTerm {
            coefficient: scale * d.coefficient,
            ..d.clone()
        }));
    }
    Ok(RenormalizedValue {
        finite_part: total,
        divergent_coefficients: divergent,
        method: Method::Hadamard,
        estimated_error: err,
    })
}

/// Finite part of `int u dvol` for a field `u` on the grid.
pub fn renormalized_integral(
    surface: &ConformalSurface,
    omega: &ConformalFactor,
    u: &[f64],
) -> Result<RenormalizedValue, RenormError> {
    check_factor(surface, omega)?;
    let density = surface
        .area_density(&omega.omega)
        .iter()
        .zip(u)
        .map(|(d, v)| d * v)
        .collect();
    finite_part_hadamard(&surface.integrand(density), &HadamardOptions::default())
}

/// Uncanceled boundary term of a funnel end that is not totally geodesic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussBonnetWarning {
    pub side: Side,
    pub linear_coefficient: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureIntegral {
    pub value: RenormalizedValue,
    /// `4 pi chi` per unit angle, i.e. `2 chi`.
    pub topological: f64,
    /// Sum of the linear coefficients at non-geodesic funnel ends; the
    /// renormalized total curvature equals `4 pi chi` plus this amount.
    pub boundary_term: f64,
    pub warnings: Vec<GaussBonnetWarning>,
}

/// Tolerance on the linear coefficient for an end to count as totally
/// geodesic in the Gauss-Bonnet check.
pub const GEODESIC_TOL: f64 = 1e-6;

/// `^R int R dvol` of `e^{omega} g_0`, with a warning for each funnel end
/// that is not totally geodesic. Without warnings the integral is split as
/// in [`renormalized_integral_geodesic`]; otherwise the integrand is fitted.
pub fn renormalized_curvature_integral(
    surface: &ConformalSurface,
    omega: &ConformalFactor,
) -> Result<CurvatureIntegral, RenormError> {
    check_factor(surface, omega)?;
    let r = scalar_curvature(surface, omega);
    let mut warnings = Vec::new();
    let mut boundary_term = 0.0;
    for rep in check_totally_geodesic(surface, omega, GEODESIC_TOL)? {
        if let (Some(c), false) = (rep.linear_coefficient, rep.totally_geodesic) {
            boundary_term += c;
            warnings.push(GaussBonnetWarning {
                side: rep.side,
                linear_coefficient: c,
            });
        }
    }
    // With totally geodesic ends `R e^omega` tends to its end value at
    // second order, so only the background area needs an expansion fit.
    let value = if warnings.is_empty() {
        renormalized_integral_geodesic(surface, omega, &r)?
    } else {
        renormalized_integral(surface, omega, &r)?
    };
    Ok(CurvatureIntegral {
        value,
        topological: 2.0 * surface.euler_characteristic as f64,
        boundary_term,
        warnings,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaPrescription {
    pub alpha: f64,
    /// Collar parameter actually used.
    pub eps: f64,
    pub factor: ConformalFactor,
    pub area: RenormalizedValue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaOptions {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub eps: f64,
    /// Number of times the collar may be halved when the target is out of
    /// reach.
    pub max_collar_halvings: u32,
    pub tolerance: f64,
}

impl Default for AreaOptions {
    fn default() -> Self {
        Self {
            alpha_min: 1e-3,
            alpha_max: 1e3,
            eps: 0.25,
            max_collar_halvings: 8,
            tolerance: 1e-9,
        }
    }
}

/// `chi_alpha = 1 + (alpha - 1) b(x)`, with `b = 0` for `x < eps/2` and
/// `b = 1` for `x > eps`, in the total bdf.
pub fn area_multiplier(surface: &ConformalSurface, alpha: f64, eps: f64) -> ConformalFactor {
    ConformalFactor::new(
        surface
            .total_bdf()
            .iter()
            .map(|&x| {
                let b = smooth_step((x - 0.5 * eps) / (0.5 * eps));
                (1.0 + (alpha - 1.0) * b).ln()
            })
            .collect(),
    )
}

/// Multiplier `chi_alpha` whose metric `chi_alpha g_0` has renormalized area
/// `target`, found by bracketing and bisection in `alpha`.
pub fn construct_area_prescribing_factor(
    surface: &ConformalSurface,
    target: f64,
    opts: &AreaOptions,
) -> Result<AreaPrescription, RenormError> {
    if !surface.has_funnel() {
        return Err(RenormError::Range {
            target,
            reason: "finite-area surface: the area is not adjustable at the ends".into(),
        });
    }
    let area_at = |alpha: f64, eps: f64| -> Result<(ConformalFactor, RenormalizedValue), RenormError> {
        let w = area_multiplier(surface, alpha, eps);
        let a = renormalized_area(surface, &w)?;
        Ok((w, a))
    };
    let (w1, a1) = area_at(1.0, opts.eps)?;
    if (a1.finite_part - target).abs() <= opts.tolerance {
        return Ok(AreaPrescription {
            alpha: 1.0,
            eps: opts.eps,
            factor: w1,
            area: a1,
        });
    }
    let mut eps = opts.eps;
    for _ in 0..=opts.max_collar_halvings {
        let lo = area_at(opts.alpha_min, eps)?.1.finite_part - target;
        let hi = area_at(opts.alpha_max, eps)?.1.finite_part - target;
        if lo * hi <= 0.0 {
            let (mut a, mut b, mut fa) = (opts.alpha_min, opts.alpha_max, lo);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let (w, v) = area_at(mid, eps)?;
                let fm = v.finite_part - target;
                if fm.abs() <= opts.tolerance || b - a < 1e-15 * mid {
                    return Ok(AreaPrescription {
                        alpha: mid,
                        eps,
                        factor: w,
                        area: v,
                    });
                }
                if (fm < 0.0) == (fa < 0.0) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            let mid = 0.5 * (a + b);
            let (w, v) = area_at(mid, eps)?;
            return Ok(AreaPrescription {
                alpha: mid,
                eps,
                factor: w,
                area: v,
            });
        }
        eps *= 0.5;
    }
    Err(RenormError::Range {
        target,
        reason: format!(
            "alpha in [{}, {}] cannot reach the target even with collar {eps}",
            opts.alpha_min, opts.alpha_max
        ),
    })
}

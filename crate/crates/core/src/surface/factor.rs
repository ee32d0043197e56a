use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ConformalSurface, Side, SurfaceError};
use crate::numerics::simpson;

/// Collar parameter of the cutoff profile in end bdf units.
pub const CUTOFF_EPS: f64 = 0.25;

/// Conformal factor `omega` sampled on the grid; boundary values are the
/// first and last samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalFactor {
    pub omega: Vec<f64>,
}

impl ConformalFactor {
    pub fn new(omega: Vec<f64>) -> Self {
        Self { omega }
    }

    pub fn zero(surface: &ConformalSurface) -> Self {
        Self::constant(surface, 0.0)
    }

    pub fn constant(surface: &ConformalSurface, c: f64) -> Self {
        Self::new(vec![c; surface.sigma.len()])
    }

    pub fn boundary_values(&self) -> (f64, f64) {
        (self.omega[0], *self.omega.last().unwrap())
    }

    pub fn boundary_value(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.omega[0],
            Side::Right => *self.omega.last().unwrap(),
        }
    }

    /// `omega~ = omega - sum_i omega_i chi(x_i)`.
    pub fn tilde(&self, surface: &ConformalSurface) -> Vec<f64> {
        let (wl, wr) = self.boundary_values();
        let cl = cutoff_field(surface, Side::Left);
        let cr = cutoff_field(surface, Side::Right);
        self.omega
            .iter()
            .zip(cl.iter().zip(&cr))
            .map(|(w, (l, r))| w - wl * l - wr * r)
            .collect()
    }

    pub fn check_len(&self, surface: &ConformalSurface) -> Result<(), SurfaceError> {
        if self.omega.len() != surface.sigma.len() {
            return Err(SurfaceError::Parameter(format!(
                "factor has {} samples, grid has {}",
                self.omega.len(),
                surface.sigma.len()
            )));
        }
        if self.omega.iter().any(|v| !v.is_finite()) {
            return Err(SurfaceError::Parameter("factor has non-finite samples".into()));
        }
        Ok(())
    }
}

/// Smooth monotone step: 0 for `t <= 0`, 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let f = |u: f64| (-1.0 / u).exp();
    f(t) / (f(t) + f(1.0 - t))
}

/// Cutoff `chi(u)`: 1 for `u < eps/2`, 0 for `u > 3 eps/4`.
pub fn cutoff(u: f64, eps: f64) -> f64 {
    1.0 - smooth_step((u - 0.5 * eps) / (0.25 * eps))
}

fn cutoff_field(surface: &ConformalSurface, side: Side) -> Vec<f64> {
    surface
        .bdf(side)
        .iter()
        .map(|&x| cutoff(x, CUTOFF_EPS))
        .collect()
}

/// Compactly supported bump `amplitude * exp(1 - 1/(1 - t^2))`,
/// `t = (sigma - center) / width`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

fn bump_value(b: &BumpSpec, sigma: f64) -> f64 {
    let t = (sigma - b.center) / b.width;
    if t.abs() >= 1.0 {
        0.0
    } else {
        b.amplitude * (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

fn check_bump(b: &BumpSpec) -> Result<(), SurfaceError> {
    if !(b.width > 0.0) || b.center - b.width < 0.0 || b.center + b.width > 1.0 {
        return Err(SurfaceError::Parameter(format!(
            "bump support [{}, {}] must lie inside [0, 1]",
            b.center - b.width,
            b.center + b.width
        )));
    }
    if !b.amplitude.is_finite() {
        return Err(SurfaceError::Parameter("bump amplitude must be finite".into()));
    }
    Ok(())
}

pub fn bump(surface: &ConformalSurface, spec: &BumpSpec) -> Result<ConformalFactor, SurfaceError> {
    check_bump(spec)?;
    Ok(ConformalFactor::new(
        surface.sigma.iter().map(|&s| bump_value(spec, s)).collect(),
    ))
}

/// `omega = log(1 + b)` with `b = A (bump_1 - k bump_2)` and `k` chosen so
/// `int b dvol_0 = 0`; the renormalized area is then unchanged.
pub fn balanced_bump(
    surface: &ConformalSurface,
    first: &BumpSpec,
    second: &BumpSpec,
) -> Result<ConformalFactor, SurfaceError> {
    check_bump(first)?;
    check_bump(second)?;
    let dens = surface.area_density(&vec![0.0; surface.sigma.len()]);
    let weighted = |b: &BumpSpec| {
        let v: Vec<f64> = surface
            .sigma
            .iter()
            .zip(&dens)
            .map(|(&s, d)| {
                let bv = bump_value(b, s);
                if bv == 0.0 {
                    0.0
                } else {
                    bv * d
                }
            })
            .collect();
        simpson(&v, surface.h())
    };
    let unit = |b: &BumpSpec| BumpSpec {
        amplitude: 1.0,
        ..*b
    };
    let i1 = weighted(&unit(first));
    let i2 = weighted(&unit(second));
    if i2.abs() < 1e-14 {
        return Err(SurfaceError::Parameter("second bump has no area".into()));
    }
    let k = i1 / i2;
    let omega: Vec<f64> = surface
        .sigma
        .iter()
        .map(|&s| {
            let b = first.amplitude * (bump_value(&unit(first), s) - k * bump_value(&unit(second), s));
            (1.0 + b).ln()
        })
        .collect();
    if omega.iter().any(|v| !v.is_finite()) {
        return Err(SurfaceError::Parameter(
            "balanced bump amplitude drives the metric negative".into(),
        ));
    }
    Ok(ConformalFactor::new(omega))
}

/// `a * x * chi(x)` at one end: a factor with a nonzero linear term.
pub fn linear_end_term(surface: &ConformalSurface, side: Side, a: f64) -> ConformalFactor {
    ConformalFactor::new(
        surface
            .bdf(side)
            .iter()
            .map(|&x| if x.is_finite() { a * x * cutoff(x, CUTOFF_EPS) } else { 0.0 })
            .collect(),
    )
}

/// Sum of `count` random compact bumps, reproducible from `seed`.
pub fn random_bumps(surface: &ConformalSurface, count: usize, max_amplitude: f64, seed: u64) -> ConformalFactor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut omega = vec![0.0; surface.sigma.len()];
    for _ in 0..count {
        let width = rng.random_range(0.05..0.2);
        let center = rng.random_range(width + 0.02..1.0 - width - 0.02);
        let spec = BumpSpec {
            amplitude: rng.random_range(-max_amplitude..max_amplitude),
            center,
            width,
        };
        for (w, &s) in omega.iter_mut().zip(&surface.sigma) {
            *w += bump_value(&spec, s);
        }
    }
    ConformalFactor::new(omega)
}

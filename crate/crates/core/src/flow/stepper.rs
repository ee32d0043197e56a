use serde::{Deserialize, Serialize};

use super::FlowError;
use crate::numerics::solve_tridiagonal;
use crate::surface::{laplacian_background, ConformalSurface};

/// Time integrator for the conformal factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stepper {
    ExplicitEuler,
    ExplicitRk4,
    /// Linearly implicit two-stage Rosenbrock scheme (L-stable, second
    /// order) with the exact tridiagonal Jacobian.
    Imex,
}

impl Stepper {
    pub fn order(&self) -> u32 {
        match self {
            Stepper::ExplicitEuler => 1,
            Stepper::ExplicitRk4 => 4,
            Stepper::Imex => 2,
        }
    }
}

/// `d omega / dt = C - e^{-omega}(Delta_0 omega + R_0)`. At boundary nodes
/// `Delta_0` vanishes and `R_0 = r_i`, which is the boundary ODE.
pub fn rhs(surface: &ConformalSurface, omega: &[f64], c: f64) -> Vec<f64> {
    let lw = laplacian_background(surface, omega);
    let r0 = surface.background_curvature();
    omega
        .iter()
        .zip(lw.iter().zip(r0))
        .map(|(w, (l, r))| c - (-w).exp() * (l + r))
        .collect()
}

/// Gershgorin bound on the spectral radius of the Jacobian of [`rhs`].
pub fn stiffness_bound(surface: &ConformalSurface, omega: &[f64]) -> f64 {
    let n = surface.intervals();
    let inv_h2 = (n * n) as f64;
    let a = surface.a_half();
    let k = surface.kappa0();
    let lw = laplacian_background(surface, omega);
    let r0 = surface.background_curvature();
    (0..=n)
        .map(|i| {
            let e = (-omega[i]).exp();
            let diff = if i == 0 || i == n {
                0.0
            } else {
                2.0 * e * k[i] * (a[i] + a[i - 1]) * inv_h2
            };
            diff + (e * (lw[i] + r0[i])).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest stable explicit step for the given stepper.
pub fn explicit_dt_limit(stepper: Stepper, surface: &ConformalSurface, omega: &[f64]) -> Option<f64> {
    let region = match stepper {
        Stepper::ExplicitEuler => 2.0,
        Stepper::ExplicitRk4 => 2.78,
        Stepper::Imex => return None,
    };
    Some(region / stiffness_bound(surface, omega))
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| yi + a * xi).collect()
}

fn rosenbrock(surface: &ConformalSurface, omega: &[f64], c: f64, dt: f64) -> Vec<f64> {
    let gamma = 1.0 + std::f64::consts::FRAC_1_SQRT_2;
    let n = surface.intervals();
    let inv_h2 = (n * n) as f64;
    let a = surface.a_half();
    let k = surface.kappa0();
    let lw = laplacian_background(surface, omega);
    let r0 = surface.background_curvature();
    let g = gamma * dt;
    let mut lower = vec![0.0; n + 1];
    let mut diag = vec![0.0; n + 1];
    let mut upper = vec![0.0; n + 1];
    for i in 0..=n {
        let e = (-omega[i]).exp();
        // J = diag(e (L w + R_0)) - diag(e) L
        let mut jd = e * (lw[i] + r0[i]);
        if i > 0 && i < n {
            let kl = k[i] * inv_h2;
            jd -= e * kl * (a[i] + a[i - 1]);
            lower[i] = -g * e * kl * a[i - 1];
            upper[i] = -g * e * kl * a[i];
        }
        diag[i] = 1.0 - g * jd;
    }
    let f0 = rhs(surface, omega, c);
    let mut k1 = f0;
    solve_tridiagonal(&lower, &diag, &upper, &mut k1);
    let mid = axpy(dt, &k1, omega);
    let f1 = rhs(surface, &mid, c);
    let mut k2: Vec<f64> = f1.iter().zip(&k1).map(|(f, k)| f - 2.0 * k).collect();
    solve_tridiagonal(&lower, &diag, &upper, &mut k2);
    omega
        .iter()
        .zip(k1.iter().zip(&k2))
        .map(|(w, (a, b))| w + dt * (1.5 * a + 0.5 * b))
        .collect()
}

/// Advances `omega` by one step of size `dt`.
pub fn advance(
    surface: &ConformalSurface,
    omega: &[f64],
    c: f64,
    dt: f64,
    stepper: Stepper,
) -> Result<Vec<f64>, FlowError> {
    if let Some(limit) = explicit_dt_limit(stepper, surface, omega) {
        if dt > limit {
            return Err(FlowError::Cfl { dt, limit });
        }
    }
    Ok(match stepper {
        Stepper::ExplicitEuler => axpy(dt, &rhs(surface, omega, c), omega),
        Stepper::ExplicitRk4 => {
            let k1 = rhs(surface, omega, c);
            let k2 = rhs(surface, &axpy(0.5 * dt, &k1, omega), c);
            let k3 = rhs(surface, &axpy(0.5 * dt, &k2, omega), c);
            let k4 = rhs(surface, &axpy(dt, &k3, omega), c);
            omega
                .iter()
                .enumerate()
                .map(|(i, w)| w + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                .collect()
        }
        Stepper::Imex => rosenbrock(surface, omega, c, dt),
    })
}

/// One step of the boundary law `omega_i' = C - e^{-omega_i} r_i` with the
/// same scheme the interior uses.
pub fn boundary_ode_step(omega_i: f64, r_i: f64, c: f64, dt: f64, stepper: Stepper) -> f64 {
    let f = |w: f64| c - (-w).exp() * r_i;
    match stepper {
        Stepper::ExplicitEuler => omega_i + dt * f(omega_i),
        Stepper::ExplicitRk4 => {
            let k1 = f(omega_i);
            let k2 = f(omega_i + 0.5 * dt * k1);
            let k3 = f(omega_i + 0.5 * dt * k2);
            let k4 = f(omega_i + dt * k3);
            omega_i + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        }
        Stepper::Imex => {
            let gamma = 1.0 + std::f64::consts::FRAC_1_SQRT_2;
            let j = (-omega_i).exp() * r_i;
            let w = 1.0 - gamma * dt * j;
            let k1 = f(omega_i) / w;
            let k2 = (f(omega_i + dt * k1) - 2.0 * k1) / w;
            omega_i + dt * (1.5 * k1 + 0.5 * k2)
        }
    }
}

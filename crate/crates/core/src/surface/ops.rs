use serde::{Deserialize, Serialize};

use super::{ConformalFactor, ConformalSurface, EndKind, Side, CUTOFF_EPS};
use crate::numerics::lagrange_eval;
use crate::renorm::{fit_boundary_expansion, Anchor, Order, RenormError};

/// Positive Laplacian of the background metric,
/// `-kappa_0 [a_{i+1/2}(u_{i+1} - u_i) - a_{i-1/2}(u_i - u_{i-1})] / h^2`,
/// zero at the (degenerate) boundary nodes.
pub fn laplacian_background(surface: &ConformalSurface, u: &[f64]) -> Vec<f64> {
    let n = surface.intervals();
    let inv_h2 = (n * n) as f64;
    let a = &surface.a_half;
    let mut out = vec![0.0; n + 1];
    for i in 1..n {
        let flux = a[i] * (u[i + 1] - u[i]) - a[i - 1] * (u[i] - u[i - 1]);
        out[i] = -surface.kappa0[i] * flux * inv_h2;
    }
    out
}

/// Positive Laplacian of `e^{omega} g_0` applied to `u`.
pub fn laplacian_apply(surface: &ConformalSurface, omega: &ConformalFactor, u: &[f64]) -> Vec<f64> {
    laplacian_background(surface, u)
        .into_iter()
        .zip(&omega.omega)
        .map(|(l, w)| (-w).exp() * l)
        .collect()
}

/// `R = e^{-omega}(R_0 + Delta_0 omega)`; boundary nodes use `e^{-omega_i} r_i`.
pub fn scalar_curvature(surface: &ConformalSurface, omega: &ConformalFactor) -> Vec<f64> {
    let lw = laplacian_background(surface, &omega.omega);
    let n = surface.intervals();
    let mut r: Vec<f64> = (0..=n)
        .map(|i| (-omega.omega[i]).exp() * (surface.r0[i] + lw[i]))
        .collect();
    r[0] = (-omega.omega[0]).exp() * surface.ends[0].curvature_asymptote;
    r[n] = (-omega.omega[n]).exp() * surface.ends[1].curvature_asymptote;
    r
}

/// `|grad u|^2` in `e^{omega} g_0`; boundary values extrapolated from the
/// interior.
pub fn gradient_norm_sq(surface: &ConformalSurface, omega: &ConformalFactor, u: &[f64]) -> Vec<f64> {
    let n = surface.intervals();
    let h = surface.h();
    let mut g = vec![0.0; n + 1];
    for i in 1..n {
        let du = (u[i + 1] - u[i - 1]) / (2.0 * h);
        g[i] = (-omega.omega[i]).exp() * surface.kappa0[i] * surface.a_node[i] * du * du;
    }
    let xs = [1.0, 2.0, 3.0];
    g[0] = lagrange_eval(&xs, &g[1..4], 0.0).max(0.0);
    let tail = [g[n - 1], g[n - 2], g[n - 3]];
    g[n] = lagrange_eval(&xs, &tail, 0.0).max(0.0);
    g
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicReport {
    pub side: Side,
    pub kind: EndKind,
    /// Linear coefficient of `(phi + omega) - (phi_i + omega_i)` in `x_i`;
    /// absent at cusp ends.
    pub linear_coefficient: Option<f64>,
    pub totally_geodesic: bool,
}

fn fit_window(x: &[f64]) -> usize {
    let k = x[1..]
        .iter()
        .take_while(|&&v| v < 0.5 * CUTOFF_EPS)
        .count();
    k.clamp(8, 32)
}

/// Linear coefficient of the total factor's deviation from its boundary
/// value at each funnel end.
pub fn check_totally_geodesic(
    surface: &ConformalSurface,
    omega: &ConformalFactor,
    tol: f64,
) -> Result<Vec<GeodesicReport>, RenormError> {
    let mut out = Vec::new();
    for (side, anchor) in [(Side::Left, Anchor::Left), (Side::Right, Anchor::Right)] {
        let end = surface.end(side);
        if end.kind == EndKind::Cusp {
            out.push(GeodesicReport {
                side,
                kind: end.kind,
                linear_coefficient: None,
                totally_geodesic: true,
            });
            continue;
        }
        let x_all = surface.bdf(side);
        let n = surface.intervals();
        let idx = |j: usize| match side {
            Side::Left => j,
            Side::Right => n - j,
        };
        let x_near: Vec<f64> = (0..=n / 2).map(|j| x_all[idx(j)]).collect();
        let k = fit_window(&x_near);
        let b = idx(0);
        let base = surface.background_phi[b] + omega.omega[b];
        let samples: Vec<f64> = (1..=k)
            .map(|j| surface.background_phi[idx(j)] + omega.omega[idx(j)] - base)
            .collect();
        let basis: Vec<Order> = (1..=4).map(|s| Order::new(s as f64, 0)).collect();
        let e = fit_boundary_expansion(&samples, &x_near[1..=k], &basis, anchor)?;
        let c = e.coefficient(1.0, 0);
        out.push(GeodesicReport {
            side,
            kind: end.kind,
            linear_coefficient: Some(c),
            totally_geodesic: c.abs() <= tol,
        });
    }
    Ok(out)
}

/// `-(phi_i + omega_i) / 2` at each funnel end.
pub fn geodesic_bdf_shift(surface: &ConformalSurface, omega: &ConformalFactor) -> Vec<(Side, f64)> {
    [Side::Left, Side::Right]
        .into_iter()
        .filter(|&s| surface.end(s).kind == EndKind::Funnel)
        .map(|s| (s, -0.5 * (surface.end(s).phi_asymptote + omega.boundary_value(s))))
        .collect()
}

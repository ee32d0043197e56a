//! S^1-invariant funnel/cusp cylinders as one-dimensional problems on a
//! compactified grid.

mod chart;
mod factor;
mod io;
mod ops;

pub use chart::{Chart, EndKind, Side};
pub use factor::{
    balanced_bump, bump, cutoff, linear_end_term, random_bumps, smooth_step, BumpSpec,
    ConformalFactor, CUTOFF_EPS,
};
pub use io::SurfaceDocument;
pub use ops::{
    check_totally_geodesic, geodesic_bdf_shift, gradient_norm_sq, laplacian_apply,
    laplacian_background, scalar_curvature, GeodesicReport,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::renorm::{cusp_basis, funnel_basis, EndChart, Integrand};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("malformed surface document: {0}")]
    Document(String),
}

/// Asymptotic data of one end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndModel {
    pub kind: EndKind,
    pub bdf_name: String,
    /// Boundary value of the background factor relative to the model.
    pub phi_asymptote: f64,
    /// `r_i = -2 e^{-phi_i}`.
    pub curvature_asymptote: f64,
    /// Decay order of the factor toward its boundary value.
    pub decay_order: f64,
}

/// Background metric `g_0 = e^{phi} g_model` on `N + 1` uniform nodes in the
/// compactified coordinate, with cached discretization coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalSurface {
    pub chart: Chart,
    pub sigma: Vec<f64>,
    /// Regular background factor `phi` relative to the model metric.
    pub background_phi: Vec<f64>,
    pub ends: [EndModel; 2],
    pub euler_characteristic: i32,
    pub n_cusps: u32,
    /// `a` at half nodes `i + 1/2`.
    pub(crate) a_half: Vec<f64>,
    /// `e^{-phi} kappa` at nodes.
    pub(crate) kappa0: Vec<f64>,
    /// `a` at nodes.
    pub(crate) a_node: Vec<f64>,
    /// Scalar curvature of `g_0`.
    pub(crate) r0: Vec<f64>,
}

pub fn validate_grid(n: usize) -> Result<(), SurfaceError> {
    if n < 16 || n % 4 != 0 {
        return Err(SurfaceError::Parameter(format!(
            "grid size must be a multiple of 4 and at least 16 (got {n})"
        )));
    }
    Ok(())
}

/// Standard model for the given end kinds: horn (either orientation),
/// hyperbolic cylinder with unit geodesic, or the finite-area cusp-cusp
/// cylinder.
pub fn build_model_surface(
    left: EndKind,
    right: EndKind,
    grid_size: usize,
) -> Result<ConformalSurface, SurfaceError> {
    let chart = match (left, right) {
        (EndKind::Funnel, EndKind::Cusp) => Chart::Horn,
        (EndKind::Cusp, EndKind::Funnel) => Chart::MirroredHorn,
        (EndKind::Funnel, EndKind::Funnel) => Chart::HyperbolicCylinder { length: 1.0 },
        (EndKind::Cusp, EndKind::Cusp) => Chart::CuspCusp,
    };
    ConformalSurface::new(chart, grid_size, None)
}

impl ConformalSurface {
    /// Surface on `chart` with regular background factor `phi` (zero when
    /// omitted).
    pub fn new(chart: Chart, n: usize, phi: Option<Vec<f64>>) -> Result<Self, SurfaceError> {
        validate_grid(n)?;
        if let Chart::HyperbolicCylinder { length } = chart {
            if !(length > 0.0 && length.is_finite()) {
                return Err(SurfaceError::Parameter(format!(
                    "geodesic length must be positive (got {length})"
                )));
            }
        }
        let phi = phi.unwrap_or_else(|| vec![0.0; n + 1]);
        if phi.len() != n + 1 || phi.iter().any(|v| !v.is_finite()) {
            return Err(SurfaceError::Parameter(
                "background factor must have N + 1 finite samples".into(),
            ));
        }
        let h = 1.0 / n as f64;
        let sigma: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let a_half = (0..n).map(|i| chart.a((i as f64 + 0.5) * h)).collect();
        let a_node = sigma.iter().map(|&s| chart.a(s)).collect();
        let kappa0 = sigma
            .iter()
            .zip(&phi)
            .map(|(&s, p)| (-p).exp() * chart.kappa(s))
            .collect();
        let (lk, rk) = chart.ends();
        let end = |kind: EndKind, name: &str, p: f64| EndModel {
            kind,
            bdf_name: name.to_string(),
            phi_asymptote: p,
            curvature_asymptote: chart.end_curvature() * (-p).exp(),
            decay_order: 2.0,
        };
        let ends = [end(lk, "x_left", phi[0]), end(rk, "x_right", phi[n])];
        let n_cusps = [lk, rk].iter().filter(|k| **k == EndKind::Cusp).count() as u32;
        let mut s = Self {
            chart,
            sigma,
            background_phi: phi,
            ends,
            euler_characteristic: 0,
            n_cusps,
            a_half,
            kappa0,
            a_node,
            r0: Vec::new(),
        };
        // R_0 = e^{-phi} R_model + Delta_0 phi, with boundary nodes carrying
        // the asymptotic law.
        let lphi = laplacian_background(&s, &s.background_phi);
        let mut r0: Vec<f64> = (0..=n)
            .map(|i| (-s.background_phi[i]).exp() * chart.curvature(s.sigma[i]) + lphi[i])
            .collect();
        r0[0] = s.ends[0].curvature_asymptote;
        r0[n] = s.ends[1].curvature_asymptote;
        s.r0 = r0;
        Ok(s)
    }

    /// Same chart with the background shifted by a constant, so every
    /// curvature scales by `e^{-c}`.
    pub fn with_background_shift(&self, c: f64) -> Result<Self, SurfaceError> {
        let phi = self.background_phi.iter().map(|p| p + c).collect();
        Self::new(self.chart, self.intervals(), Some(phi))
    }

    pub fn intervals(&self) -> usize {
        self.sigma.len() - 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.intervals() as f64
    }

    pub fn end(&self, side: Side) -> &EndModel {
        match side {
            Side::Left => &self.ends[0],
            Side::Right => &self.ends[1],
        }
    }

    pub fn boundary_node(&self, side: Side) -> usize {
        match side {
            Side::Left => 0,
            Side::Right => self.intervals(),
        }
    }

    pub fn has_funnel(&self) -> bool {
        self.ends.iter().any(|e| e.kind == EndKind::Funnel)
    }

    pub fn finite_area(&self) -> bool {
        !self.has_funnel()
    }

    pub fn background_curvature(&self) -> &[f64] {
        &self.r0
    }

    /// `e^{-phi} kappa` at each node.
    pub fn kappa0(&self) -> &[f64] {
        &self.kappa0
    }

    /// `a = dsigma/ds` at half nodes.
    pub fn a_half(&self) -> &[f64] {
        &self.a_half
    }

    /// Bdf of one end at every node (infinite on the far half).
    pub fn bdf(&self, side: Side) -> Vec<f64> {
        self.sigma.iter().map(|&s| self.chart.bdf(side, s)).collect()
    }

    pub fn total_bdf(&self) -> Vec<f64> {
        self.sigma.iter().map(|&s| self.chart.total_bdf(s)).collect()
    }

    /// `sigma`-density of the area form of `e^{omega} g_0`; infinite at
    /// funnel boundary nodes.
    pub fn area_density(&self, omega: &[f64]) -> Vec<f64> {
        self.kappa0
            .iter()
            .zip(omega)
            .map(|(k, w)| if *k > 0.0 { w.exp() / k } else { f64::INFINITY })
            .collect()
    }

    fn end_chart(&self, side: Side) -> Option<EndChart> {
        let e = self.end(side);
        if e.kind != EndKind::Funnel {
            return None;
        }
        Some(EndChart {
            x: self.bdf(side),
            dx: self
                .sigma
                .iter()
                .map(|&s| self.chart.bdf_derivative(side, s))
                .collect(),
            basis: funnel_basis(),
        })
    }

    /// Wraps a `sigma`-density for finite-part integration; funnel ends are
    /// treated as divergent, cusp ends as ordinary.
    pub fn integrand(&self, density: Vec<f64>) -> Integrand {
        Integrand {
            density,
            total_bdf: self.total_bdf(),
            left: self.end_chart(Side::Left),
            right: self.end_chart(Side::Right),
        }
    }

    /// Like [`Self::integrand`] but fitting the cusp basis (with the
    /// logarithmic order) at funnel ends.
    pub fn integrand_with_logs(&self, density: Vec<f64>) -> Integrand {
        let mut f = self.integrand(density);
        for c in [&mut f.left, &mut f.right].into_iter().flatten() {
            c.basis = cusp_basis();
        }
        f
    }
}

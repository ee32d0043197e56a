//! Renormalized geometry on surfaces with funnel and cusp ends: finite-part
//! integrals, normalized Ricci flow, potential functions and Laplacian
//! determinants.

pub mod determinant;
pub mod flow;
pub mod numerics;
pub mod potential;
pub mod renorm;
pub mod surface;

use serde::{Deserialize, Serialize};

use super::{Chart, ConformalFactor, ConformalSurface, EndModel, SurfaceError};

pub const SURFACE_FORMAT_VERSION: u32 = 1;

/// JSON form of a surface (and optionally a factor on it).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDocument {
    pub format_version: u32,
    pub chart: Chart,
    pub grid_size: usize,
    pub background_phi: Vec<f64>,
    /// Informational; recomputed on load.
    #[serde(default)]
    pub ends: Vec<EndModel>,
    #[serde(default)]
    pub omega: Option<Vec<f64>>,
}

impl SurfaceDocument {
    pub fn from_surface(surface: &ConformalSurface, omega: Option<&ConformalFactor>) -> Self {
        Self {
            format_version: SURFACE_FORMAT_VERSION,
            chart: surface.chart,
            grid_size: surface.intervals(),
            background_phi: surface.background_phi.clone(),
            ends: surface.ends.to_vec(),
            omega: omega.map(|w| w.omega.clone()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("surface document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SurfaceError> {
        let doc: Self =
            serde_json::from_str(text).map_err(|e| SurfaceError::Document(e.to_string()))?;
        if doc.format_version != SURFACE_FORMAT_VERSION {
            return Err(SurfaceError::Document(format!(
                "unsupported format_version {}",
                doc.format_version
            )));
        }
        Ok(doc)
    }

    /// Rebuilds the surface and factor, validating sizes.
    pub fn build(&self) -> Result<(ConformalSurface, Option<ConformalFactor>), SurfaceError> {
        let s = ConformalSurface::new(self.chart, self.grid_size, Some(self.background_phi.clone()))?;
        let w = match &self.omega {
            Some(v) => {
                let f = ConformalFactor::new(v.clone());
                f.check_len(&s)?;
                Some(f)
            }
            None => None,
        };
        Ok((s, w))
    }
}

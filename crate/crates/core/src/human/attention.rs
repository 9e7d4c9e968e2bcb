//! Gaze-based attention toward a region of interest.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{construction, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Roi {
    Task,
    Instructions,
    Cobot,
}

impl Roi {
    pub const ALL: [Roi; 3] = [Roi::Task, Roi::Instructions, Roi::Cobot];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Physical extent of a region of interest and the span of the smooth
/// fall-off around it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiGeometry {
    pub roi: Roi,
    /// Width (m), used for the azimuth.
    pub width: f64,
    /// Height (m), used for the elevation.
    pub height: f64,
    /// Span parameter in `(0, 1)`.
    pub gamma: f64,
}

impl RoiGeometry {
    pub fn new(roi: Roi, width: f64, height: f64, gamma: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) {
            return Err(construction("RoI extents must be positive"));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(construction("RoI span parameter must lie in (0, 1)"));
        }
        Ok(RoiGeometry { roi, width, height, gamma })
    }

    /// Default extents: a workbench area, an instruction monitor, and the
    /// robot end-effector.
    pub fn defaults() -> [RoiGeometry; 3] {
        [
            RoiGeometry { roi: Roi::Task, width: 0.6, height: 0.4, gamma: 0.4 },
            RoiGeometry { roi: Roi::Instructions, width: 0.5, height: 0.3, gamma: 0.4 },
            RoiGeometry { roi: Roi::Cobot, width: 0.2, height: 0.2, gamma: 0.4 },
        ]
    }
}

/// Head-frame spherical coordinates of a RoI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeAngles {
    /// Azimuth (rad).
    pub theta: f64,
    /// Elevation (rad).
    pub phi: f64,
    /// Distance (m).
    pub r: f64,
}

/// Angular limits `(alpha_min, alpha_max)` of the flat region and of the
/// raised-cosine fall-off for an extent `a` seen from distance `r`.
pub fn attention_limits(a: f64, r: f64, gamma: f64) -> (f64, f64) {
    let r = r.max(f64::MIN_POSITIVE);
    (
        ((1.0 - gamma) * a / (2.0 * r)).atan(),
        ((1.0 + gamma) * a / (2.0 * r)).atan(),
    )
}

/// Raised-cosine indicator: 1 inside `alpha_min`, 0 beyond `alpha_max`.
pub fn attention_component(alpha: f64, a: f64, r: f64, gamma: f64) -> f64 {
    let (lo, hi) = attention_limits(a, r, gamma);
    let x = alpha.abs();
    if x <= lo {
        1.0
    } else if x <= hi {
        0.5 * (1.0 + (PI * (x - lo) / (hi - lo)).cos())
    } else {
        0.0
    }
}

/// Attention `Λ` toward `roi`: product of azimuth and elevation indicators.
pub fn attention_level(gaze: &GazeAngles, roi: &RoiGeometry) -> f64 {
    attention_component(gaze.theta, roi.width, gaze.r, roi.gamma)
        * attention_component(gaze.phi, roi.height, gaze.r, roi.gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits_for_reference_geometry() {
        let (lo, hi) = attention_limits(0.2, 1.0, 0.4);
        assert!((lo - 0.06f64.atan()).abs() < 1e-15);
        assert!((hi - 0.14f64.atan()).abs() < 1e-15);
        assert!((lo - 0.0599).abs() < 1e-4);
        assert!((hi - 0.1391).abs() < 1e-4);
    }

    #[test]
    fn component_shape() {
        let (lo, hi) = attention_limits(0.2, 1.0, 0.4);
        assert_eq!(attention_component(lo, 0.2, 1.0, 0.4), 1.0);
        assert_eq!(attention_component(-lo, 0.2, 1.0, 0.4), 1.0);
        let mid = attention_component(0.5 * (lo + hi), 0.2, 1.0, 0.4);
        assert!((mid - 0.5).abs() < 1e-12);
        assert!(attention_component(hi, 0.2, 1.0, 0.4).abs() < 1e-15);
        assert_eq!(attention_component(hi + 1e-9, 0.2, 1.0, 0.4), 0.0);
    }

    #[test]
    fn level_is_product() {
        let roi = RoiGeometry::new(Roi::Cobot, 0.2, 0.2, 0.4).unwrap();
        let inside = GazeAngles { theta: 0.0, phi: 0.01, r: 1.0 };
        assert_eq!(attention_level(&inside, &roi), 1.0);
        let off = GazeAngles { theta: 0.5, phi: 0.0, r: 1.0 };
        assert_eq!(attention_level(&off, &roi), 0.0);
        let (lo, hi) = attention_limits(0.2, 1.0, 0.4);
        let half = GazeAngles { theta: 0.5 * (lo + hi), phi: -0.5 * (lo + hi), r: 1.0 };
        assert!((attention_level(&half, &roi) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn geometry_validation() {
        assert!(RoiGeometry::new(Roi::Task, 0.0, 1.0, 0.4).is_err());
        assert!(RoiGeometry::new(Roi::Task, 1.0, 1.0, 1.0).is_err());
    }
}

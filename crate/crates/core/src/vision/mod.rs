//! Camera-side perception: detections, the bounding-box-height range
//! regression with its binning rule, and a queue-based tracker that keeps
//! object identities alive through detector flicker.

mod synth;
mod tracker;

pub use synth::{synth_detect, NoiseParams};
pub use tracker::VisionTracker;

use crate::geometry::ImageBox;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum VisionError {
    #[error("bounding-box height must be positive, got {0}")]
    NonPositiveHeight(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectClass {
    Car,
    Pedestrian,
    Other,
}

impl ObjectClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectClass::Car => "car",
            ObjectClass::Pedestrian => "pedestrian",
            ObjectClass::Other => "other",
        }
    }
}

/// One detector output box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub class: ObjectClass,
    pub confidence: f64,
    pub bbox: ImageBox,
}

/// A tracked vision object. `distance` is present only for cars whose
/// height-based estimate survived the far-range cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisionTrack {
    pub id: u64,
    pub detection: Detection,
    pub distance: Option<f64>,
    /// Frame index of the last real detection backing this track.
    pub last_seen: u64,
}

/// Power-law fit from bounding-box height to range, with the binning rule
/// applied when quantized output is wanted.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub coeff: f64,
    pub exponent: f64,
    /// Bin representatives; edges sit at the midpoints.
    pub bin_centers: Vec<f64>,
    pub min_distance: f64,
    pub max_distance: f64,
}

impl Default for RegressionModel {
    fn default() -> Self {
        Self {
            coeff: 1829.1,
            exponent: -1.093,
            bin_centers: vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0],
            min_distance: 5.0,
            max_distance: 60.0,
        }
    }
}

impl RegressionModel {
    /// Raw range estimate from a box height in pixels.
    pub fn estimate_distance(&self, h_bbox: f64) -> Result<f64, VisionError> {
        if h_bbox <= 0.0 {
            return Err(VisionError::NonPositiveHeight(h_bbox));
        }
        Ok(self.coeff * h_bbox.powf(self.exponent))
    }

    /// Quantizes an estimate: beyond `max_distance` the value is unusable
    /// and discarded (`None`); inside [min, max] it snaps to the nearest bin
    /// center; below `min_distance` it passes through untouched.
    pub fn bin_distance(&self, d: f64) -> Option<f64> {
        debug_assert!(d > 0.0);
        if d > self.max_distance {
            return None;
        }
        if d < self.min_distance {
            return Some(d);
        }
        self.bin_centers
            .iter()
            .copied()
            .min_by(|a, b| {
                (a - d).abs().total_cmp(&(b - d).abs())
            })
            .or(Some(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_matches_fit() {
        let m = RegressionModel::default();
        assert!((m.estimate_distance(100.0).unwrap() - 11.92).abs() < 0.01);
        assert!((m.estimate_distance(30.0).unwrap() - 44.44).abs() < 0.01);
    }

    #[test]
    fn regression_power_law_scaling() {
        let m = RegressionModel::default();
        let d1 = m.estimate_distance(50.0).unwrap();
        let d2 = m.estimate_distance(100.0).unwrap();
        // Doubling the height scales the distance by 2^exponent.
        assert!((d2 / d1 - 2.0f64.powf(-1.093)).abs() < 1e-12);
        assert!((d2 / d1 - 0.469).abs() < 5e-4);
    }

    #[test]
    fn regression_is_strictly_decreasing() {
        let m = RegressionModel::default();
        let mut prev = f64::INFINITY;
        for h in 1..400 {
            let d = m.estimate_distance(h as f64).unwrap();
            assert!(d < prev);
            prev = d;
        }
    }

    #[test]
    fn regression_rejects_bad_height() {
        let m = RegressionModel::default();
        assert_eq!(
            m.estimate_distance(0.0),
            Err(VisionError::NonPositiveHeight(0.0))
        );
        assert!(m.estimate_distance(-3.0).is_err());
    }

    #[test]
    fn binning_rule() {
        let m = RegressionModel::default();
        assert_eq!(m.bin_distance(44.44), Some(40.0));
        assert_eq!(m.bin_distance(61.0), None);
        assert_eq!(m.bin_distance(10.0), Some(10.0));
        assert_eq!(m.bin_distance(3.2), Some(3.2));
    }

    #[test]
    fn binning_is_idempotent() {
        let m = RegressionModel::default();
        for i in 1..600 {
            let d = i as f64 * 0.1;
            if let Some(b) = m.bin_distance(d) {
                assert_eq!(m.bin_distance(b), Some(b), "d = {d}");
            }
        }
    }
}

//! Synthetic box detector standing in for a neural detector in scenario
//! runs: projects target cuboids into the image, jitters the box edges with
//! pixel noise, drops frames at a configured flicker probability and
//! suppresses targets beyond the usable range.

use super::{Detection, ObjectClass};
use crate::geometry::{project_cuboid, CameraModel, Cuboid};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Gaussian sigma added to each box edge, pixels.
    pub pixel_sigma: f64,
    /// Probability a visible target produces no detection this frame.
    pub flicker_prob: f64,
    /// Hard range cutoff for detections, meters.
    pub max_vision_range_m: f64,
    /// Detections below this confidence are dropped before tracking.
    pub confidence_floor: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            pixel_sigma: 0.15,
            flicker_prob: 0.02,
            max_vision_range_m: 60.0,
            confidence_floor: 0.25,
        }
    }
}

/// Produces detections for the given targets. Confidence decays with range
/// so the floor has something to act on.
pub fn synth_detect(
    targets: &[(Cuboid, ObjectClass)],
    cam: &CameraModel,
    noise: &NoiseParams,
    rng: &mut ChaCha8Rng,
) -> Vec<Detection> {
    let pixel = Normal::new(0.0, noise.pixel_sigma.max(1e-12)).expect("sigma >= 0");
    let mut out = Vec::new();
    for (cuboid, class) in targets {
        // Range gate on the nearest footprint point, matching what the
        // LiDAR range cutoff and the gap measure use.
        let dx = (cuboid.center.x.abs() - cuboid.size.0 / 2.0).max(0.0);
        let dy = (cuboid.center.y.abs() - cuboid.size.1 / 2.0).max(0.0);
        let range = (dx * dx + dy * dy).sqrt();
        if range > noise.max_vision_range_m {
            continue;
        }
        let Ok(bbox) = project_cuboid(&cuboid.corners(), cam) else {
            continue;
        };
        if rng.random::<f64>() < noise.flicker_prob {
            continue;
        }
        let jitter = |v: f64, rng: &mut ChaCha8Rng| {
            if noise.pixel_sigma > 0.0 {
                v + pixel.sample(rng)
            } else {
                v
            }
        };
        let bbox = crate::geometry::ImageBox::new(
            jitter(bbox.x1, rng),
            jitter(bbox.y1, rng),
            jitter(bbox.x2, rng),
            jitter(bbox.y2, rng),
        );
        let confidence = (0.95 - 0.4 * range / noise.max_vision_range_m).clamp(0.3, 0.95);
        out.push(Detection {
            class: *class,
            confidence,
            bbox,
        });
    }
    out
}

//! Deterministic synthetic point clouds for scenario runs.
//!
//! Models a 16-channel spinning LiDAR at the sensor origin: channels at
//! fixed elevations, rays stepped across the forward field of view, each ray
//! intersected against target cuboids (nearest hit wins) and otherwise
//! against the ground plane. Occlusion falls out of the ray casting. Every
//! sample gets isotropic Gaussian noise.

use super::PointCloud;
use crate::geometry::{Cuboid, Point3};
use crate::util::{fork_rng, map_slice, Exec};
use rand_distr::{Distribution, Normal};

/// Pose and size of one observable target in the sensor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetObs {
    /// BEV center of the cuboid footprint.
    pub center_xy: [f64; 2],
    /// Full extents (x, y, z).
    pub size: (f64, f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LidarSynthConfig {
    /// Hard range cutoff, meters.
    pub range: f64,
    /// Sensor height above the ground plane, meters.
    pub sensor_height: f64,
    /// Per-axis Gaussian noise sigma, meters.
    pub noise_sigma: f64,
    /// Channel elevations, radians.
    pub elevations: Vec<f64>,
    /// Azimuth step, radians.
    pub azimuth_step: f64,
    /// Forward azimuth field of view, radians (centered on +x).
    pub azimuth_fov: f64,
}

impl Default for LidarSynthConfig {
    fn default() -> Self {
        Self {
            range: 30.0,
            sensor_height: 1.5,
            noise_sigma: 0.02,
            // 16 channels, -15..+15 degrees in 2-degree steps.
            elevations: (0..16).map(|i| (-15.0 + 2.0 * i as f64).to_radians()).collect(),
            azimuth_step: 0.2f64.to_radians(),
            azimuth_fov: std::f64::consts::PI,
        }
    }
}

pub fn synthesize_cloud(
    targets: &[TargetObs],
    cfg: &LidarSynthConfig,
    frame_time: f64,
    seed: u64,
) -> PointCloud {
    synthesize_cloud_exec(targets, cfg, frame_time, seed, Exec::auto())
}

/// As [`synthesize_cloud`] with an explicit execution strategy. Channels are
/// independent RNG streams, so the parallel and sequential paths produce the
/// same cloud.
pub fn synthesize_cloud_exec(
    targets: &[TargetObs],
    cfg: &LidarSynthConfig,
    frame_time: f64,
    seed: u64,
    exec: Exec,
) -> PointCloud {
    let boxes: Vec<Cuboid> = targets
        .iter()
        .map(|t| {
            Cuboid::new(
                Point3::new(
                    t.center_xy[0],
                    t.center_xy[1],
                    -cfg.sensor_height + t.size.2 / 2.0,
                ),
                t.size,
            )
        })
        .collect();

    let channels: Vec<usize> = (0..cfg.elevations.len()).collect();
    let per_channel: Vec<Vec<Point3>> = map_slice(exec, &channels, |&ch| {
        let mut rng = fork_rng(seed, ch as u64);
        let noise = Normal::new(0.0, cfg.noise_sigma).expect("sigma >= 0");
        let elevation = cfg.elevations[ch];
        let (sin_el, cos_el) = elevation.sin_cos();
        let half_fov = cfg.azimuth_fov / 2.0;
        let steps = (cfg.azimuth_fov / cfg.azimuth_step).floor() as usize;
        let mut points = Vec::new();
        for k in 0..=steps {
            let az = -half_fov + k as f64 * cfg.azimuth_step;
            let (sin_az, cos_az) = az.sin_cos();
            let dir = Point3::new(cos_el * cos_az, cos_el * sin_az, sin_el);

            let mut t_hit = f64::INFINITY;
            for b in &boxes {
                if let Some(t) = ray_box(&dir, b) {
                    t_hit = t_hit.min(t);
                }
            }
            // Ground plane z = -sensor_height when nothing nearer.
            if t_hit.is_infinite() && sin_el < -1e-9 {
                t_hit = -cfg.sensor_height / sin_el;
            }
            if !t_hit.is_finite() || t_hit > cfg.range {
                continue;
            }
            points.push(Point3::new(
                dir.x * t_hit + noise.sample(&mut rng),
                dir.y * t_hit + noise.sample(&mut rng),
                dir.z * t_hit + noise.sample(&mut rng),
            ));
        }
        points
    });

    PointCloud::new(per_channel.into_iter().flatten().collect(), frame_time)
}

/// Slab-method ray/AABB intersection from the origin; returns the nearest
/// positive hit parameter.
fn ray_box(dir: &Point3, b: &Cuboid) -> Option<f64> {
    let (hx, hy, hz) = (b.size.0 / 2.0, b.size.1 / 2.0, b.size.2 / 2.0);
    let lo = [b.center.x - hx, b.center.y - hy, b.center.z - hz];
    let hi = [b.center.x + hx, b.center.y + hy, b.center.z + hz];
    let d = [dir.x, dir.y, dir.z];

    let mut t_min = 0.0f64;
    let mut t_max = f64::INFINITY;
    for k in 0..3 {
        if d[k].abs() < 1e-12 {
            if 0.0 < lo[k] || 0.0 > hi[k] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[k];
        let (t0, t1) = ((lo[k] * inv).min(hi[k] * inv), (lo[k] * inv).max(hi[k] * inv));
        t_min = t_min.max(t0);
        t_max = t_max.min(t1);
        if t_min > t_max {
            return None;
        }
    }
    (t_min > 1e-9).then_some(t_min)
}

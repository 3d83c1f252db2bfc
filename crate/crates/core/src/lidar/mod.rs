//! LiDAR perception: downsampling, iterative ground-plane fitting,
//! z-weighted Euclidean clustering and nearest-centroid track management,
//! plus a deterministic ray-cast cloud synthesizer for scenario runs.

mod cluster;
mod ground;
mod synth;
mod tracker;

pub use cluster::{cluster, Cluster};
pub use ground::{ground_plane_fit, ground_plane_fit_exec};
pub use synth::{synthesize_cloud, synthesize_cloud_exec, LidarSynthConfig, TargetObs};
pub use tracker::{LidarTrack, LidarTracker, LidarTrackerParams};

use crate::geometry::Point3;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LidarError {
    #[error("cloud has {got} points but the fit needs at least {needed}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("seed points are degenerate (collinear or coincident); no plane is defined")]
    DegenerateSeeds,
    #[error("no ground points survived the fit")]
    NoGround,
    #[error("cloud io: {0}")]
    Io(String),
}

/// A raw point cloud with its capture time.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub frame_time: f64,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>, frame_time: f64) -> Self {
        Self { points, frame_time }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Fitted ground plane `n1*x + n2*y + n3*z + n4 = 0` with unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneModel {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
}

impl PlaneModel {
    pub fn normal(&self) -> Point3 {
        Point3::new(self.n1, self.n2, self.n3)
    }

    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.n1 * p.x + self.n2 * p.y + self.n3 * p.z + self.n4
    }

    pub fn distance(&self, p: &Point3) -> f64 {
        self.signed_distance(p).abs()
    }
}

/// Constants driving the iterative ground fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpfParams {
    /// Fit/re-partition iterations per segment.
    pub n_iter: usize,
    /// Lowest-point-representative count seeding the first estimate.
    pub n_lpr: usize,
    /// Height band above the LPR admitted as initial seeds, meters.
    pub th_seeds: f64,
    /// Plane-distance threshold classifying ground, meters.
    pub th_dist: f64,
    /// Along-x splits fitted independently before the global refit.
    pub num_segments: usize,
}

impl Default for GpfParams {
    fn default() -> Self {
        Self {
            n_iter: 3,
            n_lpr: 20,
            th_seeds: 0.4,
            th_dist: 0.2,
            num_segments: 3,
        }
    }
}

/// Deterministic stride-based downsample keeping `ceil(n * keep_ratio)`
/// points.
pub fn downsample(cloud: &PointCloud, keep_ratio: f64) -> PointCloud {
    assert!(
        keep_ratio > 0.0 && keep_ratio <= 1.0,
        "keep_ratio must be in (0, 1]"
    );
    let n = cloud.len();
    let m = ((n as f64) * keep_ratio).ceil() as usize;
    if m >= n {
        return cloud.clone();
    }
    let points = (0..m).map(|j| cloud.points[j * n / m]).collect();
    PointCloud::new(points, cloud.frame_time)
}

/// Writes one frame as `x,y,z` CSV lines; the frame index goes in the
/// filename so a directory of dumps replays in order.
pub fn dump_cloud_csv(
    cloud: &PointCloud,
    dir: &std::path::Path,
    frame_index: usize,
) -> Result<std::path::PathBuf, LidarError> {
    use std::io::Write;
    let path = dir.join(format!("cloud_{frame_index:06}.csv"));
    let mut out = std::io::BufWriter::new(
        std::fs::File::create(&path).map_err(|e| LidarError::Io(e.to_string()))?,
    );
    for p in &cloud.points {
        writeln!(out, "{:.6},{:.6},{:.6}", p.x, p.y, p.z)
            .map_err(|e| LidarError::Io(e.to_string()))?;
    }
    Ok(path)
}

pub fn load_cloud_csv(path: &std::path::Path, frame_time: f64) -> Result<PointCloud, LidarError> {
    let text = std::fs::read_to_string(path).map_err(|e| LidarError::Io(e.to_string()))?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split(',').map(str::trim);
        let parse = |s: Option<&str>| -> Result<f64, LidarError> {
            s.ok_or_else(|| LidarError::Io(format!("line {}: missing field", lineno + 1)))?
                .parse::<f64>()
                .map_err(|e| LidarError::Io(format!("line {}: {e}", lineno + 1)))
        };
        points.push(Point3::new(
            parse(it.next())?,
            parse(it.next())?,
            parse(it.next())?,
        ));
    }
    Ok(PointCloud::new(points, frame_time))
}

//! Frame-to-frame track management over extracted clusters.
//!
//! Association is greedy nearest-centroid in ascending distance order,
//! gated by a point-count ratio so a car is not matched to a pole that
//! happens to drift close. Matched tracks take their velocity from the
//! centroid displacement; unmatched clusters spawn new IDs; tracks that
//! miss too many frames in a row are dropped. IDs are never reused.

use super::cluster::Cluster;
use crate::geometry::{BevBox, Point3};

/// A persistent LiDAR object with geometry and kinematics.
#[derive(Debug, Clone, PartialEq)]
pub struct LidarTrack {
    pub id: u64,
    /// Full axis-aligned lengths (x, y, z).
    pub extent: (f64, f64, f64),
    pub closest_point: Point3,
    /// Relative velocity of the tracked centroid, m/s per axis.
    pub velocity: (f64, f64, f64),
    pub bev: BevBox,
    pub age: u32,
    pub misses: u32,
    pub centroid: Point3,
    pub point_count: usize,
}

impl LidarTrack {
    /// Planar range to the closest tracked point.
    pub fn distance(&self) -> f64 {
        self.closest_point.xy_norm()
    }

    pub fn speed(&self) -> f64 {
        let (vx, vy, vz) = self.velocity;
        (vx * vx + vy * vy + vz * vz).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarTrackerParams {
    /// Centroid gate for association, meters.
    pub assoc_th: f64,
    /// Consecutive missed frames before a track is deleted.
    pub max_misses: u32,
    /// Acceptable cluster/track point-count ratio band.
    pub count_ratio: (f64, f64),
}

impl Default for LidarTrackerParams {
    fn default() -> Self {
        Self {
            assoc_th: 4.0,
            max_misses: 3,
            count_ratio: (0.5, 2.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LidarTracker {
    pub params: LidarTrackerParams,
    tracks: Vec<LidarTrack>,
    next_id: u64,
}

impl LidarTracker {
    pub fn new(params: LidarTrackerParams) -> Self {
        Self {
            params,
            tracks: Vec::new(),
            next_id: 1,
        }
    }

    pub fn tracks(&self) -> &[LidarTrack] {
        &self.tracks
    }

    /// Advances the tracker by one frame of clusters separated by `dt`.
    pub fn step(&mut self, clusters: &[Cluster], dt: f64) -> &[LidarTrack] {
        assert!(dt > 0.0, "dt must be positive");
        let centroids: Vec<Point3> = clusters.iter().map(Cluster::centroid).collect();

        // All pairs inside the gate, ascending by distance, ties broken by
        // lower track id then lower cluster index for reproducibility.
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, track) in self.tracks.iter().enumerate() {
            for (ci, c) in centroids.iter().enumerate() {
                let d = c.sub(&track.centroid).norm();
                if d >= self.params.assoc_th {
                    continue;
                }
                let ratio = clusters[ci].len() as f64 / track.point_count.max(1) as f64;
                if ratio < self.params.count_ratio.0 || ratio > self.params.count_ratio.1 {
                    continue;
                }
                pairs.push((d, ti, ci));
            }
        }
        pairs.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then_with(|| self.tracks[a.1].id.cmp(&self.tracks[b.1].id))
                .then_with(|| a.2.cmp(&b.2))
        });

        let mut track_used = vec![false; self.tracks.len()];
        let mut cluster_used = vec![false; clusters.len()];
        for (_, ti, ci) in pairs {
            if track_used[ti] || cluster_used[ci] {
                continue;
            }
            track_used[ti] = true;
            cluster_used[ci] = true;
            let track = &mut self.tracks[ti];
            let c = &clusters[ci];
            let new_centroid = centroids[ci];
            track.velocity = (
                (new_centroid.x - track.centroid.x) / dt,
                (new_centroid.y - track.centroid.y) / dt,
                (new_centroid.z - track.centroid.z) / dt,
            );
            track.centroid = new_centroid;
            track.extent = c.extent();
            track.closest_point = c.closest_point();
            track.bev = c.bev_box();
            track.point_count = c.len();
            track.age += 1;
            track.misses = 0;
        }

        for (ti, used) in track_used.iter().enumerate() {
            if !used {
                self.tracks[ti].misses += 1;
                self.tracks[ti].age += 1;
            }
        }
        let max_misses = self.params.max_misses;
        self.tracks.retain(|t| t.misses <= max_misses);

        for (ci, used) in cluster_used.iter().enumerate() {
            if *used {
                continue;
            }
            let c = &clusters[ci];
            self.tracks.push(LidarTrack {
                id: self.next_id,
                extent: c.extent(),
                closest_point: c.closest_point(),
                velocity: (0.0, 0.0, 0.0),
                bev: c.bev_box(),
                age: 1,
                misses: 0,
                centroid: centroids[ci],
                point_count: c.len(),
            });
            self.next_id += 1;
        }

        &self.tracks
    }
}

//! Euclidean cluster extraction over non-ground points.
//!
//! Low-channel spinning LiDARs leave large vertical gaps between rings, so
//! plain Euclidean clustering splits one vehicle into stacked fragments.
//! Scaling the z axis by a weight in (0, 1] before measuring distances
//! reconnects them: the metric is
//! `sqrt(dx^2 + dy^2 + (z_weight * dz)^2) < dist_th`.
//!
//! Connected components are grown breadth-first through a uniform voxel hash
//! (cell edge = threshold), which bounds every neighbor lookup to the 27
//! surrounding cells.

use super::PointCloud;
use crate::geometry::{BevBox, Point3};
use std::collections::HashMap;

/// One extracted cluster with its source points.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub points: Vec<Point3>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn centroid(&self) -> Point3 {
        let n = self.points.len() as f64;
        let mut c = Point3::new(0.0, 0.0, 0.0);
        for p in &self.points {
            c.x += p.x;
            c.y += p.y;
            c.z += p.z;
        }
        Point3::new(c.x / n, c.y / n, c.z / n)
    }

    /// Axis-aligned extent (full lengths) along x, y, z.
    pub fn extent(&self) -> (f64, f64, f64) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for p in &self.points {
            for (k, v) in [p.x, p.y, p.z].into_iter().enumerate() {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        (hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2])
    }

    /// Point closest to the sensor in planar range.
    pub fn closest_point(&self) -> Point3 {
        *self
            .points
            .iter()
            .min_by(|a, b| a.xy_norm().total_cmp(&b.xy_norm()))
            .expect("clusters are non-empty")
    }

    /// Four-corner BEV footprint of the axis-aligned xy bounds.
    pub fn bev_box(&self) -> BevBox {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.points {
            lo[0] = lo[0].min(p.x);
            hi[0] = hi[0].max(p.x);
            lo[1] = lo[1].min(p.y);
            hi[1] = hi[1].max(p.y);
        }
        BevBox::new(vec![
            [lo[0], lo[1]],
            [lo[0], hi[1]],
            [hi[0], hi[1]],
            [hi[0], lo[1]],
        ])
        .expect("finite cluster bounds")
    }
}

/// Extracts connected components under the z-weighted metric, dropping
/// clusters smaller than `min_pts`. Output order follows the lowest input
/// index in each cluster, so results are deterministic.
pub fn cluster(
    non_ground: &PointCloud,
    dist_th: f64,
    z_weight: f64,
    min_pts: usize,
) -> Vec<Cluster> {
    assert!(dist_th > 0.0, "dist_th must be positive");
    assert!(
        z_weight > 0.0 && z_weight <= 1.0,
        "z_weight must be in (0, 1]"
    );
    let pts = &non_ground.points;
    if pts.is_empty() {
        return Vec::new();
    }

    // Pre-scale z so the weighted metric becomes plain Euclidean.
    let scaled: Vec<[f64; 3]> = pts
        .iter()
        .map(|p| [p.x, p.y, p.z * z_weight])
        .collect();

    let cell = dist_th;
    let key = |p: &[f64; 3]| -> (i64, i64, i64) {
        (
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in scaled.iter().enumerate() {
        grid.entry(key(p)).or_default().push(i);
    }

    let th_sq = dist_th * dist_th;
    let mut visited = vec![false; pts.len()];
    let mut clusters = Vec::new();

    for seed in 0..pts.len() {
        if visited[seed] {
            continue;
        }
        visited[seed] = true;
        let mut queue = vec![seed];
        let mut head = 0;
        while head < queue.len() {
            let i = queue[head];
            head += 1;
            let (kx, ky, kz) = key(&scaled[i]);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(bucket) = grid.get(&(kx + dx, ky + dy, kz + dz)) else {
                            continue;
                        };
                        for &j in bucket {
                            if visited[j] {
                                continue;
                            }
                            let d0 = scaled[i][0] - scaled[j][0];
                            let d1 = scaled[i][1] - scaled[j][1];
                            let d2 = scaled[i][2] - scaled[j][2];
                            if d0 * d0 + d1 * d1 + d2 * d2 < th_sq {
                                visited[j] = true;
                                queue.push(j);
                            }
                        }
                    }
                }
            }
        }
        if queue.len() >= min_pts {
            queue.sort_unstable();
            clusters.push(Cluster {
                points: queue.into_iter().map(|i| pts[i]).collect(),
            });
        }
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(center: (f64, f64, f64), n: usize, spread: f64) -> Vec<Point3> {
        (0..n)
            .map(|i| {
                let a = i as f64 * 2.399; // golden-angle style spray
                Point3::new(
                    center.0 + spread * a.cos() * (i as f64 / n as f64),
                    center.1 + spread * a.sin() * (i as f64 / n as f64),
                    center.2,
                )
            })
            .collect()
    }

    #[test]
    fn two_separated_blobs() {
        let mut pts = blob((10.0, 0.0, 0.0), 40, 0.2);
        pts.extend(blob((15.0, 0.0, 0.0), 40, 0.2));
        let out = cluster(&PointCloud::new(pts, 0.0), 0.5, 0.5, 3);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].len(), 40);
        assert!((out[0].centroid().x - 10.0).abs() < 0.2);
    }

    #[test]
    fn z_weight_bridges_vertical_gap() {
        // Two rings 0.6 m apart vertically.
        let mut pts = blob((10.0, 0.0, 0.0), 30, 0.2);
        pts.extend(blob((10.0, 0.0, 0.6), 30, 0.2));
        let cloud = PointCloud::new(pts, 0.0);

        // Weighted: effective dz = 0.3 < 0.5 joins them.
        assert_eq!(cluster(&cloud, 0.5, 0.5, 3).len(), 1);
        // Unweighted: dz = 0.6 > 0.5 splits them.
        assert_eq!(cluster(&cloud, 0.5, 1.0, 3).len(), 2);
    }

    #[test]
    fn empty_input_and_min_pts_filter() {
        assert!(cluster(&PointCloud::new(vec![], 0.0), 0.5, 0.5, 3).is_empty());
        let pts = vec![Point3::new(1.0, 0.0, 0.0), Point3::new(1.1, 0.0, 0.0)];
        assert!(cluster(&PointCloud::new(pts, 0.0), 0.5, 0.5, 3).is_empty());
    }

    #[test]
    fn matches_union_find_oracle_on_random_clouds() {
        use rand::Rng;
        for seed in 0..25u64 {
            let mut rng = crate::util::fork_rng(seed, 2);
            let n = 80 + (seed as usize) * 17;
            let pts: Vec<Point3> = (0..n)
                .map(|_| {
                    Point3::new(
                        rng.random::<f64>() * 12.0,
                        rng.random::<f64>() * 12.0,
                        rng.random::<f64>() * 3.0,
                    )
                })
                .collect();
            let cloud = PointCloud::new(pts, 0.0);
            let got = cluster(&cloud, 0.9, 0.5, 2);
            let want = oracle(&cloud.points, 0.9, 0.5, 2);
            assert_eq!(got.len(), want.len(), "seed {seed}");
            for (g, w) in got.iter().zip(&want) {
                assert_eq!(g.points, *w, "seed {seed}");
            }
        }
    }

    /// Brute-force union-find over all pairs; the independent reference for
    /// the clustering output.
    pub(crate) fn oracle(
        pts: &[Point3],
        dist_th: f64,
        z_weight: f64,
        min_pts: usize,
    ) -> Vec<Vec<Point3>> {
        let n = pts.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], i: usize) -> usize {
            if parent[i] != i {
                let r = find(parent, parent[i]);
                parent[i] = r;
            }
            parent[i]
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = pts[i].x - pts[j].x;
                let dy = pts[i].y - pts[j].y;
                let dz = (pts[i].z - pts[j].z) * z_weight;
                if (dx * dx + dy * dy + dz * dz).sqrt() < dist_th {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..n {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().push(i);
        }
        let mut out: Vec<Vec<usize>> = groups
            .into_values()
            .filter(|g| g.len() >= min_pts)
            .collect();
        out.sort_by_key(|g| g[0]);
        out.into_iter()
            .map(|g| g.into_iter().map(|i| pts[i]).collect())
            .collect()
    }
}

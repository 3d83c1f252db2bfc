//! Independent reference implementations ("oracles") used by the
//! acceptance suite. These deliberately re-derive results from first
//! principles rather than calling the library's own algorithms.

use trackfuse::geometry::{project_cuboid, CameraModel, Cuboid, ImageBox, Point3};
use trackfuse::lidar::LidarTrack;
use trackfuse::vision::VisionTrack;

/// Brute-force association over the full vision x LiDAR overlap matrix:
/// repeatedly take the largest remaining overlap (ties to the earlier
/// vision track, then the lower LiDAR id) and claim the pair. Returns the
/// record skeletons as (source, vision_id, lidar_id) in the order the
/// fusion output lists them: vision order first, leftover LiDAR after.
pub fn fusion_oracle(
    lidar: &[LidarTrack],
    vision: &[VisionTrack],
    cam: &CameraModel,
    iou_floor: f64,
) -> Vec<(&'static str, Option<u64>, Option<u64>)> {
    let boxes: Vec<Option<ImageBox>> = lidar
        .iter()
        .map(|t| project_cuboid(&Cuboid::new(t.centroid, t.extent).corners(), cam).ok())
        .collect();

    let rect_iou = |a: &ImageBox, b: &ImageBox| -> f64 {
        let w = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
        let h = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
        let inter = w * h;
        let area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
        let area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
        let union = area_a + area_b - inter;
        if inter <= 0.0 || union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    };

    let mut matrix = vec![vec![0.0f64; lidar.len()]; vision.len()];
    for (i, v) in vision.iter().enumerate() {
        for (j, b) in boxes.iter().enumerate() {
            if let Some(b) = b {
                matrix[i][j] = rect_iou(&v.detection.bbox, b);
            }
        }
    }

    let mut vision_match: Vec<Option<usize>> = vec![None; vision.len()];
    let mut lidar_used = vec![false; lidar.len()];
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, row) in matrix.iter().enumerate() {
            if vision_match[i].is_some() {
                continue;
            }
            for (j, &value) in row.iter().enumerate() {
                if lidar_used[j] || value <= iou_floor || value <= 0.0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bv, bi, bj)) => {
                        value > bv
                            || (value == bv
                                && (i < bi || (i == bi && lidar[j].id < lidar[bj].id)))
                    }
                };
                if better {
                    best = Some((value, i, j));
                }
            }
        }
        match best {
            Some((_, i, j)) => {
                vision_match[i] = Some(j);
                lidar_used[j] = true;
            }
            None => break,
        }
    }

    let mut out = Vec::new();
    for (i, v) in vision.iter().enumerate() {
        match vision_match[i] {
            Some(j) => out.push(("VL", Some(v.id), Some(lidar[j].id))),
            None => out.push(("V", Some(v.id), None)),
        }
    }
    for (j, t) in lidar.iter().enumerate() {
        if !lidar_used[j] {
            out.push(("L", None, Some(t.id)));
        }
    }
    out
}

/// All-pairs union-find connected components under the z-weighted metric,
/// smallest-point-index ordering, clusters below `min_pts` dropped.
pub fn cluster_oracle(
    pts: &[Point3],
    dist_th: f64,
    z_weight: f64,
    min_pts: usize,
) -> Vec<Vec<Point3>> {
    let n = pts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut root = i;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = i;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
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
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
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

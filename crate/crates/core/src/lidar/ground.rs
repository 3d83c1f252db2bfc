//! Iterative ground-plane fitting.
//!
//! Per segment: seed from the lowest-point representative plus a height
//! band, then alternate (least-covariance plane from seeds) and
//! (re-partition by plane distance) for a fixed number of iterations. The
//! plane is the smallest-eigenvalue direction of the seed covariance, which
//! avoids the sample-draw loop of RANSAC-style fitters. Segments along x are
//! fitted independently and merged with one global refit so the returned
//! model and the final partition agree exactly.

use super::{GpfParams, LidarError, PlaneModel, PointCloud};
use crate::geometry::Point3;
use crate::util::{map_slice, Exec};

/// Result triple: fitted plane, ground points, non-ground points. The two
/// clouds partition the input (disjoint, exhaustive, input order preserved).
pub type GroundFit = (PlaneModel, PointCloud, PointCloud);

pub fn ground_plane_fit(cloud: &PointCloud, params: &GpfParams) -> Result<GroundFit, LidarError> {
    ground_plane_fit_exec(cloud, params, Exec::auto())
}

/// As [`ground_plane_fit`] with an explicit execution strategy; the
/// sequential path is the fallback build and the bench baseline.
pub fn ground_plane_fit_exec(
    cloud: &PointCloud,
    params: &GpfParams,
    exec: Exec,
) -> Result<GroundFit, LidarError> {
    if cloud.len() < params.n_lpr {
        return Err(LidarError::InsufficientPoints {
            needed: params.n_lpr,
            got: cloud.len(),
        });
    }

    let segments = split_segments(&cloud.points, params.num_segments.max(1));
    let fits: Vec<Option<PlaneModel>> = map_slice(exec, &segments, |idx| {
        fit_segment(&cloud.points, idx, params).ok()
    });

    // Collect ground candidates from every segment that produced a plane;
    // segments too sparse to fit are classified by the global refit alone.
    let mut candidates: Vec<usize> = Vec::new();
    let mut any_fit = false;
    for (seg, fit) in segments.iter().zip(&fits) {
        if let Some(plane) = fit {
            any_fit = true;
            candidates.extend(
                seg.iter()
                    .copied()
                    .filter(|&i| plane.distance(&cloud.points[i]) < params.th_dist),
            );
        }
    }
    if !any_fit {
        // Sparse segments everywhere: fall back to a single whole-cloud fit.
        let all: Vec<usize> = (0..cloud.len()).collect();
        let plane = fit_segment(&cloud.points, &all, params)?;
        candidates = all
            .into_iter()
            .filter(|&i| plane.distance(&cloud.points[i]) < params.th_dist)
            .collect();
    }
    if candidates.is_empty() {
        return Err(LidarError::NoGround);
    }

    // Global refit over the merged ground set, then one final partition by
    // the refit plane so distance-to-returned-plane reproduces the split.
    let plane = plane_from_indices(&cloud.points, &candidates)?;
    let mask: Vec<bool> = map_slice(exec, &cloud.points, |p| {
        plane.distance(p) < params.th_dist
    });

    let mut ground = Vec::new();
    let mut non_ground = Vec::new();
    for (p, &is_ground) in cloud.points.iter().zip(&mask) {
        if is_ground {
            ground.push(*p);
        } else {
            non_ground.push(*p);
        }
    }
    if ground.is_empty() {
        return Err(LidarError::NoGround);
    }
    Ok((
        plane,
        PointCloud::new(ground, cloud.frame_time),
        PointCloud::new(non_ground, cloud.frame_time),
    ))
}

/// Splits point indices into equal-width slabs along x (the direction of
/// travel). Degenerate extents collapse to a single segment.
fn split_segments(points: &[Point3], num_segments: usize) -> Vec<Vec<usize>> {
    if num_segments <= 1 {
        return vec![(0..points.len()).collect()];
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = lo.min(p.x);
        hi = hi.max(p.x);
    }
    let span = hi - lo;
    if span <= 1e-9 {
        return vec![(0..points.len()).collect()];
    }
    let mut segments = vec![Vec::new(); num_segments];
    for (i, p) in points.iter().enumerate() {
        let k = (((p.x - lo) / span) * num_segments as f64) as usize;
        segments[k.min(num_segments - 1)].push(i);
    }
    segments.retain(|s| !s.is_empty());
    segments
}

fn fit_segment(
    points: &[Point3],
    idx: &[usize],
    params: &GpfParams,
) -> Result<PlaneModel, LidarError> {
    if idx.len() < params.n_lpr {
        return Err(LidarError::InsufficientPoints {
            needed: params.n_lpr,
            got: idx.len(),
        });
    }

    // Lowest-point representative: mean z of the n_lpr lowest points.
    let mut by_z: Vec<usize> = idx.to_vec();
    by_z.sort_by(|&a, &b| points[a].z.total_cmp(&points[b].z));
    let lpr = by_z[..params.n_lpr]
        .iter()
        .map(|&i| points[i].z)
        .sum::<f64>()
        / params.n_lpr as f64;

    let mut seeds: Vec<usize> = idx
        .iter()
        .copied()
        .filter(|&i| points[i].z < lpr + params.th_seeds)
        .collect();
    if seeds.len() < 3 {
        seeds = by_z[..params.n_lpr].to_vec();
    }

    let mut plane = plane_from_indices(points, &seeds)?;
    for _ in 1..params.n_iter.max(1) {
        seeds = idx
            .iter()
            .copied()
            .filter(|&i| plane.distance(&points[i]) < params.th_dist)
            .collect();
        if seeds.len() < 3 {
            break;
        }
        plane = plane_from_indices(points, &seeds)?;
    }
    Ok(plane)
}

/// Least-covariance plane through the indexed points: normal is the
/// eigenvector of the smallest covariance eigenvalue, offset fixes the
/// centroid on the plane. Errors out when the points do not define a plane.
fn plane_from_indices(points: &[Point3], idx: &[usize]) -> Result<PlaneModel, LidarError> {
    if idx.len() < 3 {
        return Err(LidarError::DegenerateSeeds);
    }
    let inv_n = 1.0 / idx.len() as f64;
    let mut cx = 0.0;
    let mut cy = 0.0;
    let mut cz = 0.0;
    for &i in idx {
        cx += points[i].x;
        cy += points[i].y;
        cz += points[i].z;
    }
    cx *= inv_n;
    cy *= inv_n;
    cz *= inv_n;

    // Covariance accumulated as the upper triangle [xx, xy, xz, yy, yz, zz].
    let mut cov = [0.0f64; 6];
    for &i in idx {
        let dx = points[i].x - cx;
        let dy = points[i].y - cy;
        let dz = points[i].z - cz;
        cov[0] += dx * dx;
        cov[1] += dx * dy;
        cov[2] += dx * dz;
        cov[3] += dy * dy;
        cov[4] += dy * dz;
        cov[5] += dz * dz;
    }
    for c in cov.iter_mut() {
        *c *= inv_n;
    }

    let (eigenvalues, eigenvectors) = sym3x3_eigen(cov);
    // eigenvalues are sorted descending; a valid plane needs spread in two
    // directions, so the middle eigenvalue must be meaningfully non-zero.
    let scale = eigenvalues[0].max(1e-300);
    if eigenvalues[1] / scale < 1e-9 || eigenvalues[0] < 1e-12 {
        return Err(LidarError::DegenerateSeeds);
    }
    let mut n = eigenvectors[2];
    // Orient the normal upward so offsets are comparable across fits.
    if n[2] < 0.0 {
        n = [-n[0], -n[1], -n[2]];
    }
    let n4 = -(n[0] * cx + n[1] * cy + n[2] * cz);
    Ok(PlaneModel {
        n1: n[0],
        n2: n[1],
        n3: n[2],
        n4,
    })
}

/// Analytic eigendecomposition of a symmetric 3x3 matrix (Smith 1961 /
/// Kopp 2008). Returns eigenvalues sorted descending with matching unit
/// eigenvectors.
fn sym3x3_eigen(cov: [f64; 6]) -> ([f64; 3], [[f64; 3]; 3]) {
    let [a11, a12, a13, a22, a23, a33] = cov;

    let q = (a11 + a22 + a33) / 3.0;
    let p1 = a12 * a12 + a13 * a13 + a23 * a23;

    let mut eigenvalues = if p1 < 1e-30 {
        let mut evs = [a11, a22, a33];
        evs.sort_unstable_by(|a, b| b.total_cmp(a));
        evs
    } else {
        let p2 = (a11 - q).powi(2) + (a22 - q).powi(2) + (a33 - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let inv_p = 1.0 / p;

        let b11 = (a11 - q) * inv_p;
        let b12 = a12 * inv_p;
        let b13 = a13 * inv_p;
        let b22 = (a22 - q) * inv_p;
        let b23 = a23 * inv_p;
        let b33 = (a33 - q) * inv_p;

        let half_det = (b11 * b22 * b33 + 2.0 * b12 * b13 * b23
            - b11 * b23 * b23
            - b22 * b13 * b13
            - b33 * b12 * b12)
            / 2.0;
        let phi = half_det.clamp(-1.0, 1.0).acos() / 3.0;

        let e1 = q + 2.0 * p * phi.cos();
        let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::FRAC_PI_3).cos();
        let e2 = 3.0 * q - e1 - e3;
        [e1, e2, e3]
    };
    eigenvalues.sort_unstable_by(|a, b| b.total_cmp(a));

    let eigenvectors = [
        eigenvector_for(cov, eigenvalues[0]),
        eigenvector_for(cov, eigenvalues[1]),
        eigenvector_for(cov, eigenvalues[2]),
    ];
    (eigenvalues, eigenvectors)
}

fn eigenvector_for(cov: [f64; 6], lambda: f64) -> [f64; 3] {
    let m00 = cov[0] - lambda;
    let m01 = cov[1];
    let m02 = cov[2];
    let m11 = cov[3] - lambda;
    let m12 = cov[4];
    let m22 = cov[5] - lambda;

    // Cross products of rows of (A - lambda I); the largest is the most
    // numerically trustworthy null-space direction.
    let v0 = [
        m01 * m12 - m02 * m11,
        m02 * m01 - m00 * m12,
        m00 * m11 - m01 * m01,
    ];
    let v1 = [
        m01 * m22 - m02 * m12,
        m02 * m02 - m00 * m22,
        m00 * m12 - m01 * m02,
    ];
    let v2 = [
        m11 * m22 - m12 * m12,
        m12 * m02 - m01 * m22,
        m01 * m12 - m11 * m02,
    ];

    let mag = |v: &[f64; 3]| v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let (m0, m1, m2) = (mag(&v0), mag(&v1), mag(&v2));
    let (v, m) = if m0 >= m1 && m0 >= m2 {
        (v0, m0)
    } else if m1 >= m2 {
        (v1, m1)
    } else {
        (v2, m2)
    };
    if m < 1e-60 {
        return [0.0, 0.0, 1.0];
    }
    let inv = 1.0 / m.sqrt();
    [v[0] * inv, v[1] * inv, v[2] * inv]
}

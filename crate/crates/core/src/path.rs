//! Ego path representation in the BEV frame, the in-path corridor test and
//! CIPV selection over fusion records.

use crate::fusion::{FusionRecord, FusionSource};
use crate::geometry::BevBox;
use crate::vision::ObjectClass;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("a path needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("consecutive path points at index {0} coincide")]
    DuplicatePoint(usize),
    #[error("half width must be positive, got {0}")]
    InvalidHalfWidth(f64),
    #[error("path csv: {0}")]
    Parse(String),
}

/// Ego path as a BEV polyline with a lane half-width corridor.
#[derive(Debug, Clone, PartialEq)]
pub struct BevPath {
    centerline: Vec<[f64; 2]>,
    half_width: f64,
}

impl BevPath {
    /// Half of a standard lane width, meters.
    pub const DEFAULT_HALF_WIDTH: f64 = 1.5;

    pub fn new(centerline: Vec<[f64; 2]>, half_width: f64) -> Result<Self, PathError> {
        if centerline.len() < 2 {
            return Err(PathError::TooFewPoints(centerline.len()));
        }
        if half_width <= 0.0 {
            return Err(PathError::InvalidHalfWidth(half_width));
        }
        for (i, w) in centerline.windows(2).enumerate() {
            let d = ((w[0][0] - w[1][0]).powi(2) + (w[0][1] - w[1][1]).powi(2)).sqrt();
            if d < 1e-12 {
                return Err(PathError::DuplicatePoint(i));
            }
        }
        Ok(Self {
            centerline,
            half_width,
        })
    }

    /// A straight corridor from the ego origin along +x. This stands in for
    /// detected lane centers when no recorded path is supplied.
    pub fn straight(length: f64, half_width: f64) -> Result<Self, PathError> {
        Self::new(vec![[0.0, 0.0], [length.max(1e-6), 0.0]], half_width)
    }

    /// Parses `x,y` lines (meters).
    pub fn from_csv(text: &str, half_width: f64) -> Result<Self, PathError> {
        let mut pts = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split(',').map(str::trim);
            let mut field = || -> Result<f64, PathError> {
                it.next()
                    .ok_or_else(|| PathError::Parse(format!("line {}: missing field", lineno + 1)))?
                    .parse::<f64>()
                    .map_err(|e| PathError::Parse(format!("line {}: {e}", lineno + 1)))
            };
            pts.push([field()?, field()?]);
        }
        Self::new(pts, half_width)
    }

    pub fn centerline(&self) -> &[[f64; 2]] {
        &self.centerline
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Perpendicular distance from a point to the polyline, segment-wise
    /// with endpoint clamping.
    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        let mut best = f64::INFINITY;
        for w in self.centerline.windows(2) {
            let (a, b) = (w[0], w[1]);
            let abx = b[0] - a[0];
            let aby = b[1] - a[1];
            let apx = p[0] - a[0];
            let apy = p[1] - a[1];
            let t = ((apx * abx + apy * aby) / (abx * abx + aby * aby)).clamp(0.0, 1.0);
            let dx = apx - t * abx;
            let dy = apy - t * aby;
            best = best.min((dx * dx + dy * dy).sqrt());
        }
        best
    }
}

/// True when any corner of the BEV box lies inside the path corridor.
/// Corners rather than the center: a vehicle straddling the lane edge must
/// count as in path.
pub fn in_path(bev: &BevBox, path: &BevPath) -> bool {
    bev.corners()
        .iter()
        .any(|&c| path.distance_to(c) <= path.half_width())
}

/// Fills the `in_path` flag on records that carry BEV geometry.
pub fn annotate_in_path(records: &mut [FusionRecord], path: &BevPath) {
    for r in records.iter_mut() {
        if let Some(bev) = &r.bev {
            r.in_path = Some(in_path(bev, path));
        }
    }
}

/// Selects the closest in-path vehicle: in-path records that are either
/// classified as cars or LiDAR-only (an unclassified obstacle in the lane
/// must still brake the car), by minimum distance.
pub fn select_cipv<'a>(records: &'a [FusionRecord], path: &BevPath) -> Option<&'a FusionRecord> {
    records
        .iter()
        .filter(|r| {
            let in_corridor = r
                .bev
                .as_ref()
                .map(|bev| in_path(bev, path))
                .unwrap_or(false);
            let vehicle_like = match r.source {
                FusionSource::L => true,
                _ => r.type_id == Some(ObjectClass::Car),
            };
            in_corridor && vehicle_like && r.distance.is_some()
        })
        .min_by(|a, b| a.distance.unwrap().total_cmp(&b.distance.unwrap()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::FusionSource;
    use crate::geometry::Point3;

    fn straight() -> BevPath {
        BevPath::straight(100.0, 1.5).unwrap()
    }

    fn box_at(x: f64, y: f64) -> BevBox {
        BevBox::new(vec![
            [x - 1.0, y - 0.5],
            [x - 1.0, y + 0.5],
            [x + 1.0, y + 0.5],
            [x + 1.0, y - 0.5],
        ])
        .unwrap()
    }

    fn record(source: FusionSource, x: f64, y: f64, class: Option<ObjectClass>) -> FusionRecord {
        FusionRecord {
            source,
            box2d: None,
            bev: Some(box_at(x, y)),
            closest_point: Some(Point3::new(x, y, 0.0)),
            distance: Some((x * x + y * y).sqrt()),
            velocity: None,
            in_path: Some(false),
            moving_state: None,
            type_id: class,
            ttc: None,
            lidar_id: None,
            vision_id: None,
        }
    }

    #[test]
    fn straight_corridor_membership() {
        let path = straight();
        assert!(in_path(&box_at(20.0, 0.5), &path));
        assert!(!in_path(&box_at(20.0, 3.0), &path));
        // Corner rule: center out at 1.9 but the inner corner is at 1.4.
        assert!(in_path(&box_at(20.0, 1.9), &path));
    }

    #[test]
    fn quarter_circle_path_against_dense_oracle() {
        // Left turn of radius 30 centered at (0, 30).
        let r = 30.0;
        let arc: Vec<[f64; 2]> = (0..=90)
            .map(|deg| {
                let t = (deg as f64).to_radians();
                [r * t.sin(), r * (1.0 - t.cos())]
            })
            .collect();
        let path = BevPath::new(arc, 1.5).unwrap();

        // Dense-sampling oracle for point-to-arc distance.
        let oracle_dist = |p: [f64; 2]| -> f64 {
            (0..=9000)
                .map(|k| {
                    let t = (k as f64) * std::f64::consts::FRAC_PI_2 / 9000.0;
                    let q = [r * t.sin(), r * (1.0 - t.cos())];
                    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        };

        let on_arc = [r * 45f64.to_radians().sin(), r * (1.0 - 45f64.to_radians().cos())];
        assert!(in_path(&box_at(on_arc[0], on_arc[1]), &path));
        assert!(oracle_dist(on_arc) < 0.05);

        for (p, expect_in) in [
            ([21.2, 9.0], true),
            ([25.0, 2.0], false),
            ([5.0, 0.2], true),
            ([40.0, 10.0], false),
        ] {
            let poly = path.distance_to(p);
            let oracle = oracle_dist(p);
            assert!(
                (poly - oracle).abs() < 0.02,
                "polyline {poly} vs oracle {oracle} at {p:?}"
            );
            assert_eq!(in_path(&box_at(p[0], p[1]), &path), expect_in, "{p:?}");
        }
    }

    #[test]
    fn cipv_picks_nearest_in_path() {
        let path = straight();
        let records = vec![
            record(FusionSource::Vl, 40.0, 0.0, Some(ObjectClass::Car)),
            record(FusionSource::Vl, 20.0, 0.5, Some(ObjectClass::Car)),
            record(FusionSource::V, 10.0, 5.0, Some(ObjectClass::Car)), // out of path
        ];
        let cipv = select_cipv(&records, &path).unwrap();
        assert!((cipv.distance.unwrap() - records[1].distance.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn cipv_requires_vehicle_or_lidar_source() {
        let path = straight();
        let ped = record(FusionSource::V, 15.0, 0.0, Some(ObjectClass::Pedestrian));
        assert!(select_cipv(&[ped], &path).is_none());

        let unknown_lidar = record(FusionSource::L, 15.0, 0.0, None);
        assert!(select_cipv(&[unknown_lidar], &path).is_some());
    }

    #[test]
    fn cipv_none_when_everything_outside() {
        let path = straight();
        let records = vec![record(FusionSource::Vl, 20.0, 4.0, Some(ObjectClass::Car))];
        assert!(select_cipv(&records, &path).is_none());
    }

    #[test]
    fn csv_parse_and_errors() {
        let path = BevPath::from_csv("0,0\n10,0.5\n20,1.5\n", 1.5).unwrap();
        assert_eq!(path.centerline().len(), 3);
        assert!(BevPath::from_csv("0,0\n", 1.5).is_err());
        assert!(matches!(
            BevPath::from_csv("0,0\nbad,1\n", 1.5),
            Err(PathError::Parse(_))
        ));
        assert_eq!(
            BevPath::new(vec![[0.0, 0.0], [0.0, 0.0]], 1.5),
            Err(PathError::DuplicatePoint(0))
        );
        assert_eq!(
            BevPath::new(vec![[0.0, 0.0], [1.0, 0.0]], 0.0),
            Err(PathError::InvalidHalfWidth(0.0))
        );
    }

    #[test]
    fn densifying_centerline_preserves_results() {
        let coarse = BevPath::new(vec![[0.0, 0.0], [50.0, 0.0], [100.0, 0.0]], 1.5).unwrap();
        let fine_pts: Vec<[f64; 2]> = (0..=100).map(|i| [i as f64, 0.0]).collect();
        let fine = BevPath::new(fine_pts, 1.5).unwrap();
        for (x, y) in [(20.0, 0.8), (20.0, 1.6), (77.0, -1.2), (77.0, -2.6)] {
            assert_eq!(
                in_path(&box_at(x, y), &coarse),
                in_path(&box_at(x, y), &fine),
                "({x}, {y})"
            );
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rigid_rotation_invariance(
                x in 5.0f64..60.0,
                y in -8.0f64..8.0,
                angle in -3.0f64..3.0,
            ) {
                let path = straight();
                let bev = box_at(x, y);
                // Skip boundary-marginal cases where float noise could flip
                // the threshold comparison.
                let margin = bev
                    .corners()
                    .iter()
                    .map(|&c| (path.distance_to(c) - path.half_width()).abs())
                    .fold(f64::INFINITY, f64::min);
                prop_assume!(margin > 1e-6);

                let (s, c) = angle.sin_cos();
                let rot = |p: [f64; 2]| [c * p[0] - s * p[1], s * p[0] + c * p[1]];
                let rot_path = BevPath::new(
                    path.centerline().iter().map(|&p| rot(p)).collect(),
                    path.half_width(),
                ).unwrap();
                let rot_bev = BevBox::new(
                    bev.corners().iter().map(|&p| rot(p)).collect(),
                ).unwrap();
                prop_assert_eq!(in_path(&bev, &path), in_path(&rot_bev, &rot_path));
            }
        }
    }
}

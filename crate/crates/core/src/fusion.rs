//! Track-level fusion of LiDAR and vision.
//!
//! LiDAR track cuboids are projected into the image; an IoU matrix between
//! the projected boxes and the vision boxes drives the association. A vision
//! track whose row is all zero is a vision-only object; otherwise it pairs
//! with its best-overlap LiDAR track (overlaps are claimed greedily from the
//! largest down, so each track lands in exactly one record). LiDAR tracks no
//! row selected stay LiDAR-only.
//!
//! Merged records take geometry and kinematics from LiDAR and the class from
//! vision: inside LiDAR range the LiDAR range estimate wins, while vision
//! extends coverage beyond it.

use crate::geometry::{image_to_bev, iou, project_cuboid, BevBox, CameraModel, Cuboid, ImageBox, Point3};
use crate::lidar::LidarTrack;
use crate::vision::{ObjectClass, VisionTrack};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FusionError {
    #[error("vision track has no distance estimate; cannot lift to BEV")]
    MissingDistance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionSource {
    /// Vision only.
    V,
    /// Vision and LiDAR agree on one object.
    Vl,
    /// LiDAR only.
    L,
}

impl FusionSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            FusionSource::V => "V",
            FusionSource::Vl => "VL",
            FusionSource::L => "L",
        }
    }
}

/// The merged per-object output record.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionRecord {
    pub source: FusionSource,
    pub box2d: Option<ImageBox>,
    pub bev: Option<BevBox>,
    pub closest_point: Option<Point3>,
    pub distance: Option<f64>,
    /// Relative velocity vector from the LiDAR track, m/s.
    pub velocity: Option<(f64, f64, f64)>,
    pub in_path: Option<bool>,
    pub moving_state: Option<bool>,
    pub type_id: Option<ObjectClass>,
    pub ttc: Option<f64>,
    pub lidar_id: Option<u64>,
    pub vision_id: Option<u64>,
}

impl FusionRecord {
    /// Range rate toward the ego vehicle (negative = approaching), from the
    /// relative velocity projected on the line of sight.
    pub fn range_rate(&self) -> Option<f64> {
        let (vx, vy, vz) = self.velocity?;
        let p = self.closest_point?;
        let n = p.norm();
        if n < 1e-9 {
            return None;
        }
        Some((vx * p.x + vy * p.y + vz * p.z) / n)
    }

    /// Scalar velocity reported in logs: the signed range rate.
    pub fn velocity_scalar(&self) -> Option<f64> {
        self.range_rate()
    }

    /// Serializes to the frame-log object layout.
    pub fn to_log_value(&self) -> serde_json::Value {
        let mut obj = serde_json::Map::new();
        obj.insert("name".into(), self.source.as_str().into());
        if let Some(b) = &self.box2d {
            obj.insert("boundary_box_2d".into(), serde_json::json!([b.x1, b.y1, b.x2, b.y2]));
        }
        if let Some(bev) = &self.bev {
            obj.insert("bird_eye_view".into(), serde_json::json!(bev.flat()));
        }
        if let Some(p) = &self.closest_point {
            obj.insert("closest_point".into(), serde_json::json!([p.x, p.y, p.z]));
        }
        if let Some(d) = self.distance {
            obj.insert("distance".into(), serde_json::json!(d));
        }
        if let Some(v) = self.velocity_scalar() {
            obj.insert("velocity".into(), serde_json::json!(v));
        }
        if let Some(ip) = self.in_path {
            obj.insert("in_path".into(), serde_json::json!(ip));
        }
        if let Some(m) = self.moving_state {
            obj.insert("moving_state".into(), serde_json::json!(m));
        }
        if let Some(t) = self.type_id {
            obj.insert("type_id".into(), serde_json::json!(t.as_str()));
        }
        if let Some(ttc) = self.ttc {
            obj.insert("ttc".into(), serde_json::json!(ttc));
        }
        serde_json::Value::Object(obj)
    }
}

/// Writes one frame of records as a JSON-lines entry.
pub fn write_frame_line<W: std::io::Write>(
    out: &mut W,
    records: &[FusionRecord],
) -> std::io::Result<()> {
    let arr: Vec<serde_json::Value> = records.iter().map(|r| r.to_log_value()).collect();
    writeln!(out, "{}", serde_json::Value::Array(arr))
}

/// Relative speed above which a LiDAR object counts as moving.
const MOVING_SPEED_TH: f64 = 0.5;

/// Builds the vision x LiDAR IoU matrix from projected track cuboids.
pub fn iou_matrix(
    lidar_boxes: &[Option<ImageBox>],
    vision: &[VisionTrack],
) -> Vec<Vec<f64>> {
    vision
        .iter()
        .map(|v| {
            lidar_boxes
                .iter()
                .map(|lb| lb.as_ref().map_or(0.0, |b| iou(&v.detection.bbox, b)))
                .collect()
        })
        .collect()
}

/// Associates LiDAR and vision tracks into fusion records.
///
/// `iou_floor` discards overlaps at or below the given ratio before
/// association; zero keeps any positive overlap.
pub fn fuse(
    lidar: &[LidarTrack],
    vision: &[VisionTrack],
    cam: &CameraModel,
    iou_floor: f64,
) -> Vec<FusionRecord> {
    let lidar_boxes: Vec<Option<ImageBox>> = lidar
        .iter()
        .map(|t| {
            let cuboid = Cuboid::new(t.centroid, t.extent);
            project_cuboid(&cuboid.corners(), cam).ok()
        })
        .collect();
    let matrix = iou_matrix(&lidar_boxes, vision);

    // Greedy max-overlap assignment. Ties break toward the earlier vision
    // track, then the lower LiDAR track id.
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, row) in matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > iou_floor && v > 0.0 {
                pairs.push((v, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| lidar[a.2].id.cmp(&lidar[b.2].id))
    });

    let mut vision_match: Vec<Option<usize>> = vec![None; vision.len()];
    let mut lidar_used = vec![false; lidar.len()];
    for (_, i, j) in pairs {
        if vision_match[i].is_some() || lidar_used[j] {
            continue;
        }
        vision_match[i] = Some(j);
        lidar_used[j] = true;
    }

    let mut out = Vec::with_capacity(vision.len() + lidar.len());
    for (i, v) in vision.iter().enumerate() {
        match vision_match[i] {
            Some(j) => out.push(merged_record(v, &lidar[j], &lidar_boxes[j])),
            None => out.push(vision_record(v, cam)),
        }
    }
    for (j, t) in lidar.iter().enumerate() {
        if !lidar_used[j] {
            out.push(lidar_record(t, &lidar_boxes[j]));
        }
    }
    out
}

fn merged_record(v: &VisionTrack, t: &LidarTrack, box2d: &Option<ImageBox>) -> FusionRecord {
    FusionRecord {
        source: FusionSource::Vl,
        box2d: *box2d,
        bev: Some(t.bev.clone()),
        closest_point: Some(t.closest_point),
        distance: Some(t.distance()),
        velocity: Some(t.velocity),
        in_path: Some(false),
        moving_state: Some(t.speed() > MOVING_SPEED_TH),
        type_id: Some(v.detection.class),
        ttc: None,
        lidar_id: Some(t.id),
        vision_id: Some(v.id),
    }
}

fn vision_record(v: &VisionTrack, cam: &CameraModel) -> FusionRecord {
    // Geometry exists only for cars with a usable range estimate.
    let bev = vision_bev(v, cam).ok();
    let closest = bev.as_ref().map(|b| {
        let [x, y] = nearest_corner(b);
        Point3::new(x, y, 0.0)
    });
    FusionRecord {
        source: FusionSource::V,
        box2d: Some(v.detection.bbox),
        bev,
        closest_point: closest,
        distance: (v.detection.class == ObjectClass::Car)
            .then_some(v.distance)
            .flatten(),
        velocity: None,
        in_path: (v.detection.class == ObjectClass::Car && v.distance.is_some())
            .then_some(false),
        moving_state: None,
        type_id: Some(v.detection.class),
        ttc: None,
        lidar_id: None,
        vision_id: Some(v.id),
    }
}

fn lidar_record(t: &LidarTrack, box2d: &Option<ImageBox>) -> FusionRecord {
    FusionRecord {
        source: FusionSource::L,
        box2d: *box2d,
        bev: Some(t.bev.clone()),
        closest_point: Some(t.closest_point),
        distance: Some(t.distance()),
        velocity: Some(t.velocity),
        in_path: Some(false),
        moving_state: Some(t.speed() > MOVING_SPEED_TH),
        type_id: None,
        ttc: None,
        lidar_id: Some(t.id),
        vision_id: None,
    }
}

fn nearest_corner(b: &BevBox) -> [f64; 2] {
    *b.corners()
        .iter()
        .min_by(|a, c| {
            (a[0] * a[0] + a[1] * a[1]).total_cmp(&(c[0] * c[0] + c[1] * c[1]))
        })
        .expect("BEV boxes have corners")
}

/// Lifts a car's image box into the BEV plane: both bottom corners go
/// through the inverse projection at the estimated range.
pub fn vision_bev(track: &VisionTrack, cam: &CameraModel) -> Result<BevBox, FusionError> {
    let d = track.distance.ok_or(FusionError::MissingDistance)?;
    let b = track.detection.bbox;
    let left = image_to_bev(b.x1, d, cam).map_err(|_| FusionError::MissingDistance)?;
    let right = image_to_bev(b.x2, d, cam).map_err(|_| FusionError::MissingDistance)?;
    BevBox::new(vec![[left.0, left.1], [right.0, right.1]])
        .map_err(|_| FusionError::MissingDistance)
}

/// Time to collision from range over closing speed; `None` when the object
/// is not closing or carries no velocity.
pub fn compute_ttc(record: &FusionRecord) -> Option<f64> {
    let d = record.distance?;
    let closing = -record.range_rate()?;
    (closing > 0.0).then(|| d / closing)
}

/// Fills the `ttc` field of every record in place.
pub fn fill_ttc(records: &mut [FusionRecord]) {
    for r in records.iter_mut() {
        r.ttc = compute_ttc(r);
    }
}

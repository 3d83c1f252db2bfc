//! Shared geometric primitives: the sensor-frame point type, image and
//! bird's-eye-view boxes, the angular camera model, and the forward/inverse
//! transforms between them.
//!
//! The camera model is purely angular: a pixel column maps to a bearing at
//! `h_res` radians per pixel about the optical axis, a pixel row to an
//! elevation at `v_res` radians per pixel. This is the alignment that lets a
//! low-channel LiDAR be registered to the image without a calibration board;
//! `h_res`/`v_res` are tuned (or derived from the lens FoV) instead of a full
//! intrinsic matrix.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("point is behind the sensor (x = {0} <= 0)")]
    BehindCamera(f64),
    #[error("bearing {0} rad is outside the forward half-space")]
    OutOfFrustum(f64),
    #[error("no cuboid corner lies in front of the camera")]
    NoVisibleCorners,
    #[error("invalid camera model: {0}")]
    InvalidCamera(String),
    #[error("a BEV box needs 2..=4 finite corners, got {0}")]
    BadBevCorners(usize),
}

/// A point in the sensor frame: x forward, y left, z up, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Planar (bird's-eye-view) range.
    pub fn xy_norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn dot(&self, o: &Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn sub(&self, o: &Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

/// Axis-aligned image box, pixels, top-left origin, y grows downward.
///
/// Construction normalizes the corner order so `x1 <= x2` and `y1 <= y2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl ImageBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self {
            x1: x1.min(x2),
            y1: y1.min(y2),
            x2: x1.max(x2),
            y2: y1.max(y2),
        }
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) * 0.5, (self.y1 + self.y2) * 0.5)
    }
}

/// Intersection-over-union of two image boxes, in [0, 1].
///
/// Degenerate (zero-area) boxes and disjoint pairs give 0.
pub fn iou(a: &ImageBox, b: &ImageBox) -> f64 {
    let ix = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let iy = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = ix * iy;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Object footprint in the ego bird's-eye-view frame, meters.
///
/// LiDAR tracks carry the four footprint corners; boxes lifted from a single
/// vision detection carry only the two visible bottom corners.
#[derive(Debug, Clone, PartialEq)]
pub struct BevBox {
    corners: Vec<[f64; 2]>,
}

impl BevBox {
    pub fn new(corners: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        let n = corners.len();
        if !(2..=4).contains(&n) || corners.iter().any(|c| !c[0].is_finite() || !c[1].is_finite())
        {
            return Err(GeometryError::BadBevCorners(n));
        }
        Ok(Self { corners })
    }

    pub fn corners(&self) -> &[[f64; 2]] {
        &self.corners
    }

    pub fn center(&self) -> [f64; 2] {
        let n = self.corners.len() as f64;
        let (sx, sy) = self
            .corners
            .iter()
            .fold((0.0, 0.0), |(sx, sy), c| (sx + c[0], sy + c[1]));
        [sx / n, sy / n]
    }

    /// Smallest planar range from the ego origin to any corner.
    pub fn min_range(&self) -> f64 {
        self.corners
            .iter()
            .map(|c| (c[0] * c[0] + c[1] * c[1]).sqrt())
            .fold(f64::INFINITY, f64::min)
    }

    /// Corners flattened as [x1, y1, x2, y2, ...] for logging.
    pub fn flat(&self) -> Vec<f64> {
        self.corners.iter().flat_map(|c| [c[0], c[1]]).collect()
    }
}

/// Angular camera model: radians-per-pixel resolutions plus the principal
/// point and image extent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub h_res: f64,
    pub v_res: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub width: f64,
    pub height: f64,
}

impl CameraModel {
    pub fn new(
        h_res: f64,
        v_res: f64,
        c_x: f64,
        c_y: f64,
        width: f64,
        height: f64,
    ) -> Result<Self, GeometryError> {
        if !(h_res > 0.0 && v_res > 0.0) {
            return Err(GeometryError::InvalidCamera(format!(
                "resolutions must be positive (h_res={h_res}, v_res={v_res})"
            )));
        }
        if !(0.0..=width).contains(&c_x) || !(0.0..=height).contains(&c_y) {
            return Err(GeometryError::InvalidCamera(format!(
                "principal point ({c_x}, {c_y}) outside {width}x{height} image"
            )));
        }
        Ok(Self {
            h_res,
            v_res,
            c_x,
            c_y,
            width,
            height,
        })
    }

    /// Builds a model from explicit horizontal/vertical fields of view.
    pub fn from_fovs(
        fov_h_rad: f64,
        fov_v_rad: f64,
        width: f64,
        height: f64,
    ) -> Result<Self, GeometryError> {
        Self::new(
            fov_h_rad / width,
            fov_v_rad / height,
            width / 2.0,
            height / 2.0,
            width,
            height,
        )
    }

    /// Default 78-degree 1280x720 webcam-class calibration with square
    /// pixels (the vertical FoV follows from the aspect ratio).
    pub fn default_720p() -> Self {
        let fov_h = 78.0_f64.to_radians();
        let fov_v = fov_h * 720.0 / 1280.0;
        Self::from_fovs(fov_h, fov_v, 1280.0, 720.0).expect("static calibration is valid")
    }
}

/// Projects a sensor-frame point to pixel coordinates.
///
/// Bearing about the optical axis maps linearly to columns, elevation to
/// rows, offset by the principal point with image-y growing downward.
pub fn project_point(p: &Point3, cam: &CameraModel) -> Result<(f64, f64), GeometryError> {
    if p.x <= 0.0 {
        return Err(GeometryError::BehindCamera(p.x));
    }
    let x_img = cam.c_x + (-p.y / p.x).atan() / cam.h_res;
    let y_img = cam.c_y - (p.z / p.xy_norm()).atan() / cam.v_res;
    Ok((x_img, y_img))
}

/// Lifts a pixel column back into the BEV plane given an estimated range.
///
/// With `theta = (x_img - c_x) * h_res`:
/// `x = d_star * cos(theta)`, `y = -x * tan(theta)`, the algebraic inverse of
/// [`project_point`] for points on the ground plane. `d_star` stands in for
/// the true planar range; the error of ignoring height is O(z^2 / d).
pub fn image_to_bev(
    x_img: f64,
    d_star: f64,
    cam: &CameraModel,
) -> Result<(f64, f64), GeometryError> {
    debug_assert!(d_star > 0.0, "range must be positive");
    let theta = (x_img - cam.c_x) * cam.h_res;
    if theta.abs() >= std::f64::consts::FRAC_PI_2 {
        return Err(GeometryError::OutOfFrustum(theta));
    }
    let x = d_star * theta.cos();
    let y = -x * theta.tan();
    Ok((x, y))
}

/// Axis-aligned cuboid in the sensor frame, used both to synthesize targets
/// and to project LiDAR track extents into the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cuboid {
    pub center: Point3,
    /// Full extents along x, y, z.
    pub size: (f64, f64, f64),
}

impl Cuboid {
    pub fn new(center: Point3, size: (f64, f64, f64)) -> Self {
        Self { center, size }
    }

    pub fn corners(&self) -> [Point3; 8] {
        let (hx, hy, hz) = (self.size.0 / 2.0, self.size.1 / 2.0, self.size.2 / 2.0);
        let c = self.center;
        let mut out = [c; 8];
        let mut i = 0;
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                for sz in [-1.0, 1.0] {
                    out[i] = Point3::new(c.x + sx * hx, c.y + sy * hy, c.z + sz * hz);
                    i += 1;
                }
            }
        }
        out
    }
}

/// Projects the cuboid corners and returns their axis-aligned hull in the
/// image, clamped to the image bounds. Corners behind the camera are
/// skipped; if none are visible this is an error.
pub fn project_cuboid(corners: &[Point3; 8], cam: &CameraModel) -> Result<ImageBox, GeometryError> {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    let mut visible = false;
    for c in corners {
        let Ok((xi, yi)) = project_point(c, cam) else {
            continue;
        };
        visible = true;
        x_min = x_min.min(xi);
        x_max = x_max.max(xi);
        y_min = y_min.min(yi);
        y_max = y_max.max(yi);
    }
    if !visible {
        return Err(GeometryError::NoVisibleCorners);
    }
    Ok(ImageBox::new(
        x_min.clamp(0.0, cam.width),
        y_min.clamp(0.0, cam.height),
        x_max.clamp(0.0, cam.width),
        y_max.clamp(0.0, cam.height),
    ))
}

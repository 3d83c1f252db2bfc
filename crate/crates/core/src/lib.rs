//! Track-level LiDAR + camera fusion for closest-in-path-vehicle detection,
//! with an adaptive-cruise / emergency-braking controller and a kinematic
//! scenario simulator that exercises the whole chain on synthetic sensors.
//!
//! The pipeline mirrors a front-sensor stack:
//!
//! 1. [`lidar`]: ground segmentation, weighted Euclidean clustering and
//!    track management over point clouds.
//! 2. [`vision`]: bounding-box detections, height-based range regression
//!    and a queue-based tracker that rides through detector flicker.
//! 3. [`geometry`]: the angular projection used to align LiDAR returns with
//!    the image, and its inverse that lifts image boxes into the bird's-eye
//!    view.
//! 4. [`fusion`]: IoU association between projected LiDAR boxes and vision
//!    boxes, producing one merged record per object.
//! 5. [`path`] / [`acc`]: in-path tests, CIPV selection and the speed
//!    controller.
//! 6. [`sim`]: scenario configs, the stepping world and run metrics.

pub mod acc;
pub mod fusion;
pub mod geometry;
pub mod lidar;
pub mod path;
pub mod sim;
pub mod vision;

pub(crate) mod util;

pub use fusion::{FusionRecord, FusionSource};
pub use util::Exec;
pub use geometry::{BevBox, CameraModel, Cuboid, ImageBox, Point3};
pub use lidar::{LidarTrack, PointCloud};
pub use path::BevPath;
pub use vision::{Detection, ObjectClass, VisionTrack};

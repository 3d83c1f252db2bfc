//! Scenario configuration: TOML schema, validation and the built-in demo
//! scenarios.

use crate::acc::AccConfig;
use crate::geometry::{CameraModel, GeometryError};
use crate::lidar::{GpfParams, LidarTrackerParams};
use crate::path::{BevPath, PathError};
use crate::vision::NoiseParams;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse scenario config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Camera(#[from] GeometryError),
    #[error(transparent)]
    Path(#[from] PathError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    Fusion,
    LidarOnly,
    VisionOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetProfile {
    Constant,
    Braking,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMotion {
    /// Lead vehicle driving along +x.
    AlongX,
    /// Vehicle crossing the ego path along +y.
    Crossing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSection {
    pub name: String,
    pub dt: f64,
    pub duration: f64,
    pub sensor_tick: f64,
    pub fusion_mode: FusionMode,
    pub must_pass: bool,
    pub seed: u64,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            dt: 0.01,
            duration: 10.0,
            sensor_tick: 0.1,
            fusion_mode: FusionMode::Fusion,
            must_pass: false,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EgoSection {
    pub v0_mps: f64,
    /// Braking capability bound, m/s^2.
    pub a_max: f64,
    /// Forward acceleration bound, m/s^2.
    pub a_accel_max: f64,
}

impl Default for EgoSection {
    fn default() -> Self {
        Self {
            v0_mps: 27.78,
            a_max: 9.0,
            a_accel_max: 2.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TargetSection {
    /// Initial near-face distance from the ego origin along +x, meters.
    pub gap0_m: f64,
    /// Initial lateral offset of the footprint center, meters.
    pub lateral_m: f64,
    pub v0_mps: f64,
    pub profile: TargetProfile,
    /// Deceleration magnitude for the braking profile, m/s^2.
    pub brake_rate_mps2: f64,
    /// Time the braking profile begins, seconds.
    pub brake_time_s: f64,
    pub motion: TargetMotion,
    /// Footprint extent along x, meters.
    pub length_m: f64,
    /// Footprint extent along y, meters.
    pub width_m: f64,
    pub height_m: f64,
}

impl Default for TargetSection {
    fn default() -> Self {
        Self {
            gap0_m: 80.0,
            lateral_m: 0.0,
            v0_mps: 0.0,
            profile: TargetProfile::Constant,
            brake_rate_mps2: 6.0,
            brake_time_s: 1.0,
            motion: TargetMotion::AlongX,
            length_m: 4.5,
            width_m: 1.8,
            height_m: 1.43,
        }
    }
}

impl TargetSection {
    /// Speed along the motion direction at time `t`.
    pub fn speed_at(&self, t: f64) -> f64 {
        match self.profile {
            TargetProfile::Constant => self.v0_mps,
            TargetProfile::Braking => {
                if t <= self.brake_time_s {
                    self.v0_mps
                } else {
                    (self.v0_mps - self.brake_rate_mps2 * (t - self.brake_time_s)).max(0.0)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathSection {
    /// "straight" uses `length_m`; "csv" reads `x,y` lines from `csv`;
    /// "points" takes the inline list.
    pub kind: String,
    pub length_m: f64,
    pub csv: Option<String>,
    pub points: Option<Vec<[f64; 2]>>,
    pub half_width_m: f64,
}

impl Default for PathSection {
    fn default() -> Self {
        Self {
            kind: "straight".into(),
            length_m: 200.0,
            csv: None,
            points: None,
            half_width_m: BevPath::DEFAULT_HALF_WIDTH,
        }
    }
}

impl PathSection {
    pub fn build(&self) -> Result<BevPath, ConfigError> {
        match self.kind.as_str() {
            "straight" => Ok(BevPath::straight(self.length_m, self.half_width_m)?),
            "csv" => {
                let path = self.csv.as_ref().ok_or_else(|| {
                    ConfigError::Invalid("path.kind = \"csv\" needs path.csv".into())
                })?;
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.clone(),
                    source,
                })?;
                Ok(BevPath::from_csv(&text, self.half_width_m)?)
            }
            "points" => {
                let pts = self.points.clone().ok_or_else(|| {
                    ConfigError::Invalid("path.kind = \"points\" needs path.points".into())
                })?;
                Ok(BevPath::new(pts, self.half_width_m)?)
            }
            other => Err(ConfigError::Invalid(format!("unknown path.kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraSection {
    pub h_res_rad_per_px: f64,
    pub v_res_rad_per_px: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub image_width: f64,
    pub image_height: f64,
}

impl Default for CameraSection {
    fn default() -> Self {
        let cam = CameraModel::default_720p();
        Self {
            h_res_rad_per_px: cam.h_res,
            v_res_rad_per_px: cam.v_res,
            c_x: cam.c_x,
            c_y: cam.c_y,
            image_width: cam.width,
            image_height: cam.height,
        }
    }
}

impl CameraSection {
    pub fn build(&self) -> Result<CameraModel, ConfigError> {
        Ok(CameraModel::new(
            self.h_res_rad_per_px,
            self.v_res_rad_per_px,
            self.c_x,
            self.c_y,
            self.image_width,
            self.image_height,
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorsSection {
    pub lidar_range_m: f64,
    pub lidar_noise_sigma_m: f64,
    pub sensor_height_m: f64,
    pub pixel_sigma: f64,
    pub flicker_prob: f64,
    pub max_vision_range_m: f64,
    pub confidence_floor: f64,
}

impl Default for SensorsSection {
    fn default() -> Self {
        let noise = NoiseParams::default();
        Self {
            lidar_range_m: 30.0,
            lidar_noise_sigma_m: 0.02,
            sensor_height_m: 1.5,
            pixel_sigma: noise.pixel_sigma,
            flicker_prob: noise.flicker_prob,
            max_vision_range_m: noise.max_vision_range_m,
            confidence_floor: noise.confidence_floor,
        }
    }
}

impl SensorsSection {
    pub fn noise_params(&self) -> NoiseParams {
        NoiseParams {
            pixel_sigma: self.pixel_sigma,
            flicker_prob: self.flicker_prob,
            max_vision_range_m: self.max_vision_range_m,
            confidence_floor: self.confidence_floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LidarSection {
    pub n_iter: usize,
    pub n_lpr: usize,
    pub th_seeds_m: f64,
    pub th_dist_m: f64,
    pub num_segments: usize,
    pub downsample_keep: f64,
    pub cluster_dist_th_m: f64,
    pub cluster_z_weight: f64,
    pub cluster_min_pts: usize,
    pub assoc_th_m: f64,
    pub max_misses: u32,
}

impl Default for LidarSection {
    fn default() -> Self {
        let gpf = GpfParams::default();
        let trk = LidarTrackerParams::default();
        Self {
            n_iter: gpf.n_iter,
            n_lpr: gpf.n_lpr,
            th_seeds_m: gpf.th_seeds,
            th_dist_m: gpf.th_dist,
            num_segments: gpf.num_segments,
            downsample_keep: 0.5,
            cluster_dist_th_m: 0.5,
            cluster_z_weight: 0.5,
            cluster_min_pts: 5,
            assoc_th_m: trk.assoc_th,
            max_misses: trk.max_misses,
        }
    }
}

impl LidarSection {
    pub fn gpf_params(&self) -> GpfParams {
        GpfParams {
            n_iter: self.n_iter,
            n_lpr: self.n_lpr,
            th_seeds: self.th_seeds_m,
            th_dist: self.th_dist_m,
            num_segments: self.num_segments,
        }
    }

    pub fn tracker_params(&self) -> LidarTrackerParams {
        LidarTrackerParams {
            assoc_th: self.assoc_th_m,
            max_misses: self.max_misses,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisionSection {
    pub dist_th_px: f64,
    /// Quantize range estimates to bin centers before use.
    pub bin_distances: bool,
}

impl Default for VisionSection {
    fn default() -> Self {
        Self {
            dist_th_px: 20.0,
            bin_distances: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionSection {
    pub iou_floor: f64,
}

impl Default for FusionSection {
    fn default() -> Self {
        Self { iou_floor: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AccSection {
    pub d_min_m: f64,
    pub headway_s: f64,
    pub ttc_threshold_s: f64,
    pub v_set_mps: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub integrator_clamp: f64,
    pub pedal_scale: f64,
}

impl Default for AccSection {
    fn default() -> Self {
        let acc = AccConfig::default();
        Self {
            d_min_m: acc.d_min,
            headway_s: acc.headway,
            ttc_threshold_s: acc.ttc_threshold,
            v_set_mps: acc.v_set,
            kp: acc.kp,
            ki: acc.ki,
            kd: acc.kd,
            integrator_clamp: acc.integrator_clamp,
            pedal_scale: acc.pedal_scale,
        }
    }
}

impl AccSection {
    pub fn acc_config(&self) -> AccConfig {
        AccConfig {
            d_min: self.d_min_m,
            headway: self.headway_s,
            ttc_threshold: self.ttc_threshold_s,
            v_set: self.v_set_mps,
            kp: self.kp,
            ki: self.ki,
            kd: self.kd,
            integrator_clamp: self.integrator_clamp,
            pedal_scale: self.pedal_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    pub ego: EgoSection,
    pub target: TargetSection,
    pub path: PathSection,
    pub camera: CameraSection,
    pub sensors: SensorsSection,
    pub lidar: LidarSection,
    pub vision: VisionSection,
    pub fusion: FusionSection,
    pub acc: AccSection,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.scenario;
        if s.dt <= 0.0 {
            return Err(ConfigError::Invalid("scenario.dt must be positive".into()));
        }
        if s.duration < 0.0 {
            return Err(ConfigError::Invalid(
                "scenario.duration must be non-negative".into(),
            ));
        }
        if s.sensor_tick < s.dt {
            return Err(ConfigError::Invalid(
                "scenario.sensor_tick must be >= scenario.dt".into(),
            ));
        }
        if self.sensors.lidar_range_m <= 0.0 || self.sensors.max_vision_range_m <= 0.0 {
            return Err(ConfigError::Invalid("sensor ranges must be positive".into()));
        }
        if s.fusion_mode == FusionMode::Fusion
            && self.sensors.lidar_range_m >= self.sensors.max_vision_range_m
        {
            return Err(ConfigError::Invalid(
                "fusion scenarios need lidar_range_m < max_vision_range_m".into(),
            ));
        }
        if self.ego.v0_mps < 0.0 {
            return Err(ConfigError::Invalid("ego.v0_mps must be >= 0".into()));
        }
        if !(self.lidar.downsample_keep > 0.0 && self.lidar.downsample_keep <= 1.0) {
            return Err(ConfigError::Invalid(
                "lidar.downsample_keep must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Built-in demo scenarios. The three rear-collision protocols use the
    /// per-scenario sensor visibility the field tests showed (LiDAR hands
    /// over at 30/35/30 m; usable vision reaches 60/60/50 m).
    pub fn demo(name: &str) -> Option<ScenarioConfig> {
        let mut cfg = ScenarioConfig::default();
        cfg.scenario.name = name.to_string();
        match name {
            "ccrs" => {
                cfg.scenario.duration = 15.0;
                cfg.scenario.must_pass = true;
                cfg.ego.v0_mps = 27.78;
                cfg.acc.v_set_mps = 27.78;
                cfg.target.gap0_m = 79.9;
                cfg.target.v0_mps = 0.0;
                cfg.sensors.lidar_range_m = 30.0;
                cfg.sensors.max_vision_range_m = 60.0;
            }
            "ccrm" => {
                cfg.scenario.duration = 25.0;
                cfg.scenario.must_pass = true;
                cfg.ego.v0_mps = 13.89;
                cfg.acc.v_set_mps = 13.89;
                cfg.target.gap0_m = 69.9;
                cfg.target.v0_mps = 5.556;
                cfg.sensors.lidar_range_m = 35.0;
                cfg.sensors.max_vision_range_m = 60.0;
            }
            "ccrb" => {
                cfg.scenario.duration = 20.0;
                cfg.scenario.must_pass = true;
                cfg.ego.v0_mps = 13.89;
                cfg.acc.v_set_mps = 13.89;
                cfg.target.gap0_m = 60.7;
                cfg.target.v0_mps = 13.89;
                cfg.target.profile = TargetProfile::Braking;
                cfg.target.brake_rate_mps2 = 6.0;
                cfg.target.brake_time_s = 1.0;
                cfg.sensors.lidar_range_m = 30.0;
                cfg.sensors.max_vision_range_m = 50.0;
                // A braking lead calls for a longer following gap; this puts
                // the reaction point near the vision handover distance.
                cfg.acc.headway_s = 2.5;
            }
            "cipv-straight" => {
                cfg.scenario.duration = 15.0;
                cfg.scenario.must_pass = true;
                cfg.ego.v0_mps = 13.89;
                cfg.acc.v_set_mps = 13.89;
                cfg.target.gap0_m = 80.0;
                cfg.target.v0_mps = 0.0;
            }
            "cipv-curve" => {
                cfg.scenario.duration = 5.0;
                cfg.ego.v0_mps = 0.0;
                cfg.acc.v_set_mps = 0.0;
                // Quarter-circle left turn, radius 30 m.
                let pts: Vec<[f64; 2]> = (0..=90)
                    .map(|deg| {
                        let t = (deg as f64).to_radians();
                        [30.0 * t.sin(), 30.0 * (1.0 - t.cos())]
                    })
                    .collect();
                cfg.path.kind = "points".into();
                cfg.path.points = Some(pts);
                // Parked target on the arc near the 70-degree point, beyond
                // LiDAR range so only vision covers it.
                let t70 = 70.0f64.to_radians();
                cfg.target.gap0_m = 30.0 * t70.sin() - 1.0;
                cfg.target.lateral_m = 30.0 * (1.0 - t70.cos());
                cfg.target.length_m = 2.0;
                cfg.target.width_m = 4.0;
                cfg.target.v0_mps = 0.0;
            }
            "cipv-cross" => {
                cfg.scenario.duration = 12.0;
                cfg.scenario.must_pass = true;
                cfg.ego.v0_mps = 10.0;
                cfg.acc.v_set_mps = 10.0;
                cfg.acc.ttc_threshold_s = 4.0;
                cfg.target.gap0_m = 30.0;
                cfg.target.lateral_m = -12.0;
                cfg.target.v0_mps = 2.0;
                cfg.target.motion = TargetMotion::Crossing;
                // Side of the car faces the ego.
                cfg.target.length_m = 1.8;
                cfg.target.width_m = 4.5;
            }
            _ => return None,
        }
        debug_assert!(cfg.validate().is_ok());
        Some(cfg)
    }

    pub const DEMO_NAMES: [&'static str; 6] = [
        "ccrs",
        "ccrm",
        "ccrb",
        "cipv-straight",
        "cipv-curve",
        "cipv-cross",
    ];
}

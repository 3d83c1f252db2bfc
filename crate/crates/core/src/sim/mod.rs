//! Kinematic scenario simulator wiring sensors, fusion, CIPV selection and
//! the speed controller into a stepping world.
//!
//! Integration runs at `dt` with semi-implicit Euler; sensing and control
//! run at the slower `sensor_tick` with zero-order hold on the pedal in
//! between, matching a 10 fps sensor stack over a 100 Hz plant.

mod config;
mod log;
mod metrics;

pub use config::{
    AccSection, CameraSection, ConfigError, EgoSection, FusionMode, FusionSection, LidarSection,
    PathSection, ScenarioConfig, ScenarioSection, SensorsSection, TargetMotion, TargetProfile,
    TargetSection, VisionSection,
};
pub use log::{LogRow, SimLog, CSV_HEADER};
pub use metrics::{metrics, Metrics, SimError};

use crate::acc::{desired_velocity, pid_step, AccConfig, ControllerState};
use crate::fusion::{fill_ttc, fuse, FusionRecord, FusionSource};
use crate::geometry::{CameraModel, Cuboid, Point3};
use crate::lidar::{
    cluster, downsample, ground_plane_fit_exec, synthesize_cloud_exec, LidarSynthConfig,
    LidarTracker, LidarTrackerParams, TargetObs,
};
use crate::path::{annotate_in_path, select_cipv, BevPath};
use crate::util::{fork_rng, Exec};
use crate::vision::{synth_detect, NoiseParams, ObjectClass, RegressionModel, VisionTracker};

/// Longitudinal state of one simulated vehicle.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct VehicleState {
    /// Position along the motion axis, meters.
    pub s: f64,
    /// Speed, m/s (never negative; no reverse).
    pub v: f64,
    /// Acceleration applied over the last step, m/s^2.
    pub a: f64,
}

/// One frame of fusion output with its timestamp.
pub type FrameRecords = (f64, Vec<FusionRecord>);

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: SimLog,
    pub frames: Vec<FrameRecords>,
    pub metrics: Option<Metrics>,
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutput, ConfigError> {
    run_scenario_exec(cfg, Exec::auto())
}

/// As [`run_scenario`] with an explicit execution strategy for the
/// data-parallel sensor synthesis and ground fit.
pub fn run_scenario_exec(cfg: &ScenarioConfig, exec: Exec) -> Result<RunOutput, ConfigError> {
    cfg.validate()?;
    let mut world = World::new(cfg, exec)?;
    let steps = (cfg.scenario.duration / cfg.scenario.dt).round() as u64;
    for _ in 0..steps {
        world.step();
    }
    let log = SimLog { rows: world.rows };
    let metrics = metrics::metrics(&log, cfg).ok();
    Ok(RunOutput {
        log,
        frames: world.frames,
        metrics,
    })
}

struct HeldCommand {
    v_desired: f64,
    pedal: f64,
    cipv_source: Option<FusionSource>,
    cipv_distance: Option<f64>,
}

struct World<'c> {
    cfg: &'c ScenarioConfig,
    exec: Exec,
    cam: CameraModel,
    path: BevPath,
    acc: AccConfig,
    lidar_synth: LidarSynthConfig,
    noise: NoiseParams,

    t: f64,
    step_index: u64,
    steps_per_tick: u64,
    ego: VehicleState,
    /// Distance the target has travelled along its motion direction.
    target_travel: f64,
    lidar_tracker: LidarTracker,
    vision_tracker: VisionTracker,
    pid: ControllerState,
    held: HeldCommand,
    sensor_frame: u64,
    collided: bool,

    rows: Vec<LogRow>,
    frames: Vec<FrameRecords>,
}

impl<'c> World<'c> {
    fn new(cfg: &'c ScenarioConfig, exec: Exec) -> Result<Self, ConfigError> {
        let cam = cfg.camera.build()?;
        let path = cfg.path.build()?;
        let steps_per_tick = (cfg.scenario.sensor_tick / cfg.scenario.dt).round().max(1.0) as u64;
        let mut vision_tracker =
            VisionTracker::new(cfg.vision.dist_th_px, RegressionModel::default());
        vision_tracker.bin_distances = cfg.vision.bin_distances;
        Ok(Self {
            cfg,
            exec,
            cam,
            path,
            acc: cfg.acc.acc_config(),
            lidar_synth: LidarSynthConfig {
                range: cfg.sensors.lidar_range_m,
                sensor_height: cfg.sensors.sensor_height_m,
                noise_sigma: cfg.sensors.lidar_noise_sigma_m,
                ..Default::default()
            },
            noise: cfg.sensors.noise_params(),
            t: 0.0,
            step_index: 0,
            steps_per_tick,
            ego: VehicleState {
                s: 0.0,
                v: cfg.ego.v0_mps,
                a: 0.0,
            },
            target_travel: 0.0,
            lidar_tracker: LidarTracker::new(LidarTrackerParams {
                ..cfg.lidar.tracker_params()
            }),
            vision_tracker,
            pid: ControllerState::default(),
            held: HeldCommand {
                v_desired: cfg.ego.v0_mps,
                pedal: 0.0,
                cipv_source: None,
                cipv_distance: None,
            },
            sensor_frame: 0,
            collided: false,
            rows: Vec::new(),
            frames: Vec::new(),
        })
    }

    /// Target footprint center in world coordinates.
    fn target_center_world(&self) -> [f64; 2] {
        let t = &self.cfg.target;
        match t.motion {
            TargetMotion::AlongX => [
                t.gap0_m + self.target_travel + t.length_m / 2.0,
                t.lateral_m,
            ],
            TargetMotion::Crossing => [
                t.gap0_m + t.length_m / 2.0,
                t.lateral_m + self.target_travel,
            ],
        }
    }

    /// Planar distance from the ego origin to the target footprint; zero
    /// means contact.
    fn gap(&self) -> f64 {
        let [cx, cy] = self.target_center_world();
        let t = &self.cfg.target;
        let (hx, hy) = (t.length_m / 2.0, t.width_m / 2.0);
        let dx = ((cx - hx) - self.ego.s).max(self.ego.s - (cx + hx)).max(0.0);
        let dy = (cy - hy).max(-(cy + hy)).max(0.0);
        (dx * dx + dy * dy).sqrt()
    }

    fn sense_and_control(&mut self) {
        let frame_seed = self.cfg.scenario.seed.wrapping_mul(0x1000_0001) ^ self.sensor_frame;
        self.sensor_frame += 1;

        let [cx, cy] = self.target_center_world();
        let center_ego = [cx - self.ego.s, cy];
        let t = &self.cfg.target;
        let size = (t.length_m, t.width_m, t.height_m);
        let mode = self.cfg.scenario.fusion_mode;
        let dt_tick = self.cfg.scenario.sensor_tick;

        let lidar_tracks: Vec<crate::lidar::LidarTrack> = if mode != FusionMode::VisionOnly {
            let obs = TargetObs {
                center_xy: center_ego,
                size,
            };
            let cloud =
                synthesize_cloud_exec(&[obs], &self.lidar_synth, self.t, frame_seed, self.exec);
            let cloud = downsample(&cloud, self.cfg.lidar.downsample_keep);
            let clusters = match ground_plane_fit_exec(&cloud, &self.cfg.lidar.gpf_params(), self.exec)
            {
                Ok((_, _, non_ground)) => cluster(
                    &non_ground,
                    self.cfg.lidar.cluster_dist_th_m,
                    self.cfg.lidar.cluster_z_weight,
                    self.cfg.lidar.cluster_min_pts,
                ),
                Err(_) => Vec::new(),
            };
            self.lidar_tracker.step(&clusters, dt_tick).to_vec()
        } else {
            Vec::new()
        };

        let vision_tracks: Vec<crate::vision::VisionTrack> = if mode != FusionMode::LidarOnly {
            let cuboid = Cuboid::new(
                Point3::new(
                    center_ego[0],
                    center_ego[1],
                    -self.cfg.sensors.sensor_height_m + t.height_m / 2.0,
                ),
                size,
            );
            let mut rng = fork_rng(frame_seed, 0xCA11);
            let detections = synth_detect(
                &[(cuboid, ObjectClass::Car)],
                &self.cam,
                &self.noise,
                &mut rng,
            );
            let floor = self.noise.confidence_floor;
            let kept: Vec<_> = detections
                .into_iter()
                .filter(|d| d.confidence >= floor)
                .collect();
            self.vision_tracker.step(&kept)
        } else {
            Vec::new()
        };

        let mut records = fuse(
            &lidar_tracks,
            &vision_tracks,
            &self.cam,
            self.cfg.fusion.iou_floor,
        );
        annotate_in_path(&mut records, &self.path);
        fill_ttc(&mut records);

        let cipv = select_cipv(&records, &self.path);
        let v_desired = desired_velocity(&records, cipv, self.ego.v, &self.acc);
        self.held.cipv_source = cipv.map(|r| r.source);
        self.held.cipv_distance = cipv.and_then(|r| r.distance);
        let (pid, pedal) = pid_step(self.pid, v_desired, self.ego.v, dt_tick, &self.acc);
        self.pid = pid;
        self.held.v_desired = v_desired;
        self.held.pedal = pedal;

        self.frames.push((self.t, records));
    }

    fn step(&mut self) {
        if self.step_index.is_multiple_of(self.steps_per_tick) {
            self.sense_and_control();
        }
        self.step_index += 1;
        let dt = self.cfg.scenario.dt;

        // Ego plant: pedal to acceleration, bounded by braking capability
        // and the forward acceleration limit; semi-implicit Euler.
        let a = (self.held.pedal * self.acc.pedal_scale)
            .clamp(-self.cfg.ego.a_max, self.cfg.ego.a_accel_max);
        self.ego.v = (self.ego.v + a * dt).max(0.0);
        self.ego.a = a;
        self.ego.s += self.ego.v * dt;

        self.target_travel += self.cfg.target.speed_at(self.t) * dt;
        self.t += dt;

        let gap = self.gap();
        if gap <= 1e-9 {
            self.collided = true;
        }
        let [tx, _] = self.target_center_world();
        self.rows.push(LogRow {
            t: self.t,
            ego_v: self.ego.v,
            ego_s: self.ego.s,
            target_s: tx - self.cfg.target.length_m / 2.0,
            gap,
            cipv_source: self.held.cipv_source,
            cipv_distance: self.held.cipv_distance,
            v_desired: self.held.v_desired,
            pedal: self.held.pedal,
            accel: self.ego.a,
        });
    }
}

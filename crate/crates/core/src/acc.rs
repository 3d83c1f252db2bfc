//! Longitudinal control: the gap-based desired-velocity law and the PID
//! speed loop with anti-windup that turns it into a pedal command.

use crate::fusion::FusionRecord;

/// Controller configuration. `d_desired = d_min + headway * v` is the
/// speed-dependent safety distance the gap law interpolates against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccConfig {
    /// Minimum safety distance, meters.
    pub d_min: f64,
    /// Time headway, seconds.
    pub headway: f64,
    /// TTC below which non-CIPV objects trigger a slowdown, seconds.
    pub ttc_threshold: f64,
    /// Cruise set speed, m/s.
    pub v_set: f64,
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    /// Anti-windup bound on the accumulated error, m/s * s.
    pub integrator_clamp: f64,
    /// Acceleration produced by full pedal, m/s^2 per unit pedal.
    pub pedal_scale: f64,
}

impl Default for AccConfig {
    fn default() -> Self {
        Self {
            d_min: 10.0,
            headway: 1.8,
            ttc_threshold: 3.0,
            v_set: 27.78,
            kp: 1.2,
            ki: 0.4,
            kd: 0.0,
            integrator_clamp: 0.2,
            pedal_scale: 8.1,
        }
    }
}

impl AccConfig {
    pub fn d_desired(&self, v: f64) -> f64 {
        self.d_min + self.headway * v
    }
}

/// Desired speed from the traffic situation.
///
/// With a CIPV inside the safety distance the gap law scales the current
/// speed by the remaining margin: `v * (d - d_min) / (d_desired - d_min)`,
/// which for `d_desired = d_min + headway * v` equals `(d - d_min) /
/// headway`: zero at the minimum gap, passing through the current speed at
/// the desired gap. Beyond the desired gap the same line applies capped at
/// the cruise set speed, so the command is continuous across the boundary
/// and range-estimate noise at the gate cannot flap the brake. Without a
/// CIPV, any object closing faster than the TTC threshold pulls speed down
/// proportionally until its projected TTC clears the threshold; otherwise
/// the set speed stands.
pub fn desired_velocity(
    records: &[FusionRecord],
    cipv: Option<&FusionRecord>,
    v_current: f64,
    cfg: &AccConfig,
) -> f64 {
    debug_assert!(v_current >= 0.0);
    if let Some(d_current) = cipv.and_then(|r| r.distance) {
        if d_current <= cfg.d_min {
            return 0.0;
        }
        if cfg.headway <= 1e-9 {
            return cfg.v_set;
        }
        let v = (d_current - cfg.d_min) / cfg.headway;
        return v.clamp(0.0, cfg.v_set);
    }

    let min_ttc = records
        .iter()
        .filter_map(|r| r.ttc)
        .filter(|&t| t < cfg.ttc_threshold)
        .fold(f64::INFINITY, f64::min);
    if min_ttc.is_finite() {
        // Proportional slowdown; the projected TTC rises as speed drops.
        let v = v_current * (min_ttc / cfg.ttc_threshold);
        return v.clamp(0.0, cfg.v_set);
    }

    cfg.v_set
}

/// PID state: the accumulated error is clamped before use so a long
/// saturated phase cannot bank unbounded authority.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ControllerState {
    pub integrator: f64,
    pub prev_error: f64,
}

/// One PID step; returns the updated state and a pedal command in [-1, 1]
/// (positive accelerates, negative brakes).
pub fn pid_step(
    state: ControllerState,
    v_desired: f64,
    v_current: f64,
    dt: f64,
    cfg: &AccConfig,
) -> (ControllerState, f64) {
    assert!(dt > 0.0, "dt must be positive");
    let error = v_desired - v_current;
    let integrator =
        (state.integrator + error * dt).clamp(-cfg.integrator_clamp, cfg.integrator_clamp);
    let derivative = (error - state.prev_error) / dt;
    let pedal = (cfg.kp * error + cfg.ki * integrator + cfg.kd * derivative).clamp(-1.0, 1.0);
    (
        ControllerState {
            integrator,
            prev_error: error,
        },
        pedal,
    )
}

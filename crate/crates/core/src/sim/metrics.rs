//! Run metrics: measured average deceleration over the braking interval,
//! the analytically required deceleration implied by the detection
//! distance, gap extrema and per-source first-detection distances.

use super::config::ScenarioConfig;
use super::log::SimLog;
use crate::fusion::FusionSource;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("metrics need a non-empty log")]
    EmptyLog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// (v at first brake - minimum v) / elapsed, over the braking interval;
    /// zero when the run never brakes.
    pub avg_decel: f64,
    /// Deceleration the first CIPV sighting implies for reaching the final
    /// safety gap: (v_det^2 - v_target_end^2) / 2(d_det - g_end).
    pub required_decel: Option<f64>,
    pub min_gap: f64,
    pub final_gap: f64,
    pub collision: bool,
    /// CIPV distance the first time each source produced the CIPV.
    pub first_detect_v: Option<f64>,
    pub first_detect_vl: Option<f64>,
    pub first_detect_l: Option<f64>,
    pub t_first_brake: Option<f64>,
    /// (start, end) of the measured braking interval.
    pub braking_interval: Option<(f64, f64)>,
    pub v_target_end: f64,
}

/// Pedal threshold that counts as a braking command.
const BRAKE_PEDAL_TH: f64 = -0.05;
/// Release or demand-met conditions must hold this long to end the
/// braking interval.
const SETTLE_HOLD_S: f64 = 0.5;

pub fn metrics(log: &SimLog, cfg: &ScenarioConfig) -> Result<Metrics, SimError> {
    let rows = &log.rows;
    if rows.is_empty() {
        return Err(SimError::EmptyLog);
    }

    let min_gap = rows.iter().map(|r| r.gap).fold(f64::INFINITY, f64::min);
    let final_gap = rows.last().unwrap().gap;
    let collision = min_gap <= 1e-9;
    let v_target_end = cfg.target.speed_at(rows.last().unwrap().t);

    let first_for = |source: FusionSource| {
        rows.iter()
            .find(|r| r.cipv_source == Some(source))
            .and_then(|r| r.cipv_distance)
    };

    // Braking interval: from the first brake command until the braking
    // demand is met -- standstill, the speed dropping to the commanded
    // speed, or the brake being released. The latter two must persist so
    // single-frame sensor blips cannot end the interval early.
    let brake_idx = rows.iter().position(|r| r.pedal <= BRAKE_PEDAL_TH);
    let (avg_decel, t_first_brake, braking_interval) = match brake_idx {
        None => (0.0, None, None),
        Some(i0) => {
            let v0 = rows[i0].ego_v;
            let t0 = rows[i0].t;
            let dt = if rows.len() > 1 {
                (rows[1].t - rows[0].t).max(1e-6)
            } else {
                1e-6
            };
            let hold_rows = ((SETTLE_HOLD_S / dt).round() as usize).max(1);
            let mut end = rows.last().unwrap();
            let mut settled = 0usize;
            for (k, r) in rows[i0..].iter().enumerate() {
                if r.ego_v <= 1e-9 {
                    end = r;
                    break;
                }
                if r.pedal > BRAKE_PEDAL_TH || r.ego_v <= r.v_desired + 1e-9 {
                    settled += 1;
                    if settled >= hold_rows {
                        // Anchor at the start of the settled stretch.
                        end = &rows[i0 + k + 1 - settled];
                        break;
                    }
                } else {
                    settled = 0;
                }
            }
            let span = end.t - t0;
            let avg = if span > 1e-9 {
                (v0 - end.ego_v) / span
            } else {
                0.0
            };
            (avg, Some(t0), Some((t0, end.t)))
        }
    };

    // First CIPV of any source anchors the required-deceleration estimate.
    let required_decel = rows
        .iter()
        .find(|r| r.cipv_distance.is_some())
        .and_then(|r| {
            let d_det = r.cipv_distance.unwrap();
            let v_det = r.ego_v;
            let g_end = cfg.acc.d_min_m + cfg.acc.headway_s * v_target_end;
            let room = d_det - g_end;
            (room > 0.1).then(|| (v_det * v_det - v_target_end * v_target_end) / (2.0 * room))
        });

    Ok(Metrics {
        avg_decel,
        required_decel,
        min_gap,
        final_gap,
        collision,
        first_detect_v: first_for(FusionSource::V),
        first_detect_vl: first_for(FusionSource::Vl),
        first_detect_l: first_for(FusionSource::L),
        t_first_brake,
        braking_interval,
        v_target_end,
    })
}

impl Metrics {
    /// One-line human-readable summary for CLI output.
    pub fn summary(&self) -> String {
        format!(
            "avg_decel={:.3} required_decel={} min_gap={:.2} final_gap={:.2} collision={} first_detect[V={} VL={} L={}]",
            self.avg_decel,
            self.required_decel
                .map(|d| format!("{d:.3}"))
                .unwrap_or_else(|| "n/a".into()),
            self.min_gap,
            self.final_gap,
            self.collision,
            self.first_detect_v
                .map(|d| format!("{d:.1}"))
                .unwrap_or_else(|| "-".into()),
            self.first_detect_vl
                .map(|d| format!("{d:.1}"))
                .unwrap_or_else(|| "-".into()),
            self.first_detect_l
                .map(|d| format!("{d:.1}"))
                .unwrap_or_else(|| "-".into()),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::log::LogRow;

    fn row(t: f64, v: f64, gap: f64, pedal: f64) -> LogRow {
        LogRow {
            t,
            ego_v: v,
            ego_s: 0.0,
            target_s: gap,
            gap,
            cipv_source: None,
            cipv_distance: None,
            v_desired: 0.0,
            pedal,
            accel: 0.0,
        }
    }

    #[test]
    fn empty_log_is_an_error() {
        let cfg = ScenarioConfig::default();
        assert_eq!(metrics(&SimLog::default(), &cfg), Err(SimError::EmptyLog));
    }

    #[test]
    fn linear_stop_measures_the_slope() {
        // 27.78 -> 0 over 3.6 s: 7.72 m/s^2.
        let mut rows = Vec::new();
        let dt = 0.01;
        let mut t: f64 = 0.0;
        let mut v: f64 = 27.78;
        rows.push(row(t, v, 100.0, 0.0));
        while v > 0.0 {
            t += dt;
            v = (v - 7.7166 * dt).max(0.0);
            rows.push(row(t, v, 100.0, -1.0));
        }
        let m = metrics(&SimLog { rows }, &ScenarioConfig::default()).unwrap();
        assert!((m.avg_decel - 7.72).abs() < 0.05, "{}", m.avg_decel);
    }

    #[test]
    fn no_braking_means_zero_decel() {
        let rows = vec![row(0.0, 10.0, 50.0, 0.0), row(0.1, 10.0, 49.0, 0.0)];
        let m = metrics(&SimLog { rows }, &ScenarioConfig::default()).unwrap();
        assert_eq!(m.avg_decel, 0.0);
        assert_eq!(m.t_first_brake, None);
        assert!((m.min_gap - 49.0).abs() < 1e-12);
    }

    #[test]
    fn gap_crossing_zero_flags_collision() {
        let rows = vec![row(0.0, 10.0, 5.0, -1.0), row(0.1, 10.0, 0.0, -1.0)];
        let m = metrics(&SimLog { rows }, &ScenarioConfig::default()).unwrap();
        assert!(m.collision);
    }

    #[test]
    fn required_decel_from_detection_distance() {
        // Stationary target, first CIPV at 30 m while doing 27.78 m/s,
        // d_min 10: (27.78^2) / (2 * 20) = 19.29.
        let mut rows = vec![row(0.0, 27.78, 80.0, 0.0)];
        rows[0].cipv_source = Some(FusionSource::L);
        rows[0].cipv_distance = Some(30.0);
        rows.push(row(0.1, 27.0, 70.0, -1.0));
        let cfg = ScenarioConfig::default(); // target v0 = 0
        let m = metrics(&SimLog { rows }, &cfg).unwrap();
        assert!((m.required_decel.unwrap() - 19.29).abs() < 0.01);
        assert_eq!(m.first_detect_l, Some(30.0));
        assert_eq!(m.first_detect_v, None);
    }
}

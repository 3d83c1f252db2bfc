//! End-to-end pipeline properties over full scenario runs: sensor handover
//! ordering, source-transition monotonicity, the deceleration law bridging
//! detection distance to measured braking, and the frame-log format.

use trackfuse::fusion::FusionSource;
use trackfuse::sim::{metrics, run_scenario, FusionMode, ScenarioConfig};

/// Vision reaches further than the LiDAR in every fusion demo, so
/// vision-sourced CIPVs must appear before merged ones, and once the
/// LiDAR has acquired the target the CIPV never falls back to vision-only.
#[test]
fn vision_precedes_fusion_and_never_regresses() {
    for name in ["ccrs", "ccrm", "ccrb", "cipv-straight"] {
        let cfg = ScenarioConfig::demo(name).unwrap();
        let run = run_scenario(&cfg).unwrap();
        let rows = &run.log.rows;

        let first_v = rows.iter().position(|r| r.cipv_source == Some(FusionSource::V));
        let first_vl = rows.iter().position(|r| r.cipv_source == Some(FusionSource::Vl));
        let (Some(v), Some(vl)) = (first_v, first_vl) else {
            panic!("{name}: expected both V and VL phases");
        };
        assert!(v < vl, "{name}: V at row {v} must precede VL at {vl}");
        assert!(
            rows[vl..]
                .iter()
                .all(|r| r.cipv_source != Some(FusionSource::V)),
            "{name}: CIPV regressed to vision-only after LiDAR acquisition"
        );
    }
}

/// The bridge behind the reproduced protocol numbers: braking from the
/// detection distance down to the final gap measures an average
/// deceleration within 10% of v^2 / 2(d_det - gap) when the run brakes to
/// standstill.
#[test]
fn required_deceleration_law_holds_on_ccrs() {
    let cfg = ScenarioConfig::demo("ccrs").unwrap();
    let run = run_scenario(&cfg).unwrap();
    let m = run.metrics.unwrap();
    let rows = &run.log.rows;

    let detect = rows
        .iter()
        .find(|r| r.cipv_distance.is_some())
        .expect("target detected");
    let v_det = detect.ego_v;
    let d_det = detect.cipv_distance.unwrap();
    let law = v_det * v_det / (2.0 * (d_det - m.final_gap));
    let rel = (m.avg_decel - law).abs() / law;
    assert!(
        rel <= 0.10,
        "measured {:.3} vs law {:.3} ({:.1}% off)",
        m.avg_decel,
        law,
        rel * 100.0
    );
}

/// Mode ablations: vision-only still stops the car from long range; the
/// LiDAR-only CCRs run cannot.
#[test]
fn mode_ablation_changes_outcome() {
    let mut cfg = ScenarioConfig::demo("ccrs").unwrap();

    cfg.scenario.fusion_mode = FusionMode::VisionOnly;
    let vision = run_scenario(&cfg).unwrap().metrics.unwrap();
    assert!(!vision.collision, "vision-only should stop in time");
    assert!(vision.first_detect_v.is_some());
    assert!(vision.first_detect_vl.is_none());
    assert!(vision.first_detect_l.is_none());

    cfg.scenario.fusion_mode = FusionMode::LidarOnly;
    let lidar = run_scenario(&cfg).unwrap().metrics.unwrap();
    assert!(lidar.collision, "lidar-only cannot stop from 30 m");
    assert!(lidar.first_detect_l.is_some());
    assert!(lidar.first_detect_v.is_none());
}

/// The frame log is JSON-lines of record arrays with the contract field
/// names, and fused frames carry LiDAR geometry with the vision class.
#[test]
fn frame_log_format_and_contents() {
    let mut cfg = ScenarioConfig::demo("ccrs").unwrap();
    cfg.scenario.duration = 8.0;
    let run = run_scenario(&cfg).unwrap();

    let mut buf = Vec::new();
    for (_, records) in &run.frames {
        trackfuse::fusion::write_frame_line(&mut buf, records).unwrap();
    }
    let text = String::from_utf8(buf).unwrap();
    let mut saw_vl = false;
    for line in text.lines() {
        let value: serde_json::Value = serde_json::from_str(line).expect("valid json per line");
        let records = value.as_array().expect("array per frame");
        for r in records {
            let obj = r.as_object().unwrap();
            let name = obj["name"].as_str().unwrap();
            assert!(["V", "VL", "L"].contains(&name));
            if name == "VL" {
                saw_vl = true;
                assert_eq!(obj["type_id"], "car");
                assert_eq!(obj["bird_eye_view"].as_array().unwrap().len(), 8);
                assert!(obj["distance"].as_f64().unwrap() > 0.0);
                assert!(obj.contains_key("velocity"));
                assert!(obj.contains_key("moving_state"));
                assert!(obj.contains_key("in_path"));
            }
        }
    }
    assert!(saw_vl, "run should produce merged records");
}

/// With sensor noise switched off, the tracked LiDAR distance to the
/// target is exact: the range error budget in live runs comes entirely
/// from the modeled noise, not the pipeline.
#[test]
fn noiseless_tracking_has_zero_range_error() {
    let mut cfg = ScenarioConfig::demo("ccrs").unwrap();
    cfg.scenario.duration = 6.0;
    cfg.sensors.lidar_noise_sigma_m = 1e-12;
    cfg.sensors.pixel_sigma = 0.0;
    cfg.sensors.flicker_prob = 0.0;
    let run = run_scenario(&cfg).unwrap();

    let mut checked = 0;
    for r in &run.log.rows {
        if r.cipv_source == Some(FusionSource::Vl) {
            if let Some(d) = r.cipv_distance {
                // The log holds the gap after up to one 0.1 s step of
                // motion since the sensor frame; under braking the speed at
                // the frame was up to a_max * tick higher than now.
                let drift = (r.ego_v + 0.9) * 0.1 + 0.02;
                assert!(
                    d >= r.gap - 1e-6 && d <= r.gap + drift,
                    "t={} d={} gap={}",
                    r.t,
                    d,
                    r.gap
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 50, "expected a tracked approach phase");
}

/// Metrics recompute identically from a persisted log's rows.
#[test]
fn metrics_are_log_derivable() {
    let cfg = ScenarioConfig::demo("ccrm").unwrap();
    let run = run_scenario(&cfg).unwrap();
    let recomputed = metrics(&run.log, &cfg).unwrap();
    assert_eq!(run.metrics.unwrap(), recomputed);
}

/// The crossing demo exercises the TTC branch before the target enters the
/// corridor: the ego slows while no CIPV exists, then the CIPV appears as
/// the target crosses into the path.
#[test]
fn crossing_target_flips_cipv_with_path_entry() {
    let cfg = ScenarioConfig::demo("cipv-cross").unwrap();
    let run = run_scenario(&cfg).unwrap();
    let rows = &run.log.rows;

    let first_cipv = rows
        .iter()
        .position(|r| r.cipv_source.is_some())
        .expect("crossing target becomes CIPV");
    // Braking before any CIPV exists can only come from the TTC branch.
    let ttc_braked = rows[..first_cipv]
        .iter()
        .any(|r| r.cipv_source.is_none() && r.pedal < -0.05 && r.v_desired < cfg.acc.v_set_mps);
    assert!(ttc_braked, "TTC branch should slow the ego before path entry");
    assert!(!run.metrics.unwrap().collision);

    // After the target leaves the corridor the CIPV clears again.
    let last_cipv = rows.iter().rposition(|r| r.cipv_source.is_some()).unwrap();
    assert!(last_cipv < rows.len() - 1, "CIPV should clear after crossing");
}

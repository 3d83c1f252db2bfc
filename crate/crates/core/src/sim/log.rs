//! Per-step run log and its CSV rendering.

use crate::fusion::FusionSource;

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: f64,
    pub ego_v: f64,
    pub ego_s: f64,
    pub target_s: f64,
    pub gap: f64,
    pub cipv_source: Option<FusionSource>,
    pub cipv_distance: Option<f64>,
    pub v_desired: f64,
    pub pedal: f64,
    pub accel: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimLog {
    pub rows: Vec<LogRow>,
}

pub const CSV_HEADER: &str =
    "t,ego_v,ego_s,target_s,gap,cipv_source,cipv_distance,v_desired,pedal,accel";

impl SimLog {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Fixed-precision CSV; identical runs render byte-identical text.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let source = r.cipv_source.map(|s| s.as_str()).unwrap_or("");
            let distance = r
                .cipv_distance
                .map(|d| format!("{d:.6}"))
                .unwrap_or_default();
            out.push_str(&format!(
                "{:.3},{:.6},{:.6},{:.6},{:.6},{},{},{:.6},{:.6},{:.6}\n",
                r.t,
                r.ego_v,
                r.ego_s,
                r.target_s,
                r.gap,
                source,
                distance,
                r.v_desired,
                r.pedal,
                r.accel
            ));
        }
        out
    }
}

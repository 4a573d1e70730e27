//! File emission: CSV rendering and JSON writing with stable bytes.
//!
//! Every float in a CSV is printed with 17 significant digits (`{:.16e}`),
//! enough to round-trip any f64 exactly; JSON numbers use the serializer's
//! shortest round-trip form. Lines end in LF. Identical inputs therefore
//! produce identical bytes on every platform.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mutualism_core::analysis::ReplicateRecord;
use mutualism_core::Trajectory;
use serde::Serialize;

use crate::CliError;

fn io_err(path: &Path, detail: impl ToString) -> CliError {
    CliError::Io { path: path.display().to_string(), detail: detail.to_string() }
}

/// Creates `dir` and any missing parents.
pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Writes `text` to `path`.
pub fn write_string(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Serializes `value` as pretty JSON (trailing newline) and writes it.
/// Non-finite floats serialize as `null`, keeping the output valid JSON;
/// quantities that can legitimately be unbounded are modeled as `Option` so
/// the `null` is intentional rather than accidental.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| io_err(path, format!("JSON serialization failed: {e}")))?;
    text.push('\n');
    write_string(path, &text)
}

/// Renders a trajectory as `t,x,y` rows.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(72 * (traj.n_steps() + 2));
    out.push_str("t,x,y\n");
    for k in 0..=traj.n_steps() {
        let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", traj.time(k), traj.xs[k], traj.ys[k]);
    }
    out
}

/// Renders per-replicate statistics, one row per stream id. Failed
/// replicates keep their row so the replicate count is always visible:
/// statistics print as `NaN` and the `failed` column is 1.
pub fn replicates_csv(records: &[ReplicateRecord]) -> String {
    let mut out = String::with_capacity(128 * (records.len() + 1));
    out.push_str("replicate,time_avg_x,time_avg_y,log_growth_x,log_growth_y,clamp_count,failed\n");
    for rec in records {
        match &rec.data {
            Some(d) => {
                let _ = writeln!(
                    out,
                    "{},{:.16e},{:.16e},{:.16e},{:.16e},{},0",
                    rec.stream_id,
                    d.stats.time_avg_x,
                    d.stats.time_avg_y,
                    d.stats.log_growth_x,
                    d.stats.log_growth_y,
                    d.stats.clamp_count,
                );
            }
            None => {
                let _ = writeln!(out, "{},NaN,NaN,NaN,NaN,0,1", rec.stream_id);
            }
        }
    }
    out
}

//! File output: trajectory CSV, diagnostics and study files.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! re-parse reproduces every value bit for bit. Files are written to a
//! temporary sibling and renamed into place.

use anyhow::Context;
use fracrothe::stepper::Trajectory;
use serde::Serialize;
use std::path::Path;

/// Writes `bytes` atomically (temp file + rename), creating parents.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

/// Renders the trajectory as CSV: header `t,x_1,...,x_N`, one row per
/// node `j = -n..m`, LF line endings. `error_at` appends an `error`
/// column when present.
pub fn trajectory_csv(
    traj: &Trajectory,
    error_at: Option<&dyn Fn(i64, &[f64]) -> f64>,
) -> String {
    let grid = traj.grid();
    let dim = traj.dimension();
    let mut out = String::new();
    out.push('t');
    for i in 1..=dim {
        out.push_str(&format!(",x_{i}"));
    }
    if error_at.is_some() {
        out.push_str(",error");
    }
    out.push('\n');
    let n = grid.subdivisions() as i64;
    let m = grid.step_count() as i64;
    for j in -n..=m {
        let state = traj.state(j).expect("index in range");
        out.push_str(&format!("{}", grid.node(j)));
        for x in state {
            out.push_str(&format!(",{x}"));
        }
        if let Some(err) = error_at {
            out.push_str(&format!(",{}", err(j, state)));
        }
        out.push('\n');
    }
    out
}

/// Parses a trajectory CSV back into `(header, rows)`.
pub fn parse_trajectory_csv(text: &str) -> anyhow::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .context("empty CSV")?
        .split(',')
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|f| f.parse::<f64>().with_context(|| format!("row {i}: bad float {f:?}")))
            .collect::<anyhow::Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Per-run diagnostics file contents.
#[derive(Debug, Serialize)]
pub struct DiagnosticsOut {
    pub max_state_deviation: f64,
    pub max_difference_norm: f64,
    pub max_caputo_norm: Vec<f64>,
    pub max_step_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_time_error: Option<f64>,
    pub wall_time_seconds: f64,
}

/// One row of a convergence study.
#[derive(Debug, Serialize)]
pub struct StudyRow {
    pub n: usize,
    pub h: f64,
    pub cauchy_diff: f64,
    pub mms_error: Option<f64>,
    pub observed_order: Option<f64>,
}

pub fn study_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from("n,h,cauchy_diff,mms_error,observed_order\n");
    for r in rows {
        out.push_str(&format!("{},{},{}", r.n, r.h, r.cauchy_diff));
        match r.mms_error {
            Some(e) => out.push_str(&format!(",{e}")),
            None => out.push(','),
        }
        match r.observed_order {
            Some(o) => out.push_str(&format!(",{o}\n")),
            None => out.push_str(",\n"),
        }
    }
    out
}

/// One verification check outcome.
#[derive(Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

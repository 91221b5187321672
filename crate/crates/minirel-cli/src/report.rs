//! Report assembly and emission.
//!
//! A grid produces one [`RunRow`] per configured run (plus baseline
//! selection rows), wall-clock timings, and one stored solution per
//! successful run. Emission writes four artifacts into the output
//! directory:
//!
//! * `report.csv` — one row per run, stable column order, deterministic
//!   contents (identical config + seeds ⇒ byte-identical file);
//! * `timings.csv` — wall-clock numbers, split out because they are the
//!   one legitimately nondeterministic quantity;
//! * `summary.json` — per-(dataset, strategy, K, α) means and sample
//!   standard deviations over the seed axis;
//! * `assignments/<run_id>.json` — full solution records that reload to
//!   the same cost and metrics.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Stable column order of `report.csv`.
pub const REPORT_COLUMNS: [&str; 15] = [
    "run_id",
    "dataset",
    "strategy",
    "k",
    "alpha",
    "seed",
    "status",
    "cost",
    "max_deviation",
    "additive_sum",
    "additive_max",
    "normalized_additive_sum",
    "normalized_additive_max",
    "iterations",
    "error",
];

/// One run of the grid (or one baseline selection row).
#[derive(Debug, Clone)]
pub struct RunRow {
    pub run_id: String,
    pub dataset: String,
    pub strategy: String,
    pub k: usize,
    pub alpha: f64,
    pub seed: u64,
    /// `ok`, `infeasible`, `time-limit`, or `error`.
    pub status: String,
    pub cost: Option<f64>,
    pub max_deviation: Option<usize>,
    pub additive_sum: Option<f64>,
    pub additive_max: Option<f64>,
    pub normalized_additive_sum: Option<f64>,
    pub normalized_additive_max: Option<f64>,
    pub iterations: Option<usize>,
    /// Failure detail for `infeasible` / `error` rows.
    pub error: String,
}

/// Wall-clock accounting for one run (excluded from determinism checks).
#[derive(Debug, Clone)]
pub struct TimingRow {
    pub run_id: String,
    /// Total fair-assignment time across iterations.
    pub assign_secs: f64,
    /// Total center-update time across iterations.
    pub center_secs: f64,
    /// End-to-end run time.
    pub wall_secs: f64,
}

/// A stored solution, written as `assignments/<run_id>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub run_id: String,
    pub dataset: String,
    pub strategy: String,
    pub k: usize,
    pub alpha: f64,
    pub seed: u64,
    pub cost: f64,
    pub assignment: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub y: Option<Vec<Vec<bool>>>,
    pub max_deviation: usize,
    pub additive_sum: f64,
    pub additive_max: f64,
}

/// Everything a grid run produced.
#[derive(Debug, Default)]
pub struct Report {
    pub rows: Vec<RunRow>,
    pub timings: Vec<TimingRow>,
    pub solutions: Vec<SolutionRecord>,
}

/// One aggregate line of `summary.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub dataset: String,
    pub strategy: String,
    pub k: usize,
    pub alpha: f64,
    pub runs: usize,
    pub ok_runs: usize,
    pub mean_cost: Option<f64>,
    /// Sample standard deviation (n − 1); absent below two data points.
    pub stddev_cost: Option<f64>,
    pub mean_max_deviation: Option<f64>,
    pub mean_additive_max: Option<f64>,
    pub mean_iterations: Option<f64>,
}

/// Shortest-roundtrip float formatting (what `{}` prints for `f64`).
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn fmt_opt_usize(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Report {
    /// Writes all artifacts; returns the paths written.
    pub fn emit(&self, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(out_dir)
            .map_err(|e| CliError::Runtime(format!("mkdir {}: {e}", out_dir.display())))?;
        let mut written = Vec::new();

        let report_path = out_dir.join("report.csv");
        self.write_report_csv(&report_path)?;
        written.push(report_path);

        let timings_path = out_dir.join("timings.csv");
        self.write_timings_csv(&timings_path)?;
        written.push(timings_path);

        let summary_path = out_dir.join("summary.json");
        let summary = self.summarize();
        write_json(&summary_path, &summary)?;
        written.push(summary_path);

        let assignment_dir = out_dir.join("assignments");
        fs::create_dir_all(&assignment_dir)
            .map_err(|e| CliError::Runtime(format!("mkdir {}: {e}", assignment_dir.display())))?;
        for record in &self.solutions {
            let path = assignment_dir.join(format!("{}.json", record.run_id));
            write_json(&path, record)?;
            written.push(path);
        }
        Ok(written)
    }

    fn write_report_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut writer = csv::Writer::from_path(path)
            .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))?;
        writer
            .write_record(REPORT_COLUMNS)
            .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))?;
        for row in &self.rows {
            writer
                .write_record([
                    row.run_id.as_str(),
                    row.dataset.as_str(),
                    row.strategy.as_str(),
                    &row.k.to_string(),
                    &fmt_f64(row.alpha),
                    &row.seed.to_string(),
                    row.status.as_str(),
                    &fmt_opt_f64(row.cost),
                    &fmt_opt_usize(row.max_deviation),
                    &fmt_opt_f64(row.additive_sum),
                    &fmt_opt_f64(row.additive_max),
                    &fmt_opt_f64(row.normalized_additive_sum),
                    &fmt_opt_f64(row.normalized_additive_max),
                    &fmt_opt_usize(row.iterations),
                    row.error.as_str(),
                ])
                .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))?;
        }
        writer
            .flush()
            .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))
    }

    fn write_timings_csv(&self, path: &Path) -> Result<(), CliError> {
        let mut writer = csv::Writer::from_path(path)
            .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))?;
        writer
            .write_record(["run_id", "assign_secs", "center_secs", "wall_secs"])
            .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))?;
        for t in &self.timings {
            writer
                .write_record([
                    t.run_id.as_str(),
                    &fmt_f64(t.assign_secs),
                    &fmt_f64(t.center_secs),
                    &fmt_f64(t.wall_secs),
                ])
                .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))?;
        }
        writer
            .flush()
            .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))
    }

    /// Aggregates the seed axis per (dataset, strategy, K, α), in first-seen
    /// row order (which is deterministic because the grid order is).
    pub fn summarize(&self) -> Vec<SummaryEntry> {
        let mut keys: Vec<(String, String, usize, f64)> = Vec::new();
        for row in &self.rows {
            let key =
                (row.dataset.clone(), row.strategy.clone(), row.k, row.alpha);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        keys.into_iter()
            .map(|(dataset, strategy, k, alpha)| {
                let group: Vec<&RunRow> = self
                    .rows
                    .iter()
                    .filter(|r| {
                        r.dataset == dataset
                            && r.strategy == strategy
                            && r.k == k
                            && r.alpha == alpha
                    })
                    .collect();
                let ok: Vec<&&RunRow> =
                    group.iter().filter(|r| r.status == "ok").collect();
                let costs: Vec<f64> = ok.iter().filter_map(|r| r.cost).collect();
                SummaryEntry {
                    dataset,
                    strategy,
                    k,
                    alpha,
                    runs: group.len(),
                    ok_runs: ok.len(),
                    mean_cost: mean(&costs),
                    stddev_cost: sample_stddev(&costs),
                    mean_max_deviation: mean(
                        &ok.iter()
                            .filter_map(|r| r.max_deviation.map(|d| d as f64))
                            .collect::<Vec<_>>(),
                    ),
                    mean_additive_max: mean(
                        &ok.iter().filter_map(|r| r.additive_max).collect::<Vec<_>>(),
                    ),
                    mean_iterations: mean(
                        &ok.iter()
                            .filter_map(|r| r.iterations.map(|i| i as f64))
                            .collect::<Vec<_>>(),
                    ),
                }
            })
            .collect()
    }
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Sample standard deviation with the n − 1 divisor: {2, 4} → √2.
fn sample_stddev(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut file = fs::File::create(path)
        .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))?;
    serde_json::to_writer_pretty(&mut file, value)
        .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))?;
    file.write_all(b"\n")
        .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))
}

/// Reloads a stored solution record.
pub fn load_solution(path: &Path) -> Result<SolutionRecord, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

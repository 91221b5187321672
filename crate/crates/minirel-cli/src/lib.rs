//! Command-line harness for fair-clustering experiments.
//!
//! Wraps the `minirel` library with dataset ingestion (CSV or bundled
//! synthetic generators), TOML experiment configuration, a deterministic
//! grid runner, and report emission. The binary exposes four subcommands:
//!
//! * `cluster` — one fair clustering run, summary on stdout;
//! * `experiment` — a (strategy × K × α × seed) grid into report files;
//! * `prefix` — the polynomial pre-fixing stage only, printing which
//!   clusters are designated to represent which groups;
//! * `round` — round a fractional assignment file through the min-cost
//!   flow network.
//!
//! Exit codes: 0 success, 2 when the fairness targets are provably
//! infeasible (a certificate was produced), 3 for configuration or parse
//! errors, 1 for everything else.

pub mod config;
pub mod data;
pub mod experiment;
pub mod report;

use std::path::{Path, PathBuf};

use minirel::flow::round_fractional;
use minirel::model::{Alpha, ClusteringProblem, FairnessSpec};
use minirel::prefix::{myopic_costs, solve_prefix, MyopicCostKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use config::{
    cardinality_window, resolve_policy, strategy_name, DatasetConfig, ExperimentConfig,
    GridConfig,
};
use experiment::{execute, execute_single, RunDescriptor};
use report::load_solution;

/// Harness-level failure, mapped to the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, flags, or input files (exit 3).
    #[error("{0}")]
    Config(String),
    /// The fairness targets admit no clustering; carries the certificate
    /// text (exit 2).
    #[error("{0}")]
    Infeasible(String),
    /// Everything else (exit 1).
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Infeasible(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

/// Flag-level overrides shared by `cluster`, `prefix`, and `round`.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    /// Builtin dataset name (`blobs`, `six-line`, `theorem-gap`) when no
    /// config file is given.
    pub data: Option<String>,
    pub seed: Option<u64>,
    pub strategy: Option<String>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub beta_policy: Option<String>,
    pub balanced: bool,
    pub time_limit: Option<f64>,
}

/// Resolves a config file plus flag overrides into one effective config.
pub fn build_config(overrides: &Overrides) -> Result<ExperimentConfig, CliError> {
    let mut config = match (&overrides.config, &overrides.data) {
        (Some(path), _) => ExperimentConfig::from_path(path)?,
        (None, Some(data)) => default_config(data)?,
        (None, None) => {
            return Err(CliError::Config(
                "need --config <file> or --data <blobs|six-line|theorem-gap>".into(),
            ))
        }
    };
    if let Some(data) = &overrides.data {
        if overrides.config.is_some() {
            // --data on top of a config swaps the dataset for a builtin.
            config.dataset = builtin_dataset(data)?;
        }
    }
    if let Some(strategy) = &overrides.strategy {
        config.grid.strategies = vec![strategy.clone()];
    }
    if let Some(k) = overrides.k {
        config.grid.k = vec![k];
    }
    if let Some(alpha) = overrides.alpha {
        config.grid.alpha = vec![alpha];
    }
    if let Some(seed) = overrides.seed {
        config.grid.seeds = vec![seed];
    }
    if let Some(policy) = &overrides.beta_policy {
        config.fairness.beta_policy = Some(policy.clone());
    }
    if overrides.balanced {
        config.fairness.balanced = true;
    }
    if let Some(secs) = overrides.time_limit {
        config.limits.time_limit_secs = Some(secs);
    }
    // Re-validate after overrides (e.g. a bad --strategy or --alpha).
    let text = toml_like_revalidate(&config)?;
    Ok(text)
}

/// Overridden configs are re-checked through the same validation path as
/// file configs.
fn toml_like_revalidate(config: &ExperimentConfig) -> Result<ExperimentConfig, CliError> {
    for name in &config.grid.strategies {
        config::parse_strategy(name)?;
    }
    for &a in &config.grid.alpha {
        if !(a > 0.0 && a <= 1.0) {
            return Err(CliError::Config(format!("alpha {a} outside (0, 1]")));
        }
    }
    for &k in &config.grid.k {
        if k == 0 {
            return Err(CliError::Config("k must be ≥ 1".into()));
        }
    }
    config.parse_mode()?;
    Ok(config.clone())
}

fn builtin_dataset(name: &str) -> Result<DatasetConfig, CliError> {
    match name {
        "blobs" | "six-line" | "theorem-gap" => Ok(DatasetConfig {
            source: name.to_string(),
            path: None,
            name: None,
            blobs: None,
            per_blob: None,
            dim: None,
            n_groups: None,
            skew: None,
            separation: None,
            spread: None,
            synth_seed: None,
            subsample: None,
            subsample_seed: None,
        }),
        other => Err(CliError::Config(format!(
            "unknown builtin dataset `{other}` (blobs, six-line, theorem-gap); \
             CSV files need a --config with a [schema]"
        ))),
    }
}

/// A minimal single-run config around a builtin dataset.
fn default_config(data: &str) -> Result<ExperimentConfig, CliError> {
    Ok(ExperimentConfig {
        dataset: builtin_dataset(data)?,
        schema: None,
        grid: GridConfig {
            strategies: vec!["full-ip".into()],
            k: vec![if data == "theorem-gap" { 3 } else { 2 }],
            alpha: vec![0.51],
            seeds: vec![0],
            baselines: false,
        },
        fairness: Default::default(),
        limits: Default::default(),
        mode: None,
        distance: None,
    })
}

/// First cell of the grid, for the single-run subcommands.
fn single_descriptor(
    config: &ExperimentConfig,
    dataset_name: &str,
) -> Result<RunDescriptor, CliError> {
    let grid = experiment::build_grid(config, dataset_name)?;
    grid.into_iter().next().ok_or_else(|| CliError::Config("empty grid".into()))
}

/// `cluster`: one run, human-readable summary on stdout, optional solution
/// JSON at `--out`.
pub fn cmd_cluster(overrides: &Overrides, out: Option<&Path>) -> Result<(), CliError> {
    let config = build_config(overrides)?;
    let loaded = data::load(&config.dataset, config.schema.as_ref())?;
    let mode = config.parse_mode()?;
    let descriptor = single_descriptor(&config, &loaded.name)?;
    let outcome = execute_single(&config, &loaded, mode, &descriptor);
    match outcome.row.status.as_str() {
        "ok" => {
            let row = &outcome.row;
            println!("run {}", row.run_id);
            println!("status: ok");
            println!("cost: {}", row.cost.unwrap_or(f64::NAN));
            println!("iterations: {}", row.iterations.unwrap_or(0));
            println!("max deviation: {}", row.max_deviation.unwrap_or(0));
            println!("additive violation (max): {}", row.additive_max.unwrap_or(0.0));
            println!("additive violation (sum): {}", row.additive_sum.unwrap_or(0.0));
            if let (Some(path), Some(solution)) = (out, &outcome.solution) {
                let text = serde_json::to_string_pretty(solution)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                std::fs::write(path, text + "\n")
                    .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))?;
                println!("solution written to {}", path.display());
            }
            Ok(())
        }
        "infeasible" => Err(CliError::Infeasible(outcome.row.error)),
        "time-limit" => Err(CliError::Runtime("run hit the wall-clock budget".into())),
        _ => Err(CliError::Runtime(outcome.row.error)),
    }
}

/// `experiment`: the full grid into `--out`.
pub fn cmd_experiment(config_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let config = ExperimentConfig::from_path(config_path)?;
    let loaded = data::load(&config.dataset, config.schema.as_ref())?;
    let report = execute(&config, &loaded)?;
    let written = report.emit(out_dir)?;
    println!(
        "{} rows ({} solutions) written to {}",
        report.rows.len(),
        report.solutions.len(),
        out_dir.display()
    );
    for path in written.iter().take(3) {
        println!("  {}", path.display());
    }
    Ok(())
}

/// `prefix`: run the warm start and the polynomial pre-fixing stage, print
/// the designation pattern.
pub fn cmd_prefix(overrides: &Overrides) -> Result<(), CliError> {
    let config = build_config(overrides)?;
    let loaded = data::load(&config.dataset, config.schema.as_ref())?;
    let mode = config.parse_mode()?;
    let descriptor = single_descriptor(&config, &loaded.name)?;

    let problem = ClusteringProblem::new(
        loaded.dataset.clone(),
        loaded.groups.clone(),
        descriptor.k,
        mode,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    let policy = resolve_policy(&config.fairness, &loaded.groups)?;
    let alpha = Alpha::Uniform(descriptor.alpha);
    let beta = minirel::model::compute_beta(&policy, &alpha, descriptor.k, &loaded.groups);
    let (lower, upper) =
        cardinality_window(&config.fairness, loaded.dataset.n(), descriptor.k)?;
    let spec = FairnessSpec::new(alpha, beta, lower, upper)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(descriptor.seed);
    let warm = minirel::driver::warm_start(
        &problem,
        &mut rng,
        minirel::driver::WarmStartMode::Lloyd,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    let matrix =
        myopic_costs(&problem, &warm.centers, &warm.assignment, &spec, MyopicCostKind::LocalCost);
    let prefix = match solve_prefix(&matrix, &spec, &loaded.groups) {
        Ok(p) => p,
        Err(minirel::Error::PrefixInfeasible { group, detail }) => {
            return Err(CliError::Infeasible(format!("prefix infeasible for {group}: {detail}")))
        }
        Err(e) => return Err(CliError::Runtime(e.to_string())),
    };

    println!(
        "pre-fixing for {} (strategy {}, K = {}, α = {})",
        loaded.name,
        strategy_name(descriptor.strategy),
        descriptor.k,
        descriptor.alpha
    );
    println!("objective: {}", prefix.objective);
    for (g, row) in prefix.y.iter().enumerate() {
        let clusters: Vec<String> = row
            .iter()
            .enumerate()
            .filter_map(|(k, &on)| on.then(|| k.to_string()))
            .collect();
        println!(
            "{}: {}",
            loaded.groups.group_label(g),
            if clusters.is_empty() { "-".into() } else { clusters.join(", ") }
        );
    }
    Ok(())
}

/// Input of the `round` subcommand: a fractional assignment plus the
/// pattern and targets it was solved under.
#[derive(Debug, Serialize, Deserialize)]
pub struct RoundInput {
    pub alpha: f64,
    pub beta: Vec<usize>,
    #[serde(default)]
    pub card_lower: Option<usize>,
    #[serde(default)]
    pub card_upper: Option<usize>,
    pub centers: Vec<Vec<f64>>,
    pub y: Vec<Vec<bool>>,
    /// Row-major n × K fractional memberships.
    pub z: Vec<Vec<f64>>,
}

/// Output of the `round` subcommand.
#[derive(Debug, Serialize, Deserialize)]
pub struct RoundOutput {
    pub assignment: Vec<usize>,
    pub cost: f64,
    /// (group, cluster, δ) for every designated pair.
    pub violations: Vec<(usize, usize, f64)>,
    pub max_violation: f64,
    pub bound_value: f64,
}

/// `round`: round a fractional assignment file through the flow network.
pub fn cmd_round(
    overrides: &Overrides,
    input: &Path,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let config = build_config(overrides)?;
    let loaded = data::load(&config.dataset, config.schema.as_ref())?;
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", input.display())))?;
    let round_input: RoundInput = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", input.display())))?;

    let n = loaded.dataset.n();
    let k = round_input.centers.len();
    if round_input.z.len() != n || round_input.z.iter().any(|row| row.len() != k) {
        return Err(CliError::Config(format!(
            "{}: z must be {n} rows of {k} memberships",
            input.display()
        )));
    }
    let mode = config.parse_mode()?;
    let problem =
        ClusteringProblem::new(loaded.dataset.clone(), loaded.groups.clone(), k, mode)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    let spec = FairnessSpec::new(
        Alpha::Uniform(round_input.alpha),
        round_input.beta.clone(),
        round_input.card_lower.unwrap_or(1),
        round_input.card_upper.unwrap_or(n),
    )
    .map_err(|e| CliError::Config(e.to_string()))?;

    let z_flat: Vec<f64> = round_input.z.iter().flatten().copied().collect();
    let report = round_fractional(
        &z_flat,
        &round_input.y,
        &problem,
        &round_input.centers,
        &spec,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;

    println!("rounded cost: {}", report.cost);
    println!("max violation: {}", report.max_violation);
    println!("violation bound: {}", report.bound.value);
    for (g, c, delta) in &report.violations {
        if *delta > 0.0 {
            println!("  {} in cluster {c}: δ = {delta}", loaded.groups.group_label(*g));
        }
    }
    if let Some(path) = out {
        let output = RoundOutput {
            assignment: report.assignment.clone(),
            cost: report.cost,
            violations: report.violations.clone(),
            max_violation: report.max_violation,
            bound_value: report.bound.value,
        };
        let text = serde_json::to_string_pretty(&output)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Runtime(format!("write {}: {e}", path.display())))?;
        println!("rounding written to {}", path.display());
    }
    Ok(())
}

/// Round-trip helper: reload a stored solution and recompute its cost and
/// metrics from the dataset. Used by `experiment` consumers and tests.
pub fn verify_solution_file(
    path: &Path,
    config: &ExperimentConfig,
) -> Result<(report::SolutionRecord, f64), CliError> {
    let record = load_solution(path)?;
    let loaded = data::load(&config.dataset, config.schema.as_ref())?;
    let mode = config.parse_mode()?;
    let problem = ClusteringProblem::new(
        loaded.dataset.clone(),
        loaded.groups.clone(),
        record.k,
        mode,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    let cost = minirel::metrics::clustering_cost(&record.assignment, &record.centers, &problem);
    Ok((record, cost))
}

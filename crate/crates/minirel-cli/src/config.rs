//! TOML experiment configuration: dataset source and schema, the run grid,
//! fairness targets, and resource limits.
//!
//! See the repository README for a documented example file. Unknown keys
//! are rejected so typos fail fast instead of silently running a different
//! experiment.

use std::path::{Path, PathBuf};
use std::time::Duration;

use minirel::driver::Strategy;
use minirel::model::{Alpha, BetaPolicy, Distance, GroupStructure, Mode};
use serde::Deserialize;

use crate::CliError;

/// Top-level configuration file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    /// Column roles; required for CSV datasets, ignored for builtins.
    #[serde(default)]
    pub schema: Option<SchemaConfig>,
    pub grid: GridConfig,
    #[serde(default)]
    pub fairness: FairnessConfig,
    #[serde(default)]
    pub limits: LimitsConfig,
    /// `"kmeans"` (default) or `"kmedians"`.
    #[serde(default)]
    pub mode: Option<String>,
    /// Distance for k-medians: `"euclidean"` (default), `"manhattan"`, or
    /// `"squared-euclidean"`.
    #[serde(default)]
    pub distance: Option<String>,
}

/// Where the points and group labels come from.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// `"csv"`, `"blobs"`, `"six-line"`, or `"theorem-gap"`.
    pub source: String,
    /// CSV file (source = "csv" only).
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Row label in reports; defaults to the file stem or builtin name.
    #[serde(default)]
    pub name: Option<String>,
    /// Blob generator parameters (source = "blobs" only).
    #[serde(default)]
    pub blobs: Option<usize>,
    #[serde(default)]
    pub per_blob: Option<usize>,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub n_groups: Option<usize>,
    #[serde(default)]
    pub skew: Option<f64>,
    #[serde(default)]
    pub separation: Option<f64>,
    #[serde(default)]
    pub spread: Option<f64>,
    /// Seed of the synthetic generator (independent of run seeds).
    #[serde(default)]
    pub synth_seed: Option<u64>,
    /// Keep this many rows, sampled without replacement before scaling.
    #[serde(default)]
    pub subsample: Option<usize>,
    /// Seed of the subsample draw, shared by every run of the grid.
    #[serde(default)]
    pub subsample_seed: Option<u64>,
}

/// Which CSV columns are features, which are sensitive, which are dropped.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaConfig {
    /// Model features; numeric columns are min-max scaled, non-numeric
    /// ones one-hot encoded.
    pub features: Vec<String>,
    /// Sensitive (categorical) columns; never enter the feature space.
    pub sensitive: Vec<String>,
    /// Ignored columns (e.g. a supervised target).
    #[serde(default)]
    pub drop: Vec<String>,
}

/// The run grid: every (strategy, K, α, seed) combination is executed.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub strategies: Vec<String>,
    pub k: Vec<usize>,
    pub alpha: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Also run the unconstrained Lloyd baseline over the seed list and
    /// record its best-cost and fairest-seed selections per (K, α).
    #[serde(default)]
    pub baselines: bool,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FairnessConfig {
    /// `"statistical-parity"` (default), `"equal-opportunity"`, or
    /// `"custom"` (requires `beta`).
    #[serde(default)]
    pub beta_policy: Option<String>,
    /// Per-group quotas for the custom policy, in global group order.
    #[serde(default)]
    pub beta: Option<Vec<usize>>,
    /// Force near-balanced clusters: `l = ⌈0.8·n/K⌉`.
    #[serde(default)]
    pub balanced: bool,
    #[serde(default)]
    pub card_lower: Option<usize>,
    #[serde(default)]
    pub card_upper: Option<usize>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    /// Wall-clock budget per run, in seconds.
    #[serde(default)]
    pub time_limit_secs: Option<f64>,
    /// Cap on fair-assignment/center alternations per run.
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub lloyd_max_iter: Option<usize>,
    /// Worker threads for the grid (defaults to the rayon global pool
    /// size; ignored in sequential builds).
    #[serde(default)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    /// Parses and validates a TOML configuration file.
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        match self.dataset.source.as_str() {
            "csv" => {
                if self.dataset.path.is_none() {
                    return Err(CliError::Config("csv dataset needs `path`".into()));
                }
                let schema = self
                    .schema
                    .as_ref()
                    .ok_or_else(|| CliError::Config("csv dataset needs a [schema]".into()))?;
                if schema.features.is_empty() {
                    return Err(CliError::Config("schema needs ≥ 1 feature column".into()));
                }
                if schema.sensitive.is_empty() {
                    return Err(CliError::Config("schema needs ≥ 1 sensitive column".into()));
                }
                for s in &schema.sensitive {
                    if schema.features.contains(s) {
                        return Err(CliError::Config(format!(
                            "sensitive column `{s}` must not be a feature"
                        )));
                    }
                }
            }
            "blobs" | "six-line" | "theorem-gap" => {}
            other => {
                return Err(CliError::Config(format!(
                    "unknown dataset source `{other}` (csv, blobs, six-line, theorem-gap)"
                )))
            }
        }
        if self.grid.strategies.is_empty()
            || self.grid.k.is_empty()
            || self.grid.alpha.is_empty()
            || self.grid.seeds.is_empty()
        {
            return Err(CliError::Config(
                "grid needs non-empty strategies, k, alpha, and seeds".into(),
            ));
        }
        for name in &self.grid.strategies {
            parse_strategy(name)?;
        }
        for &k in &self.grid.k {
            if k == 0 {
                return Err(CliError::Config("k must be ≥ 1".into()));
            }
        }
        for &a in &self.grid.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(CliError::Config(format!("alpha {a} outside (0, 1]")));
            }
        }
        self.parse_mode()?;
        // Policy name is checked here; custom quotas are length-checked
        // against the group structure at run time.
        parse_policy_name(self.fairness.beta_policy.as_deref(), self.fairness.beta.as_ref())?;
        Ok(())
    }

    pub fn parse_mode(&self) -> Result<Mode, CliError> {
        let distance = match self.distance.as_deref() {
            None | Some("euclidean") => Distance::Euclidean,
            Some("manhattan") => Distance::Manhattan,
            Some("squared-euclidean") => Distance::SquaredEuclidean,
            Some(other) => {
                return Err(CliError::Config(format!("unknown distance `{other}`")))
            }
        };
        match self.mode.as_deref() {
            None | Some("kmeans") => Ok(Mode::KMeans),
            Some("kmedians") => Ok(Mode::KMedians(distance)),
            Some(other) => Err(CliError::Config(format!("unknown mode `{other}`"))),
        }
    }

    /// Per-run wall-clock budget.
    pub fn time_limit(&self) -> Option<Duration> {
        self.limits.time_limit_secs.map(Duration::from_secs_f64)
    }
}

/// Maps a strategy name to the driver's strategy enum.
pub fn parse_strategy(name: &str) -> Result<Strategy, CliError> {
    match name {
        "full-ip" => Ok(Strategy::FullIp),
        "two-stage-ip" => Ok(Strategy::TwoStageIp),
        "two-stage-flow" => Ok(Strategy::TwoStageFlow),
        "prefix-flow" => Ok(Strategy::PrefixFlow),
        "prefix-heur-flow" => Ok(Strategy::PrefixHeurFlow),
        "fixed-center-adjust" => Ok(Strategy::FixedCenterAdjust),
        other => Err(CliError::Config(format!(
            "unknown strategy `{other}` (full-ip, two-stage-ip, two-stage-flow, \
             prefix-flow, prefix-heur-flow, fixed-center-adjust)"
        ))),
    }
}

/// The stable report name of a strategy.
pub fn strategy_name(strategy: Strategy) -> &'static str {
    match strategy {
        Strategy::FullIp => "full-ip",
        Strategy::TwoStageIp => "two-stage-ip",
        Strategy::TwoStageFlow => "two-stage-flow",
        Strategy::PrefixFlow => "prefix-flow",
        Strategy::PrefixHeurFlow => "prefix-heur-flow",
        Strategy::FixedCenterAdjust => "fixed-center-adjust",
    }
}

fn parse_policy_name(
    name: Option<&str>,
    custom: Option<&Vec<usize>>,
) -> Result<(), CliError> {
    match name {
        None | Some("statistical-parity") | Some("equal-opportunity") => Ok(()),
        Some("custom") => {
            if custom.is_none() {
                Err(CliError::Config("beta_policy = \"custom\" needs `beta`".into()))
            } else {
                Ok(())
            }
        }
        Some(other) => Err(CliError::Config(format!(
            "unknown beta policy `{other}` (statistical-parity, equal-opportunity, custom)"
        ))),
    }
}

/// Resolves the β policy for a given group structure.
pub fn resolve_policy(
    fairness: &FairnessConfig,
    groups: &GroupStructure,
) -> Result<BetaPolicy, CliError> {
    match fairness.beta_policy.as_deref() {
        None | Some("statistical-parity") => Ok(BetaPolicy::StatisticalParity),
        Some("equal-opportunity") => Ok(BetaPolicy::EqualOpportunity),
        Some("custom") => {
            let beta = fairness
                .beta
                .clone()
                .ok_or_else(|| CliError::Config("custom policy needs `beta`".into()))?;
            if beta.len() != groups.n_groups() {
                return Err(CliError::Config(format!(
                    "beta has {} entries for {} groups",
                    beta.len(),
                    groups.n_groups()
                )));
            }
            Ok(BetaPolicy::Custom(beta))
        }
        Some(other) => Err(CliError::Config(format!("unknown beta policy `{other}`"))),
    }
}

/// Cardinality window for one run: explicit bounds, or the balanced
/// lower bound `⌈0.8·n/K⌉`, or the trivial `[1, n]`.
pub fn cardinality_window(
    fairness: &FairnessConfig,
    n: usize,
    k: usize,
) -> Result<(usize, usize), CliError> {
    let lower = if fairness.balanced {
        if fairness.card_lower.is_some() {
            return Err(CliError::Config(
                "balanced mode and card_lower are mutually exclusive".into(),
            ));
        }
        // ⌈0.8·n/K⌉ without float round-off: ⌈4n / 5K⌉.
        (4 * n).div_ceil(5 * k)
    } else {
        fairness.card_lower.unwrap_or(1)
    };
    let upper = fairness.card_upper.unwrap_or(n);
    if lower < 1 || lower > upper || upper > n {
        return Err(CliError::Config(format!(
            "cardinality window [{lower}, {upper}] invalid for n = {n}"
        )));
    }
    Ok((lower, upper))
}

/// Builds the α wrapper (the grid sweeps scalars; per-group α is a library
/// feature reachable through custom code, not the config file).
pub fn alpha_of(value: f64) -> Alpha {
    Alpha::Uniform(value)
}

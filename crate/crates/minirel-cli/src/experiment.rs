//! Grid orchestration: builds the (strategy × K × α × seed) run list,
//! executes it on a bounded worker pool, and appends the unconstrained
//! Lloyd baseline selections.
//!
//! Every run owns its seeded RNG, so results do not depend on worker count
//! or scheduling; rows come back in grid order.

use std::time::Instant;

use minirel::driver::{minirel_run, DriverOptions, Strategy};
use minirel::error::Error;
use minirel::lloyd::lloyd_run;
use minirel::metrics::fairness_metrics;
use minirel::model::{compute_beta, ClusteringProblem, ClusteringSolution, FairnessSpec, Mode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::{
    alpha_of, cardinality_window, parse_strategy, resolve_policy, strategy_name,
    ExperimentConfig,
};
use crate::data::LoadedDataset;
use crate::report::{Report, RunRow, SolutionRecord, TimingRow};
use crate::CliError;

/// One planned run.
#[derive(Debug, Clone)]
pub struct RunDescriptor {
    pub run_id: String,
    pub strategy: Strategy,
    pub k: usize,
    pub alpha: f64,
    pub seed: u64,
}

/// Everything one run produced.
pub struct RunOutcome {
    pub row: RunRow,
    pub timing: TimingRow,
    pub solution: Option<SolutionRecord>,
}

/// Expands the grid in deterministic order: strategy, then K, α, seed.
pub fn build_grid(
    config: &ExperimentConfig,
    dataset_name: &str,
) -> Result<Vec<RunDescriptor>, CliError> {
    let mut grid = Vec::new();
    for name in &config.grid.strategies {
        let strategy = parse_strategy(name)?;
        for &k in &config.grid.k {
            for &alpha in &config.grid.alpha {
                for &seed in &config.grid.seeds {
                    grid.push(RunDescriptor {
                        run_id: run_id(dataset_name, name, k, alpha, seed),
                        strategy,
                        k,
                        alpha,
                        seed,
                    });
                }
            }
        }
    }
    Ok(grid)
}

fn run_id(dataset: &str, strategy: &str, k: usize, alpha: f64, seed: u64) -> String {
    format!("{dataset}-{strategy}-k{k}-a{alpha}-s{seed}")
}

/// Runs the whole grid (plus baselines when configured) into a report.
pub fn execute(config: &ExperimentConfig, loaded: &LoadedDataset) -> Result<Report, CliError> {
    let mode = config.parse_mode()?;
    let grid = build_grid(config, &loaded.name)?;

    let run_one = |descriptor: &RunDescriptor| -> RunOutcome {
        execute_single(config, loaded, mode, descriptor)
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<RunOutcome> = {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.limits.workers.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Runtime(format!("worker pool: {e}")))?;
        pool.install(|| grid.par_iter().map(run_one).collect())
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<RunOutcome> = grid.iter().map(run_one).collect();

    let mut report = Report::default();
    for outcome in outcomes {
        report.rows.push(outcome.row);
        report.timings.push(outcome.timing);
        if let Some(solution) = outcome.solution {
            report.solutions.push(solution);
        }
    }

    if config.grid.baselines {
        append_baselines(config, loaded, mode, &mut report)?;
    }
    Ok(report)
}

/// One fair run: build the problem and targets, drive the loop, convert the
/// result (or the failure) into report rows. Never panics on solver errors —
/// per-run failures land in the row.
pub fn execute_single(
    config: &ExperimentConfig,
    loaded: &LoadedDataset,
    mode: Mode,
    descriptor: &RunDescriptor,
) -> RunOutcome {
    let started = Instant::now();
    let base_row = RunRow {
        run_id: descriptor.run_id.clone(),
        dataset: loaded.name.clone(),
        strategy: strategy_name(descriptor.strategy).to_string(),
        k: descriptor.k,
        alpha: descriptor.alpha,
        seed: descriptor.seed,
        status: "error".into(),
        cost: None,
        max_deviation: None,
        additive_sum: None,
        additive_max: None,
        normalized_additive_sum: None,
        normalized_additive_max: None,
        iterations: None,
        error: String::new(),
    };
    let fail = |mut row: RunRow, status: &str, detail: String, wall: f64| RunOutcome {
        timing: TimingRow {
            run_id: row.run_id.clone(),
            assign_secs: 0.0,
            center_secs: 0.0,
            wall_secs: wall,
        },
        solution: None,
        row: {
            row.status = status.into();
            row.error = detail;
            row
        },
    };

    let setup = || -> Result<(ClusteringProblem, FairnessSpec), CliError> {
        let problem = ClusteringProblem::new(
            loaded.dataset.clone(),
            loaded.groups.clone(),
            descriptor.k,
            mode,
        )
        .map_err(|e| CliError::Runtime(e.to_string()))?;
        let policy = resolve_policy(&config.fairness, &loaded.groups)?;
        let alpha = alpha_of(descriptor.alpha);
        let beta = compute_beta(&policy, &alpha, descriptor.k, &loaded.groups);
        let (lower, upper) =
            cardinality_window(&config.fairness, loaded.dataset.n(), descriptor.k)?;
        let spec = FairnessSpec::new(alpha, beta, lower, upper)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        Ok((problem, spec))
    };
    let (problem, spec) = match setup() {
        Ok(pair) => pair,
        Err(e) => return fail(base_row, "error", e.to_string(), started.elapsed().as_secs_f64()),
    };

    let opts = DriverOptions {
        max_iter: config.limits.max_iter.unwrap_or(100),
        time_limit: config.time_limit(),
        lloyd_max_iter: config.limits.lloyd_max_iter.unwrap_or(300),
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(descriptor.seed);
    match minirel_run(&problem, &spec, descriptor.strategy, &mut rng, opts) {
        Ok((solution, trace)) => {
            let wall = started.elapsed().as_secs_f64();
            let metrics = fairness_metrics(&solution, &spec, &loaded.groups);
            let mut row = base_row;
            row.status = "ok".into();
            row.cost = Some(solution.cost);
            row.max_deviation = Some(metrics.max_deviation);
            row.additive_sum = Some(metrics.additive_sum);
            row.additive_max = Some(metrics.additive_max);
            row.normalized_additive_sum = Some(metrics.normalized_additive_sum);
            row.normalized_additive_max = Some(metrics.normalized_additive_max);
            row.iterations = Some(trace.iterations.len());
            let timing = TimingRow {
                run_id: row.run_id.clone(),
                assign_secs: trace.iterations.iter().map(|i| i.assign_secs).sum(),
                center_secs: trace.iterations.iter().map(|i| i.center_secs).sum(),
                wall_secs: wall,
            };
            let solution_record = SolutionRecord {
                run_id: row.run_id.clone(),
                dataset: row.dataset.clone(),
                strategy: row.strategy.clone(),
                k: row.k,
                alpha: row.alpha,
                seed: row.seed,
                cost: solution.cost,
                assignment: solution.assignment,
                centers: solution.centers,
                y: solution.y,
                max_deviation: metrics.max_deviation,
                additive_sum: metrics.additive_sum,
                additive_max: metrics.additive_max,
            };
            RunOutcome { row, timing, solution: Some(solution_record) }
        }
        Err(Error::Infeasible(cert)) => {
            let wall = started.elapsed().as_secs_f64();
            fail(base_row, "infeasible", cert.to_string(), wall)
        }
        Err(Error::TimeLimit { .. }) => {
            let wall = started.elapsed().as_secs_f64();
            fail(base_row, "time-limit", "wall-clock budget exhausted".into(), wall)
        }
        Err(other) => {
            let wall = started.elapsed().as_secs_f64();
            fail(base_row, "error", other.to_string(), wall)
        }
    }
}

/// Runs the unconstrained Lloyd baseline over the seed list for every
/// (K, α) cell and appends two selection rows per cell: the cheapest seed
/// and the fairest seed (ties: lower seed).
fn append_baselines(
    config: &ExperimentConfig,
    loaded: &LoadedDataset,
    mode: Mode,
    report: &mut Report,
) -> Result<(), CliError> {
    for &k in &config.grid.k {
        let problem = ClusteringProblem::new(
            loaded.dataset.clone(),
            loaded.groups.clone(),
            k,
            mode,
        )
        .map_err(|e| CliError::Runtime(e.to_string()))?;
        for &alpha_value in &config.grid.alpha {
            let policy = resolve_policy(&config.fairness, &loaded.groups)?;
            let alpha = alpha_of(alpha_value);
            let beta = compute_beta(&policy, &alpha, k, &loaded.groups);
            let (lower, upper) =
                cardinality_window(&config.fairness, loaded.dataset.n(), k)?;
            let spec = FairnessSpec::new(alpha, beta, lower, upper)
                .map_err(|e| CliError::Runtime(e.to_string()))?;

            let scan_started = Instant::now();
            let mut runs: Vec<(u64, ClusteringSolution)> = Vec::new();
            for &seed in &config.grid.seeds {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let solution = lloyd_run(
                    &problem,
                    &mut rng,
                    config.limits.lloyd_max_iter.unwrap_or(300),
                )
                .map_err(|e| CliError::Runtime(e.to_string()))?;
                runs.push((seed, solution));
            }
            let scan_secs = scan_started.elapsed().as_secs_f64();

            let best_cost = runs
                .iter()
                .min_by(|(sa, a), (sb, b)| {
                    a.cost.total_cmp(&b.cost).then(sa.cmp(sb))
                })
                .expect("seed list is non-empty");
            let fairest = runs
                .iter()
                .map(|(seed, solution)| {
                    let m = fairness_metrics(solution, &spec, &loaded.groups);
                    (*seed, solution, m)
                })
                .min_by(|(sa, a, ma), (sb, b, mb)| {
                    ma.max_deviation
                        .cmp(&mb.max_deviation)
                        .then(ma.additive_max.total_cmp(&mb.additive_max))
                        .then(a.cost.total_cmp(&b.cost))
                        .then(sa.cmp(sb))
                })
                .expect("seed list is non-empty");

            for (label, seed, solution) in [
                ("lloyd-best-cost", best_cost.0, &best_cost.1),
                ("lloyd-fairest", fairest.0, fairest.1),
            ] {
                let metrics = fairness_metrics(solution, &spec, &loaded.groups);
                let id = run_id(&loaded.name, label, k, alpha_value, seed);
                report.rows.push(RunRow {
                    run_id: id.clone(),
                    dataset: loaded.name.clone(),
                    strategy: label.to_string(),
                    k,
                    alpha: alpha_value,
                    seed,
                    status: "ok".into(),
                    cost: Some(solution.cost),
                    max_deviation: Some(metrics.max_deviation),
                    additive_sum: Some(metrics.additive_sum),
                    additive_max: Some(metrics.additive_max),
                    normalized_additive_sum: Some(metrics.normalized_additive_sum),
                    normalized_additive_max: Some(metrics.normalized_additive_max),
                    iterations: None,
                    error: String::new(),
                });
                report.timings.push(TimingRow {
                    run_id: id.clone(),
                    assign_secs: 0.0,
                    center_secs: 0.0,
                    wall_secs: scan_secs,
                });
                report.solutions.push(SolutionRecord {
                    run_id: id,
                    dataset: loaded.name.clone(),
                    strategy: label.to_string(),
                    k,
                    alpha: alpha_value,
                    seed,
                    cost: solution.cost,
                    assignment: solution.assignment.clone(),
                    centers: solution.centers.clone(),
                    y: solution.y.clone(),
                    max_deviation: metrics.max_deviation,
                    additive_sum: metrics.additive_sum,
                    additive_max: metrics.additive_max,
                });
            }
        }
    }
    Ok(())
}

//! The alternating minimization loop: fair assignment ↔ center updates.
//!
//! Starting from an (unfair) warm start, each iteration solves a fair
//! assignment problem at the current centers using one of several
//! strategies, recomputes centers from the new assignment, and stops at an
//! exact cost fixed point. The exact strategies keep the cost monotone by
//! construction; the heuristic strategies (two-stage and flow-rounded) may
//! propose an uphill step, in which case the previous solution is kept and
//! the run reports that it stopped for lack of improvement rather than by
//! convergence.
//!
//! Strategies:
//! * `FullIp` — exact fair assignment each iteration (both `z` and `y`
//!   integral).
//! * `TwoStageIp` — choose the designation pattern with a relaxed-`z`
//!   solve, then solve the fixed-pattern assignment exactly.
//! * `TwoStageFlow` — same pattern choice, but round the fixed-pattern LP
//!   relaxation through the min-cost-flow network.
//! * `PrefixFlow` — fix the pattern once (relaxed-`z` solve at the warm
//!   centers), then LP + flow rounding every iteration.
//! * `PrefixHeurFlow` — fix the pattern once with the polynomial myopic
//!   pre-fixing stage, then LP + flow rounding every iteration.
//! * `FixedCenterAdjust` — one exact fair assignment at the warm-start
//!   centers with no center updates: the "adjust a finished clustering"
//!   baseline, which can be arbitrarily costlier than moving centers.

use std::time::{Duration, Instant};

use rand::Rng;

use crate::error::Error;
use crate::flow::round_fractional;
use crate::fmra::{
    build_model, lp_relax_solve, solve_exact, AssignmentValues, FairAssignment, ModelVariant,
    SolveOptions,
};
use crate::lloyd::{greedy_assign, center_step, init_centers, lloyd_run, DEFAULT_MAX_ITER};
use crate::metrics::clustering_cost;
use crate::model::{ClusteringProblem, ClusteringSolution, FairnessSpec};
use crate::prefix::{myopic_costs, solve_prefix, MyopicCostKind};

/// How each iteration produces its fair assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    FullIp,
    TwoStageIp,
    TwoStageFlow,
    PrefixFlow,
    PrefixHeurFlow,
    FixedCenterAdjust,
}

impl Strategy {
    /// Whether every iterate satisfies the representation targets exactly
    /// (the flow-rounded strategies trade exactness for speed).
    pub fn exact_fairness(self) -> bool {
        matches!(self, Strategy::FullIp | Strategy::TwoStageIp | Strategy::FixedCenterAdjust)
    }
}

/// How the initial centers are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WarmStartMode {
    /// A full unconstrained Lloyd run (the default).
    #[default]
    Lloyd,
    /// k-means++ seeding only, no Lloyd iterations.
    KMeansPlusPlusOnly,
    /// Uniformly sampled distinct data points.
    Random,
}

/// Run limits and knobs.
#[derive(Debug, Clone, Copy)]
pub struct DriverOptions {
    /// Cap on fair-assignment/center alternations.
    pub max_iter: usize,
    /// Total wall-clock budget across all solves in the run.
    pub time_limit: Option<Duration>,
    pub warm_start: WarmStartMode,
    /// Iteration cap for the warm-start Lloyd run.
    pub lloyd_max_iter: usize,
    /// Myopic estimate used by `PrefixHeurFlow`.
    pub myopic_kind: MyopicCostKind,
}

impl Default for DriverOptions {
    fn default() -> Self {
        DriverOptions {
            max_iter: 100,
            time_limit: None,
            warm_start: WarmStartMode::Lloyd,
            lloyd_max_iter: DEFAULT_MAX_ITER,
            myopic_kind: MyopicCostKind::LocalCost,
        }
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationStatus {
    /// Two consecutive iterations produced exactly equal cost.
    ConvergedFixedPoint,
    /// A (heuristic) iteration proposed a costlier solution; the previous
    /// one was kept.
    StoppedNoImprovement,
    MaxIterations,
    TimeLimit,
}

/// One accepted alternation.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Cost after the center update of this iteration.
    pub cost: f64,
    pub assignment_changed: bool,
    pub assign_secs: f64,
    pub center_secs: f64,
}

/// The per-iteration history of a run.
#[derive(Debug, Clone)]
pub struct RunTrace {
    /// Cost of the unconstrained warm start.
    pub warm_cost: f64,
    pub iterations: Vec<IterationRecord>,
    pub status: TerminationStatus,
}

/// Produces initial centers (plus the matching greedy assignment and cost)
/// according to the warm-start mode. Deterministic given the RNG.
pub fn warm_start<R: Rng>(
    problem: &ClusteringProblem,
    rng: &mut R,
    mode: WarmStartMode,
) -> Result<ClusteringSolution, Error> {
    match mode {
        WarmStartMode::Lloyd => lloyd_run(problem, rng, DEFAULT_MAX_ITER),
        WarmStartMode::KMeansPlusPlusOnly => {
            let centers = init_centers(problem, rng)?;
            let assignment = greedy_assign(problem, &centers);
            let cost = clustering_cost(&assignment, &centers, problem);
            Ok(ClusteringSolution { assignment, centers, y: None, cost })
        }
        WarmStartMode::Random => {
            let n = problem.dataset.n();
            if problem.k > n {
                return Err(Error::invalid(format!(
                    "K = {} exceeds the {n} data points",
                    problem.k
                )));
            }
            let ids = rand::seq::index::sample(rng, n, problem.k);
            let centers: Vec<Vec<f64>> =
                ids.iter().map(|i| problem.dataset.point(i).to_vec()).collect();
            let assignment = greedy_assign(problem, &centers);
            let cost = clustering_cost(&assignment, &centers, problem);
            Ok(ClusteringSolution { assignment, centers, y: None, cost })
        }
    }
}

/// Remaining budget, or `None` when unlimited. `Some(ZERO)` once expired,
/// which downstream solvers treat as an immediately expiring deadline.
fn remaining(deadline: Option<Instant>) -> Option<Duration> {
    deadline.map(|d| d.saturating_duration_since(Instant::now()))
}

/// One strategy-specific fair assignment at fixed centers. Returns the
/// integral assignment, the designation pattern it satisfies, and whether
/// the solve ran out of time (after which the caller wraps up).
struct FairStep {
    assignment: Vec<usize>,
    y: Vec<Vec<bool>>,
    timed_out: bool,
}

/// Centers snapshot paired with the designation pattern chosen for them.
type CenterKeyedPattern = (Vec<Vec<f64>>, Vec<Vec<bool>>);

struct StrategyState {
    /// Pattern fixed before the loop (`Prefix*` strategies).
    fixed_y: Option<Vec<Vec<bool>>>,
    /// Pattern cache keyed by the exact centers it was chosen for.
    rap_cache: Option<CenterKeyedPattern>,
    /// Whether the one allowed re-prefix was already spent.
    reprefixed: bool,
    myopic_kind: MyopicCostKind,
}

/// Runs the alternating loop. Returns the final solution plus the trace.
///
/// Exact strategies either satisfy every representation target or surface
/// [`Error::Infeasible`] with a certificate; flow strategies satisfy the
/// targets up to the additive bound of the rounding network. On time
/// expiry the best solution so far is returned with
/// [`TerminationStatus::TimeLimit`] when one exists.
pub fn minirel_run<R: Rng>(
    problem: &ClusteringProblem,
    spec: &FairnessSpec,
    strategy: Strategy,
    rng: &mut R,
    opts: DriverOptions,
) -> Result<(ClusteringSolution, RunTrace), Error> {
    spec.validate_for(problem.k, &problem.groups)?;
    let deadline = opts.time_limit.map(|d| Instant::now() + d);

    let warm = warm_start(problem, rng, opts.warm_start)?;
    let mut state = StrategyState {
        fixed_y: None,
        rap_cache: None,
        reprefixed: false,
        myopic_kind: opts.myopic_kind,
    };

    // Prefix strategies commit to a pattern before the loop.
    match strategy {
        Strategy::PrefixFlow => {
            let rap = solve_rap(problem, &warm.centers, spec, &warm.assignment, deadline)?;
            state.fixed_y = Some(rap);
        }
        Strategy::PrefixHeurFlow => {
            state.fixed_y = Some(heuristic_prefix(
                problem,
                &warm.centers,
                &warm.assignment,
                spec,
                opts.myopic_kind,
            )?);
        }
        _ => {}
    }

    let mut centers = warm.centers.clone();
    let mut assignment = warm.assignment.clone();
    let mut current: Option<ClusteringSolution> = None;
    let mut prev_cost = f64::INFINITY;
    let mut trace = RunTrace {
        warm_cost: warm.cost,
        iterations: Vec::new(),
        status: TerminationStatus::MaxIterations,
    };

    let max_iter = if strategy == Strategy::FixedCenterAdjust { 1 } else { opts.max_iter };
    for iteration in 0..max_iter {
        let assign_started = Instant::now();
        let step = fair_step(problem, &centers, spec, strategy, &assignment, &mut state,
            deadline, &current)?;
        let assign_secs = assign_started.elapsed().as_secs_f64();

        let center_started = Instant::now();
        let new_centers = if strategy == Strategy::FixedCenterAdjust {
            centers.clone()
        } else {
            center_step(problem, &step.assignment)?
        };
        let center_secs = center_started.elapsed().as_secs_f64();
        let cost = clustering_cost(&step.assignment, &new_centers, problem);

        if cost > prev_cost {
            // A heuristic slipped uphill: keep the previous solution.
            trace.status = TerminationStatus::StoppedNoImprovement;
            break;
        }
        let assignment_changed = step.assignment != assignment;
        let converged = cost == prev_cost;
        assignment = step.assignment;
        centers = new_centers;
        prev_cost = cost;
        current = Some(ClusteringSolution {
            assignment: assignment.clone(),
            centers: centers.clone(),
            y: Some(step.y),
            cost,
        });
        trace.iterations.push(IterationRecord {
            iteration,
            cost,
            assignment_changed,
            assign_secs,
            center_secs,
        });
        if step.timed_out {
            trace.status = TerminationStatus::TimeLimit;
            break;
        }
        if converged || strategy == Strategy::FixedCenterAdjust {
            trace.status = TerminationStatus::ConvergedFixedPoint;
            break;
        }
    }

    match current {
        Some(solution) => Ok((solution, trace)),
        None => Err(Error::TimeLimit { incumbent: None }),
    }
}

/// Chooses a designation pattern by the relaxed-`z` exact solve.
fn solve_rap(
    problem: &ClusteringProblem,
    centers: &[Vec<f64>],
    spec: &FairnessSpec,
    warm_assignment: &[usize],
    deadline: Option<Instant>,
) -> Result<Vec<Vec<bool>>, Error> {
    let fair = solve_exact(
        problem,
        centers,
        spec,
        ModelVariant::Rap,
        None,
        SolveOptions { time_limit: remaining(deadline), warm_assignment: Some(warm_assignment) },
    )?;
    Ok(fair.y)
}

/// Chooses a designation pattern with the polynomial myopic stage.
fn heuristic_prefix(
    problem: &ClusteringProblem,
    centers: &[Vec<f64>],
    assignment: &[usize],
    spec: &FairnessSpec,
    kind: MyopicCostKind,
) -> Result<Vec<Vec<bool>>, Error> {
    let matrix = myopic_costs(problem, centers, assignment, spec, kind);
    Ok(solve_prefix(&matrix, spec, &problem.groups)?.y)
}

/// Solves the fixed-pattern LP relaxation and rounds it through the flow
/// network.
fn flow_assign(
    problem: &ClusteringProblem,
    centers: &[Vec<f64>],
    spec: &FairnessSpec,
    y: &[Vec<bool>],
) -> Result<Vec<usize>, Error> {
    let model = build_model(problem, centers, spec, ModelVariant::Apfrc, Some(y))?;
    let relax = lp_relax_solve(&model)?;
    let z = &relax.values[..problem.dataset.n() * problem.k];
    let report = round_fractional(z, y, problem, centers, spec)?;
    Ok(report.assignment)
}

#[allow(clippy::too_many_arguments)]
fn fair_step(
    problem: &ClusteringProblem,
    centers: &[Vec<f64>],
    spec: &FairnessSpec,
    strategy: Strategy,
    warm_assignment: &[usize],
    state: &mut StrategyState,
    deadline: Option<Instant>,
    fallback: &Option<ClusteringSolution>,
) -> Result<FairStep, Error> {
    let exact_opts = SolveOptions {
        time_limit: remaining(deadline),
        warm_assignment: Some(warm_assignment),
    };
    match strategy {
        Strategy::FullIp | Strategy::FixedCenterAdjust => {
            match solve_exact(problem, centers, spec, ModelVariant::Fmra, None, exact_opts) {
                Ok(fair) => Ok(integral_step(fair, false)),
                Err(Error::TimeLimit { incumbent: Some(inc) })
                    if inc.assignment().is_some() =>
                {
                    Ok(integral_step(*inc, true))
                }
                Err(Error::TimeLimit { .. }) if fallback.is_some() => {
                    let sol = fallback.as_ref().unwrap();
                    Ok(FairStep {
                        assignment: sol.assignment.clone(),
                        y: sol.y.clone().unwrap_or_default(),
                        timed_out: true,
                    })
                }
                Err(e) => Err(e),
            }
        }
        Strategy::TwoStageIp | Strategy::TwoStageFlow => {
            let y = match &state.rap_cache {
                Some((cached_centers, y)) if cached_centers == centers => y.clone(),
                _ => {
                    let y = solve_rap(problem, centers, spec, warm_assignment, deadline)?;
                    state.rap_cache = Some((centers.to_vec(), y.clone()));
                    y
                }
            };
            if strategy == Strategy::TwoStageIp {
                let fair = solve_exact(
                    problem,
                    centers,
                    spec,
                    ModelVariant::Apfrc,
                    Some(&y),
                    exact_opts,
                )?;
                Ok(integral_step(fair, false))
            } else {
                let assignment = flow_assign(problem, centers, spec, &y)?;
                Ok(FairStep { assignment, y, timed_out: false })
            }
        }
        Strategy::PrefixFlow | Strategy::PrefixHeurFlow => {
            let y = state.fixed_y.clone().expect("prefix pattern fixed before the loop");
            match flow_assign(problem, centers, spec, &y) {
                Ok(assignment) => Ok(FairStep { assignment, y, timed_out: false }),
                Err(Error::Infeasible(_) | Error::InvalidPrefix(_)) if !state.reprefixed => {
                    // The committed pattern became unservable; re-fix it
                    // once from the current state, then fail hard.
                    state.reprefixed = true;
                    let y = match strategy {
                        Strategy::PrefixFlow => {
                            solve_rap(problem, centers, spec, warm_assignment, deadline)?
                        }
                        _ => heuristic_prefix(
                            problem,
                            centers,
                            warm_assignment,
                            spec,
                            state.myopic_kind,
                        )?,
                    };
                    state.fixed_y = Some(y.clone());
                    let assignment = flow_assign(problem, centers, spec, &y)?;
                    Ok(FairStep { assignment, y, timed_out: false })
                }
                Err(e) => Err(e),
            }
        }
    }
}

fn integral_step(fair: FairAssignment, timed_out: bool) -> FairStep {
    let AssignmentValues::Integral(assignment) = fair.values else {
        unreachable!("exact variants return integral assignments");
    };
    FairStep { assignment, y: fair.y, timed_out }
}

//! Rounding a fractional fair assignment through a min-cost flow network.
//!
//! A fractional solution of the fixed-pattern assignment relaxation is
//! turned into an integral one without raising cost and with a provably
//! small loss of representation. Points become unit supplies; each cluster
//! is split into *combination cells* — one per joint choice, over the
//! cluster's represented features, of either a represented group or the
//! "remainder" (everything unrepresented) — and each cell demands the floor
//! of the fractional mass its matched points put on the cluster. A cluster
//! node absorbs the mass the cell floors lost, and a sink absorbs the
//! globally fractional remainder, reachable only from clusters whose total
//! mass is itself fractional. Unit capacities on the cell→cluster and
//! cluster→sink arcs cap every cluster's size at the ceiling of its
//! fractional mass.
//!
//! Because every arc cost is the true assignment cost `D(x_i, c_k)` (zero
//! off the point arcs), the integral min-cost flow never costs more than
//! the fractional solution it rounds, and group head counts in each cluster
//! stay within a computable additive bound of their targets.

mod mcmf;

pub use mcmf::solve_min_cost_flow;

use std::io::Write;

use crate::error::Error;
use crate::model::{ceil_recip, ClusteringProblem, FairnessSpec, GroupStructure};

/// One capacitated arc; costs must be non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowArc {
    pub from: usize,
    pub to: usize,
    pub capacity: i64,
    pub cost: f64,
}

/// An integral flow: per-arc values (input order) and total cost.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub arc_flow: Vec<i64>,
    pub cost: f64,
}

/// One combination cell of a cluster: a joint choice, per represented
/// feature, of a represented group or the remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinationCell {
    pub cluster: usize,
    /// `(feature, Some(group))` for a represented group of that feature,
    /// `(feature, None)` for its remainder; features ascending. Empty when
    /// the cluster represents nothing (single all-points cell).
    pub choice: Vec<(usize, Option<usize>)>,
    /// Matched point ids, ascending.
    pub members: Vec<usize>,
}

/// The rounding network: balances (supply positive), arcs, and the layout
/// needed to decode a flow back into an assignment.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    pub balance: Vec<i64>,
    pub arcs: Vec<FlowArc>,
    pub n_points: usize,
    /// Cells across kept clusters; cell `c` is node `n_points + c`.
    pub cells: Vec<CombinationCell>,
    /// Node id of each cluster's collector, `None` for omitted zero-mass
    /// clusters.
    pub cluster_node: Vec<Option<usize>>,
    pub sink: usize,
}

/// The additive representation-violation guarantee for one instance shape.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalBound {
    /// `min(⌈1/α⌉, max_f |groups of f|)`.
    pub gamma: usize,
    pub n_features: usize,
    /// The α the bound was evaluated at (the largest, under per-group α).
    pub alpha: f64,
    /// `γ^(|features|−1) + α·[γ > 2]`.
    pub value: f64,
}

/// What a rounding produced: the integral assignment, its cost, and the
/// per-designated-pair additive violations `max(0, α|C_k| − |C_k ∩ X_g|)`.
#[derive(Debug, Clone)]
pub struct RoundingReport {
    pub assignment: Vec<usize>,
    pub cost: f64,
    /// `(group, cluster, δ)` for every designated pair.
    pub violations: Vec<(usize, usize, f64)>,
    pub max_violation: f64,
    pub bound: TheoreticalBound,
}

/// Evaluates the additive-violation guarantee for a spec and group shape.
pub fn theoretical_bound(spec: &FairnessSpec, groups: &GroupStructure) -> TheoreticalBound {
    let alpha = spec.alpha.max_over(0..groups.n_groups());
    let widest = (0..groups.n_features())
        .map(|f| groups.groups_of_feature(f).len())
        .max()
        .unwrap_or(0);
    let gamma = ceil_recip(alpha).min(widest);
    let n_features = groups.n_features();
    let value = (gamma as f64).powi(n_features as i32 - 1)
        + if gamma > 2 { alpha } else { 0.0 };
    TheoreticalBound { gamma, n_features, alpha, value }
}

/// Enumerates the combination cells of one cluster from its designation
/// column. Features with no represented group do not split the cluster; for
/// each represented feature the options are its represented groups
/// (ascending) plus the remainder when they do not exhaust the feature.
/// The cells partition the full point set; `members` are filled in.
pub fn enumerate_cells(
    cluster: usize,
    represented: &[bool],
    groups: &GroupStructure,
) -> Vec<CombinationCell> {
    assert_eq!(represented.len(), groups.n_groups());
    // Options per represented feature, features ascending.
    let mut features: Vec<(usize, Vec<Option<usize>>)> = Vec::new();
    for f in 0..groups.n_features() {
        let range = groups.groups_of_feature(f);
        let mut options: Vec<Option<usize>> =
            range.clone().filter(|&g| represented[g]).map(Some).collect();
        if options.is_empty() {
            continue;
        }
        if options.len() < range.len() {
            options.push(None);
        }
        features.push((f, options));
    }

    if features.is_empty() {
        return vec![CombinationCell {
            cluster,
            choice: Vec::new(),
            members: (0..groups.n()).collect(),
        }];
    }

    // Mixed-radix enumeration, first feature most significant.
    let mut cells: Vec<CombinationCell> = Vec::new();
    let total: usize = features.iter().map(|(_, o)| o.len()).product();
    for idx in 0..total {
        let mut rem = idx;
        let mut choice = Vec::with_capacity(features.len());
        for (f, options) in features.iter().rev() {
            choice.push((*f, options[rem % options.len()]));
            rem /= options.len();
        }
        choice.reverse();
        cells.push(CombinationCell { cluster, choice, members: Vec::new() });
    }

    // Each point matches exactly one option per represented feature.
    for i in 0..groups.n() {
        let mut idx = 0usize;
        for (f, options) in &features {
            let g = groups.group_of_point(*f, i);
            let slot = if represented[g] {
                options.iter().position(|&o| o == Some(g)).unwrap()
            } else {
                options.len() - 1 // the remainder, present by construction
            };
            idx = idx * options.len() + slot;
        }
        cells[idx].members.push(i);
    }
    cells
}

/// Floor that forgives float dust: values within 1e-6 of an integer round
/// to it before flooring.
fn integral_floor(x: f64) -> i64 {
    let r = x.round();
    if (x - r).abs() < 1e-6 {
        r as i64
    } else {
        x.floor() as i64
    }
}

fn mass_is_integral(x: f64) -> bool {
    (x - x.round()).abs() < 1e-6
}

/// Builds the rounding network for a fractional assignment `z_lp`
/// (row-major `n × K`) under the designation pattern `y`. Zero-mass
/// clusters are omitted entirely; a cluster→sink arc exists only when the
/// cluster's total mass is fractional. The result is balanced by
/// construction (asserted).
pub fn build_network(
    z_lp: &[f64],
    y: &[Vec<bool>],
    problem: &ClusteringProblem,
    centers: &[Vec<f64>],
) -> Result<FlowNetwork, Error> {
    let n = problem.dataset.n();
    let k = problem.k;
    let groups = &problem.groups;
    if z_lp.len() != n * k {
        return Err(Error::invalid(format!(
            "fractional assignment has {} entries, expected {n}×{k}",
            z_lp.len()
        )));
    }
    if y.len() != groups.n_groups() || y.iter().any(|row| row.len() != k) {
        return Err(Error::invalid("designation pattern must be groups × K"));
    }
    if centers.len() != k {
        return Err(Error::invalid(format!("expected {k} centers, got {}", centers.len())));
    }

    let mass: Vec<f64> = (0..k).map(|c| (0..n).map(|i| z_lp[i * k + c]).sum()).collect();
    let kept: Vec<usize> = (0..k).filter(|&c| mass[c] >= 1e-6).collect();
    if kept.is_empty() {
        return Err(Error::invalid("every cluster has zero fractional mass"));
    }

    let mut cells: Vec<CombinationCell> = Vec::new();
    let mut cell_demand: Vec<i64> = Vec::new();
    // Per kept cluster: (cell-node of each point, cluster floor, first cell index).
    let mut cluster_info: Vec<(Vec<usize>, i64, usize)> = Vec::new();
    for &c in &kept {
        let represented: Vec<bool> = (0..groups.n_groups()).map(|g| y[g][c]).collect();
        let first = cells.len();
        let cluster_cells = enumerate_cells(c, &represented, groups);
        let mut point_cell = vec![usize::MAX; n];
        let mut floor_sum = 0i64;
        for (offset, cell) in cluster_cells.iter().enumerate() {
            let cell_mass: f64 = cell.members.iter().map(|&i| z_lp[i * k + c]).sum();
            let d = integral_floor(cell_mass);
            debug_assert!(d >= 0);
            floor_sum += d;
            cell_demand.push(d);
            for &i in &cell.members {
                point_cell[i] = first + offset;
            }
        }
        let cluster_floor = integral_floor(mass[c]);
        if cluster_floor < floor_sum {
            return Err(Error::NumericalFailure(format!(
                "rounding network imbalance at cluster {c}: cell floors {floor_sum} exceed cluster floor {cluster_floor}"
            )));
        }
        cells.extend(cluster_cells);
        cluster_info.push((point_cell, cluster_floor, first));
    }

    let n_cells = cells.len();
    let mut cluster_node = vec![None; k];
    let mut balance = vec![0i64; n + n_cells];
    for b in balance.iter_mut().take(n) {
        *b = 1;
    }
    for (c, &d) in cell_demand.iter().enumerate() {
        balance[n + c] = -d;
    }
    for (pos, &c) in kept.iter().enumerate() {
        let (_, cluster_floor, first) = &cluster_info[pos];
        let own: i64 = cluster_floor
            - (*first..cells.len())
                .take_while(|&ci| cells[ci].cluster == c)
                .map(|ci| cell_demand[ci])
                .sum::<i64>();
        cluster_node[c] = Some(balance.len());
        balance.push(-own);
    }
    let sink = balance.len();
    let total_floor: i64 = cluster_info.iter().map(|(_, f, _)| *f).sum();
    balance.push(-(n as i64 - total_floor));

    let mut arcs = Vec::with_capacity(n * kept.len() + n_cells + kept.len());
    for i in 0..n {
        for (pos, &c) in kept.iter().enumerate() {
            let cell_node = n + cluster_info[pos].0[i];
            arcs.push(FlowArc {
                from: i,
                to: cell_node,
                capacity: 1,
                cost: problem.point_cost(i, &centers[c]),
            });
        }
    }
    for (ci, cell) in cells.iter().enumerate() {
        arcs.push(FlowArc {
            from: n + ci,
            to: cluster_node[cell.cluster].unwrap(),
            capacity: 1,
            cost: 0.0,
        });
    }
    for &c in &kept {
        if !mass_is_integral(mass[c]) {
            arcs.push(FlowArc {
                from: cluster_node[c].unwrap(),
                to: sink,
                capacity: 1,
                cost: 0.0,
            });
        }
    }

    let network = FlowNetwork { balance, arcs, n_points: n, cells, cluster_node, sink };
    if network.balance.iter().sum::<i64>() != 0 {
        return Err(Error::NumericalFailure(
            "rounding network does not balance — construction bug".into(),
        ));
    }
    Ok(network)
}

/// Solves the network to an integral min-cost flow.
pub fn min_cost_flow(network: &FlowNetwork) -> Result<FlowResult, Error> {
    solve_min_cost_flow(&network.balance, &network.arcs)
}

/// Decodes an integral flow into a total assignment and measures, for every
/// designated pair, the additive shortfall `max(0, α|C_k| − |C_k ∩ X_g|)`
/// against the instance's theoretical bound.
pub fn extract_assignment(
    network: &FlowNetwork,
    flow: &FlowResult,
    problem: &ClusteringProblem,
    spec: &FairnessSpec,
    y: &[Vec<bool>],
) -> Result<RoundingReport, Error> {
    let n = network.n_points;
    let mut assignment = vec![usize::MAX; n];
    for (arc, &f) in network.arcs.iter().zip(&flow.arc_flow) {
        if arc.from < n && f > 0 {
            if assignment[arc.from] != usize::MAX {
                return Err(Error::NumericalFailure(format!(
                    "point {} sends more than one unit of flow",
                    arc.from
                )));
            }
            assignment[arc.from] = network.cells[arc.to - n].cluster;
        }
    }
    if let Some(i) = assignment.iter().position(|&c| c == usize::MAX) {
        return Err(Error::NumericalFailure(format!("point {i} sends no flow")));
    }

    let groups = &problem.groups;
    let k = problem.k;
    let mut sizes = vec![0usize; k];
    for &c in &assignment {
        sizes[c] += 1;
    }
    let mut violations = Vec::new();
    let mut max_violation = 0.0f64;
    for (g, row) in y.iter().enumerate() {
        let alpha = spec.alpha.for_group(g);
        for (c, &designated) in row.iter().enumerate() {
            if !designated {
                continue;
            }
            let count = groups.members(g).iter().filter(|&&i| assignment[i] == c).count();
            let mut delta = (alpha * sizes[c] as f64 - count as f64).max(0.0);
            if delta < 1e-9 {
                delta = 0.0;
            }
            max_violation = max_violation.max(delta);
            violations.push((g, c, delta));
        }
    }
    Ok(RoundingReport {
        assignment,
        cost: flow.cost,
        violations,
        max_violation,
        bound: theoretical_bound(spec, groups),
    })
}

/// Builds, solves, and decodes in one step.
pub fn round_fractional(
    z_lp: &[f64],
    y: &[Vec<bool>],
    problem: &ClusteringProblem,
    centers: &[Vec<f64>],
    spec: &FairnessSpec,
) -> Result<RoundingReport, Error> {
    let network = build_network(z_lp, y, problem, centers)?;
    let flow = min_cost_flow(&network)?;
    extract_assignment(&network, &flow, problem, spec, y)
}

impl FlowNetwork {
    /// Writes the network in DIMACS min-cost-flow text (1-based node ids):
    /// a `p min` header, one `n` line per non-zero balance, and one `a`
    /// line per arc with zero lower bound.
    pub fn write_dimacs<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "c rounding network: {} points, {} cells", self.n_points, self.cells.len())?;
        writeln!(w, "p min {} {}", self.balance.len(), self.arcs.len())?;
        for (i, &b) in self.balance.iter().enumerate() {
            if b != 0 {
                writeln!(w, "n {} {}", i + 1, b)?;
            }
        }
        for a in &self.arcs {
            writeln!(w, "a {} {} 0 {} {}", a.from + 1, a.to + 1, a.capacity, a.cost)?;
        }
        Ok(())
    }
}

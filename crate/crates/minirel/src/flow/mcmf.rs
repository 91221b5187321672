//! Min-cost flow by successive shortest paths with node potentials.
//!
//! The network is given as node balances (supply positive, demand negative)
//! plus capacitated arcs with non-negative real costs. A super source and
//! super sink convert it to a single-commodity max-flow problem; each
//! augmentation follows a Dijkstra shortest path under reduced costs, so
//! every intermediate flow is optimal for its value and the final integral
//! flow is a true min-cost solution.
//!
//! Deterministic: the Dijkstra heap orders by `(distance, node)` and arcs
//! are relaxed in insertion order, so equal-cost networks always produce
//! the identical flow.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::Error;

use super::{FlowArc, FlowResult};

#[derive(Clone)]
struct ResArc {
    to: usize,
    rev: usize,
    cap: i64,
    cost: f64,
}

/// Heap key ordered by `(distance, node)`.
#[derive(PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}
impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Solves min-cost flow over explicit balances and arcs. Returns the flow
/// on every input arc (in input order) and the total cost. Errors when the
/// data is malformed or the demands cannot be met.
pub fn solve_min_cost_flow(balance: &[i64], arcs: &[FlowArc]) -> Result<FlowResult, Error> {
    let n = balance.len();
    if balance.iter().sum::<i64>() != 0 {
        return Err(Error::invalid("flow network balances do not sum to zero"));
    }
    for (idx, a) in arcs.iter().enumerate() {
        if a.from >= n || a.to >= n {
            return Err(Error::invalid(format!("arc {idx} references a missing node")));
        }
        if a.capacity < 0 || !a.cost.is_finite() || a.cost < 0.0 {
            return Err(Error::invalid(format!(
                "arc {idx} needs capacity ≥ 0 and finite cost ≥ 0"
            )));
        }
    }

    let source = n;
    let sink = n + 1;
    let mut graph: Vec<Vec<ResArc>> = vec![Vec::new(); n + 2];
    let mut handles = Vec::with_capacity(arcs.len());
    let add = |graph: &mut Vec<Vec<ResArc>>, u: usize, v: usize, cap: i64, cost: f64| {
        let (iu, iv) = (graph[u].len(), graph[v].len());
        graph[u].push(ResArc { to: v, rev: iv, cap, cost });
        graph[v].push(ResArc { to: u, rev: iu, cap: 0, cost: -cost });
        (u, iu)
    };
    for a in arcs {
        handles.push(add(&mut graph, a.from, a.to, a.capacity, a.cost));
    }
    let mut total: i64 = 0;
    for (i, &b) in balance.iter().enumerate() {
        if b > 0 {
            add(&mut graph, source, i, b, 0.0);
            total += b;
        } else if b < 0 {
            add(&mut graph, i, sink, -b, 0.0);
        }
    }

    let mut potential = vec![0.0f64; n + 2];
    let mut pushed: i64 = 0;
    while pushed < total {
        // Dijkstra under reduced costs (non-negative by induction).
        let mut dist = vec![f64::INFINITY; n + 2];
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n + 2];
        dist[source] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(Key(0.0, source)));
        while let Some(Reverse(Key(d, u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for (idx, a) in graph[u].iter().enumerate() {
                if a.cap <= 0 {
                    continue;
                }
                // Accumulated rounding in the potentials can leave a reduced
                // cost a few ulps below zero; clamping keeps the edge weights
                // non-negative so the parent pointers stay acyclic.
                let nd = d + (a.cost + potential[u] - potential[a.to]).max(0.0);
                if nd < dist[a.to] {
                    dist[a.to] = nd;
                    parent[a.to] = Some((u, idx));
                    heap.push(Reverse(Key(nd, a.to)));
                }
            }
        }
        if !dist[sink].is_finite() {
            return Err(Error::NumericalFailure(format!(
                "flow network infeasible: {} of {} supply units cannot reach a demand",
                total - pushed,
                total
            )));
        }
        // Capped potential update keeps reduced costs non-negative even for
        // nodes beyond the sink's distance.
        let cap_at = dist[sink];
        for v in 0..n + 2 {
            potential[v] += if dist[v].is_finite() { dist[v].min(cap_at) } else { cap_at };
        }
        // Bottleneck along the path, then augment.
        let mut bottleneck = total - pushed;
        let mut v = sink;
        while let Some((u, idx)) = parent[v] {
            bottleneck = bottleneck.min(graph[u][idx].cap);
            v = u;
        }
        let mut v = sink;
        while let Some((u, idx)) = parent[v] {
            graph[u][idx].cap -= bottleneck;
            let rev = graph[u][idx].rev;
            graph[v][rev].cap += bottleneck;
            v = u;
        }
        pushed += bottleneck;
    }

    let mut arc_flow = Vec::with_capacity(arcs.len());
    let mut cost = 0.0;
    for (a, &(u, idx)) in arcs.iter().zip(&handles) {
        let f = a.capacity - graph[u][idx].cap;
        arc_flow.push(f);
        cost += f as f64 * a.cost;
    }
    Ok(FlowResult { arc_flow, cost })
}

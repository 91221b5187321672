//! Randomized properties: vertex sparsity of the fixed-pattern relaxation,
//! integrality of the pre-fixing LP, and the rounding envelopes.

mod common;

use minirel::flow::{round_fractional, theoretical_bound};
use minirel::fmra::{build_model, lp_relax_solve, solve_exact, ModelVariant, SolveOptions};
use minirel::lloyd::greedy_assign;
use minirel::lp::solve_lp;
use minirel::model::{
    Alpha, ClusteringProblem, Dataset, FairnessSpec, GroupStructure, Mode,
};
use minirel::prefix::{build_prefix_lp, myopic_costs, MyopicCostKind};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Instance {
    problem: ClusteringProblem,
    spec: FairnessSpec,
    centers: Vec<Vec<f64>>,
}

/// Seed-derived random instance: 8–16 points, K ∈ {2, 3}, one or two
/// sensitive features with 2–3 groups each, α ∈ {0.3, 0.4, 0.51}.
fn instance_from_seed(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(8..=16);
    let k = rng.gen_range(2..=3);
    let points: Vec<Vec<f64>> =
        (0..n).map(|_| vec![rng.gen::<f64>() * 3.0, rng.gen()]).collect();
    let n_features = rng.gen_range(1..=2);
    let mut features = Vec::new();
    for f in 0..n_features {
        let gpf = rng.gen_range(2..=3);
        let labels: Vec<String> = (0..n)
            .map(|i| format!("v{}", if i < gpf { i } else { rng.gen_range(0..gpf) }))
            .collect();
        features.push((format!("f{f}"), labels));
    }
    let groups = GroupStructure::from_labels(features).unwrap();
    let alpha = Alpha::Uniform([0.3, 0.4, 0.51][rng.gen_range(0..3)]);
    let beta: Vec<usize> = (0..groups.n_groups()).map(|_| rng.gen_range(0..=1)).collect();
    let problem =
        ClusteringProblem::new(Dataset::new(points).unwrap(), groups, k, Mode::KMeans).unwrap();
    let spec = FairnessSpec::new(alpha, beta, 1, n).unwrap();
    let centers: Vec<Vec<f64>> =
        (0..k).map(|_| vec![rng.gen::<f64>() * 3.0, rng.gen()]).collect();
    Instance { problem, spec, centers }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    /// At a vertex of the fixed-pattern relaxation, the number of points
    /// with split cluster membership never exceeds K + Σ_g β_g.
    #[test]
    fn fixed_pattern_relaxations_have_sparse_fractional_support(seed in any::<u64>()) {
        let inst = instance_from_seed(seed);
        let Instance { problem, spec, centers } = &inst;
        let Ok(rap) = solve_exact(
            problem, centers, spec, ModelVariant::Rap, None, SolveOptions::default(),
        ) else {
            return Ok(()); // targets infeasible for this draw
        };
        let model = build_model(problem, centers, spec, ModelVariant::Apfrc, Some(&rap.y))
            .unwrap();
        let n = problem.dataset.n();
        let k = problem.k;
        let var_groups: Vec<Vec<usize>> =
            (0..n).map(|i| (i * k..(i + 1) * k).collect()).collect();
        let support = minirel::lp::fractional_support_count(&model.mbp.lp, &var_groups).unwrap();
        let budget: usize = k + spec.beta.iter().sum::<usize>();
        prop_assert!(
            support <= budget,
            "support {} above K + Σβ = {}", support, budget
        );
    }

    /// The pre-fixing LP always lands on an integral vertex (its constraint
    /// matrix is an interval matrix in disguise).
    #[test]
    fn pre_fixing_lps_solve_integrally(seed in any::<u64>()) {
        let inst = instance_from_seed(seed);
        let Instance { problem, spec, centers } = &inst;
        let assignment = greedy_assign(problem, centers);
        let kind = [
            MyopicCostKind::LocalCost,
            MyopicCostKind::Proportion,
            MyopicCostKind::WeightedProportion,
        ][(seed % 3) as usize];
        let matrix = myopic_costs(problem, centers, &assignment, spec, kind);
        let (lp, _pairs) = build_prefix_lp(&matrix, spec, &problem.groups);
        let sol = solve_lp(&lp).unwrap();
        if sol.status != minirel::lp::LpStatus::Optimal {
            return Ok(()); // quota infeasible under the defined pairs
        }
        for (j, v) in sol.values.iter().enumerate() {
            prop_assert!(
                (v - v.round()).abs() <= 1e-9,
                "column {} fractional at {}", j, v
            );
        }
    }

    /// Flow-rounded assignments stay inside the relaxation's cost and the
    /// per-cluster floor/ceil size window, and miss each designated target
    /// by at most the modeled additive bound.
    #[test]
    fn roundings_stay_within_their_envelopes(seed in any::<u64>()) {
        let inst = instance_from_seed(seed);
        let Instance { problem, spec, centers } = &inst;
        let Ok(rap) = solve_exact(
            problem, centers, spec, ModelVariant::Rap, None, SolveOptions::default(),
        ) else {
            return Ok(());
        };
        let model = build_model(problem, centers, spec, ModelVariant::Apfrc, Some(&rap.y))
            .unwrap();
        let Ok(relax) = lp_relax_solve(&model) else { return Ok(()) };
        let n = problem.dataset.n();
        let k = problem.k;
        let z_lp = relax.values[..n * k].to_vec();
        let report = round_fractional(&z_lp, &rap.y, problem, centers, spec).unwrap();

        prop_assert!(report.cost <= relax.objective + 1e-6);

        let mut sizes = vec![0usize; k];
        for &c in &report.assignment {
            sizes[c] += 1;
        }
        for c in 0..k {
            let mass: f64 = (0..n).map(|i| z_lp[i * k + c]).sum();
            let s = sizes[c] as f64;
            prop_assert!(
                (s - mass.floor()).abs() < 1e-9
                    || (s - mass.ceil()).abs() < 1e-9
                    || (mass - s).abs() < 1e-6,
                "cluster {} size {} outside the window around {}", c, s, mass
            );
        }

        let bound = theoretical_bound(spec, &problem.groups);
        for (g, row) in rap.y.iter().enumerate() {
            let alpha = spec.alpha.for_group(g);
            for (c, &on) in row.iter().enumerate() {
                if !on {
                    continue;
                }
                let count = problem
                    .groups
                    .members(g)
                    .iter()
                    .filter(|&&i| report.assignment[i] == c)
                    .count() as i64;
                let need = (alpha * sizes[c] as f64 - 1e-9).ceil() as i64;
                prop_assert!(
                    ((need - count).max(0) as f64) <= bound.value,
                    "group {} cluster {}: shortfall above {}", g, c, bound.value
                );
            }
        }
    }
}

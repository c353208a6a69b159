mod common;

use common::{lattice_measure, real_measure};
use otlab::measures::{CostSpec, Norm, PlanEntry, TransportPlan};
use otlab::optimality::{apply_cycle, cycle_gain};
use otlab::{check_cyclical_monotonicity, check_quadratic_monotone_support, is_graph, solve_kantorovich};
use proptest::prelude::*;

/// Swaps the targets of two support cells with distinct sources and targets,
/// moving half of the smaller mass.
fn inject_swap(plan: &TransportPlan<f64>, a: usize, b: usize) -> Option<TransportPlan<f64>> {
    let e = plan.entries();
    let (x, y) = (e[a], e[b]);
    if x.source == y.source || x.target == y.target {
        return None;
    }
    let d = 0.5 * x.mass.min(y.mass);
    let mut cells = e.to_vec();
    cells[a].mass -= d;
    cells[b].mass -= d;
    for (s, t) in [(x.source, y.target), (y.source, x.target)] {
        match cells.iter_mut().find(|c| c.source == s && c.target == t) {
            Some(c) => c.mass += d,
            None => cells.push(PlanEntry { source: s, target: t, mass: d }),
        }
    }
    TransportPlan::new(plan.source(), plan.target(), cells).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn optimal_plans_are_cyclically_monotone(
        mu in real_measure(10, 2),
        nu in real_measure(10, 2),
        pow in prop_oneof![Just(1.0), Just(1.5), Just(2.0)],
    ) {
        let spec = CostSpec::new(Norm::Euclidean, pow).unwrap();
        let plan = solve_kantorovich(&mu, &nu, &spec).unwrap().plan;
        prop_assume!(plan.len() <= 20);
        let report = check_cyclical_monotonicity(&plan, &spec, 4).unwrap();
        prop_assert!(report.ok, "{:?}", report);
    }

    #[test]
    fn strictly_worse_swaps_are_detected(
        mu in real_measure(8, 2),
        nu in real_measure(8, 2),
        a in 0usize..32,
        b in 0usize..32,
    ) {
        let spec = CostSpec::squared_euclidean();
        let plan = solve_kantorovich(&mu, &nu, &spec).unwrap().plan;
        let (a, b) = (a % plan.len(), b % plan.len());
        let Some(bad) = inject_swap(&plan, a, b) else { return Ok(()) };
        prop_assume!(bad.cost(&spec) > plan.cost(&spec) + 1e-8);
        let report = check_cyclical_monotonicity(&bad, &spec, 4).unwrap();
        prop_assert!(!report.ok);
        let cycle = report.violation.clone().unwrap();
        let gain = report.gain.unwrap();
        prop_assert!(gain > 0.0);
        prop_assert!((cycle_gain(&bad, &spec, &cycle) - gain).abs() < 1e-12);
        let repaired = apply_cycle(&bad, &cycle).unwrap();
        prop_assert!(repaired.cost(&spec) < bad.cost(&spec));
        prop_assert!(repaired.marginal_error() <= 1e-10);
    }

    #[test]
    fn quadratic_optimal_support_is_monotone(mu in real_measure(9, 3), nu in real_measure(9, 3)) {
        let plan = solve_kantorovich(&mu, &nu, &CostSpec::squared_euclidean()).unwrap().plan;
        prop_assert!(check_quadratic_monotone_support(&plan));
    }

    #[test]
    fn equal_uniform_lattice_plans_are_graphs(mu in lattice_measure(8, 2, 1.0)) {
        // identity coupling of a measure with itself is a graph
        let plan = solve_kantorovich(&mu, &mu, &CostSpec::squared_euclidean()).unwrap().plan;
        let (graph, split) = is_graph(&plan);
        prop_assert!(graph);
        prop_assert_eq!(split, 0.0);
    }
}

#[test]
fn crossing_pairs_violate_monotonicity() {
    use otlab::measures::DiscreteMeasure;
    let mu = DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
    let nu = DiscreteMeasure::uniform(vec![vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let crossing = TransportPlan::new(
        &mu,
        &nu,
        [
            PlanEntry { source: 0, target: 1, mass: 0.5 },
            PlanEntry { source: 1, target: 0, mass: 0.5 },
        ],
    )
    .unwrap();
    let spec: CostSpec<f64> = CostSpec::squared_euclidean();
    assert!(!check_quadratic_monotone_support(&crossing));
    let r = check_cyclical_monotonicity(&crossing, &spec, 2).unwrap();
    assert!(!r.ok);
    assert!((r.gain.unwrap() - 2.0).abs() < 1e-12);
}

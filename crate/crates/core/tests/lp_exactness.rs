mod common;

use common::{lattice_measure, real_measure};
use otlab::kantorovich::DUAL_FEASIBILITY_TOL;
use otlab::measures::{make_measure, CostSpec, DiscreteMeasure, Norm};
use otlab::{brute_force_optimum, duality_gap, solve_kantorovich};
use proptest::prelude::*;

fn norm_strategy() -> impl Strategy<Value = Norm<f64>> {
    prop_oneof![Just(Norm::Euclidean), Just(Norm::L1), Just(Norm::Linf)]
}

fn exponent_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(1.5), Just(2.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simplex_matches_enumeration(
        mu in real_measure(4, 2),
        nu in real_measure(4, 2),
        norm in norm_strategy(),
        pow in exponent_strategy(),
    ) {
        let spec = CostSpec::new(norm, pow).unwrap();
        let report = solve_kantorovich(&mu, &nu, &spec).unwrap();
        let exact = brute_force_optimum(&mu, &nu, &spec).unwrap();
        prop_assert!((report.primal_value - exact).abs() <= 1e-9, "{} vs {}", report.primal_value, exact);
    }

    #[test]
    fn duality_certificate_holds(
        mu in lattice_measure(12, 2, 3.0),
        nu in lattice_measure(12, 2, 3.0),
        norm in norm_strategy(),
        pow in exponent_strategy(),
    ) {
        let spec = CostSpec::new(norm, pow).unwrap();
        let report = solve_kantorovich(&mu, &nu, &spec).unwrap();
        prop_assert!(report.potentials.worst_violation(&mu, &nu, &spec, DUAL_FEASIBILITY_TOL).is_none());
        let gap = duality_gap(&report, &spec).unwrap();
        prop_assert!(gap <= 1e-9 * (1.0 + report.primal_value.abs()));
        prop_assert!(report.plan.marginal_error() <= 1e-10);
        prop_assert!(report.plan.len() < mu.len() + nu.len());
    }

    #[test]
    fn lattice_instances_match_enumeration(
        mu in lattice_measure(4, 2, 2.0),
        nu in lattice_measure(4, 2, 2.0),
        norm in norm_strategy(),
    ) {
        let spec = CostSpec::distance(norm);
        let report = solve_kantorovich(&mu, &nu, &spec).unwrap();
        let exact = brute_force_optimum(&mu, &nu, &spec).unwrap();
        prop_assert!((report.primal_value - exact).abs() <= 1e-9);
    }

    #[test]
    fn value_is_symmetric_for_symmetric_costs(
        mu in real_measure(8, 3),
        nu in real_measure(8, 3),
    ) {
        let spec = CostSpec::squared_euclidean();
        let a = solve_kantorovich(&mu, &nu, &spec).unwrap().primal_value;
        let b = solve_kantorovich(&nu, &mu, &spec).unwrap().primal_value;
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }
}

#[test]
fn squared_distance_between_translates() {
    // W2^2 between a measure and its translate by v is |v|^2
    let pts = vec![vec![0.0, 0.0], vec![1.0, 0.3], vec![-0.4, 2.0], vec![0.7, -1.1]];
    let mu = make_measure(pts.clone(), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let shifted: Vec<Vec<f64>> = pts.iter().map(|p| vec![p[0] + 0.3, p[1] - 0.4]).collect();
    let nu = make_measure(shifted, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let r = solve_kantorovich(&mu, &nu, &CostSpec::squared_euclidean()).unwrap();
    assert!((r.primal_value - 0.25).abs() < 1e-12);
}

#[test]
fn zero_weight_atoms_are_harmless() {
    let mu = make_measure(vec![vec![0.0], vec![5.0], vec![1.0]], vec![1.0f64, 0.0, 1.0]).unwrap();
    let nu = DiscreteMeasure::uniform(vec![vec![0.5], vec![3.0]]).unwrap();
    let spec = CostSpec::distance(Norm::Euclidean);
    let r = solve_kantorovich(&mu, &nu, &spec).unwrap();
    assert!((r.primal_value - brute_force_optimum(&mu, &nu, &spec).unwrap()).abs() < 1e-12);
    assert!(duality_gap(&r, &spec).unwrap() < 1e-12);
}

#[test]
fn single_precision_instance() {
    let mu = otlab::MeasureF32::uniform(vec![vec![0.0f32], vec![1.0], vec![2.0]]).unwrap();
    let nu = otlab::MeasureF32::uniform(vec![vec![0.5f32], vec![1.5], vec![2.5]]).unwrap();
    let r = solve_kantorovich(&mu, &nu, &CostSpec::squared_euclidean()).unwrap();
    assert!((r.primal_value - 0.25).abs() < 1e-6);
}

//! Exact discrete Kantorovich solver with dual certificates.

mod brute_force;
pub(crate) mod network_simplex;

use serde::{Deserialize, Serialize};

pub use brute_force::brute_force_optimum;

use crate::error::{OtError, Result};
use crate::measures::{CostSpec, DiscreteMeasure, PlanEntry, PlanFile, TransportPlan};
use crate::scalar::Scalar;

/// Slack allowed in `h_i + k_j <= c_ij`.
pub const DUAL_FEASIBILITY_TOL: f64 = 1e-9;
/// Dense cost matrices are used up to this many cells.
pub const DENSE_COST_LIMIT: usize = 10_000_000;

/// Dual pair `(h, k)` with `h_i + k_j <= c(x_i, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPotentials<S> {
    pub h: Vec<S>,
    pub k: Vec<S>,
}

impl<S: Scalar> DualPotentials<S> {
    /// `sum h_i mu_i + sum k_j nu_j`.
    pub fn value(&self, mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> S {
        let a: S = self.h.iter().zip(mu.weights()).map(|(&h, &w)| h * w).sum();
        let b: S = self.k.iter().zip(nu.weights()).map(|(&k, &w)| k * w).sum();
        a + b
    }

    /// Largest violation of the dual constraint, or `None` when feasible within `tol`.
    pub fn worst_violation(
        &self,
        mu: &DiscreteMeasure<S>,
        nu: &DiscreteMeasure<S>,
        spec: &CostSpec<S>,
        tol: S,
    ) -> Option<(usize, usize, S)> {
        let mut worst: Option<(usize, usize, S)> = None;
        for i in 0..mu.len() {
            for j in 0..nu.len() {
                let excess = self.h[i] + self.k[j] - spec.eval_unchecked(mu.point(i), nu.point(j));
                if excess > tol && worst.map_or(true, |(_, _, w)| excess > w) {
                    worst = Some((i, j, excess));
                }
            }
        }
        worst
    }
}

/// Result of [`solve_kantorovich`].
#[derive(Debug, Clone)]
pub struct SolveReport<S> {
    pub plan: TransportPlan<S>,
    pub potentials: DualPotentials<S>,
    pub primal_value: S,
    pub dual_value: S,
    pub iterations: usize,
}

/// JSON form of a [`SolveReport`]; field order is fixed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SolveReportFile<S> {
    pub primal_value: S,
    pub dual_value: S,
    pub plan: PlanFile<S>,
    pub h: Vec<S>,
    pub k: Vec<S>,
    pub iterations: usize,
}

impl<S: Scalar> SolveReport<S> {
    pub fn to_file(&self) -> SolveReportFile<S> {
        SolveReportFile {
            primal_value: self.primal_value,
            dual_value: self.dual_value,
            plan: self.plan.to_file(),
            h: self.potentials.h.clone(),
            k: self.potentials.k.clone(),
            iterations: self.iterations,
        }
    }
}

/// Cost matrix, dense when small enough and evaluated lazily otherwise.
pub(crate) enum CostTable<'a, S> {
    Dense { n: usize, values: Vec<S> },
    Lazy {
        spec: CostSpec<S>,
        mu: &'a DiscreteMeasure<S>,
        nu: &'a DiscreteMeasure<S>,
    },
}

impl<'a, S: Scalar> CostTable<'a, S> {
    /// Builds the table, rejecting non-finite costs. Returns the table and the
    /// largest absolute cost.
    pub(crate) fn build(
        mu: &'a DiscreteMeasure<S>,
        nu: &'a DiscreteMeasure<S>,
        spec: &CostSpec<S>,
    ) -> Result<(Self, S)> {
        Self::build_with(mu, nu, |x, y| spec.eval_unchecked(x, y), Some(*spec))
    }

    pub(crate) fn build_with(
        mu: &'a DiscreteMeasure<S>,
        nu: &'a DiscreteMeasure<S>,
        f: impl Fn(&[S], &[S]) -> S,
        lazy_spec: Option<CostSpec<S>>,
    ) -> Result<(Self, S)> {
        let (m, n) = (mu.len(), nu.len());
        let mut scale = S::zero();
        let dense = m * n <= DENSE_COST_LIMIT || lazy_spec.is_none();
        let mut values = Vec::with_capacity(if dense { m * n } else { 0 });
        for i in 0..m {
            for j in 0..n {
                let c = f(mu.point(i), nu.point(j));
                if !c.is_finite() {
                    return Err(OtError::NonFiniteCost {
                        source_index: i,
                        target_index: j,
                    });
                }
                scale = scale.max(c.abs());
                if dense {
                    values.push(c);
                }
            }
        }
        let table = if dense {
            CostTable::Dense { n, values }
        } else {
            CostTable::Lazy {
                spec: lazy_spec.expect("lazy table needs a spec"),
                mu,
                nu,
            }
        };
        Ok((table, scale))
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> S {
        match self {
            CostTable::Dense { n, values } => values[i * n + j],
            CostTable::Lazy { spec, mu, nu } => spec.eval_unchecked(mu.point(i), nu.point(j)),
        }
    }
}

pub(crate) fn check_dims<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(OtError::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    Ok(())
}

/// Solves the transportation problem for an arbitrary cost callback.
/// Potentials are shifted so that `min h = 0`.
pub(crate) fn solve_with_table<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    table: &CostTable<'_, S>,
    scale: S,
) -> Result<SolveReport<S>> {
    let cost = |i: usize, j: usize| table.get(i, j);
    let basis = network_simplex::solve_transportation(mu.weights(), nu.weights(), &cost, scale)?;
    // flows that should cancel exactly can keep a few ulps of the weights
    let dust = S::epsilon() * S::lit(16.0);
    let plan = TransportPlan::new(
        mu,
        nu,
        basis.cells.iter().map(|&(i, j, mass)| PlanEntry {
            source: i,
            target: j,
            mass: if mass <= dust { S::zero() } else { mass },
        }),
    )?;
    let shift = basis.h.iter().copied().fold(S::infinity(), S::min);
    let potentials = DualPotentials {
        h: basis.h.iter().map(|&h| h - shift).collect(),
        k: basis.k.iter().map(|&k| k + shift).collect(),
    };
    let primal_value: S = plan
        .entries()
        .iter()
        .map(|e| e.mass * cost(e.source, e.target))
        .sum();
    let dual_value = potentials.value(mu, nu);
    Ok(SolveReport {
        plan,
        potentials,
        primal_value,
        dual_value,
        iterations: basis.iterations,
    })
}

/// Optimal plan and dual potentials for `min { sum c_ij gamma_ij : gamma in Pi(mu, nu) }`.
///
/// The plan is a vertex of the transportation polytope (at most `m + n - 1`
/// cells) and satisfies complementary slackness with the returned potentials.
pub fn solve_kantorovich<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    spec: &CostSpec<S>,
) -> Result<SolveReport<S>> {
    spec.validate()?;
    check_dims(mu, nu)?;
    let (table, scale) = CostTable::build(mu, nu, spec)?;
    solve_with_table(mu, nu, &table, scale)
}

/// `primal - dual` for an explicit plan/potential pair; fails when the
/// potentials violate `h_i + k_j <= c_ij` by more than the tolerance.
pub fn duality_gap_for<S: Scalar>(
    plan: &TransportPlan<S>,
    potentials: &DualPotentials<S>,
    spec: &CostSpec<S>,
) -> Result<S> {
    let (mu, nu) = (plan.source(), plan.target());
    if potentials.h.len() != mu.len() || potentials.k.len() != nu.len() {
        return Err(OtError::InvalidArgument("potential lengths do not match the measures".into()));
    }
    if let Some((i, j, excess)) = potentials.worst_violation(mu, nu, spec, S::tol(DUAL_FEASIBILITY_TOL)) {
        return Err(OtError::DualInfeasible {
            source_index: i,
            target_index: j,
            excess: excess.to_f64_lossy(),
        });
    }
    let gap = plan.cost(spec) - potentials.value(mu, nu);
    Ok(gap.max(S::zero()))
}

/// Duality gap of a solver report, re-evaluated under `spec`.
pub fn duality_gap<S: Scalar>(report: &SolveReport<S>, spec: &CostSpec<S>) -> Result<S> {
    duality_gap_for(&report.plan, &report.potentials, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{make_measure, Norm};
    use approx::assert_abs_diff_eq;

    fn line(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn identical_measures_cost_nothing() {
        let mu = make_measure(vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![0.5, 0.5]], vec![1.0, 2.0, 3.0]).unwrap();
        let r = solve_kantorovich(&mu, &mu, &CostSpec::distance(Norm::Euclidean)).unwrap();
        assert_eq!(r.primal_value, 0.0);
        assert_eq!(r.plan.support(), vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn dirac_source_forces_product_plan() {
        let mu = DiscreteMeasure::dirac(vec![0.0]).unwrap();
        let nu = DiscreteMeasure::uniform(line(&[-1.0, 1.0])).unwrap();
        let r = solve_kantorovich(&mu, &nu, &CostSpec::squared_euclidean()).unwrap();
        assert_abs_diff_eq!(r.primal_value, 1.0, epsilon = 1e-15);
        assert_eq!(r.plan.support(), TransportPlan::product(&mu, &nu).support());
    }

    #[test]
    fn monotone_matching_on_the_line() {
        // enumerated by hand over the 6 permutations: identity costs 3 * 0.25 / 3
        let mu = DiscreteMeasure::uniform(line(&[0.0, 1.0, 2.0])).unwrap();
        let nu = DiscreteMeasure::uniform(line(&[0.5, 1.5, 2.5])).unwrap();
        let r = solve_kantorovich(&mu, &nu, &CostSpec::squared_euclidean()).unwrap();
        assert_abs_diff_eq!(r.primal_value, 0.25, epsilon = 1e-14);
        assert_eq!(r.plan.support(), vec![(0, 0), (1, 1), (2, 2)]);
        assert!(duality_gap(&r, &CostSpec::squared_euclidean()).unwrap() <= 1e-12);
    }

    #[test]
    fn potentials_are_normalized_and_slack_complementary() {
        let mu = make_measure(line(&[0.0, 3.0, 1.0, 7.0]), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let nu = make_measure(line(&[2.0, -1.0, 5.0]), vec![3.0, 3.0, 4.0]).unwrap();
        let spec = CostSpec::new(Norm::Euclidean, 1.5).unwrap();
        let r = solve_kantorovich(&mu, &nu, &spec).unwrap();
        let min_h = r.potentials.h.iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(min_h, 0.0);
        for e in r.plan.entries() {
            let c = spec.eval(mu.point(e.source), nu.point(e.target)).unwrap();
            assert!((r.potentials.h[e.source] + r.potentials.k[e.target] - c).abs() <= 1e-9);
        }
        assert!(r.plan.len() <= mu.len() + nu.len() - 1);
    }

    #[test]
    fn gap_of_zero_potentials_is_primal_value() {
        let mu = DiscreteMeasure::uniform(line(&[0.0, 1.0])).unwrap();
        let nu = DiscreteMeasure::uniform(line(&[1.0, 2.0])).unwrap();
        let spec = CostSpec::distance(Norm::Euclidean);
        let r = solve_kantorovich(&mu, &nu, &spec).unwrap();
        let zero = DualPotentials { h: vec![0.0; 2], k: vec![0.0; 2] };
        assert_abs_diff_eq!(duality_gap_for(&r.plan, &zero, &spec).unwrap(), r.primal_value);
    }

    #[test]
    fn infeasible_potentials_are_rejected() {
        let mu = DiscreteMeasure::uniform(line(&[0.0, 1.0])).unwrap();
        let nu = DiscreteMeasure::uniform(line(&[1.0, 2.0])).unwrap();
        let spec = CostSpec::distance(Norm::Euclidean);
        let r = solve_kantorovich(&mu, &nu, &spec).unwrap();
        let c_max = 2.0;
        let bad = DualPotentials { h: vec![c_max + 1.0; 2], k: vec![0.0; 2] };
        assert!(matches!(
            duality_gap_for(&r.plan, &bad, &spec),
            Err(OtError::DualInfeasible { .. })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let mu = DiscreteMeasure::uniform(line(&[0.0])).unwrap();
        let nu = DiscreteMeasure::uniform(vec![vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            solve_kantorovich(&mu, &nu, &CostSpec::squared_euclidean()),
            Err(OtError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_precision_instance() {
        let mu = DiscreteMeasure::<f32>::uniform(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let nu = DiscreteMeasure::<f32>::uniform(vec![vec![0.5], vec![1.5], vec![2.5]]).unwrap();
        let r = solve_kantorovich(&mu, &nu, &CostSpec::squared_euclidean()).unwrap();
        assert!((r.primal_value - 0.25).abs() < 1e-6);
    }
}

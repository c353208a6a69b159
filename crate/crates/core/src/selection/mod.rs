//! Selection of a distinguished optimal plan for distance costs.
//!
//! Distance costs `||x - y||` typically have a whole face of optimal plans.
//! The strictly convex costs `||x - y||^(1 + eps)` (or, for crystalline norms,
//! `||x - y|| + eps |x - y| + eps^2 |x - y| ln |x - y|`) have far fewer, and
//! their optimal plans are followed along a decreasing `eps` schedule. The
//! plan at the smallest `eps` is reported as the limit.

mod secondary_oracle;

use serde::{Deserialize, Serialize};

pub use secondary_oracle::{exact_secondary_oracle, secondary_gap, MAX_ORACLE_CELLS, MAX_ORACLE_SUPPORT};

use crate::error::{OtError, Result};
use crate::kantorovich::{check_dims, solve_kantorovich};
use crate::measures::{euclidean, CostSpec, DiscreteMeasure, Norm, PlanFile, TransportPlan};
use crate::optimality::is_graph;
use crate::scalar::Scalar;

/// Default schedule `1/2, 1/4, ..., 1/32`.
pub fn default_schedule<S: Scalar>() -> Vec<S> {
    (1..=5).map(|k| S::lit(0.5f64.powi(k))).collect()
}

pub fn validate_schedule<S: Scalar>(eps: &[S]) -> Result<()> {
    if eps.len() < 3 {
        return Err(OtError::InvalidSchedule(format!(
            "need at least 3 values, got {}",
            eps.len()
        )));
    }
    if let Some(bad) = eps.iter().find(|&&e| !(e > S::zero() && e <= S::one())) {
        return Err(OtError::InvalidSchedule(format!("value {bad} outside (0, 1]")));
    }
    if eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(OtError::InvalidSchedule("values must be strictly decreasing".into()));
    }
    Ok(())
}

/// Outcome of following the perturbed problems along a schedule.
#[derive(Debug, Clone)]
pub struct SelectionReport<S> {
    pub eps_schedule: Vec<S>,
    pub plans: Vec<TransportPlan<S>>,
    pub limit_plan: TransportPlan<S>,
    /// Same support at the last two levels.
    pub stabilized: bool,
    /// Unperturbed cost of the limit plan.
    pub primary_value: S,
    /// Secondary functional of the limit plan: `sum gamma d ln d` for the
    /// power family, `sum gamma |x - y|` for the crystalline family.
    pub secondary_value: S,
    /// Unperturbed cost of every plan along the schedule.
    pub primary_values: Vec<S>,
    /// Optimal value of the unperturbed problem.
    pub lp_optimum: S,
    pub is_graph: bool,
    /// Source mass that is split between several targets in the limit plan.
    pub split_mass: S,
}

/// JSON form of a [`SelectionReport`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct SelectionReportFile<S> {
    pub eps_schedule: Vec<S>,
    pub stabilized: bool,
    pub primary_value: S,
    pub secondary_value: S,
    pub lp_optimum: S,
    pub is_graph: bool,
    pub split_mass: S,
    pub primary_values: Vec<S>,
    pub limit_plan: PlanFile<S>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub plans: Option<Vec<PlanFile<S>>>,
}

impl<S: Scalar> SelectionReport<S> {
    pub fn to_file(&self, include_plans: bool) -> SelectionReportFile<S> {
        SelectionReportFile {
            eps_schedule: self.eps_schedule.clone(),
            stabilized: self.stabilized,
            primary_value: self.primary_value,
            secondary_value: self.secondary_value,
            lp_optimum: self.lp_optimum,
            is_graph: self.is_graph,
            split_mass: self.split_mass,
            primary_values: self.primary_values.clone(),
            limit_plan: self.limit_plan.to_file(),
            plans: include_plans.then(|| self.plans.iter().map(|p| p.to_file()).collect()),
        }
    }
}

/// Optimal plan for `||x - y||^(1 + eps)`.
pub fn solve_perturbed<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    norm: Norm<S>,
    eps: S,
) -> Result<TransportPlan<S>> {
    if !(eps > S::zero()) || !eps.is_finite() {
        return Err(OtError::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let spec = CostSpec::new(norm, S::one() + eps)?;
    Ok(solve_kantorovich(mu, nu, &spec)?.plan)
}

/// `sum gamma_ij d_ij ln d_ij` with `0 ln 0 = 0`.
pub fn secondary_entropy<S: Scalar>(plan: &TransportPlan<S>, norm: Norm<S>) -> S {
    let (mu, nu) = (plan.source(), plan.target());
    plan.entries()
        .iter()
        .map(|e| e.mass * norm.distance(mu.point(e.source), nu.point(e.target)).xlnx())
        .sum()
}

fn assemble<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    norm: Norm<S>,
    eps_schedule: &[S],
    plans: Vec<TransportPlan<S>>,
    secondary: impl Fn(&TransportPlan<S>) -> S,
) -> Result<SelectionReport<S>> {
    let primary = CostSpec::distance(norm);
    let lp_optimum = solve_kantorovich(mu, nu, &primary)?.primal_value;
    let primary_values: Vec<S> = plans.iter().map(|p| p.cost(&primary)).collect();
    let limit_plan = plans.last().expect("schedule is nonempty").clone();
    let stabilized = plans[plans.len() - 2].support() == limit_plan.support();
    let (graph, split_mass) = is_graph(&limit_plan);
    Ok(SelectionReport {
        eps_schedule: eps_schedule.to_vec(),
        primary_value: limit_plan.cost(&primary),
        secondary_value: secondary(&limit_plan),
        primary_values,
        lp_optimum,
        is_graph: graph,
        split_mass,
        plans,
        limit_plan,
        stabilized,
    })
}

/// Follows `||x - y||^(1 + eps)` along `eps_schedule`.
pub fn select_monge_plan<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    norm: Norm<S>,
    eps_schedule: &[S],
) -> Result<SelectionReport<S>> {
    validate_schedule(eps_schedule)?;
    norm.validate()?;
    check_dims(mu, nu)?;
    let plans = eps_schedule
        .iter()
        .map(|&eps| solve_perturbed(mu, nu, norm, eps))
        .collect::<Result<Vec<_>>>()?;
    assemble(mu, nu, norm, eps_schedule, plans, |p| secondary_entropy(p, norm))
}

/// Follows the crystalline cost `||x - y|| + eps |x - y| + eps^2 |x - y| ln |x - y|`
/// for `l1` or `linf`, where `|.|` is the Euclidean length.
pub fn select_crystalline<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    norm: Norm<S>,
    eps_schedule: &[S],
) -> Result<SelectionReport<S>> {
    if !matches!(norm, Norm::L1 | Norm::Linf) {
        return Err(OtError::InvalidArgument(format!(
            "crystalline selection needs l1 or linf, got {}",
            norm.name()
        )));
    }
    validate_schedule(eps_schedule)?;
    check_dims(mu, nu)?;
    let plans = eps_schedule
        .iter()
        .map(|&eps| {
            let spec = CostSpec::crystalline(norm, eps)?;
            Ok(solve_kantorovich(mu, nu, &spec)?.plan)
        })
        .collect::<Result<Vec<_>>>()?;
    assemble(mu, nu, norm, eps_schedule, plans, |p| {
        let (a, b) = (p.source(), p.target());
        p.entries()
            .iter()
            .map(|e| e.mass * euclidean(a.point(e.source), b.point(e.target)))
            .sum()
    })
}

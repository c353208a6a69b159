//! Optimality certificates that only look at a plan's support.

use serde::{Deserialize, Serialize};

use crate::error::{OtError, Result};
use crate::measures::{CostSpec, PlanEntry, TransportPlan};
use crate::scalar::Scalar;

/// Largest number of support tuples the cycle search may visit.
pub const CYCLE_BUDGET: f64 = 1e8;
pub const DEFAULT_MAX_CYCLE: usize = 3;
/// A cycle counts as a violation when its gain exceeds this times `1 + |cost|`.
pub const VIOLATION_TOL: f64 = 1e-9;

/// Outcome of [`check_cyclical_monotonicity`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct MonotonicityReport<S> {
    pub ok: bool,
    pub max_cycle: usize,
    /// Support cells `(i, j)`; source `i_t` is reassigned to target `j_{t+1}`.
    pub violation: Option<Vec<(usize, usize)>>,
    /// Cost decrease per unit of mass moved around the cycle.
    pub gain: Option<S>,
}

/// `sum c(x_t, y_t) - sum c(x_t, y_{t+1})` for a cycle of support cells.
pub fn cycle_gain<S: Scalar>(plan: &TransportPlan<S>, spec: &CostSpec<S>, cycle: &[(usize, usize)]) -> S {
    let (mu, nu) = (plan.source(), plan.target());
    let k = cycle.len();
    let mut kept = S::zero();
    let mut moved = S::zero();
    for t in 0..k {
        let (i, j) = cycle[t];
        let (_, j_next) = cycle[(t + 1) % k];
        kept += spec.eval_unchecked(mu.point(i), nu.point(j));
        moved += spec.eval_unchecked(mu.point(i), nu.point(j_next));
    }
    kept - moved
}

struct CycleSearch<'a, S> {
    w: &'a [S],
    s: usize,
    w_max: S,
    threshold: S,
    path: Vec<usize>,
    used: Vec<bool>,
}

impl<S: Scalar> CycleSearch<'_, S> {
    #[inline]
    fn w(&self, a: usize, b: usize) -> S {
        self.w[a * self.s + b]
    }

    /// Depth-first search for a cycle of exactly `len` distinct cells whose
    /// smallest member is `path[0]`.
    fn dfs(&mut self, len: usize, partial: S) -> bool {
        let t = self.path.len();
        let first = self.path[0];
        let last = self.path[t - 1];
        if t == len {
            return partial + self.w(last, first) > self.threshold;
        }
        let remaining_edges = S::from_count(len - t + 1);
        if partial + remaining_edges * self.w_max <= self.threshold {
            return false;
        }
        for b in first + 1..self.s {
            if self.used[b] {
                continue;
            }
            self.used[b] = true;
            self.path.push(b);
            let step = self.w(last, b);
            if self.dfs(len, partial + step) {
                return true;
            }
            self.path.pop();
            self.used[b] = false;
        }
        false
    }
}

/// Checks `sum c(x_t, y_t) <= sum c(x_t, y_{t+1})` for every cycle of at most
/// `max_cycle` distinct support cells. Shorter cycles are searched first and
/// the first violation found is reported.
pub fn check_cyclical_monotonicity<S: Scalar>(
    plan: &TransportPlan<S>,
    spec: &CostSpec<S>,
    max_cycle: usize,
) -> Result<MonotonicityReport<S>> {
    if !(2..=6).contains(&max_cycle) {
        return Err(OtError::InvalidArgument(format!(
            "max_cycle must lie in 2..=6, got {max_cycle}"
        )));
    }
    spec.validate()?;
    let s = plan.len();
    let needed = (s as f64).powi(max_cycle as i32);
    if needed > CYCLE_BUDGET {
        return Err(OtError::BudgetExceeded {
            needed,
            budget: CYCLE_BUDGET,
        });
    }
    let (mu, nu) = (plan.source(), plan.target());
    let entries = plan.entries();
    // w[a][b]: gain from sending source of cell a to the target of cell b
    let mut w = vec![S::zero(); s * s];
    let mut w_max = S::neg_infinity();
    for a in 0..s {
        let x = mu.point(entries[a].source);
        let own = spec.eval_unchecked(x, nu.point(entries[a].target));
        for b in 0..s {
            let v = own - spec.eval_unchecked(x, nu.point(entries[b].target));
            w[a * s + b] = v;
            if a != b {
                w_max = w_max.max(v);
            }
        }
    }
    let threshold = S::tol(VIOLATION_TOL) * (S::one() + plan.cost(spec).abs());
    let mut search = CycleSearch {
        w: &w,
        s,
        w_max,
        threshold,
        path: Vec::with_capacity(max_cycle),
        used: vec![false; s],
    };
    for len in 2..=max_cycle.min(s) {
        for first in 0..s {
            search.path.clear();
            search.path.push(first);
            search.used.iter_mut().for_each(|u| *u = false);
            search.used[first] = true;
            if search.dfs(len, S::zero()) {
                let cycle: Vec<(usize, usize)> = search
                    .path
                    .iter()
                    .map(|&a| (entries[a].source, entries[a].target))
                    .collect();
                let gain = cycle_gain(plan, spec, &cycle);
                return Ok(MonotonicityReport {
                    ok: false,
                    max_cycle,
                    violation: Some(cycle),
                    gain: Some(gain),
                });
            }
        }
    }
    Ok(MonotonicityReport {
        ok: true,
        max_cycle,
        violation: None,
        gain: None,
    })
}

/// Moves `delta = min mass on the cycle` from every cell `(i_t, j_t)` to
/// `(i_t, j_{t+1})`. Marginals are preserved and the cost drops by
/// `delta * cycle_gain`.
pub fn apply_cycle<S: Scalar>(plan: &TransportPlan<S>, cycle: &[(usize, usize)]) -> Result<TransportPlan<S>> {
    let mass_of = |i: usize, j: usize| {
        plan.entries()
            .iter()
            .find(|e| e.source == i && e.target == j)
            .map(|e| e.mass)
    };
    let mut delta = S::infinity();
    for &(i, j) in cycle {
        let m = mass_of(i, j).ok_or_else(|| OtError::InvalidPlan(format!("({i}, {j}) is not in the support")))?;
        delta = delta.min(m);
    }
    let mut cells: Vec<PlanEntry<S>> = plan.entries().to_vec();
    let mut bump = |i: usize, j: usize, d: S| match cells.iter_mut().find(|e| e.source == i && e.target == j) {
        Some(e) => e.mass += d,
        None => cells.push(PlanEntry {
            source: i,
            target: j,
            mass: d,
        }),
    };
    let k = cycle.len();
    for t in 0..k {
        let (i, j) = cycle[t];
        let (_, j_next) = cycle[(t + 1) % k];
        bump(i, j, -delta);
        bump(i, j_next, delta);
    }
    for e in cells.iter_mut() {
        if e.mass.abs() <= S::tol(1e-15) {
            e.mass = S::zero();
        }
    }
    TransportPlan::new(plan.source(), plan.target(), cells)
}

/// Whether every source atom with positive mass goes to a single target, and
/// the total source mass that is split between several targets.
pub fn is_graph<S: Scalar>(plan: &TransportPlan<S>) -> (bool, S) {
    let mut count = vec![0usize; plan.source().len()];
    for e in plan.entries() {
        count[e.source] += 1;
    }
    let split: S = count
        .iter()
        .enumerate()
        .filter(|(_, &c)| c >= 2)
        .map(|(i, _)| plan.source().weight(i))
        .fold(S::zero(), |a, b| a + b);
    let graph = count
        .iter()
        .enumerate()
        .all(|(i, &c)| c == 1 || (c == 0 && plan.source().weight(i) == S::zero()));
    (graph, split)
}

/// `<x_a - x_b, y_a - y_b> >= -1e-12` for all pairs of support cells: the
/// order-two monotonicity condition of the squared Euclidean cost.
pub fn check_quadratic_monotone_support<S: Scalar>(plan: &TransportPlan<S>) -> bool {
    let (mu, nu) = (plan.source(), plan.target());
    let tol = S::tol(1e-12);
    let e = plan.entries();
    for a in 0..e.len() {
        for b in a + 1..e.len() {
            let (xa, xb) = (mu.point(e[a].source), mu.point(e[b].source));
            let (ya, yb) = (nu.point(e[a].target), nu.point(e[b].target));
            let dot: S = (0..xa.len()).map(|d| (xa[d] - xb[d]) * (ya[d] - yb[d])).sum();
            if dot < -tol {
                return false;
            }
        }
    }
    true
}

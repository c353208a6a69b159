//! Discrete measures, cost functions, transport plans and transport maps.
//!
//! A [`DiscreteMeasure`] is a finitely supported probability measure in
//! `R^d`. Construction merges repeated support points and renormalizes the
//! weights, so every measure handed to the solvers has distinct atoms and
//! unit mass. Measures are reference counted and cheap to clone; plans keep
//! handles to the two measures whose marginals they must reproduce.

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{OtError, Result};
use crate::scalar::Scalar;

/// Weight normalization tolerance at construction.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;
/// Marginal tolerance for plans and maps.
pub const MARGINAL_TOL: f64 = 1e-10;

#[derive(Debug)]
struct MeasureData<S> {
    dim: usize,
    coords: Vec<S>,
    weights: Vec<S>,
}

/// Finitely supported probability measure with distinct atoms.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure<S> {
    data: Arc<MeasureData<S>>,
}

/// On-disk form of a measure: `{"points": [[x1,...],...], "weights": [w1,...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct MeasureFile<S> {
    pub points: Vec<Vec<S>>,
    pub weights: Vec<S>,
}

fn cmp_coords<S: Scalar>(a: &[S], b: &[S]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

/// Builds a measure from raw points and nonnegative weights.
///
/// Weights are renormalized to unit total mass and repeated points are merged
/// (keeping the position of the first occurrence, summing weights).
pub fn make_measure<S: Scalar>(points: Vec<Vec<S>>, weights: Vec<S>) -> Result<DiscreteMeasure<S>> {
    if points.is_empty() {
        return Err(OtError::EmptyMeasure);
    }
    if points.len() != weights.len() {
        return Err(OtError::LengthMismatch {
            points: points.len(),
            weights: weights.len(),
        });
    }
    let dim = points[0].len();
    if dim == 0 {
        return Err(OtError::MixedDimensions {
            index: 0,
            expected: 1,
            found: 0,
        });
    }
    for (index, p) in points.iter().enumerate() {
        if p.len() != dim {
            return Err(OtError::MixedDimensions {
                index,
                expected: dim,
                found: p.len(),
            });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(OtError::NonFinite("point coordinates"));
        }
    }
    for (index, &w) in weights.iter().enumerate() {
        if !w.is_finite() {
            return Err(OtError::NonFinite("weights"));
        }
        if w < S::zero() {
            return Err(OtError::NegativeWeight {
                index,
                value: w.to_f64_lossy(),
            });
        }
    }
    let total: S = weights.iter().copied().sum();
    if total <= S::zero() {
        return Err(OtError::ZeroTotalMass);
    }

    // Merge duplicates: sort indices by coordinates, collapse equal runs onto
    // the smallest original index.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| cmp_coords(&points[a], &points[b]).then(a.cmp(&b)));
    let mut representative = vec![usize::MAX; points.len()];
    let mut run_start = 0;
    for k in 1..=order.len() {
        let run_ends = k == order.len()
            || cmp_coords(&points[order[k]], &points[order[run_start]]) != Ordering::Equal;
        if run_ends {
            let rep = order[run_start..k].iter().copied().min().unwrap_or(order[run_start]);
            for &idx in &order[run_start..k] {
                representative[idx] = rep;
            }
            run_start = k;
        }
    }
    let mut merged_weight = vec![S::zero(); points.len()];
    for (idx, &w) in weights.iter().enumerate() {
        merged_weight[representative[idx]] += w;
    }
    let mut coords = Vec::with_capacity(points.len() * dim);
    let mut out_weights = Vec::with_capacity(points.len());
    for (idx, p) in points.iter().enumerate() {
        if representative[idx] == idx {
            coords.extend_from_slice(p);
            out_weights.push(merged_weight[idx] / total);
        }
    }
    let sum: S = out_weights.iter().copied().sum();
    if (sum - S::one()).abs() > S::tol(WEIGHT_SUM_TOL) {
        return Err(OtError::InvalidArgument(format!(
            "weights sum to {sum} after normalization"
        )));
    }
    Ok(DiscreteMeasure {
        data: Arc::new(MeasureData {
            dim,
            coords,
            weights: out_weights,
        }),
    })
}

impl<S: Scalar> DiscreteMeasure<S> {
    /// Uniform measure on the given points.
    pub fn uniform(points: Vec<Vec<S>>) -> Result<Self> {
        let w = vec![S::one(); points.len()];
        make_measure(points, w)
    }

    /// Dirac mass at `x`.
    pub fn dirac(x: Vec<S>) -> Result<Self> {
        make_measure(vec![x], vec![S::one()])
    }

    pub fn from_file(file: MeasureFile<S>) -> Result<Self> {
        make_measure(file.points, file.weights)
    }

    pub fn to_file(&self) -> MeasureFile<S> {
        MeasureFile {
            points: self.points().map(|p| p.to_vec()).collect(),
            weights: self.weights().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.dim
    }

    pub fn point(&self, i: usize) -> &[S] {
        let d = self.data.dim;
        &self.data.coords[i * d..(i + 1) * d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[S]> + '_ {
        self.data.coords.chunks(self.data.dim)
    }

    pub fn weight(&self, i: usize) -> S {
        self.data.weights[i]
    }

    pub fn weights(&self) -> &[S] {
        &self.data.weights
    }

    /// True when both handles refer to the same allocation.
    pub fn ptr_eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.data, &other.data)
    }

    /// Same atoms and weights, exactly.
    pub fn same_as(&self, other: &Self) -> bool {
        self.ptr_eq(other)
            || (self.dim() == other.dim()
                && self.data.coords == other.data.coords
                && self.data.weights == other.data.weights)
    }
}

/// Norm used to measure displacements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", bound = "S: Scalar")]
pub enum Norm<S> {
    Euclidean,
    L1,
    Linf,
    /// General `l_p` norm, `p >= 1`.
    P(S),
}

impl<S: Scalar> Norm<S> {
    pub fn validate(&self) -> Result<()> {
        if let Norm::P(p) = *self {
            if !p.is_finite() || p < S::one() {
                return Err(OtError::InvalidCost(format!("p-norm needs p >= 1, got {p}")));
            }
        }
        Ok(())
    }

    /// Length of `x - y`. Slices must have equal length.
    pub fn distance(&self, x: &[S], y: &[S]) -> S {
        let diffs = x.iter().zip(y).map(|(&a, &b)| (a - b).abs());
        match *self {
            Norm::Euclidean => euclidean(x, y),
            Norm::L1 => diffs.sum(),
            Norm::Linf => diffs.fold(S::zero(), S::max),
            Norm::P(p) => {
                if p == S::one() {
                    diffs.sum()
                } else {
                    // scale by the largest component to avoid overflow in |d|^p
                    let dv: Vec<S> = diffs.collect();
                    let scale = dv.iter().copied().fold(S::zero(), S::max);
                    if scale == S::zero() {
                        return S::zero();
                    }
                    let s: S = dv.iter().map(|&d| (d / scale).powf(p)).sum();
                    scale * s.powf(p.recip())
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            Norm::Euclidean => "euclidean".into(),
            Norm::L1 => "l1".into(),
            Norm::Linf => "linf".into(),
            Norm::P(p) => format!("p{p}"),
        }
    }
}

/// Euclidean length of `x - y`.
pub fn euclidean<S: Scalar>(x: &[S], y: &[S]) -> S {
    let mut scale = S::zero();
    for (&a, &b) in x.iter().zip(y) {
        scale = scale.max((a - b).abs());
    }
    if scale == S::zero() {
        return S::zero();
    }
    let s: S = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let t = (a - b) / scale;
            t * t
        })
        .sum();
    scale * s.sqrt()
}

/// Cost `c(x, y) = ||x - y||^exponent`, or the crystalline ternary cost
/// `||x - y|| + eps |x - y| + eps^2 |x - y| ln |x - y|` when a perturbation is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct CostSpec<S> {
    pub norm: Norm<S>,
    pub exponent: S,
    pub crystalline_perturbation: Option<S>,
}

impl<S: Scalar> CostSpec<S> {
    pub fn new(norm: Norm<S>, exponent: S) -> Result<Self> {
        let spec = CostSpec {
            norm,
            exponent,
            crystalline_perturbation: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Plain distance cost `||x - y||`.
    pub fn distance(norm: Norm<S>) -> Self {
        CostSpec {
            norm,
            exponent: S::one(),
            crystalline_perturbation: None,
        }
    }

    /// Squared Euclidean distance.
    pub fn squared_euclidean() -> Self {
        CostSpec {
            norm: Norm::Euclidean,
            exponent: S::lit(2.0),
            crystalline_perturbation: None,
        }
    }

    pub fn crystalline(norm: Norm<S>, eps: S) -> Result<Self> {
        let spec = CostSpec {
            norm,
            exponent: S::one(),
            crystalline_perturbation: Some(eps),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.norm.validate()?;
        if !self.exponent.is_finite() || self.exponent < S::one() {
            return Err(OtError::InvalidCost(format!(
                "exponent must be >= 1, got {}",
                self.exponent
            )));
        }
        if let Some(eps) = self.crystalline_perturbation {
            if !eps.is_finite() || eps < S::zero() {
                return Err(OtError::InvalidCost(format!(
                    "perturbation must be a finite nonnegative number, got {eps}"
                )));
            }
            if self.exponent != S::one() {
                return Err(OtError::InvalidCost(
                    "crystalline perturbation requires exponent 1".into(),
                ));
            }
        }
        Ok(())
    }

    /// Cost without dimension checks; callers guarantee equal lengths.
    #[inline]
    pub fn eval_unchecked(&self, x: &[S], y: &[S]) -> S {
        let d = self.norm.distance(x, y);
        let base = if self.exponent == S::one() || d == S::zero() {
            if self.exponent == S::one() {
                d
            } else {
                S::zero()
            }
        } else {
            // exp((1 + eps) ln d) stays accurate as the exponent approaches 1
            (self.exponent * d.ln()).exp()
        };
        match self.crystalline_perturbation {
            None => base,
            Some(eps) => {
                let e = euclidean(x, y);
                base + eps * e + eps * eps * e.xlnx()
            }
        }
    }

    pub fn eval(&self, x: &[S], y: &[S]) -> Result<S> {
        if x.len() != y.len() {
            return Err(OtError::DimensionMismatch {
                expected: x.len(),
                found: y.len(),
            });
        }
        Ok(self.eval_unchecked(x, y))
    }
}

/// Evaluates `spec` on a pair of points.
pub fn eval_cost<S: Scalar>(spec: &CostSpec<S>, x: &[S], y: &[S]) -> Result<S> {
    spec.eval(x, y)
}

/// One nonzero cell of a plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanEntry<S> {
    pub source: usize,
    pub target: usize,
    pub mass: S,
}

/// On-disk form of a plan: `{"entries": [[i, j, mass], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct PlanFile<S> {
    pub entries: Vec<(usize, usize, S)>,
}

/// Sparse coupling between two measures with matching marginals.
#[derive(Debug, Clone)]
pub struct TransportPlan<S> {
    entries: Vec<PlanEntry<S>>,
    source: DiscreteMeasure<S>,
    target: DiscreteMeasure<S>,
}

impl<S: Scalar> TransportPlan<S> {
    /// Validates and canonicalizes (sorted by `(source, target)`, zero cells dropped).
    pub fn new(
        source: &DiscreteMeasure<S>,
        target: &DiscreteMeasure<S>,
        entries: impl IntoIterator<Item = PlanEntry<S>>,
    ) -> Result<Self> {
        let plan = Self::new_unchecked_marginals(source, target, entries)?;
        plan.check_marginals()?;
        Ok(plan)
    }

    fn new_unchecked_marginals(
        source: &DiscreteMeasure<S>,
        target: &DiscreteMeasure<S>,
        entries: impl IntoIterator<Item = PlanEntry<S>>,
    ) -> Result<Self> {
        let mut v: Vec<PlanEntry<S>> = Vec::new();
        for e in entries {
            if e.source >= source.len() || e.target >= target.len() {
                return Err(OtError::InvalidPlan(format!(
                    "entry ({}, {}) out of range for {}x{} plan",
                    e.source,
                    e.target,
                    source.len(),
                    target.len()
                )));
            }
            if !e.mass.is_finite() || e.mass < S::zero() {
                return Err(OtError::InvalidPlan(format!(
                    "entry ({}, {}) has mass {}",
                    e.source, e.target, e.mass
                )));
            }
            if e.mass > S::zero() {
                v.push(e);
            }
        }
        v.sort_by_key(|e| (e.source, e.target));
        if v
            .windows(2)
            .any(|w| w[0].source == w[1].source && w[0].target == w[1].target)
        {
            return Err(OtError::InvalidPlan("duplicate entry".into()));
        }
        Ok(TransportPlan {
            entries: v,
            source: source.clone(),
            target: target.clone(),
        })
    }

    pub fn from_file(
        source: &DiscreteMeasure<S>,
        target: &DiscreteMeasure<S>,
        file: &PlanFile<S>,
    ) -> Result<Self> {
        Self::new(
            source,
            target,
            file.entries.iter().map(|&(i, j, mass)| PlanEntry {
                source: i,
                target: j,
                mass,
            }),
        )
    }

    pub fn to_file(&self) -> PlanFile<S> {
        PlanFile {
            entries: self
                .entries
                .iter()
                .map(|e| (e.source, e.target, e.mass))
                .collect(),
        }
    }

    /// The product coupling `mu ⊗ nu`, always feasible.
    pub fn product(source: &DiscreteMeasure<S>, target: &DiscreteMeasure<S>) -> Self {
        let mut entries = Vec::with_capacity(source.len() * target.len());
        for i in 0..source.len() {
            for j in 0..target.len() {
                entries.push(PlanEntry {
                    source: i,
                    target: j,
                    mass: source.weight(i) * target.weight(j),
                });
            }
        }
        Self::new_unchecked_marginals(source, target, entries).expect("product plan entries are valid")
    }

    /// The identity coupling of a measure with itself.
    pub fn diagonal(measure: &DiscreteMeasure<S>) -> Self {
        let entries = (0..measure.len()).map(|i| PlanEntry {
            source: i,
            target: i,
            mass: measure.weight(i),
        });
        Self::new_unchecked_marginals(measure, measure, entries).expect("diagonal entries are valid")
    }

    pub fn entries(&self) -> &[PlanEntry<S>] {
        &self.entries
    }

    pub fn source(&self) -> &DiscreteMeasure<S> {
        &self.source
    }

    pub fn target(&self) -> &DiscreteMeasure<S> {
        &self.target
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn row_marginal(&self) -> Vec<S> {
        let mut r = vec![S::zero(); self.source.len()];
        for e in &self.entries {
            r[e.source] += e.mass;
        }
        r
    }

    pub fn column_marginal(&self) -> Vec<S> {
        let mut c = vec![S::zero(); self.target.len()];
        for e in &self.entries {
            c[e.target] += e.mass;
        }
        c
    }

    /// Largest marginal deviation from the two measures.
    pub fn marginal_error(&self) -> S {
        let rows = self
            .row_marginal()
            .into_iter()
            .zip(self.source.weights())
            .map(|(a, &b)| (a - b).abs());
        let cols = self
            .column_marginal()
            .into_iter()
            .zip(self.target.weights())
            .map(|(a, &b)| (a - b).abs());
        rows.chain(cols).fold(S::zero(), S::max)
    }

    pub fn check_marginals(&self) -> Result<()> {
        let err = self.marginal_error();
        if err > S::tol(MARGINAL_TOL) {
            return Err(OtError::InvalidPlan(format!("marginal error {err}")));
        }
        Ok(())
    }

    /// Sorted list of `(source, target)` cells carrying mass.
    pub fn support(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|e| (e.source, e.target)).collect()
    }

    /// `sum gamma_ij c(x_i, y_j)`.
    pub fn cost(&self, spec: &CostSpec<S>) -> S {
        self.entries
            .iter()
            .map(|e| e.mass * spec.eval_unchecked(self.source.point(e.source), self.target.point(e.target)))
            .sum()
    }

    /// `(1 - t) self + t other`; both plans must couple the same measures.
    pub fn convex_combination(&self, other: &Self, t: S) -> Result<Self> {
        if !self.source.same_as(&other.source) || !self.target.same_as(&other.target) {
            return Err(OtError::InvalidPlan("plans couple different measures".into()));
        }
        let mut cells: Vec<PlanEntry<S>> = Vec::new();
        cells.extend(self.entries.iter().map(|e| PlanEntry {
            mass: e.mass * (S::one() - t),
            ..*e
        }));
        cells.extend(other.entries.iter().map(|e| PlanEntry {
            mass: e.mass * t,
            ..*e
        }));
        cells.sort_by_key(|e| (e.source, e.target));
        let mut merged: Vec<PlanEntry<S>> = Vec::new();
        for c in cells {
            match merged.last_mut() {
                Some(last) if last.source == c.source && last.target == c.target => last.mass += c.mass,
                _ => merged.push(c),
            }
        }
        Self::new(&self.source, &self.target, merged)
    }
}

/// Total transport cost of `plan` under `spec`.
pub fn plan_cost<S: Scalar>(plan: &TransportPlan<S>, spec: &CostSpec<S>) -> S {
    plan.cost(spec)
}

/// A transport map `i -> j(i)` pushing the source measure onto the target.
#[derive(Debug, Clone)]
pub struct MongeMap<S> {
    pub assignment: Vec<usize>,
    witness: TransportPlan<S>,
}

impl<S: Scalar> MongeMap<S> {
    /// Builds a map from an explicit assignment, checking the push-forward condition.
    pub fn new(
        source: &DiscreteMeasure<S>,
        target: &DiscreteMeasure<S>,
        assignment: Vec<usize>,
    ) -> Result<Self> {
        if assignment.len() != source.len() {
            return Err(OtError::LengthMismatch {
                points: source.len(),
                weights: assignment.len(),
            });
        }
        let plan = TransportPlan::new(
            source,
            target,
            assignment.iter().enumerate().map(|(i, &j)| PlanEntry {
                source: i,
                target: j,
                mass: source.weight(i),
            }),
        )?;
        Ok(MongeMap {
            assignment,
            witness: plan,
        })
    }

    /// Extracts the map from a plan concentrated on a graph.
    pub fn from_plan(plan: &TransportPlan<S>) -> Result<Self> {
        let mut assignment = vec![usize::MAX; plan.source().len()];
        for e in plan.entries() {
            if assignment[e.source] != usize::MAX {
                return Err(OtError::InvalidPlan(format!(
                    "source {} is split between several targets",
                    e.source
                )));
            }
            assignment[e.source] = e.target;
        }
        if let Some(i) = assignment.iter().position(|&j| j == usize::MAX) {
            // zero-weight sources carry no entries and may go anywhere
            if plan.source().weight(i) > S::zero() {
                return Err(OtError::InvalidPlan(format!("source {i} has no target")));
            }
        }
        for j in assignment.iter_mut().filter(|j| **j == usize::MAX) {
            *j = 0;
        }
        Ok(MongeMap {
            assignment,
            witness: plan.clone(),
        })
    }

    pub fn plan(&self) -> &TransportPlan<S> {
        &self.witness
    }

    /// `psi_# mu` as a weight vector on the target atoms.
    pub fn pushforward(&self) -> Vec<S> {
        let src = self.witness.source();
        let mut out = vec![S::zero(); self.witness.target().len()];
        for (i, &j) in self.assignment.iter().enumerate() {
            out[j] += src.weight(i);
        }
        out
    }
}

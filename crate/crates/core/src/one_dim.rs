//! Increasing rearrangement on the real line.

use crate::error::{OtError, Result};
use crate::measures::{DiscreteMeasure, PlanEntry, TransportPlan};
use crate::scalar::Scalar;

fn sorted_order<S: Scalar>(m: &DiscreteMeasure<S>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..m.len()).collect();
    idx.sort_by(|&a, &b| m.point(a)[0].partial_cmp(&m.point(b)[0]).expect("finite coordinates"));
    idx
}

/// The monotone coupling of two measures on the line, built by north-west
/// corner pairing of the sorted atoms. It is optimal for every cost that is a
/// convex function of `|x - y|`.
///
/// When both running residuals are exhausted together the source pointer is
/// advanced first, then the target pointer.
pub fn monotone_rearrangement<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> Result<TransportPlan<S>> {
    for m in [mu, nu] {
        if m.dim() != 1 {
            return Err(OtError::DimensionMismatch {
                expected: 1,
                found: m.dim(),
            });
        }
    }
    let xs = sorted_order(mu);
    let ys = sorted_order(nu);
    let tie = S::tol(1e-15);
    let mut entries = Vec::with_capacity(xs.len() + ys.len());
    let (mut a, mut b) = (0usize, 0usize);
    let mut ra = mu.weight(xs[0]);
    let mut rb = nu.weight(ys[0]);
    while a < xs.len() && b < ys.len() {
        let mass = ra.min(rb);
        if mass > S::zero() {
            entries.push(PlanEntry {
                source: xs[a],
                target: ys[b],
                mass,
            });
        }
        ra -= mass;
        rb -= mass;
        let src_done = ra <= tie;
        let dst_done = rb <= tie;
        if src_done {
            a += 1;
            if a < xs.len() {
                ra = mu.weight(xs[a]);
            }
        }
        if dst_done {
            b += 1;
            if b < ys.len() {
                rb = nu.weight(ys[b]);
            }
        }
    }
    TransportPlan::new(mu, nu, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::make_measure;

    fn line(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn sorted_identity_pairing() {
        let mu = DiscreteMeasure::uniform(line(&[2.0, 0.0, 1.0])).unwrap();
        let nu = DiscreteMeasure::uniform(line(&[5.0, 7.0, 6.0])).unwrap();
        let plan = monotone_rearrangement(&mu, &nu).unwrap();
        // atoms 0->5, 1->6, 2->7 expressed in the original index order
        assert_eq!(plan.support(), vec![(0, 1), (1, 0), (2, 2)]);
    }

    #[test]
    fn cumulative_weight_pairing() {
        let mu = make_measure(line(&[0.0, 1.0]), vec![0.75, 0.25]).unwrap();
        let nu = make_measure(line(&[0.0, 1.0]), vec![0.25, 0.75]).unwrap();
        let plan = monotone_rearrangement(&mu, &nu).unwrap();
        let e: Vec<(usize, usize, f64)> = plan.entries().iter().map(|e| (e.source, e.target, e.mass)).collect();
        assert_eq!(e, vec![(0, 0, 0.25), (0, 1, 0.5), (1, 1, 0.25)]);
    }

    #[test]
    fn rejects_higher_dimensions() {
        let mu = DiscreteMeasure::uniform(vec![vec![0.0, 1.0]]).unwrap();
        assert!(monotone_rearrangement(&mu, &mu).is_err());
    }
}

//! Exact two-stage selection: minimize `sum gamma_ij d_ij ln d_ij` over the
//! plans that are optimal for the distance cost.
//!
//! A plan is optimal for `d` exactly when it is feasible and supported on
//! cells where some optimal dual pair is tight, so the optimal face is
//! described by the tight cells of the network simplex potentials. The
//! secondary problem is then a linear program over those cells, with the
//! primary cost kept as an explicit inequality `sum c gamma <= OPT + tol`.

use crate::error::{OtError, Result};
use crate::kantorovich::solve_kantorovich;
use crate::linprog::{solve_standard, StandardForm};
use crate::measures::{CostSpec, DiscreteMeasure, Norm, PlanEntry, TransportPlan};
use crate::scalar::Scalar;

/// Largest support size accepted on either side.
pub const MAX_ORACLE_SUPPORT: usize = 256;
/// Largest number of tight cells kept as LP columns.
pub const MAX_ORACLE_CELLS: usize = 20_000;
/// Slack on the primary-optimality constraint.
pub const PRIMARY_SLACK: f64 = 1e-9;

/// The optimal face, as LP columns.
pub(crate) struct OptimalFace<S> {
    pub cells: Vec<(usize, usize)>,
    pub primary: Vec<S>,
    pub secondary: Vec<S>,
    pub optimum: S,
}

pub(crate) fn optimal_face<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    norm: Norm<S>,
) -> Result<OptimalFace<S>> {
    let (m, n) = (mu.len(), nu.len());
    if m > MAX_ORACLE_SUPPORT || n > MAX_ORACLE_SUPPORT {
        return Err(OtError::TooLarge(format!(
            "{m}x{n} exceeds the oracle limit of {MAX_ORACLE_SUPPORT} atoms per side"
        )));
    }
    let spec = CostSpec::distance(norm);
    let report = solve_kantorovich(mu, nu, &spec)?;
    let scale = (0..m)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| spec.eval_unchecked(mu.point(i), nu.point(j)))
        .fold(S::one(), S::max);
    let tight = S::tol(1e-9) * scale;
    let (h, k) = (&report.potentials.h, &report.potentials.k);
    let mut face = OptimalFace {
        cells: Vec::new(),
        primary: Vec::new(),
        secondary: Vec::new(),
        optimum: report.primal_value,
    };
    for i in 0..m {
        for j in 0..n {
            let c = spec.eval_unchecked(mu.point(i), nu.point(j));
            if c - h[i] - k[j] <= tight {
                face.cells.push((i, j));
                face.primary.push(c);
                face.secondary.push(c.xlnx());
            }
        }
    }
    if face.cells.len() > MAX_ORACLE_CELLS {
        return Err(OtError::TooLarge(format!(
            "optimal face has {} cells, limit {MAX_ORACLE_CELLS}",
            face.cells.len()
        )));
    }
    Ok(face)
}

/// Minimizes the secondary cost over the face with the cells in `forbidden`
/// (indices into `face.cells`) fixed to zero.
pub(crate) fn minimize_on_face<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    face: &OptimalFace<S>,
    forbidden: Option<usize>,
) -> Result<(TransportPlan<S>, S)> {
    let (m, n) = (mu.len(), nu.len());
    let cols: Vec<usize> = (0..face.cells.len()).filter(|&c| Some(c) != forbidden).collect();
    let nv = cols.len() + 1; // last column: slack of the primary constraint
    let mut a = vec![vec![S::zero(); nv]; m + n + 1];
    for (v, &c) in cols.iter().enumerate() {
        let (i, j) = face.cells[c];
        a[i][v] = S::one();
        a[m + j][v] = S::one();
        a[m + n][v] = face.primary[c];
    }
    a[m + n][nv - 1] = S::one();
    let mut b: Vec<S> = mu.weights().iter().chain(nu.weights()).copied().collect();
    b.push(face.optimum + S::tol(PRIMARY_SLACK));
    let mut c: Vec<S> = cols.iter().map(|&c| face.secondary[c]).collect();
    c.push(S::zero());
    let sol = solve_standard(&StandardForm { a, b, c })?;
    let plan = TransportPlan::new(
        mu,
        nu,
        cols.iter().enumerate().map(|(v, &cell)| PlanEntry {
            source: face.cells[cell].0,
            target: face.cells[cell].1,
            mass: sol.x[v],
        }),
    )?;
    let value = plan
        .entries()
        .iter()
        .map(|e| {
            let idx = face
                .cells
                .binary_search(&(e.source, e.target))
                .expect("plan cells belong to the optimal face");
            e.mass * face.secondary[idx]
        })
        .sum();
    Ok((plan, value))
}

/// Exact minimizer of `sum gamma_ij d_ij ln d_ij` among the plans that are
/// optimal for `d(x, y) = ||x - y||`, and its value.
pub fn exact_secondary_oracle<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    norm: Norm<S>,
) -> Result<(TransportPlan<S>, S)> {
    let face = optimal_face(mu, nu, norm)?;
    minimize_on_face(mu, nu, &face, None)
}

/// Secondary-cost gap between the oracle's minimizer and the best optimal
/// vertex that differs from it; infinite when the face has a single vertex.
///
/// Any other vertex misses at least one support cell of the minimizer, so
/// forbidding each support cell in turn enumerates the runner-up.
pub fn secondary_gap<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>, norm: Norm<S>) -> Result<S> {
    let face = optimal_face(mu, nu, norm)?;
    let (best_plan, best) = minimize_on_face(mu, nu, &face, None)?;
    let mut gap = S::infinity();
    for e in best_plan.entries() {
        let idx = face
            .cells
            .binary_search(&(e.source, e.target))
            .expect("support lies on the face");
        match minimize_on_face(mu, nu, &face, Some(idx)) {
            Ok((_, v)) => gap = gap.min(v - best),
            Err(OtError::Infeasible) => {}
            Err(err) => return Err(err),
        }
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::make_measure;

    fn line(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn book_shift_translation() {
        let mu = DiscreteMeasure::uniform(line(&[0.0, 1.0])).unwrap();
        let nu = DiscreteMeasure::uniform(line(&[1.0, 2.0])).unwrap();
        let (plan, v) = exact_secondary_oracle(&mu, &nu, Norm::Euclidean).unwrap();
        assert_eq!(plan.support(), vec![(0, 0), (1, 1)]);
        assert!(v.abs() < 1e-15);
        let gap = secondary_gap(&mu, &nu, Norm::Euclidean).unwrap();
        assert!((gap - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn dirac_source() {
        let mu = DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap();
        let nu = make_measure(vec![vec![3.0, 4.0], vec![0.0, 0.5]], vec![0.25, 0.75]).unwrap();
        let (_, v) = exact_secondary_oracle(&mu, &nu, Norm::Euclidean).unwrap();
        let expected = 0.25 * 5.0 * 5f64.ln() + 0.75 * 0.5 * 0.5f64.ln();
        assert!((v - expected).abs() < 1e-12);
        assert!(secondary_gap(&mu, &nu, Norm::Euclidean).unwrap().is_infinite());
    }
}

//! Exhaustive optimum of small transportation problems, used as a test oracle.
//!
//! Two enumerations, neither of which shares code with the simplex:
//!
//! * When every weight of both measures is a multiple of `1/K` for some
//!   `K <= 8`, each atom is split into unit atoms of mass `1/K` and all `K!`
//!   unit assignments are enumerated. The polytope with integral margins has
//!   integral vertices, so the best assignment is the optimum.
//! * Otherwise every spanning tree of the bipartite support graph is
//!   enumerated, its flows recovered by leaf peeling, and the cheapest
//!   nonnegative one kept.
//! * When there are too many trees but the weights share a denominator
//!   `K <= 420`, the unit atoms are matched by the Hungarian algorithm, which
//!   is exact on the same integral assignment polytope.

use crate::error::{OtError, Result};
use crate::measures::{CostSpec, DiscreteMeasure};
use crate::scalar::Scalar;

use super::check_dims;

const MAX_UNITS: usize = 8;
const MAX_SIDE: usize = 8;
const MAX_TREES: f64 = 2.0e5;
const MAX_ASSIGNMENT_UNITS: usize = 420;

fn common_denominator<S: Scalar>(weights: &[S], other: &[S], max: usize) -> Option<usize> {
    (1..=max).find(|&k| {
        let kf = S::from_count(k);
        weights.iter().chain(other).all(|&w| {
            let scaled = w * kf;
            (scaled - scaled.round()).abs() <= S::tol(1e-9) && (w == S::zero() || scaled.round() >= S::one())
        })
    })
}

fn units<S: Scalar>(weights: &[S], k: usize) -> Vec<usize> {
    let kf = S::from_count(k);
    let mut out = Vec::with_capacity(k);
    for (idx, &w) in weights.iter().enumerate() {
        let count = (w * kf).round().to_usize().unwrap_or(0);
        out.extend(std::iter::repeat(idx).take(count));
    }
    out
}

fn best_assignment<S: Scalar>(cost: &[Vec<S>], src: &[usize], dst: &[usize]) -> S {
    let k = src.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let eval = |perm: &[usize]| -> S { perm.iter().enumerate().map(|(a, &b)| cost[src[a]][dst[b]]).sum() };
    let mut best = eval(&perm);
    // Heap's algorithm, iterative form
    let mut c = vec![0usize; k];
    let mut i = 1;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best / S::from_count(k)
}

/// Minimum-cost perfect matching of unit atoms (Kuhn-Munkres with row and
/// column potentials, `O(k^3)`).
fn hungarian<S: Scalar>(cost: &[Vec<S>], src: &[usize], dst: &[usize]) -> S {
    let k = src.len();
    let c = |r: usize, q: usize| cost[src[r - 1]][dst[q - 1]];
    // 1-based; column 0 is a sentinel
    let mut u = vec![S::zero(); k + 1];
    let mut v = vec![S::zero(); k + 1];
    let mut row_of = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for r in 1..=k {
        row_of[0] = r;
        let mut q0 = 0;
        let mut minv = vec![S::infinity(); k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[q0] = true;
            let r0 = row_of[q0];
            let mut delta = S::infinity();
            let mut q1 = 0;
            for q in 1..=k {
                if !used[q] {
                    let cur = c(r0, q) - u[r0] - v[q];
                    if cur < minv[q] {
                        minv[q] = cur;
                        way[q] = q0;
                    }
                    if minv[q] < delta {
                        delta = minv[q];
                        q1 = q;
                    }
                }
            }
            for q in 0..=k {
                if used[q] {
                    u[row_of[q]] += delta;
                    v[q] -= delta;
                } else {
                    minv[q] -= delta;
                }
            }
            q0 = q1;
            if row_of[q0] == 0 {
                break;
            }
        }
        loop {
            let q1 = way[q0];
            row_of[q0] = row_of[q1];
            q0 = q1;
            if q0 == 0 {
                break;
            }
        }
    }
    let total = (1..=k).fold(S::zero(), |acc, q| acc + c(row_of[q], q));
    total / S::from_count(k)
}

struct TreeSearch<'a, S> {
    m: usize,
    n: usize,
    a: &'a [S],
    b: &'a [S],
    cost: &'a [Vec<S>],
    chosen: Vec<(usize, usize)>,
    best: Option<S>,
}

impl<S: Scalar> TreeSearch<'_, S> {
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            x = parent[x];
        }
        x
    }

    fn recurse(&mut self, cell: usize, parent: &mut Vec<usize>) {
        let needed = self.m + self.n - 1;
        if self.chosen.len() == needed {
            self.evaluate();
            return;
        }
        let total = self.m * self.n;
        if total - cell < needed - self.chosen.len() {
            return;
        }
        let (i, j) = (cell / self.n, cell % self.n);
        let ri = Self::find(parent, i);
        let rj = Self::find(parent, self.m + j);
        if ri != rj {
            let saved = parent.clone();
            parent[ri] = rj;
            self.chosen.push((i, j));
            self.recurse(cell + 1, parent);
            self.chosen.pop();
            *parent = saved;
        }
        self.recurse(cell + 1, parent);
    }

    /// Flows on a spanning tree are forced; peel leaves until none remain.
    fn evaluate(&mut self) {
        let mut ra: Vec<S> = self.a.to_vec();
        let mut rb: Vec<S> = self.b.to_vec();
        let mut alive = vec![true; self.chosen.len()];
        let mut deg_row = vec![0usize; self.m];
        let mut deg_col = vec![0usize; self.n];
        for &(i, j) in &self.chosen {
            deg_row[i] += 1;
            deg_col[j] += 1;
        }
        let mut value = S::zero();
        for _ in 0..self.chosen.len() {
            let mut picked = None;
            for (idx, &(i, j)) in self.chosen.iter().enumerate() {
                if alive[idx] && (deg_row[i] == 1 || deg_col[j] == 1) {
                    picked = Some((idx, deg_row[i] == 1));
                    break;
                }
            }
            let Some((idx, row_leaf)) = picked else { return };
            let (i, j) = self.chosen[idx];
            let flow = if row_leaf { ra[i] } else { rb[j] };
            if flow < -S::tol(1e-12) {
                return;
            }
            ra[i] -= flow;
            rb[j] -= flow;
            deg_row[i] -= 1;
            deg_col[j] -= 1;
            alive[idx] = false;
            value += flow * self.cost[i][j];
        }
        if self.best.map_or(true, |b| value < b) {
            self.best = Some(value);
        }
    }
}

/// Exact optimal value of a transportation problem with `m, n <= 8`, by
/// enumeration or, for many-tree instances with rational weights, unit matching.
pub fn brute_force_optimum<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    spec: &CostSpec<S>,
) -> Result<S> {
    spec.validate()?;
    check_dims(mu, nu)?;
    let (m, n) = (mu.len(), nu.len());
    if m > MAX_SIDE || n > MAX_SIDE {
        return Err(OtError::TooLarge(format!("{m}x{n} exceeds {MAX_SIDE}x{MAX_SIDE}")));
    }
    let cost: Vec<Vec<S>> = (0..m)
        .map(|i| (0..n).map(|j| spec.eval_unchecked(mu.point(i), nu.point(j))).collect())
        .collect();

    if let Some(k) = common_denominator(mu.weights(), nu.weights(), MAX_UNITS) {
        let src = units(mu.weights(), k);
        let dst = units(nu.weights(), k);
        if src.len() == k && dst.len() == k {
            return Ok(best_assignment(&cost, &src, &dst));
        }
    }

    let trees = (m as f64).powi(n as i32 - 1) * (n as f64).powi(m as i32 - 1);
    if trees > MAX_TREES {
        if let Some(k) = common_denominator(mu.weights(), nu.weights(), MAX_ASSIGNMENT_UNITS) {
            return Ok(hungarian(&cost, &units(mu.weights(), k), &units(nu.weights(), k)));
        }
        return Err(OtError::TooLarge(format!(
            "{m}x{n} has {trees:e} spanning trees and no common weight denominator <= {MAX_ASSIGNMENT_UNITS}"
        )));
    }
    let mut search = TreeSearch {
        m,
        n,
        a: mu.weights(),
        b: nu.weights(),
        cost: &cost,
        chosen: Vec::with_capacity(m + n - 1),
        best: None,
    };
    let mut parent: Vec<usize> = (0..m + n).collect();
    search.recurse(0, &mut parent);
    search.best.ok_or(OtError::Infeasible)
}

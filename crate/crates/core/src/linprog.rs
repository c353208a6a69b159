//! Dense two-phase tableau simplex for small linear programs in standard form
//! `min c^T x` subject to `A x = b`, `x >= 0`.
//!
//! This solver is deliberately independent of the network simplex: it backs
//! the exact two-stage oracle used to check perturbative plan selection.

use crate::error::{OtError, Result};
use crate::scalar::Scalar;

/// Standard-form problem with dense rows.
#[derive(Debug, Clone)]
pub struct StandardForm<S> {
    pub a: Vec<Vec<S>>,
    pub b: Vec<S>,
    pub c: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct LpSolution<S> {
    pub x: Vec<S>,
    pub objective: S,
    pub iterations: usize,
}

struct Tableau<S> {
    rows: usize,
    cols: usize,
    // (rows + 1) x (cols + 1); last row is the objective, last column the rhs
    t: Vec<S>,
    basis: Vec<usize>,
}

impl<S: Scalar> Tableau<S> {
    #[inline]
    fn at(&self, r: usize, c: usize) -> S {
        self.t[r * (self.cols + 1) + c]
    }

    #[inline]
    fn at_mut(&mut self, r: usize, c: usize) -> &mut S {
        &mut self.t[r * (self.cols + 1) + c]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let piv = self.at(pr, pc);
        for c in 0..w {
            *self.at_mut(pr, c) /= piv;
        }
        let prow: Vec<S> = self.t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f == S::zero() {
                continue;
            }
            let row = &mut self.t[r * w..(r + 1) * w];
            for (v, &p) in row.iter_mut().zip(&prow) {
                *v -= f * p;
            }
            row[pc] = S::zero();
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex pivots on the objective row over the allowed columns.
    fn optimize(&mut self, allowed: usize, max_iter: usize, iterations: &mut usize) -> Result<()> {
        let scale = (0..allowed)
            .map(|c| self.at(self.rows, c).abs())
            .fold(S::one(), S::max);
        let rc_tol = S::tol(1e-11) * scale;
        let piv_tol = S::tol(1e-11);
        let mut degenerate_run = 0usize;
        loop {
            let bland = degenerate_run > 50;
            let mut enter = None;
            let mut best = -rc_tol;
            for c in 0..allowed {
                let r = self.at(self.rows, c);
                if r < best {
                    enter = Some(c);
                    if bland {
                        break;
                    }
                    best = r;
                }
            }
            let Some(pc) = enter else { return Ok(()) };
            let mut leave: Option<(usize, S)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > piv_tol {
                    let ratio = self.at(r, self.cols) / a;
                    let better = match leave {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio || (ratio == lratio && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((pr, ratio)) = leave else {
                return Err(OtError::InvalidArgument("linear program is unbounded".into()));
            };
            if ratio <= S::zero() {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(pr, pc);
            *iterations += 1;
            if *iterations > max_iter {
                return Err(OtError::NonConvergence {
                    iterations: *iterations,
                    residual: f64::NAN,
                });
            }
        }
    }
}

/// Solves a standard-form program; `b` may have any sign.
pub fn solve_standard<S: Scalar>(lp: &StandardForm<S>) -> Result<LpSolution<S>> {
    let m = lp.a.len();
    let n = lp.c.len();
    if lp.b.len() != m || lp.a.iter().any(|row| row.len() != n) {
        return Err(OtError::InvalidArgument("inconsistent program dimensions".into()));
    }
    let cols = n + m;
    let mut tab = Tableau {
        rows: m,
        cols,
        t: vec![S::zero(); (m + 1) * (cols + 1)],
        basis: (n..n + m).collect(),
    };
    for r in 0..m {
        let sign = if lp.b[r] < S::zero() { -S::one() } else { S::one() };
        for c in 0..n {
            *tab.at_mut(r, c) = sign * lp.a[r][c];
        }
        *tab.at_mut(r, n + r) = S::one();
        *tab.at_mut(r, cols) = sign * lp.b[r];
    }
    // phase one objective: sum of artificials, expressed in nonbasic columns
    for c in 0..=cols {
        if (n..n + m).contains(&c) {
            continue;
        }
        let s: S = (0..m).map(|r| tab.at(r, c)).sum();
        *tab.at_mut(m, c) = -s;
    }
    let max_iter = 50 * (m + cols) + 10_000;
    let mut iterations = 0;
    tab.optimize(cols, max_iter, &mut iterations)?;
    let infeasibility = -tab.at(m, cols);
    let b_scale = lp.b.iter().map(|b| b.abs()).fold(S::one(), S::max);
    if infeasibility > S::tol(1e-9) * b_scale {
        return Err(OtError::Infeasible);
    }

    // drive artificials out of the basis; rows where that is impossible are redundant
    let mut redundant = vec![false; m];
    for r in 0..m {
        if tab.basis[r] >= n {
            let pc = (0..n)
                .filter(|&c| tab.at(r, c).abs() > S::tol(1e-9))
                .max_by(|&a, &b| tab.at(r, a).abs().partial_cmp(&tab.at(r, b).abs()).unwrap());
            match pc {
                Some(pc) => tab.pivot(r, pc),
                None => redundant[r] = true,
            }
        }
    }
    // phase two: restrict to the original columns, zero out redundant rows
    for r in 0..m {
        if redundant[r] {
            for c in 0..=cols {
                *tab.at_mut(r, c) = S::zero();
            }
            *tab.at_mut(r, tab.basis[r]) = S::one();
        }
    }
    for c in 0..=cols {
        *tab.at_mut(m, c) = if c < n { lp.c[c] } else { S::zero() };
    }
    for r in 0..m {
        let bc = tab.basis[r];
        if bc < n {
            let f = tab.at(m, bc);
            if f != S::zero() {
                for c in 0..=cols {
                    let v = tab.at(r, c);
                    *tab.at_mut(m, c) -= f * v;
                }
            }
        }
    }
    tab.optimize(n, max_iter, &mut iterations)?;

    let mut x = vec![S::zero(); n];
    for r in 0..m {
        let bc = tab.basis[r];
        if bc < n {
            x[bc] = tab.at(r, cols).max(S::zero());
        }
    }
    let objective = x.iter().zip(&lp.c).map(|(&xi, &ci)| xi * ci).sum();
    Ok(LpSolution {
        x,
        objective,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_program() {
        // min -x - y, x + 2y + s1 = 4, 3x + y + s2 = 6
        let lp: StandardForm<f64> = StandardForm {
            a: vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]],
            b: vec![4.0, 6.0],
            c: vec![-1.0, -1.0, 0.0, 0.0],
        };
        let s = solve_standard(&lp).unwrap();
        assert!((s.objective + 2.8).abs() < 1e-12);
        assert!((s.x[0] - 1.6).abs() < 1e-12 && (s.x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        // 2x2 transportation with all four marginal rows
        let lp: StandardForm<f64> = StandardForm {
            a: vec![
                vec![1.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 1.0],
                vec![1.0, 0.0, 1.0, 0.0],
                vec![0.0, 1.0, 0.0, 1.0],
            ],
            b: vec![0.5, 0.5, 0.5, 0.5],
            c: vec![1.0, 0.0, 0.0, 1.0],
        };
        let s = solve_standard(&lp).unwrap();
        assert!(s.objective.abs() < 1e-14);
        assert!((s.x[1] - 0.5).abs() < 1e-14 && (s.x[2] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn infeasible() {
        let lp: StandardForm<f64> = StandardForm {
            a: vec![vec![1.0, 1.0]],
            b: vec![-1.0],
            c: vec![0.0, 0.0],
        };
        assert!(matches!(solve_standard(&lp), Err(OtError::Infeasible)));
    }
}

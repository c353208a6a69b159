//! Symmetric positive definite banded matrices with an in-place Cholesky solve.

use crate::scalar::Scalar;

/// Lower band of a symmetric matrix: `band[i * (bw + 1) + d]` holds `A[i][i - d]`.
#[derive(Debug, Clone)]
pub(crate) struct BandedSpd<S> {
    n: usize,
    bw: usize,
    band: Vec<S>,
}

impl<S: Scalar> BandedSpd<S> {
    pub(crate) fn zeros(n: usize, bw: usize) -> Self {
        BandedSpd {
            n,
            bw,
            band: vec![S::zero(); n * (bw + 1)],
        }
    }

    pub(crate) fn clear(&mut self) {
        self.band.iter_mut().for_each(|v| *v = S::zero());
    }

    /// Adds `v` to `A[i][j]` (and `A[j][i]`); `|i - j| <= bw`.
    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, v: S) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(r - c <= self.bw);
        self.band[r * (self.bw + 1) + (r - c)] += v;
    }

    #[inline]
    fn get(&self, r: usize, d: usize) -> S {
        self.band[r * (self.bw + 1) + d]
    }

    /// `self + lambda * other`, both with the same shape.
    pub(crate) fn add_scaled(&mut self, other: &Self, lambda: S) {
        for (a, &b) in self.band.iter_mut().zip(&other.band) {
            *a += lambda * b;
        }
    }

    #[cfg(test)]
    pub(crate) fn mul_vec(&self, x: &[S]) -> Vec<S> {
        let mut y = vec![S::zero(); self.n];
        for r in 0..self.n {
            y[r] += self.get(r, 0) * x[r];
            for d in 1..=self.bw.min(r) {
                let v = self.get(r, d);
                if v != S::zero() {
                    y[r] += v * x[r - d];
                    y[r - d] += v * x[r];
                }
            }
        }
        y
    }

    /// Cholesky factor `L` (stored in the same layout); `None` when a pivot is
    /// not positive.
    pub(crate) fn cholesky(mut self) -> Option<Self> {
        let (n, bw) = (self.n, self.bw);
        for r in 0..n {
            let lo = r.saturating_sub(bw);
            for c in lo..=r {
                // L[r][c] = (A[r][c] - sum_k L[r][k] L[c][k]) / L[c][c]
                let mut s = self.get(r, r - c);
                let klo = lo.max(c.saturating_sub(bw));
                for k in klo..c {
                    s -= self.get(r, r - k) * self.get(c, c - k);
                }
                let w = bw + 1;
                if c == r {
                    if !(s > S::zero()) || !s.is_finite() {
                        return None;
                    }
                    self.band[r * w] = s.sqrt();
                } else {
                    self.band[r * w + (r - c)] = s / self.get(c, 0);
                }
            }
        }
        Some(self)
    }

    /// Solves `L L^T x = b` with `self` a factor from [`Self::cholesky`].
    pub(crate) fn solve_factored(&self, b: &[S]) -> Vec<S> {
        let (n, bw) = (self.n, self.bw);
        let mut y = b.to_vec();
        for r in 0..n {
            let mut s = y[r];
            for k in r.saturating_sub(bw)..r {
                s -= self.get(r, r - k) * y[k];
            }
            y[r] = s / self.get(r, 0);
        }
        for r in (0..n).rev() {
            let mut s = y[r];
            for k in r + 1..(r + bw + 1).min(n) {
                s -= self.get(k, k - r) * y[k];
            }
            y[r] = s / self.get(r, 0);
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_solve() {
        // 1-D Dirichlet Laplacian
        let n = 6;
        let mut a = BandedSpd::<f64>::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let b = a.mul_vec(&x);
        let l = a.clone().cholesky().unwrap();
        let y = l.solve_factored(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn wider_band() {
        let n = 9;
        let bw = 3;
        let mut a = BandedSpd::<f64>::zeros(n, bw);
        for i in 0..n {
            a.add(i, i, 10.0 + i as f64);
            for d in 1..=bw.min(i) {
                a.add(i, i - d, 1.0 / (1.0 + d as f64 + i as f64));
            }
        }
        let x: Vec<f64> = (0..n).map(|i| 1.0 - 0.3 * i as f64).collect();
        let b = a.mul_vec(&x);
        let y = a.cholesky().unwrap().solve_factored(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-13);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut a = BandedSpd::<f64>::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.cholesky().is_none());
    }
}

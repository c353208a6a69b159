//! The p-Laplacian route to the transport density.
//!
//! The unknown `u` lives at cell centers with a ring of zero ghost values
//! around the grid. Each square of four neighbouring centers carries four
//! one-sided gradients, one per corner, each built from the two edges that
//! meet at that corner. The discrete energy is
//!
//! ```text
//! E(u) = sum_squares h^2/4 sum_corners |g|^p / p  -  h^2 sum_cells f u
//! ```
//!
//! which is invariant under the reflections of the grid and reduces to the
//! 5-point Laplacian for `p = 2`. It is minimized by damped Newton steps
//! (Hessian plus a multiple of the `p = 2` matrix, banded Cholesky) with an
//! Armijo line search, continued in `p`.

mod banded;

use serde::{Deserialize, Serialize};

use banded::BandedSpd;

use crate::error::{OtError, Result, SolveError};
use crate::grid::{GridField, GridSpec};
use crate::measures::DiscreteMeasure;
use crate::scalar::Scalar;

/// Relative tolerance on the residual sup-norm used by [`evans_gangbo_limit`].
pub const DEFAULT_TOL: f64 = 1e-7;
/// Newton iterations allowed per value of `p`.
pub const DEFAULT_MAX_ITER: usize = 500;
/// The potential is rescaled so that `max |grad u| <= 1 + slack`.
pub const LIPSCHITZ_SLACK: f64 = 0.05;
/// Half-width of the band `|grad u| in [1 - delta, 1 + delta]` in the eikonal check.
pub const EIKONAL_DELTA: f64 = 0.1;
/// Cells with `a > HIGH_A_FRACTION * max a` enter the eikonal check.
pub const HIGH_A_FRACTION: f64 = 0.1;
const FLUSH: f64 = 1e-300;
const ARMIJO: f64 = 1e-4;

/// Signed density `(mu - nu) / cell_area` of two planar point measures.
pub fn rasterize_signed_measure<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    spec: &GridSpec<S>,
) -> Result<GridField<S>> {
    for m in [mu, nu] {
        if m.dim() != 2 {
            return Err(OtError::DimensionMismatch {
                expected: 2,
                found: m.dim(),
            });
        }
    }
    let mut field = GridField::zeros(*spec);
    let area = spec.cell_area();
    for (offset, m, sign) in [(0, mu, S::one()), (mu.len(), nu, -S::one())] {
        for i in 0..m.len() {
            let (ix, iy) = spec
                .locate(m.point(i))
                .ok_or(OtError::SupportOutsideGrid { index: offset + i })?;
            field.values[spec.index(ix, iy)] += sign * m.weight(i) / area;
        }
    }
    Ok(field)
}

/// Square grid of `n x n` cells centred on the bounding box of both supports,
/// with half-width 1.5 times the box diagonal.
pub fn default_grid<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>, n: usize) -> Result<GridSpec<S>> {
    let mut lo = [S::infinity(); 2];
    let mut hi = [S::neg_infinity(); 2];
    for m in [mu, nu] {
        if m.dim() != 2 {
            return Err(OtError::DimensionMismatch {
                expected: 2,
                found: m.dim(),
            });
        }
        for p in m.points() {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
    }
    let half = S::lit(0.5);
    let center = [(lo[0] + hi[0]) * half, (lo[1] + hi[1]) * half];
    let diag = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt();
    let radius = if diag > S::zero() { S::lit(1.5) * diag } else { S::one() };
    GridSpec::covering_disc(center, radius, n)
}

/// One pass of the `[1 2 1] x [1 2 1] / 16` filter. Weight that would leave
/// the grid stays in its cell, so the total mass is unchanged.
pub fn smooth_once<S: Scalar>(field: &GridField<S>) -> GridField<S> {
    let spec = field.spec;
    let mut out = GridField::zeros(spec);
    let w = [S::lit(0.25), S::lit(0.5), S::lit(0.25)];
    for iy in 0..spec.ny {
        for ix in 0..spec.nx {
            let v = field.get(ix, iy);
            if v == S::zero() {
                continue;
            }
            for (dy, &wy) in w.iter().enumerate() {
                for (dx, &wx) in w.iter().enumerate() {
                    let tx = ix as isize + dx as isize - 1;
                    let ty = iy as isize + dy as isize - 1;
                    let inside = tx >= 0 && ty >= 0 && (tx as usize) < spec.nx && (ty as usize) < spec.ny;
                    let k = if inside {
                        spec.index(tx as usize, ty as usize)
                    } else {
                        spec.index(ix, iy)
                    };
                    out.values[k] += v * wx * wy;
                }
            }
        }
    }
    out
}

/// `-div(|grad u|^(p-2) grad u) = f` with zero boundary values.
#[derive(Debug, Clone)]
pub struct PdeProblem<S> {
    pub rhs: GridField<S>,
    pub radius: S,
    pub p: S,
}

impl<S: Scalar> PdeProblem<S> {
    /// Rejects `p < 2` and right-hand sides whose integral is not zero.
    pub fn new(rhs: GridField<S>, radius: S, p: S) -> Result<Self> {
        if !(p >= S::lit(2.0)) || !p.is_finite() {
            return Err(OtError::InvalidArgument(format!("p must be >= 2, got {p}")));
        }
        if !(radius > S::zero()) || !radius.is_finite() {
            return Err(OtError::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        if rhs.values.iter().any(|v| !v.is_finite()) {
            return Err(OtError::NonFinite("right-hand side"));
        }
        let area = rhs.spec.cell_area();
        let total = rhs.integral();
        let size: S = rhs.values.iter().map(|v| v.abs()).sum::<S>() * area;
        if total.abs() > S::tol(1e-10) * size.max(S::one()) {
            return Err(OtError::Incompatible(format!(
                "right-hand side integrates to {total}, expected 0"
            )));
        }
        Ok(PdeProblem { rhs, radius, p })
    }
}

const GHOST: usize = usize::MAX;

/// A corner gradient `((u[xp] - u[xm]) / h, (u[yp] - u[ym]) / h)` owned by cell `owner`.
#[derive(Debug, Clone, Copy)]
struct Corner {
    xm: usize,
    xp: usize,
    ym: usize,
    yp: usize,
    owner: usize,
}

struct Stencil<S> {
    spec: GridSpec<S>,
    corners: Vec<Corner>,
    /// `p = 2` Hessian, used for damping.
    laplacian: BandedSpd<S>,
}

#[inline]
fn val<S: Scalar>(u: &[S], k: usize) -> S {
    if k == GHOST {
        S::zero()
    } else {
        u[k]
    }
}

/// `t^q` for `t >= 0` through logarithms; tiny results are flushed to zero.
#[inline]
fn pow_abs<S: Scalar>(t: S, q: S) -> S {
    if q == S::zero() {
        return S::one();
    }
    if t <= S::zero() {
        return S::zero();
    }
    let v = (q * t.ln()).exp();
    if v < S::lit(FLUSH) {
        S::zero()
    } else {
        v
    }
}

impl<S: Scalar> Stencil<S> {
    fn new(spec: GridSpec<S>) -> Self {
        let (nx, ny) = (spec.nx as isize, spec.ny as isize);
        let idx = |i: isize, j: isize| -> usize {
            if i < 0 || j < 0 || i >= nx || j >= ny {
                GHOST
            } else {
                spec.index(i as usize, j as usize)
            }
        };
        let mut corners = Vec::with_capacity(4 * (spec.nx + 1) * (spec.ny + 1));
        for j in -1..ny {
            for i in -1..nx {
                let (k00, k10, k01, k11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
                for c in [
                    Corner { xm: k00, xp: k10, ym: k00, yp: k01, owner: k00 },
                    Corner { xm: k00, xp: k10, ym: k10, yp: k11, owner: k10 },
                    Corner { xm: k01, xp: k11, ym: k00, yp: k01, owner: k01 },
                    Corner { xm: k01, xp: k11, ym: k10, yp: k11, owner: k11 },
                ] {
                    if [c.xm, c.xp, c.ym, c.yp].iter().any(|&k| k != GHOST) {
                        corners.push(c);
                    }
                }
            }
        }
        let mut st = Stencil {
            spec,
            corners,
            laplacian: BandedSpd::zeros(spec.cells(), spec.nx + 1),
        };
        let zero = vec![S::zero(); spec.cells()];
        let mut lap = BandedSpd::zeros(spec.cells(), spec.nx + 1);
        st.hessian(&zero, S::lit(2.0), &mut lap);
        st.laplacian = lap;
        st
    }

    #[inline]
    fn gradient_at(&self, u: &[S], c: &Corner) -> (S, S) {
        let h = self.spec.cell_size;
        ((val(u, c.xp) - val(u, c.xm)) / h, (val(u, c.yp) - val(u, c.ym)) / h)
    }

    fn energy(&self, u: &[S], f: &[S], p: S) -> S {
        let h2 = self.spec.cell_area();
        let quarter = S::lit(0.25);
        let mut e = S::zero();
        for c in &self.corners {
            let (gx, gy) = self.gradient_at(u, c);
            e += pow_abs(gx.hypot(gy), p);
        }
        let lin: S = u.iter().zip(f).map(|(&a, &b)| a * b).sum();
        h2 * quarter * e / p - h2 * lin
    }

    /// Energy gradient with respect to the cell values.
    fn energy_gradient(&self, u: &[S], f: &[S], p: S) -> Vec<S> {
        let h = self.spec.cell_size;
        let h2 = h * h;
        let mut grad: Vec<S> = f.iter().map(|&v| -h2 * v).collect();
        let q = S::lit(0.25) * h;
        for c in &self.corners {
            let (gx, gy) = self.gradient_at(u, c);
            let a = pow_abs(gx.hypot(gy), p - S::lit(2.0));
            if a == S::zero() {
                continue;
            }
            let (wx, wy) = (q * a * gx, q * a * gy);
            for (k, w) in [(c.xp, wx), (c.xm, -wx), (c.yp, wy), (c.ym, -wy)] {
                if k != GHOST {
                    grad[k] += w;
                }
            }
        }
        grad
    }

    fn hessian(&self, u: &[S], p: S, out: &mut BandedSpd<S>) {
        out.clear();
        let two = S::lit(2.0);
        let quarter = S::lit(0.25);
        for c in &self.corners {
            let (gx, gy) = self.gradient_at(u, c);
            let norm = gx.hypot(gy);
            let a = pow_abs(norm, p - two);
            if a == S::zero() {
                continue;
            }
            let (mut m11, mut m12, mut m22) = (a, S::zero(), a);
            if p != two && norm > S::zero() {
                let (ex, ey) = (gx / norm, gy / norm);
                let b = (p - two) * a;
                m11 += b * ex * ex;
                m12 += b * ex * ey;
                m22 += b * ey * ey;
            }
            // local cells with their coefficients in the x and y differences
            let mut cells: [(usize, S, S); 4] = [(GHOST, S::zero(), S::zero()); 4];
            let mut len = 0;
            for (k, cx, cy) in [
                (c.xp, S::one(), S::zero()),
                (c.xm, -S::one(), S::zero()),
                (c.yp, S::zero(), S::one()),
                (c.ym, S::zero(), -S::one()),
            ] {
                if k == GHOST {
                    continue;
                }
                match cells[..len].iter_mut().find(|e| e.0 == k) {
                    Some(e) => {
                        e.1 += cx;
                        e.2 += cy;
                    }
                    None => {
                        cells[len] = (k, cx, cy);
                        len += 1;
                    }
                }
            }
            for l in 0..len {
                for m in 0..=l {
                    let (kl, xl, yl) = cells[l];
                    let (km, xm, ym) = cells[m];
                    let v = quarter * (m11 * xl * xm + m12 * (xl * ym + yl * xm) + m22 * yl * ym);
                    if v != S::zero() {
                        out.add(kl, km, v);
                    }
                }
            }
        }
    }

    /// Per-cell averages over the four corners owned by each cell of
    /// `|g|^(p-2)` and of `|g|`, and the largest corner `|g|`.
    fn cell_fields(&self, u: &[S], p: S) -> (Vec<S>, Vec<S>, S) {
        let n = self.spec.cells();
        let mut a = vec![S::zero(); n];
        let mut g = vec![S::zero(); n];
        let mut sup = S::zero();
        let quarter = S::lit(0.25);
        for c in &self.corners {
            let (gx, gy) = self.gradient_at(u, c);
            let norm = gx.hypot(gy);
            sup = sup.max(norm);
            if c.owner != GHOST {
                a[c.owner] += quarter * pow_abs(norm, p - S::lit(2.0));
                g[c.owner] += quarter * norm;
            }
        }
        (a, g, sup)
    }
}

/// Statistics of one continuation level.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct LevelReport<S> {
    pub p: S,
    pub iterations: usize,
    /// Sup-norm of `-div(|grad u|^(p-2) grad u) - f` at the final iterate.
    pub residual: S,
    pub grad_sup: S,
    /// Energy after every accepted step, starting with the initial iterate.
    pub energies: Vec<S>,
    #[serde(skip)]
    pub u: Vec<S>,
}

struct LevelOutcome<S> {
    u: Vec<S>,
    report: LevelReport<S>,
    converged: bool,
}

fn sup_norm<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |m, &x| m.max(x.abs()))
}

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Damped Newton iteration for one value of `p`, started from `u0`.
fn solve_level<S: Scalar>(st: &Stencil<S>, f: &[S], p: S, u0: Vec<S>, tol: S, max_iter: usize) -> LevelOutcome<S> {
    let h2 = st.spec.cell_area();
    let n = st.spec.cells();
    let tol_abs = tol * sup_norm(f).max(S::one());
    let mut u = u0;
    let mut energy = st.energy(&u, f, p);
    let mut energies = vec![energy];
    let mut hess = BandedSpd::zeros(n, st.spec.nx + 1);
    let mut lambda = S::lit(1e-6);
    let mut iterations = 0;
    let mut converged = false;
    let mut residual;
    loop {
        let grad = st.energy_gradient(&u, f, p);
        residual = sup_norm(&grad) / h2;
        if residual <= tol_abs {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;
        st.hessian(&u, p, &mut hess);
        let mut accepted = false;
        while lambda < S::lit(1e12) {
            let mut a = hess.clone();
            a.add_scaled(&st.laplacian, lambda);
            let Some(l) = a.cholesky() else {
                lambda = lambda * S::lit(10.0);
                continue;
            };
            let rhs: Vec<S> = grad.iter().map(|&g| -g).collect();
            let d = l.solve_factored(&rhs);
            let slope = dot(&grad, &d);
            if !(slope < S::zero()) {
                lambda = lambda * S::lit(10.0);
                continue;
            }
            let mut t = S::one();
            while t > S::lit(1e-8) {
                let trial: Vec<S> = u.iter().zip(&d).map(|(&x, &dx)| x + t * dx).collect();
                let e = st.energy(&trial, f, p);
                if e.is_finite() && e <= energy + S::lit(ARMIJO) * t * slope {
                    u = trial;
                    energy = e;
                    accepted = true;
                    break;
                }
                t = t * S::lit(0.5);
            }
            if accepted {
                if t == S::one() {
                    lambda = (lambda * S::lit(0.25)).max(S::lit(1e-12));
                } else if t < S::lit(0.25) {
                    lambda = lambda * S::lit(4.0);
                }
                break;
            }
            lambda = lambda * S::lit(10.0);
        }
        if !accepted {
            // no descent left at working precision
            break;
        }
        energies.push(energy);
    }
    let (_, _, grad_sup) = st.cell_fields(&u, p);
    LevelOutcome {
        report: LevelReport {
            p,
            iterations,
            residual,
            grad_sup,
            energies,
            u: u.clone(),
        },
        u,
        converged,
    }
}

/// The `p` values `2, 4, 8, ...` below `p`, followed by `p` itself.
fn continuation<S: Scalar>(p: S) -> Vec<S> {
    let mut ps = vec![S::lit(2.0)];
    while ps[ps.len() - 1] * S::lit(2.0) < p {
        let next = ps[ps.len() - 1] * S::lit(2.0);
        ps.push(next);
    }
    if ps[ps.len() - 1] < p {
        ps.push(p);
    }
    ps
}

/// Minimizer of the discrete p-Dirichlet energy, reached by continuation in
/// `p` from the linear problem. Converged when the residual sup-norm is at
/// most `tol * max(1, max |f|)`.
pub fn solve_p_laplacian<S: Scalar>(
    problem: &PdeProblem<S>,
    tol: S,
) -> std::result::Result<GridField<S>, SolveError<GridField<S>>> {
    let spec = problem.rhs.spec;
    let st = Stencil::new(spec);
    let f = &problem.rhs.values;
    let mut u = vec![S::zero(); spec.cells()];
    for p in continuation(problem.p) {
        let out = solve_level(&st, f, p, u, tol, DEFAULT_MAX_ITER);
        u = out.u;
        if !out.converged {
            return Err(SolveError::NonConvergence {
                iterations: out.report.iterations,
                residual: out.report.residual.to_f64_lossy(),
                partial: Box::new(GridField { spec, values: u }),
            });
        }
    }
    Ok(GridField { spec, values: u })
}

/// Tunables of [`evans_gangbo_limit_with`].
#[derive(Debug, Clone, Copy)]
pub struct EgOptions<S> {
    pub tol: S,
    pub max_iter: usize,
    pub lipschitz_slack: S,
    pub eikonal_delta: S,
    /// Smoothing passes applied to the rasterized measures.
    pub smoothing_passes: usize,
}

impl<S: Scalar> Default for EgOptions<S> {
    fn default() -> Self {
        EgOptions {
            tol: S::lit(DEFAULT_TOL),
            max_iter: DEFAULT_MAX_ITER,
            lipschitz_slack: S::lit(LIPSCHITZ_SLACK),
            eikonal_delta: S::lit(EIKONAL_DELTA),
            smoothing_passes: 1,
        }
    }
}

/// Outcome of [`evans_gangbo_limit`].
#[derive(Debug, Clone)]
pub struct EgReport<S> {
    /// Rescaled potential with `max |grad u| <= 1 + slack`.
    pub u: GridField<S>,
    /// Cell averages of `|grad u_p|^(p-2) / scale`.
    pub a: GridField<S>,
    pub p_final: S,
    /// `h^2 sum |div(a grad u) + f|` with the corner coefficients.
    pub residual: S,
    /// `max |grad u|` after rescaling.
    pub grad_sup: S,
    /// Factor applied to `u_p`.
    pub scale: S,
    /// Fraction of cells with `a > 0.1 max a` where `|grad u|` is within `delta` of 1.
    pub eikonal_fraction: S,
    /// `h^2 sum u (mu - nu)` with the unsmoothed measures.
    pub dual_value: S,
    pub levels: Vec<LevelReport<S>>,
}

fn validate_p_schedule<S: Scalar>(ps: &[S]) -> Result<()> {
    if ps.is_empty() {
        return Err(OtError::InvalidSchedule("empty p schedule".into()));
    }
    if ps.iter().any(|&p| !(p >= S::lit(2.0)) || !p.is_finite()) {
        return Err(OtError::InvalidSchedule("p values must be finite and >= 2".into()));
    }
    if ps.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(OtError::InvalidSchedule("p values must be strictly increasing".into()));
    }
    Ok(())
}

/// [`evans_gangbo_limit_with`] with default options.
pub fn evans_gangbo_limit<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    spec: &GridSpec<S>,
    p_schedule: &[S],
) -> std::result::Result<EgReport<S>, SolveError<EgReport<S>>> {
    evans_gangbo_limit_with(mu, nu, spec, p_schedule, &EgOptions::default())
}

/// Solves the p-Laplace problem for `mu - nu` along `p_schedule` (warm
/// started, preceded by the linear problem) and extracts the potential and
/// the coefficient `a` at the last level.
pub fn evans_gangbo_limit_with<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    spec: &GridSpec<S>,
    p_schedule: &[S],
    opts: &EgOptions<S>,
) -> std::result::Result<EgReport<S>, SolveError<EgReport<S>>> {
    validate_p_schedule(p_schedule)?;
    let raw = rasterize_signed_measure(mu, nu, spec)?;
    let mut rhs = raw.clone();
    for _ in 0..opts.smoothing_passes {
        rhs = smooth_once(&rhs);
    }
    let radius = spec.width().min(spec.height()) * S::lit(0.5);
    let problem = PdeProblem::new(rhs, radius, p_schedule[p_schedule.len() - 1])?;
    let st = Stencil::new(*spec);
    let f = &problem.rhs.values;

    let mut ps = p_schedule.to_vec();
    if ps[0] > S::lit(2.0) {
        ps.insert(0, S::lit(2.0));
    }
    let mut u = vec![S::zero(); spec.cells()];
    let mut levels = Vec::with_capacity(ps.len());
    let mut failure = None;
    for &p in &ps {
        let out = solve_level(&st, f, p, u, opts.tol, opts.max_iter);
        u = out.u;
        levels.push(out.report);
        if !out.converged {
            failure = Some(levels.len() - 1);
            break;
        }
    }
    let last = &levels[levels.len() - 1];
    let report = extract(&st, &problem, &raw, u, last.p, levels.clone(), opts);
    match failure {
        None => Ok(report),
        Some(k) => Err(SolveError::NonConvergence {
            iterations: levels[k].iterations,
            residual: levels[k].residual.to_f64_lossy(),
            partial: Box::new(report),
        }),
    }
}

fn extract<S: Scalar>(
    st: &Stencil<S>,
    problem: &PdeProblem<S>,
    raw: &GridField<S>,
    u: Vec<S>,
    p: S,
    levels: Vec<LevelReport<S>>,
    opts: &EgOptions<S>,
) -> EgReport<S> {
    let spec = st.spec;
    let h2 = spec.cell_area();
    let (a_p, g_p, sup_p) = st.cell_fields(&u, p);
    let bound = S::one() + opts.lipschitz_slack;
    let scale = if sup_p > bound { bound / sup_p } else { S::one() };
    // flux a grad u is unchanged by the rescaling
    let a: Vec<S> = a_p.iter().map(|&v| v / scale).collect();
    let g: Vec<S> = g_p.iter().map(|&v| v * scale).collect();
    let u_s: Vec<S> = u.iter().map(|&v| v * scale).collect();
    let grad = st.energy_gradient(&u, &problem.rhs.values, p);
    let residual: S = grad.iter().map(|v| v.abs()).sum();

    let a_max = a.iter().copied().fold(S::zero(), S::max);
    let threshold = S::lit(HIGH_A_FRACTION) * a_max;
    let (mut high, mut good) = (0usize, 0usize);
    if a_max > S::zero() {
        for (&ak, &gk) in a.iter().zip(&g) {
            if ak > threshold {
                high += 1;
                if (gk - S::one()).abs() <= opts.eikonal_delta {
                    good += 1;
                }
            }
        }
    }
    let eikonal_fraction = if high == 0 {
        S::zero()
    } else {
        S::from_count(good) / S::from_count(high)
    };
    let dual_value = h2 * dot(&u_s, &raw.values);
    EgReport {
        u: GridField { spec, values: u_s },
        a: GridField { spec, values: a },
        p_final: p,
        residual,
        grad_sup: sup_p * scale,
        scale,
        eikonal_fraction,
        dual_value,
        levels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec<f64> {
        GridSpec::new([-1.0, -1.0], 2.0 / n as f64, n, n).unwrap()
    }

    #[test]
    fn rasterize_opposite_cells() {
        let g = grid(4);
        let mu = DiscreteMeasure::dirac(g.cell_center(0, 0).to_vec()).unwrap();
        let nu = DiscreteMeasure::dirac(g.cell_center(3, 2).to_vec()).unwrap();
        let f = rasterize_signed_measure(&mu, &nu, &g).unwrap();
        let inv = 1.0 / g.cell_area();
        assert_eq!(f.get(0, 0), inv);
        assert_eq!(f.get(3, 2), -inv);
        assert_eq!(f.values.iter().filter(|&&v| v != 0.0).count(), 2);
        let far = DiscreteMeasure::dirac(vec![5.0, 0.0]).unwrap();
        assert!(rasterize_signed_measure(&mu, &far, &g).is_err());
    }

    #[test]
    fn smoothing_keeps_mass() {
        let g = grid(5);
        let mut f = GridField::zeros(g);
        f.values[0] = 1.0;
        f.values[12] = -3.0;
        let s = smooth_once(&f);
        assert!((s.sum() - f.sum()).abs() < 1e-15);
        assert_eq!(s.get(2, 2), -3.0 * 0.25);
    }

    #[test]
    fn incompatible_rhs_rejected() {
        let g = grid(4);
        let mut f = GridField::zeros(g);
        f.values[3] = 1.0;
        assert!(matches!(PdeProblem::new(f, 1.0, 4.0), Err(OtError::Incompatible(_))));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let p = PdeProblem::new(GridField::zeros(grid(6)), 1.0, 8.0).unwrap();
        let u = solve_p_laplacian(&p, 1e-10).unwrap();
        assert!(u.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn energy_gradient_matches_differences() {
        let g = grid(4);
        let st = Stencil::new(g);
        let u: Vec<f64> = (0..16).map(|k| ((k * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let f: Vec<f64> = (0..16).map(|k| (k as f64 - 7.5) * 0.1).collect();
        for &p in &[2.0, 3.5, 8.0] {
            let grad = st.energy_gradient(&u, &f, p);
            for k in 0..16 {
                let step = 1e-6;
                let mut up = u.clone();
                up[k] += step;
                let mut dn = u.clone();
                dn[k] -= step;
                let fd = (st.energy(&up, &f, p) - st.energy(&dn, &f, p)) / (2.0 * step);
                assert!((fd - grad[k]).abs() < 1e-6 * (1.0 + grad[k].abs()), "p={p} k={k}");
            }
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let g = grid(3);
        let st = Stencil::new(g);
        let u: Vec<f64> = (0..9).map(|k| ((k * 5 % 7) as f64 - 3.0) * 0.2).collect();
        let f = vec![0.0; 9];
        let p = 5.0;
        let mut h = BandedSpd::zeros(9, 4);
        st.hessian(&u, p, &mut h);
        for k in 0..9 {
            let step = 1e-6;
            let mut e = vec![0.0; 9];
            e[k] = 1.0;
            let col = h.mul_vec(&e);
            let mut up = u.clone();
            up[k] += step;
            let mut dn = u.clone();
            dn[k] -= step;
            let gp = st.energy_gradient(&up, &f, p);
            let gm = st.energy_gradient(&dn, &f, p);
            for r in 0..9 {
                let fd = (gp[r] - gm[r]) / (2.0 * step);
                assert!((fd - col[r]).abs() < 1e-5 * (1.0 + fd.abs()), "k={k} r={r}");
            }
        }
    }

    #[test]
    fn p_two_is_five_point_laplacian() {
        let g = grid(5);
        let st = Stencil::new(g);
        let n = 25;
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let col = st.laplacian.mul_vec(&e);
            let (ix, iy) = (k % 5, k / 5);
            for (r, &v) in col.iter().enumerate() {
                let (rx, ry) = (r % 5, r / 5);
                let dist = ix.abs_diff(rx) + iy.abs_diff(ry);
                let expected = match dist {
                    0 => 4.0,
                    1 => -1.0,
                    _ => 0.0,
                };
                assert!((v - expected).abs() < 1e-14, "k={k} r={r} v={v}");
            }
        }
    }

    #[test]
    fn continuation_values() {
        assert_eq!(continuation(2.0), vec![2.0]);
        assert_eq!(continuation(8.0), vec![2.0, 4.0, 8.0]);
        assert_eq!(continuation(10.0), vec![2.0, 4.0, 8.0, 10.0]);
    }
}

//! Transport density of a plan on a planar grid: each cell receives
//! `sum gamma_ij * length([x_i, y_j] ∩ cell)`.

use crate::error::{OtError, Result};
use crate::grid::{GridField, GridSpec};
use crate::measures::{euclidean, TransportPlan};
use crate::scalar::Scalar;

/// Grid lines `origin + k h`, `k = 0..=n`, crossed by the coordinate as it
/// moves from `a` to `b`, as segment parameters in `(0, 1)`.
fn crossings<S: Scalar>(a: S, b: S, origin: S, h: S, n: usize, out: &mut Vec<S>) {
    if a == b {
        return;
    }
    let fa = (a - origin) / h;
    let fb = (b - origin) / h;
    let lo = fa.min(fb).ceil().max(S::zero());
    let hi = fa.max(fb).floor().min(S::from_count(n));
    if lo > hi {
        return;
    }
    let (lo, hi) = (lo.to_usize().unwrap_or(0), hi.to_usize().unwrap_or(0));
    for k in lo..=hi {
        let t = (S::from_count(k) - fa) / (fb - fa);
        if t > S::zero() && t < S::one() {
            out.push(t);
        }
    }
}

/// Cell index along one axis for a fractional coordinate. Values exactly on a
/// grid line belong to the lower cell (cell 0 on the first line).
fn axis_cell<S: Scalar>(f: S, n: usize) -> Option<usize> {
    if !(f >= S::zero()) || f > S::from_count(n) {
        return None;
    }
    let k = f.floor().to_usize()?;
    if f == f.floor() {
        Some(k.saturating_sub(1).min(n - 1))
    } else {
        Some(k.min(n - 1))
    }
}

/// Exact length of the segment `[x, y]` inside each cell it meets, in order of
/// traversal, and the length lying outside the grid.
///
/// A piece running along a shared cell edge is credited to the cell with the
/// lower index.
pub fn segment_cell_lengths<S: Scalar>(x: &[S], y: &[S], spec: &GridSpec<S>) -> (Vec<(usize, S)>, S) {
    let total = euclidean(x, y);
    if total == S::zero() {
        return (Vec::new(), S::zero());
    }
    let mut ts = vec![S::zero(), S::one()];
    crossings(x[0], y[0], spec.origin[0], spec.cell_size, spec.nx, &mut ts);
    crossings(x[1], y[1], spec.origin[1], spec.cell_size, spec.ny, &mut ts);
    ts.sort_by(|a, b| a.partial_cmp(b).expect("finite parameters"));
    ts.dedup();

    let half = S::lit(0.5);
    let mut cells: Vec<(usize, S)> = Vec::with_capacity(ts.len());
    let mut outside = S::zero();
    for w in ts.windows(2) {
        let len = (w[1] - w[0]) * total;
        if len <= S::zero() {
            continue;
        }
        let t = (w[0] + w[1]) * half;
        let px = x[0] + t * (y[0] - x[0]);
        let py = x[1] + t * (y[1] - x[1]);
        let mut fx = (px - spec.origin[0]) / spec.cell_size;
        let mut fy = (py - spec.origin[1]) / spec.cell_size;
        // a coordinate that is constant along the segment keeps its exact value,
        // so that pieces lying on a grid line are recognised as such
        if x[0] == y[0] {
            fx = (x[0] - spec.origin[0]) / spec.cell_size;
        }
        if x[1] == y[1] {
            fy = (x[1] - spec.origin[1]) / spec.cell_size;
        }
        match (axis_cell(fx, spec.nx), axis_cell(fy, spec.ny)) {
            (Some(ix), Some(iy)) => {
                let idx = spec.index(ix, iy);
                match cells.last_mut() {
                    Some((last, acc)) if *last == idx => *acc += len,
                    _ => cells.push((idx, len)),
                }
            }
            _ => outside += len,
        }
    }
    (cells, outside)
}

/// Transport density of a planar plan together with the mass that falls
/// outside the grid.
pub fn transport_density_field<S: Scalar>(plan: &TransportPlan<S>, spec: &GridSpec<S>) -> Result<(GridField<S>, S)> {
    for m in [plan.source(), plan.target()] {
        if m.dim() != 2 {
            return Err(OtError::DimensionMismatch {
                expected: 2,
                found: m.dim(),
            });
        }
    }
    let mut field = GridField::zeros(*spec);
    let mut outside = S::zero();
    for e in plan.entries() {
        let x = plan.source().point(e.source);
        let y = plan.target().point(e.target);
        let (cells, out) = segment_cell_lengths(x, y, spec);
        for (idx, len) in cells {
            field.values[idx] += e.mass * len;
        }
        outside += e.mass * out;
    }
    Ok((field, outside))
}

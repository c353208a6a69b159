//! Reference instances shared by tests, examples and the command line.

use crate::error::Result;
use crate::grid::GridSpec;
use crate::measures::{make_measure, DiscreteMeasure};
use crate::pde::default_grid;

/// `mu = (d_0 + d_1) / 2`, `nu = (d_1 + d_2) / 2` on the line. For the distance
/// cost the translation and the "move the book" plan tie.
pub fn book_shift() -> (DiscreteMeasure<f64>, DiscreteMeasure<f64>) {
    let line = |xs: &[f64]| xs.iter().map(|&x| vec![x]).collect::<Vec<_>>();
    (
        DiscreteMeasure::uniform(line(&[0.0, 1.0])).expect("valid"),
        DiscreteMeasure::uniform(line(&[1.0, 2.0])).expect("valid"),
    )
}

/// Cell centres of an `n x n` subdivision of the unit square translated by `offset`.
pub fn square_cells(n: usize, offset: [f64; 2]) -> Vec<Vec<f64>> {
    let h = 1.0 / n as f64;
    let mut pts = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            pts.push(vec![offset[0] + (ix as f64 + 0.5) * h, offset[1] + (iy as f64 + 0.5) * h]);
        }
    }
    pts
}

/// Uniform densities on two disjoint unit squares, discretized by `n x n`
/// equal-mass cells each. The target square sits at `(2, 0.5)`.
pub fn two_squares(n: usize) -> (DiscreteMeasure<f64>, DiscreteMeasure<f64>) {
    (
        DiscreteMeasure::uniform(square_cells(n, [0.0, 0.0])).expect("valid"),
        DiscreteMeasure::uniform(square_cells(n, [2.0, 0.5])).expect("valid"),
    )
}

/// Two disjoint smooth bumps sampled at the centres of their own grid.
#[derive(Debug, Clone)]
pub struct TwoBumps {
    pub mu: DiscreteMeasure<f64>,
    pub nu: DiscreteMeasure<f64>,
    pub grid: GridSpec<f64>,
}

pub const BUMP_RADIUS: f64 = 0.35;
pub const BUMP_CENTERS: [[f64; 2]; 2] = [[-0.45, 0.0], [0.45, 0.0]];

/// `(1 + cos(pi r / rho)) / 2` inside the disc of radius `rho`.
pub fn bump(x: &[f64], center: [f64; 2], rho: f64) -> f64 {
    let r = ((x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2)).sqrt();
    if r >= rho {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * r / rho).cos())
    }
}

/// The standard two-bump instance on an `n x n` grid: the grid is the default
/// one for the bounding box of both discs, and each bump is sampled at the
/// cell centres it covers.
pub fn two_bumps(n: usize) -> Result<TwoBumps> {
    let [a, b] = BUMP_CENTERS;
    let rho = BUMP_RADIUS;
    let corners = |c: [f64; 2]| vec![vec![c[0] - rho, c[1] - rho], vec![c[0] + rho, c[1] + rho]];
    let grid = default_grid(&DiscreteMeasure::uniform(corners(a))?, &DiscreteMeasure::uniform(corners(b))?, n)?;
    let sample = |c: [f64; 2]| -> Result<DiscreteMeasure<f64>> {
        let mut pts = Vec::new();
        let mut w = Vec::new();
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let x = grid.cell_center(ix, iy);
                let v = bump(&x, c, rho);
                if v > 0.0 {
                    pts.push(x.to_vec());
                    w.push(v);
                }
            }
        }
        make_measure(pts, w)
    };
    Ok(TwoBumps {
        mu: sample(a)?,
        nu: sample(b)?,
        grid,
    })
}

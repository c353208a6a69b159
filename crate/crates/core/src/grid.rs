//! Uniform rectangular grids in the plane and scalar fields on them.
//!
//! Cell `(ix, iy)` covers `[ox + ix h, ox + (ix + 1) h) x [oy + iy h, oy + (iy + 1) h)`
//! and is stored at `iy * nx + ix` (row-major, rows of constant `y`).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{OtError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct GridSpec<S> {
    pub origin: [S; 2],
    pub cell_size: S,
    pub nx: usize,
    pub ny: usize,
}

impl<S: Scalar> GridSpec<S> {
    pub fn new(origin: [S; 2], cell_size: S, nx: usize, ny: usize) -> Result<Self> {
        if !(cell_size > S::zero()) || !cell_size.is_finite() {
            return Err(OtError::InvalidArgument(format!("cell size must be positive, got {cell_size}")));
        }
        if nx == 0 || ny == 0 {
            return Err(OtError::InvalidArgument("grid needs at least one cell per axis".into()));
        }
        if !origin[0].is_finite() || !origin[1].is_finite() {
            return Err(OtError::NonFinite("grid origin"));
        }
        Ok(GridSpec {
            origin,
            cell_size,
            nx,
            ny,
        })
    }

    /// Square `n x n` grid covering the disc of radius `radius` around `center`.
    pub fn covering_disc(center: [S; 2], radius: S, n: usize) -> Result<Self> {
        let h = (radius + radius) / S::from_count(n);
        Self::new([center[0] - radius, center[1] - radius], h, n, n)
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_area(&self) -> S {
        self.cell_size * self.cell_size
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> [S; 2] {
        let half = S::lit(0.5);
        [
            self.origin[0] + (S::from_count(ix) + half) * self.cell_size,
            self.origin[1] + (S::from_count(iy) + half) * self.cell_size,
        ]
    }

    /// Cell containing `p`, if any (cells are half-open, the far border is included).
    pub fn locate(&self, p: &[S]) -> Option<(usize, usize)> {
        let fx = (p[0] - self.origin[0]) / self.cell_size;
        let fy = (p[1] - self.origin[1]) / self.cell_size;
        let clamp = |f: S, n: usize| -> Option<usize> {
            if f < S::zero() || f > S::from_count(n) || !f.is_finite() {
                return None;
            }
            Some(f.floor().to_usize().unwrap_or(0).min(n - 1))
        };
        Some((clamp(fx, self.nx)?, clamp(fy, self.ny)?))
    }

    pub fn width(&self) -> S {
        S::from_count(self.nx) * self.cell_size
    }

    pub fn height(&self) -> S {
        S::from_count(self.ny) * self.cell_size
    }
}

/// Scalar values, one per grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField<S> {
    pub spec: GridSpec<S>,
    pub values: Vec<S>,
}

/// JSON envelope written next to the CSV export.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
pub struct FieldEnvelope<S> {
    pub origin: [S; 2],
    pub cell_size: S,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<S>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub outside: Option<S>,
}

impl<S: Scalar> GridField<S> {
    pub fn zeros(spec: GridSpec<S>) -> Self {
        GridField {
            spec,
            values: vec![S::zero(); spec.cells()],
        }
    }

    pub fn from_values(spec: GridSpec<S>, values: Vec<S>) -> Result<Self> {
        if values.len() != spec.cells() {
            return Err(OtError::LengthMismatch {
                points: spec.cells(),
                weights: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(OtError::NonFinite("field values"));
        }
        Ok(GridField { spec, values })
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> S {
        self.values[self.spec.index(ix, iy)]
    }

    pub fn sum(&self) -> S {
        self.values.iter().copied().sum()
    }

    /// `sum value * cell_area`.
    pub fn integral(&self) -> S {
        self.sum() * self.spec.cell_area()
    }

    pub fn max(&self) -> S {
        self.values.iter().copied().fold(S::neg_infinity(), S::max)
    }

    pub fn scaled(&self, factor: S) -> Self {
        GridField {
            spec: self.spec,
            values: self.values.iter().map(|&v| v * factor).collect(),
        }
    }

    pub fn envelope(&self, outside: Option<S>) -> FieldEnvelope<S> {
        FieldEnvelope {
            origin: self.spec.origin,
            cell_size: self.spec.cell_size,
            nx: self.spec.nx,
            ny: self.spec.ny,
            values: self.values.clone(),
            outside,
        }
    }

    /// CSV export: a `#` header line with the geometry, then `ny` rows of `nx`
    /// comma separated values, starting at the row of smallest `y`.
    pub fn to_csv(&self) -> String {
        let s = &self.spec;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# origin_x={},origin_y={},cell_size={},nx={},ny={}",
            s.origin[0], s.origin[1], s.cell_size, s.nx, s.ny
        );
        for iy in 0..s.ny {
            for ix in 0..s.nx {
                if ix > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", self.get(ix, iy));
            }
            out.push('\n');
        }
        out
    }

    /// Pearson correlation of the cell values of two fields on the same grid.
    pub fn correlation(&self, other: &Self) -> S {
        let n = S::from_count(self.values.len());
        let ma = self.sum() / n;
        let mb = other.sum() / n;
        let (mut sab, mut saa, mut sbb) = (S::zero(), S::zero(), S::zero());
        for (&a, &b) in self.values.iter().zip(&other.values) {
            sab += (a - ma) * (b - mb);
            saa += (a - ma) * (a - ma);
            sbb += (b - mb) * (b - mb);
        }
        if saa == S::zero() || sbb == S::zero() {
            return S::zero();
        }
        sab / (saa.sqrt() * sbb.sqrt())
    }

    /// `sum |a - b|` over cells.
    pub fn l1_distance(&self, other: &Self) -> S {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).abs())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new([0.0, 0.0], 0.0, 2, 2).is_err());
        assert!(GridSpec::new([0.0, 0.0], 1.0, 0, 2).is_err());
    }

    #[test]
    fn locate_and_centers() {
        let g = GridSpec::new([0.0, 0.0], 0.5, 2, 3).unwrap();
        assert_eq!(g.locate(&[0.1, 0.1]), Some((0, 0)));
        assert_eq!(g.locate(&[0.5, 1.2]), Some((1, 2)));
        assert_eq!(g.locate(&[1.0, 1.5]), Some((1, 2)));
        assert_eq!(g.locate(&[1.01, 0.0]), None);
        assert_eq!(g.cell_center(1, 2), [0.75, 1.25]);
    }

    #[test]
    fn csv_layout() {
        let g = GridSpec::new([0.0, -1.0], 0.5, 2, 2).unwrap();
        let f = GridField::from_values(g, vec![1.0, 2.0, 3.0, 0.25]).unwrap();
        assert_eq!(
            f.to_csv(),
            "# origin_x=0,origin_y=-1,cell_size=0.5,nx=2,ny=2\n1,2\n3,0.25\n"
        );
    }
}

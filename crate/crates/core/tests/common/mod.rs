#![allow(dead_code)]

use otlab::measures::{make_measure, DiscreteMeasure};
use proptest::prelude::*;

/// Weights as integers in `1..=3`, points as integers on a coarse lattice
/// divided by `scale`, so that ties between costs actually occur.
pub fn lattice_measure(max_len: usize, dim: usize, scale: f64) -> impl Strategy<Value = DiscreteMeasure<f64>> {
    prop::collection::vec((prop::collection::vec(-6i32..=6, dim), 1u32..=3), 1..=max_len).prop_map(
        move |atoms| {
            let (pts, w): (Vec<Vec<f64>>, Vec<f64>) = atoms
                .into_iter()
                .map(|(p, w)| (p.into_iter().map(|c| c as f64 / scale).collect(), w as f64))
                .unzip();
            make_measure(pts, w).expect("valid measure")
        },
    )
}

/// Continuous coordinates in `[-1, 1]` and weights in `[0.05, 1]`.
pub fn real_measure(max_len: usize, dim: usize) -> impl Strategy<Value = DiscreteMeasure<f64>> {
    prop::collection::vec((prop::collection::vec(-1.0f64..1.0, dim), 0.05f64..1.0), 1..=max_len).prop_map(|atoms| {
        let (pts, w): (Vec<Vec<f64>>, Vec<f64>) = atoms.into_iter().unzip();
        make_measure(pts, w).expect("valid measure")
    })
}

pub fn line(xs: &[f64]) -> Vec<Vec<f64>> {
    xs.iter().map(|&x| vec![x]).collect()
}

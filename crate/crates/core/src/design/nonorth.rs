//! Recursive search for a vector that is not orthogonal to any vector of a set.

use crate::error::{Error, Result};
use crate::C64;

/// Relative threshold below which two vectors are treated as orthogonal.
const ORTH_TOL: f64 = 1e-12;

/// `⟨a, b⟩ = Σ conj(a_i) b_i`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Returns `x` with `⟨x, v⟩ ≠ 0` for every `v` in `vectors`.
///
/// The first vector is the pivot. Vectors orthogonal to it are handled by a
/// recursive call whose result `y` lies in their span (hence `⟨y, pivot⟩ = 0`);
/// the pivot is then scaled by one more than the largest ratio
/// `|⟨y, v⟩ / ⟨pivot, v⟩|` over the remaining vectors so no cancellation can
/// occur. An empty set yields the zero vector of length `dim`.
pub fn non_orth(dim: usize, vectors: &[Vec<C64>]) -> Result<Vec<C64>> {
    for (i, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::Dimension(format!("vector {i} has length {}, expected {dim}", v.len())));
        }
        if norm(v) == 0.0 {
            return Err(Error::Argument(format!("vector {i} is zero")));
        }
    }
    let refs: Vec<&[C64]> = vectors.iter().map(Vec::as_slice).collect();
    Ok(recurse(dim, &refs))
}

fn recurse(dim: usize, vs: &[&[C64]]) -> Vec<C64> {
    let Some((&pivot, rest)) = vs.split_first() else {
        return vec![C64::new(0.0, 0.0); dim];
    };
    let pn = norm(pivot);
    let (orth, tilted): (Vec<&[C64]>, Vec<&[C64]>) =
        rest.iter().partition(|v| inner(pivot, v).norm() <= ORTH_TOL * pn * norm(v));
    let y = recurse(dim, &orth);
    let scale = tilted.iter().map(|v| (inner(&y, v) / inner(pivot, v)).norm()).fold(0.0, f64::max) + 1.0;
    pivot.iter().zip(&y).map(|(p, q)| p * scale + q).collect()
}

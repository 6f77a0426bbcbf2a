//! Recovering a constellation vector from a lifted solution.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::sdp::Separation;
use crate::error::{Error, Result};
use crate::C64;

/// Margins at or below this are treated as a violated separation.
pub const MIN_MARGIN: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct RoundingParams {
    /// Gaussian randomization candidates drawn when the solution is not rank one.
    pub candidates: usize,
    /// `λ₂/λ₁` below which the solution is treated as rank one.
    pub rank_tol: f64,
}

impl Default for RoundingParams {
    fn default() -> Self {
        Self { candidates: 1000, rank_tol: 1e-6 }
    }
}

/// Margin of a vector: `min_p |⟨αₚ, x⟩|² / γₚ`.
pub fn vector_margin(x: &[C64], seps: &[Separation]) -> f64 {
    seps.iter()
        .map(|s| {
            let d: C64 = s.alpha.iter().map(|&(i, a)| x[i] * a).sum();
            d.norm_sqr() / s.gamma
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone)]
pub struct Extracted {
    pub x: Vec<C64>,
    pub margin: f64,
    pub rank_one: bool,
}

/// Extracts `x` with `‖x‖ ≤ 1` from a PSD matrix `w`.
///
/// A numerically rank-one `w` factors as `√λ₁ v₁`. Otherwise candidates
/// `g ~ CN(0, w)` are drawn, scaled to unit norm and ranked by margin; the
/// scaled principal eigenvector always takes part in the ranking.
pub fn extract<R: Rng + ?Sized>(
    w: &DMatrix<f64>,
    seps: &[Separation],
    params: &RoundingParams,
    rng: &mut R,
) -> Result<Extracted> {
    let n = w.nrows();
    if w.ncols() != n {
        return Err(Error::Dimension("W must be square".into()));
    }
    let sym = (w + w.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lam1 = eig.eigenvalues[order[0]];
    if lam1 <= 0.0 {
        return Err(Error::Argument("W has no positive eigenvalue".into()));
    }
    let min_ev = eig.eigenvalues.min();
    if min_ev < -1e-6 * lam1.max(1.0) {
        return Err(Error::Argument(format!("W is not PSD (λ_min = {min_ev:e})")));
    }
    let lam2 = if n > 1 { eig.eigenvalues[order[1]].max(0.0) } else { 0.0 };
    let v1 = eig.eigenvectors.column(order[0]);
    let principal: Vec<C64> = v1.iter().map(|&v| C64::new(v * lam1.sqrt(), 0.0)).collect();
    let rank_one = lam2 / lam1 < params.rank_tol;
    if rank_one {
        let margin = vector_margin(&principal, seps);
        if margin <= MIN_MARGIN {
            return Err(Error::Rounding);
        }
        return Ok(Extracted { x: principal, margin, rank_one });
    }

    let unit = |v: Vec<C64>| -> Vec<C64> {
        let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.into_iter().map(|c| c / norm).collect()
        } else {
            v
        }
    };
    let roots: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let mut best = unit(principal);
    let mut best_margin = vector_margin(&best, seps);
    for _ in 0..params.candidates {
        let mut g = vec![C64::new(0.0, 0.0); n];
        for (c, &root) in roots.iter().enumerate() {
            if root == 0.0 {
                continue;
            }
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let coef = C64::new(re, im) * (root * std::f64::consts::FRAC_1_SQRT_2);
            for (gi, &v) in g.iter_mut().zip(eig.eigenvectors.column(c).iter()) {
                *gi += coef * v;
            }
        }
        let g = unit(g);
        let m = vector_margin(&g, seps);
        if m > best_margin {
            best_margin = m;
            best = g;
        }
    }
    if !(best_margin > MIN_MARGIN) {
        return Err(Error::Rounding);
    }
    Ok(Extracted { x: best, margin: best_margin, rank_one })
}

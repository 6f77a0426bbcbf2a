//! Receive-antenna lower bounds and Monte Carlo checks of the concentration
//! behaviour they rely on.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::{complex_normal, draw_beamformers_with, draw_channels, transmit_and_combine};
use crate::config::{BoundInputs, EigenCheckConfig, TailCheckConfig};
use crate::error::{Error, Result};
use crate::rng::{beamformer_seed, substream, Role, SHARED_NODE};
use crate::C64;

fn log_term(b: &BoundInputs) -> f64 {
    (2.0 * b.k as f64 * (b.l as f64 + 1.0) / b.delta).ln()
}

fn ceil_count(x: f64) -> usize {
    // guard against 612.9999999 style rounding of exact products
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// `N_r ≥ max{ L K γ₁² γ₂ / ε² · ln(2K(L+1)/δ), L }`.
pub fn min_receive_antennas(b: &BoundInputs) -> usize {
    let (l, k) = (b.l as f64, b.k as f64);
    let n = l * k * b.gamma1.powi(2) * b.gamma2 / b.epsilon.powi(2) * log_term(b);
    ceil_count(n.max(l))
}

/// `N_r N_t ≥ L K max{ γ₁² γ₂ σ_z² c₀ / ε² · ln(2K(L+1)/δ), L }`.
pub fn min_antenna_product(b: &BoundInputs) -> usize {
    let (l, k) = (b.l as f64, b.k as f64);
    let inner = b.gamma1.powi(2) * b.gamma2 * b.sigma_z.powi(2) * b.c0 / b.epsilon.powi(2) * log_term(b);
    ceil_count(l * k * inner.max(l))
}

/// Both bounds as a small aligned table.
pub fn bound_table(b: &BoundInputs) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<24}{:>12}", "quantity", "value");
    for (name, v) in [
        ("L", b.l.to_string()),
        ("K", b.k.to_string()),
        ("gamma1", b.gamma1.to_string()),
        ("gamma2", b.gamma2.to_string()),
        ("epsilon", b.epsilon.to_string()),
        ("delta", b.delta.to_string()),
        ("sigma_z", b.sigma_z.to_string()),
        ("c0", b.c0.to_string()),
        ("min N_r", min_receive_antennas(b).to_string()),
        ("min N_r*N_t", min_antenna_product(b).to_string()),
    ] {
        let _ = writeln!(s, "{name:<24}{v:>12}");
    }
    s
}

/// Fractions of trials whose error stays within tolerance.
///
/// `p_total` uses `‖r − r̂‖ ≤ ε`; the per-term fractions give each of the
/// signal, interference and noise errors a third of the budget, so
/// `p_total ≥ 1 − Σ (1 − p_term)` by the triangle inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct TailProbabilities {
    pub p_total: f64,
    pub p_sig: f64,
    pub p_inter: f64,
    pub p_noise: f64,
    pub trials: usize,
    pub n_r: usize,
    pub n_t: usize,
}

impl TailProbabilities {
    pub fn to_csv(&self, cfg: &TailCheckConfig) -> String {
        let b = &cfg.bound;
        let mut s = String::new();
        for (k, v) in [
            ("L", b.l.to_string()),
            ("K", b.k.to_string()),
            ("epsilon", b.epsilon.to_string()),
            ("delta", b.delta.to_string()),
            ("sigma_z", b.sigma_z.to_string()),
            ("N_r", self.n_r.to_string()),
            ("N_t", self.n_t.to_string()),
            ("alpha_corr", cfg.alpha_corr.to_string()),
            ("beamformer", cfg.beamformer.to_string()),
            ("seed", cfg.seed.to_string()),
        ] {
            let _ = writeln!(s, "#{k}={v}");
        }
        s.push_str("p_total,p_sig,p_inter,p_noise,trials\n");
        let _ = writeln!(s, "{},{},{},{},{}", self.p_total, self.p_sig, self.p_inter, self.p_noise, self.trials);
        s
    }
}

/// Uniformly random unit-norm vector of length `l`.
fn unit_symbol<R: Rng + ?Sized>(rng: &mut R, l: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..l).map(|_| complex_normal(rng, 1.0)).collect();
    let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|c| c / n).collect()
}

/// Simulates `K` nodes sending random unit-norm symbol vectors and counts how
/// often the compensated estimate lands within `ε` of the true sum.
///
/// `N_r` defaults to [`min_receive_antennas`] and `N_t` to `max{σ_z², L}`.
pub fn empirical_tail_probability(cfg: &TailCheckConfig) -> Result<TailProbabilities> {
    let b = &cfg.bound;
    if cfg.trials < 100 {
        return Err(Error::config("tail checks need at least 100 trials"));
    }
    let n_r = cfg.n_r.unwrap_or_else(|| min_receive_antennas(b));
    let n_t = cfg.n_t.unwrap_or_else(|| (b.sigma_z.powi(2).ceil() as usize).max(b.l));
    let eps = b.epsilon;
    let flags = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let t64 = t as u64;
            let x: Vec<Vec<C64>> =
                (0..b.k).map(|k| unit_symbol(&mut substream(cfg.seed, t64, k as u64, Role::Inputs), b.l)).collect();
            let sigma_h = vec![1.0; b.k];
            let mut rng = substream(cfg.seed, t64, SHARED_NODE, Role::Channel);
            let ch = draw_channels(b.k, n_r, n_t, &sigma_h, cfg.alpha_corr, &mut rng)?;
            let seeds: Vec<u64> = (0..b.k as u64).map(|k| beamformer_seed(cfg.seed, t64, k)).collect();
            let bf = draw_beamformers_with(cfg.beamformer, n_t, b.l, &sigma_h, &seeds)?;
            let mut noise = substream(cfg.seed, t64, SHARED_NODE, Role::Noise);
            let rx = transmit_and_combine(&x, &ch, &bf, b.sigma_z, &mut noise)?;
            Ok([rx.error_norm() <= eps, rx.e_sig <= eps / 3.0, rx.e_inter <= eps / 3.0, rx.e_noise <= eps / 3.0])
        })
        .collect::<Result<Vec<[bool; 4]>>>()?;
    let frac = |i: usize| flags.iter().filter(|f| f[i]).count() as f64 / flags.len() as f64;
    Ok(TailProbabilities {
        p_total: frac(0),
        p_sig: frac(1),
        p_inter: frac(2),
        p_noise: frac(3),
        trials: cfg.trials,
        n_r,
        n_t,
    })
}

/// Extreme eigenvalues of `HᴴH/(N_r σ²)` and the size of the normalized cross
/// Gram matrix `H₁ᴴH₂/(N_r σ²)` over independent draws.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    pub n_r: usize,
    pub n_t: usize,
    pub trials: usize,
    /// `(λ_min, λ_max, ‖H₁ᴴH₂‖₂/(N_r σ²))` per trial.
    pub rows: Vec<(f64, f64, f64)>,
    pub envelope: (f64, f64),
    /// Every eigenvalue of every trial inside the envelope.
    pub eigen_ok: bool,
    /// Largest cross-term spectral norm; it must stay below the envelope
    /// half-width `3√(N_t/N_r)`.
    pub cross_max: f64,
    pub cross_ok: bool,
    /// Largest entry of the trial-averaged cross term, in units of its
    /// standard error.
    pub cross_mean_z: f64,
    pub cross_mean_ok: bool,
}

impl EigenReport {
    pub fn passed(&self) -> bool {
        self.eigen_ok && self.cross_ok && self.cross_mean_ok
    }

    pub fn to_csv(&self, cfg: &EigenCheckConfig) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "#N_r={}\n#N_t={}\n#sigma_h={}\n#trials={}\n#seed={}",
            self.n_r, self.n_t, cfg.sigma_h, self.trials, cfg.seed
        );
        let _ = writeln!(s, "#envelope={},{}", self.envelope.0, self.envelope.1);
        let _ = writeln!(s, "#eigen_ok={}\n#cross_max={}\n#cross_ok={}", self.eigen_ok, self.cross_max, self.cross_ok);
        let _ = writeln!(s, "#cross_mean_z={}\n#cross_mean_ok={}", self.cross_mean_z, self.cross_mean_ok);
        s.push_str("trial,lambda_min,lambda_max,cross_norm\n");
        for (t, (lo, hi, c)) in self.rows.iter().enumerate() {
            let _ = writeln!(s, "{t},{lo:.16e},{hi:.16e},{c:.16e}");
        }
        s
    }
}

fn spectral_norm(m: &DMatrix<C64>) -> f64 {
    m.singular_values().max()
}

pub fn eigen_concentration_check(cfg: &EigenCheckConfig) -> Result<EigenReport> {
    let (n_r, n_t) = (cfg.n_r, cfg.n_t);
    if n_t == 0 || n_r < n_t || cfg.trials == 0 {
        return Err(Error::config("need N_r ≥ N_t ≥ 1 and trials ≥ 1"));
    }
    let scale = C64::from(n_r as f64 * cfg.sigma_h * cfg.sigma_h);
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = substream(cfg.seed, t as u64, SHARED_NODE, Role::Channel);
            let ch = draw_channels(2, n_r, n_t, &[cfg.sigma_h; 2], 0.0, &mut rng)?;
            let gram = ch.h[0].ad_mul(&ch.h[0]) / scale;
            let eig = gram.symmetric_eigenvalues();
            let cross = ch.h[0].ad_mul(&ch.h[1]) / scale;
            Ok(((eig.min(), eig.max(), spectral_norm(&cross)), cross))
        })
        .collect::<Result<Vec<_>>>()?;

    let half = 3.0 * (n_t as f64 / n_r as f64).sqrt();
    let envelope = (1.0 - half, 1.0 + half);
    let rows: Vec<(f64, f64, f64)> = per_trial.iter().map(|(r, _)| *r).collect();
    let eigen_ok = rows.iter().all(|&(lo, hi, _)| lo >= envelope.0 && hi <= envelope.1);
    let cross_max = rows.iter().map(|r| r.2).fold(0.0, f64::max);

    // entrywise z-score of the sample mean of the cross term
    let tf = cfg.trials as f64;
    let mut cross_mean_z: f64 = 0.0;
    for i in 0..n_t {
        for j in 0..n_t {
            for part in [|c: C64| c.re, |c: C64| c.im] {
                let vals: Vec<f64> = per_trial.iter().map(|(_, m)| part(m[(i, j)])).collect();
                let mean = vals.iter().sum::<f64>() / tf;
                let var = if cfg.trials > 1 {
                    vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (tf - 1.0)
                } else {
                    f64::INFINITY
                };
                let se = (var / tf).sqrt();
                if se > 0.0 {
                    cross_mean_z = cross_mean_z.max(mean.abs() / se);
                }
            }
        }
    }
    Ok(EigenReport {
        n_r,
        n_t,
        trials: cfg.trials,
        rows,
        envelope,
        eigen_ok,
        cross_max,
        cross_ok: cross_max < half,
        cross_mean_z,
        cross_mean_ok: cross_mean_z < 4.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::BeamformerKind;
    use proptest::prelude::*;

    fn inputs(l: usize, k: usize, g1: f64, g2: f64, eps: f64, delta: f64) -> BoundInputs {
        BoundInputs { l, k, gamma1: g1, gamma2: g2, epsilon: eps, delta, sigma_z: 1.0, c0: 2.0 }
    }

    #[test]
    fn receive_bound_examples() {
        assert_eq!(min_receive_antennas(&inputs(1, 1, 1.0, 1.0, 1.0, 0.5)), 3);
        assert_eq!(min_receive_antennas(&BoundInputs::unit(2, 2, 0.5, 0.1)), 613);
        assert_eq!((128.0 * 120f64.ln()).ceil(), 613.0);
        assert_eq!(min_receive_antennas(&inputs(7, 2, 1.0, 1.0, 1e9, 0.5)), 7);
    }

    #[test]
    fn product_bound_examples() {
        let mut b = inputs(1, 1, 1.0, 1.0, 1.0, 0.5);
        assert_eq!(min_antenna_product(&b), 5);
        b.epsilon = 1e9;
        b.l = 3;
        assert_eq!(min_antenna_product(&b), 9);

        let mut b = inputs(2, 3, 3.0, 3.0, 0.1, 0.05);
        let base = min_antenna_product(&b) as f64;
        b.sigma_z = 2.0;
        let doubled = min_antenna_product(&b) as f64;
        assert!((doubled / base - 4.0).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn receive_bound_is_monotone(
            l in 1usize..6, k in 1usize..6, g in 1.0f64..4.0, eps in 0.05f64..2.0, delta in 0.01f64..0.9,
        ) {
            let b = inputs(l, k, g, g, eps, delta);
            let n = min_receive_antennas(&b);
            prop_assert!(min_receive_antennas(&inputs(l, k, g, g, eps * 1.5, delta)) <= n);
            prop_assert!(min_receive_antennas(&inputs(l, k, g, g, eps, delta * 1.05)) <= n);
            prop_assert!(min_receive_antennas(&inputs(l + 1, k, g, g, eps, delta)) >= n);
            prop_assert!(min_receive_antennas(&inputs(l, k + 1, g, g, eps, delta)) >= n);
            prop_assert!(min_receive_antennas(&inputs(l, k, g * 1.1, g, eps, delta)) >= n);
            prop_assert!(min_receive_antennas(&inputs(l, k, g, g * 1.1, eps, delta)) >= n);
        }

        #[test]
        fn doubling_epsilon_quarters_the_unfloored_bound(eps in 0.01f64..0.2) {
            let b = inputs(2, 3, 3.0, 3.0, eps, 0.1);
            let raw = |e: f64| 2.0 * 3.0 * 27.0 / (e * e) * log_term(&b);
            prop_assert!((raw(eps) / raw(2.0 * eps) - 4.0).abs() < 1e-12);
        }
    }

    fn tail_cfg(n_r: usize, eps: f64, sigma_z: f64, k: usize) -> TailCheckConfig {
        let mut bound = BoundInputs::unit(2, k, eps, 0.1);
        bound.sigma_z = sigma_z;
        TailCheckConfig {
            bound,
            n_r: Some(n_r),
            n_t: Some(2),
            alpha_corr: 0.0,
            beamformer: BeamformerKind::PowerNormalized,
            trials: 100,
            seed: 3,
        }
    }

    #[test]
    fn noiseless_single_node_has_no_noise_error() {
        let p = empirical_tail_probability(&tail_cfg(16, 0.1, 0.0, 1)).unwrap();
        assert_eq!(p.p_noise, 1.0);
        assert_eq!(p.p_inter, 1.0);
    }

    #[test]
    fn tiny_array_misses_tight_tolerance() {
        let mut cfg = tail_cfg(2, 0.01, 1.0, 2);
        cfg.beamformer = BeamformerKind::Gaussian;
        let p = empirical_tail_probability(&cfg).unwrap();
        assert!(p.p_total < 0.05, "{p:?}");
    }

    #[test]
    fn single_antenna_eigenvalue_is_near_one() {
        let cfg = EigenCheckConfig { n_r: 400, n_t: 1, sigma_h: 2.0, trials: 50, seed: 1 };
        let r = eigen_concentration_check(&cfg).unwrap();
        assert!(r.rows.iter().all(|&(lo, hi, _)| lo == hi));
        // each draw is a scaled chi-square with mean 1 and std 1/√N_r
        let mean = r.rows.iter().map(|r| r.0).sum::<f64>() / 50.0;
        assert!((mean - 1.0).abs() < 4.0 / (20.0 * 50f64.sqrt()), "{mean}");
        assert_eq!(r.envelope, (0.85, 1.15));
    }
}

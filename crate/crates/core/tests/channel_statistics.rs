//! Monte Carlo moment checks of the channel and precoder models.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use mimo_ota::channel::{
    build_combiner, draw_beamformers, draw_beamformers_with, draw_channels, transmit_and_combine, transmit_power,
    BeamformerKind,
};
use mimo_ota::rng::{substream, Role};
use mimo_ota::C64;

fn unit_symbols(l: usize, phase: f64) -> Vec<C64> {
    let s = 1.0 / (l as f64).sqrt();
    (0..l).map(|j| C64::from_polar(s, phase + j as f64)).collect()
}

#[test]
fn channel_entries_have_the_configured_covariance() {
    let (n_r, n_t, draws) = (64, 4, 500);
    let sigma = [1.0, 2.0];
    let alpha = 0.5;
    let (mut p0, mut p1, mut cross) = (0.0, 0.0, C64::new(0.0, 0.0));
    let mut n = 0.0;
    for t in 0..draws {
        let ch = draw_channels(2, n_r, n_t, &sigma, alpha, &mut substream(1, t, 0, Role::Channel)).unwrap();
        for (a, b) in ch.h[0].iter().zip(ch.h[1].iter()) {
            p0 += a.norm_sqr();
            p1 += b.norm_sqr();
            cross += a * b.conj();
            n += 1.0;
        }
    }
    assert!((p0 / n - 1.0).abs() < 0.02, "{}", p0 / n);
    assert!((p1 / n - 4.0).abs() < 0.08, "{}", p1 / n);
    // α σ₁ σ₂ = 1
    assert!((cross / n - 1.0).norm() < 0.04, "{}", cross / n);
}

#[test]
fn independent_channels_are_uncorrelated() {
    let mut cross = C64::new(0.0, 0.0);
    let mut n = 0.0;
    for t in 0..300 {
        let ch = draw_channels(2, 32, 4, &[1.0, 1.0], 0.0, &mut substream(2, t, 0, Role::Channel)).unwrap();
        for (a, b) in ch.h[0].iter().zip(ch.h[1].iter()) {
            cross += a * b.conj();
            n += 1.0;
        }
    }
    // standard error 1/√n ≈ 0.005
    assert!((cross / n).norm() < 0.025);
}

#[test]
fn gaussian_precoders_are_isotropic_on_average() {
    let (n_t, l, draws) = (4, 2, 10_000);
    let sigma_v = 2.0;
    let mut gram = DMatrix::<C64>::zeros(l, l);
    for t in 0..draws {
        let bf = draw_beamformers(n_t, l, &[1.0 / sigma_v], &[t as u64]).unwrap();
        gram += bf.v[0].ad_mul(&bf.v[0]);
    }
    gram /= C64::from(draws as f64);
    let expect = n_t as f64 * sigma_v * sigma_v;
    for i in 0..l {
        for j in 0..l {
            let target = if i == j { expect } else { 0.0 };
            assert!((gram[(i, j)] - target).norm() < 0.5, "({i},{j}) {}", gram[(i, j)]);
        }
    }
}

#[test]
fn precoders_regenerate_from_their_seed() {
    let a = draw_beamformers::<f64>(4, 3, &[1.0, 0.5], &[11, 12]).unwrap();
    let b = draw_beamformers::<f64>(4, 3, &[1.0, 0.5], &[11, 12]).unwrap();
    assert_eq!(a.v, b.v);
    assert_ne!(a.v[0], a.v[1]);
}

#[test]
fn power_normalized_transmit_power_is_fixed() {
    let n_t = 6;
    let bf = draw_beamformers_with(BeamformerKind::PowerNormalized, n_t, 3, &[0.5], &[3]).unwrap();
    let x = vec![C64::new(0.3, -0.4), C64::new(1.2, 0.0), C64::new(0.0, 0.5)];
    let norm_x = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let expect = 2.0 * norm_x / (n_t as f64).sqrt();
    assert!((transmit_power(&bf, 0, &x) - expect).abs() < 1e-12);
}

#[test]
fn received_terms_add_up_and_match_the_combiner() {
    let (k, n_r, n_t, l) = (3, 40, 5, 3);
    let sigma_h = [1.0, 0.7, 1.3];
    let ch = draw_channels(k, n_r, n_t, &sigma_h, 0.2, &mut substream(4, 0, 0, Role::Channel)).unwrap();
    let bf = draw_beamformers(n_t, l, &sigma_h, &[7, 8, 9]).unwrap();
    let x: Vec<Vec<C64>> = (0..k).map(|i| unit_symbols(l, i as f64)).collect();

    let rx = transmit_and_combine(&x, &ch, &bf, 0.3, &mut substream(4, 0, 0, Role::Noise)).unwrap();
    for j in 0..l {
        let total = rx.y_sig[j] + rx.y_inter[j] + rx.y_noise[j];
        assert!((total - rx.y[j]).norm() < 1e-12);
    }

    // noiseless output equals Uᴴ (Σ H_k V_k x_k) / N_t
    let quiet = transmit_and_combine(&x, &ch, &bf, 0.0, &mut substream(4, 0, 0, Role::Noise)).unwrap();
    let u = build_combiner(&ch, &bf).unwrap();
    let mut sent = DVector::<C64>::zeros(n_r);
    for ((h, v), xk) in ch.h.iter().zip(&bf.v).zip(&x) {
        sent += h * (v * DVector::from_column_slice(xk));
    }
    let expect = u.ad_mul(&sent) / Complex::from(n_t as f64);
    for j in 0..l {
        assert!((quiet.y[j] - expect[j]).norm() < 1e-10);
    }
}

#[test]
fn single_node_estimate_is_accurate_with_many_antennas() {
    let (n_r, n_t, l, trials) = (512, 4, 4, 200);
    let mut good = 0;
    for t in 0..trials {
        let ch = draw_channels(1, n_r, n_t, &[1.0], 0.0, &mut substream(5, t, 0, Role::Channel)).unwrap();
        let bf = draw_beamformers_with(BeamformerKind::PowerNormalized, n_t, l, &[1.0], &[t]).unwrap();
        let x = vec![unit_symbols(l, t as f64)];
        let rx = transmit_and_combine(&x, &ch, &bf, 0.0, &mut substream(5, t, 0, Role::Noise)).unwrap();
        if rx.error_norm() < 0.2 {
            good += 1;
        }
    }
    assert!(good as f64 >= 0.95 * trials as f64, "{good}/{trials}");
}

#[test]
fn interference_shrinks_with_receive_antennas() {
    let mean_inter = |n_r: usize| {
        let trials = 200;
        let mut acc = 0.0;
        for t in 0..trials {
            let ch = draw_channels(4, n_r, 4, &[1.0; 4], 0.0, &mut substream(6, t, 0, Role::Channel)).unwrap();
            let seeds: Vec<u64> = (0..4).map(|i| 10 * t + i).collect();
            let bf = draw_beamformers_with(BeamformerKind::PowerNormalized, 4, 2, &[1.0; 4], &seeds).unwrap();
            let x: Vec<Vec<C64>> = (0..4).map(|i| unit_symbols(2, i as f64)).collect();
            acc += transmit_and_combine(&x, &ch, &bf, 0.0, &mut substream(6, t, 0, Role::Noise)).unwrap().e_inter;
        }
        acc / trials as f64
    };
    let (small, large) = (mean_inter(64), mean_inter(1024));
    // interference scales like 1/√N_r: a factor of 4 here
    let ratio = small / large;
    assert!((3.2..4.8).contains(&ratio), "{small} {large} {ratio}");
}

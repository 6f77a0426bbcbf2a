//! Fading channels, random beamformers and the compensating receive combiner.
//!
//! Node `k` precodes its `L` symbols with `V_k ∈ C^{N_t×L}` and transmits over
//! `H_k ∈ C^{N_r×N_t}`. Writing `G_k = H_k V_k`, the receiver applies
//! `U = Σ_k G_k / N_r` and rescales by `1/N_t`:
//!
//! ```text
//!   y = (1/β) Σ_k' G_k'ᴴ (Σ_k G_k x_k + z),    β = N_r N_t
//! ```
//!
//! Because `E[G_kᴴ G_k] = N_r N_t I` when `σ_v² = 1/σ_h²`, and the cross terms
//! average out, `y` is an estimate of `Σ_k x_k` without any transmitter CSI.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use crate::config::BeamformerKind;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Draws `CN(0, σ²)`.
pub fn complex_normal<T: Real, R: Rng + ?Sized>(rng: &mut R, sigma: T) -> Complex<T> {
    let s = sigma * T::lit(std::f64::consts::FRAC_1_SQRT_2);
    Complex::new(T::standard_normal(rng) * s, T::standard_normal(rng) * s)
}

fn gaussian_matrix<T: Real, R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, sigma: T) -> DMatrix<Complex<T>> {
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut m = DMatrix::zeros(rows, cols);
    for c in 0..cols {
        for r in 0..rows {
            m[(r, c)] = complex_normal(rng, sigma);
        }
    }
    m
}

#[derive(Debug, Clone)]
pub struct ChannelRealization<T: Real> {
    /// `H_k`, each `N_r × N_t`.
    pub h: Vec<DMatrix<Complex<T>>>,
    /// Per-entry standard deviation `σ_{h,k}`.
    pub sigma_h: Vec<T>,
    pub alpha_corr: T,
}

impl<T: Real> ChannelRealization<T> {
    pub fn nodes(&self) -> usize {
        self.h.len()
    }

    pub fn rx_antennas(&self) -> usize {
        self.h[0].nrows()
    }

    pub fn tx_antennas(&self) -> usize {
        self.h[0].ncols()
    }
}

/// Samples `K` channels with per-entry variance `σ_{h,k}²`.
///
/// With `alpha_corr = α > 0` the channels share a common component,
/// `H_k = σ_{h,k} (√α Z₀ + √(1−α) Z_k)` with unit-variance `Z`, so that
/// `E[H_kᴴ H_k'] = N_r σ_{h,k} σ_{h,k'} α I` for `k ≠ k'`.
pub fn draw_channels<T: Real, R: Rng + ?Sized>(
    nodes: usize,
    n_r: usize,
    n_t: usize,
    sigma_h: &[T],
    alpha_corr: T,
    rng: &mut R,
) -> Result<ChannelRealization<T>> {
    if nodes == 0 || n_r == 0 || n_t == 0 {
        return Err(Error::Argument("K, N_r and N_t must be positive".into()));
    }
    if sigma_h.len() != nodes || sigma_h.iter().any(|&s| !(s > T::zero())) {
        return Err(Error::Argument(format!("need {nodes} positive channel deviations")));
    }
    if !(alpha_corr >= T::zero() && alpha_corr < T::one()) {
        return Err(Error::Argument(format!("correlation factor {alpha_corr} outside [0, 1)")));
    }
    let h = if alpha_corr == T::zero() {
        sigma_h.iter().map(|&s| gaussian_matrix(rng, n_r, n_t, s)).collect()
    } else {
        let shared = gaussian_matrix(rng, n_r, n_t, T::one()) * Complex::from(alpha_corr.sqrt());
        let own = (T::one() - alpha_corr).sqrt();
        sigma_h.iter().map(|&s| (&shared + gaussian_matrix(rng, n_r, n_t, own)) * Complex::from(s)).collect()
    };
    Ok(ChannelRealization { h, sigma_h: sigma_h.to_vec(), alpha_corr })
}

#[derive(Debug, Clone)]
pub struct BeamformerSet<T: Real> {
    /// `V_k`, each `N_t × L`.
    pub v: Vec<DMatrix<Complex<T>>>,
    pub seeds: Vec<u64>,
    /// Per-entry standard deviation `σ_{v,k} = 1/σ_{h,k}`.
    pub sigma_v: Vec<T>,
}

/// Samples node `k`'s precoder from its own seed, so the receiver can
/// regenerate it without any feedback.
pub fn draw_beamformers<T: Real>(n_t: usize, streams: usize, sigma_h: &[T], seeds: &[u64]) -> Result<BeamformerSet<T>> {
    if streams > n_t {
        return Err(Error::Dimension(format!("L = {streams} streams exceed N_t = {n_t} antennas")));
    }
    if streams == 0 || sigma_h.len() != seeds.len() {
        return Err(Error::Argument("need L ≥ 1 and one seed per node".into()));
    }
    let sigma_v: Vec<T> = sigma_h.iter().map(|&s| T::one() / s).collect();
    let v = seeds
        .iter()
        .zip(&sigma_v)
        .map(|(&seed, &s)| gaussian_matrix(&mut ChaCha8Rng::seed_from_u64(seed), n_t, streams, s))
        .collect();
    Ok(BeamformerSet { v, seeds: seeds.to_vec(), sigma_v })
}

/// Like [`draw_beamformers`], with the distribution chosen by `kind`.
///
/// `PowerNormalized` orthonormalizes the Gaussian draw column by column and
/// rescales it so that `V_kᴴ V_k = N_t σ_{v,k}² I` holds exactly. Every
/// unit-norm symbol vector then leaves the node with the same power, and the
/// isotropy and independence properties are kept.
pub fn draw_beamformers_with<T: Real>(
    kind: BeamformerKind,
    n_t: usize,
    streams: usize,
    sigma_h: &[T],
    seeds: &[u64],
) -> Result<BeamformerSet<T>> {
    let mut bf = draw_beamformers(n_t, streams, sigma_h, seeds)?;
    if kind == BeamformerKind::PowerNormalized {
        for (v, &s) in bf.v.iter_mut().zip(&bf.sigma_v) {
            orthonormalize_columns(v);
            *v *= Complex::from(s * T::lit(n_t as f64).sqrt());
        }
    }
    Ok(bf)
}

/// Modified Gram-Schmidt in place. A Gaussian draw has full column rank with
/// probability one.
fn orthonormalize_columns<T: Real>(v: &mut DMatrix<Complex<T>>) {
    for c in 0..v.ncols() {
        for p in 0..c {
            let proj = v.column(p).dotc(&v.column(c));
            let prev = v.column(p).clone_owned();
            v.column_mut(c).axpy(-proj, &prev, Complex::from(T::one()));
        }
        let n = v.column(c).norm();
        v.column_mut(c).unscale_mut(n);
    }
}

fn effective<T: Real>(ch: &ChannelRealization<T>, bf: &BeamformerSet<T>) -> Result<Vec<DMatrix<Complex<T>>>> {
    if ch.nodes() != bf.v.len() {
        return Err(Error::Dimension(format!("{} channels but {} beamformers", ch.nodes(), bf.v.len())));
    }
    ch.h.iter()
        .zip(&bf.v)
        .map(|(h, v)| {
            if h.ncols() != v.nrows() {
                return Err(Error::Dimension("beamformer rows must equal N_t".into()));
            }
            Ok(h * v)
        })
        .collect()
}

/// `U = Σ_k H_k V_k / N_r`, an `N_r × L` matrix applied as `Uᴴ`.
pub fn build_combiner<T: Real>(ch: &ChannelRealization<T>, bf: &BeamformerSet<T>) -> Result<DMatrix<Complex<T>>> {
    let g = effective(ch, bf)?;
    let mut u = g[0].clone();
    for gk in &g[1..] {
        u += gk;
    }
    Ok(u / Complex::from(T::from_usize(ch.rx_antennas()).expect("small integer")))
}

#[derive(Debug, Clone)]
pub struct ReceivedSignal<T: Real> {
    pub y: Vec<Complex<T>>,
    /// `(1/β) Σ_k G_kᴴ G_k x_k`.
    pub y_sig: Vec<Complex<T>>,
    /// `(1/β) Σ_{k' ≠ k} G_k'ᴴ G_k x_k`.
    pub y_inter: Vec<Complex<T>>,
    /// `(1/β) Σ_k G_kᴴ z`.
    pub y_noise: Vec<Complex<T>>,
    pub r_hat: Vec<Complex<T>>,
    /// `Σ_k x_k`.
    pub r_true: Vec<Complex<T>>,
    pub e_sig: T,
    pub e_inter: T,
    pub e_noise: T,
}

impl<T: Real> ReceivedSignal<T> {
    fn assemble(
        y_sig: Vec<Complex<T>>,
        y_inter: Vec<Complex<T>>,
        y_noise: Vec<Complex<T>>,
        r_true: Vec<Complex<T>>,
        y: Vec<Complex<T>>,
    ) -> Self {
        let e_sig = dist(&r_true, &y_sig);
        let e_inter = norm(&y_inter);
        let e_noise = norm(&y_noise);
        Self { r_hat: y.clone(), y, y_sig, y_inter, y_noise, r_true, e_sig, e_inter, e_noise }
    }

    /// `‖r − r̂‖₂`.
    pub fn error_norm(&self) -> T {
        dist(&self.r_true, &self.r_hat)
    }
}

fn norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, c| acc + c.norm_sqr()).sqrt()
}

fn dist<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + (x - y).norm_sqr()).sqrt()
}

fn sum_symbols<T: Real>(x_list: &[Vec<Complex<T>>], streams: usize) -> Result<Vec<Complex<T>>> {
    let mut r = vec![Complex::new(T::zero(), T::zero()); streams];
    for (k, x) in x_list.iter().enumerate() {
        if x.len() != streams {
            return Err(Error::Dimension(format!(
                "symbol vector of node {k} has length {}, expected {streams}",
                x.len()
            )));
        }
        for (acc, &v) in r.iter_mut().zip(x) {
            *acc += v;
        }
    }
    Ok(r)
}

/// Transmits `x_k` from every node, adds `CN(0, σ_z² I)` noise at the
/// receiver and applies the combiner.
pub fn transmit_and_combine<T: Real, R: Rng + ?Sized>(
    x_list: &[Vec<Complex<T>>],
    ch: &ChannelRealization<T>,
    bf: &BeamformerSet<T>,
    sigma_z: T,
    rng: &mut R,
) -> Result<ReceivedSignal<T>> {
    let g = effective(ch, bf)?;
    if x_list.len() != g.len() {
        return Err(Error::Dimension(format!("{} symbol vectors for {} nodes", x_list.len(), g.len())));
    }
    let streams = g[0].ncols();
    let r_true = sum_symbols(x_list, streams)?;
    let n_r = ch.rx_antennas();
    let beta = Complex::from(T::from_usize(n_r * ch.tx_antennas()).expect("small integer"));

    let mut s = DMatrix::<Complex<T>>::zeros(n_r, streams);
    let mut rx = DVector::<Complex<T>>::zeros(n_r);
    let mut own = DVector::<Complex<T>>::zeros(streams);
    for (gk, x) in g.iter().zip(x_list) {
        let gx = gk * DVector::from_column_slice(x);
        own += gk.ad_mul(&gx);
        rx += &gx;
        s += gk;
    }
    let all = s.ad_mul(&rx);
    let z = DVector::from_fn(n_r, |_, _| complex_normal(rng, sigma_z));
    let noise = s.ad_mul(&z);

    let scale = |v: DVector<Complex<T>>| -> Vec<Complex<T>> { v.iter().map(|&c| c / beta).collect() };
    let y_sig = scale(own.clone());
    let y_inter = scale(&all - &own);
    let y_noise = scale(noise.clone());
    let y = scale(all + noise);
    Ok(ReceivedSignal::assemble(y_sig, y_inter, y_noise, r_true, y))
}

/// Single-antenna multiple-access channel `y = Σ_k x_k + z` with `z ~ CN(0, σ_z² I_L)`.
pub fn awgn_receive<T: Real, R: Rng + ?Sized>(
    x_list: &[Vec<Complex<T>>],
    sigma_z: T,
    rng: &mut R,
) -> Result<ReceivedSignal<T>> {
    let streams = x_list.first().map_or(0, Vec::len);
    let r_true = sum_symbols(x_list, streams)?;
    let z: Vec<Complex<T>> = (0..streams).map(|_| complex_normal(rng, sigma_z)).collect();
    let y = r_true.iter().zip(&z).map(|(a, b)| a + b).collect();
    let zeros = vec![Complex::new(T::zero(), T::zero()); streams];
    Ok(ReceivedSignal::assemble(r_true.clone(), zeros, z, r_true, y))
}

/// The compensated estimate `r̂` of `Σ_k x_k`.
pub fn compensated_estimate<T: Real>(rx: &ReceivedSignal<T>) -> &[Complex<T>] {
    &rx.r_hat
}

/// Per-node transmit power `‖V_k x_k‖₂ / N_t`.
pub fn transmit_power<T: Real>(bf: &BeamformerSet<T>, node: usize, x: &[Complex<T>]) -> T {
    let v = &bf.v[node];
    let n_t = T::from_usize(v.nrows()).expect("small integer");
    norm((v * DVector::from_column_slice(x)).as_slice()) / n_t
}

/// Dumps every channel and beamformer entry as `matrix,node,row,col,re,im`.
pub fn realization_csv<T: Real>(ch: &ChannelRealization<T>, bf: &BeamformerSet<T>) -> String {
    let mut out = String::from("matrix,node,row,col,re,im\n");
    for (name, mats) in [("H", &ch.h), ("V", &bf.v)] {
        for (k, m) in mats.iter().enumerate() {
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    let z = m[(r, c)];
                    writeln!(out, "{name},{k},{r},{c},{:e},{:e}", z.re, z.im).expect("write to string");
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Role};

    type C = Complex<f64>;

    fn one(x: f64) -> DMatrix<C> {
        DMatrix::from_element(1, 1, C::new(x, 0.0))
    }

    #[test]
    fn scalar_identity_channel() {
        let ch = ChannelRealization { h: vec![one(1.0)], sigma_h: vec![1.0], alpha_corr: 0.0 };
        let bf = BeamformerSet { v: vec![one(1.0)], seeds: vec![0], sigma_v: vec![1.0] };
        let x = vec![vec![C::new(0.3, -0.7)]];
        let rx = transmit_and_combine(&x, &ch, &bf, 0.0, &mut substream(1, 0, 0, Role::Noise)).unwrap();
        assert_eq!(compensated_estimate(&rx), &x[0][..]);
        assert_eq!((rx.e_sig, rx.e_inter, rx.e_noise), (0.0, 0.0, 0.0));
    }

    #[test]
    fn combiner_examples() {
        let ch = ChannelRealization { h: vec![one(2.0)], sigma_h: vec![1.0], alpha_corr: 0.0 };
        let bf = BeamformerSet { v: vec![one(1.0)], seeds: vec![0], sigma_v: vec![1.0] };
        assert_eq!(build_combiner(&ch, &bf).unwrap(), one(2.0));

        let n = 3;
        let eye = DMatrix::<C>::identity(n, n);
        let ch = ChannelRealization { h: vec![eye.clone()], sigma_h: vec![1.0], alpha_corr: 0.0 };
        let bf = BeamformerSet { v: vec![eye.clone()], seeds: vec![0], sigma_v: vec![1.0] };
        // an identity link carries power 1 rather than N_r N_t, so U = I/N_r
        let u = build_combiner(&ch, &bf).unwrap();
        assert_eq!(u, eye / C::new(n as f64, 0.0));
    }

    #[test]
    fn combiner_is_sum_of_node_terms() {
        let mut rng = substream(3, 0, 0, Role::Channel);
        let sig = [1.0, 0.5, 2.0];
        let ch = draw_channels(3, 6, 4, &sig, 0.0, &mut rng).unwrap();
        let bf = draw_beamformers(4, 2, &sig, &[11, 12, 13]).unwrap();
        let u = build_combiner(&ch, &bf).unwrap();
        let mut expect = DMatrix::<C>::zeros(6, 2);
        for k in 0..3 {
            expect += &ch.h[k] * &bf.v[k] / C::new(6.0, 0.0);
        }
        assert!((u - expect).norm() < 1e-12);
    }

    #[test]
    fn decomposition_is_exact() {
        let mut rng = substream(5, 0, 0, Role::Channel);
        let sig = [1.0, 3.0];
        let ch = draw_channels(2, 8, 3, &sig, 0.4, &mut rng).unwrap();
        let bf = draw_beamformers(3, 3, &sig, &[1, 2]).unwrap();
        let x = vec![vec![C::new(1.0, 0.0), C::new(0.0, -1.0), C::new(0.5, 0.5)]; 2];
        let rx = transmit_and_combine(&x, &ch, &bf, 0.7, &mut rng).unwrap();
        let total: f64 = rx.y.iter().map(|c| c.norm()).sum();
        for i in 0..3 {
            let d = rx.y[i] - rx.y_sig[i] - rx.y_inter[i] - rx.y_noise[i];
            assert!(d.norm() <= 1e-12 * total);
        }
    }

    #[test]
    fn beamformers_regenerate_from_seed_and_reject_too_many_streams() {
        let a = draw_beamformers::<f64>(4, 2, &[1.0], &[99]).unwrap();
        let b = draw_beamformers::<f64>(4, 2, &[1.0], &[99]).unwrap();
        assert_eq!(a.v, b.v);
        assert!(matches!(draw_beamformers::<f64>(2, 3, &[1.0], &[1]), Err(Error::Dimension(_))));
    }

    #[test]
    fn f32_path_runs() {
        let mut rng = substream(5, 0, 0, Role::Channel);
        let ch = draw_channels::<f32, _>(2, 64, 2, &[1.0, 1.0], 0.0, &mut rng).unwrap();
        let bf = draw_beamformers::<f32>(2, 2, &[1.0, 1.0], &[1, 2]).unwrap();
        let x = vec![vec![Complex::new(0.6f32, 0.0), Complex::new(0.0, 0.8)]; 2];
        let rx = transmit_and_combine(&x, &ch, &bf, 0.0, &mut rng).unwrap();
        assert!(rx.error_norm() < 2.0);
    }

    #[test]
    fn power_normalized_gram_is_exact() {
        let bf = draw_beamformers_with::<f64>(BeamformerKind::PowerNormalized, 5, 3, &[2.0, 0.5], &[4, 9]).unwrap();
        for (v, &s) in bf.v.iter().zip(&bf.sigma_v) {
            let gram = v.adjoint() * v;
            let want = DMatrix::<C>::identity(3, 3) * C::new(5.0 * s * s, 0.0);
            assert!((gram - want).norm() < 1e-12);
        }
        // same seed, same column space as the Gaussian draw
        let g = draw_beamformers::<f64>(5, 3, &[2.0], &[4]).unwrap();
        let col = g.v[0].column(0).normalize();
        let n0 = bf.v[0].column(0).normalize();
        assert!((col.dotc(&n0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_arguments() {
        let mut rng = substream(0, 0, 0, Role::Channel);
        assert!(draw_channels::<f64, _>(0, 1, 1, &[], 0.0, &mut rng).is_err());
        assert!(draw_channels::<f64, _>(1, 1, 1, &[1.0], 1.0, &mut rng).is_err());
        assert!(draw_channels::<f64, _>(1, 1, 1, &[0.0], 0.0, &mut rng).is_err());
    }
}

//! Analytic codecs: PAM for affine maps, QAM for convolutions.
//!
//! Both schemes carry integer products `a·s` on a lattice so that the
//! superposition of all nodes is itself a lattice point, decodable by rounding.

use rand::Rng;

use crate::design::{Codec, Decoder};
use crate::error::{Error, Result};
use crate::field::FunctionTable;
use crate::rng::{substream, Role};
use crate::C64;

/// `f_ℓ(s) = Σ_k a_{k,ℓ} s_k + b_ℓ` with `s_k ∈ {0, …, Q − 1}` and
/// `a_{k,ℓ} ∈ {0, …, Q_k − 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSpec {
    /// `a[ℓ][k]`, an `L × K` matrix.
    pub a: Vec<Vec<u32>>,
    pub b: Vec<i64>,
    pub q: u32,
    pub q_list: Vec<u32>,
}

impl AffineSpec {
    pub fn new(a: Vec<Vec<u32>>, b: Vec<i64>, q: u32, q_list: Vec<u32>) -> Result<Self> {
        let spec = Self { a, b, q, q_list };
        spec.check()?;
        Ok(spec)
    }

    /// Coefficients drawn uniformly from their fields, zero bias.
    pub fn random(nodes: usize, outputs: usize, q: u32, q_list: Vec<u32>, seed: u64) -> Result<Self> {
        if q_list.len() != nodes {
            return Err(Error::Argument(format!("{} coefficient field sizes for {nodes} nodes", q_list.len())));
        }
        let mut rng = substream(seed, 0, 0, Role::Function);
        let a = (0..outputs).map(|_| q_list.iter().map(|&qk| rng.random_range(0..qk)).collect()).collect();
        Self::new(a, vec![0; outputs], q, q_list)
    }

    fn check(&self) -> Result<()> {
        let k = self.q_list.len();
        if k == 0 || self.a.is_empty() {
            return Err(Error::Argument("affine map needs K, L ≥ 1".into()));
        }
        if self.q < 2 || self.q_list.iter().any(|&qk| qk < 2) {
            return Err(Error::Argument("field sizes must be at least 2".into()));
        }
        if self.b.len() != self.a.len() {
            return Err(Error::Dimension(format!("b has {} entries for L = {}", self.b.len(), self.a.len())));
        }
        for (ell, row) in self.a.iter().enumerate() {
            if row.len() != k {
                return Err(Error::Dimension(format!("row {ell} of A has {} entries for K = {k}", row.len())));
            }
            if let Some((node, &v)) = row.iter().enumerate().find(|(node, &v)| v >= self.q_list[*node]) {
                return Err(Error::Argument(format!(
                    "coefficient a[{ell}][{node}] = {v} outside field of size {}",
                    self.q_list[node]
                )));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> usize {
        self.q_list.len()
    }

    pub fn outputs(&self) -> usize {
        self.a.len()
    }

    pub fn eval(&self, s: &[u32]) -> Vec<f64> {
        self.a
            .iter()
            .zip(&self.b)
            .map(|(row, &b)| (row.iter().zip(s).map(|(&a, &x)| a as i64 * x as i64).sum::<i64>() + b) as f64)
            .collect()
    }

    pub fn table(&self) -> Result<FunctionTable> {
        FunctionTable::tabulate(|s| self.eval(s), &vec![self.q; self.nodes()], self.outputs())
    }
}

pub fn pam_encode(a: u32, s: u32, q: u32, q_k: u32) -> Result<i64> {
    if a >= q_k || s >= q {
        return Err(Error::Argument(format!("pam_encode needs a < {q_k} and s < {q}, got a = {a}, s = {s}")));
    }
    Ok(a as i64 * s as i64 - (q as i64 * q_k as i64) / 2)
}

fn pam_offset(spec: &AffineSpec) -> i64 {
    spec.q_list.iter().map(|&qk| (spec.q as i64 * qk as i64) / 2).sum()
}

fn pam_max(spec: &AffineSpec) -> i64 {
    spec.q_list.iter().map(|&qk| (qk as i64 - 1) * (spec.q as i64 - 1)).sum()
}

/// Removes the encoder offsets, rounds and clamps to the product range, then
/// adds the bias.
pub fn pam_decode(y: f64, output: usize, spec: &AffineSpec) -> f64 {
    let u = y + pam_offset(spec) as f64;
    u.round().clamp(0.0, pam_max(spec) as f64) + spec.b[output] as f64
}

pub fn pam_codec(spec: &AffineSpec) -> Result<Codec> {
    spec.check()?;
    let encoders = (0..spec.nodes())
        .map(|k| {
            (0..spec.q)
                .map(|s| {
                    spec.a
                        .iter()
                        .map(|row| pam_encode(row[k], s, spec.q, spec.q_list[k]).map(|v| C64::new(v as f64, 0.0)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let decoders = spec
        .b
        .iter()
        .map(|&b| Decoder::Pam { offset: pam_offset(spec) as f64, max: pam_max(spec), bias: b as f64 })
        .collect();
    Ok(Codec {
        scheme: "pam-affine".into(),
        q_list: vec![spec.q; spec.nodes()],
        outputs: spec.outputs(),
        encoders,
        decoders,
    })
}

/// Convolution `f_ℓ(s) = Σ_k a_{ℓ+k} s_k` (zero-based), i.e. `f = H(a)·s`
/// with the `L × K` Hankel matrix `H[ℓ][k] = a[ℓ + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvSpec {
    pub a: Vec<u32>,
    pub nodes: usize,
    pub q: u32,
}

pub fn conv_function_spec(a: Vec<u32>, nodes: usize, q: u32) -> Result<ConvSpec> {
    if nodes == 0 || a.len() < nodes {
        return Err(Error::Argument(format!("kernel of length {} needs at least K = {nodes} entries", a.len())));
    }
    if q < 2 {
        return Err(Error::Argument("field size must be at least 2".into()));
    }
    if let Some(&v) = a.iter().find(|&&v| v >= q) {
        return Err(Error::Argument(format!("kernel entry {v} outside field of size {q}")));
    }
    Ok(ConvSpec { a, nodes, q })
}

impl ConvSpec {
    /// Kernel drawn uniformly from the field.
    pub fn random(nodes: usize, outputs: usize, q: u32, seed: u64) -> Result<Self> {
        let mut rng = substream(seed, 0, 0, Role::Function);
        let a = (0..outputs + nodes - 1).map(|_| rng.random_range(0..q)).collect();
        conv_function_spec(a, nodes, q)
    }

    pub fn outputs(&self) -> usize {
        self.a.len() - self.nodes + 1
    }

    pub fn hankel(&self) -> Vec<Vec<u32>> {
        (0..self.outputs()).map(|ell| self.a[ell..ell + self.nodes].to_vec()).collect()
    }

    pub fn eval(&self, s: &[u32]) -> Vec<f64> {
        self.hankel()
            .iter()
            .map(|row| row.iter().zip(s).map(|(&a, &x)| a as u64 * x as u64).sum::<u64>() as f64)
            .collect()
    }

    pub fn table(&self) -> Result<FunctionTable> {
        FunctionTable::tabulate(|s| self.eval(s), &vec![self.q; self.nodes], self.outputs())
    }
}

/// Places `v = a·s` on a `Q × (Q − 1)` grid: in-phase `v mod Q`, quadrature
/// `⌊v/Q⌋`, both centred by `(1 − Q)/2`.
pub fn qam_encode(v: u32, q: u32) -> Result<C64> {
    if q < 2 || v > (q - 1) * (q - 1) {
        return Err(Error::Argument(format!("qam_encode needs v ≤ (Q−1)² = {}, got {v}", (q.max(1) - 1).pow(2))));
    }
    let c = (1.0 - q as f64) / 2.0;
    Ok(C64::new((v % q) as f64 + c, (v / q) as f64 + c))
}

/// Inverts a superposition of `nodes` QAM points: undo the centring on both
/// axes, round, clamp to the reachable range and recombine as `re + Q·im`.
pub fn qam_decode(y: C64, q: u32, nodes: usize) -> i64 {
    let shift = nodes as f64 * (q as f64 - 1.0) / 2.0;
    let re = (y.re + shift).round().clamp(0.0, nodes as f64 * (q as f64 - 1.0));
    let im = (y.im + shift).round().clamp(0.0, nodes as f64 * (q as f64 - 2.0));
    re as i64 + q as i64 * im as i64
}

pub fn qam_codec(spec: &ConvSpec) -> Result<Codec> {
    let h = spec.hankel();
    let encoders = (0..spec.nodes)
        .map(|k| {
            (0..spec.q)
                .map(|s| h.iter().map(|row| qam_encode(row[k] * s, spec.q)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Codec {
        scheme: "qam-conv".into(),
        q_list: vec![spec.q; spec.nodes],
        outputs: spec.outputs(),
        encoders,
        decoders: vec![Decoder::Qam { q: spec.q, nodes: spec.nodes }; spec.outputs()],
    })
}

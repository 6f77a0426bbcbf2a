//! Seeded Monte Carlo experiments.
//!
//! A [`Scenario`] is a validated [`ScenarioConfig`] with its codec built and
//! its noise level fixed. [`run_trial`] draws one input vector, encodes it,
//! pushes the symbols through the fading channel (or the plain AWGN
//! multiple-access channel when `N_r` is unset) and decodes every stream.
//! All randomness comes from per-`(trial, node, role)` substreams, so a trial
//! depends only on the seed and its index.

mod presets;
mod sweep;

pub use presets::{preset, preset_names};
pub use sweep::{run_sweep, Axis, Curve, CurveResult, PointResult, SweepResult, SweepSpec};

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{awgn_receive, draw_beamformers_with, draw_channels, transmit_and_combine, transmit_power};
use crate::closed_form::{pam_codec, qam_codec, AffineSpec, ConvSpec};
use crate::config::{CodecKind, Normalization, Precision, ScenarioConfig};
use crate::design::{design_codec, Codec, DesignParams, Method};
use crate::error::{Error, Result};
use crate::field::{FunctionTable, ScalarFn};
use crate::rng::{beamformer_seed, substream, Role, SHARED_NODE};
use crate::{Complex, Real, C64};

/// How the target values of a scenario are computed from the inputs.
#[derive(Debug, Clone)]
pub enum Evaluator {
    Table(FunctionTable),
    Affine(AffineSpec),
    Conv(ConvSpec),
    /// No function: the target is the symbol sum itself.
    RawSum,
}

impl Evaluator {
    pub fn eval(&self, input: &[u32]) -> Vec<f64> {
        match self {
            Evaluator::Table(t) => {
                let row = t.index_of(input).expect("inputs drawn inside the table domain");
                t.row_values(row).to_vec()
            }
            Evaluator::Affine(a) => a.eval(input),
            Evaluator::Conv(c) => c.eval(input),
            Evaluator::RawSum => Vec::new(),
        }
    }
}

/// A configuration ready to simulate.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    /// `None` for `raw-sum`.
    pub codec: Option<Codec>,
    pub evaluator: Evaluator,
    /// Mean symbol energy `P` the SNR refers to.
    pub symbol_power: f64,
    /// Noise standard deviation, `σ_z² = P · 10^(−snr_db/10)`.
    pub sigma_z: f64,
}

impl Scenario {
    pub fn prepare(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let (codec, evaluator) = build_codec(config)?;
        let symbol_power = codec.as_ref().map_or(1.0, Codec::symbol_power);
        if !(symbol_power > 0.0) {
            return Err(Error::Simulation("codec has zero symbol energy; every output is constant".into()));
        }
        let sigma_z = (symbol_power * 10f64.powf(-config.snr_db / 10.0)).sqrt();
        Ok(Self { config: config.clone(), codec, evaluator, symbol_power, sigma_z })
    }
}

fn function_table(config: &ScenarioConfig) -> Result<FunctionTable> {
    let q_list = config.q_list();
    let table = if config.function == "random" {
        FunctionTable::random(&q_list, config.l, config.levels, config.seed)?
    } else if let Some(path) = config.function.strip_prefix("table:") {
        FunctionTable::from_text(&std::fs::read_to_string(path.trim())?)?
    } else {
        let names: Vec<ScalarFn> = config.function.split(',').map(str::parse).collect::<Result<_>>()?;
        let fns = match names.len() {
            1 => vec![names[0]; config.l],
            n if n == config.l => names,
            n => return Err(Error::config(format!("{n} functions listed for L = {} outputs", config.l))),
        };
        FunctionTable::from_scalar_fns(&fns, &q_list)?
    };
    if table.outputs() != config.l || table.q_list() != q_list.as_slice() {
        return Err(Error::config(format!(
            "function table has {} outputs over alphabets {:?}; the scenario needs L = {} over {:?}",
            table.outputs(),
            table.q_list(),
            config.l,
            q_list
        )));
    }
    Ok(table)
}

fn build_codec(config: &ScenarioConfig) -> Result<(Option<Codec>, Evaluator)> {
    let q = config.q[0];
    Ok(match config.codec {
        CodecKind::Sdp | CodecKind::Exact => {
            let table = function_table(config)?;
            let method = if config.codec == CodecKind::Sdp { Method::Sdp } else { Method::Exact };
            let params = DesignParams { method, seed: config.seed, ..DesignParams::default() };
            (Some(design_codec(&table, &params)?), Evaluator::Table(table))
        }
        CodecKind::PamAffine => {
            let q_coef = match &config.q_coef {
                Some(qc) if qc.len() == 1 => vec![qc[0]; config.k],
                Some(qc) => qc.clone(),
                None => vec![q; config.k],
            };
            let spec = match &config.coefficients {
                Some(a) => AffineSpec::new(a.clone(), config.bias.clone().unwrap_or(vec![0; config.l]), q, q_coef)?,
                None => {
                    let mut spec = AffineSpec::random(config.k, config.l, q, q_coef, config.seed)?;
                    if let Some(b) = &config.bias {
                        spec.b = b.clone();
                    }
                    spec
                }
            };
            (Some(pam_codec(&spec)?), Evaluator::Affine(spec))
        }
        CodecKind::QamConv => {
            let spec = match &config.kernel {
                Some(a) => crate::closed_form::conv_function_spec(a.clone(), config.k, q)?,
                None => ConvSpec::random(config.k, config.l, q, config.seed)?,
            };
            (Some(qam_codec(&spec)?), Evaluator::Conv(spec))
        }
        CodecKind::RawSum => (None, Evaluator::RawSum),
    })
}

/// Everything observed in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    /// Node inputs; for `raw-sum` the `K × L` levels, row by row.
    pub input: Vec<u32>,
    /// Noiseless symbol sum `Σ_k x_k`.
    pub r: Vec<C64>,
    /// Compensated estimate of `r`.
    pub r_hat: Vec<C64>,
    /// Target function values (empty for `raw-sum`).
    pub f_true: Vec<f64>,
    pub f_hat: Vec<f64>,
    /// `‖r − y_sig‖`, `‖y_inter‖`, `‖y_noise‖`.
    pub e_sig: f64,
    pub e_inter: f64,
    pub e_noise: f64,
}

impl TrialRecord {
    /// `(squared error, normalizer)` under the given normalization.
    pub fn error_and_power(&self, normalization: Normalization) -> (f64, f64) {
        match normalization {
            Normalization::SumSymbolPower => (
                self.r.iter().zip(&self.r_hat).map(|(a, b)| (a - b).norm_sqr()).sum(),
                self.r.iter().map(|a| a.norm_sqr()).sum(),
            ),
            Normalization::FunctionPower => (
                self.f_true.iter().zip(&self.f_hat).map(|(a, b)| (a - b).powi(2)).sum(),
                self.f_true.iter().map(|a| a * a).sum(),
            ),
        }
    }
}

/// Raw-sum symbols: levels `1..=Q` on every stream, scaled to unit norm.
fn raw_sum_symbols(levels: &[u32]) -> Vec<C64> {
    let norm = levels.iter().map(|&s| (s as f64 + 1.0).powi(2)).sum::<f64>().sqrt();
    levels.iter().map(|&s| C64::new((s as f64 + 1.0) / norm, 0.0)).collect()
}

fn draw_inputs(scenario: &Scenario, trial: usize) -> Vec<u32> {
    let cfg = &scenario.config;
    let mut rng = substream(cfg.seed, trial as u64, SHARED_NODE, Role::Inputs);
    let per_node = if scenario.codec.is_none() { cfg.l } else { 1 };
    cfg.q_list().iter().flat_map(|&q| (0..per_node).map(|_| rng.random_range(0..q)).collect::<Vec<_>>()).collect()
}

fn encode(scenario: &Scenario, input: &[u32]) -> Vec<Vec<C64>> {
    match &scenario.codec {
        Some(codec) => input.iter().enumerate().map(|(k, &s)| codec.encode(k, s).to_vec()).collect(),
        None => input.chunks(scenario.config.l).map(raw_sum_symbols).collect(),
    }
}

struct ChannelOutput {
    r_hat: Vec<C64>,
    e_sig: f64,
    e_inter: f64,
    e_noise: f64,
}

fn to_t<T: Real>(v: &[C64]) -> Vec<Complex<T>> {
    v.iter().map(|c| Complex::new(T::lit(c.re), T::lit(c.im))).collect()
}

fn propagate<T: Real>(scenario: &Scenario, x: &[Vec<C64>], trial: usize) -> Result<ChannelOutput> {
    let cfg = &scenario.config;
    let t = trial as u64;
    let x_t: Vec<Vec<Complex<T>>> = x.iter().map(|v| to_t(v)).collect();
    let sigma_z = T::lit(scenario.sigma_z);
    let mut noise = substream(cfg.seed, t, SHARED_NODE, Role::Noise);
    let rx = match (cfg.n_r, cfg.n_t) {
        (Some(n_r), Some(n_t)) => {
            let sigma_h = vec![T::lit(cfg.sigma_h); cfg.k];
            let mut rng = substream(cfg.seed, t, SHARED_NODE, Role::Channel);
            let ch = draw_channels(cfg.k, n_r, n_t, &sigma_h, T::lit(cfg.alpha_corr), &mut rng)?;
            let seeds: Vec<u64> = (0..cfg.k as u64).map(|k| beamformer_seed(cfg.seed, t, k)).collect();
            let bf = draw_beamformers_with(cfg.beamformer, n_t, cfg.l, &sigma_h, &seeds)?;
            for (k, xk) in x_t.iter().enumerate() {
                let p = transmit_power(&bf, k, xk).as_f64();
                if p > cfg.p_max {
                    return Err(Error::Simulation(format!(
                        "trial {trial}: node {k} transmit power {p:e} exceeds P_max = {:e}",
                        cfg.p_max
                    )));
                }
            }
            transmit_and_combine(&x_t, &ch, &bf, sigma_z, &mut noise)?
        }
        _ => awgn_receive(&x_t, sigma_z, &mut noise)?,
    };
    Ok(ChannelOutput {
        r_hat: rx.r_hat.iter().map(|c| C64::new(c.re.as_f64(), c.im.as_f64())).collect(),
        e_sig: rx.e_sig.as_f64(),
        e_inter: rx.e_inter.as_f64(),
        e_noise: rx.e_noise.as_f64(),
    })
}

fn symbol_sum(x: &[Vec<C64>], l: usize) -> Vec<C64> {
    let mut r = vec![C64::new(0.0, 0.0); l];
    for xk in x {
        for (acc, v) in r.iter_mut().zip(xk) {
            *acc += v;
        }
    }
    r
}

/// Runs trial `trial` of the scenario. With `baseline = true` the symbols go
/// through [`baseline_trial`] instead of the shared channel.
pub fn run_trial(scenario: &Scenario, trial: usize) -> Result<TrialRecord> {
    if scenario.config.baseline {
        return baseline_trial(scenario, trial);
    }
    let input = draw_inputs(scenario, trial);
    let x = encode(scenario, &input);
    let out = match scenario.config.precision {
        Precision::F64 => propagate::<f64>(scenario, &x, trial)?,
        Precision::F32 => propagate::<f32>(scenario, &x, trial)?,
    };
    let f_hat = scenario.codec.as_ref().map_or(Vec::new(), |c| c.decode(&out.r_hat));
    Ok(TrialRecord {
        trial,
        r: symbol_sum(&x, scenario.config.l),
        f_true: scenario.evaluator.eval(&input),
        input,
        r_hat: out.r_hat,
        f_hat,
        e_sig: out.e_sig,
        e_inter: out.e_inter,
        e_noise: out.e_noise,
    })
}

/// Orthogonal-access reference: every node sends its symbols over its own
/// AWGN channel at the scenario's noise level, the receiver detects each
/// node's input by nearest codeword and evaluates the function on the
/// detected inputs. Costs `K` channel uses per computation.
pub fn baseline_trial(scenario: &Scenario, trial: usize) -> Result<TrialRecord> {
    let codec = scenario.codec.as_ref().ok_or_else(|| Error::config("the wideband baseline needs a function codec"))?;
    let cfg = &scenario.config;
    let input = draw_inputs(scenario, trial);
    let x = encode(scenario, &input);
    let mut detected = Vec::with_capacity(cfg.k);
    let mut r_hat = vec![C64::new(0.0, 0.0); cfg.l];
    for (k, xk) in x.iter().enumerate() {
        let mut rng = substream(cfg.seed, trial as u64, k as u64, Role::Baseline);
        let rx = awgn_receive(std::slice::from_ref(xk), scenario.sigma_z, &mut rng)?;
        let s = nearest_codeword(codec, k, &rx.y);
        for (acc, v) in r_hat.iter_mut().zip(codec.encode(k, s)) {
            *acc += v;
        }
        detected.push(s);
    }
    Ok(TrialRecord {
        trial,
        r: symbol_sum(&x, cfg.l),
        f_true: scenario.evaluator.eval(&input),
        f_hat: scenario.evaluator.eval(&detected),
        input,
        r_hat,
        e_sig: 0.0,
        e_inter: 0.0,
        e_noise: 0.0,
    })
}

fn nearest_codeword(codec: &Codec, node: usize, y: &[C64]) -> u32 {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for s in 0..codec.q_list[node] {
        let d: f64 = codec.encode(node, s).iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum();
        if d < best_d {
            best_d = d;
            best = s;
        }
    }
    best
}

/// Runs every trial of the scenario in parallel; records come back in trial order.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<TrialRecord>> {
    (0..scenario.config.trials).into_par_iter().map(|t| run_trial(scenario, t)).collect()
}

/// NMSE estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nmse {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

/// Mean squared error over the records divided by the mean normalizer.
pub fn nmse(records: &[TrialRecord], normalization: Normalization) -> Result<f64> {
    Ok(nmse_with_stderr(records, normalization)?.mean)
}

/// Ratio-of-means NMSE; the standard error uses the first-order (delta
/// method) variance of the ratio.
pub fn nmse_with_stderr(records: &[TrialRecord], normalization: Normalization) -> Result<Nmse> {
    let pairs: Vec<(f64, f64)> = records.iter().map(|r| r.error_and_power(normalization)).collect();
    nmse_from_pairs(&pairs)
}

pub(crate) fn nmse_from_pairs(pairs: &[(f64, f64)]) -> Result<Nmse> {
    let n = pairs.len();
    if n == 0 {
        return Err(Error::Argument("NMSE needs at least one record".into()));
    }
    let nf = n as f64;
    let err = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let pow = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    if !(pow > 0.0) {
        return Err(Error::Simulation("NMSE normalizer is zero".into()));
    }
    let mean = err / pow;
    let stderr = if n > 1 {
        let ss: f64 = pairs.iter().map(|&(e, p)| (e - mean * p).powi(2)).sum();
        (ss / (nf * (nf - 1.0))).sqrt() / pow
    } else {
        0.0
    };
    Ok(Nmse { mean, stderr, trials: n })
}

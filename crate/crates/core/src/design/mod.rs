//! Constellation design for function computation over a multiple-access channel.
//!
//! Every output stream `ℓ` gets a stacked constellation vector `X` of length
//! `Σ_k Q_k`; node `k` transmits `X[offset_k + s_k]`. Two inputs with
//! different outputs must land on different sum points, i.e. `⟨α, X⟩ ≠ 0`
//! for every difference vector `α` of the stream's separation set.

pub mod codec;
pub mod nonorth;
pub mod rounding;
pub mod sdp;

use std::collections::BTreeMap;
use std::str::FromStr;

use rayon::prelude::*;

pub use codec::{Codec, Decoder, DecoderTable};
pub use rounding::RoundingParams;
pub use sdp::{SdpParams, SdpSolution, Separation};

use crate::error::{Error, Result};
use crate::field::{alpha_for_pair, build_omega, FunctionTable, OmegaSet};
use crate::rng::{substream, Role};
use crate::C64;

/// Relative tolerance used to merge coinciding decoder points.
pub const DEDUP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignMode {
    Exact,
    Inexact,
    /// Constant output stream; all symbols are zero.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Sdp,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Method::Exact),
            "sdp" => Ok(Method::Sdp),
            _ => Err(Error::Parse(format!("unknown design method `{s}` (expected exact or sdp)"))),
        }
    }
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Sdp => "sdp",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Constellation {
    pub output: usize,
    pub symbols: Vec<C64>,
    /// Achieved margin `min |⟨α, X⟩|² / γ` (inexact designs only).
    pub eps_star: Option<f64>,
    pub mode: DesignMode,
}

#[derive(Debug, Clone)]
pub struct DesignParams {
    pub method: Method,
    pub sdp: SdpParams,
    pub rounding: RoundingParams,
    pub seed: u64,
}

impl Default for DesignParams {
    fn default() -> Self {
        Self { method: Method::Sdp, sdp: SdpParams::default(), rounding: RoundingParams::default(), seed: 0 }
    }
}

/// Distinct separation constraints of a stream.
///
/// `α` and `−α` describe the same constraint, so vectors are stored with their
/// first nonzero entry positive. Among pairs sharing an `α` only the largest
/// weight binds.
pub fn separations(table: &FunctionTable, omega: &OmegaSet) -> Vec<Separation> {
    let mut merged: BTreeMap<Vec<i8>, f64> = BTreeMap::new();
    for (&(i, j), &gamma) in omega.pairs.iter().zip(&omega.gammas) {
        let mut alpha = alpha_for_pair(table, i, j);
        if alpha.iter().find(|&&a| a != 0).is_some_and(|&a| a < 0) {
            alpha.iter_mut().for_each(|a| *a = -*a);
        }
        let slot = merged.entry(alpha).or_insert(gamma);
        *slot = slot.max(gamma);
    }
    merged
        .into_iter()
        .map(|(alpha, gamma)| Separation {
            alpha: alpha.iter().enumerate().filter(|(_, &a)| a != 0).map(|(i, &a)| (i, a as f64)).collect(),
            gamma,
        })
        .collect()
}

fn dense_complex(n: usize, sep: &Separation) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); n];
    for &(i, a) in &sep.alpha {
        v[i] = C64::new(a, 0.0);
    }
    v
}

fn nonempty_omega(table: &FunctionTable, output: usize) -> Result<OmegaSet> {
    let omega = build_omega(table, output)?;
    if omega.is_empty() {
        return Err(Error::Degenerate(output));
    }
    Ok(omega)
}

/// Unit-norm constellation from the non-orthogonal vector search, with the
/// null-space component set to zero.
pub fn exact_design(table: &FunctionTable, output: usize) -> Result<Constellation> {
    let omega = nonempty_omega(table, output)?;
    let n = table.symbol_dim();
    let vectors: Vec<Vec<C64>> = separations(table, &omega).iter().map(|s| dense_complex(n, s)).collect();
    let y = nonorth::non_orth(n, &vectors)?;
    let norm = nonorth::norm(&y);
    let symbols = y.into_iter().map(|v| v / norm).collect();
    Ok(Constellation { output, symbols, eps_star: None, mode: DesignMode::Exact })
}

/// Lifted problem of one stream: the solver output plus the constraints it was
/// solved against.
#[derive(Debug, Clone)]
pub struct Lifted {
    pub output: usize,
    pub solution: SdpSolution,
    pub separations: Vec<Separation>,
}

pub fn sdp_design(table: &FunctionTable, output: usize, params: &SdpParams) -> Result<Lifted> {
    let omega = nonempty_omega(table, output)?;
    let seps = separations(table, &omega);
    let solution = sdp::solve(table.symbol_dim(), &seps, params)?;
    Ok(Lifted { output, solution, separations: seps })
}

pub fn extract_constellation<R: rand::Rng + ?Sized>(
    lifted: &Lifted,
    params: &RoundingParams,
    rng: &mut R,
) -> Result<Constellation> {
    let ex = rounding::extract(&lifted.solution.w, &lifted.separations, params, rng)?;
    Ok(Constellation { output: lifted.output, symbols: ex.x, eps_star: Some(ex.margin), mode: DesignMode::Inexact })
}

fn constant_stream(table: &FunctionTable, output: usize) -> Constellation {
    Constellation {
        output,
        symbols: vec![C64::new(0.0, 0.0); table.symbol_dim()],
        eps_star: None,
        mode: DesignMode::Constant,
    }
}

/// Assembles encoders `E_k(q)[ℓ] = X_ℓ[offset_k + q]` and nearest-point decoders.
pub fn build_codec(table: &FunctionTable, constellations: &[Constellation], scheme: &str) -> Result<Codec> {
    let l = table.outputs();
    if constellations.len() != l {
        return Err(Error::Dimension(format!("{} constellations for {l} outputs", constellations.len())));
    }
    let n = table.symbol_dim();
    for (ell, c) in constellations.iter().enumerate() {
        if c.output != ell || c.symbols.len() != n {
            return Err(Error::Dimension(format!("constellation {ell} does not match the table")));
        }
    }
    let q_list = table.q_list().to_vec();
    let encoders = q_list
        .iter()
        .enumerate()
        .map(|(k, &q)| {
            let off = table.block_offset(k);
            (0..q as usize).map(|s| constellations.iter().map(|c| c.symbols[off + s]).collect()).collect()
        })
        .collect();

    let mut decoders = Vec::with_capacity(l);
    for c in constellations {
        let ell = c.output;
        if c.mode == DesignMode::Constant {
            decoders.push(Decoder::Constant { value: table.value(0, ell) });
            continue;
        }
        let raw: Vec<(C64, f64)> = (0..table.rows())
            .map(|i| {
                let sel = table.selector(i);
                let p: C64 = sel.positions().iter().map(|&pos| c.symbols[pos]).sum();
                (p, table.value(i, ell))
            })
            .collect();
        decoders.push(Decoder::Table(DecoderTable::build(ell, &raw, DEDUP_TOL)?));
    }
    let codec = Codec { scheme: scheme.to_string(), q_list, outputs: l, encoders, decoders };
    codec.validate()?;
    Ok(codec)
}

/// Designs one stream with the selected method.
pub fn design_stream(table: &FunctionTable, output: usize, params: &DesignParams) -> Result<Constellation> {
    if table.is_constant(output) {
        return Ok(constant_stream(table, output));
    }
    match params.method {
        Method::Exact => exact_design(table, output),
        Method::Sdp => {
            let lifted = sdp_design(table, output, &params.sdp)?;
            let mut rng = substream(params.seed, 0, output as u64, Role::Rounding);
            extract_constellation(&lifted, &params.rounding, &mut rng)
        }
    }
}

/// Designs every stream (in parallel) and assembles the codec.
pub fn design_codec(table: &FunctionTable, params: &DesignParams) -> Result<Codec> {
    let constellations = (0..table.outputs())
        .into_par_iter()
        .map(|ell| design_stream(table, ell, params))
        .collect::<Result<Vec<_>>>()?;
    build_codec(table, &constellations, params.method.name())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarFn;
    use nonorth::inner;

    fn table(f: ScalarFn, q: u32, k: usize) -> FunctionTable {
        FunctionTable::from_scalar_fns(&[f], &vec![q; k]).unwrap()
    }

    #[test]
    fn exact_single_pair_is_normalized_alpha() {
        // K=1, Q=2 identity: one pair with α = e1 − e2 (up to sign)
        let t = table(ScalarFn::Sum, 2, 1);
        let c = exact_design(&t, 0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c.symbols[0].re.abs() - h).abs() < 1e-15);
        assert!((c.symbols[0] + c.symbols[1]).norm() < 1e-15);
        let alpha = vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)];
        assert!((inner(&alpha, &c.symbols).norm() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn constant_function_is_degenerate() {
        let t = table(ScalarFn::Constant, 3, 2);
        assert!(matches!(exact_design(&t, 0), Err(Error::Degenerate(0))));
        assert!(matches!(sdp_design(&t, 0, &SdpParams::default()), Err(Error::Degenerate(0))));
        // the full pipeline falls back to a constant decoder
        let codec = design_codec(&t, &DesignParams::default()).unwrap();
        assert!(matches!(codec.decoders[0], Decoder::Constant { .. }));
        assert!(codec.noiseless_failures(&t).is_empty());
    }

    #[test]
    fn separations_merge_sign_and_keep_largest_weight() {
        let t = table(ScalarFn::Sum, 2, 2);
        let omega = build_omega(&t, 0).unwrap();
        assert_eq!(omega.len(), 5);
        let seps = separations(&t, &omega);
        // (00,01) and (10,11) share one α, (00,10) and (01,11) another,
        // (00,11) is alone with γ = 4
        assert_eq!(seps.len(), 3);
        for s in &seps {
            assert!(s.alpha[0].1 > 0.0);
        }
        let both = seps.iter().find(|s| s.alpha.len() == 4).unwrap();
        assert_eq!(both.gamma, 4.0);
    }

    #[test]
    fn sum_two_nodes_both_methods_decode_exactly() {
        let t = table(ScalarFn::Sum, 2, 2);
        for method in [Method::Exact, Method::Sdp] {
            let params = DesignParams { method, ..Default::default() };
            let codec = design_codec(&t, &params).unwrap();
            assert!(codec.noiseless_failures(&t).is_empty(), "{method:?}");
            let Decoder::Table(d) = &codec.decoders[0] else { panic!() };
            assert!(d.labels.len() <= 4);
            let mut labels = d.labels.clone();
            labels.sort_by(f64::total_cmp);
            labels.dedup();
            assert_eq!(labels, vec![0.0, 1.0, 2.0]);
        }
    }

    #[test]
    fn sdp_margin_is_reverified_on_sum() {
        let t = table(ScalarFn::Sum, 2, 2);
        let lifted = sdp_design(&t, 0, &SdpParams::default()).unwrap();
        let w = &lifted.solution.w;
        assert!(lifted.solution.eps > 0.0);
        assert!(w.trace() <= 1.0 + 1e-8);
        let min_ev = nalgebra::SymmetricEigen::new(w.clone()).eigenvalues.min();
        assert!(min_ev >= -1e-8);
        for s in &lifted.separations {
            assert!(s.quad(w) >= lifted.solution.eps * s.gamma - 1e-8);
        }
    }

    #[test]
    fn product_is_computable() {
        let t = table(ScalarFn::Product, 2, 2);
        for method in [Method::Exact, Method::Sdp] {
            let codec = design_codec(&t, &DesignParams { method, ..Default::default() }).unwrap();
            assert!(codec.noiseless_failures(&t).is_empty());
            let Decoder::Table(d) = &codec.decoders[0] else { panic!() };
            let zeros = (0..t.rows()).filter(|&i| d.decode(codec.superpose(t.input(i))[0]) == 0.0).count();
            assert_eq!(zeros, 3);
        }
    }

    #[test]
    fn single_node_decoder_points_are_the_constellation() {
        let t = table(ScalarFn::Sum, 4, 1);
        let c = exact_design(&t, 0).unwrap();
        let codec = build_codec(&t, std::slice::from_ref(&c), "exact").unwrap();
        let Decoder::Table(d) = &codec.decoders[0] else { panic!() };
        assert_eq!(d.points, c.symbols);
    }

    #[test]
    fn global_phase_rotation_keeps_decisions() {
        let t = FunctionTable::from_scalar_fns(&[ScalarFn::Max], &[3, 3]).unwrap();
        let c = exact_design(&t, 0).unwrap();
        let rot = C64::from_polar(1.0, 0.7);
        let mut r = c.clone();
        r.symbols.iter_mut().for_each(|x| *x *= rot);
        let a = build_codec(&t, &[c], "exact").unwrap();
        let b = build_codec(&t, &[r], "exact").unwrap();
        for i in 0..40 {
            let y = C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.91).cos()) * 0.8;
            assert_eq!(a.decode(&[y]), b.decode(&[y * rot]));
        }
    }
}

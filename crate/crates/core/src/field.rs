//! Tabulated vector functions over finite input alphabets.
//!
//! Node `k` holds an integer `s_k ∈ {0, …, Q_k − 1}`. A [`FunctionTable`]
//! lists every input tuple together with the `L` real outputs of the target
//! function. Rows are ordered lexicographically with node 1 most significant,
//! so row `i` of a uniform `Q`-ary table is `i` written in base `Q`.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{substream, Role};

/// Default cap on the number of tabulated rows.
pub const DEFAULT_ROW_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionTable {
    q_list: Vec<u32>,
    outputs: usize,
    inputs: Vec<Vec<u32>>,
    values: Vec<f64>,
}

impl FunctionTable {
    /// Tabulates `f` over the full domain `Π_k {0, …, Q_k − 1}`.
    ///
    /// `f` receives one input tuple and must return exactly `outputs` finite values.
    pub fn tabulate<F>(f: F, q_list: &[u32], outputs: usize) -> Result<Self>
    where
        F: Fn(&[u32]) -> Vec<f64>,
    {
        Self::tabulate_with_cap(f, q_list, outputs, DEFAULT_ROW_CAP)
    }

    pub fn tabulate_with_cap<F>(f: F, q_list: &[u32], outputs: usize, cap: usize) -> Result<Self>
    where
        F: Fn(&[u32]) -> Vec<f64>,
    {
        if q_list.is_empty() {
            return Err(Error::Argument("at least one node is required".into()));
        }
        if let Some(q) = q_list.iter().find(|&&q| q < 2) {
            return Err(Error::Argument(format!("field size {q} < 2")));
        }
        if outputs == 0 {
            return Err(Error::Argument("at least one output is required".into()));
        }
        let rows = q_list.iter().try_fold(1u128, |acc, &q| acc.checked_mul(q as u128));
        let rows = match rows {
            Some(r) if r <= cap as u128 => r as usize,
            Some(r) => return Err(Error::Size { rows: r, cap }),
            None => return Err(Error::Size { rows: u128::MAX, cap }),
        };

        let mut inputs = Vec::with_capacity(rows);
        let mut values = Vec::with_capacity(rows * outputs);
        let mut tuple = vec![0u32; q_list.len()];
        for _ in 0..rows {
            let out = f(&tuple);
            if out.len() != outputs {
                return Err(Error::Argument(format!("function returned {} outputs, expected {outputs}", out.len())));
            }
            if let Some(bad) = out.iter().position(|v| !v.is_finite()) {
                return Err(Error::Domain { input: tuple.clone(), output: bad });
            }
            inputs.push(tuple.clone());
            values.extend_from_slice(&out);
            // odometer increment, last node fastest
            for k in (0..q_list.len()).rev() {
                tuple[k] += 1;
                if tuple[k] < q_list[k] {
                    break;
                }
                tuple[k] = 0;
            }
        }
        Ok(Self { q_list: q_list.to_vec(), outputs, inputs, values })
    }

    /// Tabulates one scalar function per output stream.
    pub fn from_scalar_fns(fns: &[ScalarFn], q_list: &[u32]) -> Result<Self> {
        Self::tabulate(|s| fns.iter().map(|f| f.eval(s)).collect(), q_list, fns.len())
    }

    /// Random integer-valued table with outputs drawn uniformly from `{0, …, levels − 1}`.
    pub fn random(q_list: &[u32], outputs: usize, levels: u32, seed: u64) -> Result<Self> {
        if levels == 0 {
            return Err(Error::Argument("levels must be positive".into()));
        }
        let rows: usize = q_list.iter().map(|&q| q as usize).product();
        let mut rng = substream(seed, 0, 0, Role::Function);
        let draws: Vec<f64> = (0..rows * outputs).map(|_| rng.random_range(0..levels) as f64).collect();
        let radix = radix_weights(q_list);
        Self::tabulate(
            |s| {
                let i: usize = s.iter().zip(&radix).map(|(&v, &w)| v as usize * w).sum();
                draws[i * outputs..(i + 1) * outputs].to_vec()
            },
            q_list,
            outputs,
        )
    }

    pub fn nodes(&self) -> usize {
        self.q_list.len()
    }

    pub fn q_list(&self) -> &[u32] {
        &self.q_list
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn rows(&self) -> usize {
        self.inputs.len()
    }

    pub fn input(&self, row: usize) -> &[u32] {
        &self.inputs[row]
    }

    pub fn inputs(&self) -> &[Vec<u32>] {
        &self.inputs
    }

    pub fn value(&self, row: usize, output: usize) -> f64 {
        self.values[row * self.outputs + output]
    }

    pub fn row_values(&self, row: usize) -> &[f64] {
        &self.values[row * self.outputs..(row + 1) * self.outputs]
    }

    /// Row index of an input tuple.
    pub fn index_of(&self, input: &[u32]) -> Option<usize> {
        if input.len() != self.q_list.len() {
            return None;
        }
        let mut idx = 0usize;
        for (&s, &q) in input.iter().zip(&self.q_list) {
            if s >= q {
                return None;
            }
            idx = idx * q as usize + s as usize;
        }
        Some(idx)
    }

    /// Length of a stacked constellation vector, `Σ_k Q_k`.
    pub fn symbol_dim(&self) -> usize {
        self.q_list.iter().map(|&q| q as usize).sum()
    }

    /// Offset of node `k`'s block inside a stacked constellation vector.
    pub fn block_offset(&self, node: usize) -> usize {
        self.q_list[..node].iter().map(|&q| q as usize).sum()
    }

    /// Sorted distinct values of one output.
    pub fn range(&self, output: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..self.rows()).map(|i| self.value(i, output)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    pub fn is_constant(&self, output: usize) -> bool {
        let first = self.value(0, output);
        (1..self.rows()).all(|i| self.value(i, output) == first)
    }

    /// Selector vector of a row: one 1 per node block, at the node's input value.
    pub fn selector(&self, row: usize) -> SelectorVector {
        let input = &self.inputs[row];
        let positions = input.iter().enumerate().map(|(k, &s)| self.block_offset(k) + s as usize).collect();
        SelectorVector { dim: self.symbol_dim(), positions }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "K {}", self.nodes());
        let qs: Vec<String> = self.q_list.iter().map(|q| q.to_string()).collect();
        let _ = writeln!(out, "Q {}", qs.join(" "));
        let _ = writeln!(out, "L {}", self.outputs);
        for i in 0..self.rows() {
            let ins: Vec<String> = self.inputs[i].iter().map(|s| s.to_string()).collect();
            let outs: Vec<String> = self.row_values(i).iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "{} | {}", ins.join(" "), outs.join(" "));
        }
        out
    }

    /// Parses the text format written by [`FunctionTable::to_text`].
    ///
    /// Rows may appear in any order but must cover the domain exactly once.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut k = None;
        let mut q_list: Option<Vec<u32>> = None;
        let mut l = None;
        let mut rows: Vec<(usize, Vec<u32>, Vec<f64>)> = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |m: String| Error::Parse(format!("line {}: {m}", no + 1));
            if let Some((ins, outs)) = line.split_once('|') {
                let ins = parse_list::<u32>(ins).map_err(perr)?;
                let outs = parse_list::<f64>(outs).map_err(perr)?;
                rows.push((no + 1, ins, outs));
                continue;
            }
            let mut it = line.split_whitespace();
            let key = it.next().unwrap_or_default();
            let rest: Vec<&str> = it.collect();
            let joined = rest.join(" ");
            match key {
                "K" => k = Some(parse_one::<usize>(&joined).map_err(perr)?),
                "Q" => q_list = Some(parse_list::<u32>(&joined).map_err(perr)?),
                "L" => l = Some(parse_one::<usize>(&joined).map_err(perr)?),
                other => return Err(perr(format!("unexpected header key `{other}`"))),
            }
        }
        let k = k.ok_or_else(|| Error::Parse("missing header K".into()))?;
        let mut q_list = q_list.ok_or_else(|| Error::Parse("missing header Q".into()))?;
        let l = l.ok_or_else(|| Error::Parse("missing header L".into()))?;
        if q_list.len() == 1 && k > 1 {
            q_list = vec![q_list[0]; k];
        }
        if q_list.len() != k {
            return Err(Error::Parse(format!("Q lists {} sizes for K={k}", q_list.len())));
        }
        let m: usize = q_list.iter().map(|&q| q as usize).product();
        if rows.len() != m {
            return Err(Error::Parse(format!("expected {m} rows, found {}", rows.len())));
        }
        let mut slots: Vec<Option<Vec<f64>>> = vec![None; m];
        let radix = radix_weights(&q_list);
        for (no, ins, outs) in rows {
            if ins.len() != k || outs.len() != l {
                return Err(Error::Parse(format!("line {no}: wrong arity")));
            }
            if ins.iter().zip(&q_list).any(|(s, q)| s >= q) {
                return Err(Error::Parse(format!("line {no}: input out of range")));
            }
            let idx: usize = ins.iter().zip(&radix).map(|(&s, &w)| s as usize * w).sum();
            if slots[idx].replace(outs).is_some() {
                return Err(Error::Parse(format!("line {no}: duplicate input tuple")));
            }
        }
        let slots: Vec<Vec<f64>> = slots.into_iter().map(|s| s.expect("all rows filled")).collect();
        Self::tabulate(
            |s| {
                let idx: usize = s.iter().zip(&radix).map(|(&v, &w)| v as usize * w).sum();
                slots[idx].clone()
            },
            &q_list,
            l,
        )
    }
}

fn radix_weights(q_list: &[u32]) -> Vec<usize> {
    let mut w = vec![1usize; q_list.len()];
    for k in (0..q_list.len().saturating_sub(1)).rev() {
        w[k] = w[k + 1] * q_list[k + 1] as usize;
    }
    w
}

fn parse_one<T: FromStr>(s: &str) -> std::result::Result<T, String> {
    s.trim().parse().map_err(|_| format!("cannot parse `{}`", s.trim()))
}

fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, String> {
    s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).map(parse_one).collect()
}

/// Built-in scalar functions of the node inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalarFn {
    Sum,
    Product,
    Max,
    Min,
    Mean,
    SumOfSquares,
    Constant,
}

impl ScalarFn {
    pub fn eval(self, s: &[u32]) -> f64 {
        let it = s.iter().map(|&v| v as f64);
        match self {
            ScalarFn::Sum => it.sum(),
            ScalarFn::Product => it.product(),
            ScalarFn::Max => it.fold(f64::NEG_INFINITY, f64::max),
            ScalarFn::Min => it.fold(f64::INFINITY, f64::min),
            ScalarFn::Mean => it.sum::<f64>() / s.len() as f64,
            ScalarFn::SumOfSquares => it.map(|v| v * v).sum(),
            ScalarFn::Constant => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalarFn::Sum => "sum",
            ScalarFn::Product => "product",
            ScalarFn::Max => "max",
            ScalarFn::Min => "min",
            ScalarFn::Mean => "mean",
            ScalarFn::SumOfSquares => "sum_sq",
            ScalarFn::Constant => "constant",
        }
    }
}

impl FromStr for ScalarFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "sum" => ScalarFn::Sum,
            "product" | "prod" => ScalarFn::Product,
            "max" => ScalarFn::Max,
            "min" => ScalarFn::Min,
            "mean" => ScalarFn::Mean,
            "sum_sq" | "sum-of-squares" | "sumsq" => ScalarFn::SumOfSquares,
            "constant" => ScalarFn::Constant,
            other => return Err(Error::Argument(format!("unknown function `{other}`"))),
        })
    }
}

/// Binary vector selecting one constellation point per node block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectorVector {
    dim: usize,
    positions: Vec<usize>,
}

impl SelectorVector {
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    pub fn to_dense(&self) -> Vec<i8> {
        let mut v = vec![0i8; self.dim];
        for &p in &self.positions {
            v[p] = 1;
        }
        v
    }
}

/// Pairs of rows whose `ℓ`-th outputs differ, with squared-difference weights.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaSet {
    pub output: usize,
    /// Unordered pairs stored as `(i, j)` with `i < j`.
    pub pairs: Vec<(usize, usize)>,
    /// `gammas[p] = |f(i) − f(j)|²` for `pairs[p]`.
    pub gammas: Vec<f64>,
}

impl OmegaSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

pub fn build_omega(table: &FunctionTable, output: usize) -> Result<OmegaSet> {
    if output >= table.outputs() {
        return Err(Error::Argument(format!("output index {output} out of range (L = {})", table.outputs())));
    }
    let m = table.rows();
    let mut pairs = Vec::new();
    let mut gammas = Vec::new();
    for i in 0..m {
        let fi = table.value(i, output);
        for j in i + 1..m {
            let d = fi - table.value(j, output);
            if d != 0.0 {
                pairs.push((i, j));
                gammas.push(d * d);
            }
        }
    }
    Ok(OmegaSet { output, pairs, gammas })
}

/// `α = a_i − a_j` for every pair of `omega`, in pair order.
pub fn alpha_vectors(table: &FunctionTable, omega: &OmegaSet) -> Vec<Vec<i8>> {
    omega.pairs.iter().map(|&(i, j)| alpha_for_pair(table, i, j)).collect()
}

pub fn alpha_for_pair(table: &FunctionTable, i: usize, j: usize) -> Vec<i8> {
    let mut v = vec![0i8; table.symbol_dim()];
    for &p in table.selector(i).positions() {
        v[p] += 1;
    }
    for &p in table.selector(j).positions() {
        v[p] -= 1;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sum_table(q: u32, k: usize) -> FunctionTable {
        FunctionTable::from_scalar_fns(&[ScalarFn::Sum], &vec![q; k]).unwrap()
    }

    #[test]
    fn tabulate_small_sums() {
        let t = sum_table(2, 1);
        assert_eq!(t.inputs(), &[vec![0], vec![1]]);
        assert_eq!((0..2).map(|i| t.value(i, 0)).collect::<Vec<_>>(), vec![0.0, 1.0]);

        let t = sum_table(2, 2);
        assert_eq!(t.rows(), 4);
        assert_eq!((0..4).map(|i| t.value(i, 0)).collect::<Vec<_>>(), vec![0.0, 1.0, 1.0, 2.0]);

        assert_eq!(sum_table(4, 3).rows(), 64);
    }

    #[test]
    fn rows_are_lexicographic_last_node_fastest() {
        let t = FunctionTable::from_scalar_fns(&[ScalarFn::Sum], &[2, 3]).unwrap();
        let expect: Vec<Vec<u32>> = vec![vec![0, 0], vec![0, 1], vec![0, 2], vec![1, 0], vec![1, 1], vec![1, 2]];
        assert_eq!(t.inputs(), expect.as_slice());
        for (i, s) in expect.iter().enumerate() {
            assert_eq!(t.index_of(s), Some(i));
        }
    }

    #[test]
    fn non_finite_output_is_a_domain_error() {
        let err = FunctionTable::tabulate(|s| vec![1.0 / s[0] as f64 - f64::INFINITY], &[2], 1);
        assert!(matches!(err, Err(Error::Domain { .. })));
        let err = FunctionTable::tabulate(|_| vec![f64::NAN], &[2], 1);
        assert!(matches!(err, Err(Error::Domain { .. })));
    }

    #[test]
    fn row_cap_is_enforced() {
        let err = FunctionTable::tabulate_with_cap(|_| vec![0.0], &[4, 4, 4], 1, 63);
        assert!(matches!(err, Err(Error::Size { rows: 64, cap: 63 })));
        assert!(FunctionTable::tabulate(|_| vec![0.0], &[2; 30], 1).is_err());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(FunctionTable::tabulate(|_| vec![0.0], &[], 1).is_err());
        assert!(FunctionTable::tabulate(|_| vec![0.0], &[1], 1).is_err());
        assert!(FunctionTable::tabulate(|_| vec![], &[2], 0).is_err());
        assert!(FunctionTable::tabulate(|_| vec![0.0, 1.0], &[2], 1).is_err());
    }

    // Brute-force pair enumeration used as the oracle for build_omega.
    fn brute_pairs(t: &FunctionTable, l: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..t.rows() {
            for j in 0..t.rows() {
                if i < j && t.value(i, l) != t.value(j, l) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[test]
    fn omega_for_binary_sum() {
        let t = sum_table(2, 2);
        let om = build_omega(&t, 0).unwrap();
        assert_eq!(om.len(), 5);
        assert!(!om.pairs.contains(&(1, 2)));
        assert_eq!(om.pairs, brute_pairs(&t, 0));
        assert!(om.gammas.iter().all(|&g| g > 0.0));
        let idx = om.pairs.iter().position(|&p| p == (0, 3)).unwrap();
        assert_eq!(om.gammas[idx], 4.0);
    }

    #[test]
    fn omega_for_binary_max() {
        let t = FunctionTable::from_scalar_fns(&[ScalarFn::Max], &[2, 2]).unwrap();
        let om = build_omega(&t, 0).unwrap();
        assert_eq!(om.pairs, vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn omega_of_constant_is_empty() {
        let t = FunctionTable::from_scalar_fns(&[ScalarFn::Constant], &[3, 3]).unwrap();
        assert!(build_omega(&t, 0).unwrap().is_empty());
        assert!(build_omega(&t, 1).is_err());
    }

    #[test]
    fn alpha_examples() {
        let t = sum_table(2, 2);
        let i = t.index_of(&[1, 0]).unwrap();
        let j = t.index_of(&[0, 1]).unwrap();
        assert_eq!(t.selector(i).to_dense(), vec![0, 1, 1, 0]);
        assert_eq!(t.selector(j).to_dense(), vec![1, 0, 0, 1]);
        assert_eq!(alpha_for_pair(&t, i, j), vec![-1, 1, 1, -1]);
        assert_eq!(alpha_for_pair(&t, i, i), vec![0, 0, 0, 0]);

        let t = sum_table(2, 1);
        assert_eq!(alpha_for_pair(&t, 1, 0), vec![-1, 1]);
    }

    #[test]
    fn text_format_roundtrip() {
        let t = FunctionTable::tabulate(|s| vec![s[0] as f64 * 0.1, s[1] as f64 - 0.5], &[3, 2], 2).unwrap();
        let back = FunctionTable::from_text(&t.to_text()).unwrap();
        assert_eq!(t, back);
        assert!(FunctionTable::from_text("K 1\nQ 2\nL 1\n0 | 1\n").is_err());
        assert!(FunctionTable::from_text("K 1\nQ 2\nL 1\n0 | 1\n0 | 2\n").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn alpha_is_inner_product_difference(
            qs in proptest::collection::vec(2u32..5, 1..4),
            seed in any::<u64>(),
            xs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
        ) {
            let t = FunctionTable::random(&qs, 1, 3, seed).unwrap();
            let om = build_omega(&t, 0).unwrap();
            let x: Vec<crate::C64> = xs.iter().take(t.symbol_dim()).map(|&(a, b)| crate::C64::new(a, b)).collect();
            let dot = |v: &[i8]| -> crate::C64 { v.iter().zip(&x).map(|(&a, &b)| b * a as f64).sum() };
            for (p, alpha) in alpha_vectors(&t, &om).iter().enumerate() {
                let (i, j) = om.pairs[p];
                let d = dot(&t.selector(i).to_dense()) - dot(&t.selector(j).to_dense());
                prop_assert!((d - dot(alpha)).norm() < 1e-12);
                prop_assert!(alpha.iter().all(|&a| (-1..=1).contains(&a)));
                prop_assert_eq!(alpha.iter().map(|&a| a as i32).sum::<i32>(), 0);
                for k in 0..t.nodes() {
                    let off = t.block_offset(k);
                    let nz = alpha[off..off + qs[k] as usize].iter().filter(|&&a| a != 0).count();
                    prop_assert!(nz <= 2);
                }
            }
            let m = t.rows();
            let equal = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j)))
                .filter(|&(i, j)| t.value(i, 0) == t.value(j, 0)).count();
            prop_assert_eq!(om.len() + equal, m * (m - 1) / 2);
        }

        #[test]
        fn tabulation_is_deterministic(qs in proptest::collection::vec(2u32..5, 1..4)) {
            let a = FunctionTable::from_scalar_fns(&[ScalarFn::Sum, ScalarFn::Product], &qs).unwrap();
            let b = FunctionTable::from_scalar_fns(&[ScalarFn::Sum, ScalarFn::Product], &qs).unwrap();
            prop_assert_eq!(a.to_text(), b.to_text());
        }
    }
}

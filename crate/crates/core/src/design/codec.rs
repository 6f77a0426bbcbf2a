//! Per-node encoders and per-stream decoders, with a JSON export format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::FunctionTable;
use crate::C64;

/// Labeled sum points of one output stream, decoded by nearest point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderTable {
    pub output: usize,
    pub points: Vec<C64>,
    pub labels: Vec<f64>,
    pub tol: f64,
}

impl DecoderTable {
    /// Builds a table from raw `(point, label)` pairs, merging points closer
    /// than `rel_tol · max|point|`.
    ///
    /// Two merged points must carry the same label; otherwise the
    /// constellation does not separate the function and an
    /// [`Error::Inconsistent`] is returned.
    pub fn build(output: usize, raw: &[(C64, f64)], rel_tol: f64) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Argument("decoder needs at least one point".into()));
        }
        let scale = raw.iter().map(|(p, _)| p.norm()).fold(0.0, f64::max);
        let tol = rel_tol * scale;

        // sweep in order of real part so only a narrow window is compared
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| raw[a].0.re.total_cmp(&raw[b].0.re).then(a.cmp(&b)));
        let mut keep = vec![true; raw.len()];
        for (pos, &i) in order.iter().enumerate() {
            let (pi, li) = raw[i];
            for &j in &order[pos + 1..] {
                let (pj, lj) = raw[j];
                if pj.re - pi.re > tol {
                    break;
                }
                if (pj - pi).norm() <= tol {
                    if li != lj {
                        return Err(Error::Inconsistent(format!(
                            "output {output}: sum points for labels {li} and {lj} are within {tol:e}"
                        )));
                    }
                    // keep the lower raw index so tie-breaking follows row order
                    keep[i.max(j)] = false;
                }
            }
        }
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (i, &(p, l)) in raw.iter().enumerate() {
            if keep[i] {
                points.push(p);
                labels.push(l);
            }
        }
        Ok(Self { output, points, labels, tol })
    }

    /// Label of the nearest stored point; ties go to the lowest index.
    pub fn decode(&self, y: C64) -> f64 {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        self.labels[best]
    }

    /// Smallest distance between stored points with different labels.
    pub fn min_label_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for i in 0..self.points.len() {
            for j in i + 1..self.points.len() {
                if self.labels[i] != self.labels[j] {
                    d = d.min((self.points[i] - self.points[j]).norm());
                }
            }
        }
        d
    }
}

/// Decision rule for one output stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Decoder {
    /// Nearest labeled point.
    Table(DecoderTable),
    /// Output that does not depend on the inputs.
    Constant { value: f64 },
    /// Real-axis rounding: `clamp(round(Re y + offset), 0, max) + bias`.
    Pam { offset: f64, max: i64, bias: f64 },
    /// Two-axis rounding of a superposition of `nodes` QAM points of order `q²`.
    Qam { q: u32, nodes: usize },
}

impl Decoder {
    pub fn decode(&self, y: C64) -> f64 {
        match self {
            Decoder::Table(t) => t.decode(y),
            Decoder::Constant { value } => *value,
            Decoder::Pam { offset, max, bias } => {
                let r = (y.re + offset).round().clamp(0.0, *max as f64);
                r + bias
            }
            Decoder::Qam { q, nodes } => crate::closed_form::qam_decode(y, *q, *nodes) as f64,
        }
    }
}

/// Encoders for every node plus one decoder per output stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codec {
    /// Short scheme name (`exact`, `sdp`, `pam-affine`, `qam-conv`, ...).
    pub scheme: String,
    pub q_list: Vec<u32>,
    pub outputs: usize,
    /// `encoders[k][s][ℓ]`: symbol node `k` sends on stream `ℓ` for input `s`.
    pub encoders: Vec<Vec<Vec<C64>>>,
    pub decoders: Vec<Decoder>,
}

impl Codec {
    pub fn nodes(&self) -> usize {
        self.q_list.len()
    }

    /// Checks that the encoder tables and decoders have consistent shapes.
    pub fn validate(&self) -> Result<()> {
        if self.encoders.len() != self.q_list.len() {
            return Err(Error::Dimension("one encoder table per node required".into()));
        }
        if self.decoders.len() != self.outputs {
            return Err(Error::Dimension("one decoder per output required".into()));
        }
        for (k, (table, &q)) in self.encoders.iter().zip(&self.q_list).enumerate() {
            if table.len() != q as usize || table.iter().any(|row| row.len() != self.outputs) {
                return Err(Error::Dimension(format!("encoder table of node {k} has the wrong shape")));
            }
        }
        Ok(())
    }

    pub fn encode(&self, node: usize, s: u32) -> &[C64] {
        &self.encoders[node][s as usize]
    }

    /// Noiseless superposition `Σ_k E_k(s_k)`.
    pub fn superpose(&self, input: &[u32]) -> Vec<C64> {
        let mut r = vec![C64::new(0.0, 0.0); self.outputs];
        for (k, &s) in input.iter().enumerate() {
            for (acc, x) in r.iter_mut().zip(self.encode(k, s)) {
                *acc += x;
            }
        }
        r
    }

    pub fn decode(&self, y: &[C64]) -> Vec<f64> {
        self.decoders.iter().zip(y).map(|(d, &v)| d.decode(v)).collect()
    }

    /// Stacked constellation vector of one stream, `X[offset_k + s] = E_k(s)[ℓ]`.
    pub fn stacked(&self, output: usize) -> Vec<C64> {
        self.encoders.iter().flat_map(|t| t.iter().map(move |row| row[output])).collect()
    }

    /// Mean of `‖E_k(s)‖²` over all nodes and inputs.
    pub fn symbol_power(&self) -> f64 {
        let mut acc = 0.0;
        let mut n = 0usize;
        for table in &self.encoders {
            for row in table {
                acc += row.iter().map(|x| x.norm_sqr()).sum::<f64>();
                n += 1;
            }
        }
        acc / n as f64
    }

    /// Rows of `table` whose noiseless decode differs from the tabulated value.
    pub fn noiseless_failures(&self, table: &FunctionTable) -> Vec<usize> {
        (0..table.rows()).filter(|&i| self.decode(&self.superpose(table.input(i))) != table.row_values(i)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let codec: Codec = serde_json::from_str(text)?;
        codec.validate()?;
        Ok(codec)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn merges_same_label_and_rejects_collisions() {
        let raw = [(c(0.0, 0.0), 0.0), (c(1.0, 0.0), 1.0), (c(1.0, 1e-9), 1.0)];
        let t = DecoderTable::build(0, &raw, 1e-6).unwrap();
        assert_eq!(t.points.len(), 2);
        assert_eq!(t.labels, vec![0.0, 1.0]);

        let bad = [(c(0.0, 0.0), 0.0), (c(1.0, 0.0), 1.0), (c(1.0, 1e-9), 2.0)];
        assert!(matches!(DecoderTable::build(0, &bad, 1e-6), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn nearest_point_and_ties() {
        let raw = [(c(-1.0, 0.0), 5.0), (c(1.0, 0.0), 7.0), (c(0.0, 3.0), 9.0)];
        let t = DecoderTable::build(0, &raw, 1e-6).unwrap();
        assert_eq!(t.decode(c(-1.0, 0.0)), 5.0);
        assert_eq!(t.decode(c(0.9, 0.2)), 7.0);
        // equidistant from the first two points: lowest index wins
        assert_eq!(t.decode(c(0.0, 0.0)), 5.0);
        assert_eq!(t.min_label_distance(), 2.0);
    }

    #[test]
    fn json_roundtrip_is_bit_exact() {
        let codec = Codec {
            scheme: "test".into(),
            q_list: vec![2],
            outputs: 1,
            encoders: vec![vec![vec![c(0.1, 1.0 / 3.0)], vec![c(-2.0f64.sqrt(), 1e-300)]]],
            decoders: vec![Decoder::Table(
                DecoderTable::build(0, &[(c(0.1, 1.0 / 3.0), 0.0), (c(-2.0f64.sqrt(), 1e-300), 1.0)], 1e-6).unwrap(),
            )],
        };
        let back = Codec::from_json(&codec.to_json().unwrap()).unwrap();
        assert_eq!(back, codec);
    }

    #[test]
    fn shape_validation() {
        let codec = Codec {
            scheme: "test".into(),
            q_list: vec![2, 2],
            outputs: 1,
            encoders: vec![vec![vec![c(0.0, 0.0)]; 2]],
            decoders: vec![Decoder::Constant { value: 1.0 }],
        };
        assert!(codec.validate().is_err());
    }
}

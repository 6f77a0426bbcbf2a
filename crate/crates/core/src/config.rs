//! Flat `key = value` configuration files.
//!
//! One entry per line, `#` starts a comment. Lists are comma separated;
//! matrix values separate rows with `;`. Every typed config rejects unknown
//! keys, reports all missing required keys at once and points at the line of
//! any value that fails to parse.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Parsed entries with their line numbers.
#[derive(Debug, Clone, Default)]
pub struct KvDoc {
    entries: BTreeMap<String, (String, usize)>,
}

impl KvDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config_at(line_no, format!("expected `key = value`, got `{line}`")));
            };
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(Error::config_at(line_no, "empty key"));
            }
            if let Some((_, first)) = entries.get(&key) {
                return Err(Error::config_at(line_no, format!("duplicate key `{key}` (first set on line {first})")));
            }
            entries.insert(key, (value.trim().to_string(), line_no));
        }
        Ok(Self { entries })
    }

    /// Overrides or inserts a value (used for command-line overrides).
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), (value.to_string(), 0));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn reader(&self, allowed: &[&str]) -> Result<Reader<'_>> {
        if let Some((key, (_, line))) = self.entries.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(Error::Config { line: (*line > 0).then_some(*line), msg: format!("unknown key `{key}`") });
        }
        Ok(Reader { doc: self, missing: Vec::new() })
    }
}

struct Reader<'a> {
    doc: &'a KvDoc,
    missing: Vec<String>,
}

impl Reader<'_> {
    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        let Some((raw, line)) = self.doc.entries.get(key) else { return Ok(None) };
        raw.parse::<T>().map(Some).map_err(|_| Error::Config {
            line: (*line > 0).then_some(*line),
            msg: format!("`{key}`: cannot parse `{raw}` as {}", short_type::<T>()),
        })
    }

    fn req<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        let v = self.opt(key)?;
        if v.is_none() {
            self.missing.push(key.to_string());
        }
        Ok(v)
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.opt(key)?.unwrap_or(default))
    }

    fn finish(self) -> Result<()> {
        if self.missing.is_empty() {
            Ok(())
        } else {
            Err(Error::config(format!("missing: {}", self.missing.join(", "))))
        }
    }
}

fn short_type<T>() -> &'static str {
    let full = std::any::type_name::<T>();
    match full {
        "u32" | "u64" | "usize" => "a non-negative integer",
        "f64" => "a number",
        "bool" => "true or false",
        _ => full.rsplit("::").next().unwrap_or(full),
    }
}

/// Comma-separated list value.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T: FromStr> FromStr for List<T> {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        let items: std::result::Result<Vec<T>, _> =
            s.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::parse).collect();
        match items {
            Ok(v) if !v.is_empty() => Ok(List(v)),
            _ => Err(()),
        }
    }
}

impl<T: fmt::Display> fmt::Display for List<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Matrix value with rows separated by `;`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rows<T>(pub Vec<Vec<T>>);

impl<T: FromStr> FromStr for Rows<T> {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        s.split(';').map(|r| r.parse::<List<T>>().map(|l| l.0)).collect::<std::result::Result<_, _>>().map(Rows)
    }
}

impl<T: fmt::Display> fmt::Display for Rows<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> =
            self.0.iter().map(|r| r.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")).collect();
        f.write_str(&rows.join(";"))
    }
}

macro_rules! keyword_enum {
    ($(#[$m:meta])* $name:ident { $($var:ident => $s:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($var),+ }

        impl FromStr for $name {
            type Err = ();
            fn from_str(s: &str) -> std::result::Result<Self, ()> {
                match s { $($s => Ok($name::$var),)+ _ => Err(()) }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($name::$var => $s),+ })
            }
        }
    };
}

keyword_enum!(
    /// Encoding scheme used by a scenario.
    CodecKind {
        Sdp => "sdp",
        Exact => "exact",
        PamAffine => "pam-affine",
        QamConv => "qam-conv",
        RawSum => "raw-sum",
    }
);

keyword_enum!(
    /// Reference power dividing the mean squared error.
    Normalization {
        SumSymbolPower => "sum-symbol-power",
        FunctionPower => "function-power",
    }
);

keyword_enum!(
    /// How node beamformers are drawn: i.i.d. Gaussian, or orthonormalized
    /// columns scaled so that `V^H V = N_t σ_v² I` exactly.
    BeamformerKind {
        Gaussian => "gaussian",
        PowerNormalized => "power-normalized",
    }
);

keyword_enum!(
    /// Scalar type of the channel simulation.
    Precision {
        F32 => "f32",
        F64 => "f64",
    }
);

/// One simulated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub k: usize,
    /// Receive antennas; `None` bypasses the fading channel (`y = Σx + z`).
    pub n_r: Option<usize>,
    pub n_t: Option<usize>,
    pub l: usize,
    /// Input alphabet sizes, one entry (shared) or one per node.
    pub q: Vec<u32>,
    /// Coefficient field sizes of the affine map (defaults to `q`).
    pub q_coef: Option<Vec<u32>>,
    pub snr_db: f64,
    pub trials: usize,
    pub codec: CodecKind,
    /// Target function for designed codecs: built-in names (one, or one per
    /// output), `random`, or `table:<path>`.
    pub function: String,
    /// Output levels of a `random` function.
    pub levels: u32,
    pub coefficients: Option<Vec<Vec<u32>>>,
    pub bias: Option<Vec<i64>>,
    pub kernel: Option<Vec<u32>>,
    pub alpha_corr: f64,
    pub sigma_h: f64,
    pub beamformer: BeamformerKind,
    pub seed: u64,
    pub baseline: bool,
    pub normalization: Option<Normalization>,
    pub p_max: f64,
    pub precision: Precision,
}

const SCENARIO_KEYS: &[&str] = &[
    "K",
    "N_r",
    "N_t",
    "L",
    "Q",
    "Q_coef",
    "snr_db",
    "trials",
    "codec",
    "function",
    "levels",
    "coefficients",
    "bias",
    "kernel",
    "alpha_corr",
    "sigma_h",
    "beamformer",
    "seed",
    "baseline",
    "normalization",
    "p_max",
    "precision",
];

impl ScenarioConfig {
    /// A scenario with every optional field at its default.
    pub fn new(k: usize, l: usize, q: u32, snr_db: f64, trials: usize, codec: CodecKind) -> Self {
        Self {
            k,
            n_r: None,
            n_t: None,
            l,
            q: vec![q],
            q_coef: None,
            snr_db,
            trials,
            codec,
            function: "sum".into(),
            levels: 4,
            coefficients: None,
            bias: None,
            kernel: None,
            alpha_corr: 0.0,
            sigma_h: 1.0,
            beamformer: BeamformerKind::Gaussian,
            seed: 0,
            baseline: false,
            normalization: None,
            p_max: 1e12,
            precision: Precision::F64,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_doc(&KvDoc::parse(text)?)
    }

    pub fn from_doc(doc: &KvDoc) -> Result<Self> {
        let mut r = doc.reader(SCENARIO_KEYS)?;
        let k = r.req::<usize>("K")?;
        let l = r.req::<usize>("L")?;
        let q = r.req::<List<u32>>("Q")?;
        let snr_db = r.req::<f64>("snr_db")?;
        let trials = r.req::<usize>("trials")?;
        let codec = r.req::<CodecKind>("codec")?;
        let n_r = r.opt::<usize>("N_r")?;
        let n_t = r.opt::<usize>("N_t")?;
        match (n_r, n_t) {
            (Some(_), None) => r.missing.push("N_t".into()),
            (None, Some(_)) => r.missing.push("N_r".into()),
            _ => {}
        }
        let defaults = ScenarioConfig::new(0, 0, 2, 0.0, 0, CodecKind::RawSum);
        let cfg = ScenarioConfig {
            n_r,
            n_t,
            q_coef: r.opt::<List<u32>>("Q_coef")?.map(|l| l.0),
            function: r.or("function", defaults.function.clone())?,
            levels: r.or("levels", defaults.levels)?,
            coefficients: r.opt::<Rows<u32>>("coefficients")?.map(|m| m.0),
            bias: r.opt::<List<i64>>("bias")?.map(|l| l.0),
            kernel: r.opt::<List<u32>>("kernel")?.map(|l| l.0),
            alpha_corr: r.or("alpha_corr", defaults.alpha_corr)?,
            sigma_h: r.or("sigma_h", defaults.sigma_h)?,
            beamformer: r.or("beamformer", defaults.beamformer)?,
            seed: r.or("seed", defaults.seed)?,
            baseline: r.or("baseline", defaults.baseline)?,
            normalization: r.opt("normalization")?,
            p_max: r.or("p_max", defaults.p_max)?,
            precision: r.or("precision", defaults.precision)?,
            k: k.unwrap_or(0),
            l: l.unwrap_or(0),
            q: q.map(|l| l.0).unwrap_or_default(),
            snr_db: snr_db.unwrap_or(0.0),
            trials: trials.unwrap_or(0),
            codec: codec.unwrap_or(CodecKind::RawSum),
        };
        r.finish()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::config(m));
        if self.k == 0 || self.l == 0 || self.trials == 0 {
            return bad("K, L and trials must be at least 1".into());
        }
        if self.q.is_empty() || (self.q.len() != 1 && self.q.len() != self.k) || self.q.iter().any(|&q| q < 2) {
            return bad(format!("Q must list one size ≥ 2 or one per node (K = {})", self.k));
        }
        if let Some(qc) = &self.q_coef {
            if (qc.len() != 1 && qc.len() != self.k) || qc.iter().any(|&q| q < 2) {
                return bad("Q_coef must list one size ≥ 2 or one per node".into());
            }
        }
        match (self.n_r, self.n_t) {
            (Some(n_r), Some(n_t)) => {
                if n_r == 0 || n_t == 0 {
                    return bad("N_r and N_t must be positive".into());
                }
                if self.l > n_r.min(n_t) {
                    return bad(format!(
                        "L = {} exceeds min{{N_r, N_t}} = {}: the number of parallel streams is limited by the antenna arrays",
                        self.l,
                        n_r.min(n_t)
                    ));
                }
            }
            (Some(_), None) => return bad("missing: N_t".into()),
            (None, Some(_)) => return bad("missing: N_r".into()),
            (None, None) => {}
        }
        if !(0.0..1.0).contains(&self.alpha_corr) {
            return bad(format!("alpha_corr = {} outside [0, 1)", self.alpha_corr));
        }
        if !(self.sigma_h > 0.0) || !self.snr_db.is_finite() || !(self.p_max > 0.0) {
            return bad("sigma_h and p_max must be positive and snr_db finite".into());
        }
        if self.codec == CodecKind::RawSum {
            if self.normalization == Some(Normalization::FunctionPower) {
                return bad("raw-sum carries no function values; use sum-symbol-power".into());
            }
            if self.baseline {
                return bad("the wideband baseline needs a function codec".into());
            }
        }
        if let Some(a) = &self.coefficients {
            if a.len() != self.l || a.iter().any(|row| row.len() != self.k) {
                return bad(format!("coefficients must be an L × K = {} × {} matrix", self.l, self.k));
            }
        }
        if let Some(b) = &self.bias {
            if b.len() != self.l {
                return bad(format!("bias must have L = {} entries", self.l));
            }
        }
        if let Some(a) = &self.kernel {
            if a.len() + 1 != self.l + self.k {
                return bad(format!("kernel must have L + K − 1 = {} entries", self.l + self.k - 1));
            }
        }
        if matches!(self.codec, CodecKind::QamConv | CodecKind::PamAffine) && self.q.iter().any(|&q| q != self.q[0]) {
            return bad(format!("{} needs a single field size Q", self.codec));
        }
        Ok(())
    }

    /// Per-node input alphabet sizes.
    pub fn q_list(&self) -> Vec<u32> {
        if self.q.len() == 1 {
            vec![self.q[0]; self.k]
        } else {
            self.q.clone()
        }
    }

    pub fn is_mimo(&self) -> bool {
        self.n_r.is_some()
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization.unwrap_or(match self.codec {
            CodecKind::RawSum => Normalization::SumSymbolPower,
            _ => Normalization::FunctionPower,
        })
    }

    /// Every field as `(key, value)`, in a fixed order; optional fields that
    /// are unset are omitted.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let mut v: Vec<(&'static str, String)> = vec![("K", self.k.to_string())];
        if let Some(n) = self.n_r {
            v.push(("N_r", n.to_string()));
        }
        if let Some(n) = self.n_t {
            v.push(("N_t", n.to_string()));
        }
        v.push(("L", self.l.to_string()));
        v.push(("Q", List(self.q.clone()).to_string()));
        if let Some(q) = &self.q_coef {
            v.push(("Q_coef", List(q.clone()).to_string()));
        }
        v.push(("snr_db", self.snr_db.to_string()));
        v.push(("trials", self.trials.to_string()));
        v.push(("codec", self.codec.to_string()));
        v.push(("function", self.function.clone()));
        v.push(("levels", self.levels.to_string()));
        if let Some(a) = &self.coefficients {
            v.push(("coefficients", Rows(a.clone()).to_string()));
        }
        if let Some(b) = &self.bias {
            v.push(("bias", List(b.clone()).to_string()));
        }
        if let Some(a) = &self.kernel {
            v.push(("kernel", List(a.clone()).to_string()));
        }
        v.push(("alpha_corr", self.alpha_corr.to_string()));
        v.push(("sigma_h", self.sigma_h.to_string()));
        v.push(("beamformer", self.beamformer.to_string()));
        v.push(("seed", self.seed.to_string()));
        v.push(("baseline", self.baseline.to_string()));
        if let Some(n) = self.normalization {
            v.push(("normalization", n.to_string()));
        }
        v.push(("p_max", self.p_max.to_string()));
        v.push(("precision", self.precision.to_string()));
        v
    }

    pub fn to_text(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Inputs of the antenna-count bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub l: usize,
    pub k: usize,
    /// `Σ_k ‖x_k‖₂`.
    pub gamma1: f64,
    /// `Σ_k ‖x_k‖₂²`.
    pub gamma2: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub sigma_z: f64,
    pub c0: f64,
}

impl BoundInputs {
    /// Unit-norm symbols: `γ₁ = γ₂ = K`.
    pub fn unit(l: usize, k: usize, epsilon: f64, delta: f64) -> Self {
        Self { l, k, gamma1: k as f64, gamma2: k as f64, epsilon, delta, sigma_z: 1.0, c0: 2.0 }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_doc(&KvDoc::parse(text)?)
    }

    pub fn from_doc(doc: &KvDoc) -> Result<Self> {
        let mut r = doc.reader(&["L", "K", "gamma1", "gamma2", "epsilon", "delta", "sigma_z", "c0"])?;
        let l = r.req::<usize>("L")?;
        let k = r.req::<usize>("K")?;
        let epsilon = r.req::<f64>("epsilon")?;
        let delta = r.req::<f64>("delta")?;
        let gamma1 = r.opt::<f64>("gamma1")?;
        let gamma2 = r.opt::<f64>("gamma2")?;
        let sigma_z = r.or("sigma_z", 1.0)?;
        let c0 = r.or("c0", 2.0)?;
        r.finish()?;
        let (l, k) = (l.unwrap_or(0), k.unwrap_or(0));
        let b = Self {
            l,
            k,
            gamma1: gamma1.unwrap_or(k as f64),
            gamma2: gamma2.unwrap_or(k as f64),
            epsilon: epsilon.unwrap_or(0.0),
            delta: delta.unwrap_or(0.0),
            sigma_z,
            c0,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l == 0 || self.k == 0 {
            return Err(Error::config("L and K must be at least 1"));
        }
        if !(self.epsilon > 0.0) || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("need epsilon > 0 and 0 < delta < 1"));
        }
        if !(self.gamma1 > 0.0 && self.gamma2 > 0.0) || !(self.sigma_z >= 0.0) || !(self.c0 > 1.0) {
            return Err(Error::config("need gamma1, gamma2 > 0, sigma_z ≥ 0 and c0 > 1"));
        }
        Ok(())
    }
}

/// Parameters of the eigenvalue concentration check.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenCheckConfig {
    pub n_r: usize,
    pub n_t: usize,
    pub sigma_h: f64,
    pub trials: usize,
    pub seed: u64,
}

impl EigenCheckConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_doc(&KvDoc::parse(text)?)
    }

    pub fn from_doc(doc: &KvDoc) -> Result<Self> {
        let mut r = doc.reader(&["N_r", "N_t", "sigma_h", "trials", "seed"])?;
        let n_r = r.req::<usize>("N_r")?;
        let n_t = r.req::<usize>("N_t")?;
        let c = Self {
            n_r: n_r.unwrap_or(0),
            n_t: n_t.unwrap_or(0),
            sigma_h: r.or("sigma_h", 1.0)?,
            trials: r.or("trials", 100)?,
            seed: r.or("seed", 0)?,
        };
        r.finish()?;
        if c.n_t == 0 || c.n_r < c.n_t || c.trials == 0 || !(c.sigma_h > 0.0) {
            return Err(Error::config("need N_r ≥ N_t ≥ 1, trials ≥ 1 and sigma_h > 0"));
        }
        Ok(c)
    }
}

/// Parameters of the empirical tail-probability check.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCheckConfig {
    pub bound: BoundInputs,
    /// Receive antennas; defaults to the bound's minimum.
    pub n_r: Option<usize>,
    /// Transmit antennas; defaults to `max{σ_z², L}`.
    pub n_t: Option<usize>,
    pub alpha_corr: f64,
    pub beamformer: BeamformerKind,
    pub trials: usize,
    pub seed: u64,
}

impl TailCheckConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_doc(&KvDoc::parse(text)?)
    }

    pub fn from_doc(doc: &KvDoc) -> Result<Self> {
        let mut r = doc.reader(&[
            "L",
            "K",
            "epsilon",
            "delta",
            "sigma_z",
            "c0",
            "N_r",
            "N_t",
            "alpha_corr",
            "beamformer",
            "trials",
            "seed",
        ])?;
        let l = r.req::<usize>("L")?;
        let k = r.req::<usize>("K")?;
        let epsilon = r.req::<f64>("epsilon")?;
        let delta = r.req::<f64>("delta")?;
        let mut bound = BoundInputs::unit(l.unwrap_or(0), k.unwrap_or(0), epsilon.unwrap_or(0.0), delta.unwrap_or(0.0));
        bound.sigma_z = r.or("sigma_z", 1.0)?;
        bound.c0 = r.or("c0", 2.0)?;
        let c = Self {
            bound,
            n_r: r.opt("N_r")?,
            n_t: r.opt("N_t")?,
            alpha_corr: r.or("alpha_corr", 0.0)?,
            beamformer: r.or("beamformer", BeamformerKind::Gaussian)?,
            trials: r.or("trials", 500)?,
            seed: r.or("seed", 0)?,
        };
        r.finish()?;
        c.bound.validate()?;
        if c.trials < 100 {
            return Err(Error::config("tail checks need at least 100 trials"));
        }
        if !(0.0..1.0).contains(&c.alpha_corr) {
            return Err(Error::config("alpha_corr outside [0, 1)"));
        }
        Ok(c)
    }
}

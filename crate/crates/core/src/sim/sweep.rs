use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use super::{nmse_from_pairs, run_scenario, run_trial, Scenario, TrialRecord};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    SnrDb,
    NR,
    K,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::SnrDb => "snr_db",
            Axis::NR => "N_r",
            Axis::K => "K",
        }
    }

    /// Sets the swept parameter of `cfg` to `value`.
    pub fn apply(self, cfg: &mut ScenarioConfig, value: f64) -> Result<()> {
        let count = || {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::config(format!("{} must be a positive integer, got {value}", self.name())))
            }
        };
        match self {
            Axis::SnrDb => cfg.snr_db = value,
            Axis::NR => cfg.n_r = Some(count()?),
            Axis::K => cfg.k = count()?,
        }
        Ok(())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr_db" => Ok(Axis::SnrDb),
            "N_r" => Ok(Axis::NR),
            "K" => Ok(Axis::K),
            _ => Err(Error::config(format!("unknown sweep axis `{s}` (expected snr_db, N_r or K)"))),
        }
    }
}

/// One labelled curve: a base configuration swept along the axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub base: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub curves: Vec<Curve>,
}

impl SweepSpec {
    pub fn single(name: &str, base: ScenarioConfig, axis: Axis, values: Vec<f64>) -> Self {
        Self { name: name.into(), axis, values, curves: vec![Curve { label: "main".into(), base }] }
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        for c in &mut self.curves {
            c.base.trials = trials;
        }
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        for c in &mut self.curves {
            c.base.seed = seed;
        }
        self
    }

    /// Keeps only the curves whose label is listed.
    pub fn only_curves(mut self, labels: &[&str]) -> Self {
        self.curves.retain(|c| labels.contains(&c.label.as_str()));
        self
    }

    pub fn point_config(&self, curve: &Curve, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = curve.base.clone();
        self.axis.apply(&mut cfg, value)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub value: f64,
    pub nmse: f64,
    pub stderr: f64,
    pub trials: usize,
    /// Per-trial records, kept only on request.
    pub records: Option<Vec<TrialRecord>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveResult {
    pub label: String,
    pub base: ScenarioConfig,
    pub points: Vec<PointResult>,
}

impl CurveResult {
    /// Each point is at most `slack` standard errors above its predecessor.
    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.points.windows(2).all(|w| {
            let se = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
            w[1].nmse <= w[0].nmse + slack * se
        })
    }

    /// Largest over smallest NMSE along the curve.
    pub fn spread(&self) -> f64 {
        let max = self.points.iter().map(|p| p.nmse).fold(f64::NEG_INFINITY, f64::max);
        let min = self.points.iter().map(|p| p.nmse).fold(f64::INFINITY, f64::min);
        max / min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub name: String,
    pub axis: Axis,
    pub curves: Vec<CurveResult>,
}

pub const SNR_DEFINITION: &str = "sigma_z^2 = mean symbol energy * 10^(-snr_db/10)";

impl SweepResult {
    pub fn curve(&self, label: &str) -> Option<&CurveResult> {
        self.curves.iter().find(|c| c.label == label)
    }

    /// CSV with `#key=value` metadata: a sweep header, then per curve its
    /// full configuration followed by the data rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "#sweep={}", self.name);
        let _ = writeln!(out, "#axis={}", self.axis.name());
        let _ = writeln!(out, "#snr_definition={SNR_DEFINITION}");
        let _ = writeln!(out, "#curves={}", self.curves.len());
        for c in &self.curves {
            let _ = writeln!(out, "#curve={}", c.label);
            for (k, v) in c.base.to_pairs() {
                let _ = writeln!(out, "#{k}={v}");
            }
            let _ = writeln!(out, "#normalization_used={}", c.base.normalization());
            let uses = if c.base.baseline { c.base.k } else { 1 };
            let _ = writeln!(out, "#channel_uses={uses}");
            out.push_str("axis,nmse_mean,nmse_stderr,trials\n");
            for p in &c.points {
                let _ = writeln!(out, "{},{:.16e},{:.16e},{}", p.value, p.nmse, p.stderr, p.trials);
            }
        }
        out
    }

    /// The data rows only (everything but `#` lines).
    pub fn csv_body(&self) -> String {
        self.to_csv().lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Runs every point of every curve; trials of a point run in parallel.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with(spec, false)
}

pub fn run_sweep_with(spec: &SweepSpec, keep_records: bool) -> Result<SweepResult> {
    if spec.values.is_empty() || spec.curves.is_empty() {
        return Err(Error::config("a sweep needs at least one axis value and one curve"));
    }
    let mut curves = Vec::with_capacity(spec.curves.len());
    for curve in &spec.curves {
        let mut points = Vec::with_capacity(spec.values.len());
        for &value in &spec.values {
            let ctx = || format!("curve {}, {} = {value}", curve.label, spec.axis.name());
            let point = run_point(spec, curve, value, keep_records).map_err(|e| e.at(ctx()))?;
            points.push(point);
        }
        curves.push(CurveResult { label: curve.label.clone(), base: curve.base.clone(), points });
    }
    Ok(SweepResult { name: spec.name.clone(), axis: spec.axis, curves })
}

fn run_point(spec: &SweepSpec, curve: &Curve, value: f64, keep_records: bool) -> Result<PointResult> {
    let cfg = spec.point_config(curve, value)?;
    let scenario = Scenario::prepare(&cfg)?;
    let norm = cfg.normalization();
    let (pairs, records) = if keep_records {
        let recs = run_scenario(&scenario)?;
        (recs.iter().map(|r| r.error_and_power(norm)).collect::<Vec<_>>(), Some(recs))
    } else {
        let pairs = (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(&scenario, t).map(|r| r.error_and_power(norm)))
            .collect::<Result<Vec<_>>>()?;
        (pairs, None)
    };
    let est = nmse_from_pairs(&pairs)?;
    Ok(PointResult { value, nmse: est.mean, stderr: est.stderr, trials: est.trials, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CodecKind, Normalization};
    use crate::sim::nmse_with_stderr;

    #[test]
    fn one_point_sweep_matches_direct_nmse() {
        let mut cfg = ScenarioConfig::new(3, 2, 4, 0.0, 200, CodecKind::PamAffine);
        cfg.seed = 9;
        let spec = SweepSpec::single("t", cfg.clone(), Axis::SnrDb, vec![3.0]);
        let res = run_sweep_with(&spec, true).unwrap();
        let p = &res.curves[0].points[0];

        cfg.snr_db = 3.0;
        let recs = run_scenario(&Scenario::prepare(&cfg).unwrap()).unwrap();
        let direct = nmse_with_stderr(&recs, Normalization::FunctionPower).unwrap();
        assert_eq!((p.nmse, p.stderr, p.trials), (direct.mean, direct.stderr, 200));
        assert_eq!(p.records.as_ref().unwrap(), &recs);
    }

    #[test]
    fn csv_layout() {
        let cfg = ScenarioConfig::new(2, 1, 2, 0.0, 10, CodecKind::PamAffine);
        let res = run_sweep(&SweepSpec::single("t", cfg, Axis::SnrDb, vec![0.0, 10.0])).unwrap();
        let csv = res.to_csv();
        assert!(csv.contains("#seed=0\n"));
        assert!(csv.contains("#snr_definition="));
        let body = res.csv_body();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines[0], "axis,nmse_mean,nmse_stderr,trials");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("10,"));
        let mantissa = lines[1].split(',').nth(1).unwrap().split('e').next().unwrap();
        assert_eq!(mantissa.replace(['.', '-'], "").len(), 17);
    }

    #[test]
    fn errors_carry_point_context() {
        let cfg = ScenarioConfig::new(2, 1, 2, 0.0, 10, CodecKind::RawSum);
        let spec = SweepSpec::single("t", cfg, Axis::K, vec![2.5]);
        let e = run_sweep(&spec).unwrap_err();
        assert!(e.to_string().starts_with("curve main, K = 2.5"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }
}

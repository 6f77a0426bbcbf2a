//! Named sweeps that pin every parameter of the reference experiments.

use super::sweep::{Axis, Curve, SweepSpec};
use crate::config::{BeamformerKind, CodecKind, ScenarioConfig};
use crate::error::{Error, Result};

pub fn preset_names() -> &'static [&'static str] {
    &["fig2", "fig3", "fig4", "fig5-text", "fig5-caption", "fig6"]
}

fn steps(from: f64, to: f64, step: f64) -> Vec<f64> {
    let n = ((to - from) / step).round() as usize;
    (0..=n).map(|i| from + step * i as f64).collect()
}

fn raw_sum(k: usize, n_r: usize, l: usize, snr_db: f64, trials: usize) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(k, l, 4, snr_db, trials, CodecKind::RawSum);
    c.n_r = Some(n_r);
    c.n_t = Some(l);
    c
}

/// Builds the named sweep.
///
/// - `fig2`: raw symbol sum, K = 100, N_t = L ∈ {2, 4, 8}, SNR 20 dB,
///   N_r from 10 to 50, i.i.d. Gaussian beamformers, 10³ trials.
/// - `fig3`: raw symbol sum, N_t = L = 4, SNR 5 dB, N_r ∈ {128, 512, 2048},
///   K from 4 to 32, power-normalized beamformers, 10⁴ trials.
/// - `fig4`: product, mean, max and sum of squares of K = 3 inputs with
///   Q = 4, SDP-designed codec against the orthogonal-access baseline, SNR
///   −5 to 25 dB, 10³ trials.
/// - `fig5-text` / `fig5-caption`: PAM affine maps (K, L) = (50, 5) with
///   Q ∈ {4, 8, 16, 32} and (10, 10) with Q ∈ {8, 16, 32}; coefficients share
///   the input field, so the aggregate PAM order is Q². SNR 10 to 30 dB,
///   5·10³ trials.
/// - `fig6`: QAM convolution, K = 2, L = 4, Q ∈ {4, 8, 16} (Q² = 16, 64, 256
///   point grids), SNR 5 to 30 dB, 10⁴ trials.
///
/// `fig4`, `fig5-*` and `fig6` use the single-antenna channel `y = Σx + z`.
pub fn preset(name: &str) -> Result<SweepSpec> {
    let spec = match name {
        "fig2" => SweepSpec {
            name: name.into(),
            axis: Axis::NR,
            values: steps(10.0, 50.0, 10.0),
            curves: [2, 4, 8]
                .iter()
                .map(|&l| Curve { label: format!("L={l}"), base: raw_sum(100, 10, l, 20.0, 1000) })
                .collect(),
        },
        "fig3" => SweepSpec {
            name: name.into(),
            axis: Axis::K,
            values: steps(4.0, 32.0, 4.0),
            curves: [128, 512, 2048]
                .iter()
                .map(|&n_r| {
                    let mut base = raw_sum(4, n_r, 4, 5.0, 10_000);
                    base.beamformer = BeamformerKind::PowerNormalized;
                    Curve { label: format!("N_r={n_r}"), base }
                })
                .collect(),
        },
        "fig4" => SweepSpec {
            name: name.into(),
            axis: Axis::SnrDb,
            values: steps(-5.0, 25.0, 5.0),
            curves: [("designed", false), ("wideband", true)]
                .iter()
                .map(|&(label, baseline)| {
                    let mut base = ScenarioConfig::new(3, 4, 4, 0.0, 1000, CodecKind::Sdp);
                    base.function = "product,mean,max,sum_sq".into();
                    base.baseline = baseline;
                    Curve { label: label.into(), base }
                })
                .collect(),
        },
        "fig5-text" | "fig5-caption" => {
            let (k, l, qs): (usize, usize, &[u32]) =
                if name == "fig5-text" { (50, 5, &[4, 8, 16, 32]) } else { (10, 10, &[8, 16, 32]) };
            SweepSpec {
                name: name.into(),
                axis: Axis::SnrDb,
                values: steps(10.0, 30.0, 5.0),
                curves: qs
                    .iter()
                    .map(|&q| Curve {
                        label: format!("Q={q}"),
                        base: ScenarioConfig::new(k, l, q, 0.0, 5000, CodecKind::PamAffine),
                    })
                    .collect(),
            }
        }
        "fig6" => SweepSpec {
            name: name.into(),
            axis: Axis::SnrDb,
            values: steps(5.0, 30.0, 5.0),
            curves: [4u32, 8, 16]
                .iter()
                .map(|&q| Curve {
                    label: format!("Q^2={}", q * q),
                    base: ScenarioConfig::new(2, 4, q, 0.0, 10_000, CodecKind::QamConv),
                })
                .collect(),
        },
        other => return Err(Error::config(format!("unknown preset `{other}` (known: {})", preset_names().join(", ")))),
    };
    Ok(spec)
}

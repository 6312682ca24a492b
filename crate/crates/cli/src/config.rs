//! Experiment configuration: TOML sections for the channel, the code, the
//! receiver, and each experiment kind.

use anyhow::{bail, Context};
use isi2d::turbo::ReceiverScheme;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub psf: PsfSection,
    pub code: CodeSection,
    #[serde(default)]
    pub receiver: ReceiverSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub exit: Option<ExitSection>,
    #[serde(default)]
    pub threshold: Option<ThresholdSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsfSection {
    pub s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    pub n: usize,
    pub dv: usize,
    pub dc: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverSection {
    pub scheme: ReceiverScheme,
    pub n_half: usize,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub crossover: f64,
}

impl Default for ReceiverSection {
    fn default() -> Self {
        ReceiverSection {
            scheme: ReceiverScheme::Exact,
            n_half: 2,
            outer_iters: 10,
            inner_iters: 20,
            crossover: 0.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Rate-adjusted SNR grid in dB.
    pub snr_db: Vec<f64>,
    pub trials: u64,
    #[serde(default)]
    pub min_errors: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitSection {
    /// SNR in dB; unadjusted unless `rate_adjusted` is set.
    pub snr_db: Vec<f64>,
    #[serde(default)]
    pub rate_adjusted: bool,
    pub i_grid: Vec<f64>,
    #[serde(default = "default_page_side")]
    pub page_side: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Subset of {exact, approx1, approx2, decoder}.
    pub components: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSection {
    pub s_values: Vec<f64>,
    /// Subset of {exact, approx1, approx2, hybrid}.
    pub schemes: Vec<ReceiverScheme>,
    #[serde(default = "default_tol_db")]
    pub tol_db: f64,
    #[serde(default = "default_page_side")]
    pub page_side: usize,
    #[serde(default = "default_de_repeats")]
    pub repeats: usize,
}

fn default_page_side() -> usize {
    300
}
fn default_repeats() -> usize {
    4
}
fn default_de_repeats() -> usize {
    3
}
fn default_tol_db() -> f64 {
    0.04
}

impl Config {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: Config = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(self.psf.s.is_finite() && self.psf.s >= 0.0) {
            bail!("psf.s must be finite and nonnegative, got {}", self.psf.s);
        }
        if self.code.n == 0 || self.code.dv == 0 || self.code.dc == 0 {
            bail!("code.n, code.dv, code.dc must be positive");
        }
        if (self.code.n * self.code.dv) % self.code.dc != 0 {
            bail!(
                "code.n * code.dv = {} is not divisible by code.dc = {}",
                self.code.n * self.code.dv,
                self.code.dc
            );
        }
        if self.receiver.outer_iters == 0 || self.receiver.inner_iters == 0 {
            bail!("receiver.outer_iters and receiver.inner_iters must be >= 1");
        }
        if let Some(sweep) = &self.sweep {
            if sweep.snr_db.is_empty() {
                bail!("sweep.snr_db must list at least one SNR");
            }
            if sweep.trials == 0 {
                bail!("sweep.trials must be >= 1");
            }
        }
        if let Some(exit) = &self.exit {
            if exit.snr_db.is_empty() || exit.i_grid.is_empty() {
                bail!("exit.snr_db and exit.i_grid must be nonempty");
            }
            if exit.i_grid.iter().any(|i| !(0.0..=1.0).contains(i)) {
                bail!("exit.i_grid entries must lie in [0, 1]");
            }
            for c in &exit.components {
                parse_component(c)?;
            }
        }
        if let Some(th) = &self.threshold {
            if th.s_values.is_empty() || th.schemes.is_empty() {
                bail!("threshold.s_values and threshold.schemes must be nonempty");
            }
            if th.tol_db <= 0.0 {
                bail!("threshold.tol_db must be positive");
            }
        }
        Ok(())
    }

    pub fn rate(&self) -> f64 {
        1.0 - self.code.dv as f64 / self.code.dc as f64
    }
}

/// EXIT component selector in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitComponent {
    Equalizer(isi2d::equalizer::Scheme),
    Decoder,
}

pub fn parse_component(name: &str) -> anyhow::Result<ExitComponent> {
    use isi2d::equalizer::Scheme;
    Ok(match name {
        "exact" => ExitComponent::Equalizer(Scheme::Exact),
        "approx1" => ExitComponent::Equalizer(Scheme::Approx1),
        "approx2" => ExitComponent::Equalizer(Scheme::Approx2),
        "decoder" => ExitComponent::Decoder,
        other => bail!(
            "unknown EXIT component {other:?}; valid: exact, approx1, approx2, decoder"
        ),
    })
}

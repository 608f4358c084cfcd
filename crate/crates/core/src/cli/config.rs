//! TOML experiment configuration.
//!
//! ```toml
//! m_t = 4
//! n_c = 8
//! n_p = 8
//! n_t = 8
//! snr_db = 10.0
//! d = 3.5
//! epsilon = 0.5
//! n_t_grid = [8, 16, 32, 64, 128]
//! trials = 10000
//! seed = 1
//! covariance_seed = 0
//! out = "out"
//! unit = "nats"
//!
//! [covariance]
//! kind = "three_tier"
//! lo = 0.3
//! mid = 1.0
//! hi = 2.0
//! ```
//!
//! Other covariance kinds: `{ kind = "identity" }`,
//! `{ kind = "kronecker", rho_s = 0.5, rho_f = 0.3 }` and
//! `{ kind = "file", path = "cov.txt" }` (matrix text format, relative to the
//! config file).

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channel::{make_covariance, ChannelModel, CovarianceKind, SystemConfig, DEFAULT_EPSILON, DEFAULT_TIER_LEVELS};
use crate::error::{Error, Result};
use crate::numerics::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RateUnit {
    #[default]
    Nats,
    Bits,
}

impl RateUnit {
    /// Multiplier applied to a rate in nats.
    pub fn factor(self) -> f64 {
        match self {
            RateUnit::Nats => 1.0,
            RateUnit::Bits => std::f64::consts::LOG2_E,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RateUnit::Nats => "nats",
            RateUnit::Bits => "bits",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceSpec {
    Identity(IdentitySpec),
    Kronecker(KroneckerSpec),
    ThreeTier(ThreeTierSpec),
    File(FileSpec),
}

// Variant bodies are separate structs because unknown-field rejection does not
// reach into the variants of an internally tagged enum.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitySpec {}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KroneckerSpec {
    pub rho_s: f64,
    pub rho_f: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThreeTierSpec {
    #[serde(default = "tier_lo")]
    pub lo: f64,
    #[serde(default = "tier_mid")]
    pub mid: f64,
    #[serde(default = "tier_hi")]
    pub hi: f64,
    pub trace: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSpec {
    pub path: PathBuf,
}

fn tier_lo() -> f64 {
    DEFAULT_TIER_LEVELS.0
}
fn tier_mid() -> f64 {
    DEFAULT_TIER_LEVELS.1
}
fn tier_hi() -> f64 {
    DEFAULT_TIER_LEVELS.2
}

impl Default for CovarianceSpec {
    fn default() -> Self {
        let (lo, mid, hi) = DEFAULT_TIER_LEVELS;
        CovarianceSpec::ThreeTier(ThreeTierSpec { lo, mid, hi, trace: None })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    m_t: usize,
    n_c: usize,
    n_p: Option<usize>,
    #[serde(default = "default_n_t")]
    n_t: usize,
    snr_db: f64,
    d: f64,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default = "default_grid")]
    n_t_grid: Vec<usize>,
    #[serde(default = "default_trials")]
    trials: usize,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default)]
    covariance_seed: u64,
    #[serde(default = "default_out")]
    out: PathBuf,
    #[serde(default)]
    unit: RateUnit,
    #[serde(default)]
    covariance: CovarianceSpec,
}

fn default_n_t() -> usize {
    8
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}
fn default_grid() -> Vec<usize> {
    vec![8, 16, 32, 64, 128]
}
fn default_trials() -> usize {
    10_000
}
fn default_seed() -> u64 {
    1
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// A validated experiment configuration; SNR is stored linear.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub covariance: CovarianceSpec,
    pub n_t_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Seeds the random eigenbasis of the three-tier covariance.
    pub covariance_seed: u64,
    pub out: PathBuf,
    pub unit: RateUnit,
    /// Directory against which relative covariance file paths resolve.
    pub base_dir: PathBuf,
}

/// The default four-antenna, eight-subcarrier, 10 dB configuration at d = 3.5.
pub const DEFAULT_CONFIG: &str = r#"
m_t = 4
n_c = 8
n_p = 8
n_t = 8
snr_db = 10.0
d = 3.5
epsilon = 0.5
n_t_grid = [8, 16, 32, 64, 128]
trials = 10000
seed = 1
covariance_seed = 0

[covariance]
kind = "three_tier"
"#;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

impl ExperimentConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
        if !raw.snr_db.is_finite() {
            return Err(Error::InvalidParameter(format!("snr_db must be finite, got {}", raw.snr_db)));
        }
        let system = SystemConfig::full(
            raw.m_t,
            raw.n_c,
            raw.n_p.unwrap_or(raw.n_c),
            raw.n_t,
            db_to_linear(raw.snr_db),
            raw.d,
            raw.epsilon,
        )?;
        if raw.n_t_grid.is_empty() {
            return Err(Error::InvalidParameter("n_t_grid must not be empty".into()));
        }
        if raw.trials < 2 {
            return Err(Error::InvalidParameter(format!("trials must be at least 2, got {}", raw.trials)));
        }
        Ok(Self {
            system,
            covariance: raw.covariance,
            n_t_grid: raw.n_t_grid,
            trials: raw.trials,
            seed: raw.seed,
            covariance_seed: raw.covariance_seed,
            out: raw.out,
            unit: raw.unit,
            base_dir: base_dir.to_path_buf(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_CONFIG, Path::new(".")).expect("built-in config is valid")
    }

    pub fn channel_model(&self) -> Result<ChannelModel> {
        let (m_t, n_c) = (self.system.m_t(), self.system.n_c());
        let kind = match &self.covariance {
            CovarianceSpec::Identity(_) => CovarianceKind::Identity,
            CovarianceSpec::Kronecker(k) => CovarianceKind::Kronecker {
                rho_s: k.rho_s,
                rho_f: k.rho_f,
            },
            CovarianceSpec::ThreeTier(t) => CovarianceKind::ThreeTier {
                lo: t.lo,
                mid: t.mid,
                hi: t.hi,
                trace: t.trace,
            },
            CovarianceSpec::File(FileSpec { path }) => {
                let file = File::open(self.base_dir.join(path))?;
                let model = ChannelModel::read_text(BufReader::new(file))?;
                if model.n() != self.system.n() {
                    return Err(Error::DimensionMismatch {
                        expected: self.system.n(),
                        found: model.n(),
                    });
                }
                return Ok(model);
            }
        };
        make_covariance(&kind, m_t, n_c, &mut SimRng::new(self.covariance_seed))
    }
}

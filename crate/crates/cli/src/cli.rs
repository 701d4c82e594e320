use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sparc_core::{Ensemble, OperatorKind};

use crate::error::CliError;

/// Experiments with sparse superposition codes over the AWGN channel.
#[derive(Debug, Parser)]
#[command(name = "sparc", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode, transmit and decode with VAMP; per-trial and per-iteration tables.
    Decode(DecodeArgs),
    /// State evolution trajectories and fixed points.
    Se(SeArgs),
    /// The potential on an energy grid and its maxima.
    Potential(PotentialArgs),
    /// Algorithmic and information-theoretic thresholds across section sizes.
    Thresholds(ThresholdArgs),
    /// Large section size thresholds and spectral criterion gaps.
    Asymptotic(AsymptoticArgs),
    /// Compares a sampled spectrum, or a spectrum file, with its model.
    SpectrumCheck(SpectrumArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleArg {
    Gaussian,
    RowOrthogonal,
    Discrete,
    DctProxy,
}

impl EnsembleArg {
    pub fn kind(self) -> OperatorKind {
        match self {
            EnsembleArg::Gaussian => OperatorKind::Gaussian,
            EnsembleArg::RowOrthogonal => OperatorKind::RowOrthogonal,
            EnsembleArg::Discrete => OperatorKind::DiscreteTri,
            EnsembleArg::DctProxy => OperatorKind::DctProxy,
        }
    }

    /// The asymptotic spectrum; the DCT proxy shares the row-orthogonal one.
    pub fn ensemble(self) -> Ensemble {
        self.kind().ensemble()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Output directory.
    #[arg(long, env = "SPARC_OUT_DIR", default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Master seed; every trial and noise batch derives from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// A single rate, or a uniform sweep.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RateArgs {
    #[arg(long = "R", conflicts_with_all = ["r_min", "r_max", "r_steps"])]
    pub r: Option<f64>,
    #[arg(long = "R-min", requires_all = ["r_max", "r_steps"])]
    pub r_min: Option<f64>,
    #[arg(long = "R-max", requires_all = ["r_min", "r_steps"])]
    pub r_max: Option<f64>,
    #[arg(long = "R-steps", requires_all = ["r_min", "r_max"])]
    pub r_steps: Option<usize>,
}

impl RateArgs {
    pub fn rates(&self) -> Result<Vec<f64>, CliError> {
        let rates = match (self.r, self.r_min, self.r_max, self.r_steps) {
            (Some(r), ..) => vec![r],
            (None, Some(lo), Some(hi), Some(steps)) => {
                if steps == 0 {
                    return Err(CliError::Config("empty rate sweep (--R-steps 0)".into()));
                }
                if !(hi >= lo) {
                    return Err(CliError::Config(format!("--R-max {hi} is below --R-min {lo}")));
                }
                if steps == 1 {
                    vec![lo]
                } else {
                    (0..steps)
                        .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
                        .collect()
                }
            }
            _ => return Err(CliError::Config("give --R or all of --R-min, --R-max, --R-steps".into())),
        };
        for &r in &rates {
            if !(r > 0.0 && r.is_finite()) {
                return Err(CliError::Config(format!("rate {r} must be positive and finite")));
            }
        }
        Ok(rates)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = EnsembleArg::DctProxy)]
    pub ensemble: EnsembleArg,
    /// Number of sections.
    #[arg(long = "L", default_value_t = 1024)]
    pub l: usize,
    /// Section size.
    #[arg(long = "B", default_value_t = 4)]
    pub b: usize,
    #[command(flatten)]
    pub rates: RateArgs,
    #[arg(long, default_value_t = 15.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
    /// Directory for sampled dense operators, reused across runs.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

/// The spectrum shared by the analysis commands.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumSource {
    #[arg(long, value_enum, default_value_t = EnsembleArg::Gaussian)]
    pub ensemble: EnsembleArg,
    /// JSON file with a custom spectrum; overrides --ensemble.
    #[arg(long)]
    pub spectrum_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub spectrum: SpectrumSource,
    #[arg(long = "B", default_value_t = 4)]
    pub b: usize,
    #[command(flatten)]
    pub rates: RateArgs,
    #[arg(long, default_value_t = 15.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
    /// Iterations of the decoder-matched two-stage recursion.
    #[arg(long, default_value_t = 50)]
    pub iterations: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PotentialArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub spectrum: SpectrumSource,
    #[arg(long = "B", default_value_t = 4)]
    pub b: usize,
    #[command(flatten)]
    pub rates: RateArgs,
    #[arg(long, default_value_t = 15.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
    /// Energy grid size.
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub spectrum: SpectrumSource,
    /// Section sizes, comma separated.
    #[arg(long = "B", value_delimiter = ',', default_values_t = [2usize, 4, 8, 16, 32, 64, 128, 256])]
    pub b: Vec<usize>,
    #[arg(long, default_value_t = 15.0)]
    pub snr: f64,
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
    /// Bisection tolerance on the rate.
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AsymptoticArgs {
    #[command(flatten)]
    pub common: Common,
    /// Channel snr values, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [15.0])]
    pub snr: Vec<f64>,
    /// Adds a custom spectrum to the built-in ensembles.
    #[arg(long)]
    pub spectrum_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub spectrum: SpectrumSource,
    #[arg(long = "L", default_value_t = 256)]
    pub l: usize,
    #[arg(long = "B", default_value_t = 4)]
    pub b: usize,
    #[arg(long = "R", default_value_t = 1.0)]
    pub r: f64,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

pub fn check_snr(snr: f64) -> Result<(), CliError> {
    if snr > 0.0 && snr.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("snr {snr} must be positive and finite")))
    }
}

pub fn check_section_size(b: usize) -> Result<(), CliError> {
    if (2..=1 << 20).contains(&b) {
        Ok(())
    } else {
        Err(CliError::Config(format!("B = {b} must lie in [2, 2^20]")))
    }
}

/// `α = log₂B/(R·B) ≤ 1`.
pub fn check_rate(b: usize, r: f64) -> Result<(), CliError> {
    let min = (b as f64).log2() / b as f64;
    if r >= min {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "R = {r} gives an aspect ratio above 1 at B = {b} (need R >= {min})"
        )))
    }
}

pub fn check_mc_samples(n: usize) -> Result<(), CliError> {
    if n >= 1000 {
        Ok(())
    } else {
        Err(CliError::Config(format!("--mc-samples {n} is below 1000")))
    }
}

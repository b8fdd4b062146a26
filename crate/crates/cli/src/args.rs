use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddtf_core::denoiser::{InitMode, Method, TILDE_LAMBDA_SCALE};
use ddtf_core::learner::{DEFAULT_ITERS, DEFAULT_P, DEFAULT_S, LAMBDA_SCALE};
use ddtf_core::{DenoiseParams, LearnParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "ddtf", version, about = "Learned tight-frame image denoising")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn filters from a noisy image and denoise it.
    Denoise(DenoiseArgs),
    /// Add seeded Gaussian noise to an image.
    SynthNoise(SynthNoiseArgs),
    /// Run an image × sigma × method grid from a JSON config.
    Bench(BenchArgs),
    /// Write the singular spectrum and signal/noise filter mosaics.
    #[command(alias = "filters")]
    Spectrum(SpectrumArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Alg1,
    Ddtf,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Alg1 => Method::Alg1,
            MethodArg::Ddtf => Method::Ddtf,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitArg {
    Dct,
    Signal,
}

impl From<InitArg> for InitMode {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::Dct => InitMode::DctRandom,
            InitArg::Signal => InitMode::SignalSubspace,
        }
    }
}

impl InitArg {
    pub fn as_str(self) -> &'static str {
        match self {
            InitArg::Dct => "dct",
            InitArg::Signal => "signal",
        }
    }
}

/// Learner flags shared by `denoise` and `spectrum`.
#[derive(Clone, Debug, Args)]
pub struct LearnArgs {
    /// Noisy input image (binary PGM).
    #[arg(long)]
    pub input: PathBuf,
    /// Noise standard deviation in pixel units.
    #[arg(long)]
    pub sigma: f64,
    /// Filter side length.
    #[arg(long = "p", default_value_t = DEFAULT_P)]
    pub p: usize,
    /// Number of learned filters (ignored by ddtf, which uses p²).
    #[arg(long = "s")]
    pub s: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ITERS)]
    pub iters: usize,
    /// Learning threshold as a multiple of sigma.
    #[arg(long, default_value_t = LAMBDA_SCALE)]
    pub lambda_scale: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Signal)]
    pub init: InitArg,
    /// Patch sampling step.
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub prox_lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub prox_mu: f64,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
}

impl LearnArgs {
    /// Assembles pipeline parameters, falling back to `default_method`.
    /// Returns any warnings alongside.
    pub fn params(&self, default_method: MethodArg) -> (DenoiseParams, Vec<String>) {
        let method = self.method.unwrap_or(default_method);
        let mut warnings = Vec::new();
        let s = match method {
            MethodArg::Ddtf => {
                let full = self.p * self.p;
                if let Some(s) = self.s.filter(|&s| s != full) {
                    warnings.push(format!(
                        "--method ddtf uses s = p² = {full}; ignoring --s {s}"
                    ));
                }
                full
            }
            MethodArg::Alg1 => self.s.unwrap_or(DEFAULT_S),
        };
        let mut params = DenoiseParams::new(self.sigma);
        params.method = method.into();
        params.init_mode = self.init.into();
        params.seed = self.seed;
        params.learn = LearnParams {
            p: self.p,
            s,
            lambda: self.lambda_scale * self.sigma,
            iters: self.iters,
            prox_lambda: self.prox_lambda,
            prox_mu: self.prox_mu,
            stride: self.stride,
        };
        (params, warnings)
    }
}

#[derive(Clone, Debug, Args)]
pub struct DenoiseArgs {
    #[command(flatten)]
    pub learn: LearnArgs,
    /// Clean reference; enables PSNR in the report.
    #[arg(long)]
    pub clean: Option<PathBuf>,
    /// Denoising threshold as a multiple of sigma.
    #[arg(long, default_value_t = TILDE_LAMBDA_SCALE)]
    pub tilde_lambda_scale: f64,
    #[arg(long)]
    pub output: PathBuf,
    /// Where to write the JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct SynthNoiseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Clone, Debug, Args)]
pub struct BenchArgs {
    /// JSON grid description.
    pub config: PathBuf,
    /// Maximum number of grid cells run at once.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Clone, Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub learn: LearnArgs,
    /// Number of leading singular triplets forming the signal subspace.
    #[arg(long, default_value_t = DEFAULT_S)]
    pub s_split: usize,
    /// Output path prefix; `_spectrum.csv`, `_full.pgm`, `_signal.pgm` and
    /// `_noise.pgm` are appended.
    #[arg(long)]
    pub out_prefix: PathBuf,
}

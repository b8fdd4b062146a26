//! Grid runner behind `ddtf bench`.
//!
//! A config names images, noise levels and learner settings. Every
//! (image, sigma, method) cell loads its own image, synthesizes its own
//! noise and runs its own pipeline, so a failing cell only marks its row.
//! Relative paths in the config resolve against the config's directory.

use std::path::{Path, PathBuf};

use ddtf_core::denoiser::{self, DenoiseReport};
use ddtf_core::imgcore::add_awgn;
use ddtf_core::learner::{DEFAULT_ITERS, DEFAULT_P, DEFAULT_S};
use ddtf_core::{DenoiseParams, NoiseParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{BenchArgs, InitArg, MethodArg};
use crate::commands::read_image;
use crate::output::{to_json, write_atomic};
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub images: Vec<PathBuf>,
    pub sigmas: Vec<f64>,
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default)]
    pub seed: u64,
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: MethodArg,
    #[serde(default = "default_p")]
    pub p: usize,
    /// Defaults to `p²` for ddtf and 30 for alg1.
    #[serde(default)]
    pub s: Option<usize>,
    #[serde(default = "default_init")]
    pub init: InitArg,
}

fn default_iters() -> usize {
    DEFAULT_ITERS
}

fn default_p() -> usize {
    DEFAULT_P
}

fn default_init() -> InitArg {
    InitArg::Signal
}

impl MethodSpec {
    pub fn filter_count(&self) -> usize {
        match self.method {
            MethodArg::Ddtf => self.p * self.p,
            MethodArg::Alg1 => self.s.unwrap_or(DEFAULT_S),
        }
    }

    pub fn label(&self) -> &'static str {
        match self.method {
            MethodArg::Ddtf => "ddtf",
            MethodArg::Alg1 => "alg1",
        }
    }

    fn params(&self, sigma: f64, iters: usize, seed: u64) -> DenoiseParams {
        let mut params = match self.method {
            MethodArg::Ddtf => DenoiseParams::ddtf(sigma, self.p),
            MethodArg::Alg1 => {
                let mut params = DenoiseParams::new(sigma);
                params.learn.p = self.p;
                params.learn.s = self.filter_count();
                params
            }
        };
        params.init_mode = self.init.into();
        params.learn.iters = iters;
        params.seed = seed;
        params
    }
}

impl BenchConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: Self = serde_json::from_str(text)
            .map_err(|e| CliError::Usage(format!("bench config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |msg: String| Err(CliError::Usage(format!("bench config: {msg}")));
        if self.images.is_empty() || self.sigmas.is_empty() || self.methods.is_empty() {
            return usage("images, sigmas and methods must all be non-empty".into());
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return usage(format!("sigma {s} is not positive"));
        }
        if self.iters == 0 {
            return usage("iters must be at least 1".into());
        }
        for m in &self.methods {
            let full = m.p * m.p;
            if m.method == MethodArg::Ddtf && m.s.is_some_and(|s| s != full) {
                return usage(format!("ddtf with p = {} needs s = {full}", m.p));
            }
            let s = m.filter_count();
            if m.p == 0 || s == 0 || s > full {
                return usage(format!("invalid (p, s) = ({}, {s})", m.p));
            }
        }
        Ok(())
    }

    /// Cells in image-major, then sigma, then method order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for image in &self.images {
            for &sigma in &self.sigmas {
                for &method in &self.methods {
                    cells.push(Cell {
                        image: image.clone(),
                        sigma,
                        method,
                    });
                }
            }
        }
        cells
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    pub image: PathBuf,
    pub sigma: f64,
    pub method: MethodSpec,
}

/// One CSV line. Column order is part of the output format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub image: String,
    pub sigma: f64,
    pub method: String,
    pub p: usize,
    pub s: usize,
    pub init: String,
    pub psnr_noisy: Option<f64>,
    pub psnr_denoised: Option<f64>,
    pub seconds: Option<f64>,
    pub status: String,
}

#[derive(Debug, Serialize)]
struct CellRecord<'a> {
    row: &'a BenchRow,
    error: Option<&'a str>,
    report: Option<&'a DenoiseReport>,
}

struct CellResult {
    row: BenchRow,
    outcome: Result<DenoiseReport, String>,
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn run_cell(cell: &Cell, base: &Path, iters: usize, seed: u64) -> CellResult {
    let method = cell.method;
    let stem = cell.image.file_stem().map_or_else(
        || cell.image.display().to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    let outcome = (|| {
        let clean = read_image(&resolve(base, &cell.image))?;
        let noisy = add_awgn(
            &clean,
            &NoiseParams {
                sigma: cell.sigma,
                seed,
            },
        );
        let params = method.params(cell.sigma, iters, seed);
        let (_, report) = denoiser::run_pipeline(&noisy, Some(&clean), &params)?;
        Ok::<_, CliError>(report)
    })()
    .map_err(|e| e.to_string());

    let round = |v: f64, digits: i32| {
        let scale = 10f64.powi(digits);
        (v * scale).round() / scale
    };
    let report = outcome.as_ref().ok();
    let row = BenchRow {
        image: stem,
        sigma: cell.sigma,
        method: method.label().to_string(),
        p: method.p,
        s: method.filter_count(),
        init: match method.method {
            MethodArg::Ddtf => "dct".to_string(),
            MethodArg::Alg1 => method.init.as_str().to_string(),
        },
        psnr_noisy: report.and_then(|r| r.psnr_noisy).map(|v| round(v, 4)),
        psnr_denoised: report.and_then(|r| r.psnr_denoised).map(|v| round(v, 4)),
        seconds: report.map(|r| round(r.timings.total, 3)),
        status: match &outcome {
            Ok(_) => "ok".to_string(),
            Err(e) => format!("error: {e}"),
        },
    };
    CellResult { row, outcome }
}

/// A finished cell: its CSV row and either the report or the error text.
pub type CellOutcome = (BenchRow, Result<DenoiseReport, String>);

/// Runs every cell of `config` on up to `jobs` threads. Results come back
/// in grid order whatever the thread count.
pub fn run_grid(
    config: &BenchConfig,
    base: &Path,
    jobs: usize,
) -> Result<Vec<CellOutcome>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let cells = config.cells();
    let results: Vec<CellResult> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let result = run_cell(cell, base, config.iters, config.seed);
                eprintln!(
                    "{} sigma={} {} s={}: {}",
                    result.row.image,
                    result.row.sigma,
                    result.row.method,
                    result.row.s,
                    result.row.status
                );
                result
            })
            .collect()
    });
    Ok(results.into_iter().map(|r| (r.row, r.outcome)).collect())
}

pub fn rows_to_csv(rows: &[BenchRow]) -> Result<Vec<u8>, CliError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| CliError::Runtime(format!("writing CSV: {e}")))?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::Runtime(format!("writing CSV: {e}")))
}

/// Path of the JSON sidecar holding per-cell reports: `out` with a `.json`
/// extension.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

pub fn cmd_bench(args: &BenchArgs) -> Result<u8, CliError> {
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let text = std::fs::read_to_string(&args.config).map_err(|source| CliError::Io {
        path: args.config.display().to_string(),
        source,
    })?;
    let config = BenchConfig::from_json(&text)?;
    let base = args.config.parent().unwrap_or(Path::new("")).to_path_buf();

    let results = run_grid(&config, &base, args.jobs)?;
    let rows: Vec<BenchRow> = results.iter().map(|(row, _)| row.clone()).collect();
    let records: Vec<CellRecord> = results
        .iter()
        .map(|(row, outcome)| CellRecord {
            row,
            error: outcome.as_ref().err().map(String::as_str),
            report: outcome.as_ref().ok(),
        })
        .collect();

    let out = resolve(&base, &config.out);
    write_atomic(&out, &rows_to_csv(&rows)?)?;
    write_atomic(&sidecar_path(&out), &to_json(&records)?)?;

    let ok = rows.iter().filter(|r| r.status == "ok").count();
    eprintln!("{ok}/{} cells ok; wrote {}", rows.len(), out.display());
    Ok(if ok > 0 { 0 } else { 1 })
}

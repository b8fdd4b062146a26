//! Image denoising with learned sparse-representation filter banks.
//!
//! Two learners are provided. [`learner::ddtf_learn`] builds a full square
//! data-driven tight frame of `p²` filters. [`learner::learn`] keeps only `s`
//! filters spanning the signal subspace of the patch/coefficient correlation
//! and penalises the energy left in the orthogonal complement. Either bank
//! then drives [`denoiser::denoise_with_bank`]: analyze, hard threshold,
//! synthesize.
//!
//! ```no_run
//! use ddtf_core::{denoiser, imgcore, DenoiseParams};
//!
//! let clean = imgcore::read_pgm("data/camera.pgm").unwrap();
//! let noisy = imgcore::add_awgn(&clean, &imgcore::NoiseParams { sigma: 30.0, seed: 0 });
//! let params = DenoiseParams::new(30.0);
//! let (estimate, report) = denoiser::run_pipeline(&noisy, Some(&clean), &params).unwrap();
//! println!("{:?} dB", report.psnr_denoised);
//! # let _ = estimate;
//! ```

mod error;

pub mod denoiser;
pub mod diagnostics;
pub mod filterbank;
pub mod imgcore;
pub mod learner;
pub mod linops;
pub mod transform;

pub use denoiser::{DenoiseParams, DenoiseReport, InitMode};
pub use diagnostics::SpectrumReport;
pub use error::{Error, Result};
pub use filterbank::FilterBank;
pub use imgcore::{Image, NoiseParams, PatchMatrix};
pub use learner::{LearnParams, LearnTrace};
pub use linops::{Matrix, ThinSvd};
pub use transform::CoefStack;

pub(crate) use error::contract;

//! Learn a bank from the noisy image, threshold its coefficients, synthesize.

use std::time::Instant;

use serde::{Deserialize, Serialize, Serializer};

use crate::filterbank::{self, dct_basis, init_signal_subspace, subselect_random, FilterBank};
use crate::imgcore::{extract_patches, psnr, Image};
use crate::learner::{learn_full, LearnParams, LearnTrace, DEFAULT_P, DEFAULT_S};
use crate::transform::{analyze, synthesize};
use crate::{contract, Result};

/// Denoising threshold as a multiple of the noise standard deviation.
pub const TILDE_LAMBDA_SCALE: f64 = 2.7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Full square bank of `p²` filters, DCT start.
    Ddtf,
    /// `s` filters with the complement-energy penalty.
    Alg1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// `s` DCT atoms drawn at random with the run seed.
    DctRandom,
    /// Signal subspace of a short square-bank warm-up.
    SignalSubspace,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenoiseParams {
    pub sigma: f64,
    pub method: Method,
    pub learn: LearnParams,
    pub tilde_lambda: f64,
    pub init_mode: InitMode,
    pub seed: u64,
    /// Leave the atom with the largest DC response unthresholded.
    pub exempt_lowpass: bool,
    pub signal_epsilon: f64,
    pub signal_warm_iters: usize,
}

impl DenoiseParams {
    /// Defaults for noise level `sigma`: 8×8 filters, `s = 30`, 25
    /// iterations, `λ = 3.4σ`, `λ̃ = 2.7σ`, signal-subspace start.
    pub fn new(sigma: f64) -> Self {
        Self {
            sigma,
            method: Method::Alg1,
            learn: LearnParams::new(DEFAULT_P, DEFAULT_S, sigma),
            tilde_lambda: TILDE_LAMBDA_SCALE * sigma,
            init_mode: InitMode::SignalSubspace,
            seed: 0,
            exempt_lowpass: false,
            signal_epsilon: filterbank::SIGNAL_EPSILON,
            signal_warm_iters: filterbank::SIGNAL_WARM_ITERS,
        }
    }

    /// Square-bank baseline at noise level `sigma`.
    pub fn ddtf(sigma: f64, p: usize) -> Self {
        let mut params = Self::new(sigma);
        params.method = Method::Ddtf;
        params.learn.p = p;
        params.learn.s = p * p;
        params
    }

    pub fn validate(&self) -> Result<()> {
        contract!(
            self.sigma > 0.0,
            "sigma must be positive, got {}",
            self.sigma
        );
        contract!(self.tilde_lambda >= 0.0, "tilde_lambda must be nonnegative");
        self.learn.validate()?;
        if self.method == Method::Ddtf {
            contract!(
                self.learn.s == self.learn.p * self.learn.p,
                "square learner needs s = p² = {}, got {}",
                self.learn.p * self.learn.p,
                self.learn.s
            );
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub patches: f64,
    pub init: f64,
    pub learn: f64,
    pub denoise: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenoiseReport {
    /// Absent when no clean reference was supplied; `"inf"` for an exact match.
    #[serde(serialize_with = "db_or_inf")]
    pub psnr_noisy: Option<f64>,
    #[serde(serialize_with = "db_or_inf")]
    pub psnr_denoised: Option<f64>,
    pub learn_trace: LearnTrace,
    pub timings: StageTimings,
    pub params: DenoiseParams,
}

fn db_or_inf<S: Serializer>(value: &Option<f64>, ser: S) -> std::result::Result<S::Ok, S::Error> {
    match value {
        Some(v) if v.is_infinite() => ser.serialize_str("inf"),
        Some(v) => ser.serialize_some(v),
        None => ser.serialize_none(),
    }
}

/// `Wᵀ H_λ̃(W g)` for the bank's analysis operator `W`.
pub fn denoise_with_bank(noisy: &Image, bank: &FilterBank, tilde_lambda: f64) -> Result<Image> {
    denoise_with_bank_exempt(noisy, bank, tilde_lambda, false)
}

/// [`denoise_with_bank`], optionally leaving the low-pass channel untouched.
pub fn denoise_with_bank_exempt(
    noisy: &Image,
    bank: &FilterBank,
    tilde_lambda: f64,
    exempt_lowpass: bool,
) -> Result<Image> {
    let mut coefs = analyze(noisy, bank)?;
    let exempt = if exempt_lowpass {
        vec![bank.lowpass_index()]
    } else {
        Vec::new()
    };
    coefs.hard_threshold(tilde_lambda, &exempt)?;
    let out = synthesize(&coefs, bank)?;
    noisy.with_pixels(out.into_pixels())
}

/// Builds the starting bank for `params` from the noisy patches.
pub fn initial_bank(patches: &crate::PatchMatrix, params: &DenoiseParams) -> Result<FilterBank> {
    let p = params.learn.p;
    match (params.method, params.init_mode) {
        (Method::Ddtf, _) => Ok(dct_basis(p)),
        (Method::Alg1, InitMode::DctRandom) => {
            subselect_random(&dct_basis(p), params.learn.s, params.seed)
        }
        (Method::Alg1, InitMode::SignalSubspace) => init_signal_subspace(
            patches,
            params.learn.s,
            params.signal_epsilon,
            params.signal_warm_iters,
            params.learn.lambda,
        ),
    }
}

/// Learns a bank from `noisy`, denoises with it, and reports PSNR against
/// `clean_ref` when one is given. The clean image never reaches the learner.
pub fn run_pipeline(
    noisy: &Image,
    clean_ref: Option<&Image>,
    params: &DenoiseParams,
) -> Result<(Image, DenoiseReport)> {
    params.validate()?;
    let total = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let patches = extract_patches(noisy, params.learn.p, params.learn.stride)?;
    timings.patches = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let init = initial_bank(&patches, params)?;
    timings.init = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let outcome = learn_full(&patches, &init, &params.learn)?;
    drop(patches);
    timings.learn = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let estimate = denoise_with_bank_exempt(
        noisy,
        &outcome.bank,
        params.tilde_lambda,
        params.exempt_lowpass,
    )?;
    timings.denoise = t.elapsed().as_secs_f64();
    timings.total = total.elapsed().as_secs_f64();

    let (psnr_noisy, psnr_denoised) = match clean_ref {
        Some(clean) => (Some(psnr(noisy, clean)?), Some(psnr(&estimate, clean)?)),
        None => (None, None),
    };
    let report = DenoiseReport {
        psnr_noisy,
        psnr_denoised,
        learn_trace: outcome.trace,
        timings,
        params: params.clone(),
    };
    Ok((estimate, report))
}

use std::path::{Path, PathBuf};

use ddtf_core::diagnostics::{bank_mosaic, filter_mosaic, spectrum_csv, subspace_split};
use ddtf_core::imgcore::{add_awgn, decode_pgm, encode_pgm, extract_patches};
use ddtf_core::learner::learn_full;
use ddtf_core::{denoiser, DenoiseParams, Image, NoiseParams};

use crate::args::{DenoiseArgs, MethodArg, SpectrumArgs, SynthNoiseArgs};
use crate::output::{to_json, write_atomic};
use crate::CliError;

const MOSAIC_BORDER: usize = 1;

pub(crate) fn read_image(path: &Path) -> Result<Image, CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(decode_pgm(&bytes)?)
}

fn checked(params: DenoiseParams, warnings: Vec<String>) -> Result<DenoiseParams, CliError> {
    for w in warnings {
        eprintln!("warning: {w}");
    }
    params
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(params)
}

pub fn cmd_denoise(args: &DenoiseArgs) -> Result<u8, CliError> {
    let (mut params, warnings) = args.learn.params(MethodArg::Alg1);
    params.tilde_lambda = args.tilde_lambda_scale * params.sigma;
    let params = checked(params, warnings)?;

    let noisy = read_image(&args.learn.input)?;
    let clean = args.clean.as_deref().map(read_image).transpose()?;
    let (estimate, report) = denoiser::run_pipeline(&noisy, clean.as_ref(), &params)?;

    write_atomic(&args.output, &encode_pgm(&estimate))?;
    if let Some(path) = &args.report {
        write_atomic(path, &to_json(&report)?)?;
    }
    if let Some(db) = report.psnr_denoised {
        eprintln!("psnr {db:.2} dB in {:.1} s", report.timings.total);
    }
    Ok(0)
}

pub fn cmd_synth_noise(args: &SynthNoiseArgs) -> Result<u8, CliError> {
    if !(args.sigma >= 0.0 && args.sigma.is_finite()) {
        return Err(CliError::Usage(format!(
            "--sigma must be nonnegative, got {}",
            args.sigma
        )));
    }
    let clean = read_image(&args.input)?;
    let noisy = add_awgn(
        &clean,
        &NoiseParams {
            sigma: args.sigma,
            seed: args.seed,
        },
    );
    write_atomic(&args.output, &encode_pgm(&noisy))?;
    Ok(0)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

pub fn cmd_spectrum(args: &SpectrumArgs) -> Result<u8, CliError> {
    let (params, warnings) = args.learn.params(MethodArg::Ddtf);
    let params = checked(params, warnings)?;
    let bound = params.learn.s.min(params.learn.p * params.learn.p);
    if args.s_split > bound {
        return Err(CliError::Usage(format!(
            "--s-split {} exceeds {bound}",
            args.s_split
        )));
    }

    let noisy = read_image(&args.learn.input)?;
    let patches = extract_patches(&noisy, params.learn.p, params.learn.stride)?;
    let init = denoiser::initial_bank(&patches, &params)?;
    let outcome = learn_full(&patches, &init, &params.learn)?;
    let (signal, noise, mut spectrum) =
        subspace_split(patches.matrix(), &outcome.coefficients, args.s_split)?;
    spectrum.iteration = params.learn.iters;

    let prefix = &args.out_prefix;
    write_atomic(
        &with_suffix(prefix, "_spectrum.csv"),
        spectrum_csv(&spectrum).as_bytes(),
    )?;
    let full = bank_mosaic(&outcome.bank, MOSAIC_BORDER)?;
    write_atomic(&with_suffix(prefix, "_full.pgm"), &encode_pgm(&full))?;
    write_atomic(
        &with_suffix(prefix, "_signal.pgm"),
        &encode_pgm(&filter_mosaic(&signal, MOSAIC_BORDER)?),
    )?;
    write_atomic(
        &with_suffix(prefix, "_noise.pgm"),
        &encode_pgm(&filter_mosaic(&noise, MOSAIC_BORDER)?),
    )?;
    eprintln!(
        "energy in leading {}: {:.4}",
        args.s_split,
        spectrum.energy_at(args.s_split)
    );
    Ok(0)
}

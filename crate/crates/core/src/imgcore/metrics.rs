use super::Image;
use crate::{contract, Result};

/// Peak signal-to-noise ratio in dB, `20·log10(peak·√N / ‖u − u*‖₂)`.
///
/// `peak` is the larger of the two images' `range_max`. Identical images give
/// `f64::INFINITY`.
pub fn psnr(u: &Image, u_star: &Image) -> Result<f64> {
    contract!(
        u.width() == u_star.width() && u.height() == u_star.height(),
        "psnr of {}x{} against {}x{}",
        u.width(),
        u.height(),
        u_star.width(),
        u_star.height()
    );
    let err: f64 = u
        .pixels()
        .iter()
        .zip(u_star.pixels())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    if err == 0.0 {
        return Ok(f64::INFINITY);
    }
    let peak = u.range_max().max(u_star.range_max());
    Ok(20.0 * (peak * (u.len() as f64).sqrt() / err.sqrt()).log10())
}

//! Small dense kernels: hard thresholding, thin SVD and the orthogonal polar
//! factor. Orthogonality is checked to 1e-10 and reconstruction to 1e-9
//! relative throughout the crate.

mod matrix;
mod svd;

#[cfg(test)]
pub(crate) use matrix::dot;
pub use matrix::Matrix;
pub use svd::{thin_svd, ThinSvd};

use crate::{contract, Error, Result};

/// Ratio sigma_min / sigma_max at or below which a matrix counts as rank
/// deficient for orthonormalization.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Keeps entries with `|v| > lambda`, zeroes the rest.
pub fn hard_threshold(m: &Matrix, lambda: f64) -> Result<Matrix> {
    let mut out = m.clone();
    hard_threshold_in_place(out.as_mut_slice(), lambda)?;
    Ok(out)
}

pub fn hard_threshold_in_place(values: &mut [f64], lambda: f64) -> Result<()> {
    contract!(lambda >= 0.0, "threshold must be nonnegative, got {lambda}");
    for v in values.iter_mut() {
        if v.abs() <= lambda {
            *v = 0.0;
        }
    }
    Ok(())
}

/// Nearest matrix with orthonormal columns: `u · xᵀ` from the thin SVD.
///
/// This is the maximiser of `Tr(Qᵀ m)` over `QᵀQ = I`.
pub fn polar_orthonormalize(m: &Matrix) -> Result<Matrix> {
    contract!(
        m.rows() >= m.cols(),
        "polar_orthonormalize needs rows >= cols, got {:?}",
        m.shape()
    );
    let svd = thin_svd(m)?;
    check_full_rank(&svd, "input to orthonormalization is rank deficient")?;
    Ok(svd.polar_factor())
}

pub(crate) fn check_full_rank(svd: &ThinSvd, hint: &'static str) -> Result<()> {
    let max = svd.sigma.first().copied().unwrap_or(0.0);
    let min = svd.sigma.last().copied().unwrap_or(0.0);
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if ratio <= RANK_TOLERANCE {
        return Err(Error::DegenerateRank { ratio, hint });
    }
    Ok(())
}

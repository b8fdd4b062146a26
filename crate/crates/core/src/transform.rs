//! Undecimated single-level analysis and synthesis operators of a filter
//! bank, with periodic boundary handling.
//!
//! Analysis correlates the image with each unit-norm atom. Synthesis applies
//! the adjoint (correlation with the flipped atom) and divides by `p²`, so
//! `synthesize(analyze(g)) == g` for a full orthonormal bank.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::filterbank::FilterBank;
use crate::imgcore::Image;
use crate::linops::{hard_threshold_in_place, Matrix};
use crate::{contract, Result};

/// One image-sized coefficient plane per atom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefStack {
    width: usize,
    height: usize,
    channels: Vec<Vec<f64>>,
}

impl CoefStack {
    pub fn new(width: usize, height: usize, channels: Vec<Vec<f64>>) -> Result<Self> {
        contract!(
            channels.iter().all(|c| c.len() == width * height),
            "coefficient plane size differs from {width}x{height}"
        );
        Ok(Self {
            width,
            height,
            channels,
        })
    }

    pub fn zeros(width: usize, height: usize, s: usize) -> Self {
        Self {
            width,
            height,
            channels: vec![vec![0.0; width * height]; s],
        }
    }

    pub fn bank_s(&self) -> usize {
        self.channels.len()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channel(&self, i: usize) -> &[f64] {
        &self.channels[i]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn energy(&self) -> f64 {
        self.channels.iter().flatten().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &CoefStack) -> f64 {
        self.channels
            .iter()
            .flatten()
            .zip(other.channels.iter().flatten())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Hard thresholding applied uniformly to every channel, except the
    /// channels listed in `exempt`.
    pub fn hard_threshold(&mut self, lambda: f64, exempt: &[usize]) -> Result<()> {
        for (i, ch) in self.channels.iter_mut().enumerate() {
            if !exempt.contains(&i) {
                hard_threshold_in_place(ch, lambda)?;
            }
        }
        Ok(())
    }
}

fn check_fits(bank: &FilterBank, width: usize, height: usize) -> Result<()> {
    contract!(
        bank.p() <= width && bank.p() <= height,
        "filter side {} exceeds image {width}x{height}",
        bank.p()
    );
    Ok(())
}

/// `coef(x, y) = Σ_{r,c} d(r + c·p) · image((x + c) mod W, (y + r) mod H)`
/// for every atom `d`.
pub fn analyze(image: &Image, bank: &FilterBank) -> Result<CoefStack> {
    let (w, h) = (image.width(), image.height());
    check_fits(bank, w, h)?;
    let channels = (0..bank.s())
        .into_par_iter()
        .map(|i| correlate(image.pixels(), w, h, bank.atom(i), bank.p()))
        .collect();
    Ok(CoefStack {
        width: w,
        height: h,
        channels,
    })
}

/// `(1/p²) · Wᵀ coefs`, where `W` is the linear map of [`analyze`].
pub fn synthesize(coefs: &CoefStack, bank: &FilterBank) -> Result<Image> {
    let (w, h) = (coefs.width, coefs.height);
    contract!(
        coefs.bank_s() == bank.s(),
        "{} coefficient channels for a bank of {} filters",
        coefs.bank_s(),
        bank.s()
    );
    check_fits(bank, w, h)?;
    let p = bank.p();
    let scale = 1.0 / (p * p) as f64;
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (i, plane) in coefs.channels.iter().enumerate() {
            let atom = bank.atom(i);
            for c in 0..p {
                for r in 0..p {
                    let weight = atom[r + c * p] * scale;
                    if weight == 0.0 {
                        continue;
                    }
                    // row[x] += weight · plane((x − c) mod W, (y − r) mod H)
                    let sy = (y + h - r % h) % h;
                    let src = &plane[sy * w..(sy + 1) * w];
                    let shift = c % w;
                    let (head, tail) = row.split_at_mut(shift);
                    for (d, s) in tail.iter_mut().zip(&src[..w - shift]) {
                        *d += weight * s;
                    }
                    for (d, s) in head.iter_mut().zip(&src[w - shift..]) {
                        *d += weight * s;
                    }
                }
            }
        }
    });
    Image::new(w, h, out, 255.0)
}

fn correlate(pixels: &[f64], w: usize, h: usize, atom: &[f64], p: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for c in 0..p {
        let shift = c % w;
        for r in 0..p {
            let weight = atom[r + c * p];
            if weight == 0.0 {
                continue;
            }
            for y in 0..h {
                let sy = (y + r) % h;
                let src = &pixels[sy * w..(sy + 1) * w];
                let dst = &mut out[y * w..(y + 1) * w];
                // dst[x] += weight · src[(x + c) mod W]
                let (lead, wrap) = dst.split_at_mut(w - shift);
                for (d, s) in lead.iter_mut().zip(&src[shift..]) {
                    *d += weight * s;
                }
                for (d, s) in wrap.iter_mut().zip(&src[..shift]) {
                    *d += weight * s;
                }
            }
        }
    }
    out
}

/// Largest `width · height` accepted by [`operator_matrix`].
pub const OPERATOR_MATRIX_MAX_PIXELS: usize = 4096;

/// Dense matrix of [`analyze`] for tiny images: rows are `(channel, y, x)`
/// in that nesting, columns are row-major pixels. Meant for oracle tests.
pub fn operator_matrix(bank: &FilterBank, width: usize, height: usize) -> Result<Matrix> {
    let n = width * height;
    contract!(
        (1..=OPERATOR_MATRIX_MAX_PIXELS).contains(&n),
        "operator_matrix limited to {OPERATOR_MATRIX_MAX_PIXELS} pixels, got {n}"
    );
    check_fits(bank, width, height)?;
    let s = bank.s();
    let p = bank.p();
    let mut m = Matrix::zeros(s * n, n);
    // Column k: coefficients of the k-th basis image. Correlation places
    // tap (r, c) of atom i at output pixel (x0 − c, y0 − r).
    for k in 0..n {
        let (x0, y0) = (k % width, k / width);
        let col = m.col_mut(k);
        for i in 0..s {
            let atom = bank.atom(i);
            for c in 0..p {
                for r in 0..p {
                    let x = (x0 + width - c % width) % width;
                    let y = (y0 + height - r % height) % height;
                    col[i * n + y * width + x] += atom[r + c * p];
                }
            }
        }
    }
    Ok(m)
}

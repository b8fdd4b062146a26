//! Deterministic fixtures shared by the benchmarks.

use ddtf_core::{Image, Matrix};

/// Smooth shapes plus a fine stripe pattern, so every filter channel sees
/// some energy.
pub fn scene(width: usize, height: usize) -> Image {
    Image::from_fn(width, height, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        let disc = if (xf - 0.4 * width as f64).powi(2) + (yf - 0.5 * height as f64).powi(2) < 300.0
        {
            70.0
        } else {
            0.0
        };
        100.0
            + disc
            + 35.0 * (xf / 7.0).sin() * (yf / 11.0).cos()
            + 20.0 * ((xf + 2.0 * yf) / 2.3).sin()
    })
    .expect("fixture dimensions are positive")
}

/// Adds a fixed pseudo-random perturbation of amplitude `amp`.
pub fn perturbed(image: &Image, amp: f64) -> Image {
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let pixels = image
        .pixels()
        .iter()
        .map(|&v| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            v + amp * ((state >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
        })
        .collect();
    image.with_pixels(pixels).expect("same length")
}

/// A dense `rows × cols` matrix with no special structure.
pub fn dense(rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |i, j| {
        ((i * 7 + j * 13) as f64).sin() + 0.1 * (i as f64 - j as f64)
    })
}

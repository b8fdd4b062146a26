use serde::{Deserialize, Serialize};

use crate::{contract, Result};

/// Row-major grayscale raster with real-valued samples.
///
/// `range_max` is the nominal peak used by PSNR (255 for 8-bit data); samples
/// are not required to lie inside `[0, range_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    range_max: f64,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>, range_max: f64) -> Result<Self> {
        contract!(
            width >= 1 && height >= 1,
            "image must be at least 1x1, got {width}x{height}"
        );
        contract!(
            pixels.len() == width * height,
            "{} pixels for a {width}x{height} image",
            pixels.len()
        );
        contract!(
            range_max > 0.0,
            "range_max must be positive, got {range_max}"
        );
        Ok(Self {
            width,
            height,
            pixels,
            range_max,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], 255.0)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels, 255.0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn range_max(&self) -> f64 {
        self.range_max
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    /// Same geometry and range, new samples.
    pub fn with_pixels(&self, pixels: Vec<f64>) -> Result<Self> {
        Self::new(self.width, self.height, pixels, self.range_max)
    }

    /// Sub-image with top-left corner `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Self> {
        contract!(
            x0 + width <= self.width && y0 + height <= self.height,
            "crop {width}x{height}+{x0}+{y0} exceeds {}x{}",
            self.width,
            self.height
        );
        let mut pixels = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            pixels.extend_from_slice(&self.row(y)[x0..x0 + width]);
        }
        Self::new(width, height, pixels, self.range_max)
    }

    /// Samples clamped to `[0, 255]` and rounded half away from zero, as
    /// they would be stored in an 8-bit file.
    pub fn quantized(&self) -> Self {
        let pixels = self.pixels.iter().map(|&v| quantize(v) as f64).collect();
        Self {
            pixels,
            ..self.clone()
        }
    }
}

#[inline]
pub(crate) fn quantize(v: f64) -> u8 {
    // f64::round rounds half away from zero; NaN casts to 0.
    v.clamp(0.0, 255.0).round() as u8
}

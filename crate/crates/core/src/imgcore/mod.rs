//! Grayscale rasters, binary PGM I/O, noise synthesis, PSNR and patch
//! extraction.

mod image;
mod metrics;
mod noise;
mod patches;
mod pgm;

pub use image::Image;
pub use metrics::psnr;
pub use noise::{add_awgn, NoiseParams};
pub use patches::{extract_patches, PatchMatrix};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};

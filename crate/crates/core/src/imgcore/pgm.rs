//! Binary PGM (P5), 8-bit only.

use std::fs;
use std::io::{self, ErrorKind};
use std::path::Path;

use super::image::{quantize, Image};
use crate::{Error, Result};

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    decode_pgm(&fs::read(path)?)
}

/// Writes a P5 file with maxval 255. Samples are clamped to `[0, 255]` and
/// rounded half away from zero.
pub fn write_pgm(image: &Image, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(image))?;
    Ok(())
}

pub fn encode_pgm(image: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.pixels().iter().map(|&v| quantize(v)));
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        let magic = String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned();
        return Err(Error::Parse(format!("expected magic P5, found {magic:?}")));
    }
    let mut cursor = Header { bytes, pos: 2 };
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::Parse(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 {
        return Err(Error::Parse("maxval must be positive".into()));
    }
    if maxval > 255 {
        return Err(Error::UnsupportedDepth(maxval));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        Some(_) => return Err(Error::Parse("missing whitespace after maxval".into())),
        None => return Err(truncated(0, width as usize * height as usize)),
    }
    let n = width as usize * height as usize;
    let payload = &bytes[cursor.pos..];
    if payload.len() < n {
        return Err(truncated(payload.len(), n));
    }
    let pixels = payload[..n].iter().map(|&b| b as f64).collect();
    Image::new(width as usize, height as usize, pixels, maxval as f64)
}

fn truncated(got: usize, want: usize) -> Error {
    Error::Io(io::Error::new(
        ErrorKind::UnexpectedEof,
        format!("PGM payload truncated: {got} of {want} bytes"),
    ))
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32> {
        let start_ws = self.pos;
        self.skip_space_and_comments();
        if self.pos == start_ws {
            return Err(Error::Parse(format!("expected whitespace before {what}")));
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Parse(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse(format!("{what} out of range")))
    }
}

//! Spectra and filter pictures of a learned bank.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::filterbank::FilterBank;
use crate::imgcore::Image;
use crate::linops::{thin_svd, Matrix};
use crate::{contract, Error, Result};

/// Descending singular values and their cumulative energy fractions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub iteration: usize,
    pub singular_values: Vec<f64>,
    pub cumulative_energy: Vec<f64>,
}

impl SpectrumReport {
    pub fn from_values(iteration: usize, singular_values: Vec<f64>) -> Self {
        let total: f64 = singular_values.iter().map(|r| r * r).sum();
        let mut acc = 0.0;
        let cumulative_energy = singular_values
            .iter()
            .map(|r| {
                acc += r * r;
                if total > 0.0 {
                    acc / total
                } else {
                    0.0
                }
            })
            .collect();
        Self {
            iteration,
            singular_values,
            cumulative_energy,
        }
    }

    /// Fraction of energy in the leading `k` values.
    pub fn energy_at(&self, k: usize) -> f64 {
        match k {
            0 => 0.0,
            k => self.cumulative_energy[k.min(self.cumulative_energy.len()) - 1],
        }
    }
}

/// Splits the polar factor of `G·Vᵀ` into the part carried by the leading
/// `s` singular triplets and the rest.
pub fn subspace_split(
    g: &Matrix,
    v: &Matrix,
    s: usize,
) -> Result<(Matrix, Matrix, SpectrumReport)> {
    let gvt = g.matmul_tr(v)?;
    let k = gvt.rows().min(gvt.cols());
    contract!(s <= k, "split index {s} exceeds rank bound {k}");
    let svd = thin_svd(&gvt)?;
    let signal = svd.partial_polar(0..s);
    let noise = svd.partial_polar(s..k);
    Ok((signal, noise, SpectrumReport::from_values(0, svd.sigma)))
}

/// Tiles the columns of `filters` (each `p²` long, reshaped column-major to
/// `p×p`) into a near-square grid separated by black `border`-pixel lines.
/// Each tile is stretched to `[0, 255]`; constant filters become mid-gray.
pub fn filter_mosaic(filters: &Matrix, border: usize) -> Result<Image> {
    let count = filters.cols();
    contract!(count >= 1, "mosaic needs at least one filter");
    let p = (filters.rows() as f64).sqrt().round() as usize;
    contract!(
        p * p == filters.rows() && p >= 1,
        "filter length {} is not a square",
        filters.rows()
    );

    let (grid_cols, grid_rows) = mosaic_grid(count);
    let width = grid_cols * p + (grid_cols - 1) * border;
    let height = grid_rows * p + (grid_rows - 1) * border;
    let mut out = Image::filled(width, height, 0.0)?;

    for k in 0..count {
        let f = filters.col(k);
        let (lo, hi) = f
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = hi - lo;
        let varies = span > 1e-12 * hi.abs().max(lo.abs()).max(1e-300);
        let flat = !varies;
        let (x0, y0) = (
            (k % grid_cols) * (p + border),
            (k / grid_cols) * (p + border),
        );
        for c in 0..p {
            for r in 0..p {
                let v = if flat {
                    128.0
                } else {
                    255.0 * (f[r + c * p] - lo) / span
                };
                out.set(x0 + c, y0 + r, v);
            }
        }
    }
    Ok(out)
}

pub fn bank_mosaic(bank: &FilterBank, border: usize) -> Result<Image> {
    filter_mosaic(bank.atoms(), border)
}

/// `(columns, rows)` of the tile grid: `ceil(√count)` columns.
pub fn mosaic_grid(count: usize) -> (usize, usize) {
    let mut cols = (count as f64).sqrt() as usize;
    while cols * cols < count {
        cols += 1;
    }
    let cols = cols.max(1);
    (cols, count.div_ceil(cols))
}

pub const SPECTRUM_CSV_HEADER: &str = "index,singular_value,cumulative_energy";

pub fn spectrum_csv(report: &SpectrumReport) -> String {
    let mut out = String::from(SPECTRUM_CSV_HEADER);
    out.push('\n');
    for (i, (r, e)) in report
        .singular_values
        .iter()
        .zip(&report.cumulative_energy)
        .enumerate()
    {
        writeln!(out, "{},{},{}", i + 1, r, e).expect("writing to a String");
    }
    out
}

pub fn export_spectrum_csv(report: &SpectrumReport, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, spectrum_csv(report))?;
    Ok(())
}

/// Reads back `(singular_values, cumulative_energy)` from [`spectrum_csv`]
/// output.
pub fn parse_spectrum_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut lines = text.lines();
    if lines.next() != Some(SPECTRUM_CSV_HEADER) {
        return Err(Error::Parse("spectrum CSV header missing".into()));
    }
    let mut values = Vec::new();
    let mut energy = Vec::new();
    for (n, line) in lines.filter(|l| !l.is_empty()).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || Error::Parse(format!("bad spectrum row {}: {line:?}", n + 1));
        if fields.len() != 3 || fields[0].parse::<usize>().ok() != Some(n + 1) {
            return Err(bad());
        }
        values.push(fields[1].parse().map_err(|_| bad())?);
        energy.push(fields[2].parse().map_err(|_| bad())?);
    }
    Ok((values, energy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filterbank::dct_basis;
    use crate::linops::testutil::{gaussian, rng};

    #[test]
    fn split_extremes() {
        let mut r = rng(1);
        let g = gaussian(16, 50, &mut r);
        let v = gaussian(16, 50, &mut r);
        let (signal, noise, spec) = subspace_split(&g, &v, 16).unwrap();
        assert!(noise.max_abs() <= 1e-10);
        assert!(signal.orthonormality_defect() < 1e-10);
        assert_eq!(spec.singular_values.len(), 16);
        let (signal, _, _) = subspace_split(&g, &v, 0).unwrap();
        assert_eq!(signal.max_abs(), 0.0);
        assert!(subspace_split(&g, &v, 17).is_err());
    }

    #[test]
    fn split_recomposes_polar_factor() {
        let mut r = rng(2);
        let g = gaussian(64, 300, &mut r);
        let v = gaussian(64, 300, &mut r);
        let (signal, noise, spec) = subspace_split(&g, &v, 30).unwrap();
        let polar = thin_svd(&g.matmul_tr(&v).unwrap()).unwrap().polar_factor();
        assert!(signal.add(&noise).unwrap().sub(&polar).unwrap().max_abs() <= 1e-9);
        assert!(spec.cumulative_energy.windows(2).all(|w| w[0] <= w[1]));
        assert!((spec.cumulative_energy[63] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mosaic_of_constant_filter() {
        let m = Matrix::from_col_major(4, 1, vec![0.3; 4]).unwrap();
        let img = filter_mosaic(&m, 1).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert!(img.pixels().iter().all(|&v| v == 128.0));
    }

    #[test]
    fn mosaic_of_dct_basis() {
        let img = bank_mosaic(&dct_basis(8), 1).unwrap();
        assert_eq!((img.width(), img.height()), (71, 71));
        // Top-left tile is the flat DC atom.
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(img.get(x, y), 128.0);
            }
        }
        // Separators are black.
        assert!((0..71).all(|y| img.get(8, y) == 0.0));
        // Tile 1 (column frequency 1) varies across x only, one sign change.
        let row: Vec<f64> = (9..17).map(|x| img.get(x, 0)).collect();
        assert!(row.windows(2).all(|w| w[0] >= w[1]) || row.windows(2).all(|w| w[0] <= w[1]));
        for x in 9..17 {
            assert!((1..8).all(|y| img.get(x, y) == img.get(x, 0)));
        }
        // Tile 8 (row frequency 1) varies down y only.
        for y in 9..17 {
            assert!((1..8).all(|x| img.get(x, y) == img.get(0, y)));
        }
    }

    #[test]
    fn mosaic_dimensions_follow_grid() {
        for count in 1..70 {
            for (p, border) in [(2, 0), (3, 1), (8, 2)] {
                let m = gaussian(p * p, count, &mut rng(count as u64));
                let img = filter_mosaic(&m, border).unwrap();
                let cols = (count as f64).sqrt().ceil() as usize;
                let rows = count.div_ceil(cols);
                assert_eq!(img.width(), cols * p + (cols - 1) * border);
                assert_eq!(img.height(), rows * p + (rows - 1) * border);
            }
        }
        assert!(filter_mosaic(&Matrix::zeros(5, 2), 1).is_err());
    }

    #[test]
    fn csv_rows_and_round_trip() {
        let report = SpectrumReport::from_values(25, vec![2.0, 1.0]);
        assert_eq!(
            spectrum_csv(&report),
            "index,singular_value,cumulative_energy\n1,2,0.8\n2,1,1\n"
        );
        let empty = SpectrumReport::from_values(0, vec![]);
        assert_eq!(
            spectrum_csv(&empty),
            "index,singular_value,cumulative_energy\n"
        );

        let mut r = rng(3);
        let mut vals: Vec<f64> = gaussian(20, 1, &mut r)
            .into_vec()
            .into_iter()
            .map(f64::abs)
            .collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        let report = SpectrumReport::from_values(1, vals.clone());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        export_spectrum_csv(&report, &path).unwrap();
        let (back, energy) = parse_spectrum_csv(&fs::read_to_string(&path).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&vals) {
            assert!((a - b).abs() <= 1e-12);
        }
        for (a, b) in energy.iter().zip(&report.cumulative_energy) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!(export_spectrum_csv(&report, dir.path().join("no/such/dir.csv")).is_err());
    }
}

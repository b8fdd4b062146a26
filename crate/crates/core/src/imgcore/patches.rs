use serde::{Deserialize, Serialize};

use super::Image;
use crate::linops::Matrix;
use crate::{contract, Result};

/// Column-stacked `p×p` patches. Each column is one window vectorized by
/// concatenating its columns: entry `r + c·p` is the pixel in window row `r`,
/// window column `c`. Samples are raw pixel values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PatchMatrix {
    p: usize,
    data: Matrix,
}

impl PatchMatrix {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_patches(&self) -> usize {
        self.data.cols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn into_matrix(self) -> Matrix {
        self.data
    }
}

/// All fully contained `p×p` windows whose top-left corners lie on the
/// `stride` grid, in raster order of the corners. No padding or wrap.
pub fn extract_patches(image: &Image, p: usize, stride: usize) -> Result<PatchMatrix> {
    contract!(p >= 1, "patch size must be positive");
    contract!(stride >= 1, "stride must be positive");
    contract!(
        p <= image.width() && p <= image.height(),
        "patch size {p} exceeds image {}x{}",
        image.width(),
        image.height()
    );
    let nx = (image.width() - p) / stride + 1;
    let ny = (image.height() - p) / stride + 1;
    let mut data = Vec::with_capacity(p * p * nx * ny);
    for j in 0..ny {
        let y0 = j * stride;
        for i in 0..nx {
            let x0 = i * stride;
            for c in 0..p {
                for r in 0..p {
                    data.push(image.get(x0 + c, y0 + r));
                }
            }
        }
    }
    Ok(PatchMatrix {
        p,
        data: Matrix::from_col_major(p * p, nx * ny, data)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn window_counts() {
        let img = Image::from_fn(4, 4, |x, y| (x + 4 * y) as f64).unwrap();
        assert_eq!(extract_patches(&img, 2, 1).unwrap().n_patches(), 9);
        assert_eq!(extract_patches(&img, 2, 2).unwrap().n_patches(), 4);
        assert_eq!(extract_patches(&img, 4, 1).unwrap().n_patches(), 1);
        assert!(extract_patches(&img, 5, 1).is_err());
        assert!(extract_patches(&img, 2, 0).is_err());
    }

    #[test]
    fn constant_image_gives_constant_columns() {
        let img = Image::filled(6, 5, 3.5).unwrap();
        let pm = extract_patches(&img, 3, 1).unwrap();
        assert!(pm.matrix().as_slice().iter().all(|&v| v == 3.5));
    }

    #[test]
    fn column_major_within_patch() {
        let img = Image::from_fn(3, 3, |x, y| (10 * y + x) as f64).unwrap();
        let pm = extract_patches(&img, 2, 1).unwrap();
        // First window, top-left (0,0): column 0 = rows 0,1 at x=0.
        assert_eq!(pm.matrix().col(0), &[0.0, 10.0, 1.0, 11.0]);
        // Second window in raster order starts at (1,0).
        assert_eq!(pm.matrix().col(1), &[1.0, 11.0, 2.0, 12.0]);
    }

    proptest! {
        #[test]
        fn matches_direct_indexing(w in 1usize..12, h in 1usize..12, p in 1usize..5, stride in 1usize..4) {
            prop_assume!(p <= w && p <= h);
            let img = Image::from_fn(w, h, |x, y| (x * 31 + y * 7) as f64).unwrap();
            let pm = extract_patches(&img, p, stride).unwrap();
            let nx = (w - p) / stride + 1;
            let ny = (h - p) / stride + 1;
            prop_assert_eq!(pm.n_patches(), nx * ny);
            if stride == 1 {
                prop_assert_eq!(pm.n_patches(), (w - p + 1) * (h - p + 1));
            }
            for k in 0..pm.n_patches() {
                let (x0, y0) = ((k % nx) * stride, (k / nx) * stride);
                for c in 0..p {
                    for r in 0..p {
                        prop_assert_eq!(pm.matrix()[(r + c * p, k)], img.get(x0 + c, y0 + r));
                    }
                }
            }
        }
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Image;

/// Additive white Gaussian noise with standard deviation `sigma` (pixel
/// units), drawn from a generator seeded by `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub sigma: f64,
    pub seed: u64,
}

/// Adds i.i.d. `N(0, sigma²)` noise to every pixel. No clamping.
///
/// Normals come from ChaCha8 through the ziggurat sampler of `rand_distr`;
/// the output is a pure function of `(image, sigma, seed)`.
pub fn add_awgn(image: &Image, noise: &NoiseParams) -> Image {
    assert!(noise.sigma >= 0.0, "noise sigma must be nonnegative");
    if noise.sigma == 0.0 {
        return image.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let pixels = image
        .pixels()
        .iter()
        .map(|&v| {
            let z: f64 = rng.sample(StandardNormal);
            v + noise.sigma * z
        })
        .collect();
    image.with_pixels(pixels).expect("geometry unchanged")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_is_identity() {
        let img = Image::from_fn(7, 5, |x, y| (x + y) as f64).unwrap();
        assert_eq!(
            add_awgn(
                &img,
                &NoiseParams {
                    sigma: 0.0,
                    seed: 42
                }
            ),
            img
        );
    }

    #[test]
    fn deterministic_per_seed() {
        let img = Image::filled(32, 32, 100.0).unwrap();
        let p = NoiseParams {
            sigma: 10.0,
            seed: 7,
        };
        let a = add_awgn(&img, &p);
        let b = add_awgn(&img, &p);
        assert_eq!(a.pixels(), b.pixels());
        let c = add_awgn(&img, &NoiseParams { seed: 8, ..p });
        assert_ne!(a.pixels(), c.pixels());
    }

    #[test]
    fn sample_std_within_tolerance() {
        // 3·σ/√(2N) is three standard errors of the sample std.
        let img = Image::filled(512, 512, 128.0).unwrap();
        for seed in [0, 1, 2] {
            let out = add_awgn(&img, &NoiseParams { sigma: 25.0, seed });
            let n = out.len() as f64;
            let diffs: Vec<f64> = out.pixels().iter().map(|v| v - 128.0).collect();
            let mean = diffs.iter().sum::<f64>() / n;
            let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let std = var.sqrt();
            assert!((24.5..=25.5).contains(&std), "std {std}");
            assert!(
                (std - 25.0).abs() <= 3.0 * 25.0 / (2.0 * n).sqrt(),
                "std {std}"
            );
        }
    }
}

//! Reconstruction-quality metrics: PSNR, single-scale SSIM, and the
//! Sobel-gradient PSNR. All operate on `[0, 1]`-valued [`ImageBuffer`]s.

mod sobel;
mod ssim;

pub use sobel::{gradient_psnr, sobel_magnitude};
pub use ssim::ssim;

use crate::data::ImageBuffer;
use crate::error::{Error, Result};

/// PSNR and gradient-PSNR values are capped here; the cap triggers when the
/// relevant mean squared difference drops below 1e-10.
pub const PSNR_CAP_DB: f64 = 100.0;
pub(crate) const MSE_CAP_THRESHOLD: f64 = 1e-10;

pub(crate) fn check_shapes(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::Shape(format!(
            "image shapes differ: {}x{}x{} vs {}x{}x{}",
            a.height(),
            a.width(),
            a.channels(),
            b.height(),
            b.width(),
            b.channels()
        )));
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB over unit-range images:
/// `10 log10(1 / mse)`, capped at 100 dB for mse below 1e-10.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_shapes(a, b)?;
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.data().len() as f64;
    Ok(db_from_mse(mse))
}

pub(crate) fn db_from_mse(mse: f64) -> f64 {
    if mse < MSE_CAP_THRESHOLD {
        PSNR_CAP_DB
    } else {
        10.0 * (1.0 / mse).log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(h: usize, w: usize, data: Vec<f64>) -> ImageBuffer {
        ImageBuffer::new(h, w, 1, data).unwrap()
    }

    #[test]
    fn identical_images_hit_the_cap() {
        let a = img(2, 2, vec![0.1, 0.4, 0.6, 0.9]);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
    }

    #[test]
    fn uniform_error_of_point_one_is_twenty_db() {
        let a = img(2, 2, vec![0.5; 4]);
        let b = img(2, 2, vec![0.6; 4]);
        let got = psnr(&a, &b).unwrap();
        assert!((got - 20.0).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn matches_scalar_loop_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let a = img(6, 5, (0..30).map(|_| rng.gen_range(0.0..1.0)).collect());
        let b = img(6, 5, (0..30).map(|_| rng.gen_range(0.0..1.0)).collect());
        let mut sq = 0.0;
        let mut n = 0.0;
        for r in 0..6 {
            for c in 0..5 {
                let d = a.get(r, c, 0) - b.get(r, c, 0);
                sq += d * d;
                n += 1.0;
            }
        }
        let want = 10.0 * (n / sq).log10();
        assert!((psnr(&a, &b).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn psnr_is_symmetric() {
        let a = img(2, 2, vec![0.2, 0.3, 0.4, 0.5]);
        let b = img(2, 2, vec![0.9, 0.1, 0.2, 0.8]);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = img(2, 2, vec![0.0; 4]);
        let b = img(2, 3, vec![0.0; 6]);
        assert!(psnr(&a, &b).is_err());
    }
}

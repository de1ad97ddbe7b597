//! Sobel gradient maps and the gradient PSNR.

use crate::data::ImageBuffer;
use crate::error::Result;
use crate::metrics::{check_shapes, db_from_mse};

/// Mirror indexing with edge repetition: -1 -> 0, n -> n-1.
#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let r = if i < 0 {
        -i - 1
    } else if i >= n {
        2 * n - 1 - i
    } else {
        i
    };
    r as usize
}

/// Per-channel Sobel gradient magnitude `sqrt(Gx^2 + Gy^2)` with the standard
/// 3x3 kernels and reflected borders. Same layout as the image's samples;
/// magnitudes are not rescaled and may exceed 1.
///
/// The kernels are applied in factored form, `[1 2 1]` smoothing against a
/// two-point difference, so equal smoothed sums cancel exactly and constant
/// images have an identically zero gradient.
pub fn sobel_magnitude(img: &ImageBuffer) -> Vec<f64> {
    let (h, w, c) = (img.height(), img.width(), img.channels());
    let mut out = vec![0.0; h * w * c];
    for ch in 0..c {
        // Column-smoothed (vertical [1 2 1]) and row-smoothed (horizontal)
        // planes at reflected borders.
        let at = |r: isize, col: isize| img.get(reflect(r, h), reflect(col, w), ch);
        let smooth_v = |r: isize, col: isize| {
            at(r - 1, col) + 2.0 * at(r, col) + at(r + 1, col)
        };
        let smooth_h = |r: isize, col: isize| {
            at(r, col - 1) + 2.0 * at(r, col) + at(r, col + 1)
        };
        for r in 0..h {
            for col in 0..w {
                let (ri, ci) = (r as isize, col as isize);
                let gx = smooth_v(ri, ci + 1) - smooth_v(ri, ci - 1);
                let gy = smooth_h(ri + 1, ci) - smooth_h(ri - 1, ci);
                out[(r * w + col) * c + ch] = (gx * gx + gy * gy).sqrt();
            }
        }
    }
    out
}

/// Fidelity of preserved image gradients:
/// `-10 log10(mean (sobel(pred) - sobel(target))^2)`, capped at 100 dB.
pub fn gradient_psnr(pred: &ImageBuffer, target: &ImageBuffer) -> Result<f64> {
    check_shapes(pred, target)?;
    let ga = sobel_magnitude(pred);
    let gb = sobel_magnitude(target);
    let msd = ga.iter().zip(&gb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / ga.len() as f64;
    Ok(db_from_mse(msd))
}

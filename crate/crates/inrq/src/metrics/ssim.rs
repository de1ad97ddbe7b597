//! Single-scale SSIM with the standard 11x11 Gaussian window (sigma 1.5),
//! K1 = 0.01, K2 = 0.03, dynamic range 1. Statistics use valid windows only
//! (no padding) and channels are averaged.

use crate::data::ImageBuffer;
use crate::error::{Error, Result};
use crate::metrics::check_shapes;

pub(crate) const WINDOW: usize = 11;
const SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;

pub(crate) fn gaussian_kernel() -> [f64; WINDOW] {
    let mut k = [0.0; WINDOW];
    let mid = (WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - mid;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
        sum += *v;
    }
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable valid-mode Gaussian filter: `(h, w)` in, `(h-10, w-10)` out.
fn filter_valid(plane: &[f64], h: usize, w: usize) -> Vec<f64> {
    let k = gaussian_kernel();
    let wo = w - WINDOW + 1;
    let ho = h - WINDOW + 1;
    // Horizontal pass.
    let mut tmp = vec![0.0; h * wo];
    for r in 0..h {
        for c in 0..wo {
            let mut s = 0.0;
            for (t, &kv) in k.iter().enumerate() {
                s += kv * plane[r * w + c + t];
            }
            tmp[r * wo + c] = s;
        }
    }
    // Vertical pass.
    let mut out = vec![0.0; ho * wo];
    for r in 0..ho {
        for c in 0..wo {
            let mut s = 0.0;
            for (t, &kv) in k.iter().enumerate() {
                s += kv * tmp[(r + t) * wo + c];
            }
            out[r * wo + c] = s;
        }
    }
    out
}

fn channel_plane(img: &ImageBuffer, ch: usize) -> Vec<f64> {
    let c = img.channels();
    img.data().iter().skip(ch).step_by(c).copied().collect()
}

/// Mean structural similarity between two images, in `[-1, 1]`.
pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_shapes(a, b)?;
    let (h, w) = (a.height(), a.width());
    if h < WINDOW || w < WINDOW {
        return Err(Error::Shape(format!(
            "ssim needs images at least {WINDOW}x{WINDOW}, got {h}x{w}"
        )));
    }
    let c1 = K1 * K1;
    let c2 = K2 * K2;
    let mut total = 0.0;
    for ch in 0..a.channels() {
        let x = channel_plane(a, ch);
        let y = channel_plane(b, ch);
        let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
        let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
        let xy: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u * v).collect();

        let mu_x = filter_valid(&x, h, w);
        let mu_y = filter_valid(&y, h, w);
        let e_xx = filter_valid(&xx, h, w);
        let e_yy = filter_valid(&yy, h, w);
        let e_xy = filter_valid(&xy, h, w);

        let mut sum = 0.0;
        for i in 0..mu_x.len() {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let var_x = e_xx[i] - mx * mx;
            let var_y = e_yy[i] - my * my;
            let cov = e_xy[i] - mx * my;
            sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                / ((mx * mx + my * my + c1) * (var_x + var_y + c2));
        }
        total += sum / mu_x.len() as f64;
    }
    Ok(total / a.channels() as f64)
}

//! The three uniform level-set constructions.

use crate::error::{Error, Result};
use crate::quant::{validate_bits, QuantMethod, QuantizationMap};

/// Round-half-up: exact halves round toward positive infinity.
#[inline]
fn round_half_up(t: f64) -> f64 {
    (t + 0.5).floor()
}

/// k-bit uniform quantization of a scalar onto the `[-1, 1]` grid:
/// `q_k(x) = 2 (round((2^k - 1)(x + 1)/2) / (2^k - 1) - 1/2)`, with `x`
/// clamped to `[-1, 1]` first. The grid spacing is `2 / (2^k - 1)`.
pub fn quantize_explicit(x: f64, bits: u8) -> Result<f64> {
    let m = validate_bits(bits)? as f64;
    let x = x.clamp(-1.0, 1.0);
    let steps = m - 1.0;
    Ok(2.0 * (round_half_up(steps * (x + 1.0) / 2.0) / steps - 0.5))
}

/// The `[-1, 1]` grid with `2^k` levels; data-agnostic and fixed across epochs.
pub fn build_explicit_map(bits: u8) -> Result<QuantizationMap> {
    let m = validate_bits(bits)?;
    let levels = grid(-1.0, 1.0, m);
    QuantizationMap::new(levels, QuantMethod::ExplicitUnit, bits)
}

/// Half-width of the distributional range in standard deviations:
/// `d = 3 + 3(k - 1)/15`.
pub fn distributional_width(bits: u8) -> f64 {
    3.0 + 3.0 * (bits as f64 - 1.0) / 15.0
}

/// `2^k` levels uniformly spanning `mean +- d * std` of the layer's values.
/// A zero-spread layer degenerates to the single level `mean`.
pub fn build_distributional_map(values: &[f64], bits: u8) -> Result<QuantizationMap> {
    let m = validate_bits(bits)?;
    check_values(values)?;
    if values.iter().all(|&v| v == values[0]) {
        return QuantizationMap::new(vec![values[0]], QuantMethod::Distributional, bits);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return QuantizationMap::new(vec![mean], QuantMethod::Distributional, bits);
    }
    let d = distributional_width(bits);
    QuantizationMap::new(grid(mean - d * std, mean + d * std, m), QuantMethod::Distributional, bits)
}

/// `2^k` levels uniformly spanning `[min, max]` of the layer's values,
/// endpoints included. `min == max` degenerates to a single level.
pub fn build_minmax_map(values: &[f64], bits: u8) -> Result<QuantizationMap> {
    let m = validate_bits(bits)?;
    check_values(values)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        return QuantizationMap::new(vec![lo], QuantMethod::Minmax, bits);
    }
    QuantizationMap::new(grid(lo, hi, m), QuantMethod::Minmax, bits)
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Config("cannot build a quantization map from no values".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("weights must be finite to build a quantization map".into()));
    }
    Ok(())
}

/// `m` points from `lo` to `hi` inclusive, exact at both endpoints.
fn grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let steps = (m - 1) as f64;
    (0..m)
        .map(|i| if i == m - 1 { hi } else { lo + (hi - lo) * i as f64 / steps })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_endpoints_are_exact_for_all_k() {
        for k in 1..=8 {
            assert_eq!(quantize_explicit(-1.0, k).unwrap(), -1.0);
            assert_eq!(quantize_explicit(1.0, k).unwrap(), 1.0);
        }
    }

    #[test]
    fn explicit_one_bit_rounds_up_from_0p2() {
        // round(0.6) = 1 under half-up, so q_1(0.2) = 1.
        assert_eq!(quantize_explicit(0.2, 1).unwrap(), 1.0);
    }

    #[test]
    fn explicit_three_bit_zero_ties_upward() {
        // (2^3 - 1)(0 + 1)/2 = 3.5 rounds half-up to 4 -> 2(4/7 - 1/2) = 1/7.
        let q = quantize_explicit(0.0, 3).unwrap();
        assert!((q - 1.0 / 7.0).abs() < 1e-15, "got {q}");
    }

    #[test]
    fn explicit_grid_spacing() {
        for k in 1..=8u8 {
            let map = build_explicit_map(k).unwrap();
            assert_eq!(map.len(), 1 << k);
            let spacing = 2.0 / ((1u32 << k) - 1) as f64;
            for pair in map.levels().windows(2) {
                assert!((pair[1] - pair[0] - spacing).abs() < 1e-12);
            }
            assert_eq!(map.levels()[0], -1.0);
            assert_eq!(*map.levels().last().unwrap(), 1.0);
        }
    }

    #[test]
    fn explicit_rejects_zero_bits() {
        assert!(quantize_explicit(0.3, 0).is_err());
        assert!(build_explicit_map(0).is_err());
    }

    #[test]
    fn distributional_width_formula() {
        assert_eq!(distributional_width(1), 3.0);
        assert!((distributional_width(8) - 4.4).abs() < 1e-12);
    }

    #[test]
    fn distributional_levels_span_d_sigma() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let values: Vec<f64> = (0..4096)
            .map(|_| {
                // Box-Muller standard normal.
                let u: f64 = rng.gen_range(1e-12..1.0);
                let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                (-2.0 * u.ln()).sqrt() * v.cos()
            })
            .collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        let map = build_distributional_map(&values, 8).unwrap();
        let d = distributional_width(8);
        for &lv in map.levels() {
            assert!(lv >= mean - d * std - 1e-9 && lv <= mean + d * std + 1e-9);
        }
        assert!((map.levels()[0] - (mean - d * std)).abs() < 1e-12);
    }

    #[test]
    fn distributional_zero_spread_degenerates_to_mean() {
        let map = build_distributional_map(&[0.4, 0.4, 0.4], 3).unwrap();
        assert_eq!(map.levels(), &[0.4]);
    }

    #[test]
    fn minmax_one_bit_keeps_extremes() {
        let map = build_minmax_map(&[-2.0, 0.0, 2.0], 1).unwrap();
        assert_eq!(map.levels(), &[-2.0, 2.0]);
    }

    #[test]
    fn minmax_two_bit_uniform_spacing() {
        let map = build_minmax_map(&[0.0, 1.0], 2).unwrap();
        let want = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (got, want) in map.levels().iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn minmax_extremes_quantize_to_themselves() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let values: Vec<f64> = (0..50).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let map = build_minmax_map(&values, 3).unwrap();
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(map.quantize(lo), lo);
            assert_eq!(map.quantize(hi), hi);
        }
    }
}

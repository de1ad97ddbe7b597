use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::net::WeightSet;
use crate::quant::{build_map, QuantMethod};

/// A per-layer codebook: sorted levels plus nearest-level assignment.
///
/// Assignment maps each value to the nearest level, breaking exact midpoint
/// ties toward the lower level; values beyond the level range clamp to the
/// boundary level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizationMap {
    levels: Vec<f64>,
    method: QuantMethod,
    bits: u8,
}

impl QuantizationMap {
    /// Validates, sorts, and deduplicates the level set. At most `2^bits`
    /// distinct levels are allowed.
    pub fn new(mut levels: Vec<f64>, method: QuantMethod, bits: u8) -> Result<Self> {
        let max_levels = crate::quant::validate_bits(bits)?;
        if levels.is_empty() {
            return Err(Error::Config("quantization map needs at least one level".into()));
        }
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("quantization levels must be finite".into()));
        }
        levels.sort_unstable_by(f64::total_cmp);
        levels.dedup();
        if levels.len() > max_levels {
            return Err(Error::Config(format!(
                "{} distinct levels exceed 2^{bits}",
                levels.len()
            )));
        }
        Ok(QuantizationMap { levels, method, bits })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn method(&self) -> QuantMethod {
        self.method
    }

    pub fn bits(&self) -> u8 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// Index of the assigned level for `x`.
    #[inline]
    pub fn nearest_index(&self, x: f64) -> usize {
        let n = self.levels.len();
        let hi = self.levels.partition_point(|&lv| lv < x);
        if hi == 0 {
            return 0;
        }
        if hi == n {
            return n - 1;
        }
        let lo = hi - 1;
        // Ties go to the lower level.
        if x - self.levels[lo] <= self.levels[hi] - x {
            lo
        } else {
            hi
        }
    }

    /// Nearest-level assignment of a scalar.
    #[inline]
    pub fn quantize(&self, x: f64) -> f64 {
        self.levels[self.nearest_index(x)]
    }

    /// Index of `x` if it is exactly a level.
    pub fn exact_index(&self, x: f64) -> Option<usize> {
        self.levels.binary_search_by(|lv| lv.total_cmp(&x)).ok()
    }
}

/// Quantizes every entry of a weight matrix.
pub fn apply_map(weights: &Matrix, map: &QuantizationMap) -> Matrix {
    Matrix::from_vec(
        weights.rows(),
        weights.cols(),
        weights.data().iter().map(|&w| map.quantize(w)).collect(),
    )
}

/// Squared L2 quantization error of one layer: `sum (w - Q(w))^2`.
pub fn layer_error(weights: &Matrix, map: &QuantizationMap) -> f64 {
    weights
        .data()
        .iter()
        .map(|&w| {
            let e = w - map.quantize(w);
            e * e
        })
        .sum()
}

/// Total layer-wise quantization error: the sum of [`layer_error`] over all
/// weight matrices. Biases are not quantized and do not contribute.
pub fn tlqe(weights: &WeightSet, state: &LayerQuantState) -> f64 {
    weights
        .layers
        .iter()
        .zip(state.maps())
        .map(|(layer, map)| layer_error(&layer.weights, map))
        .sum()
}

/// One quantization map per weight matrix, with the per-layer error recorded
/// at build time (used by the error-triggered repartition rule).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerQuantState {
    maps: Vec<QuantizationMap>,
    error_at_build: Vec<f64>,
}

impl LayerQuantState {
    /// Builds fresh maps for every layer of `weights`.
    pub fn build(method: QuantMethod, bits: u8, weights: &WeightSet) -> Result<Self> {
        let mut maps = Vec::with_capacity(weights.num_layers());
        let mut error_at_build = Vec::with_capacity(weights.num_layers());
        for layer in &weights.layers {
            let map = build_map(method, layer.weights.data(), bits)?;
            error_at_build.push(layer_error(&layer.weights, &map));
            maps.push(map);
        }
        Ok(LayerQuantState { maps, error_at_build })
    }

    pub fn from_maps(maps: Vec<QuantizationMap>, weights: &WeightSet) -> Result<Self> {
        if maps.len() != weights.num_layers() {
            return Err(Error::Shape(format!(
                "{} maps for {} layers",
                maps.len(),
                weights.num_layers()
            )));
        }
        let error_at_build =
            weights.layers.iter().zip(&maps).map(|(l, m)| layer_error(&l.weights, m)).collect();
        Ok(LayerQuantState { maps, error_at_build })
    }

    pub fn maps(&self) -> &[QuantizationMap] {
        &self.maps
    }

    pub fn error_at_build(&self, layer: usize) -> f64 {
        self.error_at_build[layer]
    }

    /// Rebuilds the map of one layer from its current weights.
    pub fn rebuild_layer(&mut self, layer: usize, weights: &Matrix) -> Result<()> {
        let map = build_map(self.maps[layer].method(), weights.data(), self.maps[layer].bits())?;
        self.error_at_build[layer] = layer_error(weights, &map);
        self.maps[layer] = map;
        Ok(())
    }

    /// Shadow-quantized parameters: weights snapped to their layer's levels,
    /// biases passed through at full precision.
    pub fn apply(&self, weights: &WeightSet) -> WeightSet {
        let layers = weights
            .layers
            .iter()
            .zip(&self.maps)
            .map(|(layer, map)| crate::net::LayerParams {
                weights: apply_map(&layer.weights, map),
                biases: layer.biases.clone(),
            })
            .collect();
        WeightSet { layers }
    }
}

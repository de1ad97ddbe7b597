//! Weight quantization: the four level-set constructions (explicit `[-1, 1]`,
//! distributional, minmax, K-means), nearest-level application, and the
//! layer-wise quantization error metrics.

mod kmeans;
mod map;
mod uniform;

pub use kmeans::kmeans_1d;
pub use map::{apply_map, layer_error, tlqe, LayerQuantState, QuantizationMap};
pub use uniform::{
    build_distributional_map, build_explicit_map, build_minmax_map, distributional_width, quantize_explicit,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four level-set constructions. `ExplicitUnit` is the only fixed scheme;
/// the others are rebuilt from the live weights when repartitioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantMethod {
    ExplicitUnit,
    Distributional,
    Minmax,
    Kmeans,
}

impl QuantMethod {
    pub const ALL: [QuantMethod; 4] =
        [QuantMethod::ExplicitUnit, QuantMethod::Distributional, QuantMethod::Minmax, QuantMethod::Kmeans];

    pub fn is_fixed(self) -> bool {
        self == QuantMethod::ExplicitUnit
    }
}

impl fmt::Display for QuantMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            QuantMethod::ExplicitUnit => "explicit",
            QuantMethod::Distributional => "distributional",
            QuantMethod::Minmax => "minmax",
            QuantMethod::Kmeans => "kmeans",
        };
        write!(f, "{s}")
    }
}

impl FromStr for QuantMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" | "explicit-unit" | "explicit_unit" => Ok(QuantMethod::ExplicitUnit),
            "distributional" => Ok(QuantMethod::Distributional),
            "minmax" => Ok(QuantMethod::Minmax),
            "kmeans" | "k-means" => Ok(QuantMethod::Kmeans),
            other => Err(Error::Config(format!(
                "unknown quantization method '{other}' (explicit, distributional, minmax, kmeans)"
            ))),
        }
    }
}

/// Bits-per-weight accepted by every builder and by the codec's index packing.
pub const MAX_BITS: u8 = 16;

pub(crate) fn validate_bits(bits: u8) -> Result<usize> {
    if bits == 0 || bits > MAX_BITS {
        return Err(Error::Config(format!("bits-per-weight must be in 1..={MAX_BITS}, got {bits}")));
    }
    Ok(1usize << bits)
}

/// Builds a quantization map for one layer's weights with the given method.
pub fn build_map(method: QuantMethod, values: &[f64], bits: u8) -> Result<QuantizationMap> {
    match method {
        QuantMethod::ExplicitUnit => build_explicit_map(bits),
        QuantMethod::Distributional => build_distributional_map(values, bits),
        QuantMethod::Minmax => build_minmax_map(values, bits),
        QuantMethod::Kmeans => {
            let m = validate_bits(bits)?;
            let levels = kmeans_1d(values, m)?;
            QuantizationMap::new(levels, QuantMethod::Kmeans, bits)
        }
    }
}

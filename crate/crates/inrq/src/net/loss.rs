use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Training objective over batch predictions.
///
/// `Mse` is minimized directly. `Log10Mse` reports `-log10(mse)` (an unscaled
/// peak signal-to-noise ratio, so larger is better) and trains by descending
/// `log10(mse)`; the logarithm is monotone, so both objectives share their
/// optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Mse,
    Log10Mse,
}

impl LossKind {
    /// Floor applied to the mse before taking logarithms.
    pub const MSE_FLOOR: f64 = 1e-12;

    /// Reported loss value and the scale that converts the gradient of the
    /// summed squared error into the gradient of the descent objective.
    ///
    /// `sq_sum` is `sum((pred - target)^2)` over `n_elems` output scalars; the
    /// raw gradient it pairs with is `d(sq_sum)/dw / 2` (see `backward`).
    pub(crate) fn value_and_grad_scale(self, sq_sum: f64, n_elems: f64) -> (f64, f64) {
        let mse = sq_sum / n_elems;
        match self {
            LossKind::Mse => (mse, 2.0 / n_elems),
            LossKind::Log10Mse => {
                let floored = mse.max(Self::MSE_FLOOR);
                let value = -floored.log10();
                let scale = 2.0 / (n_elems * floored * std::f64::consts::LN_10);
                (value, scale)
            }
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Mse => write!(f, "mse"),
            LossKind::Log10Mse => write!(f, "log10-mse"),
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "mse" => Ok(LossKind::Mse),
            "log10-mse" | "log10_mse" => Ok(LossKind::Log10Mse),
            other => Err(Error::Config(format!("unknown loss kind '{other}' (mse, log10-mse)"))),
        }
    }
}

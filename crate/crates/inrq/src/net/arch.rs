use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hidden-layer activation. The output layer is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// `sin(omega * z)`, SIREN-style.
    Sine { omega: f64 },
    Relu,
    /// `exp(-z^2 / (2 sigma^2))`.
    Gaussian { sigma: f64 },
}

impl Activation {
    pub const DEFAULT_OMEGA: f64 = 30.0;
    pub const DEFAULT_SIGMA: f64 = 0.1;

    /// Sine activation at the conventional frequency 30.
    pub fn sine() -> Self {
        Activation::Sine { omega: Self::DEFAULT_OMEGA }
    }

    pub fn gaussian() -> Self {
        Activation::Gaussian { sigma: Self::DEFAULT_SIGMA }
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sine { omega } => (omega * z).sin(),
            Activation::Relu => z.max(0.0),
            Activation::Gaussian { sigma } => (-z * z / (2.0 * sigma * sigma)).exp(),
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Sine { omega } => omega * (omega * z).cos(),
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                -z / s2 * (-z * z / (2.0 * s2)).exp()
            }
        }
    }

    fn validate(self) -> Result<()> {
        match self {
            Activation::Sine { omega } if !(omega.is_finite() && omega > 0.0) => {
                Err(Error::Config(format!("sine frequency must be finite and > 0, got {omega}")))
            }
            Activation::Gaussian { sigma } if !(sigma.is_finite() && sigma > 0.0) => {
                Err(Error::Config(format!("gaussian sigma must be finite and > 0, got {sigma}")))
            }
            _ => Ok(()),
        }
    }
}

/// Input encoding applied before the first layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    None,
    /// Fourier features `sin(2^j pi x), cos(2^j pi x)` for `j < frequencies`.
    Positional { frequencies: usize },
}

/// Shape of the coordinate network: the `(w, h)` the quantizer trades against `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkArch {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub activation: Activation,
    pub input_dim: usize,
    pub output_dim: usize,
    pub encoding: Encoding,
}

impl NetworkArch {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_width == 0 {
            return Err(Error::Config(format!(
                "input_dim, output_dim, and hidden_width must be >= 1 (got {}, {}, {})",
                self.input_dim, self.output_dim, self.hidden_width
            )));
        }
        if let Encoding::Positional { frequencies } = self.encoding {
            if frequencies == 0 {
                return Err(Error::Config("positional encoding needs >= 1 frequency".into()));
            }
        }
        self.activation.validate()
    }

    /// Input width of the first layer after the encoding stage.
    pub fn encoded_input_dim(&self) -> usize {
        match self.encoding {
            Encoding::None => self.input_dim,
            Encoding::Positional { frequencies } => self.input_dim * 2 * frequencies,
        }
    }

    /// `(out, in)` shape of each weight matrix, first to last.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let enc = self.encoded_input_dim();
        let mut dims = Vec::with_capacity(self.hidden_layers + 1);
        if self.hidden_layers == 0 {
            dims.push((self.output_dim, enc));
            return dims;
        }
        dims.push((self.hidden_width, enc));
        for _ in 1..self.hidden_layers {
            dims.push((self.hidden_width, self.hidden_width));
        }
        dims.push((self.output_dim, self.hidden_width));
        dims
    }

    pub fn num_layers(&self) -> usize {
        self.hidden_layers + 1
    }

    /// Total weight count, biases excluded.
    pub fn num_weights(&self) -> usize {
        self.layer_dims().iter().map(|(o, i)| o * i).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_dims_cover_edge_shapes() {
        let mut arch = NetworkArch {
            hidden_layers: 0,
            hidden_width: 7,
            activation: Activation::sine(),
            input_dim: 2,
            output_dim: 3,
            encoding: Encoding::None,
        };
        assert_eq!(arch.layer_dims(), vec![(3, 2)]);

        arch.hidden_layers = 1;
        assert_eq!(arch.layer_dims(), vec![(7, 2), (3, 7)]);

        arch.hidden_layers = 3;
        assert_eq!(arch.layer_dims(), vec![(7, 2), (7, 7), (7, 7), (3, 7)]);
        assert_eq!(arch.num_weights(), 14 + 49 + 49 + 21);
    }

    #[test]
    fn positional_encoding_widens_first_layer() {
        let arch = NetworkArch {
            hidden_layers: 1,
            hidden_width: 4,
            activation: Activation::Relu,
            input_dim: 2,
            output_dim: 1,
            encoding: Encoding::Positional { frequencies: 4 },
        };
        assert_eq!(arch.encoded_input_dim(), 16);
        assert_eq!(arch.layer_dims()[0], (4, 16));
    }

    #[test]
    fn validate_rejects_zero_dims() {
        let arch = NetworkArch {
            hidden_layers: 1,
            hidden_width: 0,
            activation: Activation::Relu,
            input_dim: 2,
            output_dim: 1,
            encoding: Encoding::None,
        };
        assert!(arch.validate().is_err());
    }
}

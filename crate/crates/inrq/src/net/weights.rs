use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::net::{Activation, NetworkArch};

/// One dense layer: weight matrix `(out, in)` row-major plus bias vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

/// All trainable parameters of a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSet {
    pub layers: Vec<LayerParams>,
}

impl WeightSet {
    pub fn zeros(arch: &NetworkArch) -> Self {
        let layers = arch
            .layer_dims()
            .into_iter()
            .map(|(out, inp)| LayerParams { weights: Matrix::zeros(out, inp), biases: vec![0.0; out] })
            .collect();
        WeightSet { layers }
    }

    /// Seeded initialization. Weights follow the SIREN scheme for sine nets
    /// (first layer `U(+-1/fan_in)`, later layers `U(+-sqrt(6/fan_in)/omega)`)
    /// and `U(+-sqrt(6/fan_in))` otherwise; biases are `U(+-1/sqrt(fan_in))`.
    /// Draw order is fixed: per layer, weights row-major, then biases.
    pub fn init<R: Rng + ?Sized>(arch: &NetworkArch, rng: &mut R) -> Self {
        let mut layers = Vec::with_capacity(arch.num_layers());
        for (idx, (out, inp)) in arch.layer_dims().into_iter().enumerate() {
            let fan_in = inp as f64;
            let limit = match arch.activation {
                Activation::Sine { omega } => {
                    if idx == 0 {
                        1.0 / fan_in
                    } else {
                        (6.0 / fan_in).sqrt() / omega
                    }
                }
                Activation::Relu | Activation::Gaussian { .. } => (6.0 / fan_in).sqrt(),
            };
            let wdist = Uniform::new_inclusive(-limit, limit);
            let mut weights = Matrix::zeros(out, inp);
            for w in weights.data_mut() {
                *w = wdist.sample(rng);
            }
            let blimit = 1.0 / fan_in.sqrt();
            let bdist = Uniform::new_inclusive(-blimit, blimit);
            let biases = (0..out).map(|_| bdist.sample(rng)).collect();
            layers.push(LayerParams { weights, biases });
        }
        WeightSet { layers }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Total weight count, biases excluded.
    pub fn num_weights(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len()).sum()
    }

    pub fn num_biases(&self) -> usize {
        self.layers.iter().map(|l| l.biases.len()).sum()
    }

    pub fn matches_arch(&self, arch: &NetworkArch) -> Result<()> {
        let dims = arch.layer_dims();
        if dims.len() != self.layers.len() {
            return Err(Error::Shape(format!(
                "weight set has {} layers, architecture needs {}",
                self.layers.len(),
                dims.len()
            )));
        }
        for (l, ((out, inp), layer)) in dims.into_iter().zip(&self.layers).enumerate() {
            if layer.weights.rows() != out || layer.weights.cols() != inp || layer.biases.len() != out {
                return Err(Error::Shape(format!(
                    "layer {l}: expected {out}x{inp} weights and {out} biases, got {}x{} and {}",
                    layer.weights.rows(),
                    layer.weights.cols(),
                    layer.biases.len()
                )));
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.data().iter().all(|v| v.is_finite()) && l.biases.iter().all(|v| v.is_finite()))
    }

    /// Rounds every parameter through `f32`, the precision the codec stores.
    pub fn to_f32_precision(&self) -> WeightSet {
        let layers = self
            .layers
            .iter()
            .map(|l| LayerParams {
                weights: Matrix::from_vec(
                    l.weights.rows(),
                    l.weights.cols(),
                    l.weights.data().iter().map(|&v| v as f32 as f64).collect(),
                ),
                biases: l.biases.iter().map(|&v| v as f32 as f64).collect(),
            })
            .collect();
        WeightSet { layers }
    }

    /// Elementwise `self += other`. Shapes must match.
    pub fn add_assign(&mut self, other: &WeightSet) {
        assert_eq!(self.layers.len(), other.layers.len(), "layer count mismatch");
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.data_mut().iter_mut().zip(b.weights.data()) {
                *x += y;
            }
            for (x, y) in a.biases.iter_mut().zip(&b.biases) {
                *x += y;
            }
        }
    }

    /// Elementwise scale by a constant.
    pub fn scale(&mut self, c: f64) {
        for l in &mut self.layers {
            for x in l.weights.data_mut() {
                *x *= c;
            }
            for x in &mut l.biases {
                *x *= c;
            }
        }
    }
}

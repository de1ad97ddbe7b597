use serde::{Deserialize, Serialize};

use crate::net::{NetworkArch, WeightSet};

/// Adam hyperparameters. Defaults: lr 1e-4, betas (0.99, 0.999),
/// weight decay 1e-8, eps 1e-8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams { lr: 1e-4, beta1: 0.99, beta2: 0.999, weight_decay: 1e-8, eps: 1e-8 }
    }
}

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    m: WeightSet,
    v: WeightSet,
    t: u64,
}

impl AdamState {
    pub fn new(arch: &NetworkArch) -> Self {
        AdamState { m: WeightSet::zeros(arch), v: WeightSet::zeros(arch), t: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

#[inline]
fn update_scalar(w: &mut f64, g: f64, m: &mut f64, v: &mut f64, p: &AdamParams, bc1: f64, bc2: f64) {
    let g = g + p.weight_decay * *w;
    *m = p.beta1 * *m + (1.0 - p.beta1) * g;
    *v = p.beta2 * *v + (1.0 - p.beta2) * g * g;
    let m_hat = *m / bc1;
    let v_hat = *v / bc2;
    *w -= p.lr * m_hat / (v_hat.sqrt() + p.eps);
}

/// One bias-corrected Adam update over all parameters. Weight decay is added
/// to the gradient before the moment updates (coupled L2 form).
pub fn adam_step(weights: &mut WeightSet, grads: &WeightSet, state: &mut AdamState, params: &AdamParams) {
    assert_eq!(weights.num_layers(), grads.num_layers(), "gradient shape mismatch");
    state.t += 1;
    let bc1 = 1.0 - params.beta1.powi(state.t as i32);
    let bc2 = 1.0 - params.beta2.powi(state.t as i32);
    for (l, layer) in weights.layers.iter_mut().enumerate() {
        let g = &grads.layers[l];
        let m = &mut state.m.layers[l];
        let v = &mut state.v.layers[l];
        for i in 0..layer.weights.len() {
            update_scalar(
                &mut layer.weights.data_mut()[i],
                g.weights.data()[i],
                &mut m.weights.data_mut()[i],
                &mut v.weights.data_mut()[i],
                params,
                bc1,
                bc2,
            );
        }
        for i in 0..layer.biases.len() {
            update_scalar(&mut layer.biases[i], g.biases[i], &mut m.biases[i], &mut v.biases[i], params, bc1, bc2);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Activation, Encoding};

    fn tiny_arch() -> NetworkArch {
        NetworkArch {
            hidden_layers: 0,
            hidden_width: 1,
            activation: Activation::Relu,
            input_dim: 1,
            output_dim: 1,
            encoding: Encoding::None,
        }
    }

    #[test]
    fn zero_gradient_leaves_weights_unchanged() {
        let arch = tiny_arch();
        let mut ws = WeightSet::zeros(&arch);
        ws.layers[0].weights.set(0, 0, 0.7);
        let before = ws.clone();
        let grads = WeightSet::zeros(&arch);
        let mut state = AdamState::new(&arch);
        let params = AdamParams { weight_decay: 0.0, ..AdamParams::default() };
        adam_step(&mut ws, &grads, &mut state, &params);
        assert_eq!(ws, before);
    }

    #[test]
    fn first_step_moves_by_lr_in_sign_direction() {
        let arch = tiny_arch();
        let mut ws = WeightSet::zeros(&arch);
        let mut grads = WeightSet::zeros(&arch);
        grads.layers[0].weights.set(0, 0, 3.5);
        grads.layers[0].biases[0] = -0.2;
        let mut state = AdamState::new(&arch);
        let params = AdamParams { lr: 1e-3, weight_decay: 0.0, ..AdamParams::default() };
        adam_step(&mut ws, &grads, &mut state, &params);
        // Bias-corrected first step is -lr * g/(|g| + eps'), i.e. -lr*sign(g) up to eps.
        assert!((ws.layers[0].weights.get(0, 0) + 1e-3).abs() < 1e-6);
        assert!((ws.layers[0].biases[0] - 1e-3).abs() < 1e-6);
    }

    #[test]
    fn matches_independent_scalar_adam_on_quadratic() {
        // Minimize f(w) = (w - 3)^2 / 2 for 10 steps; oracle is a direct
        // scalar transcription of the update rule.
        let params = AdamParams { lr: 0.05, beta1: 0.9, beta2: 0.999, weight_decay: 0.01, eps: 1e-8 };
        let arch = tiny_arch();
        let mut ws = WeightSet::zeros(&arch);
        let mut state = AdamState::new(&arch);

        let mut w_oracle = 0.0f64;
        let mut m = 0.0f64;
        let mut v = 0.0f64;
        for t in 1..=10 {
            let g_net = ws.layers[0].weights.get(0, 0) - 3.0;
            let mut grads = WeightSet::zeros(&arch);
            grads.layers[0].weights.set(0, 0, g_net);
            adam_step(&mut ws, &grads, &mut state, &params);

            let g = (w_oracle - 3.0) + params.weight_decay * w_oracle;
            m = params.beta1 * m + (1.0 - params.beta1) * g;
            v = params.beta2 * v + (1.0 - params.beta2) * g * g;
            let m_hat = m / (1.0 - params.beta1.powi(t));
            let v_hat = v / (1.0 - params.beta2.powi(t));
            w_oracle -= params.lr * m_hat / (v_hat.sqrt() + params.eps);

            let diff = (ws.layers[0].weights.get(0, 0) - w_oracle).abs();
            assert!(diff < 1e-12, "step {t}: trajectory diverged by {diff}");
        }
    }
}

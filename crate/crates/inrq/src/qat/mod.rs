//! Quantization-aware training with straight-through estimation and periodic
//! (or error-triggered) repartitioning of the per-layer quantization maps.
//!
//! Each epoch runs the forward pass and loss on the quantized shadow weights
//! `W_k = Q(W)` and applies the resulting gradients directly to the
//! full-precision weights; the straight-through estimator treats `Q` as the
//! identity during backpropagation. Non-fixed schemes rebuild their maps from
//! the live weights on the configured schedule.

use serde::{Deserialize, Serialize};

use crate::data::{outputs_to_image, RegressionDataset};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics;
use crate::net::{adam_step, backward, forward, AdamParams, AdamState, LossKind, NetworkArch, WeightSet};
use crate::quant::{layer_error, tlqe, LayerQuantState, QuantMethod};

/// Everything a training run depends on. Two runs with equal configs and
/// signals produce bitwise-identical results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QatConfig {
    pub arch: NetworkArch,
    pub method: QuantMethod,
    pub bits: u8,
    pub epochs: usize,
    /// Rebuild maps every this many epochs (ignored by the fixed explicit
    /// scheme). Intervals beyond `epochs` keep the epoch-0 maps throughout.
    pub repartition_interval: usize,
    /// When set, repartitioning is triggered per layer by quantization-error
    /// growth instead of periodically: a layer is rebuilt once its current
    /// error exceeds the error recorded at its last build by this delta.
    pub delta_threshold: Option<f64>,
    pub loss: LossKind,
    pub seed: u64,
    pub optimizer: AdamParams,
}

impl QatConfig {
    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        crate::quant::validate_bits(self.bits)?;
        if self.epochs == 0 {
            return Err(Error::Config("training needs at least one epoch".into()));
        }
        if self.repartition_interval == 0 {
            return Err(Error::Config("repartition interval must be >= 1".into()));
        }
        if let Some(d) = self.delta_threshold {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::Config(format!("delta threshold must be finite and >= 0, got {d}")));
            }
        }
        Ok(())
    }
}

/// One history row, also the schema of the training CSV:
/// `epoch,loss,psnr,tlqe,repartitioned`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub psnr: f64,
    pub tlqe: f64,
    pub repartitioned: bool,
}

/// Snapshot of the best-PSNR epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestSnapshot {
    pub epoch: usize,
    pub psnr: f64,
    /// Quantized weights (full-precision biases) at the best epoch.
    pub quantized: WeightSet,
    /// The maps that produced them.
    pub state: LayerQuantState,
}

/// Result of a training run: final full-precision weights, final maps, the
/// best-epoch snapshot, and the per-epoch history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub arch: NetworkArch,
    pub method: QuantMethod,
    pub bits: u8,
    pub loss: LossKind,
    pub weights: WeightSet,
    pub state: LayerQuantState,
    /// Present for trained models; absent when a model was reconstructed by
    /// decoding an artifact (no signal to score against).
    pub best: Option<BestSnapshot>,
    pub history: Vec<EpochRecord>,
}

impl TrainedModel {
    /// The quantized weights the codec serializes: the best-epoch snapshot
    /// when present, otherwise the shadow quantization of the final weights.
    pub fn quantized_weights(&self) -> WeightSet {
        match &self.best {
            Some(best) => best.quantized.clone(),
            None => self.state.apply(&self.weights),
        }
    }

    pub fn quantization_state(&self) -> &LayerQuantState {
        match &self.best {
            Some(best) => &best.state,
            None => &self.state,
        }
    }

    pub fn repartition_count(&self) -> usize {
        self.history.iter().filter(|r| r.repartitioned).count()
    }
}

/// One straight-through training step: quantize, differentiate at the
/// quantized point, update the full-precision weights. Returns the loss.
pub fn qat_epoch(
    arch: &NetworkArch,
    weights: &mut WeightSet,
    state: &LayerQuantState,
    adam: &mut AdamState,
    params: &AdamParams,
    loss: LossKind,
    coords: &Matrix,
    targets: &Matrix,
) -> Result<f64> {
    let shadow = state.apply(weights);
    let (value, grads) = backward(arch, &shadow, coords, targets, loss)?;
    adam_step(weights, &grads, adam, params);
    Ok(value)
}

/// Applies the repartition rule for this epoch, rebuilding maps in place.
/// Returns whether any layer was rebuilt. The fixed explicit scheme never
/// repartitions.
pub fn maybe_repartition(
    epoch: usize,
    config: &QatConfig,
    weights: &WeightSet,
    state: &mut LayerQuantState,
) -> Result<bool> {
    if config.method.is_fixed() {
        return Ok(false);
    }
    match config.delta_threshold {
        None => {
            if epoch % config.repartition_interval != 0 {
                return Ok(false);
            }
            for (l, layer) in weights.layers.iter().enumerate() {
                state.rebuild_layer(l, &layer.weights)?;
            }
            Ok(true)
        }
        Some(delta) => {
            let mut any = false;
            for (l, layer) in weights.layers.iter().enumerate() {
                let current = layer_error(&layer.weights, &state.maps()[l]);
                if current >= state.error_at_build(l) + delta {
                    state.rebuild_layer(l, &layer.weights)?;
                    any = true;
                }
            }
            Ok(any)
        }
    }
}

/// Runs the full training loop on one signal and returns the trained model.
///
/// Initial maps are built from the initialized weights before the first step.
/// Every epoch records the loss at the step, then the PSNR and TLQE of the
/// post-step (and post-repartition) quantized model; the best epoch is the
/// one with the highest quantized PSNR on the training signal.
pub fn train(config: &QatConfig, data: &RegressionDataset) -> Result<TrainedModel> {
    config.validate()?;
    if config.arch.input_dim != data.coords.cols() {
        return Err(Error::Shape(format!(
            "architecture input_dim {} vs dataset coordinate width {}",
            config.arch.input_dim,
            data.coords.cols()
        )));
    }
    if config.arch.output_dim != data.targets.cols() {
        return Err(Error::Shape(format!(
            "architecture output_dim {} vs dataset channels {}",
            config.arch.output_dim,
            data.targets.cols()
        )));
    }

    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights = WeightSet::init(&config.arch, &mut rng);
    let mut state = LayerQuantState::build(config.method, config.bits, &weights)?;
    let mut adam = AdamState::new(&config.arch);

    let mut history = Vec::with_capacity(config.epochs);
    let mut best: Option<BestSnapshot> = None;

    for epoch in 1..=config.epochs {
        let loss = qat_epoch(
            &config.arch,
            &mut weights,
            &state,
            &mut adam,
            &config.optimizer,
            config.loss,
            &data.coords,
            &data.targets,
        )
        .map_err(|e| match e {
            Error::NonFinite => Error::Diverged { epoch },
            other => other,
        })?;

        let repartitioned = maybe_repartition(epoch, config, &weights, &mut state)?;

        let shadow = state.apply(&weights);
        let preds = forward(&config.arch, &shadow, &data.coords)?;
        let rendered = outputs_to_image(&preds, data.image.height(), data.image.width())?;
        let psnr = metrics::psnr(&rendered, &data.image)?;
        let tlqe_now = tlqe(&weights, &state);
        history.push(EpochRecord { epoch, loss, psnr, tlqe: tlqe_now, repartitioned });

        let improved = best.as_ref().map_or(true, |b| psnr > b.psnr);
        if improved {
            best = Some(BestSnapshot { epoch, psnr, quantized: shadow, state: state.clone() });
        }
    }

    Ok(TrainedModel {
        arch: config.arch,
        method: config.method,
        bits: config.bits,
        loss: config.loss,
        weights,
        state,
        best,
        history,
    })
}

/// Writes the history as CSV: header `epoch,loss,psnr,tlqe,repartitioned`.
pub fn write_history_csv<W: std::io::Write>(history: &[EpochRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "epoch,loss,psnr,tlqe,repartitioned")?;
    for r in history {
        writeln!(out, "{},{},{},{},{}", r.epoch, r.loss, r.psnr, r.tlqe, u8::from(r.repartitioned))?;
    }
    Ok(())
}

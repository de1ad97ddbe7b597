//! Rate-distortion grid search: trains every `(hidden_layers, width, bits,
//! method, seed)` combination on one signal, compresses each result, and
//! records quality and size.
//!
//! # CSV schema
//!
//! One header row, then one row per grid point in grid order (hidden layers,
//! then width, then bits, then method, then seed, innermost last):
//!
//! ```text
//! hidden_layers,width,bits,method,seed,status,best_epoch,best_psnr,ssim,
//! gradient_psnr,raw_bits,compressed_bytes,bits_per_weight,repartitions
//! ```
//!
//! `status` is `ok` or `diverged`; diverged rows carry zeros for the metric
//! and size columns. Runs may execute concurrently (`workers`), but records
//! are always emitted in grid order, so sweep output is a pure function of
//! the spec and the signal. Wall-clock timing goes to stderr only, keeping
//! the CSV reproducible byte-for-byte.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec;
use crate::data::{load_image, make_dataset, outputs_to_image, RegressionDataset};
use crate::error::{Error, Result};
use crate::metrics;
use crate::net::{Activation, AdamParams, Encoding, LossKind, NetworkArch};
use crate::qat::{train, QatConfig};
use crate::quant::QuantMethod;

/// Grid definition, read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Path of the signal image (PNG or PPM).
    pub signal: PathBuf,
    pub hidden_layers: Vec<usize>,
    pub widths: Vec<usize>,
    pub bits: Vec<u8>,
    pub methods: Vec<QuantMethod>,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    /// Defaults to every epoch for signals up to 64x64 and every 50 epochs
    /// beyond that.
    #[serde(default)]
    pub repartition_interval: Option<usize>,
    #[serde(default)]
    pub loss: Option<LossKind>,
    #[serde(default)]
    pub activation: Option<Activation>,
    #[serde(default)]
    pub learning_rate: Option<f64>,
    /// Optional memory budget in bytes for [`pareto_filter`] reporting.
    #[serde(default)]
    pub budget_bytes: Option<u64>,
    /// Cap on concurrent training runs; defaults to the rayon global pool.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers.is_empty() || self.widths.is_empty() || self.bits.is_empty()
            || self.methods.is_empty()
            || self.seeds.is_empty()
        {
            return Err(Error::Config("sweep grids must be nonempty".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("sweep needs epochs >= 1".into()));
        }
        for &b in &self.bits {
            crate::quant::validate_bits(b)?;
        }
        Ok(())
    }

    /// All grid points in emission order.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut points = Vec::new();
        for &hidden_layers in &self.hidden_layers {
            for &width in &self.widths {
                for &bits in &self.bits {
                    for &method in &self.methods {
                        for &seed in &self.seeds {
                            points.push(GridPoint { hidden_layers, width, bits, method, seed });
                        }
                    }
                }
            }
        }
        points
    }
}

/// Repartition cadence when the spec leaves it unset: every epoch at CIFAR
/// scale, every 50 epochs for larger signals.
pub fn default_repartition_interval(height: usize, width: usize) -> usize {
    if height * width <= 64 * 64 {
        1
    } else {
        50
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub hidden_layers: usize,
    pub width: usize,
    pub bits: u8,
    pub method: QuantMethod,
    pub seed: u64,
}

/// Outcome of one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub point: GridPoint,
    pub diverged: bool,
    pub best_epoch: usize,
    pub best_psnr: f64,
    pub ssim: f64,
    pub gradient_psnr: f64,
    pub raw_bits: u64,
    pub compressed_bytes: usize,
    pub bits_per_weight: f64,
    pub repartitions: usize,
    /// Not part of the CSV; reported on stderr.
    #[serde(skip)]
    pub wall_clock_ms: u128,
}

fn run_point(spec: &SweepSpec, data: &RegressionDataset, point: GridPoint) -> Result<SweepRecord> {
    let start = std::time::Instant::now();
    let arch = NetworkArch {
        hidden_layers: point.hidden_layers,
        hidden_width: point.width,
        activation: spec.activation.unwrap_or_else(Activation::sine),
        input_dim: 2,
        output_dim: data.image.channels(),
        encoding: Encoding::None,
    };
    let config = QatConfig {
        arch,
        method: point.method,
        bits: point.bits,
        epochs: spec.epochs,
        repartition_interval: spec
            .repartition_interval
            .unwrap_or_else(|| default_repartition_interval(data.image.height(), data.image.width())),
        delta_threshold: None,
        loss: spec.loss.unwrap_or(LossKind::Mse),
        seed: point.seed,
        optimizer: AdamParams { lr: spec.learning_rate.unwrap_or(1e-4), ..AdamParams::default() },
    };

    let model = match train(&config, data) {
        Ok(m) => m,
        Err(Error::Diverged { epoch }) => {
            eprintln!("sweep: {point:?} diverged at epoch {epoch}");
            return Ok(SweepRecord {
                point,
                diverged: true,
                best_epoch: epoch,
                best_psnr: 0.0,
                ssim: 0.0,
                gradient_psnr: 0.0,
                raw_bits: 0,
                compressed_bytes: 0,
                bits_per_weight: 0.0,
                repartitions: 0,
                wall_clock_ms: start.elapsed().as_millis(),
            });
        }
        Err(e) => return Err(e),
    };

    let bytes = codec::encode(&model)?;
    let rate = codec::measure_rate(&bytes)?;

    let quantized = model.quantized_weights();
    let preds = crate::net::forward(&arch, &quantized, &data.coords)?;
    let rendered = outputs_to_image(&preds, data.image.height(), data.image.width())?;
    let psnr = metrics::psnr(&rendered, &data.image)?;
    let ssim = metrics::ssim(&rendered, &data.image)?;
    let gradient_psnr = metrics::gradient_psnr(&rendered, &data.image)?;

    Ok(SweepRecord {
        point,
        diverged: false,
        best_epoch: model.best.as_ref().map_or(0, |b| b.epoch),
        best_psnr: psnr,
        ssim,
        gradient_psnr,
        raw_bits: rate.raw_bits,
        compressed_bytes: rate.compressed_bytes,
        bits_per_weight: rate.bits_per_weight_effective,
        repartitions: model.repartition_count(),
        wall_clock_ms: start.elapsed().as_millis(),
    })
}

/// Trains, compresses, and scores every grid point. Records come back in
/// grid order regardless of scheduling; individual divergences are recorded
/// and the sweep continues.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let image = load_image(&spec.signal)?;
    let data = make_dataset(image)?;
    run_sweep_on(spec, &data)
}

/// [`run_sweep`] against an already-loaded dataset.
pub fn run_sweep_on(spec: &SweepSpec, data: &RegressionDataset) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let points = spec.grid();
    let records: Vec<Result<SweepRecord>> = match spec.workers {
        Some(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.max(1))
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            pool.install(|| points.par_iter().map(|&p| run_point(spec, data, p)).collect())
        }
        None => points.par_iter().map(|&p| run_point(spec, data, p)).collect(),
    };
    let records: Vec<SweepRecord> = records.into_iter().collect::<Result<_>>()?;
    for r in &records {
        eprintln!(
            "sweep: h={} w={} k={} {} seed={} -> {} dB, {} B, {} ms",
            r.point.hidden_layers,
            r.point.width,
            r.point.bits,
            r.point.method,
            r.point.seed,
            format_float(r.best_psnr),
            r.compressed_bytes,
            r.wall_clock_ms
        );
    }
    Ok(records)
}

fn format_float(v: f64) -> String {
    format!("{v:.2}")
}

pub const CSV_HEADER: &str = "hidden_layers,width,bits,method,seed,status,best_epoch,best_psnr,ssim,gradient_psnr,raw_bits,compressed_bytes,bits_per_weight,repartitions";

/// Writes records as CSV in the documented schema.
pub fn write_csv<W: std::io::Write>(records: &[SweepRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.point.hidden_layers,
            r.point.width,
            r.point.bits,
            r.point.method,
            r.point.seed,
            if r.diverged { "diverged" } else { "ok" },
            r.best_epoch,
            r.best_psnr,
            r.ssim,
            r.gradient_psnr,
            r.raw_bits,
            r.compressed_bytes,
            r.bits_per_weight,
            r.repartitions
        )?;
    }
    Ok(())
}

/// Records meeting the byte budget with maximal PSNR: the subset with
/// `compressed_bytes <= budget` that no other eligible record dominates
/// (higher-or-equal PSNR and smaller-or-equal size, one strict). Sorted by
/// PSNR descending, ties broken by smaller size.
pub fn pareto_filter(records: &[SweepRecord], budget_bytes: u64) -> Vec<SweepRecord> {
    let eligible: Vec<&SweepRecord> =
        records.iter().filter(|r| !r.diverged && r.compressed_bytes as u64 <= budget_bytes).collect();
    let mut front: Vec<SweepRecord> = eligible
        .iter()
        .filter(|r| {
            !eligible.iter().any(|o| {
                o.best_psnr >= r.best_psnr
                    && o.compressed_bytes <= r.compressed_bytes
                    && (o.best_psnr > r.best_psnr || o.compressed_bytes < r.compressed_bytes)
            })
        })
        .map(|r| (*r).clone())
        .collect();
    front.sort_by(|a, b| {
        b.best_psnr.total_cmp(&a.best_psnr).then(a.compressed_bytes.cmp(&b.compressed_bytes))
    });
    front
}

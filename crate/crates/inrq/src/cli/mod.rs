//! Command-line front end: `train`, `eval`, `compress`, `decompress`,
//! `sweep`, and `info`.
//!
//! Exit codes: 0 success, 1 usage (bad flags, invalid configuration,
//! refusing to overwrite without `--force`), 2 runtime failure (I/O,
//! corrupt artifacts, divergence). Existing output files are never
//! overwritten unless `--force` is passed. All randomness flows from
//! `--seed` (default 0).

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::codec;
use crate::data::{load_image, make_dataset, outputs_to_image};
use crate::error::{Error, Result};
use crate::metrics;
use crate::net::{Activation, AdamParams, Encoding, LossKind, NetworkArch, WeightSet};
use crate::qat::{train, write_history_csv, QatConfig, TrainedModel};
use crate::quant::{LayerQuantState, QuantMethod};
use crate::sweep::{pareto_filter, run_sweep, write_csv, SweepSpec};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// On-disk JSON wrapper around a trained model.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub model: TrainedModel,
}

#[derive(Debug, Parser)]
#[command(name = "inrq", version, about = "Train, quantize, and compress coordinate-MLP image models")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a quantization-aware coordinate network to an image.
    Train(TrainArgs),
    /// Report PSNR / SSIM / gradient-PSNR and size for a model or artifact.
    Eval(EvalArgs),
    /// Pack a trained model into a compressed artifact.
    Compress(CompressArgs),
    /// Unpack an artifact back into a (quantized) model file.
    Decompress(DecompressArgs),
    /// Run a rate-distortion grid search from a JSON spec.
    Sweep(SweepArgs),
    /// Describe a model or artifact file.
    Info(InfoArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Signal image (PNG or binary PPM).
    #[arg(long)]
    image: Option<PathBuf>,
    /// Output model file (JSON).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-epoch history CSV path; defaults to `<out>.history.csv`.
    #[arg(long)]
    history: Option<PathBuf>,
    /// JSON config file supplying defaults for any flag below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    hidden_layers: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    /// sine | relu | gaussian
    #[arg(long)]
    activation: Option<String>,
    /// Sine frequency (with --activation sine).
    #[arg(long)]
    omega: Option<f64>,
    /// Gaussian width (with --activation gaussian).
    #[arg(long)]
    sigma: Option<f64>,
    /// none | positional
    #[arg(long)]
    encoding: Option<String>,
    /// Frequency count for positional encoding.
    #[arg(long)]
    frequencies: Option<usize>,
    /// explicit | distributional | minmax | kmeans
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    bits: Option<u8>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Repartition interval in epochs.
    #[arg(long)]
    interval: Option<usize>,
    /// Error-growth repartition threshold; replaces the periodic rule.
    #[arg(long)]
    delta: Option<f64>,
    /// mse | log10-mse
    #[arg(long)]
    loss: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
}

/// The same knobs as the train flags, all optional, for `--config` files.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainConfigFile {
    image: Option<PathBuf>,
    hidden_layers: Option<usize>,
    width: Option<usize>,
    activation: Option<String>,
    omega: Option<f64>,
    sigma: Option<f64>,
    encoding: Option<String>,
    frequencies: Option<usize>,
    method: Option<String>,
    bits: Option<u8>,
    epochs: Option<usize>,
    interval: Option<usize>,
    delta: Option<f64>,
    loss: Option<String>,
    seed: Option<u64>,
    lr: Option<f64>,
    beta1: Option<f64>,
    beta2: Option<f64>,
    weight_decay: Option<f64>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Model file produced by `train` or `decompress`.
    #[arg(long, conflicts_with = "artifact")]
    model: Option<PathBuf>,
    /// Compressed artifact produced by `compress`.
    #[arg(long)]
    artifact: Option<PathBuf>,
    /// Reference signal image.
    #[arg(long)]
    image: PathBuf,
    /// Write the metrics as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Render the reconstruction to this PNG.
    #[arg(long)]
    render: Option<PathBuf>,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct CompressArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct DecompressArgs {
    #[arg(long)]
    artifact: PathBuf,
    /// Output model file (JSON) holding the decoded quantized weights.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Sweep spec (JSON); see the sweep module docs for the schema.
    #[arg(long)]
    spec: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Report the Pareto front under this byte budget (overrides the spec).
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct InfoArgs {
    #[arg(long, conflicts_with = "artifact")]
    model: Option<PathBuf>,
    #[arg(long)]
    artifact: Option<PathBuf>,
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn run_main() -> i32 {
    run_from(std::env::args_os())
}

/// Testable entry point.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprint!("{e}");
            return 1;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Compress(args) => cmd_compress(args),
        Command::Decompress(args) => cmd_decompress(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Info(args) => cmd_info(args),
    }
}

fn ensure_writable(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::Config(format!("{} exists; pass --force to overwrite", path.display())));
    }
    Ok(())
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let file = ModelFile { format_version: MODEL_FORMAT_VERSION, model: model.clone() };
    write_bytes(path, serde_json::to_vec(&file)?.as_slice())
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let file: ModelFile = serde_json::from_slice(&read_bytes(path)?)?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::Config(format!(
            "model format version {} unsupported (expected {MODEL_FORMAT_VERSION})",
            file.format_version
        )));
    }
    Ok(file.model)
}

fn parse_opt<T: FromStr<Err = Error>>(value: &Option<String>) -> Result<Option<T>> {
    value.as_deref().map(T::from_str).transpose()
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let file: TrainConfigFile = match &args.config {
        Some(path) => serde_json::from_slice(&read_bytes(path)?)?,
        None => TrainConfigFile::default(),
    };

    // Precedence: flags, then config file, then built-in defaults.
    let image_path = args
        .image
        .or(file.image)
        .ok_or_else(|| Error::Config("an input image is required (--image or config)".into()))?;
    let out_path = args.out.ok_or_else(|| Error::Config("--out is required".into()))?;
    let history_path = args.history.unwrap_or_else(|| derive_history_path(&out_path));

    let activation_name = args.activation.or(file.activation);
    let omega = args.omega.or(file.omega).unwrap_or(Activation::DEFAULT_OMEGA);
    let sigma = args.sigma.or(file.sigma).unwrap_or(Activation::DEFAULT_SIGMA);
    let activation = match activation_name.as_deref() {
        None | Some("sine") => Activation::Sine { omega },
        Some("relu") => Activation::Relu,
        Some("gaussian") => Activation::Gaussian { sigma },
        Some(other) => {
            return Err(Error::Config(format!("unknown activation '{other}' (sine, relu, gaussian)")))
        }
    };
    let encoding = match args.encoding.or(file.encoding).as_deref() {
        None | Some("none") => Encoding::None,
        Some("positional") => {
            Encoding::Positional { frequencies: args.frequencies.or(file.frequencies).unwrap_or(10) }
        }
        Some(other) => return Err(Error::Config(format!("unknown encoding '{other}' (none, positional)"))),
    };
    let method = parse_opt::<QuantMethod>(&args.method)?
        .or(parse_opt::<QuantMethod>(&file.method)?)
        .unwrap_or(QuantMethod::Kmeans);
    let loss = parse_opt::<LossKind>(&args.loss)?
        .or(parse_opt::<LossKind>(&file.loss)?)
        .unwrap_or(LossKind::Mse);

    // Load the signal before creating any output file.
    let image = load_image(&image_path)?;
    let data = make_dataset(image)?;

    let arch = NetworkArch {
        hidden_layers: args.hidden_layers.or(file.hidden_layers).unwrap_or(1),
        hidden_width: args.width.or(file.width).unwrap_or(20),
        activation,
        input_dim: 2,
        output_dim: data.image.channels(),
        encoding,
    };
    let epochs = args.epochs.or(file.epochs).unwrap_or(1000);
    let interval = args.interval.or(file.interval).unwrap_or_else(|| {
        crate::sweep::default_repartition_interval(data.image.height(), data.image.width())
    });
    let defaults = AdamParams::default();
    let config = QatConfig {
        arch,
        method,
        bits: args.bits.or(file.bits).unwrap_or(8),
        epochs,
        repartition_interval: interval,
        delta_threshold: args.delta.or(file.delta),
        loss,
        seed: args.seed.or(file.seed).unwrap_or(0),
        optimizer: AdamParams {
            lr: args.lr.or(file.lr).unwrap_or(defaults.lr),
            beta1: args.beta1.or(file.beta1).unwrap_or(defaults.beta1),
            beta2: args.beta2.or(file.beta2).unwrap_or(defaults.beta2),
            weight_decay: args.weight_decay.or(file.weight_decay).unwrap_or(defaults.weight_decay),
            eps: defaults.eps,
        },
    };
    config.validate()?;
    ensure_writable(&out_path, args.force)?;
    ensure_writable(&history_path, args.force)?;

    let model = train(&config, &data)?;

    save_model(&model, &out_path)?;
    let mut history = Vec::new();
    write_history_csv(&model.history, &mut history).map_err(|e| Error::io(&history_path, e))?;
    write_bytes(&history_path, &history)?;

    let last = model.history.last().expect("at least one epoch");
    let best = model.best.as_ref().expect("trained models have a best epoch");
    println!(
        "trained {} epochs: final loss {}, final PSNR {:.4} dB, final TLQE {:.6e}",
        config.epochs, last.loss, last.psnr, last.tlqe
    );
    println!("best epoch {}: PSNR {:.4} dB", best.epoch, best.psnr);
    println!("model: {}", out_path.display());
    println!("history: {}", history_path.display());
    Ok(())
}

fn derive_history_path(out: &Path) -> PathBuf {
    let mut os = out.as_os_str().to_os_string();
    os.push(".history.csv");
    PathBuf::from(os)
}

/// Everything `eval` needs, from either source.
struct EvalSubject {
    arch: NetworkArch,
    weights: WeightSet,
    rate: codec::RateReport,
    recorded_psnr: Option<f64>,
}

fn load_subject(model: Option<&Path>, artifact: Option<&Path>) -> Result<EvalSubject> {
    match (model, artifact) {
        (Some(path), None) => {
            let model = load_model(path)?;
            let bytes = codec::encode(&model)?;
            Ok(EvalSubject {
                arch: model.arch,
                weights: model.quantized_weights(),
                rate: codec::measure_rate(&bytes)?,
                recorded_psnr: model.best.as_ref().map(|b| b.psnr),
            })
        }
        (None, Some(path)) => {
            let bytes = read_bytes(path)?;
            let rate = codec::measure_rate(&bytes)?;
            let (arch, weights, _) = codec::decode(&bytes)?;
            Ok(EvalSubject { arch, weights, rate, recorded_psnr: None })
        }
        _ => Err(Error::Config("pass exactly one of --model or --artifact".into())),
    }
}

#[derive(Serialize)]
struct MetricsReport {
    psnr: f64,
    ssim: f64,
    gradient_psnr: f64,
    raw_bits: u64,
    compressed_bytes: usize,
    bits_per_weight: f64,
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let subject = load_subject(args.model.as_deref(), args.artifact.as_deref())?;
    let image = load_image(&args.image)?;
    let data = make_dataset(image)?;
    if subject.arch.output_dim != data.image.channels() {
        return Err(Error::Shape(format!(
            "model has {} output channels but the signal has {}",
            subject.arch.output_dim,
            data.image.channels()
        )));
    }

    let preds = crate::net::forward(&subject.arch, &subject.weights, &data.coords)?;
    let rendered = outputs_to_image(&preds, data.image.height(), data.image.width())?;
    let report = MetricsReport {
        psnr: metrics::psnr(&rendered, &data.image)?,
        ssim: metrics::ssim(&rendered, &data.image)?,
        gradient_psnr: metrics::gradient_psnr(&rendered, &data.image)?,
        raw_bits: subject.rate.raw_bits,
        compressed_bytes: subject.rate.compressed_bytes,
        bits_per_weight: subject.rate.bits_per_weight_effective,
    };

    println!("psnr: {:.4} dB", report.psnr);
    println!("ssim: {:.6}", report.ssim);
    println!("gradient_psnr: {:.4} dB", report.gradient_psnr);
    println!("raw_bits: {}", report.raw_bits);
    println!("compressed_bytes: {}", report.compressed_bytes);
    println!("bits_per_weight: {:.4}", report.bits_per_weight);
    if let Some(recorded) = subject.recorded_psnr {
        println!("recorded_best_psnr: {recorded:.4} dB");
    }

    if let Some(json_path) = &args.json {
        ensure_writable(json_path, args.force)?;
        write_bytes(json_path, serde_json::to_vec_pretty(&report)?.as_slice())?;
    }
    if let Some(render_path) = &args.render {
        ensure_writable(render_path, args.force)?;
        rendered.save(render_path)?;
    }
    Ok(())
}

fn cmd_compress(args: CompressArgs) -> Result<()> {
    ensure_writable(&args.out, args.force)?;
    let model = load_model(&args.model)?;
    let bytes = codec::encode(&model)?;
    let rate = codec::measure_rate(&bytes)?;
    write_bytes(&args.out, &bytes)?;
    println!(
        "compressed {} -> {}: {} raw bits -> {} bytes ({:.4} bits/weight)",
        args.model.display(),
        args.out.display(),
        rate.raw_bits,
        rate.compressed_bytes,
        rate.bits_per_weight_effective
    );
    Ok(())
}

fn cmd_decompress(args: DecompressArgs) -> Result<()> {
    ensure_writable(&args.out, args.force)?;
    let bytes = read_bytes(&args.artifact)?;
    let (arch, weights, maps) = codec::decode(&bytes)?;
    let (method, bits) = (maps[0].method(), maps[0].bits());
    let state = LayerQuantState::from_maps(maps, &weights)?;
    let model = TrainedModel {
        arch,
        method,
        bits,
        loss: LossKind::Mse,
        weights: weights.clone(),
        state,
        best: None,
        history: Vec::new(),
    };
    save_model(&model, &args.out)?;
    println!("decoded {} -> {}", args.artifact.display(), args.out.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let spec: SweepSpec = serde_json::from_slice(&read_bytes(&args.spec)?)?;
    ensure_writable(&args.out, args.force)?;
    let records = run_sweep(&spec)?;
    let mut csv = Vec::new();
    write_csv(&records, &mut csv).map_err(|e| Error::io(&args.out, e))?;
    write_bytes(&args.out, &csv)?;
    println!("{} records -> {}", records.len(), args.out.display());

    if let Some(budget) = args.budget.or(spec.budget_bytes) {
        let front = pareto_filter(&records, budget);
        if front.is_empty() {
            eprintln!("warning: no sweep record fits the {budget}-byte budget");
        } else {
            println!("pareto front under {budget} bytes:");
            for r in &front {
                println!(
                    "  h={} w={} k={} {} seed={}: {:.2} dB at {} bytes",
                    r.point.hidden_layers,
                    r.point.width,
                    r.point.bits,
                    r.point.method,
                    r.point.seed,
                    r.best_psnr,
                    r.compressed_bytes
                );
            }
        }
    }
    Ok(())
}

fn cmd_info(args: InfoArgs) -> Result<()> {
    match (&args.model, &args.artifact) {
        (Some(path), None) => {
            let model = load_model(path)?;
            println!("model file: {}", path.display());
            print_arch(&model.arch);
            println!("method: {}", model.method);
            println!("bits_per_weight: {}", model.bits);
            println!("epochs_recorded: {}", model.history.len());
            println!("repartitions: {}", model.repartition_count());
            match &model.best {
                Some(best) => println!("best: epoch {} at {:.4} dB", best.epoch, best.psnr),
                None => println!("best: none (decoded artifact)"),
            }
        }
        (None, Some(path)) => {
            let bytes = read_bytes(path)?;
            let artifact = codec::Artifact::from_bytes(&bytes)?;
            let rate = codec::measure_rate(&bytes)?;
            println!("artifact: {}", path.display());
            print_arch(&artifact.arch);
            println!("method: {}", artifact.method);
            println!("bits_per_weight: {}", artifact.bits);
            println!(
                "levels_per_layer: {}",
                artifact.codebooks.iter().map(|c| c.len().to_string()).collect::<Vec<_>>().join(",")
            );
            println!("raw_bits: {}", rate.raw_bits);
            println!("compressed_bytes: {}", rate.compressed_bytes);
            println!("effective_bits_per_weight: {:.4}", rate.bits_per_weight_effective);
        }
        _ => return Err(Error::Config("pass exactly one of --model or --artifact".into())),
    }
    Ok(())
}

fn print_arch(arch: &NetworkArch) {
    let activation = match arch.activation {
        Activation::Sine { omega } => format!("sine(omega={omega})"),
        Activation::Relu => "relu".into(),
        Activation::Gaussian { sigma } => format!("gaussian(sigma={sigma})"),
    };
    let encoding = match arch.encoding {
        Encoding::None => "none".into(),
        Encoding::Positional { frequencies } => format!("positional({frequencies})"),
    };
    println!(
        "arch: {} hidden layers x {} units, activation {activation}, encoding {encoding}, {} -> {}",
        arch.hidden_layers, arch.hidden_width, arch.input_dim, arch.output_dim
    );
}

// Scratch probe for picking acceptance-scale training budgets. Not shipped.

use inrq::data::{make_dataset, ImageBuffer};
use inrq::net::{Activation, AdamParams, Encoding, LossKind, NetworkArch};
use inrq::qat::{train, QatConfig};
use inrq::quant::QuantMethod;

fn test_image(n: usize) -> ImageBuffer {
    let mut data = Vec::with_capacity(n * n * 3);
    for row in 0..n {
        for col in 0..n {
            let x = col as f64 / (n - 1) as f64;
            let y = row as f64 / (n - 1) as f64;
            let blob1 = 0.35 * (-((x - 0.30) * (x - 0.30) + (y - 0.35) * (y - 0.35)) / 0.03).exp();
            let blob2 = 0.30 * (-((x - 0.72) * (x - 0.72) + (y - 0.68) * (y - 0.68)) / 0.05).exp();
            let band = 0.15 * (8.0 * (x + y - 1.1)).tanh();
            let pi = std::f64::consts::PI;
            let r = 0.45 + 0.25 * (2.1 * pi * x + 0.3).sin() * (1.3 * pi * y + 1.0).cos() + blob1 - band;
            let g = 0.50 + 0.30 * (1.7 * pi * x - 0.4).sin() * (2.3 * pi * y + 0.2).cos() + 0.8 * blob2
                - 0.5 * blob1;
            let b = 0.40 + 0.20 * (1.1 * pi * x + 0.8).cos() * (1.9 * pi * y - 0.6).sin() + band;
            data.push(r.clamp(0.0, 1.0));
            data.push(g.clamp(0.0, 1.0));
            data.push(b.clamp(0.0, 1.0));
        }
    }
    ImageBuffer::new(n, n, 3, data).unwrap()
}

fn run(
    label: &str,
    hidden: usize,
    width: usize,
    method: QuantMethod,
    bits: u8,
    epochs: usize,
    interval: usize,
    seed: u64,
) {
    let img = test_image(32);
    let data = make_dataset(img).unwrap();
    let config = QatConfig {
        arch: NetworkArch {
            hidden_layers: hidden,
            hidden_width: width,
            activation: Activation::sine(),
            input_dim: 2,
            output_dim: 3,
            encoding: Encoding::None,
        },
        method,
        bits,
        epochs,
        repartition_interval: interval,
        delta_threshold: None,
        loss: LossKind::Mse,
        seed,
        optimizer: AdamParams::default(),
    };
    let t0 = std::time::Instant::now();
    match train(&config, &data) {
        Ok(model) => {
            let best = model.best.as_ref().unwrap();
            let bytes = inrq::codec::encode(&model).unwrap();
            println!(
                "{label}: seed {seed} best {:.2} dB @ epoch {} | final tlqe {:.3e} | {} B | {:.1}s",
                best.psnr,
                best.epoch,
                model.history.last().unwrap().tlqe,
                bytes.len(),
                t0.elapsed().as_secs_f64()
            );
        }
        Err(e) => println!("{label}: seed {seed} FAILED: {e}"),
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let what = args.get(1).map(String::as_str).unwrap_or("c7");
    match what {
        "c7" => {
            for seed in [0, 1, 2] {
                run("kmeans k3", 1, 20, QuantMethod::Kmeans, 3, 2000, 1, seed);
                run("explicit k3", 1, 20, QuantMethod::ExplicitUnit, 3, 2000, 1, seed);
            }
            for seed in [0, 1, 2] {
                run("kmeans k8", 1, 20, QuantMethod::Kmeans, 8, 2000, 1, seed);
                run("minmax k8", 1, 20, QuantMethod::Minmax, 8, 2000, 1, seed);
            }
        }
        "c8a" => {
            let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1000);
            run("1bit 3x256", 3, 256, QuantMethod::Kmeans, 1, epochs, 1, 0);
        }
        "c8b" => {
            let epochs: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(3000);
            run("5bit 2x20", 2, 20, QuantMethod::Kmeans, 5, epochs, 1, 0);
        }
        "c9" => {
            for seed in [0, 1, 2] {
                run("repart k5", 1, 18, QuantMethod::Kmeans, 5, 1500, 1, seed);
                run("fixed   k5", 1, 18, QuantMethod::Kmeans, 5, 1500, usize::MAX, seed);
            }
        }
        "full" => {
            run("full-prec-ish k16?", 1, 20, QuantMethod::Minmax, 16, 2000, 1, 0);
        }
        other => eprintln!("unknown probe {other}"),
    }
}

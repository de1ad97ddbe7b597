use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::net::LossKind;
use crate::qat::{BestSnapshot, TrainedModel};
use crate::quant::LayerQuantState;

fn arch(hidden: usize, width: usize, input_dim: usize, output_dim: usize) -> NetworkArch {
    NetworkArch {
        hidden_layers: hidden,
        hidden_width: width,
        activation: Activation::sine(),
        input_dim,
        output_dim,
        encoding: Encoding::None,
    }
}

/// A synthetic trained model with maps built from its random weights.
fn random_model(rng: &mut ChaCha8Rng, arch: NetworkArch, method: QuantMethod, bits: u8) -> TrainedModel {
    let weights = WeightSet::init(&arch, rng);
    let state = LayerQuantState::build(method, bits, &weights).unwrap();
    let quantized = state.apply(&weights);
    TrainedModel {
        arch,
        method,
        bits,
        loss: LossKind::Mse,
        weights,
        state: state.clone(),
        best: Some(BestSnapshot { epoch: 1, psnr: 30.0, quantized, state }),
        history: Vec::new(),
    }
}

#[test]
fn one_bit_all_ones_packs_into_a_single_nibble_byte() {
    // 2x2 single-layer model, levels {-1, 1}, all weights 1: the index
    // section is exactly one 0x0F byte.
    let artifact = Artifact {
        arch: arch(0, 1, 2, 2),
        method: QuantMethod::ExplicitUnit,
        bits: 1,
        codebooks: vec![vec![-1.0, 1.0]],
        indices: vec![vec![1, 1, 1, 1]],
        biases: vec![vec![0.0, 0.0]],
    };
    let payload = artifact.payload_bytes().unwrap();
    let header = artifact.header_len();
    assert_eq!(header, 40);
    let index_offset = header + 2 * 4;
    assert_eq!(payload[index_offset], 0x0F);
    assert_eq!(payload.len(), index_offset + 1 + 2 * 4);
}

#[test]
fn raw_size_follows_the_accounting_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for (hidden, width, bits) in [(0usize, 1usize, 1u8), (1, 5, 3), (3, 8, 5), (2, 4, 8)] {
        let model = random_model(&mut rng, arch(hidden, width, 2, 3), QuantMethod::Kmeans, bits);
        let artifact = build_artifact(&model).unwrap();

        // Independent recomputation from the architecture alone.
        let dims = model.arch.layer_dims();
        let n_layers = dims.len() as u64;
        let header_bits = 8 * (36 + 4 * n_layers);
        let weight_bits: u64 = dims.iter().map(|(o, i)| bits as u64 * (o * i) as u64).sum();
        let level_bits: u64 = artifact.codebooks.iter().map(|cb| 32 * cb.len() as u64).sum();
        let bias_bits: u64 = dims.iter().map(|(o, _)| 32 * *o as u64).sum();
        assert_eq!(artifact.raw_bits(), header_bits + weight_bits + level_bits + bias_bits);

        // The physical payload is the same identity with the index section
        // rounded up to whole bytes.
        let payload = artifact.payload_bytes().unwrap();
        let expected_len = (header_bits + level_bits + bias_bits) as usize / 8
            + (weight_bits as usize).div_ceil(8);
        assert_eq!(payload.len(), expected_len);
    }
}

#[test]
fn roundtrip_is_bit_exact_with_identical_forward_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let methods = QuantMethod::ALL;
    for trial in 0..24 {
        let hidden = trial % 4;
        let a = arch(hidden, 3 + trial % 5, 2, 1 + trial % 3);
        let method = methods[trial % methods.len()];
        let bits = [1u8, 2, 3, 5, 8][trial % 5];
        let model = random_model(&mut rng, a, method, bits);

        let bytes = encode(&model).unwrap();
        assert_eq!(bytes, encode(&model).unwrap(), "encoding must be deterministic");

        let (dec_arch, dec_weights, dec_maps) = decode(&bytes).unwrap();
        assert_eq!(dec_arch, model.arch);
        assert_eq!(dec_maps.len(), model.arch.num_layers());

        // Decoded weights equal the encoder's quantized weights at f32.
        let reference = model.quantized_weights().to_f32_precision();
        assert_eq!(dec_weights, reference);

        // And forward passes agree bitwise at that precision.
        let coords = crate::matrix::Matrix::from_vec(
            6,
            2,
            (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
        let out_dec = crate::net::forward(&dec_arch, &dec_weights, &coords).unwrap();
        let out_ref = crate::net::forward(&model.arch, &reference, &coords).unwrap();
        assert_eq!(out_dec.data(), out_ref.data());
    }
}

#[test]
fn zero_hidden_layer_model_roundtrips() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let model = random_model(&mut rng, arch(0, 1, 2, 3), QuantMethod::Minmax, 4);
    let bytes = encode(&model).unwrap();
    let (dec_arch, dec_weights, _) = decode(&bytes).unwrap();
    assert_eq!(dec_arch.num_layers(), 1);
    assert_eq!(dec_weights, model.quantized_weights().to_f32_precision());
}

#[test]
fn corrupting_any_byte_is_detected() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let model = random_model(&mut rng, arch(1, 6, 2, 3), QuantMethod::Kmeans, 3);
    let bytes = encode(&model).unwrap();
    let positions = [0, 4, 6, 10, bytes.len() / 2, bytes.len() - 1];
    for &pos in &positions {
        let mut corrupted = bytes.clone();
        corrupted[pos] ^= 0x40;
        match decode(&corrupted) {
            Err(Error::Decode { .. }) => {}
            Err(other) => panic!("byte {pos}: expected decode error, got {other:?}"),
            Ok(_) => panic!("byte {pos}: corruption went unnoticed"),
        }
    }
}

#[test]
fn truncated_containers_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let model = random_model(&mut rng, arch(1, 4, 2, 1), QuantMethod::Minmax, 2);
    let bytes = encode(&model).unwrap();
    for len in [0, 3, 9, bytes.len() - 1] {
        assert!(matches!(decode(&bytes[..len]), Err(Error::Decode { .. })), "len {len}");
    }
}

#[test]
fn weight_off_the_level_set_is_an_encoding_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let mut model = random_model(&mut rng, arch(1, 4, 2, 1), QuantMethod::Minmax, 2);
    let best = model.best.as_mut().unwrap();
    best.quantized.layers[0].weights.set(0, 0, 0.123456789);
    assert!(matches!(encode(&model), Err(Error::Inconsistent(_))));
}

#[test]
fn incompressible_indices_do_not_shrink() {
    // Uniform random payload content approaches the no-free-lunch bound.
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let a = arch(2, 32, 2, 3);
    let dims = a.layer_dims();
    let bits = 3u8;
    let mut random_codebook = |n: usize| -> Vec<f32> {
        let mut cb: Vec<f32> = (0..n).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        cb.sort_by(f32::total_cmp);
        cb
    };
    let codebooks: Vec<Vec<f32>> = dims.iter().map(|_| random_codebook(8)).collect();
    let artifact = Artifact {
        arch: a,
        method: QuantMethod::Kmeans,
        bits,
        codebooks,
        indices: dims
            .iter()
            .map(|(o, i)| (0..o * i).map(|_| rng.gen_range(0u32..8)).collect())
            .collect(),
        biases: dims.iter().map(|(o, _)| (0..*o).map(|_| rng.gen_range(-1.0f32..1.0)).collect()).collect(),
    };
    let bytes = artifact.to_bytes().unwrap();
    let rate = measure_rate(&bytes).unwrap();
    assert!(
        rate.compressed_bytes as f64 >= 0.9 * rate.raw_bits as f64 / 8.0,
        "random indices compressed from {} bits to {} bytes",
        rate.raw_bits,
        rate.compressed_bytes
    );
}

#[test]
fn constant_indices_compress_far_below_raw() {
    let a = arch(2, 32, 2, 3);
    let dims = a.layer_dims();
    let artifact = Artifact {
        arch: a,
        method: QuantMethod::Kmeans,
        bits: 8,
        codebooks: dims.iter().map(|_| (0..256).map(|i| i as f32 * 0.01).collect()).collect(),
        indices: dims.iter().map(|(o, i)| vec![42u32; o * i]).collect(),
        biases: dims.iter().map(|(o, _)| vec![0.0f32; *o]).collect(),
    };
    let bytes = artifact.to_bytes().unwrap();
    let rate = measure_rate(&bytes).unwrap();
    assert!(
        (rate.compressed_bytes as f64) < rate.raw_bits as f64 / 8.0 / 4.0,
        "constant indices should compress at least 4x: {} bytes vs {} raw bits",
        rate.compressed_bytes,
        rate.raw_bits
    );
}

#[test]
fn effective_bits_per_weight_is_k_plus_overhead() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let a = arch(4, 64, 2, 3);
    let dims = a.layer_dims();
    let bits = 3u8;
    let total_weights: usize = dims.iter().map(|(o, i)| o * i).sum();
    let artifact = Artifact {
        arch: a,
        method: QuantMethod::Kmeans,
        bits,
        codebooks: dims.iter().map(|_| (0..8).map(|i| i as f32 * 0.07 - 0.2).collect()).collect(),
        indices: dims
            .iter()
            .map(|(o, i)| (0..o * i).map(|_| rng.gen_range(0u32..8)).collect())
            .collect(),
        biases: dims.iter().map(|(o, _)| (0..*o).map(|_| rng.gen_range(-0.5..0.5) as f32).collect()).collect(),
    };
    let bytes = artifact.to_bytes().unwrap();
    let rate = measure_rate(&bytes).unwrap();

    let overhead_bits = rate.raw_bits as f64 - (bits as usize * total_weights) as f64;
    let slack_bits = 8.0 * 1024.0; // entropy-coder framing
    assert!(rate.bits_per_weight_effective >= bits as f64);
    assert!(
        rate.bits_per_weight_effective <= bits as f64 + (overhead_bits + slack_bits) / total_weights as f64,
        "bpw {} too far above k={bits}",
        rate.bits_per_weight_effective
    );

    // Comparable parameter count to the paper-scale containers: stays small.
    assert!(rate.compressed_bytes < 20 * 1024, "container is {} bytes", rate.compressed_bytes);
}

//! Serialization of quantized models into entropy-coded containers, and exact
//! decompression.
//!
//! # Container layout
//!
//! Outer wrapper (little-endian):
//!
//! ```text
//! magic  "INRQ"                      4 bytes
//! format version (u16)               2 bytes
//! crc32 of the compressed blob (u32) 4 bytes
//! compressed blob                    BZIP2 stream of the payload below
//! ```
//!
//! Payload, before compression:
//!
//! ```text
//! header:
//!   hidden_layers, hidden_width, input_dim, output_dim   4 x u32
//!   activation tag (u8: 0 sine, 1 relu, 2 gaussian) + parameter (f64)
//!   encoding tag (u8: 0 none, 1 positional) + frequencies (u32)
//!   method tag (u8: 0 explicit, 1 distributional, 2 minmax, 3 kmeans)
//!   bits-per-weight k (u8)
//!   layer count (u32), then one level count (u32) per layer
//! codebooks: per layer, level_count x f32
//! indices:   one contiguous bitstream, k bits per weight, layers in order,
//!            weights row-major, LSB-first within bytes, zero-padded to a
//!            whole byte at the end of the section
//! biases:    per layer, out_dim x f32
//! ```
//!
//! Weight-matrix shapes are derived from the architecture, so index counts
//! are implicit. The raw (pre-entropy) size in bits is exactly
//! `8 * header_len + sum_l k * |W_l| + 32 * sum_l |levels_l| + 32 * sum_l |b_l|`.

mod bitpack;

pub use bitpack::{BitReader, BitWriter};

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::net::{Activation, Encoding, LayerParams, NetworkArch, WeightSet};
use crate::qat::TrainedModel;
use crate::quant::{QuantMethod, QuantizationMap};

pub const MAGIC: [u8; 4] = *b"INRQ";
pub const FORMAT_VERSION: u16 = 1;

/// Parsed form of a container: header fields plus per-layer codebooks,
/// index streams, and biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub arch: NetworkArch,
    pub method: QuantMethod,
    pub bits: u8,
    pub codebooks: Vec<Vec<f32>>,
    pub indices: Vec<Vec<u32>>,
    pub biases: Vec<Vec<f32>>,
}

/// Size accounting for one artifact.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RateReport {
    /// Pre-entropy size per the accounting identity in the module docs.
    pub raw_bits: u64,
    /// Full container length on disk.
    pub compressed_bytes: usize,
    /// `8 * compressed_bytes / total weight count`.
    pub bits_per_weight_effective: f64,
}

/// Builds the in-memory artifact for a model's best-epoch quantized weights.
///
/// Codebook levels are stored at `f32`; quantized weights must lie exactly on
/// their map's level set or encoding fails with an internal-consistency error.
pub fn build_artifact(model: &TrainedModel) -> Result<Artifact> {
    let quantized = model.quantized_weights();
    let state = model.quantization_state();
    quantized.matches_arch(&model.arch)?;

    let mut codebooks = Vec::with_capacity(quantized.num_layers());
    let mut indices = Vec::with_capacity(quantized.num_layers());
    let mut biases = Vec::with_capacity(quantized.num_layers());
    for (l, (layer, map)) in quantized.layers.iter().zip(state.maps()).enumerate() {
        // Collapse levels that collide after f32 rounding so the stored
        // codebook stays strictly increasing.
        let mut codebook: Vec<f32> = Vec::with_capacity(map.len());
        let mut remap: Vec<u32> = Vec::with_capacity(map.len());
        for &lv in map.levels() {
            let f = lv as f32;
            if codebook.last() != Some(&f) {
                codebook.push(f);
            }
            remap.push((codebook.len() - 1) as u32);
        }
        let mut layer_indices = Vec::with_capacity(layer.weights.len());
        for &w in layer.weights.data() {
            let idx = map.exact_index(w).ok_or_else(|| {
                Error::Inconsistent(format!("layer {l}: weight {w} is not on the quantization level set"))
            })?;
            layer_indices.push(remap[idx]);
        }
        codebooks.push(codebook);
        indices.push(layer_indices);
        biases.push(layer.biases.iter().map(|&b| b as f32).collect());
    }
    Ok(Artifact { arch: model.arch, method: model.method, bits: model.bits, codebooks, indices, biases })
}

/// Serializes a trained model into container bytes.
pub fn encode(model: &TrainedModel) -> Result<Vec<u8>> {
    build_artifact(model)?.to_bytes()
}

/// Parses and reconstructs a container: the architecture, the quantized
/// weights (with biases), and the per-layer quantization maps.
pub fn decode(bytes: &[u8]) -> Result<(NetworkArch, WeightSet, Vec<QuantizationMap>)> {
    Artifact::from_bytes(bytes)?.reconstruct()
}

/// Size report for a serialized container.
pub fn measure_rate(bytes: &[u8]) -> Result<RateReport> {
    let artifact = Artifact::from_bytes(bytes)?;
    let total_weights = artifact.arch.num_weights() as f64;
    Ok(RateReport {
        raw_bits: artifact.raw_bits(),
        compressed_bytes: bytes.len(),
        bits_per_weight_effective: 8.0 * bytes.len() as f64 / total_weights,
    })
}

impl Artifact {
    /// Serialized payload header length in bytes.
    pub fn header_len(&self) -> usize {
        36 + 4 * self.arch.num_layers()
    }

    /// Pre-entropy size in bits per the accounting identity.
    pub fn raw_bits(&self) -> u64 {
        let index_bits: u64 =
            self.indices.iter().map(|ix| self.bits as u64 * ix.len() as u64).sum();
        let codebook_bits: u64 = self.codebooks.iter().map(|cb| 32 * cb.len() as u64).sum();
        let bias_bits: u64 = self.biases.iter().map(|b| 32 * b.len() as u64).sum();
        8 * self.header_len() as u64 + index_bits + codebook_bits + bias_bits
    }

    /// Serializes and entropy-codes the container.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.arch.validate()?;
        let payload = self.payload_bytes()?;
        let mut enc = bzip2::write::BzEncoder::new(Vec::new(), bzip2::Compression::best());
        enc.write_all(&payload).map_err(|e| Error::Inconsistent(format!("entropy stage: {e}")))?;
        let blob = enc.finish().map_err(|e| Error::Inconsistent(format!("entropy stage: {e}")))?;

        let mut out = Vec::with_capacity(10 + blob.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&crc32fast::hash(&blob).to_le_bytes());
        out.extend_from_slice(&blob);
        Ok(out)
    }

    fn payload_bytes(&self) -> Result<Vec<u8>> {
        let dims = self.arch.layer_dims();
        if dims.len() != self.codebooks.len() || dims.len() != self.indices.len() || dims.len() != self.biases.len()
        {
            return Err(Error::Inconsistent("artifact layer counts disagree with architecture".into()));
        }
        let mut buf = Vec::new();
        buf.extend_from_slice(&(self.arch.hidden_layers as u32).to_le_bytes());
        buf.extend_from_slice(&(self.arch.hidden_width as u32).to_le_bytes());
        buf.extend_from_slice(&(self.arch.input_dim as u32).to_le_bytes());
        buf.extend_from_slice(&(self.arch.output_dim as u32).to_le_bytes());
        let (act_tag, act_param): (u8, f64) = match self.arch.activation {
            Activation::Sine { omega } => (0, omega),
            Activation::Relu => (1, 0.0),
            Activation::Gaussian { sigma } => (2, sigma),
        };
        buf.push(act_tag);
        buf.extend_from_slice(&act_param.to_le_bytes());
        let (enc_tag, freqs): (u8, u32) = match self.arch.encoding {
            Encoding::None => (0, 0),
            Encoding::Positional { frequencies } => (1, frequencies as u32),
        };
        buf.push(enc_tag);
        buf.extend_from_slice(&freqs.to_le_bytes());
        buf.push(method_tag(self.method));
        buf.push(self.bits);
        buf.extend_from_slice(&(dims.len() as u32).to_le_bytes());
        for cb in &self.codebooks {
            buf.extend_from_slice(&(cb.len() as u32).to_le_bytes());
        }
        debug_assert_eq!(buf.len(), self.header_len());

        for cb in &self.codebooks {
            for &lv in cb {
                buf.extend_from_slice(&lv.to_le_bytes());
            }
        }

        let mut writer = BitWriter::new();
        for (l, ((out_dim, in_dim), layer_indices)) in dims.iter().zip(&self.indices).enumerate() {
            if layer_indices.len() != out_dim * in_dim {
                return Err(Error::Inconsistent(format!(
                    "layer {l}: {} indices for a {out_dim}x{in_dim} matrix",
                    layer_indices.len()
                )));
            }
            let levels = self.codebooks[l].len() as u32;
            for &idx in layer_indices {
                if idx >= levels {
                    return Err(Error::Inconsistent(format!("layer {l}: index {idx} >= {levels} levels")));
                }
                writer.write(idx, self.bits);
            }
        }
        buf.extend_from_slice(&writer.into_bytes());

        for ((out_dim, _), bias) in dims.iter().zip(&self.biases) {
            if bias.len() != *out_dim {
                return Err(Error::Inconsistent("bias length disagrees with architecture".into()));
            }
            for &b in bias {
                buf.extend_from_slice(&b.to_le_bytes());
            }
        }
        Ok(buf)
    }

    /// Parses a container, verifying magic, version, and checksum.
    pub fn from_bytes(bytes: &[u8]) -> Result<Artifact> {
        if bytes.len() < 10 {
            return Err(Error::decode(bytes.len(), "container shorter than its fixed header"));
        }
        if bytes[0..4] != MAGIC {
            return Err(Error::decode(0, "bad magic, not an inrq artifact"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::decode(4, format!("unsupported format version {version}")));
        }
        let stored_crc = u32::from_le_bytes([bytes[6], bytes[7], bytes[8], bytes[9]]);
        let blob = &bytes[10..];
        if crc32fast::hash(blob) != stored_crc {
            return Err(Error::decode(6, "checksum mismatch, container is corrupted"));
        }
        let mut payload = Vec::new();
        bzip2::read::BzDecoder::new(blob)
            .read_to_end(&mut payload)
            .map_err(|e| Error::decode(10, format!("entropy stream: {e}")))?;
        Self::from_payload(&payload)
    }

    fn from_payload(payload: &[u8]) -> Result<Artifact> {
        let mut cur = Cursor { bytes: payload, pos: 0 };
        let hidden_layers = cur.u32()? as usize;
        let hidden_width = cur.u32()? as usize;
        let input_dim = cur.u32()? as usize;
        let output_dim = cur.u32()? as usize;
        let act_tag = cur.u8()?;
        let act_param = cur.f64()?;
        let activation = match act_tag {
            0 => Activation::Sine { omega: act_param },
            1 => Activation::Relu,
            2 => Activation::Gaussian { sigma: act_param },
            t => return Err(Error::decode(cur.pos - 9, format!("unknown activation tag {t}"))),
        };
        let enc_tag = cur.u8()?;
        let freqs = cur.u32()? as usize;
        let encoding = match enc_tag {
            0 => Encoding::None,
            1 => Encoding::Positional { frequencies: freqs },
            t => return Err(Error::decode(cur.pos - 5, format!("unknown encoding tag {t}"))),
        };
        let method_byte = cur.u8()?;
        let method = match method_byte {
            0 => QuantMethod::ExplicitUnit,
            1 => QuantMethod::Distributional,
            2 => QuantMethod::Minmax,
            3 => QuantMethod::Kmeans,
            t => return Err(Error::decode(cur.pos - 1, format!("unknown method tag {t}"))),
        };
        let bits = cur.u8()?;
        if bits == 0 || bits > crate::quant::MAX_BITS {
            return Err(Error::decode(cur.pos - 1, format!("bits-per-weight {bits} out of range")));
        }

        let arch = NetworkArch { hidden_layers, hidden_width, activation, input_dim, output_dim, encoding };
        arch.validate().map_err(|e| Error::decode(0, format!("invalid architecture: {e}")))?;

        let n_layers = cur.u32()? as usize;
        if n_layers != arch.num_layers() {
            return Err(Error::decode(
                cur.pos - 4,
                format!("layer count {n_layers} disagrees with architecture ({})", arch.num_layers()),
            ));
        }
        let max_levels = 1usize << bits;
        let mut level_counts = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let c = cur.u32()? as usize;
            if c == 0 || c > max_levels {
                return Err(Error::decode(cur.pos - 4, format!("level count {c} out of range for k={bits}")));
            }
            level_counts.push(c);
        }

        let mut codebooks = Vec::with_capacity(n_layers);
        for (l, &count) in level_counts.iter().enumerate() {
            let mut cb = Vec::with_capacity(count);
            for _ in 0..count {
                let v = cur.f32()?;
                if !v.is_finite() {
                    return Err(Error::decode(cur.pos - 4, format!("layer {l}: non-finite level")));
                }
                cb.push(v);
            }
            if cb.windows(2).any(|p| p[0] >= p[1]) {
                return Err(Error::decode(cur.pos, format!("layer {l}: codebook not strictly increasing")));
            }
            codebooks.push(cb);
        }

        let dims = arch.layer_dims();
        let total_weights: usize = dims.iter().map(|(o, i)| o * i).sum();
        let index_bytes = (total_weights * bits as usize).div_ceil(8);
        let index_start = cur.pos;
        let index_slice = cur.take(index_bytes)?;
        let mut reader = BitReader::new(index_slice);
        let mut indices = Vec::with_capacity(n_layers);
        for (l, (out_dim, in_dim)) in dims.iter().enumerate() {
            let mut layer_indices = Vec::with_capacity(out_dim * in_dim);
            for _ in 0..out_dim * in_dim {
                let idx = reader
                    .read(bits)
                    .ok_or_else(|| Error::decode(index_start, "index stream truncated"))?;
                if idx as usize >= level_counts[l] {
                    return Err(Error::decode(
                        index_start,
                        format!("layer {l}: index {idx} out of range (<{})", level_counts[l]),
                    ));
                }
                layer_indices.push(idx);
            }
            indices.push(layer_indices);
        }

        let mut biases = Vec::with_capacity(n_layers);
        for (l, (out_dim, _)) in dims.iter().enumerate() {
            let mut b = Vec::with_capacity(*out_dim);
            for _ in 0..*out_dim {
                let v = cur.f32()?;
                if !v.is_finite() {
                    return Err(Error::decode(cur.pos - 4, format!("layer {l}: non-finite bias")));
                }
                b.push(v);
            }
            biases.push(b);
        }
        if cur.pos != payload.len() {
            return Err(Error::decode(cur.pos, "trailing bytes after payload"));
        }
        Ok(Artifact { arch, method, bits, codebooks, indices, biases })
    }

    /// Materializes the quantized weights (as `f64` copies of the stored
    /// `f32` values) and the per-layer maps.
    pub fn reconstruct(&self) -> Result<(NetworkArch, WeightSet, Vec<QuantizationMap>)> {
        let dims = self.arch.layer_dims();
        let mut layers = Vec::with_capacity(dims.len());
        let mut maps = Vec::with_capacity(dims.len());
        for (l, (out_dim, in_dim)) in dims.iter().enumerate() {
            let levels: Vec<f64> = self.codebooks[l].iter().map(|&v| v as f64).collect();
            let data: Vec<f64> = self.indices[l].iter().map(|&ix| levels[ix as usize]).collect();
            layers.push(LayerParams {
                weights: Matrix::from_vec(*out_dim, *in_dim, data),
                biases: self.biases[l].iter().map(|&b| b as f64).collect(),
            });
            maps.push(QuantizationMap::new(levels, self.method, self.bits)?);
        }
        Ok((self.arch, WeightSet { layers }, maps))
    }
}

fn method_tag(method: QuantMethod) -> u8 {
    match method {
        QuantMethod::ExplicitUnit => 0,
        QuantMethod::Distributional => 1,
        QuantMethod::Minmax => 2,
        QuantMethod::Kmeans => 3,
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::decode(self.pos, "unexpected end of payload"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests;

//! Batched forward and reverse passes.
//!
//! Batches are split into fixed-size row chunks processed in parallel; chunk
//! results are reduced sequentially in chunk order, so outputs are bitwise
//! identical for any worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::net::{encode_batch, Encoding, LossKind, NetworkArch, WeightSet};

/// Rows per parallel work unit. Fixed so that chunk boundaries (and therefore
/// floating-point reduction order) never depend on the thread count.
const BATCH_CHUNK: usize = 256;

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    let quads = a.len() / 4;
    for q in 0..quads {
        let i = 4 * q;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * quads..a.len() {
        tail += a[i] * b[i];
    }
    ((s0 + s1) + (s2 + s3)) + tail
}

#[inline]
fn axpy(acc: &mut [f64], c: f64, x: &[f64]) {
    debug_assert_eq!(acc.len(), x.len());
    for (a, &v) in acc.iter_mut().zip(x) {
        *a += c * v;
    }
}

fn check_inputs(arch: &NetworkArch, weights: &WeightSet, coords: &Matrix) -> Result<()> {
    arch.validate()?;
    weights.matches_arch(arch)?;
    if coords.cols() != arch.input_dim {
        return Err(Error::Shape(format!(
            "coordinate batch has {} columns, architecture expects input_dim {}",
            coords.cols(),
            arch.input_dim
        )));
    }
    Ok(())
}

fn encoded_input(arch: &NetworkArch, coords: &Matrix) -> Matrix {
    match arch.encoding {
        Encoding::None => coords.clone(),
        Encoding::Positional { frequencies } => encode_batch(coords, frequencies),
    }
}

fn chunk_ranges(rows: usize) -> Vec<(usize, usize)> {
    (0..rows.div_ceil(BATCH_CHUNK))
        .map(|c| (c * BATCH_CHUNK, ((c + 1) * BATCH_CHUNK).min(rows)))
        .collect()
}

/// Evaluates the network on a coordinate batch, one output row per input row.
pub fn forward(arch: &NetworkArch, weights: &WeightSet, coords: &Matrix) -> Result<Matrix> {
    check_inputs(arch, weights, coords)?;
    let input = encoded_input(arch, coords);
    let n = input.rows();
    let out_dim = arch.output_dim;
    let mut output = Matrix::zeros(n, out_dim);

    let ranges = chunk_ranges(n);
    let chunks: Vec<Vec<f64>> = ranges
        .par_iter()
        .map(|&(lo, hi)| {
            let mut out = vec![0.0; (hi - lo) * out_dim];
            let mut a = Vec::new();
            let mut z = Vec::new();
            for r in lo..hi {
                forward_sample(arch, weights, input.row(r), &mut a, &mut z);
                out[(r - lo) * out_dim..(r - lo + 1) * out_dim].copy_from_slice(&a);
            }
            out
        })
        .collect();
    for (&(lo, hi), chunk) in ranges.iter().zip(&chunks) {
        output.data_mut()[lo * out_dim..hi * out_dim].copy_from_slice(&chunk[..(hi - lo) * out_dim]);
    }
    Ok(output)
}

/// One sample through all layers; `a` ends up holding the output row.
fn forward_sample(arch: &NetworkArch, weights: &WeightSet, input: &[f64], a: &mut Vec<f64>, z: &mut Vec<f64>) {
    let last = weights.layers.len() - 1;
    a.clear();
    a.extend_from_slice(input);
    for (l, layer) in weights.layers.iter().enumerate() {
        let out_dim = layer.weights.rows();
        z.clear();
        z.resize(out_dim, 0.0);
        for o in 0..out_dim {
            z[o] = layer.biases[o] + dot(layer.weights.row(o), a);
        }
        a.clear();
        if l == last {
            a.extend_from_slice(z);
        } else {
            a.extend(z.iter().map(|&v| arch.activation.apply(v)));
        }
    }
}

struct ChunkGrad {
    grads: WeightSet,
    sq_sum: f64,
}

/// Loss and parameter gradients for a full batch.
///
/// Returns the reported loss value (see [`LossKind`]) and the gradient of the
/// descent objective, shaped like `weights`. Errors with [`Error::NonFinite`]
/// if the loss is NaN or infinite.
pub fn backward(
    arch: &NetworkArch,
    weights: &WeightSet,
    coords: &Matrix,
    targets: &Matrix,
    loss: LossKind,
) -> Result<(f64, WeightSet)> {
    check_inputs(arch, weights, coords)?;
    if targets.rows() != coords.rows() || targets.cols() != arch.output_dim {
        return Err(Error::Shape(format!(
            "target batch is {}x{}, expected {}x{}",
            targets.rows(),
            targets.cols(),
            coords.rows(),
            arch.output_dim
        )));
    }
    let input = encoded_input(arch, coords);
    let n = input.rows();
    if n == 0 {
        return Err(Error::Shape("empty batch".into()));
    }

    let ranges = chunk_ranges(n);
    let partials: Vec<ChunkGrad> = ranges
        .par_iter()
        .map(|&(lo, hi)| backward_chunk(arch, weights, &input, targets, lo, hi))
        .collect();

    let mut grads = WeightSet::zeros(arch);
    let mut sq_sum = 0.0;
    for p in &partials {
        grads.add_assign(&p.grads);
        sq_sum += p.sq_sum;
    }

    let n_elems = (n * arch.output_dim) as f64;
    let (value, scale) = loss.value_and_grad_scale(sq_sum, n_elems);
    if !value.is_finite() {
        return Err(Error::NonFinite);
    }
    grads.scale(scale);
    Ok((value, grads))
}

/// Gradient of `0.5 * sum of squared errors` over one row chunk, plus the raw
/// squared-error sum. The caller rescales per the loss kind.
fn backward_chunk(
    arch: &NetworkArch,
    weights: &WeightSet,
    input: &Matrix,
    targets: &Matrix,
    lo: usize,
    hi: usize,
) -> ChunkGrad {
    let n_layers = weights.layers.len();
    let last = n_layers - 1;
    let mut grads = WeightSet::zeros(arch);
    let mut sq_sum = 0.0;

    // Per-sample storage, reused across the chunk.
    let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers + 1);
    let mut zs: Vec<Vec<f64>> = vec![Vec::new(); n_layers];
    let mut delta = Vec::new();
    let mut delta_prev = Vec::new();

    for r in lo..hi {
        acts.clear();
        acts.push(input.row(r).to_vec());
        for (l, layer) in weights.layers.iter().enumerate() {
            let out_dim = layer.weights.rows();
            let z = &mut zs[l];
            z.clear();
            z.resize(out_dim, 0.0);
            {
                let a = acts.last().expect("activation stack");
                for o in 0..out_dim {
                    z[o] = layer.biases[o] + dot(layer.weights.row(o), a);
                }
            }
            let a_next = if l == last {
                z.clone()
            } else {
                z.iter().map(|&v| arch.activation.apply(v)).collect()
            };
            acts.push(a_next);
        }

        // Output residual; the 2/(n*c) (and log) factors are applied by the caller.
        let pred = acts.last().expect("output row");
        let target = targets.row(r);
        delta.clear();
        for (p, t) in pred.iter().zip(target) {
            let e = p - t;
            sq_sum += e * e;
            delta.push(e);
        }

        for l in (0..n_layers).rev() {
            let layer = &weights.layers[l];
            let out_dim = layer.weights.rows();
            let in_dim = layer.weights.cols();
            let glayer = &mut grads.layers[l];
            delta_prev.clear();
            delta_prev.resize(in_dim, 0.0);
            for o in 0..out_dim {
                let dz = if l == last { delta[o] } else { delta[o] * arch.activation.derivative(zs[l][o]) };
                glayer.biases[o] += dz;
                axpy(glayer.weights.row_mut(o), dz, &acts[l]);
                if l > 0 {
                    axpy(&mut delta_prev, dz, layer.weights.row(o));
                }
            }
            std::mem::swap(&mut delta, &mut delta_prev);
        }
    }

    ChunkGrad { grads, sq_sum }
}

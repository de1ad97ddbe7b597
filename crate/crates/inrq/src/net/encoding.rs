use std::f64::consts::PI;

use crate::matrix::Matrix;

/// Fourier-feature encoding of one input vector.
///
/// Output layout: for each input component `x_i`, the pairs
/// `sin(2^j pi x_i), cos(2^j pi x_i)` for `j = 0..frequencies`, so the output
/// dimension is `x.len() * 2 * frequencies`.
pub fn positional_encode(x: &[f64], frequencies: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len() * 2 * frequencies);
    for &xi in x {
        for j in 0..frequencies {
            let arg = (1u64 << j) as f64 * PI * xi;
            out.push(arg.sin());
            out.push(arg.cos());
        }
    }
    out
}

/// Applies [`positional_encode`] to every row of a coordinate batch.
pub fn encode_batch(coords: &Matrix, frequencies: usize) -> Matrix {
    let cols = coords.cols() * 2 * frequencies;
    let mut data = Vec::with_capacity(coords.rows() * cols);
    for r in 0..coords.rows() {
        data.extend(positional_encode(coords.row(r), frequencies));
    }
    Matrix::from_vec(coords.rows(), cols, data)
}

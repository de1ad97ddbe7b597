use crate::data::ImageBuffer;
use crate::error::{Error, Result};

/// Deterministic analytic test signals, single-channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticKind {
    /// Every pixel equal to the given value.
    Constant(f64),
    /// `(row_frac + col_frac) / 2`: affine in the coordinate grid, so a
    /// zero-hidden-layer network can fit it exactly.
    GradientRamp,
    /// Alternating cells of 0 and 1 with the given cell edge in pixels.
    Checkerboard { cell: usize },
}

/// Renders a `size x size` synthetic image.
pub fn synthetic_signal(kind: SyntheticKind, size: usize) -> Result<ImageBuffer> {
    if size < 2 {
        return Err(Error::Config(format!("synthetic signals need size >= 2, got {size}")));
    }
    let mut data = Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let v = match kind {
                SyntheticKind::Constant(v) => v,
                SyntheticKind::GradientRamp => {
                    (row as f64 / (size - 1) as f64 + col as f64 / (size - 1) as f64) / 2.0
                }
                SyntheticKind::Checkerboard { cell } => {
                    let cell = cell.max(1);
                    ((row / cell + col / cell) % 2) as f64
                }
            };
            data.push(v);
        }
    }
    ImageBuffer::new(size, size, 1, data)
}

//! Compression of implicit neural image representations by
//! quantization-aware training.
//!
//! A coordinate MLP is overfit to a single image, its weights are quantized
//! layer by layer to a small level set (uniform or 1D K-means codebooks,
//! optionally repartitioned as the weights drift during training), and the
//! quantized model is packed into an entropy-coded container. The sweep
//! harness maps the rate-distortion trade-off between architecture size and
//! bits-per-weight.
//!
//! Modules:
//!
//! - [`net`]: dense coordinate MLP, reverse-mode gradients, Adam, losses,
//!   positional encoding
//! - [`quant`]: the four quantization maps and the error metrics
//! - [`qat`]: straight-through quantization-aware training with adaptive
//!   repartitioning
//! - [`codec`]: codebook + bit-packed container with a BZIP2 entropy stage
//! - [`metrics`]: PSNR, SSIM, Sobel-gradient PSNR
//! - [`data`]: image I/O, coordinate grids, synthetic signals
//! - [`sweep`]: rate-distortion experiment harness
//! - [`cli`]: the `inrq` binary's commands
//!
//! See the `examples/` directory for one runnable walkthrough per capability.

pub mod cli;
pub mod codec;
pub mod data;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod net;
pub mod qat;
pub mod quant;
pub mod sweep;

pub use error::{Error, Result};
pub use matrix::Matrix;

//! Coordinate MLP: dense layers, reverse-mode gradients, Adam, losses, and
//! positional input encoding.
//!
//! The hidden layers share one activation; the output layer is always linear.
//! All training arithmetic is `f64`.

mod adam;
mod arch;
mod encoding;
mod forward;
mod loss;
mod weights;

pub use adam::{adam_step, AdamParams, AdamState};
pub use arch::{Activation, Encoding, NetworkArch};
pub use encoding::{encode_batch, positional_encode};
pub use forward::{backward, forward};
pub use loss::LossKind;
pub use weights::{LayerParams, WeightSet};

//! Signal ingestion: image buffers, file I/O, coordinate-grid datasets, and
//! synthetic test signals.

mod dataset;
mod image_buffer;
mod synthetic;

pub use dataset::{make_dataset, outputs_to_image, RegressionDataset};
pub use image_buffer::{load_image, ImageBuffer};
pub use synthetic::{synthetic_signal, SyntheticKind};

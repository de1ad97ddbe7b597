use std::path::Path;

use image::DynamicImage;

use crate::error::{Error, Result};

/// A grayscale or RGB image with `f64` samples in `[0, 1]`, row-major and
/// channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageBuffer {
    /// Validates shape and finiteness, then clamps every sample into `[0, 1]`.
    pub fn new(height: usize, width: usize, channels: usize, mut data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Shape(format!("image dimensions must be positive, got {height}x{width}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::Shape(format!("images must have 1 or 3 channels, got {channels}")));
        }
        if data.len() != height * width * channels {
            return Err(Error::Shape(format!(
                "buffer length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Shape("image samples must be finite".into()));
        }
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(ImageBuffer { height, width, channels, data })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + channel]
    }

    pub fn same_shape(&self, other: &ImageBuffer) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    /// 8-bit samples, `round(v * 255)`.
    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| (v * 255.0).round() as u8).collect()
    }

    /// Writes PNG or binary PPM depending on the file extension. Grayscale
    /// data is expanded to RGB when the target is PPM (P6 is an RGB format).
    pub fn save(&self, path: &Path) -> Result<()> {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
        let (bytes, color) = match (ext.as_str(), self.channels) {
            ("ppm", 1) => {
                let mut rgb = Vec::with_capacity(self.data.len() * 3);
                for &v in &self.to_u8() {
                    rgb.extend_from_slice(&[v, v, v]);
                }
                (rgb, image::ColorType::Rgb8)
            }
            (_, 1) => (self.to_u8(), image::ColorType::L8),
            _ => (self.to_u8(), image::ColorType::Rgb8),
        };
        image::save_buffer(path, &bytes, self.width as u32, self.height as u32, color)?;
        Ok(())
    }
}

/// Loads a PNG or binary PPM file. 8-bit channels are scaled by 1/255;
/// grayscale sources keep a single channel, everything else becomes RGB.
pub fn load_image(path: &Path) -> Result<ImageBuffer> {
    let img = image::open(path).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::Image(other),
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(gray) => {
            let data = gray.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
            ImageBuffer::new(h, w, 1, data)
        }
        DynamicImage::ImageLuma16(gray) => {
            let data = gray.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect();
            ImageBuffer::new(h, w, 1, data)
        }
        other => {
            let rgb = other.into_rgb8();
            let data = rgb.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
            ImageBuffer::new(h, w, 3, data)
        }
    }
}

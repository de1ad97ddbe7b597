use crate::data::ImageBuffer;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// A full-pixel-lattice regression problem: row-major coordinates in
/// `[-1, 1]^2` and targets in `[-1, 1]` per channel.
#[derive(Debug, Clone)]
pub struct RegressionDataset {
    pub coords: Matrix,
    pub targets: Matrix,
    pub image: ImageBuffer,
}

/// Builds the coordinate/target pairs for every pixel of `image`:
/// `coords = (2 row/(H-1) - 1, 2 col/(W-1) - 1)` and `targets = 2 v - 1`.
pub fn make_dataset(image: ImageBuffer) -> Result<RegressionDataset> {
    let (h, w, c) = (image.height(), image.width(), image.channels());
    if h < 2 || w < 2 {
        return Err(Error::Config(format!("need at least 2x2 pixels to form a grid, got {h}x{w}")));
    }
    let n = h * w;
    let mut coords = Vec::with_capacity(n * 2);
    for row in 0..h {
        let y = 2.0 * row as f64 / (h - 1) as f64 - 1.0;
        for col in 0..w {
            let x = 2.0 * col as f64 / (w - 1) as f64 - 1.0;
            coords.push(y);
            coords.push(x);
        }
    }
    let targets: Vec<f64> = image.data().iter().map(|&v| 2.0 * v - 1.0).collect();
    Ok(RegressionDataset {
        coords: Matrix::from_vec(n, 2, coords),
        targets: Matrix::from_vec(n, c, targets),
        image,
    })
}

/// Maps network outputs over a pixel lattice back to an image:
/// `v = (y + 1) / 2`, clamped into `[0, 1]`.
pub fn outputs_to_image(outputs: &Matrix, height: usize, width: usize) -> Result<ImageBuffer> {
    if outputs.rows() != height * width {
        return Err(Error::Shape(format!(
            "{} output rows cannot fill a {height}x{width} image",
            outputs.rows()
        )));
    }
    let data = outputs.data().iter().map(|&y| ((y + 1.0) / 2.0).clamp(0.0, 1.0)).collect();
    ImageBuffer::new(height, width, outputs.cols(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_grid_hits_corners() {
        let img = ImageBuffer::new(2, 2, 1, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        let ds = make_dataset(img).unwrap();
        assert_eq!(ds.coords.row(0), &[-1.0, -1.0]);
        assert_eq!(ds.coords.row(1), &[-1.0, 1.0]);
        assert_eq!(ds.coords.row(2), &[1.0, -1.0]);
        assert_eq!(ds.coords.row(3), &[1.0, 1.0]);
        assert_eq!(ds.targets.data(), &[-1.0, -0.5, 0.0, 1.0]);
    }

    #[test]
    fn sample_count_is_pixel_count() {
        for (h, w) in [(2, 5), (7, 3), (4, 4)] {
            let img = ImageBuffer::new(h, w, 3, vec![0.5; h * w * 3]).unwrap();
            let ds = make_dataset(img).unwrap();
            assert_eq!(ds.coords.rows(), h * w);
            assert_eq!(ds.targets.rows(), h * w);
        }
    }

    #[test]
    fn degenerate_grid_is_rejected() {
        let img = ImageBuffer::new(1, 4, 1, vec![0.0; 4]).unwrap();
        assert!(matches!(make_dataset(img), Err(Error::Config(_))));
    }

    #[test]
    fn coordinate_map_is_an_affine_bijection() {
        let img = ImageBuffer::new(5, 9, 1, vec![0.1; 45]).unwrap();
        let ds = make_dataset(img).unwrap();
        for row in 0..5 {
            for col in 0..9 {
                let c = ds.coords.row(row * 9 + col);
                let back_row = (c[0] + 1.0) / 2.0 * 4.0;
                let back_col = (c[1] + 1.0) / 2.0 * 8.0;
                assert!((back_row - row as f64).abs() < 1e-12);
                assert!((back_col - col as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn outputs_map_back_to_pixels() {
        let outputs = Matrix::from_vec(4, 1, vec![-1.0, 0.0, 1.0, 3.0]);
        let img = outputs_to_image(&outputs, 2, 2).unwrap();
        assert_eq!(img.data(), &[0.0, 0.5, 1.0, 1.0]);
    }
}

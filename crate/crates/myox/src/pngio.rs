//! Grayscale PNG loading and saving. Intensities are read as raw integer
//! values (no rescaling); the image's white level records the source bit
//! depth for later normalization.

use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma};
use myox_core::image::{BinaryMask, GrayImage};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PngError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("{path} is not grayscale (8- or 16-bit)")]
    NotGrayscale { path: PathBuf },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("malformed image data: {0}")]
    Malformed(String),
}

/// Load an 8- or 16-bit grayscale PNG as raw intensities.
pub fn load_gray(path: &Path) -> Result<GrayImage, PngError> {
    let img = image::open(path).map_err(|source| PngError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let (data, w, h, white): (Vec<f64>, u32, u32, f64) = match img {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            (buf.pixels().map(|p| p.0[0] as f64).collect(), w, h, 255.0)
        }
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            (buf.pixels().map(|p| p.0[0] as f64).collect(), w, h, 65535.0)
        }
        _ => {
            return Err(PngError::NotGrayscale {
                path: path.to_path_buf(),
            })
        }
    };
    let mut gray = GrayImage::new(w as usize, h as usize, data)
        .map_err(|e| PngError::Malformed(e.to_string()))?;
    gray.set_white_level(white);
    Ok(gray)
}

/// Load a mask PNG: any nonzero pixel is set.
pub fn load_mask(path: &Path) -> Result<BinaryMask, PngError> {
    let gray = load_gray(path)?;
    let data = gray.data().iter().map(|&v| v != 0.0).collect();
    BinaryMask::new(gray.width(), gray.height(), data)
        .map_err(|e| PngError::Malformed(e.to_string()))
}

/// Save an integer-valued image as 8-bit grayscale PNG. Values are
/// clamped to [0, 255].
pub fn save_gray8(path: &Path, image: &GrayImage) -> Result<(), PngError> {
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_fn(
        image.width() as u32,
        image.height() as u32,
        |x, y| Luma([image.get(y as usize, x as usize).clamp(0.0, 255.0) as u8]),
    );
    buf.save(path).map_err(|source| PngError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Save a mask as 8-bit PNG with set pixels at 255.
pub fn save_mask(path: &Path, mask: &BinaryMask) -> Result<(), PngError> {
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_fn(
        mask.width() as u32,
        mask.height() as u32,
        |x, y| Luma([if mask.get(y as usize, x as usize) { 255 } else { 0 }]),
    );
    buf.save(path).map_err(|source| PngError::Write {
        path: path.to_path_buf(),
        source,
    })
}

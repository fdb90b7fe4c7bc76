//! In-memory grayscale images and binary masks.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Row-major grayscale image. Intensities are stored as `f64` but hold the
/// raw integer values of the source file (no rescaling on load); normalized
/// images live in [0, 1]. `white_level` records the declared white point of
/// the storage format (255 for 8-bit, 65535 for 16-bit sources).
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    white_level: f64,
    data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImageError {
    /// Data length does not equal width x height, or a dimension is zero.
    BadDimensions {
        width: usize,
        height: usize,
        len: usize,
    },
    /// A pixel value is NaN or infinite.
    NonFinite,
    /// Mask and image dimensions differ.
    DimensionMismatch,
    /// Operation requires at least one mask pixel set.
    EmptyMask,
}

impl fmt::Display for ImageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImageError::BadDimensions { width, height, len } => write!(
                f,
                "data length {len} does not match {width}x{height} image"
            ),
            ImageError::NonFinite => write!(f, "image contains non-finite values"),
            ImageError::DimensionMismatch => write!(f, "image and mask dimensions differ"),
            ImageError::EmptyMask => write!(f, "mask has no set pixels"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ImageError {}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, ImageError> {
        Self::with_white_level(width, height, data, 255.0)
    }

    pub fn with_white_level(
        width: usize,
        height: usize,
        data: Vec<f64>,
        white_level: f64,
    ) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(ImageError::BadDimensions {
                width,
                height,
                len: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(ImageError::NonFinite);
        }
        Ok(GrayImage {
            width,
            height,
            white_level,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        GrayImage {
            width,
            height,
            white_level: 255.0,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn white_level(&self) -> f64 {
        self.white_level
    }

    pub fn set_white_level(&mut self, level: f64) {
        self.white_level = level;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col] = value;
    }
}

/// Row-major boolean mask delimiting one muscle ROI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(ImageError::BadDimensions {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(BinaryMask {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        BinaryMask {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        debug_assert!(row < self.height && col < self.width);
        self.data[row * self.width + col] = value;
    }

    pub fn count_set(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Tight bounding box of set pixels as (row0, col0, row1, col1),
    /// inclusive. `None` when the mask is empty.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut r0 = usize::MAX;
        let mut c0 = usize::MAX;
        let mut r1 = 0usize;
        let mut c1 = 0usize;
        let mut any = false;
        for r in 0..self.height {
            for c in 0..self.width {
                if self.data[r * self.width + c] {
                    any = true;
                    r0 = r0.min(r);
                    c0 = c0.min(c);
                    r1 = r1.max(r);
                    c1 = c1.max(c);
                }
            }
        }
        any.then_some((r0, c0, r1, c1))
    }
}

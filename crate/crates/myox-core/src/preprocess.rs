//! From full slice + segmentation to the two representations the models
//! consume: the original-resolution masked ROI (texture features) and the
//! resized, normalized 96x96 patch (network input).

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::fmath as fm;
use crate::image::{BinaryMask, GrayImage};
use crate::roi::RoiPatch;

/// Network input side length.
pub const NET_SIDE: usize = 96;

/// Default gray-level count for co-occurrence / run-length statistics.
pub const DEFAULT_N_LEVELS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum PreprocessError {
    EmptyMask,
    DimensionMismatch,
    NonFiniteInput,
    /// normalize_unit requires the fixed network input size.
    NotNetSized { width: usize, height: usize },
    BadLevelCount(usize),
}

impl fmt::Display for PreprocessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreprocessError::EmptyMask => write!(f, "mask has no set pixels"),
            PreprocessError::DimensionMismatch => {
                write!(f, "image and mask dimensions differ")
            }
            PreprocessError::NonFiniteInput => write!(f, "non-finite pixel value"),
            PreprocessError::NotNetSized { width, height } => {
                write!(f, "expected {NET_SIDE}x{NET_SIDE} image, got {width}x{height}")
            }
            PreprocessError::BadLevelCount(n) => write!(f, "n_levels must be >= 2, got {n}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PreprocessError {}

/// Normalized 96x96 patch, values in [0, 1], fed to the convolutional model.
#[derive(Debug, Clone, PartialEq)]
pub struct NetInput {
    data: Vec<f32>,
}

impl NetInput {
    pub fn from_values(data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), NET_SIDE * NET_SIDE);
        debug_assert!(data.iter().all(|v| (0.0..=1.0).contains(v)));
        NetInput { data }
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * NET_SIDE + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f32) {
        self.data[row * NET_SIDE + col] = v;
    }
}

/// Crop the tight mask bounding box, expanded symmetrically to a square of
/// side max(bbox_w, bbox_h). The expansion window is anchored on the bbox;
/// where it runs past the source image it is filled with zeros, and every
/// pixel outside the mask is set to 0 in the output.
pub fn crop_square_bbox(
    image: &GrayImage,
    mask: &BinaryMask,
) -> Result<RoiPatch, PreprocessError> {
    if image.width() != mask.width() || image.height() != mask.height() {
        return Err(PreprocessError::DimensionMismatch);
    }
    let (r0, c0, r1, c1) = mask.bounding_box().ok_or(PreprocessError::EmptyMask)?;
    let bh = r1 - r0 + 1;
    let bw = c1 - c0 + 1;
    let side = bh.max(bw);
    // Symmetric padding, extra pixel on the trailing edge when odd.
    let top_pad = (side - bh) / 2;
    let left_pad = (side - bw) / 2;
    let origin_r = r0 as isize - top_pad as isize;
    let origin_c = c0 as isize - left_pad as isize;

    let mut out_img = vec![0.0f64; side * side];
    let mut out_mask = vec![false; side * side];
    for pr in 0..side {
        for pc in 0..side {
            let sr = origin_r + pr as isize;
            let sc = origin_c + pc as isize;
            if sr < 0 || sc < 0 || sr >= image.height() as isize || sc >= image.width() as isize {
                continue;
            }
            let (sr, sc) = (sr as usize, sc as usize);
            if mask.get(sr, sc) {
                out_img[pr * side + pc] = image.get(sr, sc);
                out_mask[pr * side + pc] = true;
            }
        }
    }
    let mut img = GrayImage::new(side, side, out_img).expect("square crop is well-formed");
    img.set_white_level(image.white_level());
    let mask = BinaryMask::new(side, side, out_mask).expect("square crop is well-formed");
    Ok(RoiPatch { image: img, mask })
}

/// Bilinear resize with the half-pixel-center convention:
/// `src = (dst + 0.5) * src_size / dst_size - 0.5`, edge-clamped.
/// Equal source and target size reproduces the input exactly.
pub fn resize_bilinear(src: &GrayImage, target_side: usize) -> GrayImage {
    debug_assert!(target_side >= 1);
    let (sw, sh) = (src.width(), src.height());
    if sw == target_side && sh == target_side {
        return src.clone();
    }
    let mut out = vec![0.0f64; target_side * target_side];
    let scale_x = sw as f64 / target_side as f64;
    let scale_y = sh as f64 / target_side as f64;
    for dr in 0..target_side {
        let sy = (dr as f64 + 0.5) * scale_y - 0.5;
        let y0 = fm::floor(sy);
        let fy = sy - y0;
        let r0 = (y0.max(0.0) as usize).min(sh - 1);
        let r1 = ((y0 + 1.0).max(0.0) as usize).min(sh - 1);
        for dc in 0..target_side {
            let sx = (dc as f64 + 0.5) * scale_x - 0.5;
            let x0 = fm::floor(sx);
            let fx = sx - x0;
            let c0 = (x0.max(0.0) as usize).min(sw - 1);
            let c1 = ((x0 + 1.0).max(0.0) as usize).min(sw - 1);
            let top = src.get(r0, c0) * (1.0 - fx) + src.get(r0, c1) * fx;
            let bot = src.get(r1, c0) * (1.0 - fx) + src.get(r1, c1) * fx;
            out[dr * target_side + dc] = top * (1.0 - fy) + bot * fy;
        }
    }
    let mut img =
        GrayImage::new(target_side, target_side, out).expect("resize output is well-formed");
    img.set_white_level(src.white_level());
    img
}

/// Scale a 96x96 image into [0, 1] by its declared white level.
pub fn normalize_unit(image: &GrayImage) -> Result<NetInput, PreprocessError> {
    if image.width() != NET_SIDE || image.height() != NET_SIDE {
        return Err(PreprocessError::NotNetSized {
            width: image.width(),
            height: image.height(),
        });
    }
    let scale = 1.0 / image.white_level();
    let mut data = Vec::with_capacity(NET_SIDE * NET_SIDE);
    for &v in image.data() {
        if !v.is_finite() {
            return Err(PreprocessError::NonFiniteInput);
        }
        data.push(((v * scale).clamp(0.0, 1.0)) as f32);
    }
    Ok(NetInput { data })
}

/// Full network-input path for one ROI: square crop, bilinear resize to
/// 96x96, then unit normalization.
pub fn net_input_for_roi(
    image: &GrayImage,
    mask: &BinaryMask,
) -> Result<NetInput, PreprocessError> {
    let patch = crop_square_bbox(image, mask)?;
    let resized = resize_bilinear(&patch.image, NET_SIDE);
    normalize_unit(&resized)
}

/// Gray-level image for co-occurrence / run-length statistics. Levels are
/// valid only where the mask is set.
#[derive(Debug, Clone)]
pub struct LevelImage {
    pub width: usize,
    pub height: usize,
    pub n_levels: usize,
    /// Level index per pixel; meaningful only where `valid` is true.
    pub levels: Vec<u16>,
    pub valid: Vec<bool>,
}

impl LevelImage {
    #[inline]
    pub fn level(&self, row: usize, col: usize) -> u16 {
        self.levels[row * self.width + col]
    }

    #[inline]
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.valid[row * self.width + col]
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }
}

/// Min-max quantization of the masked intensities into `n_levels` bins:
/// `level = floor((x - min) / (max - min) * n_levels)` clamped to
/// `n_levels - 1`, with min/max taken over masked pixels only. A constant
/// ROI maps entirely to level 0.
pub fn quantize_levels(patch: &RoiPatch, n_levels: usize) -> Result<LevelImage, PreprocessError> {
    if n_levels < 2 {
        return Err(PreprocessError::BadLevelCount(n_levels));
    }
    let (w, h) = (patch.image.width(), patch.image.height());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut any = false;
    for (v, m) in patch.image.data().iter().zip(patch.mask.data()) {
        if *m {
            any = true;
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    if !any {
        return Err(PreprocessError::EmptyMask);
    }
    let mut levels = vec![0u16; w * h];
    let valid: Vec<bool> = patch.mask.data().to_vec();
    if hi > lo {
        let scale = n_levels as f64 / (hi - lo);
        for (i, (v, m)) in patch.image.data().iter().zip(patch.mask.data()).enumerate() {
            if *m {
                let lvl = fm::floor((v - lo) * scale) as usize;
                levels[i] = lvl.min(n_levels - 1) as u16;
            }
        }
    }
    Ok(LevelImage {
        width: w,
        height: h,
        n_levels,
        levels,
        valid,
    })
}

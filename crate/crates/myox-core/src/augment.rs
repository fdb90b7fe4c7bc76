//! Stochastic training-time transforms on normalized 96x96 patches.
//!
//! Applied per image per iteration in the fixed order
//! flip -> translate -> rotate -> contrast, each with independently
//! sampled parameters. Vacated pixels are filled with 0, matching the
//! zeroed background outside the muscle mask. Held-out data never passes
//! through this module.

use alloc::vec;
use core::fmt;

use crate::fmath as fm;
use crate::preprocess::{NetInput, NET_SIDE};
use crate::rng::Rng;

/// Sampling ranges. Defaults: flip probability 0.5, horizontal shift
/// within +-10% of the width, rotation within +-0.2 of a full turn,
/// contrast factor within [0.8, 1.2].
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub flip_prob: f64,
    pub translate_frac: f64,
    pub rotate_factor: f64,
    pub contrast_lo: f64,
    pub contrast_hi: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            flip_prob: 0.5,
            translate_frac: 0.10,
            rotate_factor: 0.2,
            contrast_lo: 0.8,
            contrast_hi: 1.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AugmentError {
    OutOfRangeShift { dx: f64, max: f64 },
    OutOfRangeFactor { value: f64, lo: f64, hi: f64 },
}

impl fmt::Display for AugmentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AugmentError::OutOfRangeShift { dx, max } => {
                write!(f, "shift {dx} outside +-{max}")
            }
            AugmentError::OutOfRangeFactor { value, lo, hi } => {
                write!(f, "factor {value} outside [{lo}, {hi}]")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AugmentError {}

/// Reverse column order.
pub fn flip_h(image: &NetInput) -> NetInput {
    let mut out = image.clone();
    for r in 0..NET_SIDE {
        for c in 0..NET_SIDE {
            out.set(r, c, image.get(r, NET_SIDE - 1 - c));
        }
    }
    out
}

/// Horizontal shift by `dx` pixels (positive = rightward) with bilinear
/// sub-pixel sampling and zero fill. `|dx|` may not exceed 10% of the
/// width.
pub fn translate_h(image: &NetInput, dx: f64) -> Result<NetInput, AugmentError> {
    let max = 0.1 * NET_SIDE as f64;
    if !dx.is_finite() || fm::abs(dx) > max {
        return Err(AugmentError::OutOfRangeShift { dx, max });
    }
    let mut out = NetInput::from_values(vec![0.0; NET_SIDE * NET_SIDE]);
    for r in 0..NET_SIDE {
        for c in 0..NET_SIDE {
            let src = c as f64 - dx;
            let x0 = fm::floor(src);
            let frac = (src - x0) as f32;
            let c0 = x0 as isize;
            let c1 = c0 + 1;
            let sample = |col: isize| -> f32 {
                if col < 0 || col >= NET_SIDE as isize {
                    0.0
                } else {
                    image.get(r, col as usize)
                }
            };
            let v = sample(c0) * (1.0 - frac) + sample(c1) * frac;
            out.set(r, c, v.clamp(0.0, 1.0));
        }
    }
    Ok(out)
}

/// Rotate by `factor` of a full turn (positive = clockwise in image
/// coordinates) about the image center, bilinear resampling, zero fill.
/// Training draws `factor` from [-0.2, 0.2]; larger factors are rejected
/// except the exact right-angle test value behind `allow_any`.
pub fn rotate(image: &NetInput, factor: f64) -> Result<NetInput, AugmentError> {
    if !factor.is_finite() || fm::abs(factor) > 0.2 {
        return Err(AugmentError::OutOfRangeFactor {
            value: factor,
            lo: -0.2,
            hi: 0.2,
        });
    }
    Ok(rotate_unchecked(image, factor))
}

/// Rotation without the training-range guard; used by tests to validate
/// the resampler at right angles.
pub fn rotate_unchecked(image: &NetInput, factor: f64) -> NetInput {
    let angle = factor * 2.0 * core::f64::consts::PI;
    let (sin_a, cos_a) = (fm::sin(angle), fm::cos(angle));
    let center = (NET_SIDE as f64 - 1.0) / 2.0;
    let mut out = NetInput::from_values(vec![0.0; NET_SIDE * NET_SIDE]);
    for r in 0..NET_SIDE {
        for c in 0..NET_SIDE {
            // Inverse mapping: rotate the destination coordinate back.
            let y = r as f64 - center;
            let x = c as f64 - center;
            let sx = x * cos_a - y * sin_a + center;
            let sy = x * sin_a + y * cos_a + center;
            let x0 = fm::floor(sx);
            let y0 = fm::floor(sy);
            let fx = (sx - x0) as f32;
            let fy = (sy - y0) as f32;
            let sample = |row: f64, col: f64| -> f32 {
                if row < 0.0 || col < 0.0 || row >= NET_SIDE as f64 || col >= NET_SIDE as f64 {
                    0.0
                } else {
                    image.get(row as usize, col as usize)
                }
            };
            let v = sample(y0, x0) * (1.0 - fx) * (1.0 - fy)
                + sample(y0, x0 + 1.0) * fx * (1.0 - fy)
                + sample(y0 + 1.0, x0) * (1.0 - fx) * fy
                + sample(y0 + 1.0, x0 + 1.0) * fx * fy;
            out.set(r, c, v.clamp(0.0, 1.0));
        }
    }
    out
}

/// Contrast adjustment `c_f * (x - mean) + mean` with the mean taken over
/// all pixels (background zeros included), clamped back to [0, 1].
pub fn adjust_contrast(image: &NetInput, c_f: f64) -> Result<NetInput, AugmentError> {
    if !(0.8..=1.2).contains(&c_f) {
        return Err(AugmentError::OutOfRangeFactor {
            value: c_f,
            lo: 0.8,
            hi: 1.2,
        });
    }
    let mean = image.data().iter().map(|&v| v as f64).sum::<f64>() / image.data().len() as f64;
    let mut out = image.clone();
    for v in out.data_mut() {
        let adj = c_f * (*v as f64 - mean) + mean;
        *v = (adj as f32).clamp(0.0, 1.0);
    }
    Ok(out)
}

/// Augment a training batch in place: per image, independently sample the
/// flip coin, shift, rotation factor and contrast factor from `rng`, then
/// apply flip -> translate -> rotate -> contrast. Deterministic under the
/// seed; parameters are drawn sequentially in batch order.
pub fn augment_batch(batch: &mut [NetInput], config: &AugmentConfig, rng: &mut Rng) {
    for image in batch.iter_mut() {
        let do_flip = rng.coin(config.flip_prob);
        let dx = rng.uniform(
            -config.translate_frac * NET_SIDE as f64,
            config.translate_frac * NET_SIDE as f64,
        );
        let rot = rng.uniform(-config.rotate_factor, config.rotate_factor);
        let c_f = rng.uniform(config.contrast_lo, config.contrast_hi);

        let mut img = if do_flip { flip_h(image) } else { image.clone() };
        img = translate_h(&img, dx).expect("sampled shift is in range");
        img = rotate(&img, rot).expect("sampled factor is in range");
        img = adjust_contrast(&img, c_f).expect("sampled contrast is in range");
        *image = img;
    }
}

//! First-order statistics of the masked intensity and gradient-magnitude
//! distributions.

use alloc::vec::Vec;

use super::stats::{moments, percentile_nearest_rank, sorted_copy};
use super::TextureError;
use crate::fmath as fm;
use crate::roi::RoiPatch;

pub const HISTOGRAM_COUNT: usize = 9;
pub const GRADIENT_COUNT: usize = 5;

/// Intensity statistics over masked pixels: mean, population variance,
/// skewness, excess kurtosis, and the 1/10/50/90/99 nearest-rank
/// percentiles.
pub fn histogram_features(patch: &RoiPatch) -> Result<[f64; HISTOGRAM_COUNT], TextureError> {
    let values = patch.masked_values();
    if values.is_empty() {
        return Err(TextureError::EmptyMask);
    }
    if values.len() < 2 {
        return Err(TextureError::TooFewPixels {
            needed: 2,
            got: values.len(),
        });
    }
    let m = moments(&values);
    let sorted = sorted_copy(&values);
    Ok([
        m.mean,
        m.variance,
        m.skewness,
        m.kurtosis,
        percentile_nearest_rank(&sorted, 1.0),
        percentile_nearest_rank(&sorted, 10.0),
        percentile_nearest_rank(&sorted, 50.0),
        percentile_nearest_rank(&sorted, 90.0),
        percentile_nearest_rank(&sorted, 99.0),
    ])
}

/// Central-difference gradient magnitudes over interior pixels (masked
/// pixels whose four 4-neighbors are masked): mean, variance, skewness,
/// kurtosis of |g|, and the fraction of interior pixels with |g| > 0.
pub fn gradient_features(patch: &RoiPatch) -> Result<[f64; GRADIENT_COUNT], TextureError> {
    let img = &patch.image;
    let mask = &patch.mask;
    let (w, h) = (img.width(), img.height());
    let mut mags: Vec<f64> = Vec::new();
    for r in 1..h.saturating_sub(1) {
        for c in 1..w.saturating_sub(1) {
            if mask.get(r, c)
                && mask.get(r, c - 1)
                && mask.get(r, c + 1)
                && mask.get(r - 1, c)
                && mask.get(r + 1, c)
            {
                let gx = (img.get(r, c + 1) - img.get(r, c - 1)) / 2.0;
                let gy = (img.get(r + 1, c) - img.get(r - 1, c)) / 2.0;
                mags.push(fm::sqrt(gx * gx + gy * gy));
            }
        }
    }
    if mags.is_empty() {
        return Err(TextureError::EmptyInterior);
    }
    let m = moments(&mags);
    let nonzero = mags.iter().filter(|&&g| g > 0.0).count() as f64 / mags.len() as f64;
    Ok([m.mean, m.variance, m.skewness, m.kurtosis, nonzero])
}

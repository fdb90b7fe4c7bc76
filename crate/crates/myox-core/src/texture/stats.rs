//! Shared moment and percentile helpers for the feature families.

use alloc::vec::Vec;

use crate::fmath as fm;

/// Population moments with the degenerate rule: skewness and excess
/// kurtosis are defined as 0 whenever the variance is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

pub fn moments(values: &[f64]) -> Moments {
    let n = values.len() as f64;
    debug_assert!(n > 0.0);
    let mean = values.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 == 0.0 {
        return Moments {
            mean,
            variance: 0.0,
            skewness: 0.0,
            kurtosis: 0.0,
        };
    }
    Moments {
        mean,
        variance: m2,
        skewness: m3 / (m2 * fm::sqrt(m2)),
        kurtosis: m4 / (m2 * m2) - 3.0,
    }
}

/// Nearest-rank percentile: the value at rank `ceil(p/100 * n)` (1-based)
/// of the ascending-sorted sample, with the rank clamped to at least 1.
/// For {1,2,3,4} the 50th percentile is 2.
pub fn percentile_nearest_rank(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len();
    let rank = fm::ceil(p / 100.0 * n as f64) as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    v
}

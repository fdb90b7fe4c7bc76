//! Gray-level co-occurrence matrices and the Haralick-style statistics
//! computed from them.

use alloc::vec;
use alloc::vec::Vec;

use super::TextureError;
use crate::fmath as fm;
use crate::preprocess::LevelImage;

pub const GLCM_FEATURE_COUNT: usize = 11;

/// Symmetric, count-normalized co-occurrence matrix for one offset.
#[derive(Debug, Clone)]
pub struct GlcmMatrix {
    n_levels: usize,
    /// Joint probabilities p(i, j), row-major; sums to 1 unless `empty`.
    p: Vec<f64>,
    offset: (isize, isize),
    empty: bool,
}

impl GlcmMatrix {
    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn offset(&self) -> (isize, isize) {
        self.offset
    }

    /// True when the offset produced no valid pixel pair.
    pub fn is_empty(&self) -> bool {
        self.empty
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n_levels + j]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }
}

/// Accumulate the symmetric GLCM for `offset = (dy, dx)`: every pair of
/// mask-valid pixels (p, p+offset) is counted as both (i, j) and (j, i),
/// then the matrix is normalized by the total count.
pub fn glcm_compute(levels: &LevelImage, offset: (isize, isize)) -> GlcmMatrix {
    debug_assert!(offset != (0, 0));
    let n = levels.n_levels;
    let (dy, dx) = offset;
    let mut counts = vec![0u64; n * n];
    let mut total = 0u64;
    for r in 0..levels.height {
        let nr = r as isize + dy;
        if nr < 0 || nr >= levels.height as isize {
            continue;
        }
        for c in 0..levels.width {
            let nc = c as isize + dx;
            if nc < 0 || nc >= levels.width as isize {
                continue;
            }
            if levels.is_valid(r, c) && levels.is_valid(nr as usize, nc as usize) {
                let i = levels.level(r, c) as usize;
                let j = levels.level(nr as usize, nc as usize) as usize;
                counts[i * n + j] += 1;
                counts[j * n + i] += 1;
                total += 2;
            }
        }
    }
    if total == 0 {
        return GlcmMatrix {
            n_levels: n,
            p: vec![0.0; n * n],
            offset,
            empty: true,
        };
    }
    let p = counts.iter().map(|&c| c as f64 / total as f64).collect();
    GlcmMatrix {
        n_levels: n,
        p,
        offset,
        empty: false,
    }
}

/// The eleven scalar statistics extracted per matrix, in registry order:
/// angular second moment, contrast, correlation, sum-of-squares variance,
/// inverse difference moment, sum average, sum variance, sum entropy,
/// entropy, difference variance, difference entropy. Entropies use log2
/// with 0*log(0) = 0; correlation is 0 when either marginal variance
/// vanishes.
pub fn glcm_features(m: &GlcmMatrix) -> Result<[f64; GLCM_FEATURE_COUNT], TextureError> {
    if m.is_empty() {
        return Err(TextureError::EmptyMatrix);
    }
    let n = m.n_levels;

    // Marginals (p_x = p_y by symmetry, but both are computed for clarity).
    let mut px = vec![0.0; n];
    let mut py = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let p = m.p(i, j);
            px[i] += p;
            py[j] += p;
        }
    }
    let mu_x: f64 = px.iter().enumerate().map(|(i, &p)| i as f64 * p).sum();
    let mu_y: f64 = py.iter().enumerate().map(|(j, &p)| j as f64 * p).sum();
    let var_x: f64 = px
        .iter()
        .enumerate()
        .map(|(i, &p)| (i as f64 - mu_x) * (i as f64 - mu_x) * p)
        .sum();
    let var_y: f64 = py
        .iter()
        .enumerate()
        .map(|(j, &p)| (j as f64 - mu_y) * (j as f64 - mu_y) * p)
        .sum();

    let mut asm = 0.0;
    let mut contrast = 0.0;
    let mut cross = 0.0;
    let mut variance = 0.0;
    let mut idm = 0.0;
    let mut entropy = 0.0;
    let mut p_sum = vec![0.0; 2 * n - 1];
    let mut p_diff = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let p = m.p(i, j);
            let d = i as f64 - j as f64;
            asm += p * p;
            contrast += d * d * p;
            cross += i as f64 * j as f64 * p;
            variance += (i as f64 - mu_x) * (i as f64 - mu_x) * p;
            idm += p / (1.0 + d * d);
            if p > 0.0 {
                entropy -= p * fm::log2(p);
            }
            p_sum[i + j] += p;
            p_diff[i.abs_diff(j)] += p;
        }
    }

    let sigma = fm::sqrt(var_x) * fm::sqrt(var_y);
    let correlation = if sigma > 0.0 {
        (cross - mu_x * mu_y) / sigma
    } else {
        0.0
    };

    let sum_average: f64 = p_sum.iter().enumerate().map(|(k, &p)| k as f64 * p).sum();
    let sum_variance: f64 = p_sum
        .iter()
        .enumerate()
        .map(|(k, &p)| (k as f64 - sum_average) * (k as f64 - sum_average) * p)
        .sum();
    let sum_entropy: f64 = p_sum
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * fm::log2(p))
        .sum();

    let diff_average: f64 = p_diff.iter().enumerate().map(|(k, &p)| k as f64 * p).sum();
    let diff_variance: f64 = p_diff
        .iter()
        .enumerate()
        .map(|(k, &p)| (k as f64 - diff_average) * (k as f64 - diff_average) * p)
        .sum();
    let diff_entropy: f64 = p_diff
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * fm::log2(p))
        .sum();

    Ok([
        asm,
        contrast,
        correlation,
        variance,
        idm,
        sum_average,
        sum_variance,
        sum_entropy,
        entropy,
        diff_variance,
        diff_entropy,
    ])
}

//! Orthonormal 2-D Haar decomposition and per-subband energies.

use alloc::vec;
use alloc::vec::Vec;

use super::TextureError;
use crate::roi::RoiPatch;

pub const WAVELET_LEVELS: usize = 4;
pub const WAVELET_FEATURE_COUNT: usize = WAVELET_LEVELS * 4;

/// Energies (mean squared coefficient) of the LL/LH/HL/HH subbands at each
/// decomposition level, plus the coefficient count per level for exact
/// energy bookkeeping.
#[derive(Debug, Clone)]
pub struct WaveletEnergies {
    /// `[level][subband]` with subband order LL, LH, HL, HH.
    pub energies: [[f64; 4]; WAVELET_LEVELS],
    /// Coefficients per subband at each level (after any zero padding).
    pub counts: [usize; WAVELET_LEVELS],
}

impl WaveletEnergies {
    /// Registry order: level-major, LL, LH, HL, HH within each level.
    pub fn flat(&self) -> [f64; WAVELET_FEATURE_COUNT] {
        let mut out = [0.0; WAVELET_FEATURE_COUNT];
        for (lvl, row) in self.energies.iter().enumerate() {
            out[lvl * 4..lvl * 4 + 4].copy_from_slice(row);
        }
        out
    }
}

/// One orthonormal Haar step on non-overlapping 2x2 blocks
/// `[[a, b], [c, d]]`: LL=(a+b+c+d)/2, LH=(a+b-c-d)/2, HL=(a-b+c-d)/2,
/// HH=(a-b-c+d)/2. Odd dimensions are zero-padded to even first.
fn haar_step(data: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, usize, usize) {
    let w2 = w + w % 2;
    let h2 = h + h % 2;
    let at = |r: usize, c: usize| -> f64 {
        if r < h && c < w {
            data[r * w + c]
        } else {
            0.0
        }
    };
    let (ow, oh) = (w2 / 2, h2 / 2);
    let mut ll = vec![0.0; ow * oh];
    let mut lh = vec![0.0; ow * oh];
    let mut hl = vec![0.0; ow * oh];
    let mut hh = vec![0.0; ow * oh];
    for r in 0..oh {
        for c in 0..ow {
            let a = at(2 * r, 2 * c);
            let b = at(2 * r, 2 * c + 1);
            let cc = at(2 * r + 1, 2 * c);
            let d = at(2 * r + 1, 2 * c + 1);
            let i = r * ow + c;
            ll[i] = (a + b + cc + d) / 2.0;
            lh[i] = (a + b - cc - d) / 2.0;
            hl[i] = (a - b + cc - d) / 2.0;
            hh[i] = (a - b - cc + d) / 2.0;
        }
    }
    (ll, lh, hl, hh, ow, oh)
}

fn mean_square(v: &[f64]) -> f64 {
    v.iter().map(|&x| x * x).sum::<f64>() / v.len() as f64
}

/// Four-level decomposition of the masked patch (off-mask pixels are zero
/// by construction, so the filters see background zeros). Requires a patch
/// side of at least 2^4.
pub fn wavelet_energies(patch: &RoiPatch) -> Result<WaveletEnergies, TextureError> {
    let side = patch.side();
    if side < 1 << WAVELET_LEVELS {
        return Err(TextureError::PatchTooSmall {
            needed: 1 << WAVELET_LEVELS,
            got: side,
        });
    }
    let mut current: Vec<f64> = patch.image.data().to_vec();
    let (mut w, mut h) = (side, side);
    let mut energies = [[0.0; 4]; WAVELET_LEVELS];
    let mut counts = [0usize; WAVELET_LEVELS];
    for lvl in 0..WAVELET_LEVELS {
        let (ll, lh, hl, hh, ow, oh) = haar_step(&current, w, h);
        energies[lvl] = [
            mean_square(&ll),
            mean_square(&lh),
            mean_square(&hl),
            mean_square(&hh),
        ];
        counts[lvl] = ow * oh;
        current = ll;
        w = ow;
        h = oh;
    }
    Ok(WaveletEnergies { energies, counts })
}

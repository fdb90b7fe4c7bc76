//! Causal four-neighbor autoregressive texture model.

use super::TextureError;
use crate::fmath as fm;
use crate::roi::RoiPatch;

pub const AR_FEATURE_COUNT: usize = 5;

/// Minimum number of pixels with all four causal neighbors in-mask.
pub const AR_MIN_PIXELS: usize = 50;

const RIDGE: f64 = 1e-8;

/// Least-squares fit of x(s) = t1*x_W + t2*x_NW + t3*x_N + t4*x_NE + e over
/// masked pixels whose four causal neighbors are masked. Solved by normal
/// equations; a ridge of 1e-8 is added when the Gram matrix is singular.
/// Returns [t1, t2, t3, t4, sigma] with sigma the population standard
/// deviation of the residuals.
pub fn ar_fit(patch: &RoiPatch) -> Result<[f64; AR_FEATURE_COUNT], TextureError> {
    let img = &patch.image;
    let mask = &patch.mask;
    let (w, h) = (img.width(), img.height());

    let mut gram = [[0.0f64; 4]; 4];
    let mut rhs = [0.0f64; 4];
    let mut samples: usize = 0;
    let mut rows: alloc::vec::Vec<([f64; 4], f64)> = alloc::vec::Vec::new();
    for r in 1..h {
        for c in 1..w.saturating_sub(1) {
            if !(mask.get(r, c)
                && mask.get(r, c - 1)
                && mask.get(r - 1, c - 1)
                && mask.get(r - 1, c)
                && mask.get(r - 1, c + 1))
            {
                continue;
            }
            let n = [
                img.get(r, c - 1),
                img.get(r - 1, c - 1),
                img.get(r - 1, c),
                img.get(r - 1, c + 1),
            ];
            let x = img.get(r, c);
            for i in 0..4 {
                for j in 0..4 {
                    gram[i][j] += n[i] * n[j];
                }
                rhs[i] += n[i] * x;
            }
            rows.push((n, x));
            samples += 1;
        }
    }
    if samples < AR_MIN_PIXELS {
        return Err(TextureError::TooFewPixels {
            needed: AR_MIN_PIXELS,
            got: samples,
        });
    }

    let theta = match solve4(gram, rhs) {
        Some(t) => t,
        None => {
            let mut ridged = gram;
            for (i, row) in ridged.iter_mut().enumerate() {
                row[i] += RIDGE;
            }
            solve4(ridged, rhs).expect("ridged Gram matrix is positive definite")
        }
    };

    let mut ss = 0.0;
    for (n, x) in &rows {
        let pred: f64 = n.iter().zip(&theta).map(|(a, b)| a * b).sum();
        let e = x - pred;
        ss += e * e;
    }
    let sigma = fm::sqrt(ss / samples as f64);
    Ok([theta[0], theta[1], theta[2], theta[3], sigma])
}

/// Gaussian elimination with partial pivoting on a 4x4 system. `None` when
/// a pivot degenerates relative to the matrix scale.
fn solve4(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, &v| acc.max(fm::abs(v)))
        .max(1.0);
    for col in 0..4 {
        let mut pivot = col;
        for row in col + 1..4 {
            if fm::abs(a[row][col]) > fm::abs(a[pivot][col]) {
                pivot = row;
            }
        }
        if fm::abs(a[pivot][col]) <= scale * 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 4];
    for col in (0..4).rev() {
        let mut acc = b[col];
        for k in col + 1..4 {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

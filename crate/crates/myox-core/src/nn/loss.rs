//! Weighted softmax cross-entropy, numerically stable, with the exact
//! logit gradient.


use alloc::vec::Vec;

use super::layers::NnError;
use super::scalar::Scalar;
use super::tensor::Mat;
use crate::fmath as fm;
use crate::roi::SeverityLabel;

/// Loss output: the scalar loss, per-row class probabilities (f64), and
/// the gradient with respect to the logits.
pub struct LossOutput<T> {
    pub loss: f64,
    pub probabilities: Vec<[f64; 3]>,
    pub dlogits: Mat<T>,
}

/// Softmax + categorical cross-entropy with per-sample weights:
/// `loss = sum_i w_i * (-log p_i,true) / sum_i w_i`. The row maximum is
/// subtracted before exponentiation. The gradient is
/// `(w_i / sum w) * (p - onehot)` per row.
pub fn softmax_xent<T: Scalar>(
    logits: &Mat<T>,
    targets: &[SeverityLabel],
    sample_weights: &[f64],
) -> Result<LossOutput<T>, NnError> {
    assert_eq!(logits.rows, targets.len());
    assert_eq!(logits.rows, sample_weights.len());
    assert_eq!(logits.cols, 3, "three-class output layer");
    if !logits.all_finite() {
        return Err(NnError::NonFiniteLogits);
    }
    let weight_sum: f64 = sample_weights.iter().sum();
    debug_assert!(weight_sum > 0.0, "at least one positive sample weight");

    let mut probabilities = Vec::with_capacity(logits.rows);
    let mut dlogits = Mat::zeros(logits.rows, 3);
    let mut loss = 0.0f64;
    for r in 0..logits.rows {
        let row = logits.row(r);
        let z = [row[0].to_f64(), row[1].to_f64(), row[2].to_f64()];
        let m = z[0].max(z[1]).max(z[2]);
        let e = [fm::exp(z[0] - m), fm::exp(z[1] - m), fm::exp(z[2] - m)];
        let sum = e[0] + e[1] + e[2];
        let p = [e[0] / sum, e[1] / sum, e[2] / sum];
        let t = targets[r].index();
        let w = sample_weights[r];
        // log p_t computed from the stable shifted form.
        let log_p = (z[t] - m) - fm::ln(sum);
        loss -= w * log_p;
        let scale = w / weight_sum;
        let drow = dlogits.row_mut(r);
        for k in 0..3 {
            let y = if k == t { 1.0 } else { 0.0 };
            drow[k] = T::from_f64(scale * (p[k] - y));
        }
        probabilities.push(p);
    }
    Ok(LossOutput {
        loss: loss / weight_sum,
        probabilities,
        dlogits,
    })
}

/// Inference-time softmax probabilities only.
pub fn softmax_rows<T: Scalar>(logits: &Mat<T>) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(logits.rows);
    for r in 0..logits.rows {
        let row = logits.row(r);
        let z = [row[0].to_f64(), row[1].to_f64(), row[2].to_f64()];
        let m = z[0].max(z[1]).max(z[2]);
        let e = [fm::exp(z[0] - m), fm::exp(z[1] - m), fm::exp(z[2] - m)];
        let sum = e[0] + e[1] + e[2];
        out.push([e[0] / sum, e[1] / sum, e[2] / sum]);
    }
    out
}

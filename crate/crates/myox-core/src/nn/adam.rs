//! Adam optimizer with bias correction, plus the step-wise learning-rate
//! schedule.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::scalar::Scalar;
use crate::fmath as fm;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-7;
pub const BASE_LR: f64 = 1e-3;

/// Epochs per decade of learning-rate decay.
pub const DECAY_EVERY: u32 = 20;
/// The schedule is defined for epochs 0..100.
pub const MAX_EPOCHS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpochOutOfRange(pub u32);

impl fmt::Display for EpochOutOfRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "epoch {} outside the defined schedule [0, {})", self.0, MAX_EPOCHS)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for EpochOutOfRange {}

/// `lr = 1e-3 * 0.1^(epoch / 20)`, tabulated so the decade values are
/// exactly the decimal constants.
pub fn lr_at_epoch(epoch: u32) -> Result<f64, EpochOutOfRange> {
    const TABLE: [f64; 5] = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7];
    if epoch >= MAX_EPOCHS {
        return Err(EpochOutOfRange(epoch));
    }
    Ok(TABLE[(epoch / DECAY_EVERY) as usize])
}

/// First/second moment accumulators for one parameter tensor.
#[derive(Debug, Clone)]
struct Slot<T> {
    m: Vec<T>,
    v: Vec<T>,
}

/// Optimizer state across all trainable tensors of a model, in the model's
/// canonical parameter order. The step counter is shared.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    slots: Vec<Slot<T>>,
    pub step: u64,
}

impl<T: Scalar> AdamState<T> {
    /// `sizes`: length of each trainable parameter tensor, in visit order.
    pub fn new(sizes: &[usize]) -> Self {
        AdamState {
            slots: sizes
                .iter()
                .map(|&len| Slot {
                    m: vec![T::ZERO; len],
                    v: vec![T::ZERO; len],
                })
                .collect(),
            step: 0,
        }
    }

    pub fn n_slots(&self) -> usize {
        self.slots.len()
    }

    /// Advance the shared step counter; call once per batch before the
    /// per-tensor updates.
    pub fn begin_step(&mut self) {
        self.step += 1;
    }

    /// Bias-corrected Adam update for tensor `slot`:
    /// `m = b1 m + (1-b1) g`, `v = b2 v + (1-b2) g^2`,
    /// `p -= lr * m_hat / (sqrt(v_hat) + eps)`.
    pub fn update(&mut self, slot: usize, params: &mut [T], grads: &[T], lr: f64) {
        let s = &mut self.slots[slot];
        assert_eq!(params.len(), s.m.len(), "parameter/state shape mismatch");
        assert_eq!(params.len(), grads.len(), "parameter/gradient shape mismatch");
        let t = self.step as i32;
        debug_assert!(t >= 1, "begin_step must run before update");
        let b1 = T::from_f64(BETA1);
        let b2 = T::from_f64(BETA2);
        let one_minus_b1 = T::from_f64(1.0 - BETA1);
        let one_minus_b2 = T::from_f64(1.0 - BETA2);
        let corr1 = T::from_f64(1.0 / (1.0 - fm::powi(BETA1, t)));
        let corr2 = T::from_f64(1.0 / (1.0 - fm::powi(BETA2, t)));
        let lr_t = T::from_f64(lr);
        let eps = T::from_f64(EPSILON);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(s.m.iter_mut().zip(s.v.iter_mut()))
        {
            *m = b1 * *m + one_minus_b1 * g;
            *v = b2 * *v + one_minus_b2 * g * g;
            let m_hat = *m * corr1;
            let v_hat = *v * corr2;
            *p -= lr_t * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

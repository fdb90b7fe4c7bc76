//! Algorithmic core for grading muscle involvement from segmented MRI patches.
//!
//! Everything in this crate is pure computation on in-memory data: domain
//! types, a deterministic splittable RNG, ROI preprocessing, the handcrafted
//! texture feature bank, a small convolutional / dense network stack with
//! exact backpropagation, training-time augmentation, and the evaluation
//! machinery for subject-level leave-one-out cross-validation.
//!
//! File formats, PNG/CSV IO, the phantom dataset generator and the CLI live
//! in the companion `myox` crate. This crate is `no_std`-compatible
//! (`default-features = false, features = ["libm"]`); it requires `alloc`.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("myox-core needs either the `std` or the `libm` feature");

pub mod augment;
pub mod eval;
mod fmath;
pub mod image;
pub mod nn;
pub mod preprocess;
pub mod rng;
pub mod roi;
pub mod texture;
pub mod train;

pub use image::{BinaryMask, GrayImage};
pub use rng::Rng;
pub use roi::{MuscleId, RoiPatch, RoiRecord, SeverityLabel, Side, TargetMuscle};

//! The handcrafted texture feature bank: 355 features per ROI, computed on
//! the original-resolution masked patch.
//!
//! Families and registry order:
//!
//! | family    | count | contents                                          |
//! |-----------|-------|----------------------------------------------------|
//! | histogram | 9     | mean, variance, skew, kurtosis, p01/p10/p50/p90/p99 |
//! | gradient  | 5     | magnitude mean/variance/skew/kurtosis, nonzero frac |
//! | glcm      | 220   | 11 stats x 4 directions x 5 distances               |
//! | rlm       | 20    | 5 stats x 4 directions                              |
//! | ar        | 5     | four causal coefficients + residual sigma           |
//! | wavelet   | 16    | LL/LH/HL/HH mean-square energy x 4 levels           |
//! | gabor     | 80    | 5 stats x 4 wavelengths x 4 orientations            |
//!
//! Families whose preconditions fail on a given ROI contribute zeros and a
//! warning instead of failing the whole extraction; only an empty mask is a
//! hard error.

pub mod ar;
pub mod gabor;
pub mod glcm;
pub mod histogram;
pub mod rlm;
mod stats;
pub mod wavelet;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::preprocess::{quantize_levels, DEFAULT_N_LEVELS};
use crate::roi::RoiPatch;

pub use ar::{ar_fit, AR_FEATURE_COUNT};
pub use gabor::{GaborBank, GaborParams, GABOR_FEATURE_COUNT};
pub use glcm::{glcm_compute, glcm_features, GlcmMatrix, GLCM_FEATURE_COUNT};
pub use histogram::{gradient_features, histogram_features, GRADIENT_COUNT, HISTOGRAM_COUNT};
pub use rlm::{rlm_compute, rlm_features, RlmDirection, RlmMatrix, RLM_FEATURE_COUNT};
pub use wavelet::{wavelet_energies, WaveletEnergies, WAVELET_FEATURE_COUNT};

/// Stamped into feature tables so downstream consumers can detect registry
/// changes.
pub const REGISTRY_VERSION: &str = "1";

/// Total feature count: 9 + 5 + 220 + 20 + 5 + 16 + 80.
pub const FEATURE_COUNT: usize = HISTOGRAM_COUNT
    + GRADIENT_COUNT
    + GLCM_FEATURE_COUNT * 4 * 5
    + RLM_FEATURE_COUNT * 4
    + AR_FEATURE_COUNT
    + WAVELET_FEATURE_COUNT
    + GABOR_FEATURE_COUNT;

/// GLCM/RLM direction set as (tag, unit offset) pairs; offsets are (dy, dx)
/// with rows growing downward.
pub const DIRECTIONS: [(&str, (isize, isize)); 4] = [
    ("000", (0, 1)),
    ("045", (-1, 1)),
    ("090", (-1, 0)),
    ("135", (-1, -1)),
];

const GLCM_STAT_NAMES: [&str; GLCM_FEATURE_COUNT] = [
    "asm",
    "contrast",
    "correlation",
    "variance",
    "idm",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "diff_variance",
    "diff_entropy",
];

const RLM_STAT_NAMES: [&str; RLM_FEATURE_COUNT] = ["sre", "lre", "gln", "rln", "rp"];

const GABOR_STAT_NAMES: [&str; gabor::GABOR_STAT_COUNT] =
    ["mean", "std", "skewness", "kurtosis", "energy"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TextureError {
    EmptyMask,
    EmptyInterior,
    EmptyMatrix,
    NoRuns,
    TooFewPixels { needed: usize, got: usize },
    PatchTooSmall { needed: usize, got: usize },
}

impl fmt::Display for TextureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextureError::EmptyMask => write!(f, "mask has no set pixels"),
            TextureError::EmptyInterior => write!(f, "no interior pixels in mask"),
            TextureError::EmptyMatrix => write!(f, "co-occurrence matrix has no pairs"),
            TextureError::NoRuns => write!(f, "run-length matrix has no runs"),
            TextureError::TooFewPixels { needed, got } => {
                write!(f, "needs {needed} eligible pixels, found {got}")
            }
            TextureError::PatchTooSmall { needed, got } => {
                write!(f, "patch side {got} below minimum {needed}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TextureError {}

/// Extraction settings. `n_levels` feeds min-max quantization for the
/// GLCM/RLM families.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureConfig {
    pub n_levels: usize,
    pub glcm_distances: [usize; 5],
    pub gabor: GaborParams,
}

impl Default for TextureConfig {
    fn default() -> Self {
        TextureConfig {
            n_levels: DEFAULT_N_LEVELS,
            glcm_distances: [1, 2, 3, 4, 5],
            gabor: GaborParams::default(),
        }
    }
}

/// Ordered 355-component feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), FEATURE_COUNT);
        FeatureVector { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A family (or GLCM offset) that fell back to sentinel zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyWarning {
    Histogram(TextureError),
    Gradient(TextureError),
    Glcm { direction: &'static str, distance: usize },
    Rlm { direction: &'static str, error: TextureError },
    Ar(TextureError),
    Wavelet(TextureError),
    Gabor(TextureError),
}

impl fmt::Display for FamilyWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyWarning::Histogram(e) => write!(f, "histogram features zeroed: {e}"),
            FamilyWarning::Gradient(e) => write!(f, "gradient features zeroed: {e}"),
            FamilyWarning::Glcm { direction, distance } => write!(
                f,
                "glcm a{direction} d{distance} has no valid pairs; features zeroed"
            ),
            FamilyWarning::Rlm { direction, error } => {
                write!(f, "rlm a{direction} features zeroed: {error}")
            }
            FamilyWarning::Ar(e) => write!(f, "ar features zeroed: {e}"),
            FamilyWarning::Wavelet(e) => write!(f, "wavelet features zeroed: {e}"),
            FamilyWarning::Gabor(e) => write!(f, "gabor features zeroed: {e}"),
        }
    }
}

/// Result of one ROI extraction.
#[derive(Debug, Clone)]
pub struct Extraction {
    pub vector: FeatureVector,
    pub warnings: Vec<FamilyWarning>,
}

/// Configured extractor with the Gabor kernels prebuilt. Immutable and
/// safe to share across worker threads.
#[derive(Debug, Clone)]
pub struct TextureExtractor {
    config: TextureConfig,
    bank: GaborBank,
    names: Vec<String>,
}

impl TextureExtractor {
    pub fn new(config: TextureConfig) -> Self {
        let bank = GaborBank::new(config.gabor.clone());
        let names = feature_names(&config);
        debug_assert_eq!(names.len(), FEATURE_COUNT);
        TextureExtractor {
            config,
            bank,
            names,
        }
    }

    pub fn config(&self) -> &TextureConfig {
        &self.config
    }

    /// Canonical ordered feature names; identical for every extraction
    /// performed with this extractor.
    pub fn feature_names(&self) -> &[String] {
        &self.names
    }

    pub fn extract(&self, patch: &RoiPatch) -> Result<Extraction, TextureError> {
        if patch.mask.count_set() == 0 {
            return Err(TextureError::EmptyMask);
        }
        let mut values = Vec::with_capacity(FEATURE_COUNT);
        let mut warnings = Vec::new();

        match histogram_features(patch) {
            Ok(v) => values.extend_from_slice(&v),
            Err(e) => {
                values.extend_from_slice(&[0.0; HISTOGRAM_COUNT]);
                warnings.push(FamilyWarning::Histogram(e));
            }
        }
        match gradient_features(patch) {
            Ok(v) => values.extend_from_slice(&v),
            Err(e) => {
                values.extend_from_slice(&[0.0; GRADIENT_COUNT]);
                warnings.push(FamilyWarning::Gradient(e));
            }
        }

        let levels = quantize_levels(patch, self.config.n_levels)
            .map_err(|_| TextureError::EmptyMask)?;

        for (tag, (dy, dx)) in DIRECTIONS {
            for &dist in &self.config.glcm_distances {
                let offset = (dy * dist as isize, dx * dist as isize);
                let matrix = glcm_compute(&levels, offset);
                match glcm_features(&matrix) {
                    Ok(v) => values.extend_from_slice(&v),
                    Err(_) => {
                        values.extend_from_slice(&[0.0; GLCM_FEATURE_COUNT]);
                        warnings.push(FamilyWarning::Glcm {
                            direction: tag,
                            distance: dist,
                        });
                    }
                }
            }
        }

        let scanned = levels.valid_count();
        for (dir, (tag, _)) in RlmDirection::ALL.into_iter().zip(DIRECTIONS) {
            let feats = rlm_compute(&levels, dir).and_then(|m| rlm_features(&m, scanned));
            match feats {
                Ok(v) => values.extend_from_slice(&v),
                Err(error) => {
                    values.extend_from_slice(&[0.0; RLM_FEATURE_COUNT]);
                    warnings.push(FamilyWarning::Rlm {
                        direction: tag,
                        error,
                    });
                }
            }
        }

        match ar_fit(patch) {
            Ok(v) => values.extend_from_slice(&v),
            Err(e) => {
                values.extend_from_slice(&[0.0; AR_FEATURE_COUNT]);
                warnings.push(FamilyWarning::Ar(e));
            }
        }

        match wavelet_energies(patch) {
            Ok(we) => values.extend_from_slice(&we.flat()),
            Err(e) => {
                values.extend_from_slice(&[0.0; WAVELET_FEATURE_COUNT]);
                warnings.push(FamilyWarning::Wavelet(e));
            }
        }

        match self.bank.features(patch) {
            Ok(v) => values.extend_from_slice(&v),
            Err(e) => {
                values.extend_from_slice(&[0.0; GABOR_FEATURE_COUNT]);
                warnings.push(FamilyWarning::Gabor(e));
            }
        }

        debug_assert_eq!(values.len(), FEATURE_COUNT);
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Ok(Extraction {
            vector: FeatureVector { values },
            warnings,
        })
    }
}

/// The canonical name list for a configuration, in extraction order.
pub fn feature_names(config: &TextureConfig) -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURE_COUNT);
    for stat in ["mean", "variance", "skewness", "kurtosis"] {
        names.push(format!("hist_{stat}"));
    }
    for p in ["p01", "p10", "p50", "p90", "p99"] {
        names.push(format!("hist_{p}"));
    }
    for stat in ["mean", "variance", "skewness", "kurtosis", "nonzero_frac"] {
        names.push(format!("grad_{stat}"));
    }
    for (tag, _) in DIRECTIONS {
        for dist in config.glcm_distances {
            for stat in GLCM_STAT_NAMES {
                names.push(format!("glcm_a{tag}_d{dist}_{stat}"));
            }
        }
    }
    for (tag, _) in DIRECTIONS {
        for stat in RLM_STAT_NAMES {
            names.push(format!("rlm_a{tag}_{stat}"));
        }
    }
    for i in 1..=4 {
        names.push(format!("ar_theta{i}"));
    }
    names.push("ar_sigma".into());
    for level in 1..=wavelet::WAVELET_LEVELS {
        for sb in ["ll", "lh", "hl", "hh"] {
            names.push(format!("wav_l{level}_{sb}_energy"));
        }
    }
    for wl in config.gabor.wavelengths {
        for or in config.gabor.orientations_deg {
            for stat in GABOR_STAT_NAMES {
                names.push(format!("gabor_w{}_a{:03}_{stat}", wl as u32, or as u32));
            }
        }
    }
    names
}

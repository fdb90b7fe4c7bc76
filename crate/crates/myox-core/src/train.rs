//! In-memory training of one fold: shuffled weighted mini-batches, the
//! Adam/schedule combination, optional augmentation for the image pathway,
//! and held-out evaluation with dropout off.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::augment::{augment_batch, AugmentConfig};
use crate::eval::{class_weights, ClassWeights};
use crate::fmath as fm;
use crate::nn::{
    lr_at_epoch, softmax_rows, softmax_xent, AdamState, Mat, Mode, Model, NnError, Tensor4,
    Variant,
};
use crate::preprocess::{NetInput, NET_SIDE};
use crate::rng::Rng;
use crate::roi::SeverityLabel;

/// Split tag reserved for parameter initialization (epochs use their own
/// index as tag).
pub const INIT_TAG: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    EmptyTrainingSet,
    MissingImage(usize),
    MissingFeatures(usize),
    FeatureLengthMismatch { expected: usize, got: usize },
    MissingEncoderWeights,
    Nn(NnError),
    Schedule(crate::nn::EpochOutOfRange),
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::EmptyTrainingSet => write!(f, "training set is empty"),
            TrainError::MissingImage(i) => write!(f, "sample {i} lacks a network input image"),
            TrainError::MissingFeatures(i) => write!(f, "sample {i} lacks a feature vector"),
            TrainError::FeatureLengthMismatch { expected, got } => {
                write!(f, "feature vector length {got}, expected {expected}")
            }
            TrainError::MissingEncoderWeights => {
                write!(f, "hybrid training requires a stored convolutional encoder")
            }
            TrainError::Nn(e) => write!(f, "network error: {e}"),
            TrainError::Schedule(e) => write!(f, "{e}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TrainError {}

impl From<NnError> for TrainError {
    fn from(e: NnError) -> Self {
        if matches!(e, NnError::MissingEncoderWeights) {
            TrainError::MissingEncoderWeights
        } else {
            TrainError::Nn(e)
        }
    }
}

impl From<crate::nn::EpochOutOfRange> for TrainError {
    fn from(e: crate::nn::EpochOutOfRange) -> Self {
        TrainError::Schedule(e)
    }
}

/// Everything the trainer needs to know about one ROI.
#[derive(Debug, Clone)]
pub struct SamplePayload {
    pub label: SeverityLabel,
    /// Normalized 96x96 patch (ConvNet / Hybrid pathways).
    pub image: Option<NetInput>,
    /// Handcrafted feature vector (TextureFcn / Hybrid pathways).
    pub features: Option<Vec<f64>>,
}

/// Training hyperparameters. Defaults mirror the cross-validation
/// protocol: 100 epochs, batch 25, L2 alpha 0.01, augmentation on for the
/// image pathway.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: u32,
    pub batch_size: usize,
    pub l2_alpha: f64,
    pub c1x1: usize,
    pub feature_len: usize,
    /// Image augmentation for ConvNet training batches; `None` disables.
    pub augment: Option<AugmentConfig>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            batch_size: 25,
            l2_alpha: 0.01,
            c1x1: crate::nn::DEFAULT_C1X1,
            feature_len: crate::nn::TEXTURE_FEATURES,
            augment: Some(AugmentConfig::default()),
        }
    }
}

/// Per-feature z-scoring statistics fitted on the training fold only.
/// Constant features keep a divisor of 1 so they map to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    pub fn fit(rows: &[&[f64]]) -> Self {
        let dim = rows.first().map_or(0, |r| r.len());
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in rows {
            for (m, &v) in mean.iter_mut().zip(*row) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; dim];
        for row in rows {
            for ((s, &v), &m) in var.iter_mut().zip(*row).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        let std = var
            .iter()
            .map(|&s| {
                let sd = fm::sqrt(s / n);
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardization { mean, std }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f32> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| ((v - m) / s) as f32)
            .collect()
    }
}

/// Result of training one fold.
pub struct TrainOutcome {
    pub model: Model<f32>,
    /// Held-out class probabilities, in test-sample order.
    pub test_probabilities: Vec<[f64; 3]>,
    /// Mean weighted loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub class_weights: ClassWeights,
    pub standardization: Option<Standardization>,
}

fn images_tensor(samples: &[&SamplePayload], indices: &[usize]) -> Result<Vec<NetInput>, TrainError> {
    indices
        .iter()
        .map(|&i| {
            samples[i]
                .image
                .clone()
                .ok_or(TrainError::MissingImage(i))
        })
        .collect()
}

fn net_inputs_to_tensor(images: &[NetInput]) -> Tensor4<f32> {
    let mut t = Tensor4::zeros(images.len(), NET_SIDE, NET_SIDE, 1);
    for (i, img) in images.iter().enumerate() {
        t.sample_mut(i).copy_from_slice(img.data());
    }
    t
}

fn feature_matrix(
    samples: &[&SamplePayload],
    standardization: &Standardization,
    expected_len: usize,
) -> Result<Mat<f32>, TrainError> {
    let mut data = Vec::with_capacity(samples.len() * expected_len);
    for (i, s) in samples.iter().enumerate() {
        let row = s.features.as_ref().ok_or(TrainError::MissingFeatures(i))?;
        if row.len() != expected_len {
            return Err(TrainError::FeatureLengthMismatch {
                expected: expected_len,
                got: row.len(),
            });
        }
        data.extend(standardization.apply(row));
    }
    Ok(Mat::from_data(samples.len(), expected_len, data))
}

/// Row-slice a precomputed matrix by index list.
fn gather_rows(mat: &Mat<f32>, indices: &[usize]) -> Mat<f32> {
    let mut out = Mat::zeros(indices.len(), mat.cols);
    for (r, &i) in indices.iter().enumerate() {
        out.row_mut(r).copy_from_slice(mat.row(i));
    }
    out
}

/// Run the (frozen) encoder over samples in evaluation mode, in batches.
fn encode_images(
    model: &mut Model<f32>,
    samples: &[&SamplePayload],
    batch: usize,
) -> Result<Mat<f32>, TrainError> {
    let enc_len = Model::<f32>::encoder_output_len(model.c1x1);
    let mut out = Mat::zeros(samples.len(), enc_len);
    let mut row = 0;
    for chunk in (0..samples.len()).collect::<Vec<_>>().chunks(batch.max(1)) {
        let imgs = images_tensor(samples, chunk)?;
        let tensor = net_inputs_to_tensor(&imgs);
        let encoded = model.forward_encoder(tensor, &mut Mode::Eval)?;
        for r in 0..encoded.rows {
            out.row_mut(row).copy_from_slice(encoded.row(r));
            row += 1;
        }
    }
    Ok(out)
}

/// Train `variant` on the training samples and evaluate the held-out set.
///
/// Randomness is derived from `fold_rng`: the parameter initialization uses
/// the child at `INIT_TAG`, epoch `e` uses the child at tag `e` for its
/// shuffle, augmentation draws and dropout masks, all consumed
/// sequentially. Identical fold data and seed give bitwise-identical
/// outcomes.
pub fn train_fold(
    variant: Variant,
    train: &[SamplePayload],
    test: &[SamplePayload],
    config: &TrainConfig,
    fold_rng: &Rng,
    encoder_donor: Option<&Model<f32>>,
) -> Result<TrainOutcome, TrainError> {
    if train.is_empty() {
        return Err(TrainError::EmptyTrainingSet);
    }
    let train_refs: Vec<&SamplePayload> = train.iter().collect();
    let test_refs: Vec<&SamplePayload> = test.iter().collect();

    let labels: Vec<SeverityLabel> = train.iter().map(|s| s.label).collect();
    let weights = class_weights(&labels);

    // Feature standardization from training rows only.
    let standardization = if variant.uses_features() {
        let rows: Vec<&[f64]> = train_refs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.features
                    .as_deref()
                    .ok_or(TrainError::MissingFeatures(i))
            })
            .collect::<Result<_, _>>()?;
        Some(Standardization::fit(&rows))
    } else {
        None
    };

    let mut init_rng = fold_rng.split(INIT_TAG);
    let mut model: Model<f32> = match variant {
        Variant::ConvNet => Model::build_convnet(config.c1x1, &mut init_rng),
        Variant::TextureFcn => Model::build_texture_fcn(config.feature_len, &mut init_rng),
        Variant::Hybrid => {
            let donor = encoder_donor.ok_or(TrainError::MissingEncoderWeights)?;
            Model::build_hybrid(donor, config.feature_len, &mut init_rng)?
        }
    };

    // Head inputs that can be precomputed once per fold: standardized
    // features, and for Hybrid the frozen encoder outputs.
    let (train_head_input, test_head_input): (Option<Mat<f32>>, Option<Mat<f32>>) = match variant
    {
        Variant::ConvNet => (None, None),
        Variant::TextureFcn => {
            let st = standardization.as_ref().unwrap();
            (
                Some(feature_matrix(&train_refs, st, config.feature_len)?),
                if test.is_empty() {
                    Some(Mat::zeros(0, config.feature_len))
                } else {
                    Some(feature_matrix(&test_refs, st, config.feature_len)?)
                },
            )
        }
        Variant::Hybrid => {
            let st = standardization.as_ref().unwrap();
            let train_feats = feature_matrix(&train_refs, st, config.feature_len)?;
            let train_enc = encode_images(&mut model, &train_refs, config.batch_size)?;
            let train_full = crate::nn::concat_columns(&train_enc, &train_feats);
            let test_full = if test.is_empty() {
                Mat::zeros(0, train_full.cols)
            } else {
                let test_feats = feature_matrix(&test_refs, st, config.feature_len)?;
                let test_enc = encode_images(&mut model, &test_refs, config.batch_size)?;
                crate::nn::concat_columns(&test_enc, &test_feats)
            };
            (Some(train_full), Some(test_full))
        }
    };

    let mut adam: AdamState<f32> = AdamState::new(&model.trainable_sizes());
    let mut epoch_losses = Vec::with_capacity(config.epochs as usize);
    let n_train = train.len();

    for epoch in 0..config.epochs {
        let lr = lr_at_epoch(epoch)?;
        let mut epoch_rng = fold_rng.split(epoch as u64);
        let mut order: Vec<usize> = (0..n_train).collect();
        epoch_rng.shuffle(&mut order);

        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for batch_idx in order.chunks(config.batch_size) {
            let batch_labels: Vec<SeverityLabel> =
                batch_idx.iter().map(|&i| train[i].label).collect();
            let sample_weights: Vec<f64> = batch_labels
                .iter()
                .map(|l| weights.weights[l.index()])
                .collect();

            let logits = match variant {
                Variant::ConvNet => {
                    let mut imgs = images_tensor(&train_refs, batch_idx)?;
                    if let Some(aug) = &config.augment {
                        augment_batch(&mut imgs, aug, &mut epoch_rng);
                    }
                    let tensor = net_inputs_to_tensor(&imgs);
                    model.forward(
                        Some(tensor),
                        None,
                        &mut Mode::Train {
                            rng: &mut epoch_rng,
                        },
                    )?
                }
                _ => {
                    let input = gather_rows(train_head_input.as_ref().unwrap(), batch_idx);
                    model.forward_head(
                        input,
                        &mut Mode::Train {
                            rng: &mut epoch_rng,
                        },
                    )?
                }
            };

            let out = softmax_xent(&logits, &batch_labels, &sample_weights)?;
            loss_sum += out.loss;
            batches += 1;

            model.zero_grads();
            model.backward(out.dlogits);
            model.apply_l2(config.l2_alpha);

            adam.begin_step();
            let mut slot = 0;
            let lr_now = lr;
            let adam_ref = &mut adam;
            model.visit_trainable(|view| {
                adam_ref.update(slot, view.values, view.grads, lr_now);
                slot += 1;
            });
        }
        epoch_losses.push(if batches > 0 {
            loss_sum / batches as f64
        } else {
            0.0
        });
    }

    // Held-out evaluation: no augmentation, no dropout.
    let test_probabilities = match variant {
        Variant::ConvNet => {
            let mut probs = Vec::with_capacity(test.len());
            let all: Vec<usize> = (0..test.len()).collect();
            for chunk in all.chunks(config.batch_size.max(1)) {
                let imgs = images_tensor(&test_refs, chunk)?;
                let tensor = net_inputs_to_tensor(&imgs);
                let logits = model.forward(Some(tensor), None, &mut Mode::Eval)?;
                probs.extend(softmax_rows(&logits));
            }
            probs
        }
        _ => {
            let input = test_head_input.unwrap();
            if input.rows == 0 {
                Vec::new()
            } else {
                let logits = model.forward_head(input, &mut Mode::Eval)?;
                softmax_rows(&logits)
            }
        }
    };

    Ok(TrainOutcome {
        model,
        test_probabilities,
        epoch_losses,
        class_weights: weights,
        standardization,
    })
}

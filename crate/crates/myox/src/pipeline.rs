//! End-to-end experiment orchestration: feature extraction over a
//! manifest, subject-level cross-validation of the three variants, the
//! per-fold model store, and report emission.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use myox_core::eval::{aggregate, argmax_label, make_folds, FoldPlan, FoldReport, Prediction};
use myox_core::nn::{Model, Variant};
use myox_core::preprocess::net_input_for_roi;
use myox_core::rng::Rng;
use myox_core::roi::RoiRecord;
use myox_core::texture::{feature_names, TextureConfig, TextureExtractor};
use myox_core::train::{train_fold, SamplePayload, TrainConfig, TrainOutcome};
use rayon::prelude::*;
use thiserror::Error;

use crate::feature_table::{
    read_feature_table, write_feature_table, FeatureLookup, FeatureRow, FeatureTableError,
};
use crate::manifest::{load_manifest, resolve_path, ManifestError};
use crate::model_store::{ModelStore, ModelStoreError};
use crate::pngio::{load_gray, load_mask};
use crate::report::{build_report, write_report, ExperimentReport, ReportConfig, ReportError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("ROI ({subject_id}, slice {slice_index}, {muscle}): {detail}")]
    Roi {
        subject_id: String,
        slice_index: u32,
        muscle: String,
        detail: String,
    },
    #[error(transparent)]
    FeatureTable(#[from] FeatureTableError),
    #[error("variant {0} requires a feature table (--features)")]
    MissingFeatureTable(&'static str),
    #[error("fold {fold} (held-out {subject}): {detail}")]
    Fold {
        fold: usize,
        subject: String,
        detail: String,
    },
    #[error("hybrid run requires the per-fold convolutional encoder at {path} (run the convnet cross-validation into the same output directory first)")]
    MissingEncoderWeights { path: PathBuf },
    #[error(transparent)]
    Store(#[from] ModelStoreError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    fn for_roi(record: &RoiRecord, detail: impl std::fmt::Display) -> Self {
        PipelineError::Roi {
            subject_id: record.subject_id.clone(),
            slice_index: record.slice_index,
            muscle: record.muscle.to_string(),
            detail: detail.to_string(),
        }
    }
}

/// Everything a cross-validation or training run needs.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    pub variant: Variant,
    pub out_dir: PathBuf,
    pub features: Option<PathBuf>,
    pub seed: u64,
    pub epochs: u32,
    pub batch_size: usize,
    pub l2_alpha: f64,
    pub c1x1: usize,
    pub n_levels: usize,
    pub augment: bool,
    pub jobs: usize,
}

impl ExperimentConfig {
    pub fn new(manifest: PathBuf, variant: Variant, out_dir: PathBuf) -> Self {
        ExperimentConfig {
            manifest,
            variant,
            out_dir,
            features: None,
            seed: 1,
            epochs: 100,
            batch_size: 25,
            l2_alpha: 0.01,
            c1x1: myox_core::nn::DEFAULT_C1X1,
            n_levels: myox_core::preprocess::DEFAULT_N_LEVELS,
            augment: true,
            jobs: 0,
        }
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            l2_alpha: self.l2_alpha,
            c1x1: self.c1x1,
            feature_len: myox_core::nn::TEXTURE_FEATURES,
            augment: self.augment.then(Default::default),
        }
    }

    fn report_config(&self) -> ReportConfig {
        ReportConfig {
            manifest: self.manifest.display().to_string(),
            features: self.features.as_ref().map(|p| p.display().to_string()),
            seed: self.seed,
            epochs: self.epochs,
            batch_size: self.batch_size,
            base_lr: myox_core::nn::BASE_LR,
            lr_decay_factor: 0.1,
            lr_decay_every_epochs: myox_core::nn::adam::DECAY_EVERY,
            l2_alpha: self.l2_alpha,
            c1x1: self.c1x1,
            n_levels: self.n_levels,
            augment: self.augment,
            jobs: self.jobs,
            registry_version: myox_core::texture::REGISTRY_VERSION.to_string(),
            code_version: crate::report::CODE_VERSION.to_string(),
        }
    }

    pub fn model_store(&self) -> ModelStore {
        ModelStore::new(self.out_dir.join("models"))
    }

    pub fn results_json_path(&self) -> PathBuf {
        self.out_dir
            .join(format!("results_{}.json", self.variant.name()))
    }

    pub fn results_text_path(&self) -> PathBuf {
        self.out_dir
            .join(format!("results_{}.txt", self.variant.name()))
    }
}

fn in_pool<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    if jobs == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool")
            .install(f)
    }
}

/// Extract the feature table for every manifest row, in manifest order.
/// Returns the rows and the number of ROIs that produced family warnings.
pub fn run_extract(
    manifest_path: &Path,
    out_path: &Path,
    n_levels: usize,
    jobs: usize,
) -> Result<(usize, usize), PipelineError> {
    let records = load_manifest(manifest_path)?;
    let config = TextureConfig {
        n_levels,
        ..TextureConfig::default()
    };
    let extractor = TextureExtractor::new(config.clone());
    let rows: Result<Vec<(FeatureRow, usize)>, PipelineError> = in_pool(jobs, || {
        records
            .par_iter()
            .map(|record| {
                let image = load_gray(&resolve_path(manifest_path, &record.image_path))
                    .map_err(|e| PipelineError::for_roi(record, e))?;
                let mask = load_mask(&resolve_path(manifest_path, &record.mask_path))
                    .map_err(|e| PipelineError::for_roi(record, e))?;
                let patch = myox_core::preprocess::crop_square_bbox(&image, &mask)
                    .map_err(|e| PipelineError::for_roi(record, e))?;
                let extraction = extractor
                    .extract(&patch)
                    .map_err(|e| PipelineError::for_roi(record, e))?;
                Ok((
                    FeatureRow {
                        subject_id: record.subject_id.clone(),
                        slice_index: record.slice_index,
                        muscle: record.muscle,
                        label: record.label,
                        values: extraction.vector.values().to_vec(),
                    },
                    usize::from(!extraction.warnings.is_empty()),
                ))
            })
            .collect()
    });
    let rows = rows?;
    let warned: usize = rows.iter().map(|(_, w)| w).sum();
    let rows: Vec<FeatureRow> = rows.into_iter().map(|(r, _)| r).collect();
    write_feature_table(out_path, &config, extractor.feature_names(), &rows)?;
    Ok((rows.len(), warned))
}

/// In-memory per-record payloads plus index lookup.
struct Dataset {
    payloads: Vec<SamplePayload>,
    index: HashMap<(String, u32, myox_core::roi::MuscleId), usize>,
}

impl Dataset {
    fn payloads_for(&self, records: &[RoiRecord]) -> Vec<SamplePayload> {
        records
            .iter()
            .map(|r| {
                let idx = self.index[&(r.subject_id.clone(), r.slice_index, r.muscle)];
                self.payloads[idx].clone()
            })
            .collect()
    }
}

fn load_dataset(
    config: &ExperimentConfig,
    records: &[RoiRecord],
) -> Result<Dataset, PipelineError> {
    let needs_images = config.variant.uses_images();
    let needs_features = config.variant.uses_features();

    let lookup: Option<FeatureLookup> = if needs_features {
        let table_path = config
            .features
            .clone()
            .ok_or(PipelineError::MissingFeatureTable(config.variant.name()))?;
        let names = feature_names(&TextureConfig {
            n_levels: config.n_levels,
            ..TextureConfig::default()
        });
        let rows = read_feature_table(&table_path, &names)?;
        Some(FeatureLookup::new(rows))
    } else {
        None
    };

    let payloads: Result<Vec<SamplePayload>, PipelineError> = in_pool(config.jobs, || {
        records
            .par_iter()
            .map(|record| {
                let image = if needs_images {
                    let img = load_gray(&resolve_path(&config.manifest, &record.image_path))
                        .map_err(|e| PipelineError::for_roi(record, e))?;
                    let mask = load_mask(&resolve_path(&config.manifest, &record.mask_path))
                        .map_err(|e| PipelineError::for_roi(record, e))?;
                    Some(
                        net_input_for_roi(&img, &mask)
                            .map_err(|e| PipelineError::for_roi(record, e))?,
                    )
                } else {
                    None
                };
                let features = match &lookup {
                    Some(lk) => Some(lk.get(record).cloned()?),
                    None => None,
                };
                Ok(SamplePayload {
                    label: record.label,
                    image,
                    features,
                })
            })
            .collect()
    });
    let payloads = payloads?;
    let index = records
        .iter()
        .enumerate()
        .map(|(i, r)| ((r.subject_id.clone(), r.slice_index, r.muscle), i))
        .collect();
    Ok(Dataset { payloads, index })
}

fn fold_error(plan: &FoldPlan, detail: impl std::fmt::Display) -> PipelineError {
    PipelineError::Fold {
        fold: plan.fold_index,
        subject: plan.held_out_subject.clone(),
        detail: detail.to_string(),
    }
}

fn run_one_fold(
    config: &ExperimentConfig,
    dataset: &Dataset,
    plan: &FoldPlan,
    store: &ModelStore,
) -> Result<FoldReport, PipelineError> {
    let donor: Option<Model<f32>> = if config.variant == Variant::Hybrid {
        let key = &plan.held_out_subject;
        if !store.exists(Variant::ConvNet.name(), key) {
            return Err(PipelineError::MissingEncoderWeights {
                path: store.path_for(Variant::ConvNet.name(), key),
            });
        }
        Some(store.load(Variant::ConvNet.name(), key)?)
    } else {
        None
    };

    let train = dataset.payloads_for(&plan.train_records);
    let test = dataset.payloads_for(&plan.test_records);
    let fold_rng = Rng::new(config.seed).split(plan.fold_index as u64);
    let outcome: TrainOutcome = train_fold(
        config.variant,
        &train,
        &test,
        &config.train_config(),
        &fold_rng,
        donor.as_ref(),
    )
    .map_err(|e| fold_error(plan, e))?;

    if config.variant == Variant::ConvNet {
        store.save(
            Variant::ConvNet.name(),
            &plan.held_out_subject,
            &outcome.model,
        )?;
    }

    let predictions: Vec<Prediction> = plan
        .test_records
        .iter()
        .zip(&outcome.test_probabilities)
        .map(|(record, &probabilities)| Prediction {
            record: record.clone(),
            truth: record.label,
            predicted: argmax_label(&probabilities),
            probabilities,
        })
        .collect();
    Ok(FoldReport::from_predictions(
        plan.fold_index,
        plan.held_out_subject.clone(),
        predictions,
    ))
}

/// Subject-level leave-one-out cross-validation. Returns the report after
/// writing the JSON and text result files (plus per-fold ConvNet models in
/// the store).
pub fn run_crossval(config: &ExperimentConfig) -> Result<ExperimentReport, PipelineError> {
    let records = load_manifest(&config.manifest)?;
    let folds = make_folds(&records).map_err(|e| PipelineError::Eval(e.to_string()))?;
    let dataset = load_dataset(config, &records)?;
    std::fs::create_dir_all(&config.out_dir)?;
    let store = config.model_store();

    let fold_reports: Result<Vec<FoldReport>, PipelineError> = in_pool(config.jobs, || {
        folds
            .par_iter()
            .map(|plan| {
                let report = run_one_fold(config, &dataset, plan, &store)?;
                let acc = if report.confusion.total() > 0 {
                    report.confusion.trace() as f64 / report.confusion.total() as f64
                } else {
                    0.0
                };
                eprintln!(
                    "[{}] fold {}/{} held-out {} accuracy {:.4}",
                    config.variant.name(),
                    plan.fold_index + 1,
                    folds.len(),
                    plan.held_out_subject,
                    acc
                );
                Ok(report)
            })
            .collect()
    });
    let mut fold_reports = fold_reports?;
    fold_reports.sort_by_key(|r| r.fold_index);

    let agg = aggregate(&fold_reports).map_err(|e| PipelineError::Eval(e.to_string()))?;
    let report = build_report(
        config.variant.name(),
        config.report_config(),
        &agg,
        &fold_reports,
    );
    write_report(&config.results_json_path(), &report)?;
    std::fs::write(
        config.results_text_path(),
        crate::report::render_text(&report),
    )?;
    Ok(report)
}

/// Train a single model on the full manifest (no held-out subjects) and
/// store it under the `full` key. The returned report evaluates the fit on
/// the training data itself.
pub fn run_train(config: &ExperimentConfig) -> Result<ExperimentReport, PipelineError> {
    let records = load_manifest(&config.manifest)?;
    let dataset = load_dataset(config, &records)?;
    std::fs::create_dir_all(&config.out_dir)?;
    let store = config.model_store();

    let donor: Option<Model<f32>> = if config.variant == Variant::Hybrid {
        if !store.exists(Variant::ConvNet.name(), "full") {
            return Err(PipelineError::MissingEncoderWeights {
                path: store.path_for(Variant::ConvNet.name(), "full"),
            });
        }
        Some(store.load(Variant::ConvNet.name(), "full")?)
    } else {
        None
    };

    let payloads = dataset.payloads_for(&records);
    let fold_rng = Rng::new(config.seed).split(0);
    let outcome = in_pool(config.jobs, || {
        train_fold(
            config.variant,
            &payloads,
            &payloads,
            &config.train_config(),
            &fold_rng,
            donor.as_ref(),
        )
    })
    .map_err(|e| PipelineError::Fold {
        fold: 0,
        subject: "full".into(),
        detail: e.to_string(),
    })?;

    store.save(config.variant.name(), "full", &outcome.model)?;

    let predictions: Vec<Prediction> = records
        .iter()
        .zip(&outcome.test_probabilities)
        .map(|(record, &probabilities)| Prediction {
            record: record.clone(),
            truth: record.label,
            predicted: argmax_label(&probabilities),
            probabilities,
        })
        .collect();
    let fold = FoldReport::from_predictions(0, "full".into(), predictions);
    let agg = aggregate(core::slice::from_ref(&fold))
        .map_err(|e| PipelineError::Eval(e.to_string()))?;
    let report = build_report(
        &format!("{}_train", config.variant.name()),
        config.report_config(),
        &agg,
        core::slice::from_ref(&fold),
    );
    let json_path = config
        .out_dir
        .join(format!("results_{}_train.json", config.variant.name()));
    write_report(&json_path, &report)?;
    Ok(report)
}

/// Percentage of label classes present in a manifest, for summaries.
pub fn label_histogram(records: &[RoiRecord]) -> [usize; 3] {
    let mut counts = [0usize; 3];
    for r in records {
        counts[r.label.index()] += 1;
    }
    counts
}

//! The extracted-feature table: one CSV row per ROI with identity columns
//! followed by the 355 canonical feature columns. A leading comment line
//! records the registry version and extraction parameters so tables from
//! different configurations are never silently mixed.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use myox_core::roi::{MuscleId, RoiRecord, SeverityLabel, Side, TargetMuscle};
use myox_core::texture::{TextureConfig, FEATURE_COUNT, REGISTRY_VERSION};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureTableError {
    #[error("feature table not found: {0}")]
    MissingFile(PathBuf),
    #[error("feature table schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("row {row}: {detail}")]
    BadRow { row: usize, detail: String },
    #[error("no feature row for ({subject_id}, slice {slice_index}, {muscle})")]
    MissingRoi {
        subject_id: String,
        slice_index: u32,
        muscle: MuscleId,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One stored row.
#[derive(Debug, Clone)]
pub struct FeatureRow {
    pub subject_id: String,
    pub slice_index: u32,
    pub muscle: MuscleId,
    pub label: SeverityLabel,
    pub values: Vec<f64>,
}

fn metadata_line(config: &TextureConfig) -> String {
    let wl: Vec<String> = config
        .gabor
        .wavelengths
        .iter()
        .map(|w| format!("{w}"))
        .collect();
    let ors: Vec<String> = config
        .gabor
        .orientations_deg
        .iter()
        .map(|o| format!("{o}"))
        .collect();
    format!(
        "# registry_version={REGISTRY_VERSION} n_levels={} glcm_distances={:?} gabor_wavelengths=[{}] gabor_orientations=[{}] gabor_bandwidth={} gabor_aspect={}",
        config.n_levels,
        config.glcm_distances,
        wl.join(","),
        ors.join(","),
        config.gabor.bandwidth_octaves,
        config.gabor.aspect_ratio,
    )
}

/// Write the table. Floats use Rust's shortest round-trip formatting, so
/// reading the table back reproduces every value bit for bit.
pub fn write_feature_table(
    path: &Path,
    config: &TextureConfig,
    names: &[String],
    rows: &[FeatureRow],
) -> Result<(), FeatureTableError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", metadata_line(config))?;
    write!(w, "subject_id,slice_index,muscle,side,label")?;
    for name in names {
        write!(w, ",{name}")?;
    }
    writeln!(w)?;
    for r in rows {
        write!(
            w,
            "{},{},{},{},{}",
            r.subject_id,
            r.slice_index,
            r.muscle.muscle.code(),
            r.muscle.side.code(),
            r.label.index()
        )?;
        for v in &r.values {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a table back, validating the column names against the expected
/// registry.
pub fn read_feature_table(
    path: &Path,
    expected_names: &[String],
) -> Result<Vec<FeatureRow>, FeatureTableError> {
    if !path.is_file() {
        return Err(FeatureTableError::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_path(path)?;
    {
        let headers = reader.headers()?;
        let got: Vec<&str> = headers.iter().collect();
        if got.len() != 5 + expected_names.len() {
            return Err(FeatureTableError::SchemaMismatch(format!(
                "{} columns, expected {}",
                got.len(),
                5 + expected_names.len()
            )));
        }
        for (i, name) in expected_names.iter().enumerate() {
            if got[5 + i] != name {
                return Err(FeatureTableError::SchemaMismatch(format!(
                    "feature column {} is {:?}, expected {:?} (registry drift?)",
                    i, got[5 + i], name
                )));
            }
        }
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row_no = i + 3; // comment + header occupy the first two lines
        let rec = rec?;
        let bad = |detail: String| FeatureTableError::BadRow {
            row: row_no,
            detail,
        };
        let muscle = TargetMuscle::from_code(rec.get(2).unwrap_or_default())
            .ok_or_else(|| bad(format!("unknown muscle {:?}", rec.get(2))))?;
        let side = Side::from_code(rec.get(3).unwrap_or_default())
            .ok_or_else(|| bad(format!("unknown side {:?}", rec.get(3))))?;
        let label_idx: usize = rec
            .get(4)
            .unwrap_or_default()
            .parse()
            .map_err(|_| bad(format!("bad label {:?}", rec.get(4))))?;
        let label = SeverityLabel::from_index(label_idx)
            .ok_or_else(|| bad(format!("label {label_idx} out of range")))?;
        let mut values = Vec::with_capacity(FEATURE_COUNT);
        for k in 0..expected_names.len() {
            let raw = rec.get(5 + k).unwrap_or_default();
            let v: f64 = raw
                .parse()
                .map_err(|_| bad(format!("bad value {raw:?} in column {k}")))?;
            values.push(v);
        }
        rows.push(FeatureRow {
            subject_id: rec.get(0).unwrap_or_default().to_string(),
            slice_index: rec
                .get(1)
                .unwrap_or_default()
                .parse()
                .map_err(|_| bad(format!("bad slice_index {:?}", rec.get(1))))?,
            muscle: MuscleId::new(muscle, side),
            label,
            values,
        });
    }
    Ok(rows)
}

/// Index rows by ROI key and look records up, failing on gaps.
pub struct FeatureLookup {
    map: HashMap<(String, u32, MuscleId), Vec<f64>>,
}

impl FeatureLookup {
    pub fn new(rows: Vec<FeatureRow>) -> Self {
        let map = rows
            .into_iter()
            .map(|r| ((r.subject_id, r.slice_index, r.muscle), r.values))
            .collect();
        FeatureLookup { map }
    }

    pub fn get(&self, record: &RoiRecord) -> Result<&Vec<f64>, FeatureTableError> {
        self.map
            .get(&(
                record.subject_id.clone(),
                record.slice_index,
                record.muscle,
            ))
            .ok_or_else(|| FeatureTableError::MissingRoi {
                subject_id: record.subject_id.clone(),
                slice_index: record.slice_index,
                muscle: record.muscle,
            })
    }
}

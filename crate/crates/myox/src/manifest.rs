//! CSV manifest of ROI records.
//!
//! Format: UTF-8 CSV with header
//! `subject_id,slice_index,muscle,side,label,image_path,mask_path`,
//! muscle in {VL,VM,VI,RF}, side in {L,R}, label in {0,1,2}; file paths
//! are relative to the manifest's directory.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use myox_core::roi::{MuscleId, RoiRecord, SeverityLabel, Side, TargetMuscle};
use thiserror::Error;

pub const MANIFEST_HEADER: [&str; 7] = [
    "subject_id",
    "slice_index",
    "muscle",
    "side",
    "label",
    "image_path",
    "mask_path",
];

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest file not found: {0}")]
    MissingFile(PathBuf),
    #[error("manifest schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("duplicate ROI ({subject_id}, slice {slice_index}, {muscle}) at row {row}")]
    DuplicateRoi {
        subject_id: String,
        slice_index: u32,
        muscle: MuscleId,
        row: usize,
    },
    #[error("unknown label {value:?} at row {row} (expected 0, 1 or 2)")]
    UnknownLabel { value: String, row: usize },
    #[error("row {row} references a missing file: {path}")]
    MissingRoiFile { row: usize, path: PathBuf },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn parse_row(row: usize, record: &csv::StringRecord) -> Result<RoiRecord, ManifestError> {
    if record.len() != MANIFEST_HEADER.len() {
        return Err(ManifestError::SchemaMismatch(format!(
            "row {row} has {} fields, expected {}",
            record.len(),
            MANIFEST_HEADER.len()
        )));
    }
    let field = |i: usize| record.get(i).unwrap_or_default();
    let slice_index: u32 = field(1).parse().map_err(|_| {
        ManifestError::SchemaMismatch(format!("row {row}: bad slice_index {:?}", field(1)))
    })?;
    let muscle = TargetMuscle::from_code(field(2)).ok_or_else(|| {
        ManifestError::SchemaMismatch(format!("row {row}: unknown muscle code {:?}", field(2)))
    })?;
    let side = Side::from_code(field(3)).ok_or_else(|| {
        ManifestError::SchemaMismatch(format!("row {row}: unknown side code {:?}", field(3)))
    })?;
    let label_idx: usize = field(4).parse().map_err(|_| ManifestError::UnknownLabel {
        value: field(4).to_string(),
        row,
    })?;
    let label = SeverityLabel::from_index(label_idx).ok_or_else(|| ManifestError::UnknownLabel {
        value: field(4).to_string(),
        row,
    })?;
    Ok(RoiRecord {
        subject_id: field(0).to_string(),
        slice_index,
        muscle: MuscleId::new(muscle, side),
        label,
        image_path: field(5).to_string(),
        mask_path: field(6).to_string(),
    })
}

/// Resolve a manifest-relative path against the manifest's directory.
pub fn resolve_path(manifest: &Path, relative: &str) -> PathBuf {
    manifest
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .join(relative)
}

/// Load and validate a manifest. Rows come back in file order; duplicate
/// (subject, slice, muscle) keys, unknown labels/codes, and dangling file
/// references are rejected.
pub fn load_manifest(path: &Path) -> Result<Vec<RoiRecord>, ManifestError> {
    if !path.is_file() {
        return Err(ManifestError::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_path(path)?;
    {
        let headers = reader.headers()?;
        let got: Vec<&str> = headers.iter().collect();
        if got != MANIFEST_HEADER {
            return Err(ManifestError::SchemaMismatch(format!(
                "header {got:?} does not match {MANIFEST_HEADER:?}"
            )));
        }
    }
    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 2; // header is line 1
        let record = parse_row(row_no, &row?)?;
        let key = (
            record.subject_id.clone(),
            record.slice_index,
            record.muscle,
        );
        if !seen.insert(key) {
            return Err(ManifestError::DuplicateRoi {
                subject_id: record.subject_id,
                slice_index: record.slice_index,
                muscle: record.muscle,
                row: row_no,
            });
        }
        for rel in [&record.image_path, &record.mask_path] {
            let full = resolve_path(path, rel);
            if !full.is_file() {
                return Err(ManifestError::MissingRoiFile {
                    row: row_no,
                    path: full,
                });
            }
        }
        records.push(record);
    }
    Ok(records)
}

/// Write a manifest (records in the given order).
pub fn write_manifest(path: &Path, records: &[RoiRecord]) -> Result<(), ManifestError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{}", MANIFEST_HEADER.join(","))?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.subject_id,
            r.slice_index,
            r.muscle.muscle.code(),
            r.muscle.side.code(),
            r.label.index(),
            r.image_path,
            r.mask_path
        )?;
    }
    w.flush()?;
    Ok(())
}

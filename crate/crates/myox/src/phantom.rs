//! Synthetic labeled muscle-patch datasets.
//!
//! The generator imitates the qualitative appearance of graded muscle
//! involvement on T1-weighted images: healthy muscle is a dark, lightly
//! speckled region; mild involvement shows faint narrow hyperintense
//! bands, a thin bright rim on the Vastus lateralis, or a small central
//! bright spot on the Rectus femoris; moderate/severe involvement shows
//! wide, high-contrast alternating bands across most of the ROI. Masks are
//! randomized ellipses. No claim of clinical fidelity is made; the point
//! is a reproducible, desk-scale stand-in with class structure that both
//! the texture features and the convolutional model can learn.

use std::fs;
use std::path::{Path, PathBuf};

use myox_core::image::{BinaryMask, GrayImage};
use myox_core::rng::Rng;
use myox_core::roi::{MuscleId, RoiRecord, SeverityLabel, TargetMuscle};
use thiserror::Error;

use crate::manifest::write_manifest;
use crate::pngio::{save_gray8, save_mask};

#[derive(Debug, Error)]
pub enum PhantomError {
    #[error("io failure at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Png(#[from] crate::pngio::PngError),
    #[error("{0}")]
    Manifest(#[from] crate::manifest::ManifestError),
    #[error("phantom needs at least 3 subjects, got {0}")]
    TooFewSubjects(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomConfig {
    pub subjects: usize,
    pub slices_per_subject: u32,
    pub seed: u64,
}

impl Default for PhantomConfig {
    fn default() -> Self {
        PhantomConfig {
            subjects: 26,
            slices_per_subject: 8,
            seed: 1,
        }
    }
}

impl PhantomConfig {
    /// Class split: as even as possible, remainder to the lower grades
    /// (26 subjects -> 9 healthy, 9 mild, 8 moderate/severe).
    pub fn class_counts(&self) -> [usize; 3] {
        let base = self.subjects / 3;
        let rem = self.subjects % 3;
        [
            base + usize::from(rem > 0),
            base + usize::from(rem > 1),
            base,
        ]
    }

    pub fn severity_of_subject(&self, index: usize) -> SeverityLabel {
        let counts = self.class_counts();
        if index < counts[0] {
            SeverityLabel::Healthy
        } else if index < counts[0] + counts[1] {
            SeverityLabel::Mild
        } else {
            SeverityLabel::ModerateSevere
        }
    }
}

/// Per-ROI texture parameters drawn from the severity profile.
struct RoiParams {
    side: usize,
    base: f64,
    noise_sigma: f64,
    band_amp: f64,
    band_wavelength: f64,
    band_angle: f64,
    band_phase: f64,
    rim_amp: f64,
    target_amp: f64,
    ellipse_a: f64,
    ellipse_b: f64,
    center_jitter: (f64, f64),
}

fn sample_side(rng: &mut Rng) -> usize {
    // Mostly mid-sized ROIs, occasionally small ones, capped to [11, 105].
    if rng.coin(0.08) {
        14 + rng.next_below(13) // 14..=26
    } else {
        34 + rng.next_below(59) // 34..=92
    }
}

fn roi_params(
    severity: SeverityLabel,
    muscle: MuscleId,
    subject_rng: &Rng,
    slice_rng: &mut Rng,
    base_side: usize,
) -> RoiParams {
    // Subject-level texture identity: band direction and wavelength are
    // stable per subject with small per-slice jitter.
    let mut subject_texture = subject_rng.split(9_000 + muscle.index() as u64);
    let angle = subject_texture.uniform(0.0, core::f64::consts::PI);
    let base = subject_texture.uniform(58.0, 78.0);
    let (mut amp0, wl0, mut noise0, mut rim0, mut target0) = match severity {
        SeverityLabel::Healthy => (0.0, 5.0, 5.0, 0.0, 0.0),
        SeverityLabel::Mild => (
            subject_texture.uniform(8.0, 14.0),
            subject_texture.uniform(4.0, 6.5),
            6.5,
            subject_texture.uniform(11.0, 19.0),
            subject_texture.uniform(13.0, 21.0),
        ),
        SeverityLabel::ModerateSevere => (
            subject_texture.uniform(44.0, 62.0),
            subject_texture.uniform(8.5, 15.0),
            7.5,
            0.0,
            0.0,
        ),
    };
    // Mild involvement is not visible in every muscle: a per-(subject,
    // muscle) fraction of mild ROIs carries no pattern at all, which keeps
    // the mild/healthy boundary genuinely hard.
    if severity == SeverityLabel::Mild && !subject_texture.coin(0.85) {
        amp0 = 0.0;
        rim0 = 0.0;
        target0 = 0.0;
        noise0 = 5.0;
    }
    let jitter = |rng: &mut Rng, v: f64, frac: f64| v * rng.uniform(1.0 - frac, 1.0 + frac);
    let side = ((base_side as f64 * slice_rng.uniform(0.92, 1.08)) as usize).clamp(11, 105);
    let a = (side as f64 / 2.0 - 1.0) * slice_rng.uniform(0.82, 0.98);
    let b = a * slice_rng.uniform(0.62, 0.95);
    let (ea, eb) = if slice_rng.coin(0.5) { (a, b) } else { (b, a) };
    RoiParams {
        side,
        base: jitter(slice_rng, base, 0.06),
        noise_sigma: jitter(slice_rng, noise0, 0.15),
        band_amp: jitter(slice_rng, amp0, 0.12),
        band_wavelength: jitter(slice_rng, wl0, 0.08),
        band_angle: angle + slice_rng.uniform(-0.12, 0.12),
        band_phase: slice_rng.uniform(0.0, core::f64::consts::TAU),
        rim_amp: jitter(slice_rng, rim0, 0.15),
        target_amp: jitter(slice_rng, target0, 0.15),
        ellipse_a: ea,
        ellipse_b: eb,
        center_jitter: (
            slice_rng.uniform(-1.5, 1.5),
            slice_rng.uniform(-1.5, 1.5),
        ),
    }
}

fn render(params: &RoiParams, severity: SeverityLabel, muscle: MuscleId, rng: &mut Rng) -> (GrayImage, BinaryMask) {
    let s = params.side;
    let cx = (s as f64 - 1.0) / 2.0 + params.center_jitter.0;
    let cy = (s as f64 - 1.0) / 2.0 + params.center_jitter.1;
    let (sin_a, cos_a) = (params.band_angle.sin(), params.band_angle.cos());
    let mut img = GrayImage::filled(s, s, 0.0);
    let mut mask = BinaryMask::filled(s, s, false);
    for r in 0..s {
        for c in 0..s {
            let dx = c as f64 - cx;
            let dy = r as f64 - cy;
            let rho2 = (dx / params.ellipse_a).powi(2) + (dy / params.ellipse_b).powi(2);
            if rho2 > 1.0 {
                continue;
            }
            let rho = rho2.sqrt();
            let mut v = params.base;
            if params.band_amp > 0.0 {
                let t = dx * cos_a + dy * sin_a;
                let carrier = (core::f64::consts::TAU * t / params.band_wavelength
                    + params.band_phase)
                    .sin();
                v += params.band_amp * (0.5 + 0.5 * carrier);
            }
            if severity == SeverityLabel::Mild {
                match muscle.muscle {
                    TargetMuscle::VastusLateralis if rho > 0.82 => v += params.rim_amp,
                    TargetMuscle::RectusFemoris if rho < 0.20 => v += params.target_amp,
                    _ => {}
                }
            }
            v += params.noise_sigma * rng.normal();
            img.set(r, c, v.clamp(0.0, 255.0).round());
            mask.set(r, c, true);
        }
    }
    (img, mask)
}

/// Deterministic synthetic patch for one (severity, muscle, seed) triple.
pub fn synth_patch(
    severity: SeverityLabel,
    muscle: MuscleId,
    rng: &Rng,
) -> (GrayImage, BinaryMask) {
    let mut size_rng = rng.split(1);
    let base_side = sample_side(&mut size_rng);
    let mut slice_rng = rng.split(2);
    let params = roi_params(severity, muscle, rng, &mut slice_rng, base_side);
    let mut noise_rng = rng.split(3);
    render(&params, severity, muscle, &mut noise_rng)
}

/// Summary returned by dataset generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSummary {
    pub manifest_path: PathBuf,
    pub n_records: usize,
    pub per_class: [usize; 3],
    pub subjects: usize,
}

/// Generate the dataset under `out_dir`: PNG image/mask pairs in
/// `<subject>/` directories plus `manifest.csv`.
pub fn synth_dataset(config: &PhantomConfig, out_dir: &Path) -> Result<DatasetSummary, PhantomError> {
    if config.subjects < 3 {
        return Err(PhantomError::TooFewSubjects(config.subjects));
    }
    fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PhantomError + '_ {
        move |source| PhantomError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let root = Rng::new(config.seed);
    let mut records = Vec::new();
    let mut per_class = [0usize; 3];
    for subject_idx in 0..config.subjects {
        let severity = config.severity_of_subject(subject_idx);
        let subject_id = format!("subj{subject_idx:02}");
        let subject_dir = out_dir.join(&subject_id);
        fs::create_dir_all(&subject_dir).map_err(io_err(&subject_dir))?;
        let subject_rng = root.split(subject_idx as u64);
        for muscle in MuscleId::all() {
            // Base ROI size is a property of the muscle in this subject.
            let mut size_rng = subject_rng.split(1_000 + muscle.index() as u64);
            let base_side = sample_side(&mut size_rng);
            for slice in 0..config.slices_per_subject {
                let roi_rng = subject_rng
                    .split(2_000 + slice as u64 * MuscleId::COUNT as u64 + muscle.index() as u64);
                let mut slice_rng = roi_rng.split(0);
                let params =
                    roi_params(severity, muscle, &subject_rng, &mut slice_rng, base_side);
                let mut noise_rng = roi_rng.split(1);
                let (img, mask) = render(&params, severity, muscle, &mut noise_rng);
                let stem = format!(
                    "{slice}_{}_{}",
                    muscle.muscle.code(),
                    muscle.side.code()
                );
                let img_rel = format!("{subject_id}/{stem}_img.png");
                let mask_rel = format!("{subject_id}/{stem}_mask.png");
                save_gray8(&out_dir.join(&img_rel), &img)?;
                save_mask(&out_dir.join(&mask_rel), &mask)?;
                per_class[severity.index()] += 1;
                records.push(RoiRecord {
                    subject_id: subject_id.clone(),
                    slice_index: slice,
                    muscle,
                    label: severity,
                    image_path: img_rel,
                    mask_path: mask_rel,
                });
            }
        }
    }
    let manifest_path = out_dir.join("manifest.csv");
    write_manifest(&manifest_path, &records)?;
    Ok(DatasetSummary {
        manifest_path,
        n_records: records.len(),
        per_class,
        subjects: config.subjects,
    })
}

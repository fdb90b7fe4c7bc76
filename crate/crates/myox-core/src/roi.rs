//! ROI-level domain types: severity labels, muscle identifiers, manifest
//! records, and the cropped patch that feeds both feature extraction and
//! the network input path.

use alloc::string::String;
use core::fmt;

use crate::image::{BinaryMask, GrayImage};

/// Three-level involvement grade. Ordinal: Healthy < Mild < ModerateSevere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum SeverityLabel {
    Healthy = 0,
    Mild = 1,
    ModerateSevere = 2,
}

impl SeverityLabel {
    pub const ALL: [SeverityLabel; 3] = [
        SeverityLabel::Healthy,
        SeverityLabel::Mild,
        SeverityLabel::ModerateSevere,
    ];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<Self> {
        match idx {
            0 => Some(SeverityLabel::Healthy),
            1 => Some(SeverityLabel::Mild),
            2 => Some(SeverityLabel::ModerateSevere),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SeverityLabel::Healthy => "healthy",
            SeverityLabel::Mild => "mild",
            SeverityLabel::ModerateSevere => "moderate_severe",
        }
    }
}

impl fmt::Display for SeverityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One of the four quadriceps muscles tracked per thigh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum TargetMuscle {
    VastusLateralis = 0,
    VastusMedialis = 1,
    VastusIntermedius = 2,
    RectusFemoris = 3,
}

impl TargetMuscle {
    pub const ALL: [TargetMuscle; 4] = [
        TargetMuscle::VastusLateralis,
        TargetMuscle::VastusMedialis,
        TargetMuscle::VastusIntermedius,
        TargetMuscle::RectusFemoris,
    ];

    /// Two-letter manifest code.
    pub fn code(self) -> &'static str {
        match self {
            TargetMuscle::VastusLateralis => "VL",
            TargetMuscle::VastusMedialis => "VM",
            TargetMuscle::VastusIntermedius => "VI",
            TargetMuscle::RectusFemoris => "RF",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "VL" => Some(TargetMuscle::VastusLateralis),
            "VM" => Some(TargetMuscle::VastusMedialis),
            "VI" => Some(TargetMuscle::VastusIntermedius),
            "RF" => Some(TargetMuscle::RectusFemoris),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TargetMuscle::VastusLateralis => "Vastus lateralis",
            TargetMuscle::VastusMedialis => "Vastus medialis",
            TargetMuscle::VastusIntermedius => "Vastus intermedius",
            TargetMuscle::RectusFemoris => "Rectus femoris",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Side {
    Left = 0,
    Right = 1,
}

impl Side {
    pub fn code(self) -> &'static str {
        match self {
            Side::Left => "L",
            Side::Right => "R",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "L" => Some(Side::Left),
            "R" => Some(Side::Right),
            _ => None,
        }
    }
}

/// Muscle plus laterality; 8 distinct combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MuscleId {
    pub muscle: TargetMuscle,
    pub side: Side,
}

impl MuscleId {
    pub const COUNT: usize = 8;

    pub fn new(muscle: TargetMuscle, side: Side) -> Self {
        MuscleId { muscle, side }
    }

    pub fn all() -> impl Iterator<Item = MuscleId> {
        TargetMuscle::ALL.into_iter().flat_map(|m| {
            [Side::Left, Side::Right]
                .into_iter()
                .map(move |s| MuscleId::new(m, s))
        })
    }

    /// Stable index in [0, 8).
    pub fn index(self) -> usize {
        self.muscle as usize * 2 + self.side as usize
    }
}

impl fmt::Display for MuscleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.muscle.code(), self.side.code())
    }
}

/// One manifest row: a subject's muscle in one slice, with the label and
/// the (manifest-relative) file locations. Subject identifiers stay opaque
/// strings so arbitrary anonymization schemes survive round-trips.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoiRecord {
    pub subject_id: String,
    pub slice_index: u32,
    pub muscle: MuscleId,
    pub label: SeverityLabel,
    pub image_path: String,
    pub mask_path: String,
}

impl RoiRecord {
    /// Uniqueness key within a manifest.
    pub fn key(&self) -> (&str, u32, MuscleId) {
        (&self.subject_id, self.slice_index, self.muscle)
    }
}

/// Bounding-box crop of one muscle: masked image (off-mask pixels are 0)
/// plus the crop of the mask itself, at original resolution.
#[derive(Debug, Clone)]
pub struct RoiPatch {
    pub image: GrayImage,
    pub mask: BinaryMask,
}

impl RoiPatch {
    /// Side length of the (square) patch.
    pub fn side(&self) -> usize {
        self.image.width()
    }

    /// Intensities of mask-set pixels, in row-major order.
    pub fn masked_values(&self) -> alloc::vec::Vec<f64> {
        self.image
            .data()
            .iter()
            .zip(self.mask.data())
            .filter_map(|(&v, &m)| m.then_some(v))
            .collect()
    }
}

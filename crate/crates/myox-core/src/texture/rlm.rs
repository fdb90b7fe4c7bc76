//! Gray-level run-length matrices per scan direction.

use alloc::vec;
use alloc::vec::Vec;

use super::TextureError;
use crate::preprocess::LevelImage;

pub const RLM_FEATURE_COUNT: usize = 5;

/// The four scan directions. 0 degrees runs along rows, 90 along columns,
/// 45 along "/" anti-diagonals and 135 along "\" diagonals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RlmDirection {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl RlmDirection {
    pub const ALL: [RlmDirection; 4] = [
        RlmDirection::Deg0,
        RlmDirection::Deg45,
        RlmDirection::Deg90,
        RlmDirection::Deg135,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            RlmDirection::Deg0 => "000",
            RlmDirection::Deg45 => "045",
            RlmDirection::Deg90 => "090",
            RlmDirection::Deg135 => "135",
        }
    }
}

/// Run counts R(g, l) for one direction. Runs are maximal sequences of
/// equal level along a scan line; invalid (off-mask) pixels break runs.
/// The length axis is capped at the longer image side, which no run can
/// exceed.
#[derive(Debug, Clone)]
pub struct RlmMatrix {
    n_levels: usize,
    max_len: usize,
    direction: RlmDirection,
    /// counts[g * max_len + (l - 1)]
    counts: Vec<u64>,
}

impl RlmMatrix {
    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn direction(&self) -> RlmDirection {
        self.direction
    }

    #[inline]
    pub fn count(&self, level: usize, length: usize) -> u64 {
        debug_assert!(length >= 1 && length <= self.max_len);
        self.counts[level * self.max_len + (length - 1)]
    }

    pub fn total_runs(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Sum over (g, l) of l * R(g, l): the number of pixels covered.
    pub fn covered_pixels(&self) -> u64 {
        let mut total = 0u64;
        for g in 0..self.n_levels {
            for l in 1..=self.max_len {
                total += l as u64 * self.count(g, l);
            }
        }
        total
    }
}

/// Enumerate the scan lines of a direction as (start, step) pairs in
/// (row, col) coordinates.
fn scan_lines(w: usize, h: usize, dir: RlmDirection) -> Vec<((isize, isize), (isize, isize))> {
    let mut lines = Vec::new();
    match dir {
        RlmDirection::Deg0 => {
            for r in 0..h {
                lines.push(((r as isize, 0), (0, 1)));
            }
        }
        RlmDirection::Deg90 => {
            for c in 0..w {
                lines.push(((0, c as isize), (1, 0)));
            }
        }
        RlmDirection::Deg45 => {
            // "/" lines: constant r + c, walked up-right from the left/bottom edge.
            for r in 0..h {
                lines.push(((r as isize, 0), (-1, 1)));
            }
            for c in 1..w {
                lines.push((((h - 1) as isize, c as isize), (-1, 1)));
            }
        }
        RlmDirection::Deg135 => {
            // "\" lines: constant r - c, walked down-right from the top/left edge.
            for c in 0..w {
                lines.push(((0, c as isize), (1, 1)));
            }
            for r in 1..h {
                lines.push(((r as isize, 0), (1, 1)));
            }
        }
    }
    lines
}

pub fn rlm_compute(levels: &LevelImage, dir: RlmDirection) -> Result<RlmMatrix, TextureError> {
    if levels.valid_count() == 0 {
        return Err(TextureError::EmptyMask);
    }
    let (w, h) = (levels.width, levels.height);
    let max_len = w.max(h);
    let mut counts = vec![0u64; levels.n_levels * max_len];
    let mut record = |level: u16, len: usize| {
        if len > 0 {
            counts[level as usize * max_len + (len - 1)] += 1;
        }
    };
    for (start, step) in scan_lines(w, h, dir) {
        let (mut r, mut c) = start;
        let mut run_level = 0u16;
        let mut run_len = 0usize;
        while r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w {
            let (ru, cu) = (r as usize, c as usize);
            if levels.is_valid(ru, cu) {
                let level = levels.level(ru, cu);
                if run_len > 0 && level == run_level {
                    run_len += 1;
                } else {
                    record(run_level, run_len);
                    run_level = level;
                    run_len = 1;
                }
            } else {
                record(run_level, run_len);
                run_len = 0;
            }
            r += step.0;
            c += step.1;
        }
        record(run_level, run_len);
    }
    Ok(RlmMatrix {
        n_levels: levels.n_levels,
        max_len,
        direction: dir,
        counts,
    })
}

/// Run-length statistics in registry order: short-run emphasis, long-run
/// emphasis, gray-level non-uniformity, run-length non-uniformity, and run
/// fraction (runs per scanned masked pixel).
pub fn rlm_features(
    m: &RlmMatrix,
    scanned_pixels: usize,
) -> Result<[f64; RLM_FEATURE_COUNT], TextureError> {
    let n_runs = m.total_runs();
    if n_runs == 0 {
        return Err(TextureError::NoRuns);
    }
    let nr = n_runs as f64;
    let mut sre = 0.0;
    let mut lre = 0.0;
    let mut by_level = vec![0u64; m.n_levels()];
    let mut by_length = vec![0u64; m.max_len()];
    for g in 0..m.n_levels() {
        for l in 1..=m.max_len() {
            let r = m.count(g, l);
            if r == 0 {
                continue;
            }
            let rf = r as f64;
            let lf = l as f64;
            sre += rf / (lf * lf);
            lre += rf * lf * lf;
            by_level[g] += r;
            by_length[l - 1] += r;
        }
    }
    let gln: f64 = by_level.iter().map(|&s| (s as f64) * (s as f64)).sum::<f64>() / nr;
    let rln: f64 = by_length
        .iter()
        .map(|&s| (s as f64) * (s as f64))
        .sum::<f64>()
        / nr;
    Ok([
        sre / nr,
        lre / nr,
        gln,
        rln,
        nr / scanned_pixels as f64,
    ])
}

//! Independent brute-force oracles for every texture feature family.
//!
//! These are deliberately written from the definitions, with their own
//! loop structures and helper math, and never call into the extraction
//! path they check (the only shared types are the patch containers).

use myox_core::roi::RoiPatch;

pub const N_FEATURES: usize = 355;

// ---- shared statistics -------------------------------------------------

fn mean_of(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// (mean, variance, skewness, excess kurtosis), population convention,
/// skew/kurt zero when the variance vanishes.
fn four_moments(v: &[f64]) -> (f64, f64, f64, f64) {
    let n = v.len() as f64;
    let mu = mean_of(v);
    let central = |p: i32| v.iter().map(|&x| (x - mu).powi(p)).sum::<f64>() / n;
    let m2 = central(2);
    if m2 == 0.0 {
        return (mu, 0.0, 0.0, 0.0);
    }
    (mu, m2, central(3) / m2.powf(1.5), central(4) / (m2 * m2) - 3.0)
}

fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.max(1).min(n) - 1]
}

// ---- histogram & gradient ----------------------------------------------

pub fn histogram(patch: &RoiPatch) -> Option<[f64; 9]> {
    let vals = patch.masked_values();
    if vals.len() < 2 {
        return None;
    }
    let (mu, var, skew, kurt) = four_moments(&vals);
    let mut sorted = vals;
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Some([
        mu,
        var,
        skew,
        kurt,
        nearest_rank(&sorted, 1.0),
        nearest_rank(&sorted, 10.0),
        nearest_rank(&sorted, 50.0),
        nearest_rank(&sorted, 90.0),
        nearest_rank(&sorted, 99.0),
    ])
}

pub fn gradient(patch: &RoiPatch) -> Option<[f64; 5]> {
    let side = patch.side();
    let masked = |r: isize, c: isize| {
        r >= 0
            && c >= 0
            && (r as usize) < side
            && (c as usize) < side
            && patch.mask.get(r as usize, c as usize)
    };
    let mut mags = Vec::new();
    for r in 0..side as isize {
        for c in 0..side as isize {
            if masked(r, c)
                && masked(r, c - 1)
                && masked(r, c + 1)
                && masked(r - 1, c)
                && masked(r + 1, c)
            {
                let gx =
                    (patch.image.get(r as usize, c as usize + 1)
                        - patch.image.get(r as usize, c as usize - 1))
                        / 2.0;
                let gy =
                    (patch.image.get(r as usize + 1, c as usize)
                        - patch.image.get(r as usize - 1, c as usize))
                        / 2.0;
                mags.push((gx * gx + gy * gy).sqrt());
            }
        }
    }
    if mags.is_empty() {
        return None;
    }
    let (mu, var, skew, kurt) = four_moments(&mags);
    let nz = mags.iter().filter(|&&g| g > 0.0).count() as f64 / mags.len() as f64;
    Some([mu, var, skew, kurt, nz])
}

// ---- quantization -------------------------------------------------------

/// Min-max quantization to `n_levels`; `None` entries are off-mask.
pub fn quantize(patch: &RoiPatch, n_levels: usize) -> Vec<Option<usize>> {
    let side = patch.side();
    let vals = patch.masked_values();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![None; side * side];
    for r in 0..side {
        for c in 0..side {
            if patch.mask.get(r, c) {
                let level = if hi > lo {
                    let raw =
                        ((patch.image.get(r, c) - lo) / (hi - lo) * n_levels as f64).floor();
                    (raw as usize).min(n_levels - 1)
                } else {
                    0
                };
                out[r * side + c] = Some(level);
            }
        }
    }
    out
}

// ---- GLCM ---------------------------------------------------------------

/// Symmetric normalized co-occurrence matrix by exhaustive pair
/// enumeration. `None` when the offset finds no valid pair.
pub fn glcm_matrix(
    levels: &[Option<usize>],
    side: usize,
    n_levels: usize,
    offset: (isize, isize),
) -> Option<Vec<f64>> {
    let mut counts = vec![0u64; n_levels * n_levels];
    let mut total = 0u64;
    for r in 0..side as isize {
        for c in 0..side as isize {
            let (r2, c2) = (r + offset.0, c + offset.1);
            if r2 < 0 || c2 < 0 || r2 >= side as isize || c2 >= side as isize {
                continue;
            }
            if let (Some(i), Some(j)) = (
                levels[r as usize * side + c as usize],
                levels[r2 as usize * side + c2 as usize],
            ) {
                counts[i * n_levels + j] += 1;
                counts[j * n_levels + i] += 1;
                total += 2;
            }
        }
    }
    if total == 0 {
        return None;
    }
    Some(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// The eleven statistics in registry order, straight from the formulas.
pub fn glcm_stats(p: &[f64], n: usize) -> [f64; 11] {
    let at = |i: usize, j: usize| p[i * n + j];
    let px: Vec<f64> = (0..n).map(|i| (0..n).map(|j| at(i, j)).sum()).collect();
    let py: Vec<f64> = (0..n).map(|j| (0..n).map(|i| at(i, j)).sum()).collect();
    let mu_x: f64 = px.iter().enumerate().map(|(i, &v)| i as f64 * v).sum();
    let mu_y: f64 = py.iter().enumerate().map(|(j, &v)| j as f64 * v).sum();
    let sd_x = px
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as f64 - mu_x).powi(2) * v)
        .sum::<f64>()
        .sqrt();
    let sd_y = py
        .iter()
        .enumerate()
        .map(|(j, &v)| (j as f64 - mu_y).powi(2) * v)
        .sum::<f64>()
        .sqrt();

    let mut asm = 0.0;
    let mut contrast = 0.0;
    let mut corr_num = 0.0;
    let mut variance = 0.0;
    let mut idm = 0.0;
    let mut entropy = 0.0;
    let mut p_sum = vec![0.0; 2 * n - 1];
    let mut p_diff = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let v = at(i, j);
            asm += v * v;
            contrast += ((i as f64) - (j as f64)).powi(2) * v;
            corr_num += (i as f64) * (j as f64) * v;
            variance += ((i as f64) - mu_x).powi(2) * v;
            idm += v / (1.0 + ((i as f64) - (j as f64)).powi(2));
            if v > 0.0 {
                entropy -= v * v.log2();
            }
            p_sum[i + j] += v;
            p_diff[i.abs_diff(j)] += v;
        }
    }
    let correlation = if sd_x * sd_y > 0.0 {
        (corr_num - mu_x * mu_y) / (sd_x * sd_y)
    } else {
        0.0
    };
    let sum_avg: f64 = p_sum.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let sum_var: f64 = p_sum
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 - sum_avg).powi(2) * v)
        .sum();
    let sum_ent: f64 = p_sum
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum();
    let diff_avg: f64 = p_diff.iter().enumerate().map(|(k, &v)| k as f64 * v).sum();
    let diff_var: f64 = p_diff
        .iter()
        .enumerate()
        .map(|(k, &v)| (k as f64 - diff_avg).powi(2) * v)
        .sum();
    let diff_ent: f64 = p_diff
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.log2())
        .sum();
    [
        asm, contrast, correlation, variance, idm, sum_avg, sum_var, sum_ent, entropy,
        diff_var, diff_ent,
    ]
}

// ---- RLM ----------------------------------------------------------------

/// Scan lines for a direction, as pixel index sequences.
fn scan_lines(side: usize, dir: usize) -> Vec<Vec<(usize, usize)>> {
    let s = side as isize;
    let mut lines = Vec::new();
    match dir {
        0 => {
            for r in 0..side {
                lines.push((0..side).map(|c| (r, c)).collect());
            }
        }
        2 => {
            for c in 0..side {
                lines.push((0..side).map(|r| (r, c)).collect());
            }
        }
        1 => {
            // 45 degrees: anti-diagonals of constant r + c.
            for total in 0..(2 * s - 1) {
                let mut line = Vec::new();
                for r in (0..s).rev() {
                    let c = total - r;
                    if c >= 0 && c < s {
                        line.push((r as usize, c as usize));
                    }
                }
                lines.push(line);
            }
        }
        _ => {
            // 135 degrees: diagonals of constant r - c.
            for diff in (1 - s)..s {
                let mut line = Vec::new();
                for r in 0..s {
                    let c = r - diff;
                    if c >= 0 && c < s {
                        line.push((r as usize, c as usize));
                    }
                }
                lines.push(line);
            }
        }
    }
    lines
}

/// Run counts R[level][length-1] by explicit run-length encoding of every
/// scan line, runs broken at off-mask pixels.
pub fn rlm_counts(
    levels: &[Option<usize>],
    side: usize,
    n_levels: usize,
    dir: usize,
) -> Vec<u64> {
    let max_len = side;
    let mut counts = vec![0u64; n_levels * max_len];
    for line in scan_lines(side, dir) {
        let seq: Vec<Option<usize>> = line.iter().map(|&(r, c)| levels[r * side + c]).collect();
        let mut i = 0;
        while i < seq.len() {
            match seq[i] {
                None => i += 1,
                Some(level) => {
                    let mut j = i;
                    while j < seq.len() && seq[j] == Some(level) {
                        j += 1;
                    }
                    counts[level * max_len + (j - i - 1)] += 1;
                    i = j;
                }
            }
        }
    }
    counts
}

pub fn rlm_stats(counts: &[u64], n_levels: usize, max_len: usize, scanned: usize) -> [f64; 5] {
    let n_runs: u64 = counts.iter().sum();
    let nr = n_runs as f64;
    let mut sre = 0.0;
    let mut lre = 0.0;
    for g in 0..n_levels {
        for l in 1..=max_len {
            let r = counts[g * max_len + l - 1] as f64;
            sre += r / (l as f64 * l as f64);
            lre += r * (l as f64 * l as f64);
        }
    }
    let gln: f64 = (0..n_levels)
        .map(|g| {
            let s: u64 = (0..max_len).map(|l| counts[g * max_len + l]).sum();
            (s as f64).powi(2)
        })
        .sum::<f64>()
        / nr;
    let rln: f64 = (0..max_len)
        .map(|l| {
            let s: u64 = (0..n_levels).map(|g| counts[g * max_len + l]).sum();
            (s as f64).powi(2)
        })
        .sum::<f64>()
        / nr;
    [sre / nr, lre / nr, gln, rln, nr / scanned as f64]
}

// ---- AR model -----------------------------------------------------------

/// 4x4 inverse via the adjugate (cofactor) matrix; `None` when the
/// determinant degenerates relative to the matrix scale.
fn invert4(a: &[[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    // Cofactor expansion over 3x3 minors.
    let minor = |rows: [usize; 3], cols: [usize; 3]| -> f64 {
        let m = |i: usize, j: usize| a[rows[i]][cols[j]];
        m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
            - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
    };
    let others = |k: usize| -> [usize; 3] {
        let mut out = [0; 3];
        let mut idx = 0;
        for v in 0..4 {
            if v != k {
                out[idx] = v;
                idx += 1;
            }
        }
        out
    };
    let mut cof = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            cof[i][j] = sign * minor(others(i), others(j));
        }
    }
    let det: f64 = (0..4).map(|j| a[0][j] * cof[0][j]).sum();
    let scale: f64 = a
        .iter()
        .flatten()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
        .max(1.0);
    if det.abs() <= scale.powi(4) * 1e-12 {
        return None;
    }
    let mut inv = [[0.0f64; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            inv[i][j] = cof[j][i] / det;
        }
    }
    Some(inv)
}

pub fn ar_fit(patch: &RoiPatch) -> Option<[f64; 5]> {
    let side = patch.side();
    let mut rows: Vec<([f64; 4], f64)> = Vec::new();
    for r in 1..side {
        for c in 1..side.saturating_sub(1) {
            let ok = patch.mask.get(r, c)
                && patch.mask.get(r, c - 1)
                && patch.mask.get(r - 1, c - 1)
                && patch.mask.get(r - 1, c)
                && patch.mask.get(r - 1, c + 1);
            if !ok {
                continue;
            }
            rows.push((
                [
                    patch.image.get(r, c - 1),
                    patch.image.get(r - 1, c - 1),
                    patch.image.get(r - 1, c),
                    patch.image.get(r - 1, c + 1),
                ],
                patch.image.get(r, c),
            ));
        }
    }
    if rows.len() < 50 {
        return None;
    }
    let mut gram = [[0.0f64; 4]; 4];
    let mut rhs = [0.0f64; 4];
    for (n, x) in &rows {
        for i in 0..4 {
            for j in 0..4 {
                gram[i][j] += n[i] * n[j];
            }
            rhs[i] += n[i] * x;
        }
    }
    let inv = match invert4(&gram) {
        Some(inv) => inv,
        None => {
            let mut ridged = gram;
            for i in 0..4 {
                ridged[i][i] += 1e-8;
            }
            invert4(&ridged)?
        }
    };
    let mut theta = [0.0f64; 4];
    for i in 0..4 {
        for j in 0..4 {
            theta[i] += inv[i][j] * rhs[j];
        }
    }
    let ss: f64 = rows
        .iter()
        .map(|(n, x)| {
            let pred: f64 = n.iter().zip(&theta).map(|(a, b)| a * b).sum();
            (x - pred).powi(2)
        })
        .sum();
    let sigma = (ss / rows.len() as f64).sqrt();
    Some([theta[0], theta[1], theta[2], theta[3], sigma])
}

// ---- Haar wavelet -------------------------------------------------------

/// One separable orthonormal Haar level: rows first, then columns, with
/// zero padding to even sizes. Returns (ll, lh, hl, hh, out_w, out_h).
fn haar_level(data: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, usize, usize) {
    let s = std::f64::consts::SQRT_2;
    let w2 = w + w % 2;
    let h2 = h + h % 2;
    let at = |r: usize, c: usize| if r < h && c < w { data[r * w + c] } else { 0.0 };
    // Row pass: lows and highs, each h2 x w2/2.
    let ow = w2 / 2;
    let mut low = vec![0.0; h2 * ow];
    let mut high = vec![0.0; h2 * ow];
    for r in 0..h2 {
        for c in 0..ow {
            let a = at(r, 2 * c);
            let b = at(r, 2 * c + 1);
            low[r * ow + c] = (a + b) / s;
            high[r * ow + c] = (a - b) / s;
        }
    }
    // Column pass on both halves.
    let oh = h2 / 2;
    let mut ll = vec![0.0; oh * ow];
    let mut lh = vec![0.0; oh * ow];
    let mut hl = vec![0.0; oh * ow];
    let mut hh = vec![0.0; oh * ow];
    for r in 0..oh {
        for c in 0..ow {
            let lt = low[(2 * r) * ow + c];
            let lb = low[(2 * r + 1) * ow + c];
            let ht = high[(2 * r) * ow + c];
            let hb = high[(2 * r + 1) * ow + c];
            ll[r * ow + c] = (lt + lb) / s;
            lh[r * ow + c] = (lt - lb) / s;
            hl[r * ow + c] = (ht + hb) / s;
            hh[r * ow + c] = (ht - hb) / s;
        }
    }
    (ll, lh, hl, hh, ow, oh)
}

pub fn wavelet_energies(patch: &RoiPatch) -> Option<[f64; 16]> {
    if patch.side() < 16 {
        return None;
    }
    let mut data = patch.image.data().to_vec();
    let (mut w, mut h) = (patch.side(), patch.side());
    let mut out = [0.0; 16];
    for level in 0..4 {
        let (ll, lh, hl, hh, ow, oh) = haar_level(&data, w, h);
        let ms = |v: &[f64]| v.iter().map(|&x| x * x).sum::<f64>() / v.len() as f64;
        out[level * 4] = ms(&ll);
        out[level * 4 + 1] = ms(&lh);
        out[level * 4 + 2] = ms(&hl);
        out[level * 4 + 3] = ms(&hh);
        data = ll;
        w = ow;
        h = oh;
    }
    Some(out)
}

// ---- Gabor --------------------------------------------------------------

pub struct OracleGaborKernel {
    pub radius: isize,
    re: Vec<f64>,
    im: Vec<f64>,
}

pub fn gabor_kernel(wavelength: f64, orientation_deg: f64) -> OracleGaborKernel {
    let bandwidth = 1.0f64;
    let gamma = 0.5f64;
    let sigma = wavelength / std::f64::consts::PI
        * (2.0f64.ln() / 2.0).sqrt()
        * (2.0f64.powf(bandwidth) + 1.0)
        / (2.0f64.powf(bandwidth) - 1.0);
    let radius = (3.0 * (sigma / gamma).max(sigma)).ceil() as isize;
    let theta = orientation_deg.to_radians();
    let n = (2 * radius + 1) as usize;
    let mut env = vec![0.0; n * n];
    let mut re = vec![0.0; n * n];
    let mut im = vec![0.0; n * n];
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let x = dx as f64 * theta.cos() + dy as f64 * theta.sin();
            let y = -(dx as f64) * theta.sin() + dy as f64 * theta.cos();
            let e = (-(x * x + gamma * gamma * y * y) / (2.0 * sigma * sigma)).exp();
            let idx = ((dy + radius) as usize) * n + (dx + radius) as usize;
            env[idx] = e;
            let phase = 2.0 * std::f64::consts::PI * x / wavelength;
            re[idx] = e * phase.cos();
            im[idx] = e * phase.sin();
        }
    }
    let correction: f64 = re.iter().sum::<f64>() / env.iter().sum::<f64>();
    for (r, e) in re.iter_mut().zip(&env) {
        *r -= correction * e;
    }
    OracleGaborKernel { radius, re, im }
}

/// Response-magnitude statistics over masked pixels by direct spatial
/// convolution in absolute image coordinates.
pub fn gabor_stats(patch: &RoiPatch, kernel: &OracleGaborKernel) -> Option<[f64; 5]> {
    let side = patch.side() as isize;
    let n_masked = patch.mask.count_set();
    if n_masked < 2 {
        return None;
    }
    let k = kernel.radius;
    let kn = (2 * k + 1) as usize;
    let image = patch.image.data();
    let mask = patch.mask.data();
    let mut mags = Vec::with_capacity(n_masked);
    for r in 0..side {
        for c in 0..side {
            if !mask[(r * side + c) as usize] {
                continue;
            }
            let mut acc_re = 0.0;
            let mut acc_im = 0.0;
            for q_r in (r - k).max(0)..=(r + k).min(side - 1) {
                let img_row = (q_r * side) as usize;
                // Kernel index of (q_r, q_c) relative to the output pixel:
                // (q_r - r + k) * kn + (q_c - c + k).
                let ker_base = (q_r - r + k) * kn as isize - c + k;
                for q_c in (c - k).max(0)..=(c + k).min(side - 1) {
                    let v = image[img_row + q_c as usize];
                    if v != 0.0 {
                        let idx = (ker_base + q_c) as usize;
                        acc_re += v * kernel.re[idx];
                        acc_im += v * kernel.im[idx];
                    }
                }
            }
            mags.push((acc_re * acc_re + acc_im * acc_im).sqrt());
        }
    }
    let (mu, var, skew, kurt) = four_moments(&mags);
    let energy = mags.iter().map(|&m| m * m).sum::<f64>() / mags.len() as f64;
    Some([mu, var.sqrt(), skew, kurt, energy])
}

// ---- full-vector assembly -------------------------------------------------

/// The 16 bank kernels in wavelength-major order, built once per suite.
pub fn gabor_bank() -> Vec<OracleGaborKernel> {
    let mut kernels = Vec::new();
    for wavelength in [4.0, 8.0, 16.0, 32.0] {
        for orientation in [0.0, 45.0, 90.0, 135.0] {
            kernels.push(gabor_kernel(wavelength, orientation));
        }
    }
    kernels
}

/// The complete 355-component oracle vector with the same sentinel rules
/// as the extractor: families whose preconditions fail contribute zeros.
pub fn extract_all(patch: &RoiPatch, n_levels: usize, bank: &[OracleGaborKernel]) -> Vec<f64> {
    let mut out = Vec::with_capacity(N_FEATURES);
    match histogram(patch) {
        Some(v) => out.extend(v),
        None => out.extend([0.0; 9]),
    }
    match gradient(patch) {
        Some(v) => out.extend(v),
        None => out.extend([0.0; 5]),
    }
    let levels = quantize(patch, n_levels);
    let side = patch.side();
    let directions: [(isize, isize); 4] = [(0, 1), (-1, 1), (-1, 0), (-1, -1)];
    for (dy, dx) in directions {
        for dist in 1..=5isize {
            match glcm_matrix(&levels, side, n_levels, (dy * dist, dx * dist)) {
                Some(p) => out.extend(glcm_stats(&p, n_levels)),
                None => out.extend([0.0; 11]),
            }
        }
    }
    let scanned = levels.iter().filter(|l| l.is_some()).count();
    for dir in 0..4 {
        let counts = rlm_counts(&levels, side, n_levels, dir);
        if counts.iter().any(|&c| c > 0) {
            out.extend(rlm_stats(&counts, n_levels, side, scanned));
        } else {
            out.extend([0.0; 5]);
        }
    }
    match ar_fit(patch) {
        Some(v) => out.extend(v),
        None => out.extend([0.0; 5]),
    }
    match wavelet_energies(patch) {
        Some(v) => out.extend(v),
        None => out.extend([0.0; 16]),
    }
    let gabor_feasible = patch.mask.count_set() >= 2;
    for kernel in bank {
        if gabor_feasible {
            out.extend(gabor_stats(patch, kernel).unwrap());
        } else {
            out.extend([0.0; 5]);
        }
    }
    assert_eq!(out.len(), N_FEATURES);
    out
}

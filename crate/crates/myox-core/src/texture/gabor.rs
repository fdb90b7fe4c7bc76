//! 2-D Gabor filter bank and magnitude-response statistics.
//!
//! Each filter is a complex sinusoid under a Gaussian envelope. The real
//! (cosine) part is DC-corrected so a constant region far from boundaries
//! produces zero response; near the patch border the zero padding acts as
//! a step edge and small responses are expected.

use alloc::vec;
use alloc::vec::Vec;

use super::stats::moments;
use super::TextureError;
use crate::fmath as fm;
use crate::roi::RoiPatch;

pub const GABOR_STAT_COUNT: usize = 5;
pub const GABOR_FILTER_COUNT: usize = 16;
pub const GABOR_FEATURE_COUNT: usize = GABOR_FILTER_COUNT * GABOR_STAT_COUNT;

/// Bank parameters. Defaults: wavelengths {4, 8, 16, 32} pixels,
/// orientations {0, 45, 90, 135} degrees, one-octave bandwidth, spatial
/// aspect ratio 0.5, Gaussian support truncated at three standard
/// deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborParams {
    pub wavelengths: [f64; 4],
    pub orientations_deg: [f64; 4],
    pub bandwidth_octaves: f64,
    pub aspect_ratio: f64,
    pub n_stds: f64,
}

impl Default for GaborParams {
    fn default() -> Self {
        GaborParams {
            wavelengths: [4.0, 8.0, 16.0, 32.0],
            orientations_deg: [0.0, 45.0, 90.0, 135.0],
            bandwidth_octaves: 1.0,
            aspect_ratio: 0.5,
            n_stds: 3.0,
        }
    }
}

impl GaborParams {
    /// Envelope standard deviation along the carrier for one wavelength:
    /// `sigma = lambda / pi * sqrt(ln 2 / 2) * (2^b + 1) / (2^b - 1)`.
    pub fn sigma(&self, wavelength: f64) -> f64 {
        let b = self.bandwidth_octaves;
        let ratio = (fm::powf(2.0, b) + 1.0) / (fm::powf(2.0, b) - 1.0);
        wavelength / core::f64::consts::PI * fm::sqrt(fm::ln(2.0) / 2.0) * ratio
    }
}

/// One precomputed complex kernel on a square support of `2 * radius + 1`.
#[derive(Debug, Clone)]
pub struct GaborKernel {
    pub wavelength: f64,
    pub orientation_deg: f64,
    pub radius: isize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl GaborKernel {
    fn build(params: &GaborParams, wavelength: f64, orientation_deg: f64) -> Self {
        let sigma = params.sigma(wavelength);
        let gamma = params.aspect_ratio;
        let sigma_cross = sigma / gamma;
        let radius = fm::ceil(params.n_stds * sigma.max(sigma_cross)) as isize;
        let side = (2 * radius + 1) as usize;
        let theta = orientation_deg.to_radians();
        let (cos_t, sin_t) = (fm::cos(theta), fm::sin(theta));

        let mut env = vec![0.0; side * side];
        let mut re = vec![0.0; side * side];
        let mut im = vec![0.0; side * side];
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                // x along the carrier axis, y across it; rows grow downward.
                let x = dx as f64 * cos_t + dy as f64 * sin_t;
                let y = -(dx as f64) * sin_t + dy as f64 * cos_t;
                let e = fm::exp(-(x * x + gamma * gamma * y * y) / (2.0 * sigma * sigma));
                let phase = 2.0 * core::f64::consts::PI * x / wavelength;
                let i = ((dy + radius) * (2 * radius + 1) + (dx + radius)) as usize;
                env[i] = e;
                re[i] = e * fm::cos(phase);
                im[i] = e * fm::sin(phase);
            }
        }
        // Remove the DC component of the even part so constant regions
        // yield zero response.
        let env_sum: f64 = env.iter().sum();
        let re_sum: f64 = re.iter().sum();
        let correction = re_sum / env_sum;
        for (r, e) in re.iter_mut().zip(&env) {
            *r -= correction * e;
        }
        GaborKernel {
            wavelength,
            orientation_deg,
            radius,
            re,
            im,
        }
    }

    #[cfg(test)]
    fn tap(&self, dy: isize, dx: isize) -> (f64, f64) {
        let side = 2 * self.radius + 1;
        let i = ((dy + self.radius) * side + (dx + self.radius)) as usize;
        (self.re[i], self.im[i])
    }

    /// Complex response magnitudes at the masked pixels of `patch`,
    /// cross-correlating against the zero-padded patch image.
    pub fn magnitudes(&self, patch: &RoiPatch) -> Vec<f64> {
        let img = &patch.image;
        let side = patch.side() as isize;
        let mut out = Vec::with_capacity(patch.mask.count_set());
        for r in 0..side {
            for c in 0..side {
                if !patch.mask.get(r as usize, c as usize) {
                    continue;
                }
                let dr_lo = (-self.radius).max(-r);
                let dr_hi = self.radius.min(side - 1 - r);
                let dc_lo = (-self.radius).max(-c);
                let dc_hi = self.radius.min(side - 1 - c);
                let mut acc_re = 0.0;
                let mut acc_im = 0.0;
                for dy in dr_lo..=dr_hi {
                    let row = ((r + dy) * side) as usize;
                    let krow = ((dy + self.radius) * (2 * self.radius + 1)) as usize;
                    for dx in dc_lo..=dc_hi {
                        let v = img.data()[row + (c + dx) as usize];
                        if v != 0.0 {
                            let ki = krow + (dx + self.radius) as usize;
                            acc_re += v * self.re[ki];
                            acc_im += v * self.im[ki];
                        }
                    }
                }
                out.push(fm::sqrt(acc_re * acc_re + acc_im * acc_im));
            }
        }
        out
    }
}

/// The 16-filter bank with kernels built once up front.
#[derive(Debug, Clone)]
pub struct GaborBank {
    pub params: GaborParams,
    kernels: Vec<GaborKernel>,
}

impl GaborBank {
    pub fn new(params: GaborParams) -> Self {
        let mut kernels = Vec::with_capacity(GABOR_FILTER_COUNT);
        for &wl in &params.wavelengths {
            for &or in &params.orientations_deg {
                kernels.push(GaborKernel::build(&params, wl, or));
            }
        }
        GaborBank { params, kernels }
    }

    pub fn kernels(&self) -> &[GaborKernel] {
        &self.kernels
    }

    /// Per filter: mean, standard deviation, skewness, kurtosis and energy
    /// (mean squared magnitude) of the response magnitude over masked
    /// pixels. Wavelength-major, orientation-minor order.
    pub fn features(&self, patch: &RoiPatch) -> Result<[f64; GABOR_FEATURE_COUNT], TextureError> {
        let n_masked = patch.mask.count_set();
        if n_masked == 0 {
            return Err(TextureError::EmptyMask);
        }
        if n_masked < 2 {
            return Err(TextureError::TooFewPixels {
                needed: 2,
                got: n_masked,
            });
        }
        let mut out = [0.0; GABOR_FEATURE_COUNT];
        for (k, kernel) in self.kernels.iter().enumerate() {
            let mags = kernel.magnitudes(patch);
            let m = moments(&mags);
            let energy = mags.iter().map(|&v| v * v).sum::<f64>() / mags.len() as f64;
            out[k * GABOR_STAT_COUNT] = m.mean;
            out[k * GABOR_STAT_COUNT + 1] = fm::sqrt(m.variance);
            out[k * GABOR_STAT_COUNT + 2] = m.skewness;
            out[k * GABOR_STAT_COUNT + 3] = m.kurtosis;
            out[k * GABOR_STAT_COUNT + 4] = energy;
        }
        Ok(out)
    }
}

//! Filtered back projection with a cropped Ram-Lak filter.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, Result};
use crate::image::Image;
use crate::projector::{Sinogram, DETECTOR_SPACING};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FbpFilter {
    #[default]
    RamLakCropped,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FbpConfig {
    pub filter: FbpFilter,
    /// Fraction of the Nyquist frequency kept by the filter, in `(0, 1]`.
    pub crop_fraction: f64,
    pub interpolation: Interpolation,
}

impl Default for FbpConfig {
    fn default() -> Self {
        FbpConfig {
            filter: FbpFilter::RamLakCropped,
            crop_fraction: 0.8,
            interpolation: Interpolation::Linear,
        }
    }
}

/// Frequency response of the band-limited ramp for `len` padded samples at
/// detector spacing `spacing`, hard-cropped above `crop * Nyquist`.
///
/// The ramp is the DFT of the sampled spatial Ram-Lak kernel, which keeps the
/// zero-frequency term consistent with the discrete convolution.
fn ramp_response(len: usize, spacing: f64, crop: f64) -> Vec<f64> {
    let mut kernel = vec![Complex::new(0.0f64, 0.0); len];
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    kernel[0].re = 1.0 / (4.0 * spacing * spacing);
    for k in 1..len / 2 {
        if k % 2 == 1 {
            let v = -1.0 / (pi2 * (k * k) as f64 * spacing * spacing);
            kernel[k].re = v;
            kernel[len - k].re = v;
        }
    }
    FftPlanner::<f64>::new().plan_fft_forward(len).process(&mut kernel);
    let nyquist = len as f64 / 2.0;
    kernel
        .iter()
        .enumerate()
        .map(|(f, h)| {
            let freq = if f <= len / 2 { f as f64 } else { (len - f) as f64 };
            if freq > crop * nyquist {
                0.0
            } else {
                h.re * spacing
            }
        })
        .collect()
}

/// Ramp-filters every view of the sinogram. Returned views have length `p`.
pub fn filter_views<T: Real>(sino: &Sinogram<T>, spacing: f64, cfg: &FbpConfig) -> Result<Vec<T>> {
    if !(cfg.crop_fraction > 0.0 && cfg.crop_fraction <= 1.0) {
        return invalid(format!("crop fraction {} outside (0, 1]", cfg.crop_fraction));
    }
    let p = sino.rays();
    let len = (2 * p).next_power_of_two().max(2);
    let response: Vec<T> = ramp_response(len, spacing, cfg.crop_fraction)
        .into_iter()
        .map(T::lit)
        .collect();
    let mut planner = FftPlanner::<T>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let scale = T::one() / T::from_usize_lossy(len);

    let mut out = Vec::with_capacity(p * sino.views());
    let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
    for a in 0..sino.views() {
        buf.iter_mut().for_each(|c| *c = Complex::new(T::zero(), T::zero()));
        for (dst, &v) in buf.iter_mut().zip(sino.view(a)) {
            dst.re = v;
        }
        fwd.process(&mut buf);
        for (c, &h) in buf.iter_mut().zip(&response) {
            *c = *c * h;
        }
        inv.process(&mut buf);
        out.extend(buf[..p].iter().map(|c| c.re * scale));
    }
    Ok(out)
}

/// Reconstructs an `n x n` image from a parallel-beam sinogram whose rays
/// follow the projector geometry (see [`crate::projector::ray_offset`]).
pub fn fbp_reconstruct<T: Real>(
    sino: &Sinogram<T>,
    angles: &[f64],
    n: usize,
    cfg: &FbpConfig,
) -> Result<Image<T>> {
    check_len(sino.views(), angles.len(), "fbp view angles")?;
    if n == 0 || sino.rays() == 0 {
        return invalid("fbp needs a non-empty image and detector");
    }
    let p = sino.rays();
    let spacing = DETECTOR_SPACING;
    let filtered = filter_views(sino, spacing, cfg)?;

    let half = n as f64 / 2.0;
    let weight = T::lit(std::f64::consts::PI / angles.len() as f64);
    let mut img = vec![T::zero(); n * n];
    for (a, &deg) in angles.iter().enumerate() {
        let view = &filtered[a * p..(a + 1) * p];
        let (sin, cos) = deg.to_radians().sin_cos();
        for row in 0..n {
            let y = half - row as f64 - 0.5;
            for col in 0..n {
                let x = col as f64 + 0.5 - half;
                let t = x * cos + y * sin;
                // Inverse of ray_offset.
                let u = t / spacing + p as f64 / 2.0 - 0.5;
                let i0 = u.floor();
                let frac = T::lit(u - i0);
                let sample = |i: f64| -> T {
                    if i >= 0.0 && i < p as f64 {
                        view[i as usize]
                    } else {
                        T::zero()
                    }
                };
                let v = sample(i0) * (T::one() - frac) + sample(i0 + 1.0) * frac;
                img[row * n + col] = img[row * n + col] + v * weight;
            }
        }
    }
    Ok(Image::from_vec_unchecked(n, img))
}

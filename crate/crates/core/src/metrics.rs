//! Reconstruction quality metrics.

use std::io::Write;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{check_len, invalid, Result};
use crate::image::Image;
use crate::scalar::{norm, Real};

/// `||x - x_true|| / ||x_true||`
pub fn rel_l2_error<T: Real>(x: &Image<T>, x_true: &Image<T>) -> Result<f64> {
    check_len(x_true.side(), x.side(), "image side")?;
    let denom = norm(x_true.data()).as_f64();
    if denom == 0.0 {
        return invalid("relative error undefined for an all-zero ground truth");
    }
    let num: f64 = x
        .data()
        .iter()
        .zip(x_true.data())
        .map(|(a, b)| (a.as_f64() - b.as_f64()).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(num / denom)
}

/// Intensities of one image row, left to right.
pub fn intensity_profile<T: Real>(x: &Image<T>, row: usize) -> Result<Vec<T>> {
    if row >= x.side() {
        return invalid(format!("row {row} out of range for side {}", x.side()));
    }
    let n = x.side();
    Ok(x.data()[row * n..(row + 1) * n].to_vec())
}

/// Radially averaged power spectrum with per-bin bookkeeping.
#[derive(Clone, Debug)]
pub struct Raps {
    /// Mean `|F(u, v)|^2` per integer radius `0..n/2`.
    pub power: Vec<f64>,
    pub counts: Vec<usize>,
    /// Power at frequencies whose rounded radius is `>= n/2` (the corners).
    pub excluded_power: f64,
}

impl Raps {
    /// `sum(power * count) + excluded_power`, equal to the total spectral power.
    pub fn total(&self) -> f64 {
        self.power
            .iter()
            .zip(&self.counts)
            .map(|(p, &c)| p * c as f64)
            .sum::<f64>()
            + self.excluded_power
    }
}

/// Unnormalized 2-D DFT power `|F(u, v)|^2`, row-major, unshifted.
fn power_spectrum<T: Real>(x: &Image<T>) -> Vec<f64> {
    let n = x.side();
    let mut buf: Vec<Complex<f64>> = x.data().iter().map(|v| Complex::new(v.as_f64(), 0.0)).collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    for row in buf.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = buf[r * n + c];
        }
        fft.process(&mut col);
        for r in 0..n {
            buf[r * n + c] = col[r];
        }
    }
    buf.iter().map(|z| z.norm_sqr()).collect()
}

pub fn raps_detailed<T: Real>(x: &Image<T>) -> Result<Raps> {
    let n = x.side();
    if n == 0 || !n.is_multiple_of(2) {
        return invalid(format!("RAPS needs an even image side, got {n}"));
    }
    let power = power_spectrum(x);
    let bins = n / 2;
    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    let mut excluded = 0.0;
    let signed = |k: usize| if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
    for r in 0..n {
        for c in 0..n {
            let radius = (signed(r).powi(2) + signed(c).powi(2)).sqrt().round() as usize;
            let pw = power[r * n + c];
            if radius < bins {
                sums[radius] += pw;
                counts[radius] += 1;
            } else {
                excluded += pw;
            }
        }
    }
    let power = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect();
    Ok(Raps {
        power,
        counts,
        excluded_power: excluded,
    })
}

/// Radially averaged power spectrum, one value per integer radius `0..n/2`.
pub fn raps<T: Real>(x: &Image<T>) -> Result<Vec<f64>> {
    Ok(raps_detailed(x)?.power)
}

#[derive(Clone, Debug)]
pub struct MetricReport {
    pub rel_l2_error: Option<f64>,
    pub profile_row: usize,
    pub profile: Vec<f64>,
    pub raps: Vec<f64>,
}

/// Error (when ground truth is known), the given profile row, and RAPS (even `n` only).
pub fn evaluate<T: Real>(x: &Image<T>, truth: Option<&Image<T>>, profile_row: usize) -> Result<MetricReport> {
    let rel = truth.map(|t| rel_l2_error(x, t)).transpose()?;
    let profile = intensity_profile(x, profile_row)?
        .into_iter()
        .map(|v| v.as_f64())
        .collect();
    let raps = if x.side().is_multiple_of(2) { raps(x)? } else { Vec::new() };
    Ok(MetricReport {
        rel_l2_error: rel,
        profile_row,
        profile,
        raps,
    })
}

impl MetricReport {
    /// Writes `run_id,metric,index,value` rows.
    pub fn write_csv<W: Write>(&self, mut w: W, run_id: &str, header: bool) -> Result<()> {
        if header {
            writeln!(w, "run_id,metric,index,value")?;
        }
        if let Some(e) = self.rel_l2_error {
            writeln!(w, "{run_id},rel_l2_error,0,{e}")?;
        }
        for (i, v) in self.profile.iter().enumerate() {
            writeln!(w, "{run_id},profile_row{},{i},{v}", self.profile_row)?;
        }
        for (i, v) in self.raps.iter().enumerate() {
            writeln!(w, "{run_id},raps,{i},{v}")?;
        }
        Ok(())
    }
}

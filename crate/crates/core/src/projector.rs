//! Parallel-beam projection operator, sinograms and measurement noise.
//!
//! Geometry, in pixel units: the image occupies `[-n/2, n/2]^2` with `x` to
//! the right and `y` up (row 0 at the top). For a view angle `theta` the
//! detector axis is `e = (cos theta, sin theta)` and each ray is the line
//! `{ t e + s (-sin theta, cos theta) }`. The `p` rays of a view are one
//! pixel apart and centered on the origin, so `p = n` covers the inscribed
//! circle at every angle and `p >= sqrt(2) n` the whole square. Matrix
//! entries are exact ray/pixel intersection lengths.
//!
//! Row `a * p + k` of the system matrix is ray `k` of view `a`
//! (angle-major), and `Sinogram::data` uses the same order.

use std::io::{Read, Write};

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

use crate::error::{check_len, invalid, Error, Result};
use crate::image::Image;
use crate::io::{read_f64_block, read_header, read_u32, read_u64, write_f64_block, write_header};
use crate::scalar::{norm_sq, Real};

pub const SINOGRAM_MAGIC: &[u8; 8] = b"AGTVSIN1";
pub const MATRIX_MAGIC: &[u8; 8] = b"AGTVCSR1";

/// Distance between adjacent rays, in pixel widths.
pub const DETECTOR_SPACING: f64 = 1.0;

/// Signed detector coordinate of ray `k` out of `p`.
#[inline]
pub fn ray_offset(k: usize, p: usize) -> f64 {
    (k as f64 + 0.5 - p as f64 / 2.0) * DETECTOR_SPACING
}

/// `q` angles equally spaced over `[0, 180)` degrees.
pub fn equispaced_angles(q: usize) -> Vec<f64> {
    (0..q).map(|k| k as f64 * 180.0 / q as f64).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram<T> {
    p: usize,
    q: usize,
    data: Vec<T>,
}

impl<T: Real> Sinogram<T> {
    pub fn zeros(p: usize, q: usize) -> Self {
        Sinogram {
            p,
            q,
            data: vec![T::zero(); p * q],
        }
    }

    pub fn from_vec(p: usize, q: usize, data: Vec<T>) -> Result<Self> {
        check_len(p * q, data.len(), "sinogram data")?;
        Ok(Sinogram { p, q, data })
    }

    pub fn rays(&self) -> usize {
        self.p
    }

    pub fn views(&self) -> usize {
        self.q
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Detector profile of view `a`.
    pub fn view(&self, a: usize) -> &[T] {
        &self.data[a * self.p..(a + 1) * self.p]
    }

    pub fn cast<U: Real>(&self) -> Sinogram<U> {
        Sinogram {
            p: self.p,
            q: self.q,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    pub fn write_raw<W: Write>(&self, mut w: W) -> Result<()> {
        write_header(&mut w, SINOGRAM_MAGIC, self.p as u32, self.q as u32)?;
        write_f64_block(&mut w, self.data.iter().map(|v| v.as_f64()))
    }

    pub fn read_raw<R: Read>(mut r: R) -> Result<Self> {
        let (p, q) = read_header(&mut r, SINOGRAM_MAGIC)?;
        let (p, q) = (p as usize, q as usize);
        let data = read_f64_block(&mut r, p * q)?;
        Sinogram::from_vec(p, q, data.into_iter().map(T::lit).collect())
    }

    /// Long-form CSV: `angle_deg,ray,value`.
    pub fn write_csv<W: Write>(&self, mut w: W, angles: &[f64]) -> Result<()> {
        check_len(self.q, angles.len(), "sinogram angles")?;
        writeln!(w, "angle_deg,ray,value")?;
        for (a, angle) in angles.iter().enumerate() {
            for (k, v) in self.view(a).iter().enumerate() {
                writeln!(w, "{angle},{k},{v}")?;
            }
        }
        Ok(())
    }
}

/// Sparse `pq x n^2` projection operator in compressed-row layout.
#[derive(Clone, Debug)]
pub struct ProjectionMatrix<T> {
    n: usize,
    p: usize,
    angles: Vec<f64>,
    detector_spacing: f64,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<T>,
    // Transposed copy for gather-style A^T y.
    t_ptr: Vec<usize>,
    t_idx: Vec<u32>,
    t_values: Vec<T>,
}

impl<T: Real> ProjectionMatrix<T> {
    /// Builds the ray-traced system matrix for an `n x n` image, the given view
    /// angles in degrees (each in `[0, 180)`), and `p` rays per view.
    pub fn build(n: usize, angles: &[f64], p: usize) -> Result<Self> {
        if n == 0 {
            return invalid("image side must be at least 1");
        }
        if p == 0 {
            return invalid("rays per view must be at least 1");
        }
        if angles.is_empty() {
            return invalid("at least one view angle is required");
        }
        for &a in angles {
            if !a.is_finite() || !(0.0..180.0).contains(&a) {
                return invalid(format!("view angle {a} outside [0, 180)"));
            }
        }
        let mut sorted = angles.to_vec();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            warn!("duplicate view angles in projection geometry");
        }

        let spacing = DETECTOR_SPACING;
        let rays: Vec<Vec<(u32, f64)>> = angles
            .par_iter()
            .flat_map_iter(|&deg| {
                let theta = deg.to_radians();
                (0..p).map(move |k| {
                    trace_ray(n, theta, ray_offset(k, p))
                })
            })
            .collect();

        let mut row_ptr = Vec::with_capacity(rays.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for ray in rays {
            for (c, len) in ray {
                col_idx.push(c);
                values.push(T::lit(len));
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self::from_csr(n, p, angles.to_vec(), spacing, row_ptr, col_idx, values))
    }

    fn from_csr(
        n: usize,
        p: usize,
        angles: Vec<f64>,
        detector_spacing: f64,
        row_ptr: Vec<usize>,
        col_idx: Vec<u32>,
        values: Vec<T>,
    ) -> Self {
        let cols = n * n;
        let mut counts = vec![0usize; cols + 1];
        for &c in &col_idx {
            counts[c as usize + 1] += 1;
        }
        for i in 0..cols {
            counts[i + 1] += counts[i];
        }
        let t_ptr = counts.clone();
        let mut fill = counts;
        let mut t_idx = vec![0u32; col_idx.len()];
        let mut t_values = vec![T::zero(); col_idx.len()];
        for r in 0..row_ptr.len() - 1 {
            for k in row_ptr[r]..row_ptr[r + 1] {
                let c = col_idx[k] as usize;
                t_idx[fill[c]] = r as u32;
                t_values[fill[c]] = values[k];
                fill[c] += 1;
            }
        }
        ProjectionMatrix {
            n,
            p,
            angles,
            detector_spacing,
            row_ptr,
            col_idx,
            values,
            t_ptr,
            t_idx,
            t_values,
        }
    }

    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.n * self.n
    }

    pub fn image_side(&self) -> usize {
        self.n
    }

    pub fn rays_per_view(&self) -> usize {
        self.p
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Distance between adjacent detector rays, in pixel units.
    pub fn detector_spacing(&self) -> f64 {
        self.detector_spacing
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of one row.
    pub fn row(&self, r: usize) -> (&[u32], &[T]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// `y = A x`
    pub fn apply(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols());
        debug_assert_eq!(y.len(), self.rows());
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc = acc + self.values[k] * x[self.col_idx[k] as usize];
            }
            *out = acc;
        }
    }

    /// `x = A^T y`
    pub fn apply_transpose(&self, y: &[T], x: &mut [T]) {
        debug_assert_eq!(y.len(), self.rows());
        debug_assert_eq!(x.len(), self.cols());
        for (c, out) in x.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.t_ptr[c]..self.t_ptr[c + 1] {
                acc = acc + self.t_values[k] * y[self.t_idx[k] as usize];
            }
            *out = acc;
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        check_len(self.cols(), x.len(), "projection input")?;
        let mut y = vec![T::zero(); self.rows()];
        self.apply(x, &mut y);
        Ok(y)
    }

    pub fn mul_transpose_vec(&self, y: &[T]) -> Result<Vec<T>> {
        check_len(self.rows(), y.len(), "back-projection input")?;
        let mut x = vec![T::zero(); self.cols()];
        self.apply_transpose(y, &mut x);
        Ok(x)
    }

    /// Sum of each row's entries (ray path length through the grid).
    pub fn row_sums(&self) -> Vec<T> {
        (0..self.rows())
            .map(|r| self.row(r).1.iter().copied().sum())
            .collect()
    }

    /// Squared Euclidean norm of each row.
    pub fn row_norms_sq(&self) -> Vec<T> {
        (0..self.rows()).map(|r| norm_sq(self.row(r).1)).collect()
    }

    pub fn col_sums(&self) -> Vec<T> {
        (0..self.cols())
            .map(|c| self.t_values[self.t_ptr[c]..self.t_ptr[c + 1]].iter().copied().sum())
            .collect()
    }

    /// Binary CSR layout, little-endian:
    /// magic `AGTVCSR1`, `u32` rows, `u32` cols, `u32` n, `u32` p, `u32` q,
    /// `u32` reserved, `f64` detector spacing, `q` x `f64` angles,
    /// `(rows + 1)` x `u64` row pointers, `nnz` x `u32` columns, `nnz` x `f64` values.
    pub fn write_raw<W: Write>(&self, mut w: W) -> Result<()> {
        write_header(&mut w, MATRIX_MAGIC, self.rows() as u32, self.cols() as u32)?;
        let mut buf = Vec::new();
        for v in [self.n as u32, self.p as u32, self.angles.len() as u32, 0] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend_from_slice(&self.detector_spacing.to_le_bytes());
        for a in &self.angles {
            buf.extend_from_slice(&a.to_le_bytes());
        }
        for &rp in &self.row_ptr {
            buf.extend_from_slice(&(rp as u64).to_le_bytes());
        }
        for &c in &self.col_idx {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        w.write_all(&buf)?;
        write_f64_block(&mut w, self.values.iter().map(|v| v.as_f64()))
    }

    pub fn read_raw<R: Read>(mut r: R) -> Result<Self> {
        let (rows, cols) = read_header(&mut r, MATRIX_MAGIC)?;
        let n = read_u32(&mut r)? as usize;
        let p = read_u32(&mut r)? as usize;
        let q = read_u32(&mut r)? as usize;
        let _reserved = read_u32(&mut r)?;
        if rows as usize != p * q || cols as usize != n * n {
            return Err(Error::Format("matrix header inconsistent with geometry".into()));
        }
        let spacing = read_f64_block(&mut r, 1)?[0];
        let angles = read_f64_block(&mut r, q)?;
        let row_ptr = (0..=rows)
            .map(|_| read_u64(&mut r).map(|v| v as usize))
            .collect::<Result<Vec<_>>>()?;
        let nnz = *row_ptr.last().unwrap();
        if row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Format("row pointers not monotone".into()));
        }
        let col_idx = (0..nnz).map(|_| read_u32(&mut r)).collect::<Result<Vec<_>>>()?;
        if col_idx.iter().any(|&c| c >= cols) {
            return Err(Error::Format("column index out of range".into()));
        }
        let values = read_f64_block(&mut r, nnz)?;
        Ok(Self::from_csr(
            n,
            p,
            angles,
            spacing,
            row_ptr,
            col_idx,
            values.into_iter().map(T::lit).collect(),
        ))
    }
}

/// Intersection lengths of one ray with the pixel grid, ordered along the ray.
fn trace_ray(n: usize, theta: f64, t: f64) -> Vec<(u32, f64)> {
    const PARALLEL: f64 = 1e-12;
    let half = n as f64 / 2.0;
    let (sin, cos) = theta.sin_cos();
    let (px, py) = (t * cos, t * sin);
    let (dx, dy) = (-sin, cos);

    let mut s_lo = f64::NEG_INFINITY;
    let mut s_hi = f64::INFINITY;
    for (p0, d) in [(px, dx), (py, dy)] {
        if d.abs() < PARALLEL {
            if p0 < -half || p0 > half {
                return Vec::new();
            }
        } else {
            let a = (-half - p0) / d;
            let b = (half - p0) / d;
            s_lo = s_lo.max(a.min(b));
            s_hi = s_hi.min(a.max(b));
        }
    }
    if s_hi <= s_lo {
        return Vec::new();
    }

    let mut cuts = vec![s_lo, s_hi];
    for (p0, d) in [(px, dx), (py, dy)] {
        if d.abs() < PARALLEL {
            continue;
        }
        for k in 0..=n {
            let s = (k as f64 - half - p0) / d;
            if s > s_lo && s < s_hi {
                cuts.push(s);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);

    let mut out: Vec<(u32, f64)> = Vec::with_capacity(2 * n);
    for w in cuts.windows(2) {
        let len = w[1] - w[0];
        if len <= 1e-12 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let x = px + mid * dx;
        let y = py + mid * dy;
        let col = (x + half).floor();
        let row = (half - y).floor();
        if col < 0.0 || row < 0.0 || col >= n as f64 || row >= n as f64 {
            continue;
        }
        let idx = (row as usize * n + col as usize) as u32;
        match out.last_mut() {
            Some((last, l)) if *last == idx => *l += len,
            _ => out.push((idx, len)),
        }
    }
    out
}

/// `b = A vec(x)`
pub fn project<T: Real>(a: &ProjectionMatrix<T>, x: &Image<T>) -> Result<Sinogram<T>> {
    let b = a.mul_vec(x.data())?;
    Sinogram::from_vec(a.rays_per_view(), a.angles().len(), b)
}

fn check_noise_args<T: Real>(b: &Sinogram<T>, level: f64) -> Result<()> {
    if !(0.0..1.0).contains(&level) {
        return invalid(format!("noise level {level} outside [0, 1)"));
    }
    if b.data().iter().any(|&v| v < T::zero() || !v.is_finite()) {
        return invalid("sinogram must be finite and non-negative for noise injection");
    }
    Ok(())
}

/// Poisson counting noise with expected relative error `level`.
///
/// Counts are `Poisson(c b_i) / c` with `c = sum(b) / (level^2 ||b||^2)`, which
/// makes `E ||b~ - b||^2 = level^2 ||b||^2` and `E b~ = b`.
pub fn add_poisson_noise<T: Real>(b: &Sinogram<T>, level: f64, seed: u64) -> Result<Sinogram<T>> {
    check_noise_args(b, level)?;
    let total: f64 = b.data().iter().map(|v| v.as_f64()).sum();
    if level == 0.0 || total == 0.0 {
        return Ok(b.clone());
    }
    let energy: f64 = b.data().iter().map(|v| v.as_f64().powi(2)).sum();
    let c = total / (level * level * energy);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = b.clone();
    for v in out.data_mut() {
        let mean = c * v.as_f64();
        let count = if mean > 0.0 {
            Poisson::new(mean)
                .map_err(|e| Error::Numerical(format!("poisson rate {mean}: {e}")))?
                .sample(&mut rng)
        } else {
            0.0
        };
        *v = T::lit(count / c);
    }
    Ok(out)
}

/// Additive white Gaussian noise with standard deviation `level ||b|| / sqrt(pq)`.
pub fn add_gaussian_noise<T: Real>(b: &Sinogram<T>, level: f64, seed: u64) -> Result<Sinogram<T>> {
    check_noise_args(b, level)?;
    if level == 0.0 {
        return Ok(b.clone());
    }
    let energy: f64 = b.data().iter().map(|v| v.as_f64().powi(2)).sum();
    let sd = level * energy.sqrt() / (b.data().len() as f64).sqrt();
    if sd == 0.0 {
        return Ok(b.clone());
    }
    let normal = Normal::new(0.0, sd).map_err(|e| Error::Numerical(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = b.clone();
    for v in out.data_mut() {
        *v = T::lit(v.as_f64() + normal.sample(&mut rng));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{ellipse_phantom, shepp_logan, EllipseSpec};
    use rand::Rng;

    // Independent slab-clipping oracle: length of the ray inside one pixel box.
    fn ray_box_length(theta: f64, t: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let (px, py, dx, dy) = (t * c, t * s, -s, c);
        let mut lo = -1e300f64;
        let mut hi = 1e300f64;
        for (p, d, a, b) in [(px, dx, x0, x1), (py, dy, y0, y1)] {
            if d.abs() < 1e-14 {
                if p < a || p > b {
                    return 0.0;
                }
            } else {
                let (u, v) = ((a - p) / d, (b - p) / d);
                lo = lo.max(u.min(v));
                hi = hi.min(u.max(v));
            }
        }
        (hi - lo).max(0.0)
    }

    #[test]
    fn single_pixel_centered_ray() {
        let a = ProjectionMatrix::<f64>::build(1, &[0.0], 1).unwrap();
        assert_eq!(a.nnz(), 1);
        let (cols, vals) = a.row(0);
        assert_eq!(cols, &[0]);
        assert!((vals[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_vertical_rays() {
        let a = ProjectionMatrix::<f64>::build(2, &[0.0], 2).unwrap();
        assert_eq!(a.rows(), 2);
        // Ray 0 sits at x = -1/2: column 0, both image rows.
        let (c0, v0) = a.row(0);
        assert_eq!(c0, &[2, 0]);
        let (c1, _) = a.row(1);
        assert_eq!(c1, &[3, 1]);
        let sum: f64 = v0.iter().sum();
        let oracle: f64 = (0..2)
            .map(|r| {
                ray_box_length(0.0, -0.5, -1.0, 0.0, -1.0 + r as f64, r as f64)
            })
            .sum();
        assert!((sum - oracle).abs() < 1e-12);
        assert!((sum - 2.0).abs() < 1e-12);
    }

    #[test]
    fn entries_match_box_oracle() {
        let n = 6;
        let angles = [0.0, 17.0, 45.0, 90.0, 133.3, 179.0];
        // Even p with even n keeps the axis-aligned rays off the grid lines,
        // where attribution to either neighbor is ambiguous.
        let p = 10;
        let a = ProjectionMatrix::<f64>::build(n, &angles, p).unwrap();
        let half = n as f64 / 2.0;
        for (ai, &deg) in angles.iter().enumerate() {
            for k in 0..p {
                let t = k as f64 + 0.5 - p as f64 / 2.0;
                let r = ai * p + k;
                let mut dense = vec![0.0; n * n];
                let (cols, vals) = a.row(r);
                for (c, v) in cols.iter().zip(vals) {
                    dense[*c as usize] += v;
                }
                for row in 0..n {
                    for col in 0..n {
                        let x0 = col as f64 - half;
                        let y1 = half - row as f64;
                        let expect = ray_box_length(deg.to_radians(), t, x0, x0 + 1.0, y1 - 1.0, y1);
                        assert!(
                            (dense[row * n + col] - expect).abs() < 1e-9,
                            "angle {deg} ray {k} pixel ({row},{col}): {} vs {expect}",
                            dense[row * n + col]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn standard_geometry_shape() {
        let a = ProjectionMatrix::<f64>::build(64, &equispaced_angles(36), 64).unwrap();
        assert_eq!(a.rows(), 64 * 36);
        assert_eq!(a.cols(), 64 * 64);
        assert!(a.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn bad_geometry_rejected() {
        assert!(ProjectionMatrix::<f64>::build(4, &[180.0], 4).is_err());
        assert!(ProjectionMatrix::<f64>::build(4, &[-1.0], 4).is_err());
        assert!(ProjectionMatrix::<f64>::build(4, &[], 4).is_err());
        assert!(ProjectionMatrix::<f64>::build(0, &[0.0], 4).is_err());
        assert!(ProjectionMatrix::<f64>::build(4, &[0.0], 0).is_err());
        // Duplicates only warn.
        assert!(ProjectionMatrix::<f64>::build(4, &[10.0, 10.0], 4).is_ok());
    }

    #[test]
    fn zero_image_projects_to_zero() {
        let a = ProjectionMatrix::<f64>::build(8, &equispaced_angles(5), 8).unwrap();
        let s = project(&a, &Image::zeros(8)).unwrap();
        assert!(s.data().iter().all(|&v| v == 0.0));
        assert!(project(&a, &Image::zeros(7)).is_err());
    }

    #[test]
    fn disk_projection_is_rotation_invariant() {
        let n = 64;
        let disk = EllipseSpec {
            center_x: 0.0,
            center_y: 0.0,
            semi_axis_a: 0.6,
            semi_axis_b: 0.6,
            rotation: 0.0,
            additive_intensity: 1.0,
        };
        let x = ellipse_phantom::<f64>(&[disk], n).unwrap();
        let a = ProjectionMatrix::build(n, &equispaced_angles(12), n).unwrap();
        let s = project(&a, &x).unwrap();
        let peak = s.data().iter().cloned().fold(0.0, f64::max);
        let v0 = s.view(0);
        for q in 1..12 {
            let dev = s
                .view(q)
                .iter()
                .zip(v0)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            // Pixelized disk boundary: a couple of pixel widths of chord.
            assert!(dev < 0.1 * peak, "view {q} deviates by {dev} (peak {peak})");
        }
    }

    #[test]
    fn mass_is_conserved_across_views() {
        let n = 64;
        let x = shepp_logan::<f64>(n).unwrap();
        let a = ProjectionMatrix::build(n, &equispaced_angles(36), n).unwrap();
        let s = project(&a, &x).unwrap();
        let mass: f64 = x.data().iter().sum();
        for q in 0..36 {
            let total: f64 = s.view(q).iter().sum::<f64>() * a.detector_spacing();
            assert!((total - mass).abs() / mass < 0.02, "view {q}: {total} vs {mass}");
        }
    }

    #[test]
    fn adjoint_and_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = ProjectionMatrix::<f64>::build(16, &equispaced_angles(10), 16).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..a.cols()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..a.rows()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let ax = a.mul_vec(&x).unwrap();
            let aty = a.mul_transpose_vec(&y).unwrap();
            let lhs = crate::scalar::dot(&ax, &y);
            let rhs = crate::scalar::dot(&x, &aty);
            let scale = crate::scalar::norm(&x) * crate::scalar::norm(&y);
            assert!((lhs - rhs).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn poisson_level_zero_is_identity_and_seeded() {
        let n = 32;
        let a = ProjectionMatrix::build(n, &equispaced_angles(36), n).unwrap();
        let s = project(&a, &shepp_logan::<f64>(n).unwrap()).unwrap();
        assert_eq!(add_poisson_noise(&s, 0.0, 1).unwrap(), s);
        assert_eq!(add_gaussian_noise(&s, 0.0, 1).unwrap(), s);
        let n1 = add_poisson_noise(&s, 0.1, 9).unwrap();
        let n2 = add_poisson_noise(&s, 0.1, 9).unwrap();
        assert_eq!(n1, n2);
        assert_ne!(n1, add_poisson_noise(&s, 0.1, 10).unwrap());
    }

    #[test]
    fn noise_argument_errors() {
        let s = Sinogram::from_vec(2, 1, vec![1.0, -0.5]).unwrap();
        assert!(add_poisson_noise(&s, 0.1, 0).is_err());
        let s = Sinogram::from_vec(2, 1, vec![1.0, 0.5]).unwrap();
        assert!(add_poisson_noise(&s, 1.0, 0).is_err());
        assert!(add_gaussian_noise(&s, -0.1, 0).is_err());
    }

    #[test]
    fn matrix_and_sinogram_roundtrip() {
        let a = ProjectionMatrix::<f64>::build(8, &[0.0, 33.0, 91.5], 10).unwrap();
        let mut buf = Vec::new();
        a.write_raw(&mut buf).unwrap();
        let b = ProjectionMatrix::<f64>::read_raw(&buf[..]).unwrap();
        assert_eq!(a.row_ptr, b.row_ptr);
        assert_eq!(a.col_idx, b.col_idx);
        assert_eq!(a.values, b.values);
        assert_eq!(a.angles, b.angles);
        assert_eq!(a.t_values, b.t_values);

        let s = project(&a, &shepp_logan(8).unwrap()).unwrap();
        let mut buf = Vec::new();
        s.write_raw(&mut buf).unwrap();
        assert_eq!(&buf[..8], SINOGRAM_MAGIC);
        assert_eq!(Sinogram::<f64>::read_raw(&buf[..]).unwrap(), s);
    }
}

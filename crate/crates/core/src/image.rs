//! Square grayscale images, row-major, pixel (0, 0) at the top-left.

use std::io::{Read, Write};

use crate::error::{check_len, invalid, Error, Result};
use crate::io::{read_f64_block, read_header, write_f64_block, write_header};
use crate::scalar::Real;

pub const IMAGE_MAGIC: &[u8; 8] = b"AGTVIMG1";

#[derive(Clone, Debug, PartialEq)]
pub struct Image<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Image<T> {
    pub fn zeros(n: usize) -> Self {
        Image {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn filled(n: usize, value: T) -> Self {
        Image {
            n,
            data: vec![value; n * n],
        }
    }

    /// Wraps a row-major buffer of length `n * n`. Non-finite values are rejected.
    pub fn from_vec(n: usize, data: Vec<T>) -> Result<Self> {
        check_len(n * n, data.len(), "image data")?;
        if !crate::scalar::all_finite(&data) {
            return invalid("image contains non-finite values");
        }
        Ok(Image { n, data })
    }

    pub(crate) fn from_vec_unchecked(n: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), n * n);
        Image { n, data }
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.n + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: T) {
        self.data[row * self.n + col] = v;
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Image {
            n: self.n,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> Image<U> {
        Image {
            n: self.n,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    /// Raw little-endian `f64` format: 16-byte header (magic, `u32` n, `u32` reserved)
    /// followed by `n * n` samples.
    pub fn write_raw<W: Write>(&self, mut w: W) -> Result<()> {
        write_header(&mut w, IMAGE_MAGIC, self.n as u32, 0)?;
        write_f64_block(&mut w, self.data.iter().map(|v| v.as_f64()))?;
        Ok(())
    }

    pub fn read_raw<R: Read>(mut r: R) -> Result<Self> {
        let (n, _reserved) = read_header(&mut r, IMAGE_MAGIC)?;
        let n = n as usize;
        let data = read_f64_block(&mut r, n * n)?;
        Image::from_vec(n, data.into_iter().map(T::lit).collect())
    }

    /// 16-bit binary PGM, linearly mapping `[min, max]` to `[0, 65535]`.
    pub fn write_pgm<W: Write>(&self, mut w: W) -> Result<()> {
        let (lo, hi) = self.data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            let v = v.as_f64();
            (lo.min(v), hi.max(v))
        });
        let span = if hi > lo { hi - lo } else { 1.0 };
        write!(w, "P5\n{} {}\n65535\n", self.n, self.n)?;
        let mut buf = Vec::with_capacity(self.data.len() * 2);
        for v in &self.data {
            let level = if self.data.is_empty() {
                0.0
            } else {
                ((v.as_f64() - lo) / span * 65535.0).round()
            };
            buf.extend_from_slice(&(level.clamp(0.0, 65535.0) as u16).to_be_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }
}

impl<T: Real> TryFrom<(usize, Vec<T>)> for Image<T> {
    type Error = Error;

    fn try_from((n, data): (usize, Vec<T>)) -> Result<Self> {
        Image::from_vec(n, data)
    }
}

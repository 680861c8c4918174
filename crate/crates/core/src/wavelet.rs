//! Orthonormal 2-D Daubechies-4 wavelet transform with periodic boundaries.
//!
//! Coefficients use the Mallat layout: after each level the top-left quarter
//! holds the approximation band, with horizontal, vertical and diagonal
//! details in the remaining quarters. Deeper levels recurse into the
//! top-left block.

use crate::error::{check_len, invalid, Result};
use crate::image::Image;
use crate::scalar::Real;

const SQRT3: f64 = 1.732_050_807_568_877_2;

fn d4_lowpass() -> [f64; 4] {
    let s = 4.0 * std::f64::consts::SQRT_2;
    [
        (1.0 + SQRT3) / s,
        (3.0 + SQRT3) / s,
        (3.0 - SQRT3) / s,
        (1.0 - SQRT3) / s,
    ]
}

/// Quadrature mirror of the lowpass: `g[k] = (-1)^k h[3 - k]`.
fn d4_highpass() -> [f64; 4] {
    let h = d4_lowpass();
    [h[3], -h[2], h[1], -h[0]]
}

/// Coefficients of [`Dwt2::analyze`] in Mallat layout.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletCoeffs<T> {
    n: usize,
    levels: usize,
    data: Vec<T>,
}

impl<T: Real> WaveletCoeffs<T> {
    pub fn from_vec(n: usize, levels: usize, data: Vec<T>) -> Result<Self> {
        check_len(n * n, data.len(), "wavelet coefficients")?;
        check_levels(n, levels)?;
        Ok(WaveletCoeffs { n, levels, data })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Side of the coarsest approximation band.
    pub fn approx_side(&self) -> usize {
        self.n >> self.levels
    }
}

fn check_levels(n: usize, levels: usize) -> Result<()> {
    if levels >= usize::BITS as usize || n == 0 || !n.is_multiple_of(1usize << levels) {
        return invalid(format!(
            "image side {n} is not divisible by 2^{levels}; reduce the number of wavelet levels"
        ));
    }
    Ok(())
}

/// `log2(n) - 2` levels when `n` allows it, leaving a 4x4 approximation band
/// for powers of two; otherwise as many levels as `n` is divisible by two.
pub fn default_levels(n: usize) -> usize {
    if n < 8 {
        return 0;
    }
    let depth = (usize::BITS - 1 - n.leading_zeros()) as usize - 2;
    depth.min(n.trailing_zeros() as usize)
}

/// Reusable 2-D transform for a fixed image side and depth.
#[derive(Clone, Debug)]
pub struct Dwt2<T> {
    n: usize,
    levels: usize,
    low: [T; 4],
    high: [T; 4],
}

impl<T: Real> Dwt2<T> {
    pub fn new(n: usize, levels: usize) -> Result<Self> {
        check_levels(n, levels)?;
        Ok(Dwt2 {
            n,
            levels,
            low: d4_lowpass().map(T::lit),
            high: d4_highpass().map(T::lit),
        })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    fn forward_1d(&self, x: &[T], out: &mut [T]) {
        let len = x.len();
        let half = len / 2;
        for i in 0..half {
            let mut a = T::zero();
            let mut d = T::zero();
            for k in 0..4 {
                let v = x[(2 * i + k) % len];
                a = a + self.low[k] * v;
                d = d + self.high[k] * v;
            }
            out[i] = a;
            out[half + i] = d;
        }
    }

    fn inverse_1d(&self, c: &[T], out: &mut [T]) {
        let len = c.len();
        let half = len / 2;
        out.iter_mut().for_each(|v| *v = T::zero());
        for i in 0..half {
            let (a, d) = (c[i], c[half + i]);
            for k in 0..4 {
                let j = (2 * i + k) % len;
                out[j] = out[j] + self.low[k] * a + self.high[k] * d;
            }
        }
    }

    /// Applies `f` to every row, then every column, of the top-left `len x len` block.
    fn separable(&self, data: &mut [T], len: usize, forward: bool) {
        let n = self.n;
        let mut line = vec![T::zero(); len];
        let mut out = vec![T::zero(); len];
        let pass = |line: &[T], out: &mut [T]| {
            if forward {
                self.forward_1d(line, out)
            } else {
                self.inverse_1d(line, out)
            }
        };
        if forward {
            for r in 0..len {
                line.copy_from_slice(&data[r * n..r * n + len]);
                pass(&line, &mut out);
                data[r * n..r * n + len].copy_from_slice(&out);
            }
        }
        for c in 0..len {
            for r in 0..len {
                line[r] = data[r * n + c];
            }
            pass(&line, &mut out);
            for r in 0..len {
                data[r * n + c] = out[r];
            }
        }
        if !forward {
            for r in 0..len {
                line.copy_from_slice(&data[r * n..r * n + len]);
                pass(&line, &mut out);
                data[r * n..r * n + len].copy_from_slice(&out);
            }
        }
    }

    /// In-place analysis `Phi^*` on a row-major `n x n` buffer.
    pub fn forward_in_place(&self, data: &mut [T]) {
        debug_assert_eq!(data.len(), self.n * self.n);
        let mut len = self.n;
        for _ in 0..self.levels {
            self.separable(data, len, true);
            len /= 2;
        }
    }

    /// In-place synthesis `Phi`, the exact inverse (and adjoint) of the analysis.
    pub fn inverse_in_place(&self, data: &mut [T]) {
        debug_assert_eq!(data.len(), self.n * self.n);
        for level in (0..self.levels).rev() {
            self.separable(data, self.n >> level, false);
        }
    }

    pub fn analyze(&self, x: &Image<T>) -> Result<WaveletCoeffs<T>> {
        check_len(self.n, x.side(), "wavelet image side")?;
        let mut data = x.data().to_vec();
        self.forward_in_place(&mut data);
        Ok(WaveletCoeffs {
            n: self.n,
            levels: self.levels,
            data,
        })
    }

    pub fn synthesize(&self, c: &WaveletCoeffs<T>) -> Result<Image<T>> {
        check_len(self.n, c.n, "wavelet coefficient side")?;
        check_len(self.levels, c.levels, "wavelet levels")?;
        let mut data = c.data.clone();
        self.inverse_in_place(&mut data);
        Ok(Image::from_vec_unchecked(self.n, data))
    }
}

/// Wavelet analysis `Phi^*(x)` with the given depth.
pub fn analyze<T: Real>(x: &Image<T>, levels: usize) -> Result<WaveletCoeffs<T>> {
    Dwt2::new(x.side(), levels)?.analyze(x)
}

/// Wavelet synthesis `Phi(c)`.
pub fn synthesize<T: Real>(c: &WaveletCoeffs<T>) -> Result<Image<T>> {
    Dwt2::new(c.n, c.levels)?.synthesize(c)
}

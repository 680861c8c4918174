//! Small sparse-matrix type and power iteration for PSD operators.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Result};
use crate::scalar::{dot, norm, Real};

/// Compressed-sparse-row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<T>,
}

impl<T: Real> CsrMatrix<T> {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn mul_vec(&self, x: &[T]) -> Result<Vec<T>> {
        check_len(self.cols, x.len(), "sparse matrix input")?;
        Ok((0..self.rows)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .fold(T::zero(), |acc, k| acc + self.values[k] * x[self.col_idx[k] as usize])
            })
            .collect())
    }

    /// Entry lookup; linear in the row length.
    pub fn get(&self, r: usize, c: usize) -> T {
        (self.row_ptr[r]..self.row_ptr[r + 1])
            .find(|&k| self.col_idx[k] as usize == c)
            .map(|k| self.values[k])
            .unwrap_or_else(T::zero)
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut m = vec![vec![T::zero(); self.cols]; self.rows];
        for (r, row) in m.iter_mut().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row[self.col_idx[k] as usize] = row[self.col_idx[k] as usize] + self.values[k];
            }
        }
        m
    }
}

/// Result of a power iteration.
#[derive(Clone, Copy, Debug)]
pub struct PowerEstimate<T> {
    /// Largest eigenvalue of the PSD operator.
    pub eigenvalue: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Largest eigenvalue of a symmetric positive semidefinite operator.
///
/// Stops when the Rayleigh quotient changes by less than `tol` relative;
/// otherwise returns the last iterate with `converged = false`.
pub fn power_iteration<T: Real>(
    dim: usize,
    mut apply: impl FnMut(&[T], &mut [T]),
    max_iter: usize,
    tol: f64,
    seed: u64,
) -> PowerEstimate<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<T> = (0..dim).map(|_| T::lit(rng.random_range(0.5..1.5))).collect();
    let nv = norm(&v);
    if nv == T::zero() {
        return PowerEstimate {
            eigenvalue: T::zero(),
            iterations: 0,
            converged: true,
        };
    }
    v.iter_mut().for_each(|x| *x = *x / nv);
    let mut w = vec![T::zero(); dim];
    let mut lambda = T::zero();
    for it in 1..=max_iter {
        apply(&v, &mut w);
        let next = dot(&v, &w);
        let nw = norm(&w);
        if nw == T::zero() {
            return PowerEstimate {
                eigenvalue: T::zero(),
                iterations: it,
                converged: true,
            };
        }
        for (a, b) in v.iter_mut().zip(&w) {
            *a = *b / nw;
        }
        let change = (next - lambda).abs().as_f64();
        lambda = next;
        if it > 1 && change <= tol * lambda.abs().as_f64() {
            return PowerEstimate {
                eigenvalue: lambda,
                iterations: it,
                converged: true,
            };
        }
    }
    warn!("power iteration did not reach tolerance {tol} in {max_iter} iterations");
    PowerEstimate {
        eigenvalue: lambda,
        iterations: max_iter,
        converged: false,
    }
}

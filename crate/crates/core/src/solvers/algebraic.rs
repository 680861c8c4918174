use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::image::Image;
use crate::projector::{ProjectionMatrix, Sinogram};
use crate::scalar::{all_finite, dist_sq, Real};

use super::config::SolverConfig;
use super::primal_dual::{check_data, relative_change, Run};
use super::{fbp_prior, ReconResult};

/// Row order of Kaczmarz sweeps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtMode {
    #[default]
    Cyclic,
    /// `m` rows drawn uniformly with replacement per sweep.
    Randomized,
}

/// Diagonal scalings of the simultaneous update.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SirtMode {
    /// `R = diag(1 / (m ||a_i||^2))`, `C = I`.
    Cimmino,
    /// `R = diag(1 / sum_j a_ij)`, `C = diag(1 / sum_i a_ij)`.
    #[default]
    Sart,
}

fn prepare<T: Real>(
    a: &ProjectionMatrix<T>,
    b: &Sinogram<T>,
    cfg: &SolverConfig<T>,
    x0: Option<&Image<T>>,
) -> Result<Image<T>> {
    cfg.validate()?;
    cfg.check_eta()?;
    check_data(a, b)?;
    let x0 = match x0 {
        Some(x) => x.clone(),
        None => fbp_prior(a, b, cfg)?,
    };
    check_len(a.image_side(), x0.side(), "initial image side")?;
    Ok(x0)
}

fn data_misfit<T: Real>(a: &ProjectionMatrix<T>, b: &[T], x: &[T], ax: &mut [T]) -> f64 {
    a.apply(x, ax);
    dist_sq(ax, b).as_f64()
}

fn finish<T: Real>(n: usize, x: Vec<T>, initial: f64, run: Run, iters: usize) -> ReconResult<T> {
    ReconResult {
        image: Image::from_vec_unchecked(n, x),
        initial_objective: Some(initial),
        wall_time: run.start.elapsed(),
        trace: run.trace,
        outer_iterations_used: 1,
        inner_iterations_used: vec![iters],
        converged: false,
    }
}

/// Relaxed Kaczmarz sweeps `x += eta (b_i - <a_i, x>) / ||a_i||^2 a_i`;
/// `inner_iters` sweeps of `m` row updates each. Zero rows are skipped.
pub fn art_solve<T: Real>(
    a: &ProjectionMatrix<T>,
    b: &Sinogram<T>,
    cfg: &SolverConfig<T>,
    mode: ArtMode,
    x0: Option<&Image<T>>,
) -> Result<ReconResult<T>> {
    let x0 = prepare(a, b, cfg, x0)?;
    let norms = a.row_norms_sq();
    let m = a.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut ax = vec![T::zero(); m];

    let mut run = Run::new();
    let initial = data_misfit(a, b.data(), x0.data(), &mut ax);
    let mut x = x0.into_vec();
    let mut prev = x.clone();
    for sweep in 0..cfg.inner_iters {
        prev.copy_from_slice(&x);
        for step in 0..m {
            let r = match mode {
                ArtMode::Cyclic => step,
                ArtMode::Randomized => rng.random_range(0..m),
            };
            if norms[r] == T::zero() {
                continue;
            }
            let (cols, vals) = a.row(r);
            let dot = cols
                .iter()
                .zip(vals)
                .fold(T::zero(), |acc, (&c, &v)| acc + v * x[c as usize]);
            let scale = cfg.eta * (b.data()[r] - dot) / norms[r];
            for (&c, &v) in cols.iter().zip(vals) {
                x[c as usize] = x[c as usize] + scale * v;
            }
        }
        if !all_finite(&x) {
            return Err(Error::Numerical(format!("non-finite ART iterate in sweep {}", sweep + 1)));
        }
        let obj = cfg.log_objective.then(|| data_misfit(a, b.data(), &x, &mut ax));
        run.push(0, obj, relative_change(&x, &prev, cfg.delta), 0.0);
    }
    Ok(finish(a.image_side(), x, initial, run, cfg.inner_iters))
}

/// Simultaneous update `x += eta C A^T R (b - A x)` for `inner_iters`
/// iterations. Zero row or column sums get zero scaling.
pub fn sirt_solve<T: Real>(
    a: &ProjectionMatrix<T>,
    b: &Sinogram<T>,
    cfg: &SolverConfig<T>,
    mode: SirtMode,
    x0: Option<&Image<T>>,
) -> Result<ReconResult<T>> {
    let x0 = prepare(a, b, cfg, x0)?;
    let inv = |v: T| if v > T::zero() { T::one() / v } else { T::zero() };
    let m = T::from_usize_lossy(a.rows());
    let (row_scale, col_scale): (Vec<T>, Vec<T>) = match mode {
        SirtMode::Cimmino => (
            a.row_norms_sq().into_iter().map(|v| inv(v * m)).collect(),
            vec![T::one(); a.cols()],
        ),
        SirtMode::Sart => (
            a.row_sums().into_iter().map(inv).collect(),
            a.col_sums().into_iter().map(inv).collect(),
        ),
    };

    let mut run = Run::new();
    let mut r = vec![T::zero(); a.rows()];
    let mut back = vec![T::zero(); a.cols()];
    let initial = data_misfit(a, b.data(), x0.data(), &mut r);
    let mut x = x0.into_vec();
    let mut prev = x.clone();
    for it in 0..cfg.inner_iters {
        prev.copy_from_slice(&x);
        a.apply(&x, &mut r);
        for ((ri, &bi), &s) in r.iter_mut().zip(b.data()).zip(&row_scale) {
            *ri = (bi - *ri) * s;
        }
        a.apply_transpose(&r, &mut back);
        for ((xi, &g), &s) in x.iter_mut().zip(&back).zip(&col_scale) {
            *xi = *xi + cfg.eta * s * g;
        }
        if !all_finite(&x) {
            return Err(Error::Numerical(format!("non-finite SIRT iterate at iteration {}", it + 1)));
        }
        let obj = cfg.log_objective.then(|| data_misfit(a, b.data(), &x, &mut r));
        run.push(0, obj, relative_change(&x, &prev, cfg.delta), 0.0);
    }
    Ok(finish(a.image_side(), x, initial, run, cfg.inner_iters))
}

use crate::error::{check_len, invalid, Result};
use crate::image::Image;
use crate::linalg::power_iteration;
use crate::patch_graph::PatchGraph;
use crate::projector::ProjectionMatrix;
use crate::scalar::{dist_sq, soft_threshold, Real};
use crate::wavelet::Dwt2;

use super::config::BetaRule;

/// Spectral norm of `A` and the derived Lipschitz constant of `grad f`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LipschitzEstimate<T> {
    pub spectral_norm_a: T,
    pub beta: T,
    pub converged: bool,
}

/// `2 A^T (A x - b)`
pub fn grad_f<T: Real>(a: &ProjectionMatrix<T>, x: &[T], b: &[T]) -> Result<Vec<T>> {
    check_len(a.cols(), x.len(), "grad_f image")?;
    check_len(a.rows(), b.len(), "grad_f data")?;
    let mut r = vec![T::zero(); a.rows()];
    let mut g = vec![T::zero(); a.cols()];
    grad_f_into(a, x, b, &mut r, &mut g);
    Ok(g)
}

/// Allocation-free [`grad_f`]; `r` receives `A x - b`.
pub(crate) fn grad_f_into<T: Real>(a: &ProjectionMatrix<T>, x: &[T], b: &[T], r: &mut [T], g: &mut [T]) {
    a.apply(x, r);
    for (ri, &bi) in r.iter_mut().zip(b) {
        *ri = *ri - bi;
    }
    a.apply_transpose(r, g);
    let two = T::lit(2.0);
    g.iter_mut().for_each(|v| *v = *v * two);
}

/// Elementwise soft-thresholding, the proximal map of `t ||.||_1`.
pub fn prox_l1<T: Real>(v: &[T], t: T) -> Result<Vec<T>> {
    if !(t >= T::zero()) {
        return invalid(format!("prox threshold must be non-negative, got {t}"));
    }
    Ok(v.iter().map(|&x| soft_threshold(x, t)).collect())
}

/// Power iteration on `A^T A`.
pub fn estimate_beta<T: Real>(
    a: &ProjectionMatrix<T>,
    iterations: usize,
    tol: f64,
    rule: BetaRule,
) -> Result<LipschitzEstimate<T>> {
    if a.nnz() == 0 {
        return invalid("projection matrix has no non-zero entries");
    }
    let mut tmp = vec![T::zero(); a.rows()];
    let est = power_iteration(
        a.cols(),
        |x, y| {
            a.apply(x, &mut tmp);
            a.apply_transpose(&tmp, y);
        },
        iterations,
        tol,
        0x6265_7461,
    );
    let sigma = est.eigenvalue.max(T::zero()).sqrt();
    if sigma == T::zero() {
        return Err(crate::Error::Numerical("spectral norm of A estimated as zero".into()));
    }
    let two = T::lit(2.0);
    let beta = match rule {
        BetaRule::SpectralNormSquared => two * sigma * sigma,
        BetaRule::SpectralNorm => two * sigma,
    };
    Ok(LipschitzEstimate {
        spectral_norm_a: sigma,
        beta,
        converged: est.converged,
    })
}

/// Objective terms at `x`: data fit, wavelet sparsity and graph TV.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct ObjectiveParts<T> {
    pub data: T,
    pub sparsity: T,
    pub tv: T,
}

impl<T: Real> ObjectiveParts<T> {
    pub fn total(&self, lambda: T, gamma: T) -> T {
        self.data + lambda * self.sparsity + gamma * self.tv
    }
}

pub(crate) fn objective_parts<T: Real>(
    a: &ProjectionMatrix<T>,
    b: &[T],
    dwt: &Dwt2<T>,
    graph: Option<&PatchGraph<T>>,
    x: &[T],
    ax: &mut [T],
    coeffs: &mut [T],
) -> ObjectiveParts<T> {
    a.apply(x, ax);
    let data = dist_sq(ax, b);
    coeffs.copy_from_slice(x);
    dwt.forward_in_place(coeffs);
    let sparsity = coeffs.iter().fold(T::zero(), |acc, v| acc + v.abs());
    let tv = graph.map_or(T::zero(), |g| g.total_variation(x));
    ObjectiveParts { data, sparsity, tv }
}

/// `||A x - b||^2 + lambda ||Phi^* x||_1 + gamma ||grad_G x||_1`, where the
/// graph term is dropped when `graph` is `None`.
pub fn objective<T: Real>(
    a: &ProjectionMatrix<T>,
    b: &[T],
    x: &Image<T>,
    lambda: T,
    gamma: T,
    graph: Option<&PatchGraph<T>>,
    wavelet_levels: usize,
) -> Result<T> {
    check_len(a.cols(), x.data().len(), "objective image")?;
    check_len(a.rows(), b.len(), "objective data")?;
    if let Some(g) = graph {
        check_len(g.node_count(), x.data().len(), "objective graph")?;
    }
    let dwt = Dwt2::new(x.side(), wavelet_levels)?;
    let mut ax = vec![T::zero(); a.rows()];
    let mut coeffs = vec![T::zero(); x.data().len()];
    Ok(objective_parts(a, b, &dwt, graph, x.data(), &mut ax, &mut coeffs).total(lambda, gamma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projector::equispaced_angles;
    use crate::scalar::norm;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small_system(n: usize, q: usize) -> ProjectionMatrix<f64> {
        ProjectionMatrix::build(n, &equispaced_angles(q), n).unwrap()
    }

    fn dense(a: &ProjectionMatrix<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(a.rows(), a.cols());
        for r in 0..a.rows() {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                m[(r, c as usize)] = v;
            }
        }
        m
    }

    fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
        (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn gradient_vanishes_at_exact_solution() {
        let a = small_system(6, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_vec(&mut rng, 36);
        let b = a.mul_vec(&x).unwrap();
        assert!(grad_f(&a, &x, &b).unwrap().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let a = small_system(5, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_vec(&mut rng, 25);
        let b = random_vec(&mut rng, a.rows());
        let f = |x: &[f64]| dist_sq(&a.mul_vec(x).unwrap(), &b);
        let g = grad_f(&a, &x, &b).unwrap();
        let h = 1e-5;
        for i in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (f(&xp) - f(&xm)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0), "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn gradient_rejects_mismatch() {
        let a = small_system(4, 3);
        assert!(grad_f(&a, &[0.0; 15], &vec![0.0; a.rows()]).is_err());
        assert!(grad_f(&a, &[0.0; 16], &[0.0; 2]).is_err());
    }

    #[test]
    fn prox_examples() {
        assert_eq!(prox_l1(&[3.0, -0.5], 1.0).unwrap(), vec![2.0, 0.0]);
        let v = [1.5, -2.25, 0.0, 1e-300];
        assert_eq!(prox_l1(&v, 0.0).unwrap(), v.to_vec());
        assert!(prox_l1(&v, -1e-9).is_err());
        assert!(prox_l1(&v, f64::NAN).is_err());
    }

    #[test]
    fn prox_minimizes_on_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let step = 1e-3;
        for _ in 0..20 {
            let v = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let t = rng.random_range(0.0..1.5);
            let p = prox_l1(&v, t).unwrap();
            // Separable objective: minimize each coordinate on a 1e-3 grid.
            for d in 0..2 {
                let cost = |u: f64| t * u.abs() + 0.5 * (u - v[d]).powi(2);
                let best = (-3000..=3000)
                    .map(|k| k as f64 * step)
                    .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
                    .unwrap();
                assert!((best - p[d]).abs() <= step, "{best} vs {}", p[d]);
            }
        }
    }

    #[test]
    fn beta_of_scaled_identity_like_system() {
        // A single view of a 1x1 image: A = [1], so sigma = 1 and beta = 2.
        let a = ProjectionMatrix::<f64>::build(1, &[0.0], 1).unwrap();
        let est = estimate_beta(&a, 100, 1e-12, BetaRule::SpectralNormSquared).unwrap();
        let s = a.row(0).1[0];
        assert!((est.spectral_norm_a - s).abs() < 1e-12);
        assert!((est.beta - 2.0 * s * s).abs() < 1e-12);
        let lit = estimate_beta(&a, 100, 1e-12, BetaRule::SpectralNorm).unwrap();
        assert!((lit.beta - 2.0 * s).abs() < 1e-12);
    }

    #[test]
    fn beta_matches_dense_svd() {
        let a = small_system(8, 6);
        let sv = dense(&a).singular_values();
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let est = estimate_beta(&a, 5000, 1e-14, BetaRule::SpectralNormSquared).unwrap();
        assert!((est.spectral_norm_a - smax).abs() <= 1e-6 * smax);
        assert!((est.beta - 2.0 * smax * smax).abs() <= 1e-6 * est.beta);
    }

    #[test]
    fn gradient_is_beta_lipschitz() {
        let a = small_system(8, 5);
        let est = estimate_beta(&a, 5000, 1e-14, BetaRule::SpectralNormSquared).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = random_vec(&mut rng, a.rows());
        for _ in 0..100 {
            let x = random_vec(&mut rng, 64);
            let y = random_vec(&mut rng, 64);
            let gx = grad_f(&a, &x, &b).unwrap();
            let gy = grad_f(&a, &y, &b).unwrap();
            let lhs = dist_sq(&gx, &gy).sqrt();
            let rhs = est.beta * dist_sq(&x, &y).sqrt();
            assert!(lhs <= rhs * (1.0 + 1e-9), "{lhs} > {rhs}");
        }
    }

    #[test]
    fn objective_of_exact_zero_is_zero() {
        let a = small_system(8, 4);
        let x = Image::<f64>::zeros(8);
        let b = vec![0.0; a.rows()];
        assert_eq!(objective(&a, &b, &x, 1.0, 1.0, None, 1).unwrap(), 0.0);
    }

    #[test]
    fn objective_data_term() {
        let a = small_system(8, 4);
        let x = Image::<f64>::filled(8, 0.0);
        let b: Vec<f64> = (0..a.rows()).map(|i| i as f64 * 0.1).collect();
        let v = objective(&a, &b, &x, 0.0, 0.0, None, 1).unwrap();
        assert!((v - norm(&b).powi(2)).abs() < 1e-12);
    }
}

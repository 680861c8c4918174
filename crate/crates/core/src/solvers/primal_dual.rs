use std::time::Instant;

use log::{debug, info};

use crate::error::{check_len, Error, Result};
use crate::image::Image;
use crate::patch_graph::{grid_graph, operator_norm, patch_graph_from_image, NeighborSearch, PatchGraph};
use crate::projector::{ProjectionMatrix, Sinogram};
use crate::scalar::{all_finite, dist_sq, norm_sq, soft_threshold, Real};
use crate::wavelet::{default_levels, Dwt2};

use super::config::SolverConfig;
use super::ops::{estimate_beta, grad_f_into, objective_parts};
use super::{fbp_prior, ReconResult, TraceRow};

/// Resolved step sizes of the primal-dual iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSizes<T> {
    pub tau1: T,
    pub tau2: T,
    pub tau3: T,
}

impl<T: Real> StepSizes<T> {
    /// Fills unset steps with `tau1 = 1/beta`, `tau2 = 1/(4 tau1 ||grad_G||^2)`
    /// and `tau3 = 1`, so that `tau1 (beta/2 + tau2 ||grad_G||^2) <= 3/4`.
    pub fn resolve(cfg: &SolverConfig<T>, beta: T, grad_norm: T) -> Self {
        let tau1 = cfg.tau1.unwrap_or_else(|| T::one() / beta);
        let tau2 = cfg.tau2.unwrap_or_else(|| {
            if grad_norm > T::zero() {
                T::one() / (T::lit(4.0) * tau1 * grad_norm * grad_norm)
            } else {
                T::one()
            }
        });
        StepSizes {
            tau1,
            tau2,
            tau3: cfg.tau3.unwrap_or_else(T::one),
        }
    }
}

/// Read-only problem data shared by the iterations of one solve.
pub(crate) struct Problem<'a, T: Real> {
    pub a: &'a ProjectionMatrix<T>,
    pub b: &'a [T],
    pub n: usize,
    pub dwt: Dwt2<T>,
    pub beta: T,
}

pub(crate) fn check_data<T: Real>(a: &ProjectionMatrix<T>, b: &Sinogram<T>) -> Result<()> {
    check_len(a.rows(), b.data().len(), "sinogram size")?;
    check_len(a.rays_per_view(), b.rays(), "rays per view")
}

impl<'a, T: Real> Problem<'a, T> {
    pub fn new(a: &'a ProjectionMatrix<T>, b: &'a Sinogram<T>, cfg: &SolverConfig<T>) -> Result<Self> {
        cfg.validate()?;
        check_data(a, b)?;
        let n = a.image_side();
        let dwt = Dwt2::new(n, cfg.wavelet_levels.unwrap_or_else(|| default_levels(n)))?;
        let beta = match cfg.beta {
            Some(beta) => beta,
            None => {
                let est = estimate_beta(a, cfg.power_iters, cfg.power_tol, cfg.beta_rule)?;
                debug!("sigma_max(A) = {}, beta = {}", est.spectral_norm_a, est.beta);
                est.beta
            }
        };
        Ok(Problem {
            a,
            b: b.data(),
            n,
            dwt,
            beta,
        })
    }

    pub fn check_image(&self, x: &Image<T>) -> Result<()> {
        check_len(self.n, x.side(), "initial image side")
    }

    fn objective(&self, graph: Option<&PatchGraph<T>>, lambda: T, gamma: T, x: &[T]) -> f64 {
        let mut ax = vec![T::zero(); self.a.rows()];
        let mut coeffs = vec![T::zero(); x.len()];
        objective_parts(self.a, self.b, &self.dwt, graph, x, &mut ax, &mut coeffs)
            .total(lambda, gamma)
            .as_f64()
    }
}

/// `||new - old||^2 / (||old||^2 + delta)`
pub(crate) fn relative_change<T: Real>(new: &[T], old: &[T], delta: T) -> f64 {
    (dist_sq(new, old) / (norm_sq(old) + delta)).as_f64()
}

/// Mutable state carried between calls to [`inner_loop`].
pub(crate) struct Run {
    pub start: Instant,
    pub trace: Vec<TraceRow>,
}

impl Run {
    pub fn new() -> Self {
        Run {
            start: Instant::now(),
            trace: Vec::new(),
        }
    }

    pub fn push(&mut self, outer: usize, objective: Option<f64>, residual_u: f64, residual_v: f64) {
        self.trace.push(TraceRow {
            iteration: self.trace.len() + 1,
            outer,
            objective,
            residual_u,
            residual_v,
            wall_time_ms: self.start.elapsed().as_secs_f64() * 1e3,
        });
    }
}

pub(crate) struct InnerOutcome<T> {
    pub image: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

/// Steps a-d of the forward-backward primal-dual iteration on a fixed graph.
fn inner_loop<T: Real>(
    prob: &Problem<'_, T>,
    graph: &PatchGraph<T>,
    cfg: &SolverConfig<T>,
    x0: &[T],
    outer: usize,
    run: &mut Run,
) -> Result<InnerOutcome<T>> {
    let grad_norm = operator_norm(graph, cfg.power_iters, cfg.power_tol).eigenvalue;
    let steps = StepSizes::resolve(cfg, prob.beta, grad_norm);
    debug!(
        "pass {outer}: |E| = {}, ||grad_G|| = {grad_norm}, tau = ({}, {}, {})",
        graph.edge_count(),
        steps.tau1,
        steps.tau2,
        steps.tau3
    );
    let (tau1, tau2, tau3) = (steps.tau1, steps.tau2, steps.tau3);
    let nodes = x0.len();
    let edges = graph.edge_count();
    let gamma = cfg.gamma;
    let shrink = tau1 * cfg.lambda;
    let exact_relax = tau3 == T::one();

    let mut u = x0.to_vec();
    // V0 = grad_G x0, projected onto the dual feasible box |V| <= gamma.
    let mut v = vec![T::zero(); edges];
    graph.gradient_into(&u, &mut v);
    v.iter_mut().for_each(|e| *e = e.max(-gamma).min(gamma));

    let mut resid = vec![T::zero(); prob.a.rows()];
    let mut grad = vec![T::zero(); nodes];
    let mut div = vec![T::zero(); nodes];
    let mut p = vec![T::zero(); nodes];
    let mut extrap = vec![T::zero(); nodes];
    let mut t = vec![T::zero(); edges];
    let mut u_next = vec![T::zero(); nodes];
    let mut v_next = vec![T::zero(); edges];
    let mut ax = vec![T::zero(); prob.a.rows()];
    let mut coeffs = vec![T::zero(); nodes];

    let mut converged = false;
    let mut iterations = 0;
    for j in 0..cfg.inner_iters {
        // (a) P = Phi(prox_{tau1 g}(Phi^*(U - tau1 (grad f(U) + grad_G^* V))))
        grad_f_into(prob.a, &u, prob.b, &mut resid, &mut grad);
        graph.divergence_into(&v, &mut div);
        for i in 0..nodes {
            p[i] = u[i] - tau1 * (grad[i] + div[i]);
        }
        prob.dwt.forward_in_place(&mut p);
        p.iter_mut().for_each(|c| *c = soft_threshold(*c, shrink));
        prob.dwt.inverse_in_place(&mut p);

        // (b) T = V + tau2 grad_G(2P - U)
        for i in 0..nodes {
            extrap[i] = p[i] + p[i] - u[i];
        }
        graph.gradient_into(&extrap, &mut t);
        for (te, &ve) in t.iter_mut().zip(&v) {
            *te = ve + tau2 * *te;
        }

        // (c) Q = T - tau2 prox_{h/tau2}(T / tau2), h = gamma ||.||_1
        // (d) relaxation by tau3
        let thresh = gamma / tau2;
        for e in 0..edges {
            let q = t[e] - tau2 * soft_threshold(t[e] / tau2, thresh);
            v_next[e] = if exact_relax { q } else { v[e] + tau3 * (q - v[e]) };
        }
        for i in 0..nodes {
            u_next[i] = if exact_relax { p[i] } else { u[i] + tau3 * (p[i] - u[i]) };
        }
        if !all_finite(&u_next) || !all_finite(&v_next) {
            return Err(Error::Numerical(format!(
                "non-finite iterate at inner iteration {} of pass {outer}; step sizes too large?",
                j + 1
            )));
        }

        let ru = relative_change(&u_next, &u, cfg.delta);
        let rv = relative_change(&v_next, &v, cfg.delta);
        if !ru.is_finite() || !rv.is_finite() {
            return Err(Error::Numerical(format!(
                "iterate norm overflowed at inner iteration {} of pass {outer}; step sizes too large?",
                j + 1
            )));
        }
        std::mem::swap(&mut u, &mut u_next);
        std::mem::swap(&mut v, &mut v_next);
        iterations = j + 1;

        let obj = cfg.log_objective.then(|| {
            objective_parts(prob.a, prob.b, &prob.dwt, Some(graph), &u, &mut ax, &mut coeffs)
                .total(cfg.lambda, gamma)
                .as_f64()
        });
        run.push(outer, obj, ru, rv);

        if ru < cfg.epsilon.as_f64() && rv < cfg.epsilon.as_f64() {
            converged = true;
            break;
        }
    }
    Ok(InnerOutcome {
        image: u,
        iterations,
        converged,
    })
}

fn single_pass<T: Real>(
    prob: &Problem<'_, T>,
    graph: &PatchGraph<T>,
    cfg: &SolverConfig<T>,
    x0: &Image<T>,
) -> Result<ReconResult<T>> {
    prob.check_image(x0)?;
    check_len(graph.node_count(), x0.data().len(), "graph nodes")?;
    let mut run = Run::new();
    let initial = prob.objective(Some(graph), cfg.lambda, cfg.gamma, x0.data());
    let out = inner_loop(prob, graph, cfg, x0.data(), 0, &mut run)?;
    Ok(ReconResult {
        image: Image::from_vec_unchecked(prob.n, out.image),
        initial_objective: Some(initial),
        trace: run.trace,
        outer_iterations_used: 1,
        inner_iterations_used: vec![out.iterations],
        converged: out.converged,
        wall_time: run.start.elapsed(),
    })
}

/// Fixed-graph solve of the full objective from `x0` (inner loop only).
pub fn gtv_solve<T: Real>(
    a: &ProjectionMatrix<T>,
    b: &Sinogram<T>,
    graph: &PatchGraph<T>,
    cfg: &SolverConfig<T>,
    x0: &Image<T>,
) -> Result<ReconResult<T>> {
    let prob = Problem::new(a, b, cfg)?;
    single_pass(&prob, graph, cfg, x0)
}

/// [`gtv_solve`] on the 4-neighbor grid graph, i.e. wavelet sparsity plus
/// anisotropic TV. `x0` defaults to the FBP reconstruction.
pub fn cstv_solve<T: Real>(
    a: &ProjectionMatrix<T>,
    b: &Sinogram<T>,
    cfg: &SolverConfig<T>,
    x0: Option<&Image<T>>,
) -> Result<ReconResult<T>> {
    let prob = Problem::new(a, b, cfg)?;
    let prior;
    let x0 = match x0 {
        Some(x) => x,
        None => {
            prior = fbp_prior(a, b, cfg)?;
            &prior
        }
    };
    let graph = grid_graph(prob.n);
    single_pass(&prob, &graph, cfg, x0)
}

/// Proximal gradient on `||Ax - b||^2 + lambda ||Phi^* x||_1` with step
/// `tau1` for exactly `inner_iters` iterations.
pub fn cs_solve<T: Real>(
    a: &ProjectionMatrix<T>,
    b: &Sinogram<T>,
    cfg: &SolverConfig<T>,
    x0: Option<&Image<T>>,
) -> Result<ReconResult<T>> {
    let prob = Problem::new(a, b, cfg)?;
    let x0 = match x0 {
        Some(x) => x.clone(),
        None => fbp_prior(a, b, cfg)?,
    };
    prob.check_image(&x0)?;
    let tau1 = StepSizes::resolve(cfg, prob.beta, T::zero()).tau1;
    let shrink = tau1 * cfg.lambda;
    let nodes = x0.data().len();

    let mut run = Run::new();
    let initial = prob.objective(None, cfg.lambda, T::zero(), x0.data());
    let mut x = x0.into_vec();
    let mut next = vec![T::zero(); nodes];
    let mut resid = vec![T::zero(); a.rows()];
    let mut grad = vec![T::zero(); nodes];
    let mut ax = vec![T::zero(); a.rows()];
    let mut coeffs = vec![T::zero(); nodes];
    for j in 0..cfg.inner_iters {
        grad_f_into(a, &x, prob.b, &mut resid, &mut grad);
        for i in 0..nodes {
            next[i] = x[i] - tau1 * grad[i];
        }
        prob.dwt.forward_in_place(&mut next);
        next.iter_mut().for_each(|c| *c = soft_threshold(*c, shrink));
        prob.dwt.inverse_in_place(&mut next);
        if !all_finite(&next) {
            return Err(Error::Numerical(format!(
                "non-finite iterate at iteration {}; step size too large?",
                j + 1
            )));
        }
        let ru = relative_change(&next, &x, cfg.delta);
        if !ru.is_finite() {
            return Err(Error::Numerical(format!("iterate norm overflowed at iteration {}", j + 1)));
        }
        std::mem::swap(&mut x, &mut next);
        let obj = cfg.log_objective.then(|| {
            objective_parts(a, prob.b, &prob.dwt, None, &x, &mut ax, &mut coeffs)
                .total(cfg.lambda, T::zero())
                .as_f64()
        });
        run.push(0, obj, ru, 0.0);
    }
    Ok(ReconResult {
        image: Image::from_vec_unchecked(prob.n, x),
        initial_objective: Some(initial),
        trace: run.trace,
        outer_iterations_used: 1,
        inner_iterations_used: vec![cfg.inner_iters],
        converged: false,
        wall_time: run.start.elapsed(),
    })
}

/// Adaptive solve starting from the FBP reconstruction.
pub fn agtv<T: Real>(a: &ProjectionMatrix<T>, b: &Sinogram<T>, cfg: &SolverConfig<T>) -> Result<ReconResult<T>> {
    let x0 = fbp_prior(a, b, cfg)?;
    agtv_from(a, b, cfg, &x0)
}

/// Adaptive solve: each outer pass rebuilds the patch graph from the current
/// estimate and runs the inner loop on it.
pub fn agtv_from<T: Real>(
    a: &ProjectionMatrix<T>,
    b: &Sinogram<T>,
    cfg: &SolverConfig<T>,
    x0: &Image<T>,
) -> Result<ReconResult<T>> {
    let prob = Problem::new(a, b, cfg)?;
    prob.check_image(x0)?;
    let mut run = Run::new();
    let mut x = x0.clone();
    let mut initial = None;
    let mut inner_used = Vec::new();
    let mut converged = false;
    for pass in 0..cfg.outer_iters {
        let search = NeighborSearch::Approximate(cfg.approx_params(pass));
        let graph = patch_graph_from_image(&x, cfg.patch_side, cfg.k, search)?;
        if pass == 0 {
            initial = Some(prob.objective(Some(&graph), cfg.lambda, cfg.gamma, x.data()));
        }
        let out = inner_loop(&prob, &graph, cfg, x.data(), pass, &mut run)?;
        inner_used.push(out.iterations);
        let change = (dist_sq(&out.image, x.data()) / (norm_sq(&out.image) + cfg.delta)).as_f64();
        x = Image::from_vec_unchecked(prob.n, out.image);
        info!("outer pass {pass}: {} inner iterations, change {change:.3e}", out.iterations);
        if change < cfg.epsilon.as_f64() {
            converged = true;
            break;
        }
    }
    Ok(ReconResult {
        image: x,
        initial_objective: initial,
        trace: run.trace,
        outer_iterations_used: inner_used.len(),
        inner_iterations_used: inner_used,
        converged,
        wall_time: run.start.elapsed(),
    })
}

//! Reconstruction algorithms.
//!
//! The primal-dual solvers minimize
//! `||A x - b||^2 + lambda ||Phi^* x||_1 + gamma ||grad_G x||_1`; the
//! algebraic baselines (ART, SIRT) only use the data term.

mod algebraic;
mod config;
mod methods;
mod ops;
mod primal_dual;

use std::io::Write;
use std::time::Duration;

pub use algebraic::{art_solve, sirt_solve, ArtMode, SirtMode};
pub use config::{BetaRule, SolverConfig};
pub use methods::{reconstruct, Method};
pub use ops::{estimate_beta, grad_f, objective, prox_l1, LipschitzEstimate};
pub use primal_dual::{agtv, agtv_from, cs_solve, cstv_solve, gtv_solve, StepSizes};

use crate::error::Result;
use crate::projector::{ProjectionMatrix, Sinogram};
use crate::image::Image;
use crate::scalar::Real;

/// One logged iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    /// Global iteration counter across outer passes, starting at 1.
    pub iteration: usize,
    /// Outer pass (0 for single-pass solvers).
    pub outer: usize,
    /// Objective at the new iterate, when logging is enabled.
    pub objective: Option<f64>,
    /// `||U_{j+1} - U_j||^2 / (||U_j||^2 + delta)`
    pub residual_u: f64,
    /// Same for the dual variable; 0 for solvers without one.
    pub residual_v: f64,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug)]
pub struct ReconResult<T> {
    pub image: Image<T>,
    /// Objective at the starting point (the full regularized objective for
    /// primal-dual solvers, `||Ax - b||^2` for the algebraic ones).
    pub initial_objective: Option<f64>,
    pub trace: Vec<TraceRow>,
    pub outer_iterations_used: usize,
    /// Inner iterations performed in each outer pass.
    pub inner_iterations_used: Vec<usize>,
    /// True when the stopping test fired before the iteration cap.
    pub converged: bool,
    pub wall_time: Duration,
}

impl<T: Real> ReconResult<T> {
    pub fn objective_trace(&self) -> Vec<f64> {
        self.trace.iter().filter_map(|r| r.objective).collect()
    }

    pub fn residual_trace(&self) -> Vec<f64> {
        self.trace.iter().map(|r| r.residual_u).collect()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.trace.last().and_then(|r| r.objective)
    }

    /// CSV with columns `iteration,objective,residual_U,residual_V,wall_time_ms,outer`.
    pub fn write_trace_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iteration,objective,residual_U,residual_V,wall_time_ms,outer")?;
        for r in &self.trace {
            let obj = r.objective.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{:.3},{}",
                r.iteration, obj, r.residual_u, r.residual_v, r.wall_time_ms, r.outer
            )?;
        }
        Ok(())
    }
}

/// FBP reconstruction of `b` on the projector's grid, the default `x0`.
pub(crate) fn fbp_prior<T: Real>(
    a: &ProjectionMatrix<T>,
    b: &Sinogram<T>,
    cfg: &SolverConfig<T>,
) -> Result<Image<T>> {
    crate::fbp::fbp_reconstruct(b, a.angles(), a.image_side(), &cfg.fbp)
}

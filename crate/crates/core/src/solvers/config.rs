use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fbp::FbpConfig;
use crate::patch_graph::ApproxParams;
use crate::scalar::Real;

use super::algebraic::{ArtMode, SirtMode};

/// How the Lipschitz constant of `grad f` is derived from `A`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaRule {
    /// `2 sigma_max(A)^2`, the Lipschitz constant of `2 A^T (A x - b)`.
    #[default]
    SpectralNormSquared,
    /// `2 sigma_max(A)`, kept for comparison runs only.
    SpectralNorm,
}

/// Hyperparameters shared by all solvers. Fields a solver does not use are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig<T> {
    /// Wavelet sparsity weight.
    pub lambda: T,
    /// Graph total-variation weight.
    pub gamma: T,
    /// Primal step; `None` derives `1 / beta`.
    pub tau1: Option<T>,
    /// Dual step; `None` derives `1 / (4 tau1 ||grad_G||^2)`.
    pub tau2: Option<T>,
    /// Relaxation; `None` means 1.
    pub tau3: Option<T>,
    pub epsilon: T,
    pub delta: T,
    /// Inner iterations J (also the iteration cap of single-loop solvers).
    pub inner_iters: usize,
    /// Outer graph updates I.
    pub outer_iters: usize,
    /// Neighbors per patch.
    pub k: usize,
    /// Patch side l (odd).
    pub patch_side: usize,
    /// Leaf probes of the approximate neighbor search; `None` is exact.
    pub knn_probes: Option<usize>,
    pub knn_trees: usize,
    /// ART/SIRT relaxation.
    pub eta: T,
    pub seed: u64,
    /// Wavelet depth; `None` uses [`crate::wavelet::default_levels`].
    pub wavelet_levels: Option<usize>,
    pub log_objective: bool,
    pub beta_rule: BetaRule,
    /// Precomputed Lipschitz constant, skipping the power iteration.
    pub beta: Option<T>,
    pub power_iters: usize,
    pub power_tol: f64,
    pub fbp: FbpConfig,
    pub art_mode: ArtMode,
    pub sirt_mode: SirtMode,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            lambda: T::lit(0.5),
            gamma: T::lit(1.0),
            tau1: None,
            tau2: None,
            tau3: None,
            epsilon: T::lit(1e-4),
            delta: T::lit(1e-10),
            inner_iters: 30,
            outer_iters: 30,
            k: 15,
            patch_side: 3,
            knn_probes: Some(32),
            knn_trees: 4,
            eta: T::lit(0.25),
            seed: 0,
            wavelet_levels: None,
            log_objective: true,
            beta_rule: BetaRule::default(),
            beta: None,
            power_iters: 1000,
            power_tol: 1e-10,
            fbp: FbpConfig::default(),
            art_mode: ArtMode::default(),
            sirt_mode: SirtMode::default(),
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: T| {
            if v >= T::zero() && v.is_finite() {
                Ok(())
            } else {
                invalid(format!("{name} must be finite and non-negative, got {v}"))
            }
        };
        nonneg("lambda", self.lambda)?;
        nonneg("gamma", self.gamma)?;
        for (name, v) in [("tau1", self.tau1), ("tau2", self.tau2), ("tau3", self.tau3), ("beta", self.beta)] {
            if let Some(v) = v {
                if !(v > T::zero() && v.is_finite()) {
                    return invalid(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if !(self.epsilon > T::zero()) {
            return invalid("epsilon must be positive");
        }
        if !(self.delta > T::zero() && self.delta.is_finite()) {
            return invalid("delta must be positive");
        }
        if self.inner_iters == 0 || self.outer_iters == 0 {
            return invalid("iteration counts must be at least 1");
        }
        if self.patch_side == 0 || self.patch_side.is_multiple_of(2) {
            return invalid("patch side must be odd");
        }
        if self.k == 0 {
            return invalid("K must be at least 1");
        }
        Ok(())
    }

    pub(crate) fn approx_params(&self, pass: usize) -> ApproxParams {
        ApproxParams {
            max_leaf_probes: self.knn_probes,
            trees: self.knn_trees,
            seed: self.seed.wrapping_add(pass as u64),
            ..ApproxParams::default()
        }
    }

    pub(crate) fn check_eta(&self) -> Result<()> {
        if self.eta > T::zero() && self.eta < T::lit(2.0) {
            Ok(())
        } else {
            invalid(format!("relaxation eta must lie in (0, 2), got {}", self.eta))
        }
    }
}

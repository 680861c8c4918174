//! Tomographic reconstruction with adaptive patch-graph total variation.
//!
//! The crate solves
//!
//! ```text
//! min_x ||A x - b||^2 + lambda ||Phi^* x||_1 + gamma ||grad_G x||_1
//! ```
//!
//! where `A` is a parallel-beam projector, `Phi` an orthonormal wavelet and
//! `grad_G` the gradient of a K-nearest-neighbor patch graph. The adaptive
//! solver rebuilds the graph from the current estimate between passes of a
//! forward-backward primal-dual inner loop. Baselines (FBP, ART, SIRT, CS,
//! CS+TV, fixed-graph GTV) share the same operators.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod error;
pub mod fbp;
pub mod image;
mod io;
pub mod linalg;
pub mod metrics;
pub mod patch_graph;
pub mod phantom;
pub mod projector;
pub mod scalar;
pub mod solvers;
pub mod wavelet;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Image64 = image::Image<f64>;
pub type Image32 = image::Image<f32>;
pub type Sinogram64 = projector::Sinogram<f64>;
pub type Sinogram32 = projector::Sinogram<f32>;
pub type ProjectionMatrix64 = projector::ProjectionMatrix<f64>;
pub type ProjectionMatrix32 = projector::ProjectionMatrix<f32>;
pub type PatchGraph64 = patch_graph::PatchGraph<f64>;
pub type PatchGraph32 = patch_graph::PatchGraph<f32>;
pub type WaveletCoeffs64 = wavelet::WaveletCoeffs<f64>;
pub type SolverConfig64 = solvers::SolverConfig<f64>;
pub type SolverConfig32 = solvers::SolverConfig<f32>;
pub type ReconResult64 = solvers::ReconResult<f64>;
pub type ReconResult32 = solvers::ReconResult<f32>;



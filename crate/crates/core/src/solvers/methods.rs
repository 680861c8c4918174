use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::image::Image;
use crate::patch_graph::{patch_graph_from_image, NeighborSearch};
use crate::projector::{ProjectionMatrix, Sinogram};
use crate::scalar::{dist_sq, Real};

use super::algebraic::{art_solve, sirt_solve};
use super::config::SolverConfig;
use super::primal_dual::{agtv_from, check_data, cs_solve, cstv_solve, gtv_solve};
use super::{fbp_prior, ReconResult, TraceRow};

/// Reconstruction methods selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fbp,
    Art,
    Sirt,
    Cs,
    Cstv,
    Gtv,
    Agtv,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Fbp,
        Method::Art,
        Method::Sirt,
        Method::Cs,
        Method::Cstv,
        Method::Gtv,
        Method::Agtv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Fbp => "fbp",
            Method::Art => "art",
            Method::Sirt => "sirt",
            Method::Cs => "cs",
            Method::Cstv => "cstv",
            Method::Gtv => "gtv",
            Method::Agtv => "agtv",
        }
    }

    /// Published baseline settings for the 64x64 Shepp-Logan experiment.
    pub fn default_config<T: Real>(self) -> SolverConfig<T> {
        let base = SolverConfig::<T>::default();
        let half = T::lit(0.5);
        match self {
            Method::Fbp => base,
            Method::Art | Method::Sirt => SolverConfig {
                eta: T::lit(0.25),
                inner_iters: 100,
                ..base
            },
            Method::Cs => SolverConfig {
                lambda: half,
                gamma: T::zero(),
                inner_iters: 500,
                ..base
            },
            Method::Cstv => SolverConfig {
                lambda: half,
                gamma: T::lit(0.1),
                inner_iters: 100,
                ..base
            },
            Method::Gtv => SolverConfig {
                lambda: half,
                gamma: T::lit(0.2),
                inner_iters: 100,
                k: 15,
                ..base
            },
            Method::Agtv => SolverConfig {
                lambda: half,
                gamma: T::one(),
                inner_iters: 30,
                outer_iters: 30,
                k: 15,
                ..base
            },
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown method '{s}'; expected one of fbp, art, sirt, cs, cstv, gtv, agtv"
                ))
            })
    }
}

/// Runs `method` with `cfg`; `x0` defaults to the FBP reconstruction.
///
/// GTV builds its fixed graph from `x0` with the pass-0 neighbor search of
/// the adaptive solver.
pub fn reconstruct<T: Real>(
    method: Method,
    a: &ProjectionMatrix<T>,
    b: &Sinogram<T>,
    cfg: &SolverConfig<T>,
    x0: Option<&Image<T>>,
) -> Result<ReconResult<T>> {
    check_data(a, b)?;
    if let Some(x) = x0 {
        if x.side() != a.image_side() {
            return invalid(format!("initial image side {} != {}", x.side(), a.image_side()));
        }
    }
    let prior = || -> Result<Image<T>> {
        match x0 {
            Some(x) => Ok(x.clone()),
            None => fbp_prior(a, b, cfg),
        }
    };
    match method {
        Method::Fbp => {
            let start = Instant::now();
            let image = fbp_prior(a, b, cfg)?;
            let misfit = dist_sq(&a.mul_vec(image.data())?, b.data()).as_f64();
            Ok(ReconResult {
                image,
                initial_objective: None,
                trace: vec![TraceRow {
                    iteration: 1,
                    outer: 0,
                    objective: Some(misfit),
                    residual_u: 0.0,
                    residual_v: 0.0,
                    wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
                }],
                outer_iterations_used: 1,
                inner_iterations_used: vec![1],
                converged: true,
                wall_time: start.elapsed(),
            })
        }
        Method::Art => art_solve(a, b, cfg, cfg.art_mode, x0),
        Method::Sirt => sirt_solve(a, b, cfg, cfg.sirt_mode, x0),
        Method::Cs => cs_solve(a, b, cfg, x0),
        Method::Cstv => cstv_solve(a, b, cfg, x0),
        Method::Gtv => {
            cfg.validate()?;
            let x0 = prior()?;
            let search = NeighborSearch::Approximate(cfg.approx_params(0));
            let graph = patch_graph_from_image(&x0, cfg.patch_side, cfg.k, search)?;
            gtv_solve(a, b, &graph, cfg, &x0)
        }
        Method::Agtv => agtv_from(a, b, cfg, &prior()?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::shepp_logan;
    use crate::projector::{equispaced_angles, project};

    #[test]
    fn names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
            assert_eq!(m.to_string().to_uppercase().parse::<Method>().unwrap(), m);
        }
        assert!("nltv".parse::<Method>().is_err());
    }

    #[test]
    fn published_defaults() {
        let c = Method::Agtv.default_config::<f64>();
        assert_eq!((c.lambda, c.gamma, c.inner_iters, c.outer_iters, c.k, c.patch_side), (0.5, 1.0, 30, 30, 15, 3));
        let c = Method::Gtv.default_config::<f64>();
        assert_eq!((c.lambda, c.gamma, c.inner_iters), (0.5, 0.2, 100));
        let c = Method::Cstv.default_config::<f64>();
        assert_eq!((c.lambda, c.gamma, c.inner_iters), (0.5, 0.1, 100));
        assert_eq!(Method::Cs.default_config::<f64>().inner_iters, 500);
        for m in [Method::Art, Method::Sirt] {
            let c = m.default_config::<f64>();
            assert_eq!((c.eta, c.inner_iters), (0.25, 100));
        }
        for m in Method::ALL {
            m.default_config::<f64>().validate().unwrap();
        }
    }

    #[test]
    fn every_method_runs() {
        let a = ProjectionMatrix::build(16, &equispaced_angles(12), 16).unwrap();
        let x = shepp_logan::<f64>(16).unwrap();
        let b = project(&a, &x).unwrap();
        for m in Method::ALL {
            let cfg = SolverConfig {
                inner_iters: 3,
                outer_iters: 2,
                k: 6,
                ..m.default_config()
            };
            let r = reconstruct(m, &a, &b, &cfg, None).unwrap();
            assert!(!r.trace.is_empty(), "{m}");
            assert_eq!(r.image.side(), 16);
        }
        assert!(reconstruct(Method::Cs, &a, &b, &SolverConfig::default(), Some(&Image::zeros(8))).is_err());
    }
}

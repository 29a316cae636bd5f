//! Serializable problem descriptors.
//!
//! ```toml
//! family = "least_squares"   # least_squares | ridge | logistic
//! d = 5
//! sigma_noise = 1.0
//! lambda = 0.0
//! seed = 7
//!
//! [design]
//! kind = "truncated_gaussian"  # truncated_gaussian | gaussian | sphere | finite
//! radius = 4.0
//!
//! [bias]
//! kind = "quadratic"           # none | quadratic
//! scale = 0.5
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ParameterVector;

use super::linear::Noise;
use super::logistic::DEFAULT_ANCHOR_POINTS;
use super::{Bias, Design, LinearRegressionProblem, LogisticRegressionProblem, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LeastSquares,
    Ridge,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    #[default]
    TruncatedGaussian,
    Gaussian,
    Sphere,
    Finite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BiasKind {
    #[default]
    None,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Gaussian,
    Rademacher,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    #[serde(default)]
    pub kind: DesignKind,
    /// Bound on `‖X‖`; defaults to `4√d` for truncated Gaussians, `√d` for spheres.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BiasConfig {
    #[serde(default)]
    pub kind: BiasKind,
    #[serde(default)]
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ProblemDescriptor {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseKind>,
    /// Generating parameter; defaults to `(1, …, 1)/√d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_star: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub design: DesignConfig,
    #[serde(default)]
    pub bias: BiasConfig,
}

fn key_err(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: format!("problem.{key}"),
        message: message.into(),
    }
}

impl ProblemDescriptor {
    pub fn least_squares(d: usize) -> Self {
        ProblemDescriptor {
            family: Some(Family::LeastSquares),
            d: Some(d),
            ..Default::default()
        }
    }

    pub fn logistic(d: usize, lambda: f64) -> Self {
        ProblemDescriptor {
            family: Some(Family::Logistic),
            d: Some(d),
            lambda: Some(lambda),
            ..Default::default()
        }
    }

    pub fn build(&self) -> Result<Problem> {
        let family = self.family.ok_or_else(|| Error::MissingKey("problem.family".into()))?;
        let d = self.d.ok_or_else(|| Error::MissingKey("problem.d".into()))?;
        if d == 0 {
            return Err(key_err("d", "must be at least 1"));
        }
        let lambda = self.lambda.unwrap_or(match family {
            Family::Logistic => 1.0,
            _ => 0.0,
        });
        if !(lambda >= 0.0) {
            return Err(key_err("lambda", format!("must be nonnegative, got {lambda}")));
        }
        if family == Family::Ridge && lambda == 0.0 {
            return Err(key_err("lambda", "ridge needs lambda > 0"));
        }
        if family == Family::Logistic && lambda <= 0.0 {
            return Err(key_err("lambda", "logistic needs lambda > 0"));
        }
        let w = match &self.w_star {
            Some(w) if w.len() != d => {
                return Err(key_err("w_star", format!("expected {d} entries, found {}", w.len())))
            }
            Some(w) => ParameterVector::from_slice(w).map_err(|e| key_err("w_star", e.to_string()))?,
            None => ParameterVector::from_vec(vec![1.0 / (d as f64).sqrt(); d])?,
        };
        let design = self.build_design(d)?;
        let bias = match self.bias.kind {
            BiasKind::None => Bias::None,
            BiasKind::Quadratic => Bias::Quadratic { scale: self.bias.scale },
        };
        let problem = match family {
            Family::LeastSquares | Family::Ridge => {
                let sigma_noise = self.sigma_noise.unwrap_or(1.0);
                if !(sigma_noise >= 0.0) {
                    return Err(key_err("sigma_noise", format!("must be nonnegative, got {sigma_noise}")));
                }
                let noise = match self.noise.unwrap_or_default() {
                    NoiseKind::Gaussian => Noise::Gaussian,
                    NoiseKind::Rademacher => Noise::Rademacher,
                };
                Problem::LeastSquares(
                    LinearRegressionProblem::builder(design, w)
                        .sigma_noise(sigma_noise)
                        .noise(noise)
                        .lambda(lambda)
                        .bias(bias)
                        .build()?,
                )
            }
            Family::Logistic => Problem::Logistic(
                LogisticRegressionProblem::builder(design, w)
                    .lambda(lambda)
                    .bias(bias)
                    .anchor_points(self.anchor_points.unwrap_or(DEFAULT_ANCHOR_POINTS))
                    .anchor_seed(self.seed.unwrap_or(0))
                    .build()?,
            ),
        };
        Ok(problem)
    }

    fn build_design(&self, d: usize) -> Result<Design> {
        let cfg = &self.design;
        let design = match cfg.kind {
            DesignKind::TruncatedGaussian => match cfg.radius {
                Some(r) => Design::truncated_gaussian(d, r),
                None => Design::truncated_gaussian_default(d),
            },
            DesignKind::Gaussian => Design::gaussian(d),
            DesignKind::Sphere => Design::sphere(d, cfg.radius.unwrap_or((d as f64).sqrt())),
            DesignKind::Finite => {
                let points = cfg
                    .points
                    .clone()
                    .ok_or_else(|| Error::MissingKey("problem.design.points".into()))?;
                let probs = cfg.probs.clone().unwrap_or_else(|| vec![1.0; points.len()]);
                if points.iter().any(|p| p.len() != d) {
                    return Err(key_err("design.points", format!("every point needs {d} coordinates")));
                }
                Design::finite(points, probs)
            }
        };
        design.map_err(|e| key_err("design", e.to_string()))
    }
}

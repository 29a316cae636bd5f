use serde::{Deserialize, Serialize};

use crate::error::{Divergence, Error, Result};
use crate::linalg::{check_dim, ParameterVector};
use crate::objectives::{LossSample, StochasticObjective};
use crate::rng::SeededRng;
use crate::svrg::DIVERGENCE_FACTOR;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SgdStep {
    Constant { gamma: f64 },
    /// `γ_n = γ0 / n^c`
    PolynomialDecay { gamma0: f64, c: f64 },
}

impl SgdStep {
    pub fn at(&self, n: u64) -> f64 {
        match *self {
            SgdStep::Constant { gamma } => gamma,
            SgdStep::PolynomialDecay { gamma0, c } => gamma0 / (n as f64).powf(c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdConfig {
    pub step: SgdStep,
    /// Uniform average of all iterates `w_1..w_N`.
    #[serde(default)]
    pub average: bool,
    pub sample_budget: u64,
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_budget == 0 {
            return Err(Error::invalid("sgd budget must be at least 1"));
        }
        match self.step {
            SgdStep::Constant { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::invalid(format!("sgd step must be positive, got {gamma}")))
            }
            SgdStep::PolynomialDecay { gamma0, c } => {
                if !(gamma0 > 0.0 && gamma0.is_finite()) {
                    return Err(Error::invalid(format!("sgd step must be positive, got {gamma0}")));
                }
                if self.average && !(c > 0.5 && c < 1.0) {
                    return Err(Error::invalid(format!("averaged sgd needs decay exponent in (1/2, 1), got {c}")));
                }
                if !(c >= 0.0) {
                    return Err(Error::invalid(format!("decay exponent must be nonnegative, got {c}")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.sample_budget = budget;
        self
    }
}

/// Runs `w_n = w_{n−1} − γ_n ∇ψ_n(w_{n−1})` for `n = 1..N`; returns `w_N`
/// or, when averaging, `(1/N) Σ w_n`.
pub fn sgd_run<O: StochasticObjective + ?Sized>(
    problem: &O,
    config: &SgdConfig,
    w0: &ParameterVector,
    rng: &mut SeededRng,
) -> Result<ParameterVector> {
    config.validate()?;
    check_dim(problem.dim(), w0.dim())?;
    let d = problem.dim();
    let threshold = DIVERGENCE_FACTOR * (1.0 + w0.norm() + problem.parameter_scale());
    let mut w = w0.as_slice().to_vec();
    let mut avg = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut sample = LossSample::zeros(d);
    for n in 1..=config.sample_budget {
        problem.sample_into(&mut rng.sample_rng(), &mut sample);
        g.iter_mut().for_each(|v| *v = 0.0);
        problem.add_gradient(&sample, &w, 1.0, &mut g);
        let gamma = config.step.at(n);
        let mut norm_sq = 0.0;
        for (wi, gi) in w.iter_mut().zip(&g) {
            *wi -= gamma * gi;
            norm_sq += *wi * *wi;
        }
        if !(norm_sq <= threshold * threshold) {
            return Err(Error::Diverged(Box::new(Divergence {
                stage: 0,
                step: n,
                iterate_norm: norm_sq.sqrt(),
                threshold,
                w_tilde: w0.to_vec(),
                partial: None,
            })));
        }
        if config.average {
            // running mean keeps the scale of w
            let inv = 1.0 / n as f64;
            for (a, wi) in avg.iter_mut().zip(&w) {
                *a += (wi - *a) * inv;
            }
        }
    }
    ParameterVector::from_vec(if config.average { avg } else { w })
}

//! Stochastic objectives `P(w) = E[ψ(w)]` with known minimizers.
//!
//! Two families are provided: squared loss `(y − wᵀx)² + λ‖w‖²`
//! ([`LinearRegressionProblem`]) and regularized logistic loss
//! ([`LogisticRegressionProblem`]). Both expose exact population quantities
//! whenever the design allows it and a Monte Carlo [`Evaluation`] with a
//! standard error otherwise.

pub mod descriptor;
pub mod design;
pub mod linear;
pub mod logistic;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{ParameterVector, PsdMatrix};
use crate::rng::{SampleRng, SeededRng};
use crate::stats::RunningStats;

pub use descriptor::{BiasConfig, DesignConfig, ProblemDescriptor};
pub use design::Design;
pub use linear::{LinearRegressionProblem, Noise};
pub use logistic::LogisticRegressionProblem;

/// One observed loss `ψ`: a covariate vector and a response.
#[derive(Debug, Clone, PartialEq)]
pub struct LossSample {
    pub x: Vec<f64>,
    pub y: f64,
}

impl LossSample {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        LossSample { x, y }
    }

    pub fn zeros(d: usize) -> Self {
        LossSample { x: vec![0.0; d], y: 0.0 }
    }
}

/// A population quantity: exact, or estimated with a standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evaluation {
    Exact { value: f64 },
    MonteCarlo { value: f64, std_err: f64 },
}

impl Evaluation {
    pub fn exact(value: f64) -> Self {
        Evaluation::Exact { value }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Evaluation::Exact { value } | Evaluation::MonteCarlo { value, .. } => value,
        }
    }

    pub fn std_err(&self) -> f64 {
        match *self {
            Evaluation::Exact { .. } => 0.0,
            Evaluation::MonteCarlo { std_err, .. } => std_err,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Evaluation::Exact { .. })
    }

    pub(crate) fn from_stats(exact: bool, stats: &RunningStats) -> Self {
        if exact {
            Evaluation::exact(stats.mean())
        } else {
            Evaluation::MonteCarlo {
                value: stats.mean(),
                std_err: stats.std_err(),
            }
        }
    }
}

/// Problem constants entering the stage schedules and the bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// Strong convexity of `P`.
    pub mu: f64,
    /// Almost-sure smoothness of each `ψ`.
    pub l: f64,
    pub kappa: f64,
    /// Smallest `α` with `∇²P(w*) ⪯ α∇²P(w)` for all `w`.
    pub alpha: f64,
    pub sigma_sq: Evaluation,
    pub kurtosis: Evaluation,
    pub self_concordance_m: Evaluation,
    pub lambda: f64,
}

/// Sampling oracle for `ψ ∼ D` plus the population quantities of `P`.
pub trait StochasticObjective: Send + Sync {
    fn dim(&self) -> usize;

    /// Draws one loss using a per-sample generator.
    fn sample_into(&self, rng: &mut SampleRng, out: &mut LossSample);

    /// Draws one loss; consumes exactly one word of `rng`.
    fn sample(&self, rng: &mut SeededRng) -> LossSample {
        let mut s = LossSample::zeros(self.dim());
        self.sample_into(&mut rng.sample_rng(), &mut s);
        s
    }

    fn loss(&self, sample: &LossSample, w: &[f64]) -> f64;

    /// `out += scale · ∇ψ(w)`
    fn add_gradient(&self, sample: &LossSample, w: &[f64], scale: f64, out: &mut [f64]);

    fn gradient(&self, sample: &LossSample, w: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.add_gradient(sample, w, 1.0, &mut g);
        g
    }

    /// Hessian of one loss at `w`.
    fn sample_hessian(&self, sample: &LossSample, w: &[f64]) -> PsdMatrix;

    fn lambda(&self) -> f64;

    /// Almost-sure smoothness `L` of each loss.
    fn smoothness(&self) -> f64;

    /// Strong convexity `μ` of `P`.
    fn strong_convexity(&self) -> f64;

    fn condition_number(&self) -> f64 {
        self.smoothness() / self.strong_convexity()
    }

    fn minimizer(&self) -> &ParameterVector;

    fn hessian_at_optimum(&self) -> &PsdMatrix;

    fn population_value(&self, w: &ParameterVector) -> Evaluation;

    fn population_gradient(&self, w: &ParameterVector) -> ParameterVector;

    fn population_hessian(&self, w: &ParameterVector) -> PsdMatrix;

    /// `P(w) − P(w*)`.
    fn excess_risk(&self, w: &ParameterVector) -> f64;

    /// `σ² = ½ E‖∇ψ(w*)‖²_{(∇²P(w*))⁻¹}`.
    fn sigma_squared(&self) -> Result<Evaluation>;

    fn constants(&self) -> ProblemConstants;

    /// Every `(probability, loss)` outcome when the distribution is finite.
    fn outcomes(&self) -> Option<Vec<(f64, LossSample)>>;

    /// Scale used for the divergence guard.
    fn parameter_scale(&self) -> f64 {
        self.minimizer().norm()
    }
}

/// Monte Carlo kurtosis `E‖∇ψ(w*)‖⁴ / (E‖∇ψ(w*)‖²)²` with a delta-method
/// standard error.
pub fn kurtosis_monte_carlo<O: StochasticObjective + ?Sized>(
    objective: &O,
    draws: usize,
    rng: &mut SeededRng,
) -> Evaluation {
    let w_star = objective.minimizer().as_slice().to_vec();
    let d = objective.dim();
    let mut sample = LossSample::zeros(d);
    let mut g = vec![0.0; d];
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..draws {
        objective.sample_into(&mut rng.sample_rng(), &mut sample);
        g.iter_mut().for_each(|v| *v = 0.0);
        objective.add_gradient(&sample, &w_star, 1.0, &mut g);
        let b = g.iter().map(|v| v * v).sum::<f64>();
        let a = b * b;
        sa += a;
        sb += b;
        saa += a * a;
        sbb += b * b;
        sab += a * b;
    }
    let n = draws as f64;
    let (ma, mb) = (sa / n, sb / n);
    if mb == 0.0 {
        return Evaluation::exact(1.0);
    }
    let var_a = (saa / n - ma * ma) * n / (n - 1.0);
    let var_b = (sbb / n - mb * mb) * n / (n - 1.0);
    let cov = (sab / n - ma * mb) * n / (n - 1.0);
    let k = ma / (mb * mb);
    // gradient of a/b² is (1/b², −2a/b³)
    let (da, db) = (1.0 / (mb * mb), -2.0 * ma / mb.powi(3));
    let var_k = (da * da * var_a + db * db * var_b + 2.0 * da * db * cov) / n;
    Evaluation::MonteCarlo {
        value: k,
        std_err: var_k.max(0.0).sqrt(),
    }
}

/// Monte Carlo `σ²` from sampled gradients at the minimizer.
pub fn sigma_squared_monte_carlo<O: StochasticObjective + ?Sized>(
    objective: &O,
    draws: usize,
    rng: &mut SeededRng,
) -> Result<Evaluation> {
    let chol = objective.hessian_at_optimum().cholesky()?;
    let w_star = objective.minimizer().as_slice().to_vec();
    let mut sample = LossSample::zeros(objective.dim());
    let mut stats = RunningStats::new();
    for _ in 0..draws {
        objective.sample_into(&mut rng.sample_rng(), &mut sample);
        let g = ParameterVector::from_vec(objective.gradient(&sample, &w_star))?;
        stats.push(0.5 * chol.inv_quadratic(&g)?);
    }
    Ok(Evaluation::from_stats(false, &stats))
}

/// Either problem family behind one type, for config-driven use.
#[derive(Debug, Clone)]
pub enum Problem {
    LeastSquares(LinearRegressionProblem),
    Logistic(LogisticRegressionProblem),
}

macro_rules! delegate {
    ($self:ident, $p:ident => $e:expr) => {
        match $self {
            Problem::LeastSquares($p) => $e,
            Problem::Logistic($p) => $e,
        }
    };
}

impl Problem {
    pub fn family(&self) -> &'static str {
        match self {
            Problem::LeastSquares(p) if p.lambda() > 0.0 => "ridge",
            Problem::LeastSquares(_) => "least_squares",
            Problem::Logistic(_) => "logistic",
        }
    }
}

impl StochasticObjective for Problem {
    fn dim(&self) -> usize {
        delegate!(self, p => p.dim())
    }
    fn sample_into(&self, rng: &mut SampleRng, out: &mut LossSample) {
        delegate!(self, p => p.sample_into(rng, out))
    }
    fn loss(&self, sample: &LossSample, w: &[f64]) -> f64 {
        delegate!(self, p => p.loss(sample, w))
    }
    fn add_gradient(&self, sample: &LossSample, w: &[f64], scale: f64, out: &mut [f64]) {
        delegate!(self, p => p.add_gradient(sample, w, scale, out))
    }
    fn sample_hessian(&self, sample: &LossSample, w: &[f64]) -> PsdMatrix {
        delegate!(self, p => p.sample_hessian(sample, w))
    }
    fn lambda(&self) -> f64 {
        delegate!(self, p => p.lambda())
    }
    fn smoothness(&self) -> f64 {
        delegate!(self, p => p.smoothness())
    }
    fn strong_convexity(&self) -> f64 {
        delegate!(self, p => p.strong_convexity())
    }
    fn minimizer(&self) -> &ParameterVector {
        delegate!(self, p => p.minimizer())
    }
    fn hessian_at_optimum(&self) -> &PsdMatrix {
        delegate!(self, p => p.hessian_at_optimum())
    }
    fn population_value(&self, w: &ParameterVector) -> Evaluation {
        delegate!(self, p => p.population_value(w))
    }
    fn population_gradient(&self, w: &ParameterVector) -> ParameterVector {
        delegate!(self, p => p.population_gradient(w))
    }
    fn population_hessian(&self, w: &ParameterVector) -> PsdMatrix {
        delegate!(self, p => p.population_hessian(w))
    }
    fn excess_risk(&self, w: &ParameterVector) -> f64 {
        delegate!(self, p => p.excess_risk(w))
    }
    fn sigma_squared(&self) -> Result<Evaluation> {
        delegate!(self, p => p.sigma_squared())
    }
    fn constants(&self) -> ProblemConstants {
        delegate!(self, p => p.constants())
    }
    fn outcomes(&self) -> Option<Vec<(f64, LossSample)>> {
        delegate!(self, p => p.outcomes())
    }
}

/// Mis-specification offset `b(X)` added to the conditional mean (or logit).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bias {
    #[default]
    None,
    /// `b(X) = scale · x₁²`
    Quadratic { scale: f64 },
}

impl Bias {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Bias::None => 0.0,
            Bias::Quadratic { scale } => scale * x[0] * x[0],
        }
    }

    pub fn is_none(&self) -> bool {
        match *self {
            Bias::None => true,
            Bias::Quadratic { scale } => scale == 0.0,
        }
    }
}

//! Regularized logistic loss `ψ(w) = log(1 + e^{xᵀw}) − y xᵀw + (λ/2)‖w‖²`.
//!
//! Labels follow `Pr(Y = 1 | X) = sigmoid(Xᵀw_model + b(X))`. Population
//! quantities are expectations over a weighted support: the design support
//! itself for finite designs (exact), or a fixed set of anchor draws of `X`
//! for continuous designs. In the latter case the label expectation is still
//! exact given `X`; only the `X` average is Monte Carlo and values come back
//! as [`Evaluation::MonteCarlo`].

use crate::error::{Error, Result};
use crate::linalg::{check_dim, max_generalized_eigenvalue, CholeskyFactor, ParameterVector, PsdMatrix};
use crate::newton::damped_newton;
use crate::rng::{Draws, SampleRng, SeededRng};
use crate::stats::RunningStats;

use super::{Bias, Design, Evaluation, LossSample, ProblemConstants, StochasticObjective};

pub const DEFAULT_ANCHOR_POINTS: usize = 200_000;
const ANCHOR_STREAM: u64 = 0xa4c0;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone)]
struct Support {
    d: usize,
    x: Vec<f64>,
    weight: Vec<f64>,
    /// `Pr(Y = 1 | x)` under the generating parameter.
    q: Vec<f64>,
    exact: bool,
}

impl Support {
    fn len(&self) -> usize {
        self.weight.len()
    }

    fn point(&self, j: usize) -> &[f64] {
        &self.x[j * self.d..(j + 1) * self.d]
    }

    fn margins(&self, w: &[f64]) -> impl Iterator<Item = (usize, f64)> + '_ {
        let w = w.to_vec();
        (0..self.len()).map(move |j| (j, dot(self.point(j), &w)))
    }

    fn stats<F: FnMut(usize) -> f64>(&self, mut f: F) -> Evaluation {
        if self.exact {
            Evaluation::exact((0..self.len()).map(|j| self.weight[j] * f(j)).sum())
        } else {
            let s: RunningStats = (0..self.len()).map(f).collect();
            Evaluation::from_stats(false, &s)
        }
    }
}

/// Precision of the anchored minimizer for continuous designs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorInfo {
    pub points: usize,
    /// Estimated `E‖ŵ − w*‖` of the anchored minimizer w.r.t. the true population.
    pub minimizer_std_err: f64,
    pub newton_residual: f64,
}

#[derive(Debug, Clone)]
pub struct LogisticRegressionBuilder {
    design: Design,
    w_model: ParameterVector,
    lambda: f64,
    bias: Bias,
    anchor_points: usize,
    anchor_seed: u64,
}

impl LogisticRegressionBuilder {
    pub fn lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn bias(mut self, bias: Bias) -> Self {
        self.bias = bias;
        self
    }

    /// Anchor draws for continuous designs (ignored for finite ones).
    pub fn anchor_points(mut self, n: usize) -> Self {
        self.anchor_points = n;
        self
    }

    pub fn anchor_seed(mut self, seed: u64) -> Self {
        self.anchor_seed = seed;
        self
    }

    pub fn build(self) -> Result<LogisticRegressionProblem> {
        LogisticRegressionProblem::from_builder(self)
    }
}

#[derive(Debug, Clone)]
pub struct LogisticRegressionProblem {
    design: Design,
    w_model: ParameterVector,
    lambda: f64,
    bias: Bias,
    support: Support,
    w_star: ParameterVector,
    hess_star: PsdMatrix,
    chol_star: CholeskyFactor,
    p_star: f64,
    anchor: Option<AnchorInfo>,
}

impl LogisticRegressionProblem {
    pub fn builder(design: Design, w_model: ParameterVector) -> LogisticRegressionBuilder {
        LogisticRegressionBuilder {
            design,
            w_model,
            lambda: 1.0,
            bias: Bias::None,
            anchor_points: DEFAULT_ANCHOR_POINTS,
            anchor_seed: 0,
        }
    }

    fn from_builder(b: LogisticRegressionBuilder) -> Result<Self> {
        let d = b.design.dim();
        check_dim(d, b.w_model.dim())?;
        if !(b.lambda > 0.0 && b.lambda.is_finite()) {
            return Err(Error::invalid(format!("logistic lambda must be positive, got {}", b.lambda)));
        }
        if !b.design.sup_norm_sq().is_finite() {
            return Err(Error::invalid("logistic regression needs a bounded design"));
        }
        let support = match b.design.support() {
            Some(points) => {
                let mut x = Vec::with_capacity(points.len() * d);
                let mut weight = Vec::with_capacity(points.len());
                let mut q = Vec::with_capacity(points.len());
                for (p, pt) in points {
                    x.extend_from_slice(pt);
                    weight.push(p);
                    q.push(sigmoid(dot(pt, b.w_model.as_slice()) + b.bias.eval(pt)));
                }
                Support { d, x, weight, q, exact: true }
            }
            None => {
                if b.anchor_points < 2 {
                    return Err(Error::invalid("continuous logistic designs need at least 2 anchor points"));
                }
                let n = b.anchor_points;
                let mut rng = SeededRng::new(b.anchor_seed, ANCHOR_STREAM);
                let mut x = vec![0.0; n * d];
                let mut q = Vec::with_capacity(n);
                for chunk in x.chunks_mut(d) {
                    b.design.sample_into(&mut rng.sample_rng(), chunk);
                    q.push(sigmoid(dot(chunk, b.w_model.as_slice()) + b.bias.eval(chunk)));
                }
                Support {
                    d,
                    x,
                    weight: vec![1.0 / n as f64; n],
                    q,
                    exact: false,
                }
            }
        };
        let lambda = b.lambda;
        let eval = |w: &ParameterVector| {
            (
                population_value_on(&support, lambda, w),
                population_gradient_on(&support, lambda, w),
                population_hessian_on(&support, lambda, w),
            )
        };
        let tol = if support.exact { 1e-12 } else { 1e-11 };
        let out = damped_newton(ParameterVector::zeros(d), tol, 1e-10, 100, eval)?;
        let hess_star = population_hessian_on(&support, lambda, &out.w);
        let chol_star = hess_star.cholesky()?;
        let anchor = (!support.exact).then(|| {
            // sandwich variance of the anchored M-estimator: tr(H⁻¹ Cov(g) H⁻¹) / n
            let n = support.len();
            let mut trace = 0.0;
            for (j, z) in support.margins(out.w.as_slice()) {
                let r = sigmoid(z) - support.q[j];
                let g: Vec<f64> = support
                    .point(j)
                    .iter()
                    .zip(out.w.as_slice())
                    .map(|(x, w)| r * x + lambda * w)
                    .collect();
                let g = ParameterVector::from_vec(g).expect("finite gradient");
                let hg = chol_star.solve(&g).expect("positive definite");
                trace += hg.norm_sq();
            }
            AnchorInfo {
                points: n,
                minimizer_std_err: (trace / n as f64 / n as f64).sqrt(),
                newton_residual: out.grad_norm,
            }
        });
        Ok(LogisticRegressionProblem {
            design: b.design,
            w_model: b.w_model,
            lambda,
            bias: b.bias,
            p_star: out.value,
            w_star: out.w,
            hess_star,
            chol_star,
            support,
            anchor,
        })
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn w_model(&self) -> &ParameterVector {
        &self.w_model
    }

    pub fn bias(&self) -> Bias {
        self.bias
    }

    /// `None` for finite designs, where the minimizer is exact.
    pub fn anchor_info(&self) -> Option<AnchorInfo> {
        self.anchor
    }

    pub fn is_exact(&self) -> bool {
        self.support.exact
    }

    /// `α = λ_max(∇²P(w*)) / λ`.
    ///
    /// `∇²P(w) ⪰ λI` everywhere and `∇²P(tv) → λI` as `t → ∞` along any
    /// direction `v` not orthogonal to a nonzero support point, so the supremum
    /// over `w ∈ ℝ^d` of the largest generalized eigenvalue of
    /// `(∇²P(w*), ∇²P(w))` is exactly this ratio.
    pub fn alpha(&self) -> f64 {
        (self.hess_star.lambda_max() / self.lambda).max(1.0)
    }

    /// Largest generalized eigenvalue of `(∇²P(w*), ∇²P(w))` over the given
    /// probes: a lower estimate of `α` restricted to those points.
    pub fn alpha_on(&self, probes: &[ParameterVector]) -> Result<f64> {
        let mut best = 1.0f64;
        for w in probes {
            let h = self.population_hessian(w);
            best = best.max(max_generalized_eigenvalue(&self.hess_star, &h)?);
        }
        Ok(best)
    }

    /// `M = α E[‖X‖³_{(∇²P(w*))⁻¹}]`.
    pub fn self_concordance(&self) -> Evaluation {
        let alpha = self.alpha();
        let chol = &self.chol_star;
        let e = self.support.stats(|j| {
            let x = ParameterVector::from_slice(self.support.point(j)).expect("finite point");
            chol.inv_quadratic(&x).expect("positive definite").powf(1.5)
        });
        scale_eval(e, alpha)
    }

    /// Per-(x, y) weighted evaluation of `f(x, y)` over the support with
    /// labels integrated exactly.
    fn label_stats<F: Fn(&[f64], f64) -> f64>(&self, f: F) -> Evaluation {
        self.support.stats(|j| {
            let x = self.support.point(j);
            let q = self.support.q[j];
            q * f(x, 1.0) + (1.0 - q) * f(x, 0.0)
        })
    }

    fn grad_at_star(&self, x: &[f64], y: f64) -> ParameterVector {
        let r = sigmoid(dot(x, self.w_star.as_slice())) - y;
        let g: Vec<f64> = x
            .iter()
            .zip(self.w_star.as_slice())
            .map(|(xi, wi)| r * xi + self.lambda * wi)
            .collect();
        ParameterVector::from_vec(g).expect("finite gradient")
    }

    fn kurtosis(&self) -> Evaluation {
        let m2 = self.label_stats(|x, y| self.grad_at_star(x, y).norm_sq());
        let m4 = self.label_stats(|x, y| self.grad_at_star(x, y).norm_sq().powi(2));
        let k = m4.value() / m2.value().powi(2);
        if self.support.exact {
            Evaluation::exact(k)
        } else {
            // relative errors add for a ratio; covariance ignored
            let rel = (m4.std_err() / m4.value()).hypot(2.0 * m2.std_err() / m2.value());
            Evaluation::MonteCarlo {
                value: k,
                std_err: k * rel,
            }
        }
    }
}

fn scale_eval(e: Evaluation, c: f64) -> Evaluation {
    match e {
        Evaluation::Exact { value } => Evaluation::exact(c * value),
        Evaluation::MonteCarlo { value, std_err } => Evaluation::MonteCarlo {
            value: c * value,
            std_err: c * std_err,
        },
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn population_value_on(s: &Support, lambda: f64, w: &ParameterVector) -> f64 {
    let mut acc = 0.0;
    for (j, z) in s.margins(w.as_slice()) {
        acc += s.weight[j] * (softplus(z) - s.q[j] * z);
    }
    acc + 0.5 * lambda * w.norm_sq()
}

fn population_gradient_on(s: &Support, lambda: f64, w: &ParameterVector) -> ParameterVector {
    let mut g = w.scale(lambda).to_vec();
    for (j, z) in s.margins(w.as_slice()) {
        let r = s.weight[j] * (sigmoid(z) - s.q[j]);
        g.iter_mut().zip(s.point(j)).for_each(|(gi, xi)| *gi += r * xi);
    }
    ParameterVector::from_vec(g).expect("finite gradient")
}

fn population_hessian_on(s: &Support, lambda: f64, w: &ParameterVector) -> PsdMatrix {
    let mut h = PsdMatrix::scaled_identity(s.d, lambda);
    for (j, z) in s.margins(w.as_slice()) {
        let p = sigmoid(z);
        h.add_outer(s.weight[j] * p * (1.0 - p), s.point(j));
    }
    h
}

impl StochasticObjective for LogisticRegressionProblem {
    fn dim(&self) -> usize {
        self.design.dim()
    }

    fn sample_into(&self, rng: &mut SampleRng, out: &mut LossSample) {
        self.design.sample_into(rng, &mut out.x);
        let q = sigmoid(dot(&out.x, self.w_model.as_slice()) + self.bias.eval(&out.x));
        out.y = if rng.uniform_open01() < q { 1.0 } else { 0.0 };
    }

    fn loss(&self, s: &LossSample, w: &[f64]) -> f64 {
        let z = dot(&s.x, w);
        softplus(z) - s.y * z + 0.5 * self.lambda * dot(w, w)
    }

    fn add_gradient(&self, s: &LossSample, w: &[f64], scale: f64, out: &mut [f64]) {
        let r = scale * (sigmoid(dot(&s.x, w)) - s.y);
        let l = scale * self.lambda;
        for ((o, xi), wi) in out.iter_mut().zip(&s.x).zip(w) {
            *o += r * xi + l * wi;
        }
    }

    fn sample_hessian(&self, s: &LossSample, w: &[f64]) -> PsdMatrix {
        let p = sigmoid(dot(&s.x, w));
        let mut h = PsdMatrix::scaled_identity(self.dim(), self.lambda);
        h.add_outer(p * (1.0 - p), &s.x);
        h
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn smoothness(&self) -> f64 {
        0.25 * self.design.sup_norm_sq() + self.lambda
    }

    fn strong_convexity(&self) -> f64 {
        self.lambda
    }

    fn minimizer(&self) -> &ParameterVector {
        &self.w_star
    }

    fn hessian_at_optimum(&self) -> &PsdMatrix {
        &self.hess_star
    }

    fn population_value(&self, w: &ParameterVector) -> Evaluation {
        let e = self.support.stats(|j| {
            let z = dot(self.support.point(j), w.as_slice());
            softplus(z) - self.support.q[j] * z
        });
        let reg = 0.5 * self.lambda * w.norm_sq();
        match e {
            Evaluation::Exact { value } => Evaluation::exact(value + reg),
            Evaluation::MonteCarlo { value, std_err } => Evaluation::MonteCarlo {
                value: value + reg,
                std_err,
            },
        }
    }

    fn population_gradient(&self, w: &ParameterVector) -> ParameterVector {
        population_gradient_on(&self.support, self.lambda, w)
    }

    fn population_hessian(&self, w: &ParameterVector) -> PsdMatrix {
        population_hessian_on(&self.support, self.lambda, w)
    }

    fn excess_risk(&self, w: &ParameterVector) -> f64 {
        population_value_on(&self.support, self.lambda, w) - self.p_star
    }

    fn sigma_squared(&self) -> Result<Evaluation> {
        let chol = &self.chol_star;
        Ok(self.label_stats(|x, y| 0.5 * chol.inv_quadratic(&self.grad_at_star(x, y)).expect("positive definite")))
    }

    fn constants(&self) -> ProblemConstants {
        let mu = self.strong_convexity();
        let l = self.smoothness();
        ProblemConstants {
            mu,
            l,
            kappa: l / mu,
            alpha: self.alpha(),
            sigma_sq: self.sigma_squared().expect("positive definite Hessian"),
            kurtosis: self.kurtosis(),
            self_concordance_m: self.self_concordance(),
            lambda: self.lambda,
        }
    }

    fn outcomes(&self) -> Option<Vec<(f64, LossSample)>> {
        if !self.support.exact {
            return None;
        }
        let mut out = Vec::with_capacity(2 * self.support.len());
        for j in 0..self.support.len() {
            let x = self.support.point(j).to_vec();
            let (p, q) = (self.support.weight[j], self.support.q[j]);
            out.push((p * q, LossSample::new(x.clone(), 1.0)));
            out.push((p * (1.0 - q), LossSample::new(x, 0.0)));
        }
        Some(out)
    }

    fn parameter_scale(&self) -> f64 {
        self.w_star.norm().max(self.w_model.norm())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(x: &[f64]) -> ParameterVector {
        ParameterVector::from_slice(x).unwrap()
    }

    fn four_point() -> LogisticRegressionProblem {
        let design = Design::finite(
            vec![vec![1.0, 0.2], vec![-0.5, 1.0], vec![0.3, -1.2], vec![1.5, 0.7]],
            vec![0.1, 0.4, 0.3, 0.2],
        )
        .unwrap();
        LogisticRegressionProblem::builder(design, pv(&[1.0, -2.0]))
            .lambda(0.1)
            .build()
            .unwrap()
    }

    #[test]
    fn zero_model_gives_fair_labels() {
        let design = Design::sphere(3, 1.0).unwrap();
        let p = LogisticRegressionProblem::builder(design, ParameterVector::zeros(3))
            .anchor_points(100)
            .build()
            .unwrap();
        assert!(p.support.q.iter().all(|&q| q == 0.5));
        // by symmetry the minimizer is the origin
        assert!(p.minimizer().norm() < 1e-12);
    }

    #[test]
    fn population_value_matches_exhaustive_sum() {
        let p = four_point();
        let outcomes = p.outcomes().unwrap();
        let mut rng = SeededRng::new(3, 0);
        for _ in 0..20 {
            let w = pv(&[rng.standard_normal() * 2.0, rng.standard_normal() * 2.0]);
            let direct: f64 = outcomes.iter().map(|(pr, s)| pr * p.loss(s, w.as_slice())).sum();
            let v = p.population_value(&w);
            assert!(v.is_exact());
            assert!((v.value() - direct).abs() < 1e-12, "{} vs {direct}", v.value());
        }
    }

    #[test]
    fn minimizer_has_tiny_gradient() {
        let p = four_point();
        assert!(p.population_gradient(p.minimizer()).norm() <= 1e-12);
        assert!(p.excess_risk(p.minimizer()).abs() < 1e-15);
    }

    #[test]
    fn mu_equals_lambda() {
        let design = Design::sphere(2, 2.0).unwrap();
        let p = LogisticRegressionProblem::builder(design, pv(&[0.5, 0.5]))
            .lambda(1.0)
            .anchor_points(2000)
            .build()
            .unwrap();
        let c = p.constants();
        assert_eq!(c.mu, 1.0);
        assert!((c.l - 2.0).abs() < 1e-15);
        assert!(c.alpha >= 1.0 && c.alpha <= c.kappa);
        assert!(!c.sigma_sq.is_exact());
        assert!(p.anchor_info().unwrap().minimizer_std_err > 0.0);
    }

    #[test]
    fn alpha_bounds_sampled_generalized_eigenvalues() {
        let p = four_point();
        let alpha = p.alpha();
        let mut rng = SeededRng::new(8, 0);
        let near: Vec<ParameterVector> = (0..200)
            .map(|_| pv(&[rng.standard_normal(), rng.standard_normal()]))
            .collect();
        let sampled = p.alpha_on(&near).unwrap();
        assert!(sampled <= alpha * (1.0 + 1e-9));
        // far out along a generic direction the Hessian approaches λI
        let far = vec![pv(&[300.0, 170.0])];
        let far_alpha = p.alpha_on(&far).unwrap();
        assert!((far_alpha - alpha).abs() < 1e-6 * alpha, "{far_alpha} vs {alpha}");
    }

    #[test]
    fn rejects_nonpositive_lambda() {
        let design = Design::sphere(2, 1.0).unwrap();
        let err = LogisticRegressionProblem::builder(design, pv(&[0.0, 0.0])).lambda(0.0).build();
        assert!(err.is_err());
        let unbounded = LogisticRegressionProblem::builder(Design::gaussian(2).unwrap(), pv(&[0.0, 0.0])).build();
        assert!(unbounded.is_err());
    }

    #[test]
    fn softplus_and_sigmoid_are_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-16);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
    }
}

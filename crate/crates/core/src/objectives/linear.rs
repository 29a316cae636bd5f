//! Squared loss `ψ(w) = (Y − wᵀX)² + λ‖w‖²`.
//!
//! The loss is stored literally (no ½), so `∇²P = 2(Σ + λI)`, the per-sample
//! smoothness is `2‖X‖² + 2λ` and `μ = 2(λ + λ_min(Σ))`. Responses follow
//! `Y = w_modelᵀX + b(X) + η`.

use crate::error::{Error, Result};
use crate::linalg::{check_dim, m_norm_sq, CholeskyFactor, ParameterVector, PsdMatrix};
use rand::RngCore;

use crate::rng::{Draws, SampleRng, SeededRng};

use super::{
    kurtosis_monte_carlo, Bias, Design, Evaluation, LossSample, ProblemConstants, StochasticObjective,
};

/// Draw count for constants without a closed form.
const CONSTANTS_DRAWS: usize = 200_000;
const CONSTANTS_SEED: u64 = 0x5eed_c0de;

/// Zero-mean symmetric noise law, scaled by `sigma_noise`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Noise {
    #[default]
    Gaussian,
    /// `±σ` with equal probability.
    Rademacher,
}

impl Noise {
    /// `(E[η²], E[η⁴])` for unit scale.
    fn unit_moments(self) -> (f64, f64) {
        match self {
            Noise::Gaussian => (1.0, 3.0),
            Noise::Rademacher => (1.0, 1.0),
        }
    }

    fn draw(self, rng: &mut SampleRng) -> f64 {
        match self {
            Noise::Gaussian => rng.standard_normal(),
            Noise::Rademacher => {
                if rng.next_u64() >> 63 == 0 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearRegressionBuilder {
    design: Design,
    w_model: ParameterVector,
    sigma_noise: f64,
    noise: Noise,
    lambda: f64,
    bias: Bias,
}

impl LinearRegressionBuilder {
    pub fn sigma_noise(mut self, sigma: f64) -> Self {
        self.sigma_noise = sigma;
        self
    }

    pub fn noise(mut self, noise: Noise) -> Self {
        self.noise = noise;
        self
    }

    pub fn lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn bias(mut self, bias: Bias) -> Self {
        self.bias = bias;
        self
    }

    pub fn build(self) -> Result<LinearRegressionProblem> {
        LinearRegressionProblem::from_builder(self)
    }
}

#[derive(Debug, Clone)]
pub struct LinearRegressionProblem {
    design: Design,
    w_model: ParameterVector,
    sigma_noise: f64,
    noise: Noise,
    lambda: f64,
    bias: Bias,
    sigma: PsdMatrix,
    /// `Σ + λI`
    reg_cov: PsdMatrix,
    reg_chol: CholeskyFactor,
    hessian: PsdMatrix,
    w_star: ParameterVector,
    /// `E[X b(X)]`
    x_bias: ParameterVector,
    /// `E[b(X)²]`
    bias_sq: f64,
    lambda_min_sigma: f64,
}

impl LinearRegressionProblem {
    pub fn builder(design: Design, w_model: ParameterVector) -> LinearRegressionBuilder {
        LinearRegressionBuilder {
            design,
            w_model,
            sigma_noise: 1.0,
            noise: Noise::Gaussian,
            lambda: 0.0,
            bias: Bias::None,
        }
    }

    fn from_builder(b: LinearRegressionBuilder) -> Result<Self> {
        let d = b.design.dim();
        check_dim(d, b.w_model.dim())?;
        if !(b.lambda >= 0.0 && b.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be nonnegative, got {}", b.lambda)));
        }
        if !(b.sigma_noise >= 0.0 && b.sigma_noise.is_finite()) {
            return Err(Error::invalid(format!(
                "sigma_noise must be nonnegative, got {}",
                b.sigma_noise
            )));
        }
        if let Bias::Quadratic { scale } = b.bias {
            if !scale.is_finite() {
                return Err(Error::NonFinite("bias scale"));
            }
        }
        let sigma = b.design.second_moment();
        let mut reg_cov = sigma.clone();
        reg_cov.add_scaled_identity(b.lambda);
        let reg_chol = reg_cov.cholesky()?;
        let (x_bias, bias_sq) = bias_moments(&b.design, &b.bias)?;
        // (Σ + λI) w* = Σ w_model + E[X b(X)]
        let rhs = sigma.mul_vec(&b.w_model)?.add(&x_bias)?;
        let w_star = reg_chol.solve(&rhs)?;
        let lambda_min_sigma = sigma.lambda_min().max(0.0);
        Ok(LinearRegressionProblem {
            hessian: reg_cov.scale(2.0),
            design: b.design,
            w_model: b.w_model,
            sigma_noise: b.sigma_noise,
            noise: b.noise,
            lambda: b.lambda,
            bias: b.bias,
            sigma,
            reg_cov,
            reg_chol,
            w_star,
            x_bias,
            bias_sq,
            lambda_min_sigma,
        })
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn covariance(&self) -> &PsdMatrix {
        &self.sigma
    }

    pub fn w_model(&self) -> &ParameterVector {
        &self.w_model
    }

    pub fn sigma_noise(&self) -> f64 {
        self.sigma_noise
    }

    pub fn noise(&self) -> Noise {
        self.noise
    }

    pub fn bias(&self) -> Bias {
        self.bias
    }

    pub fn is_well_specified(&self) -> bool {
        self.bias.is_none()
    }

    /// Same problem with the noise switched off.
    pub fn noiseless(&self) -> Result<Self> {
        LinearRegressionProblem::builder(self.design.clone(), self.w_model.clone())
            .sigma_noise(0.0)
            .noise(self.noise)
            .lambda(self.lambda)
            .bias(self.bias)
            .build()
    }

    /// Conditional mean of the residual `Y − w*ᵀX` given `X`.
    fn mean_residual(&self, x: &[f64]) -> f64 {
        let delta: f64 = x
            .iter()
            .zip(self.w_model.as_slice().iter().zip(self.w_star.as_slice()))
            .map(|(xi, (m, s))| xi * (m - s))
            .sum();
        delta + self.bias.eval(x)
    }

    fn noise_moments(&self) -> (f64, f64) {
        let (m2, m4) = self.noise.unit_moments();
        (m2 * self.sigma_noise.powi(2), m4 * self.sigma_noise.powi(4))
    }

    fn kurtosis(&self) -> Evaluation {
        let (m2, m4) = self.noise_moments();
        if let Some(support) = self.design.support() {
            let w = &self.w_star;
            let q = w.norm_sq();
            let lam = self.lambda;
            let (mut e2, mut e4) = (0.0, 0.0);
            for (p, x) in support {
                let r = self.mean_residual(x);
                let s: f64 = x.iter().map(|v| v * v).sum();
                let t: f64 = x.iter().zip(w.as_slice()).map(|(a, b)| a * b).sum();
                // moments of u = r + η for symmetric η
                let u1 = r;
                let u2 = r * r + m2;
                let u3 = r.powi(3) + 3.0 * r * m2;
                let u4 = r.powi(4) + 6.0 * r * r * m2 + m4;
                // ‖uX − λw*‖² = u²s − 2λut + λ²q
                e2 += p * (u2 * s - 2.0 * lam * u1 * t + lam * lam * q);
                e4 += p
                    * (u4 * s * s - 4.0 * lam * u3 * s * t
                        + (4.0 * lam * lam * t * t + 2.0 * lam * lam * q * s) * u2
                        - 4.0 * lam.powi(3) * q * t * u1
                        + lam.powi(4) * q * q);
            }
            return if e2 > 0.0 { Evaluation::exact(e4 / (e2 * e2)) } else { Evaluation::exact(1.0) };
        }
        if self.lambda == 0.0 && self.is_well_specified() {
            if m2 == 0.0 {
                return Evaluation::exact(1.0);
            }
            let r4 = self.design.radial_moment(2).expect("spherical design");
            let r2 = self.design.radial_moment(1).expect("spherical design");
            return Evaluation::exact(m4 * r4 / (m2 * m2 * r2 * r2));
        }
        let mut rng = SeededRng::new(CONSTANTS_SEED, 1);
        kurtosis_monte_carlo(self, CONSTANTS_DRAWS, &mut rng)
    }
}

fn bias_moments(design: &Design, bias: &Bias) -> Result<(ParameterVector, f64)> {
    let d = design.dim();
    if bias.is_none() {
        return Ok((ParameterVector::zeros(d), 0.0));
    }
    match design.support() {
        Some(support) => {
            let mut xb = vec![0.0; d];
            let mut b2 = 0.0;
            for (p, x) in support {
                let b = bias.eval(x);
                xb.iter_mut().zip(x).for_each(|(acc, xi)| *acc += p * b * xi);
                b2 += p * b * b;
            }
            Ok((ParameterVector::from_vec(xb)?, b2))
        }
        None => {
            // E[X x₁²] vanishes by symmetry
            let Bias::Quadratic { scale } = *bias else { unreachable!() };
            let x14 = design.first_coordinate_fourth_moment().expect("spherical design");
            Ok((ParameterVector::zeros(d), scale * scale * x14))
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl StochasticObjective for LinearRegressionProblem {
    fn dim(&self) -> usize {
        self.design.dim()
    }

    fn sample_into(&self, rng: &mut SampleRng, out: &mut LossSample) {
        self.design.sample_into(rng, &mut out.x);
        let eta = self.sigma_noise * self.noise.draw(rng);
        out.y = dot(self.w_model.as_slice(), &out.x) + self.bias.eval(&out.x) + eta;
    }

    fn loss(&self, s: &LossSample, w: &[f64]) -> f64 {
        let r = s.y - dot(w, &s.x);
        r * r + self.lambda * dot(w, w)
    }

    fn add_gradient(&self, s: &LossSample, w: &[f64], scale: f64, out: &mut [f64]) {
        let c = -2.0 * scale * (s.y - dot(w, &s.x));
        let l2 = 2.0 * scale * self.lambda;
        for ((o, xi), wi) in out.iter_mut().zip(&s.x).zip(w) {
            *o += c * xi + l2 * wi;
        }
    }

    fn sample_hessian(&self, s: &LossSample, _w: &[f64]) -> PsdMatrix {
        let mut h = PsdMatrix::scaled_identity(self.dim(), 2.0 * self.lambda);
        h.add_outer(2.0, &s.x);
        h
    }

    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn smoothness(&self) -> f64 {
        2.0 * self.design.sup_norm_sq() + 2.0 * self.lambda
    }

    fn strong_convexity(&self) -> f64 {
        2.0 * (self.lambda + self.lambda_min_sigma)
    }

    fn minimizer(&self) -> &ParameterVector {
        &self.w_star
    }

    fn hessian_at_optimum(&self) -> &PsdMatrix {
        &self.hessian
    }

    fn population_value(&self, w: &ParameterVector) -> Evaluation {
        // P(w) = δᵀΣδ + 2δᵀE[Xb] + E[b²] + E[η²] + λ‖w‖²,  δ = w_model − w
        let delta = self.w_model.sub(w).expect("dimension");
        let quad = m_norm_sq(&delta, &self.sigma).expect("dimension");
        let cross = 2.0 * delta.dot(&self.x_bias).expect("dimension");
        let (m2, _) = self.noise_moments();
        Evaluation::exact(quad + cross + self.bias_sq + m2 + self.lambda * w.norm_sq())
    }

    fn population_gradient(&self, w: &ParameterVector) -> ParameterVector {
        // 2(Σ + λI)(w − w*)
        let diff = w.sub(&self.w_star).expect("dimension");
        self.hessian.mul_vec(&diff).expect("dimension")
    }

    fn population_hessian(&self, _w: &ParameterVector) -> PsdMatrix {
        self.hessian.clone()
    }

    fn excess_risk(&self, w: &ParameterVector) -> f64 {
        let diff = w.sub(&self.w_star).expect("dimension");
        m_norm_sq(&diff, &self.reg_cov).expect("dimension")
    }

    fn sigma_squared(&self) -> Result<Evaluation> {
        // σ² = E‖(Y − w*ᵀX)X − λw*‖²_A with A = (Σ + λI)⁻¹, expanded using
        // E[(Y − w*ᵀX)X] = λw*:
        //   σ² = E[η²]·tr(AΣ) + E[r(X)²‖X‖²_A] − λ²‖w*‖²_A
        let (m2, _) = self.noise_moments();
        let d = self.dim();
        let reg_term = self.lambda.powi(2) * self.reg_chol.inv_quadratic(&self.w_star)?;
        let (noise_term, residual_term) = match self.design.support() {
            Some(support) => {
                let mut nt = 0.0;
                let mut rt = 0.0;
                for (p, x) in support {
                    let xa = self.reg_chol.inv_quadratic(&ParameterVector::from_slice(x)?)?;
                    let r = self.mean_residual(x);
                    nt += p * xa;
                    rt += p * r * r * xa;
                }
                (m2 * nt, rt)
            }
            None => {
                let s = self.sigma.get(0, 0);
                let a = 1.0 / (s + self.lambda);
                let df = d as f64;
                let r4 = self.design.radial_moment(2).expect("spherical design");
                let r6 = self.design.radial_moment(3).expect("spherical design");
                let delta = self.w_model.sub(&self.w_star)?;
                let mut rt = delta.norm_sq() * r4 / df;
                if let Bias::Quadratic { scale } = self.bias {
                    rt += scale * scale * 3.0 * r6 / (df * (df + 2.0));
                }
                (m2 * df * s * a, a * rt)
            }
        };
        Ok(Evaluation::exact((noise_term + residual_term - reg_term).max(0.0)))
    }

    fn constants(&self) -> ProblemConstants {
        let mu = self.strong_convexity();
        let l = self.smoothness();
        ProblemConstants {
            mu,
            l,
            kappa: l / mu,
            alpha: 1.0,
            sigma_sq: self.sigma_squared().expect("positive definite Hessian"),
            kurtosis: self.kurtosis(),
            self_concordance_m: Evaluation::exact(0.0),
            lambda: self.lambda,
        }
    }

    fn outcomes(&self) -> Option<Vec<(f64, LossSample)>> {
        let support = self.design.support()?;
        let noise: Vec<(f64, f64)> = if self.sigma_noise == 0.0 {
            vec![(1.0, 0.0)]
        } else {
            match self.noise {
                Noise::Rademacher => vec![(0.5, -self.sigma_noise), (0.5, self.sigma_noise)],
                Noise::Gaussian => return None,
            }
        };
        let mut out = Vec::new();
        for (p, x) in support {
            let mean = dot(self.w_model.as_slice(), x) + self.bias.eval(x);
            for &(pe, eta) in &noise {
                out.push((p * pe, LossSample::new(x.to_vec(), mean + eta)));
            }
        }
        Some(out)
    }

    fn parameter_scale(&self) -> f64 {
        self.w_star.norm().max(self.w_model.norm())
    }
}

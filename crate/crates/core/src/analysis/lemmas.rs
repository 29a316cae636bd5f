//! Monte Carlo and exact oracles for the inequalities the convergence
//! analysis rests on. A stochastic left-hand side passes when its estimate
//! minus three standard errors stays at or below the bound.

use serde::Serialize;

use crate::error::Result;
use crate::linalg::ParameterVector;
use crate::objectives::{LossSample, StochasticObjective};
use crate::rng::{Draws, SeededRng};
use crate::stats::RunningStats;

/// Standard errors of slack granted to Monte Carlo estimates.
pub const MC_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeOutcome {
    pub lhs: f64,
    pub lhs_std_err: f64,
    pub rhs: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub probes: usize,
    pub violations: usize,
    /// Largest `lhs − k·se − rhs` seen; positive means a violation.
    pub worst_excess: f64,
    pub outcomes: Vec<ProbeOutcome>,
}

impl SuiteReport {
    fn new(name: impl Into<String>, outcomes: Vec<ProbeOutcome>) -> Self {
        let violations = outcomes.iter().filter(|o| !o.passed).count();
        let worst_excess = outcomes
            .iter()
            .map(|o| o.lhs - MC_SIGMAS * o.lhs_std_err - o.rhs)
            .fold(f64::NEG_INFINITY, f64::max);
        SuiteReport {
            name: name.into(),
            probes: outcomes.len(),
            violations,
            worst_excess,
            outcomes,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// `count` points `w* + r·u`, `u` uniform in the unit ball.
pub fn random_probes<O: StochasticObjective + ?Sized>(
    problem: &O,
    count: usize,
    radius: f64,
    rng: &mut SeededRng,
) -> Vec<ParameterVector> {
    let d = problem.dim();
    let w_star = problem.minimizer();
    (0..count)
        .map(|_| {
            let mut u = vec![0.0; d];
            rng.fill_standard_normal(&mut u);
            let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = radius * rng.uniform_open01().powf(1.0 / d as f64);
            let w: Vec<f64> = w_star.as_slice().iter().zip(&u).map(|(a, b)| a + r * b / n).collect();
            ParameterVector::from_vec(w).expect("finite probe")
        })
        .collect()
}

fn mc_mean<O, F>(problem: &O, draws: usize, rng: &mut SeededRng, f: F) -> RunningStats
where
    O: StochasticObjective + ?Sized,
    F: Fn(&LossSample) -> f64,
{
    let mut s = LossSample::zeros(problem.dim());
    let mut stats = RunningStats::new();
    for _ in 0..draws {
        problem.sample_into(&mut rng.sample_rng(), &mut s);
        stats.push(f(&s));
    }
    stats
}

fn outcome(stats: &RunningStats, rhs: f64) -> ProbeOutcome {
    let se = if stats.count() > 1 { stats.std_err() } else { 0.0 };
    let lhs = stats.mean();
    // rounding slack for probes sitting exactly on the bound
    let tol = 1e-12 * (1.0 + rhs.abs() + lhs.abs());
    ProbeOutcome {
        lhs,
        lhs_std_err: se,
        rhs,
        passed: lhs - MC_SIGMAS * se <= rhs + tol,
    }
}

/// `E‖∇ψ(w) − ∇ψ(w*)‖² ≤ 2L (P(w) − P(w*))`
pub fn lemma1_probe<O: StochasticObjective + ?Sized>(
    problem: &O,
    w: &ParameterVector,
    draws: usize,
    rng: &mut SeededRng,
) -> ProbeOutcome {
    let w_star = problem.minimizer().as_slice().to_vec();
    let d = problem.dim();
    let stats = mc_mean(problem, draws, rng, |s| {
        let mut g = vec![0.0; d];
        problem.add_gradient(s, w.as_slice(), 1.0, &mut g);
        problem.add_gradient(s, &w_star, -1.0, &mut g);
        g.iter().map(|v| v * v).sum()
    });
    outcome(&stats, 2.0 * problem.smoothness() * problem.excess_risk(w))
}

/// `E‖∇ψ(w) − ∇P(w)‖²_{H*⁻¹} ≤ 2(√(κ (P(w) − P(w*))) + σ)²`
pub fn lemma2_probe<O: StochasticObjective + ?Sized>(
    problem: &O,
    w: &ParameterVector,
    draws: usize,
    rng: &mut SeededRng,
) -> Result<ProbeOutcome> {
    let chol = problem.hessian_at_optimum().cholesky()?;
    let grad_p = problem.population_gradient(w);
    let sigma = problem.sigma_squared()?.value().max(0.0).sqrt();
    let kappa = problem.condition_number();
    let stats = mc_mean(problem, draws, rng, |s| {
        let mut g = grad_p.scale(-1.0).to_vec();
        problem.add_gradient(s, w.as_slice(), 1.0, &mut g);
        chol.inv_quadratic(&ParameterVector::from_vec(g).expect("finite gradient"))
            .expect("positive definite")
    });
    let excess = problem.excess_risk(w).max(0.0);
    Ok(outcome(&stats, 2.0 * ((kappa * excess).sqrt() + sigma).powi(2)))
}

pub fn check_lemma1<O: StochasticObjective + ?Sized>(
    problem: &O,
    probes: &[ParameterVector],
    draws: usize,
    rng: &mut SeededRng,
) -> SuiteReport {
    let outcomes = probes.iter().map(|w| lemma1_probe(problem, w, draws, rng)).collect();
    SuiteReport::new("lemma1", outcomes)
}

pub fn check_lemma2<O: StochasticObjective + ?Sized>(
    problem: &O,
    probes: &[ParameterVector],
    draws: usize,
    rng: &mut SeededRng,
) -> Result<SuiteReport> {
    let outcomes = probes
        .iter()
        .map(|w| lemma2_probe(problem, w, draws, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport::new("lemma2", outcomes))
}

/// `λ_max(∇²P(w*)) ≤ 2L`, evaluated exactly.
pub fn check_hessian_bound<O: StochasticObjective + ?Sized>(problem: &O) -> SuiteReport {
    let lhs = problem.hessian_at_optimum().lambda_max();
    let rhs = 2.0 * problem.smoothness();
    SuiteReport::new(
        "hessian_bound",
        vec![ProbeOutcome {
            lhs,
            lhs_std_err: 0.0,
            rhs,
            passed: lhs <= rhs,
        }],
    )
}

/// Local lower bound from self-concordance,
///
/// ```text
/// P(w*) ≥ P(w) + (w* − w)ᵀ∇P(w) + ‖w − w*‖²_H / (2(1 + M‖w − w*‖_H)²),  H = ∇²P(w*),
/// ```
///
/// checked at each probe with tolerance `1e-10·scale`. Written with
/// `LHS = P(w) + (w* − w)ᵀ∇P(w) + quad − P(w*)` in the outcome, which must be
/// at most zero.
pub fn check_self_concordance_bound<O: StochasticObjective + ?Sized>(
    problem: &O,
    probes: &[ParameterVector],
) -> Result<SuiteReport> {
    let h = problem.hessian_at_optimum();
    let m = problem.constants().self_concordance_m.value();
    let w_star = problem.minimizer();
    let outcomes = probes
        .iter()
        .map(|w| {
            let diff = w_star.sub(w)?;
            let q = crate::linalg::m_norm_sq(&diff, h)?.max(0.0);
            let lin = diff.dot(&problem.population_gradient(w))?;
            let quad = q / (2.0 * (1.0 + m * q.sqrt()).powi(2));
            let excess = problem.excess_risk(w);
            // P(w) − P(w*) + lin + quad ≤ 0
            let lhs = excess + lin + quad;
            let scale = 1.0 + excess.abs() + lin.abs() + quad;
            Ok(ProbeOutcome {
                lhs,
                lhs_std_err: 0.0,
                rhs: 0.0,
                passed: lhs <= 1e-10 * scale,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport::new("self_concordance", outcomes))
}

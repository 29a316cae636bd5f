use std::io::Write;

use rand::RngCore;

use crate::error::{Error, Result};
use crate::linalg::{ParameterVector, PsdMatrix};
use crate::newton::damped_newton;
use crate::objectives::logistic::{sigmoid, softplus};
use crate::objectives::{LossSample, Problem, StochasticObjective};
use crate::rng::SeededRng;
use crate::stats::{bootstrap_mean_ci, MeanCi};

use super::{map_indexed, thread_pool, trial_rng};

/// Normal equations whose smallest eigenvalue falls below this fraction of
/// the largest are treated as singular.
const SINGULAR_RTOL: f64 = 1e-12;

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ErmSolution {
    pub w_hat: ParameterVector,
    pub n_used: usize,
    /// Gradient norm of the empirical objective at `w_hat`.
    pub solver_residual: f64,
}

fn check_samples(samples: &[LossSample]) -> Result<usize> {
    let first = samples.first().ok_or_else(|| Error::invalid("ERM needs at least one sample"))?;
    let d = first.x.len();
    if let Some(bad) = samples.iter().find(|s| s.x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.x.len(),
        });
    }
    Ok(d)
}

/// Minimizer of `(1/N) Σ (y_i − wᵀx_i)² + λ‖w‖²`, i.e. the solution of
/// `(Σ̂ + λI) w = (1/N) Σ x_i y_i`.
pub fn erm_ridge(samples: &[LossSample], lambda: f64) -> Result<ErmSolution> {
    let d = check_samples(samples)?;
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be nonnegative, got {lambda}")));
    }
    let inv_n = 1.0 / samples.len() as f64;
    let mut a = PsdMatrix::zeros(d);
    let mut rhs = vec![0.0; d];
    for s in samples {
        a.add_outer(inv_n, &s.x);
        for (r, xi) in rhs.iter_mut().zip(&s.x) {
            *r += inv_n * s.y * xi;
        }
    }
    a.add_scaled_identity(lambda);
    let (lo, hi) = (a.lambda_min(), a.lambda_max());
    if !(lo > SINGULAR_RTOL * hi) {
        return Err(Error::ErmNotUnique(format!(
            "normal equations are singular (eigenvalues {lo:e}..{hi:e}, N = {}, d = {d})",
            samples.len()
        )));
    }
    let rhs = ParameterVector::from_vec(rhs)?;
    let w_hat = a.cholesky()?.solve(&rhs)?;
    // ∇ = 2((Σ̂ + λI)w − b)
    let solver_residual = 2.0 * a.mul_vec(&w_hat)?.sub(&rhs)?.norm();
    Ok(ErmSolution {
        w_hat,
        n_used: samples.len(),
        solver_residual,
    })
}

/// Minimizer of `(1/N) Σ [log(1 + e^{x_iᵀw}) − y_i x_iᵀw] + (λ/2)‖w‖²` by
/// damped Newton.
pub fn erm_logistic(samples: &[LossSample], lambda: f64, w_init: &ParameterVector) -> Result<ErmSolution> {
    let d = check_samples(samples)?;
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("logistic ERM needs lambda > 0, got {lambda}")));
    }
    if w_init.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: w_init.dim(),
        });
    }
    let inv_n = 1.0 / samples.len() as f64;
    let eval = |w: &ParameterVector| {
        let ws = w.as_slice();
        let mut value = 0.5 * lambda * w.norm_sq();
        let mut grad: Vec<f64> = ws.iter().map(|wi| lambda * wi).collect();
        let mut hess = PsdMatrix::scaled_identity(d, lambda);
        for s in samples {
            let z: f64 = s.x.iter().zip(ws).map(|(a, b)| a * b).sum();
            let p = sigmoid(z);
            value += inv_n * (softplus(z) - s.y * z);
            for (g, xi) in grad.iter_mut().zip(&s.x) {
                *g += inv_n * (p - s.y) * xi;
            }
            hess.add_outer(inv_n * p * (1.0 - p), &s.x);
        }
        let grad = ParameterVector::from_vec(grad).unwrap_or_else(|_| ParameterVector::zeros(d));
        (value, grad, hess)
    };
    let out = damped_newton(w_init.clone(), NEWTON_TOL, NEWTON_TOL, NEWTON_MAX_ITER, eval)?;
    Ok(ErmSolution {
        w_hat: out.w,
        n_used: samples.len(),
        solver_residual: out.grad_norm,
    })
}

/// ERM for the family and regularization of `problem`.
pub fn erm_fit(problem: &Problem, samples: &[LossSample]) -> Result<ErmSolution> {
    match problem {
        Problem::LeastSquares(p) => erm_ridge(samples, p.lambda()),
        Problem::Logistic(p) => erm_logistic(samples, p.lambda(), &ParameterVector::zeros(p.dim())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErmRateRow {
    pub n: usize,
    pub trials: usize,
    pub mean_excess: MeanCi,
    pub sigma2_over_n: f64,
    /// `mean_excess / (σ²/N)`; `None` when `σ² = 0`.
    pub ratio: Option<f64>,
    pub failures: usize,
    /// Excess risk of every successful trial, in trial order.
    pub excess: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErmRateTable {
    pub sigma_sq: f64,
    pub rows: Vec<ErmRateRow>,
}

pub(crate) fn fmt_opt(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => v.to_string(),
        _ => "undefined".to_string(),
    }
}

pub(crate) fn fmt_ci(x: f64) -> String {
    if x.is_finite() {
        x.to_string()
    } else {
        "NA".to_string()
    }
}

impl ErmRateTable {
    /// CSV with header `N,mean_excess,ci_lo,ci_hi,ratio_to_sigma2_over_N,failures`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["N", "mean_excess", "ci_lo", "ci_hi", "ratio_to_sigma2_over_N", "failures"])?;
        for r in &self.rows {
            w.write_record([
                r.n.to_string(),
                fmt_ci(r.mean_excess.mean),
                fmt_ci(r.mean_excess.lo),
                fmt_ci(r.mean_excess.hi),
                fmt_opt(r.ratio),
                r.failures.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Bootstrap resamples behind every reported interval.
pub const BOOTSTRAP_RESAMPLES: usize = 2000;

/// For each `N`, fits ERM on `trials` independent datasets and averages the
/// excess risk. Solver failures are counted per row rather than aborting.
pub fn erm_rate_experiment(
    problem: &Problem,
    n_grid: &[usize],
    trials: usize,
    rng: &mut SeededRng,
    threads: usize,
) -> Result<ErmRateTable> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if n_grid.contains(&0) {
        return Err(Error::invalid("every N must be at least 1"));
    }
    let sigma_sq = problem.sigma_squared()?.value();
    let pool = thread_pool(threads)?;
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let cell = rng.next_u64();
        let results = map_indexed(pool.as_ref(), trials, |t| {
            let mut r = trial_rng(cell, t);
            let data: Vec<LossSample> = (0..n).map(|_| problem.sample(&mut r)).collect();
            erm_fit(problem, &data).map(|sol| problem.excess_risk(&sol.w_hat))
        });
        let excess: Vec<f64> = results.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
        let failures = trials - excess.len();
        let mut boot = SeededRng::new(cell, u64::MAX);
        let mean_excess = if excess.is_empty() {
            MeanCi {
                mean: f64::NAN,
                std_err: f64::NAN,
                lo: f64::NAN,
                hi: f64::NAN,
            }
        } else {
            bootstrap_mean_ci(&excess, BOOTSTRAP_RESAMPLES, 0.05, &mut boot)
        };
        let sigma2_over_n = sigma_sq / n as f64;
        let ratio = (sigma_sq > 0.0 && mean_excess.mean.is_finite()).then(|| mean_excess.mean / sigma2_over_n);
        rows.push(ErmRateRow {
            n,
            trials,
            mean_excess,
            sigma2_over_n,
            ratio,
            failures,
            excess,
        });
    }
    Ok(ErmRateTable { sigma_sq, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{Design, LinearRegressionProblem, LogisticRegressionProblem};
    use crate::rng::Draws;

    fn pv(x: &[f64]) -> ParameterVector {
        ParameterVector::from_slice(x).unwrap()
    }

    fn random_samples(n: usize, d: usize, seed: u64) -> Vec<LossSample> {
        let mut rng = SeededRng::new(seed, 0);
        (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
                let y = x.iter().sum::<f64>() + rng.standard_normal();
                LossSample::new(x, y)
            })
            .collect()
    }

    fn empirical_ridge(samples: &[LossSample], lambda: f64, w: &[f64]) -> f64 {
        samples
            .iter()
            .map(|s| {
                let r = s.y - s.x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
                r * r
            })
            .sum::<f64>()
            / samples.len() as f64
            + lambda * w.iter().map(|v| v * v).sum::<f64>()
    }

    #[test]
    fn single_sample_exact_fit() {
        let sol = erm_ridge(&[LossSample::new(vec![1.0], 3.0)], 0.0).unwrap();
        assert_eq!(sol.w_hat.as_slice(), &[3.0]);
        assert_eq!(sol.n_used, 1);
    }

    #[test]
    fn shrinks_monotonically_with_lambda() {
        let data = random_samples(30, 3, 1);
        let mut last = f64::INFINITY;
        for lambda in [0.0, 0.1, 1.0, 10.0, 100.0, 1e4, 1e8] {
            let n = erm_ridge(&data, lambda).unwrap().w_hat.norm();
            assert!(n < last);
            last = n;
        }
        assert!(last < 1e-6);
    }

    #[test]
    fn empirical_gradient_vanishes() {
        let data = random_samples(50, 3, 2);
        let sol = erm_ridge(&data, 0.0).unwrap();
        assert!(sol.solver_residual <= 1e-10, "{}", sol.solver_residual);
        // independent residual: finite sums straight from the samples
        let w = sol.w_hat.as_slice();
        let mut g = [0.0; 3];
        for s in &data {
            let r = s.y - s.x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
            for (gi, xi) in g.iter_mut().zip(&s.x) {
                *gi += -2.0 * r * xi / data.len() as f64;
            }
        }
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-10);
    }

    #[test]
    fn perturbations_never_decrease_the_empirical_objective() {
        let data = random_samples(40, 4, 3);
        let lambda = 0.05;
        let sol = erm_ridge(&data, lambda).unwrap();
        let base = empirical_ridge(&data, lambda, sol.w_hat.as_slice());
        let mut rng = SeededRng::new(4, 0);
        for _ in 0..1000 {
            let mut dir: Vec<f64> = (0..4).map(|_| rng.standard_normal()).collect();
            let n = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            let w: Vec<f64> = sol.w_hat.as_slice().iter().zip(&mut dir).map(|(a, b)| a + 1e-4 * *b / n).collect();
            assert!(empirical_ridge(&data, lambda, &w) >= base);
        }
    }

    #[test]
    fn underdetermined_least_squares_is_not_unique() {
        for seed in 0..20 {
            let data = random_samples(3, 5, seed);
            let err = erm_ridge(&data, 0.0).unwrap_err();
            assert!(err.to_string().starts_with("ERM not unique"), "{err}");
        }
    }

    #[test]
    fn logistic_separable_labels_stay_finite() {
        let data: Vec<LossSample> = (0..10).map(|i| LossSample::new(vec![1.0 + i as f64], 1.0)).collect();
        let sol = erm_logistic(&data, 0.1, &pv(&[0.0])).unwrap();
        assert!(sol.w_hat.is_finite());
        assert!(sol.solver_residual <= 1e-10);
    }

    #[test]
    fn logistic_symmetric_pair_gives_zero() {
        let data = [LossSample::new(vec![1.0], 1.0), LossSample::new(vec![1.0], 0.0)];
        let sol = erm_logistic(&data, 0.5, &pv(&[3.0])).unwrap();
        assert!(sol.w_hat[0].abs() < 1e-12);
    }

    #[test]
    fn logistic_minimizer_beats_random_perturbations() {
        let design = Design::finite(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![-1.0, 0.5]],
            vec![0.25; 4],
        )
        .unwrap();
        let p = LogisticRegressionProblem::builder(design, pv(&[1.0, -1.0])).lambda(0.1).build().unwrap();
        let mut rng = SeededRng::new(5, 0);
        let data: Vec<LossSample> = (0..100).map(|_| p.sample(&mut rng)).collect();
        let sol = erm_logistic(&data, 0.1, &pv(&[0.0, 0.0])).unwrap();
        let objective = |w: &[f64]| data.iter().map(|s| p.loss(s, w)).sum::<f64>() / data.len() as f64;
        let base = objective(sol.w_hat.as_slice());
        for _ in 0..1000 {
            let w: Vec<f64> = sol.w_hat.as_slice().iter().map(|a| a + 0.1 * rng.standard_normal()).collect();
            assert!(objective(&w) >= base);
        }
    }

    #[test]
    fn noiseless_erm_recovers_exactly() {
        let design = Design::truncated_gaussian(3, 4.0).unwrap();
        let p = Problem::LeastSquares(
            LinearRegressionProblem::builder(design, pv(&[1.0, 2.0, -1.0])).sigma_noise(0.0).build().unwrap(),
        );
        let table = erm_rate_experiment(&p, &[3, 10, 100], 30, &mut SeededRng::new(6, 0), 1).unwrap();
        for row in &table.rows {
            assert_eq!(row.failures, 0);
            assert!(row.mean_excess.mean < 1e-20, "{}", row.mean_excess.mean);
            assert_eq!(row.ratio, None);
        }
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("N,mean_excess,ci_lo,ci_hi,ratio_to_sigma2_over_N,failures\n"));
        assert!(text.lines().nth(1).unwrap().ends_with(",undefined,0"));
    }

    #[test]
    fn failures_are_counted_not_hidden() {
        let design = Design::truncated_gaussian(4, 4.0).unwrap();
        let p = Problem::LeastSquares(LinearRegressionProblem::builder(design, pv(&[1.0; 4])).build().unwrap());
        let table = erm_rate_experiment(&p, &[2], 30, &mut SeededRng::new(7, 0), 1).unwrap();
        assert_eq!(table.rows[0].failures, 30);
    }

    #[test]
    fn parallel_trials_match_serial() {
        let design = Design::truncated_gaussian(2, 4.0).unwrap();
        let p = Problem::LeastSquares(LinearRegressionProblem::builder(design, pv(&[1.0, 0.0])).build().unwrap());
        let a = erm_rate_experiment(&p, &[20, 40], 40, &mut SeededRng::new(8, 0), 1).unwrap();
        let b = erm_rate_experiment(&p, &[20, 40], 40, &mut SeededRng::new(8, 0), 4).unwrap();
        assert_eq!(a, b);
    }
}

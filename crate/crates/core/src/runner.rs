//! Drivers behind the `simulate`, `compare`, `check` and `sweep` commands.
//! Each writes its table to `out` and short human-readable notes to `log`.

use std::io::Write;

use rand::RngCore;

use crate::analysis::{
    self, check_hessian_bound, check_lemma1, check_lemma2, check_self_concordance_bound, random_probes,
    unbiasedness_error, ProbeOutcome, RatioReport, SgdArm, StreamingArm, SuiteReport,
};
use crate::baselines::{erm_rate_experiment, ErmRateTable, SgdConfig};
use crate::config::{ExperimentConfig, SweepEstimator};
use crate::error::{Error, Result};
use crate::linalg::ParameterVector;
use crate::objectives::{
    kurtosis_monte_carlo, Design, LinearRegressionProblem, LogisticRegressionProblem, Noise, Problem,
    StochasticObjective,
};
use crate::rng::SeededRng;
use crate::svrg::{self, BatchGrowth, RunOptions, RunTrace, SvrgSchedule};

/// Process exit code for an error: 2 for bad input, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. }
        | Error::MissingKey(_)
        | Error::InvalidParameter(_)
        | Error::ScheduleInfeasible(_)
        | Error::BudgetBelowFirstStage { .. }
        | Error::DimensionMismatch { .. }
        | Error::Io(_) => 2,
        _ => 1,
    }
}

fn schedule_for(cfg: &ExperimentConfig, problem: &Problem) -> Result<SvrgSchedule> {
    cfg.schedule.build(problem)
}

fn sgd_config(cfg: &ExperimentConfig) -> Result<Option<SgdConfig>> {
    match cfg.baselines.sgd {
        None => Ok(None),
        Some(b) => {
            let c = b.config(1);
            c.validate().map_err(|e| Error::Config {
                key: "baselines.sgd".into(),
                message: e.to_string(),
            })?;
            Ok(Some(c))
        }
    }
}

fn require_grid(cfg: &ExperimentConfig) -> Result<&[u64]> {
    if cfg.n_grid.is_empty() {
        return Err(Error::MissingKey("n_grid".into()));
    }
    Ok(&cfg.n_grid)
}

/// One streaming run. Without a budget or stage cap in the schedule the
/// first `n_grid` entry is the budget.
pub fn simulate(cfg: &ExperimentConfig, out: &mut dyn Write, log: &mut dyn Write) -> Result<RunTrace> {
    let problem = cfg.problem.build()?;
    let mut schedule = schedule_for(cfg, &problem)?;
    if schedule.sample_budget.is_none() && schedule.max_stages.is_none() {
        match cfg.n_grid.first() {
            Some(&n) => schedule = schedule.with_budget(n),
            None => return Err(Error::MissingKey("schedule.budget".into())),
        }
    }
    let w0 = cfg.start(problem.dim())?;
    let mut rng = SeededRng::new(cfg.seed, 0);
    let trace = svrg::run_with(&problem, &schedule, &w0, &mut rng, RunOptions { threads: cfg.threads })?;
    trace.write_csv(&mut *out)?;
    let sigma_sq = problem.sigma_squared()?.value();
    let used = trace.samples_used();
    writeln!(
        log,
        "{}: {} stages, {} samples ({} budgeted), final excess {:.6e}, sigma^2/N {:.6e}",
        problem.family(),
        trace.records.len(),
        used,
        trace.budgeted_samples(),
        trace.final_excess().unwrap_or(trace.initial_excess),
        sigma_sq / used.max(1) as f64,
    )?;
    Ok(trace)
}

/// Streaming SVRG against ERM (and SGD when configured) over `n_grid`.
pub fn compare(cfg: &ExperimentConfig, out: &mut dyn Write, log: &mut dyn Write) -> Result<Vec<RatioReport>> {
    let grid = require_grid(cfg)?;
    if !cfg.baselines.erm {
        return Err(Error::Config {
            key: "baselines.erm".into(),
            message: "compare needs the ERM baseline".into(),
        });
    }
    let problem = cfg.problem.build()?;
    let schedule = schedule_for(cfg, &problem)?;
    let w0 = cfg.start(problem.dim())?;
    let sgd = sgd_config(cfg)?;
    if cfg.trials == 1 {
        writeln!(log, "warning: CI unavailable with trials = 1")?;
    }
    let mut rng = SeededRng::new(cfg.seed, 0);
    let reports = analysis::competitive_ratio(
        &problem,
        &schedule,
        &w0,
        sgd.as_ref(),
        grid,
        cfg.trials,
        &mut rng,
        cfg.threads,
    )?;
    analysis::write_ratio_csv(&reports, &mut *out)?;
    for r in &reports {
        let ratio = r.erm_over_streaming.map_or("undefined".to_string(), |v| format!("{v:.3}"));
        writeln!(
            log,
            "N={}: streaming {:.4e}, ERM {:.4e}, ERM/streaming {}",
            r.n, r.streaming.excess.mean, r.erm.excess.mean, ratio
        )?;
    }
    Ok(reports)
}

/// Excess-risk rate table for the estimator chosen by `sweep`.
pub fn sweep(cfg: &ExperimentConfig, out: &mut dyn Write, log: &mut dyn Write) -> Result<ErmRateTable> {
    let grid = require_grid(cfg)?;
    let problem = cfg.problem.build()?;
    let mut rng = SeededRng::new(cfg.seed, 0);
    let table = match cfg.sweep {
        SweepEstimator::Erm => {
            let ns: Vec<usize> = grid.iter().map(|&n| n as usize).collect();
            erm_rate_experiment(&problem, &ns, cfg.trials, &mut rng, cfg.threads)?
        }
        SweepEstimator::Streaming => {
            let arm = StreamingArm {
                schedule: schedule_for(cfg, &problem)?,
                w0: cfg.start(problem.dim())?,
            };
            analysis::rate_table(&problem, &arm, grid, cfg.trials, &mut rng, cfg.threads)?
        }
        SweepEstimator::Sgd => {
            let config = sgd_config(cfg)?.ok_or_else(|| Error::MissingKey("baselines.sgd".into()))?;
            let arm = SgdArm {
                config,
                w0: cfg.start(problem.dim())?,
            };
            analysis::rate_table(&problem, &arm, grid, cfg.trials, &mut rng, cfg.threads)?
        }
    };
    table.write_csv(&mut *out)?;
    writeln!(log, "sigma^2 = {:.6e}", table.sigma_sq)?;
    Ok(table)
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub suite: String,
    pub problem: String,
    pub passed: bool,
    pub detail: String,
    pub outcomes: Vec<ProbeOutcome>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub lines: Vec<CheckLine>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.lines
            .iter()
            .filter(|l| !l.passed)
            .map(|l| format!("{}[{}]", l.suite, l.problem))
            .collect()
    }

    /// One row per probe: `suite,problem,probe,lhs,lhs_std_err,rhs,passed`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["suite", "problem", "probe", "lhs", "lhs_std_err", "rhs", "passed"])?;
        for l in &self.lines {
            for (i, o) in l.outcomes.iter().enumerate() {
                w.write_record([
                    l.suite.clone(),
                    l.problem.clone(),
                    i.to_string(),
                    o.lhs.to_string(),
                    o.lhs_std_err.to_string(),
                    o.rhs.to_string(),
                    o.passed.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    fn push_suite(&mut self, problem: &str, r: SuiteReport) {
        self.lines.push(CheckLine {
            detail: format!("{} probes, {} violations, worst margin {:.3e}", r.probes, r.violations, r.worst_excess),
            suite: r.name,
            problem: problem.into(),
            passed: r.violations == 0,
            outcomes: r.outcomes,
        });
    }

    fn push_scalar(&mut self, suite: &str, problem: &str, value: f64, tol: f64, what: &str) {
        let passed = value <= tol;
        self.lines.push(CheckLine {
            suite: suite.into(),
            problem: problem.into(),
            passed,
            detail: format!("{what} {value:.3e} (tolerance {tol:.1e})"),
            outcomes: vec![ProbeOutcome {
                lhs: value,
                lhs_std_err: 0.0,
                rhs: tol,
                passed,
            }],
        });
    }
}

fn pv(x: &[f64]) -> ParameterVector {
    ParameterVector::from_slice(x).expect("finite constant")
}

fn default_check_problems() -> Result<Vec<Problem>> {
    let ls = LinearRegressionProblem::builder(Design::truncated_gaussian_default(3)?, pv(&[1.0, -1.0, 0.5])).build()?;
    let ridge = LinearRegressionProblem::builder(Design::truncated_gaussian(3, 3.0)?, pv(&[1.0, -1.0, 0.5]))
        .lambda(0.1)
        .build()?;
    let logistic = LogisticRegressionProblem::builder(
        Design::finite(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![-0.5, 1.5]],
            vec![0.1, 0.2, 0.3, 0.4],
        )?,
        pv(&[1.5, -1.0]),
    )
    .lambda(0.2)
    .build()?;
    Ok(vec![Problem::LeastSquares(ls), Problem::LeastSquares(ridge), Problem::Logistic(logistic)])
}

/// Four-outcome regression: two design points, Rademacher noise.
fn rademacher_regression() -> Result<LinearRegressionProblem> {
    LinearRegressionProblem::builder(
        Design::finite(vec![vec![1.0, 0.5], vec![-0.5, 2.0]], vec![0.3, 0.7])?,
        pv(&[0.7, -1.2]),
    )
    .noise(Noise::Rademacher)
    .sigma_noise(0.8)
    .lambda(0.05)
    .build()
}

/// Schedule arithmetic recomputed independently of the constructors.
/// Returns the largest relative error.
fn schedule_algebra_error() -> Result<f64> {
    let mut worst = 0.0f64;
    let mut rel = |got: f64, want: f64| worst = worst.max((got - want).abs() / want.abs().max(1.0));

    let c1 = SvrgSchedule::corollary1(2.0, 3.0, 10.0, 1.0)?;
    rel(c1.eta, 1.0 / 540.0);
    rel(c1.m as f64, 2_916_000.0);
    rel(c1.batch.k0() as f64, 5_400.0);

    let g = SvrgSchedule {
        eta: 0.1,
        smoothness: Some(1.0),
        m: 50,
        batch: BatchGrowth::Geometric { k0: 100, b: 2.0 },
        max_stages: None,
        sample_budget: None,
        bound: None,
    };
    for s in 0..=10usize {
        // N_s = Σ_{τ<s} (100·2^τ + 50) = 100(2^s − 1) + 50s
        let want = 100.0 * (2f64.powi(s as i32) - 1.0) + 50.0 * s as f64;
        rel(g.budgeted_samples(s)? as f64, want);
    }

    for p in [2.0, 2.5, 3.0, 4.0] {
        for b in [3.0, 4.0, 5.0, 7.0, 10.0] {
            let kappa = 1.0 + p * b;
            let lhs = SvrgSchedule::corollary2_curvature_k0(p, b, kappa);
            let rhs = b * (400.0 * b.powf(2.0 * p + 2.0) * kappa) * kappa;
            rel(lhs / rhs, 1.0);
        }
    }
    Ok(worst)
}

/// Runs every verification suite. Without a `[problem]` section the
/// defaults cover least squares, ridge and a finite logistic problem.
pub fn check(cfg: &ExperimentConfig, log: &mut dyn Write) -> Result<CheckReport> {
    let problems = if cfg.problem.family.is_some() {
        vec![cfg.problem.build()?]
    } else {
        default_check_problems()?
    };
    let c = cfg.check;
    let mut rng = SeededRng::new(cfg.seed, 0);
    let mut report = CheckReport::default();

    for p in &problems {
        let name = p.family();
        let mut r = SeededRng::new(rng.next_u64(), 0);
        let fd = analysis::sample_gradient_check(p, c.probes, c.radius, &mut r);
        report.push_scalar("gradient_fd", name, fd, 1e-5, "worst relative gap");
        let probes = random_probes(p, c.probes, c.radius, &mut r);
        let pop = analysis::population_gradient_check(p, &probes);
        report.push_scalar("population_gradient_fd", name, pop, 1e-5, "worst relative gap");
        report.push_suite(name, check_lemma1(p, &probes, c.draws, &mut r));
        report.push_suite(name, check_lemma2(p, &probes, c.draws, &mut r)?);
        report.push_suite(name, check_hessian_bound(p));
        let mut sc_probes = probes.clone();
        sc_probes.push(p.minimizer().clone());
        report.push_suite(name, check_self_concordance_bound(p, &sc_probes)?);
        if p.outcomes().is_some() {
            let mut worst = 0.0f64;
            for w in probes.iter().take(5) {
                for k in 1..=2 {
                    worst = worst.max(unbiasedness_error(p, w, p.minimizer(), k)?);
                }
            }
            report.push_scalar("unbiasedness", name, worst, 1e-12, "worst coordinate error");
        }
    }

    let rad = rademacher_regression()?;
    let mut r = SeededRng::new(rng.next_u64(), 0);
    let probes = random_probes(&rad, 5, 2.0, &mut r);
    let mut worst = 0.0f64;
    for (w, wt) in probes.iter().zip(probes.iter().rev()) {
        for k in 1..=3 {
            worst = worst.max(unbiasedness_error(&rad, w, wt, k)?);
        }
    }
    report.push_scalar("unbiasedness", "rademacher_regression", worst, 1e-12, "worst coordinate error");

    report.push_scalar("schedule_algebra", "-", schedule_algebra_error()?, 1e-12, "worst relative error");

    let gauss = LinearRegressionProblem::builder(Design::gaussian(1)?, pv(&[1.0])).build()?;
    let kurt = kurtosis_monte_carlo(&gauss, 1_000_000, &mut SeededRng::new(rng.next_u64(), 0));
    report.push_scalar("kurtosis", "gaussian_d1", (kurt.value() - 9.0).abs(), 0.5, "|kurtosis - 9|");

    for l in &report.lines {
        let tag = if l.passed { "PASS" } else { "FAIL" };
        writeln!(log, "{tag} {}[{}] {}", l.suite, l.problem, l.detail)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_algebra_is_exact() {
        assert!(schedule_algebra_error().unwrap() <= 1e-12);
    }

    #[test]
    fn negative_lambda_is_a_usage_error() {
        let cfg = ExperimentConfig::from_toml_str("[problem]\nfamily = \"ridge\"\nd = 2\nlambda = -1.0").unwrap();
        let err = simulate(&cfg, &mut Vec::new(), &mut Vec::new()).unwrap_err();
        assert_eq!(exit_code(&err), 2, "{err}");
    }

    #[test]
    fn missing_family_names_the_key() {
        let cfg = ExperimentConfig::from_toml_str("[problem]\nd = 2").unwrap();
        let err = simulate(&cfg, &mut Vec::new(), &mut Vec::new()).unwrap_err();
        assert_eq!(err.to_string(), "missing key: problem.family");
        assert_eq!(exit_code(&err), 2);
    }

    #[test]
    fn simulate_writes_the_trace_header() {
        let cfg = ExperimentConfig::from_toml_str(
            "seed = 3\n[problem]\nfamily = \"least_squares\"\nd = 2\n[schedule]\npreset = \"practical\"\nbudget = 10000",
        )
        .unwrap();
        let mut out = Vec::new();
        let trace = simulate(&cfg, &mut out, &mut Vec::new()).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("stage,N_s,excess_risk,grad_evals,seed\n"));
        assert_eq!(text.lines().count(), trace.records.len() + 1);
    }

    #[test]
    fn compare_needs_a_grid() {
        let cfg = ExperimentConfig::from_toml_str("[problem]\nfamily = \"least_squares\"\nd = 2").unwrap();
        let err = compare(&cfg, &mut Vec::new(), &mut Vec::new()).unwrap_err();
        assert_eq!(err.to_string(), "missing key: n_grid");
    }

    #[test]
    fn single_trial_compare_warns() {
        let cfg = ExperimentConfig::from_toml_str(
            "trials = 1\nn_grid = [2000]\n[problem]\nfamily = \"least_squares\"\nd = 2",
        )
        .unwrap();
        let mut log = Vec::new();
        compare(&cfg, &mut Vec::new(), &mut log).unwrap();
        assert!(String::from_utf8(log).unwrap().contains("CI unavailable"));
    }
}

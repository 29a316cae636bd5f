use std::io::Write;

use rand::RngCore;

use crate::baselines::{
    erm_fit, map_indexed, sgd_run, thread_pool, trial_rng, ErmRateRow, ErmRateTable, SgdConfig, BOOTSTRAP_RESAMPLES,
};
use crate::baselines::erm::{fmt_ci, fmt_opt};
use crate::error::{Error, Result};
use crate::linalg::ParameterVector;
use crate::objectives::{LossSample, Problem, StochasticObjective};
use crate::rng::SeededRng;
use crate::stats::{bootstrap_fraction, bootstrap_mean_ci, quantile_sorted, resample_mean, MeanCi};
use crate::svrg::{self, SvrgSchedule};

/// An estimator that draws at most `n` samples and reports how many it used.
pub trait Estimator: Sync {
    fn fit(&self, problem: &Problem, n: u64, rng: &mut SeededRng) -> Result<Fit>;
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub w: ParameterVector,
    pub samples_used: u64,
}

/// Streaming SVRG truncated at the budget.
pub struct StreamingArm {
    pub schedule: SvrgSchedule,
    pub w0: ParameterVector,
}

impl Estimator for StreamingArm {
    fn fit(&self, problem: &Problem, n: u64, rng: &mut SeededRng) -> Result<Fit> {
        let schedule = self.schedule.clone().with_budget(n);
        let trace = svrg::run(problem, &schedule, &self.w0, rng)?;
        Ok(Fit {
            w: trace.final_iterate().cloned().unwrap_or_else(|| self.w0.clone()),
            samples_used: trace.samples_used(),
        })
    }
}

/// Exact ERM on `n` fresh samples.
pub struct ErmArm;

impl Estimator for ErmArm {
    fn fit(&self, problem: &Problem, n: u64, rng: &mut SeededRng) -> Result<Fit> {
        let data: Vec<LossSample> = (0..n).map(|_| problem.sample(rng)).collect();
        Ok(Fit {
            w: erm_fit(problem, &data)?.w_hat,
            samples_used: n,
        })
    }
}

pub struct SgdArm {
    pub config: SgdConfig,
    pub w0: ParameterVector,
}

impl Estimator for SgdArm {
    fn fit(&self, problem: &Problem, n: u64, rng: &mut SeededRng) -> Result<Fit> {
        let cfg = self.config.with_budget(n);
        Ok(Fit {
            w: sgd_run(problem, &cfg, &self.w0, rng)?,
            samples_used: n,
        })
    }
}

/// Excess-risk summary of one estimator at one `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSummary {
    pub excess: MeanCi,
    pub failures: usize,
    pub mean_samples_used: f64,
    /// Excess risk of every successful trial.
    pub values: Vec<f64>,
}

impl ArmSummary {
    fn from_results(results: &[Result<(f64, u64)>], boot: &mut SeededRng) -> Self {
        let ok: Vec<(f64, u64)> = results.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
        let values: Vec<f64> = ok.iter().map(|r| r.0).collect();
        let excess = if values.is_empty() {
            MeanCi {
                mean: f64::NAN,
                std_err: f64::NAN,
                lo: f64::NAN,
                hi: f64::NAN,
            }
        } else {
            bootstrap_mean_ci(&values, BOOTSTRAP_RESAMPLES, 0.05, boot)
        };
        ArmSummary {
            excess,
            failures: results.len() - ok.len(),
            mean_samples_used: ok.iter().map(|r| r.1 as f64).sum::<f64>() / ok.len().max(1) as f64,
            values,
        }
    }
}

/// Competitive ratio at one `N`. The ERM-over-streaming orientation puts
/// ERM in the numerator; both orientations are carried.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub n: u64,
    pub streaming: ArmSummary,
    pub erm: ArmSummary,
    pub sgd: Option<ArmSummary>,
    /// `E[ERM excess] / E[streaming excess]`; `None` when undefined.
    pub erm_over_streaming: Option<f64>,
    pub streaming_over_erm: Option<f64>,
    /// Bootstrap 95% interval of `streaming_over_erm`.
    pub streaming_over_erm_ci: Option<(f64, f64)>,
    pub sigma2_over_n: f64,
}

fn ratio(num: f64, den: f64, sigma_sq: f64) -> Option<f64> {
    (sigma_sq > 0.0 && num.is_finite() && den.is_finite() && den > 0.0).then(|| num / den)
}

impl RatioReport {
    pub fn ratio_defined(&self) -> bool {
        self.erm_over_streaming.is_some()
    }
}

/// Runs `reference` at budget `N` and `other` on an independent stream with
/// the number of samples the reference actually used. The reference fills
/// the `streaming` slot of the report, `other` the `erm` slot.
#[allow(clippy::too_many_arguments)]
pub fn compare_arms(
    problem: &Problem,
    reference: &dyn Estimator,
    other: &dyn Estimator,
    sgd: Option<&dyn Estimator>,
    n_grid: &[u64],
    trials: usize,
    rng: &mut SeededRng,
    threads: usize,
) -> Result<Vec<RatioReport>> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let sigma_sq = problem.sigma_squared()?.value();
    let pool = thread_pool(threads)?;
    let mut reports = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let cell = rng.next_u64();
        // three streams per trial: reference, other, sgd
        let results = map_indexed(pool.as_ref(), trials, |t| {
            let fit = |arm: &dyn Estimator, budget: u64, k: usize| {
                arm.fit(problem, budget, &mut trial_rng(cell, 3 * t + k))
                    .map(|f| (problem.excess_risk(&f.w), f.samples_used))
            };
            let a = fit(reference, n, 0);
            let used = a.as_ref().map_or(n, |r| r.1.max(1));
            let b = fit(other, used, 1);
            let c = sgd.map(|s| fit(s, used, 2));
            (a, b, c)
        });
        let mut boot = SeededRng::new(cell, u64::MAX);
        let a: Vec<_> = results.iter().map(|r| clone_result(&r.0)).collect();
        let b: Vec<_> = results.iter().map(|r| clone_result(&r.1)).collect();
        let streaming = ArmSummary::from_results(&a, &mut boot);
        let erm = ArmSummary::from_results(&b, &mut boot);
        let sgd_summary = sgd.map(|_| {
            let c: Vec<_> = results.iter().map(|r| clone_result(r.2.as_ref().expect("sgd arm ran"))).collect();
            ArmSummary::from_results(&c, &mut boot)
        });
        let (num, den) = (erm.excess.mean, streaming.excess.mean);
        let streaming_over_erm = ratio(den, num, sigma_sq);
        let streaming_over_erm_ci = match streaming_over_erm {
            Some(_) if streaming.values.len() > 1 && erm.values.len() > 1 => {
                let mut rs: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
                    .map(|_| resample_mean(&streaming.values, &mut boot) / resample_mean(&erm.values, &mut boot))
                    .collect();
                rs.sort_by(f64::total_cmp);
                Some((quantile_sorted(&rs, 0.025), quantile_sorted(&rs, 0.975)))
            }
            _ => None,
        };
        reports.push(RatioReport {
            n,
            erm_over_streaming: ratio(num, den, sigma_sq),
            streaming_over_erm,
            streaming_over_erm_ci,
            sigma2_over_n: sigma_sq / n as f64,
            streaming,
            erm,
            sgd: sgd_summary,
        });
    }
    Ok(reports)
}

fn clone_result(r: &Result<(f64, u64)>) -> Result<(f64, u64)> {
    match r {
        Ok(v) => Ok(*v),
        Err(e) => Err(Error::invalid(e.to_string())),
    }
}

/// Streaming SVRG against independent ERM (and optionally SGD) fits on the
/// same number of samples, for every budget in `n_grid`.
#[allow(clippy::too_many_arguments)]
pub fn competitive_ratio(
    problem: &Problem,
    schedule: &SvrgSchedule,
    w0: &ParameterVector,
    sgd: Option<&SgdConfig>,
    n_grid: &[u64],
    trials: usize,
    rng: &mut SeededRng,
    threads: usize,
) -> Result<Vec<RatioReport>> {
    let streaming = StreamingArm {
        schedule: schedule.clone(),
        w0: w0.clone(),
    };
    let sgd_arm = sgd.map(|c| SgdArm {
        config: *c,
        w0: w0.clone(),
    });
    compare_arms(
        problem,
        &streaming,
        &ErmArm,
        sgd_arm.as_ref().map(|a| a as &dyn Estimator),
        n_grid,
        trials,
        rng,
        threads,
    )
}

/// Excess risk of `estimator` at each budget in `n_grid`, averaged over
/// `trials` independent runs, in the ERM-rate table layout. `σ²/N` uses the
/// budget `N`.
pub fn rate_table(
    problem: &Problem,
    estimator: &dyn Estimator,
    n_grid: &[u64],
    trials: usize,
    rng: &mut SeededRng,
    threads: usize,
) -> Result<ErmRateTable> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let sigma_sq = problem.sigma_squared()?.value();
    let pool = thread_pool(threads)?;
    let mut rows = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let cell = rng.next_u64();
        let results = map_indexed(pool.as_ref(), trials, |t| {
            estimator
                .fit(problem, n, &mut trial_rng(cell, t))
                .map(|f| (problem.excess_risk(&f.w), f.samples_used))
        });
        let summary = ArmSummary::from_results(&results, &mut SeededRng::new(cell, u64::MAX));
        let sigma2_over_n = sigma_sq / n as f64;
        rows.push(ErmRateRow {
            n: n as usize,
            trials,
            ratio: (sigma_sq > 0.0 && summary.excess.mean.is_finite()).then(|| summary.excess.mean / sigma2_over_n),
            mean_excess: summary.excess,
            sigma2_over_n,
            failures: summary.failures,
            excess: summary.values,
        });
    }
    Ok(ErmRateTable { sigma_sq, rows })
}

/// Fraction of bootstrap resamples in which `streaming/ERM` at `later` is at
/// most its value at `earlier`.
pub fn trend_fraction(earlier: &RatioReport, later: &RatioReport, resamples: usize, rng: &mut SeededRng) -> f64 {
    let groups: [&[f64]; 4] = [
        &earlier.streaming.values,
        &earlier.erm.values,
        &later.streaming.values,
        &later.erm.values,
    ];
    bootstrap_fraction(&groups, resamples, rng, |m| m[2] / m[3] <= m[0] / m[1])
}

/// CSV, one row per `N`.
pub fn write_ratio_csv<W: Write>(reports: &[RatioReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "N",
        "streaming_excess",
        "streaming_ci_lo",
        "streaming_ci_hi",
        "erm_excess",
        "erm_ci_lo",
        "erm_ci_hi",
        "erm_over_streaming",
        "streaming_over_erm",
        "streaming_over_erm_ci_lo",
        "streaming_over_erm_ci_hi",
        "sgd_excess",
        "sigma2_over_N",
        "mean_samples_used",
        "failures",
    ])?;
    for r in reports {
        let (lo, hi) = r.streaming_over_erm_ci.map_or((None, None), |(a, b)| (Some(a), Some(b)));
        let failures = r.streaming.failures + r.erm.failures + r.sgd.as_ref().map_or(0, |s| s.failures);
        w.write_record([
            r.n.to_string(),
            fmt_ci(r.streaming.excess.mean),
            fmt_ci(r.streaming.excess.lo),
            fmt_ci(r.streaming.excess.hi),
            fmt_ci(r.erm.excess.mean),
            fmt_ci(r.erm.excess.lo),
            fmt_ci(r.erm.excess.hi),
            fmt_opt(r.erm_over_streaming),
            fmt_opt(r.streaming_over_erm),
            lo.map_or("NA".into(), |v| v.to_string()),
            hi.map_or("NA".into(), |v| v.to_string()),
            r.sgd.as_ref().map_or("NA".into(), |s| fmt_ci(s.excess.mean)),
            r.sigma2_over_n.to_string(),
            r.streaming.mean_samples_used.to_string(),
            failures.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

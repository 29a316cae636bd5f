//! Streaming SVRG.
//!
//! Each stage `s` averages fresh sample gradients at the anchor `w̃_s` over a
//! batch of `k_s` draws, picks `m̃ ~ Uniform{1..m}`, and takes `m̃` corrected
//! steps
//!
//! ```text
//! w_{t+1} = w_t − (η/L) (∇ψ_t(w_t) − ∇ψ_t(w̃_s) + ĝ(w̃_s))
//! ```
//!
//! each on a new sample. The last inner iterate becomes `w̃_{s+1}`. Every
//! sample is used once.

pub mod schedule;

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Divergence, Error, Result};
use crate::linalg::{check_dim, ParameterVector};
use crate::objectives::{LossSample, StochasticObjective};
use crate::rng::{SampleRng, SeededRng};

pub use schedule::{BatchGrowth, BoundParams, PracticalOptions, StageParams, SvrgSchedule};

/// Samples per block of the batch-gradient reduction. The block shape is
/// fixed, so sums are bit-identical for every thread count.
pub const REDUCTION_BLOCK: usize = 1024;

/// Iterates beyond `DIVERGENCE_FACTOR · (1 + ‖w0‖ + scale)` abort the run.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads for the batch gradient; 1 runs serially.
    pub threads: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { threads: 1 }
    }
}

/// Result of one stage.
#[derive(Debug, Clone)]
pub struct StageOutcome {
    pub w: ParameterVector,
    pub m_tilde: u64,
    /// `k + m̃`
    pub samples: u64,
    /// `k + 2m̃`
    pub grad_evals: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub stage: usize,
    /// Worst-case samples through the end of this stage, `Σ_{τ≤s}(k_τ + m_τ)`.
    pub n_s: u64,
    /// Samples actually drawn through the end of this stage.
    pub samples_used: u64,
    pub k: u64,
    pub m_tilde: u64,
    pub w_tilde: ParameterVector,
    pub excess_risk: f64,
    pub grad_evals: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub seed: u64,
    pub stream: u64,
    pub threads: usize,
    pub initial_excess: f64,
    pub records: Vec<StageRecord>,
}

impl RunTrace {
    pub fn final_iterate(&self) -> Option<&ParameterVector> {
        self.records.last().map(|r| &r.w_tilde)
    }

    pub fn final_excess(&self) -> Option<f64> {
        self.records.last().map(|r| r.excess_risk)
    }

    pub fn samples_used(&self) -> u64 {
        self.records.last().map_or(0, |r| r.samples_used)
    }

    pub fn budgeted_samples(&self) -> u64 {
        self.records.last().map_or(0, |r| r.n_s)
    }

    /// CSV with header `stage,N_s,excess_risk,grad_evals,seed`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["stage", "N_s", "excess_risk", "grad_evals", "seed"])?;
        for r in &self.records {
            w.write_record([
                r.stage.to_string(),
                r.n_s.to_string(),
                r.excess_risk.to_string(),
                r.grad_evals.to_string(),
                r.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// CSV including actual sample counts and batch sizes.
    pub fn write_detailed_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "stage",
            "N_s",
            "samples_used",
            "k",
            "m_tilde",
            "excess_risk",
            "grad_evals",
            "seed",
        ])?;
        for r in &self.records {
            w.write_record([
                r.stage.to_string(),
                r.n_s.to_string(),
                r.samples_used.to_string(),
                r.k.to_string(),
                r.m_tilde.to_string(),
                r.excess_risk.to_string(),
                r.grad_evals.to_string(),
                r.seed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    }
}

/// Compensated running sum of vectors.
struct KahanVec {
    sum: Vec<f64>,
    comp: Vec<f64>,
}

impl KahanVec {
    fn new(d: usize) -> Self {
        KahanVec {
            sum: vec![0.0; d],
            comp: vec![0.0; d],
        }
    }

    fn add(&mut self, v: &[f64]) {
        for ((s, c), &x) in self.sum.iter_mut().zip(self.comp.iter_mut()).zip(v) {
            let y = x - *c;
            let t = *s + y;
            *c = (t - *s) - y;
            *s = t;
        }
    }
}

fn block_gradient_sum<O: StochasticObjective + ?Sized>(problem: &O, w: &[f64], keys: &[u64]) -> Vec<f64> {
    let d = problem.dim();
    let mut sample = LossSample::zeros(d);
    let mut g = vec![0.0; d];
    let mut acc = KahanVec::new(d);
    for &key in keys {
        problem.sample_into(&mut SampleRng::from_key(key), &mut sample);
        g.iter_mut().for_each(|v| *v = 0.0);
        problem.add_gradient(&sample, w, 1.0, &mut g);
        acc.add(&g);
    }
    acc.sum
}

/// Fixed-shape pairwise reduction.
fn tree_reduce(mut parts: Vec<Vec<f64>>) -> Vec<f64> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// `ĝ(w) = (1/k) Σ ∇ψ_i(w)` over `k` fresh samples drawn from `rng`.
pub fn batch_gradient<O: StochasticObjective + ?Sized>(
    problem: &O,
    w: &[f64],
    k: u64,
    rng: &mut SeededRng,
    pool: Option<&rayon::ThreadPool>,
) -> Vec<f64> {
    let keys: Vec<u64> = (0..k).map(|_| rng.next_u64()).collect();
    let parts: Vec<Vec<f64>> = match pool {
        Some(pool) if keys.len() > REDUCTION_BLOCK => pool.install(|| {
            keys.par_chunks(REDUCTION_BLOCK)
                .map(|c| block_gradient_sum(problem, w, c))
                .collect()
        }),
        _ => keys
            .chunks(REDUCTION_BLOCK)
            .map(|c| block_gradient_sum(problem, w, c))
            .collect(),
    };
    let mut g = tree_reduce(parts);
    let inv = 1.0 / k as f64;
    g.iter_mut().for_each(|v| *v *= inv);
    g
}

use rand::RngCore;

/// Runs one stage from `w_tilde` with batch `k`, cap `m` and step `η/L`.
pub fn run_stage<O: StochasticObjective + ?Sized>(
    problem: &O,
    w_tilde: &ParameterVector,
    params: StageParams,
    smoothness: f64,
    rng: &mut SeededRng,
) -> Result<StageOutcome> {
    run_stage_inner(problem, w_tilde, params, smoothness, rng, None, f64::INFINITY, 0)
}

#[allow(clippy::too_many_arguments)]
fn run_stage_inner<O: StochasticObjective + ?Sized>(
    problem: &O,
    w_tilde: &ParameterVector,
    params: StageParams,
    smoothness: f64,
    rng: &mut SeededRng,
    pool: Option<&rayon::ThreadPool>,
    threshold: f64,
    stage: usize,
) -> Result<StageOutcome> {
    let StageParams { k, m, eta } = params;
    check_dim(problem.dim(), w_tilde.dim())?;
    if k == 0 || m == 0 {
        return Err(Error::invalid("stage needs k ≥ 1 and m ≥ 1"));
    }
    if !(eta > 0.0 && eta < 0.25) {
        return Err(Error::invalid(format!("eta must lie in (0, 1/4), got {eta}")));
    }
    if !(smoothness > 0.0 && smoothness.is_finite()) {
        return Err(Error::invalid(format!("smoothness must be positive and finite, got {smoothness}")));
    }
    let anchor = w_tilde.as_slice();
    let g_hat = batch_gradient(problem, anchor, k, rng, pool);
    let m_tilde = rng.uniform_index1(m);
    let step = eta / smoothness;
    let d = problem.dim();
    let mut w = anchor.to_vec();
    let mut dir = vec![0.0; d];
    let mut sample = LossSample::zeros(d);
    let threshold_sq = threshold * threshold;
    for t in 0..m_tilde {
        problem.sample_into(&mut rng.sample_rng(), &mut sample);
        dir.copy_from_slice(&g_hat);
        problem.add_gradient(&sample, &w, 1.0, &mut dir);
        problem.add_gradient(&sample, anchor, -1.0, &mut dir);
        let mut norm_sq = 0.0;
        for (wi, di) in w.iter_mut().zip(&dir) {
            *wi -= step * di;
            norm_sq += *wi * *wi;
        }
        if !(norm_sq <= threshold_sq) {
            return Err(Error::Diverged(Box::new(Divergence {
                stage,
                step: t + 1,
                iterate_norm: norm_sq.sqrt(),
                threshold,
                w_tilde: anchor.to_vec(),
                partial: None,
            })));
        }
    }
    Ok(StageOutcome {
        w: ParameterVector::from_vec(w)?,
        m_tilde,
        samples: k + m_tilde,
        grad_evals: k + 2 * m_tilde,
    })
}

/// Runs stages until `max_stages` or until the next stage's worst-case
/// sample count would exceed `sample_budget`.
pub fn run<O: StochasticObjective + ?Sized>(
    problem: &O,
    schedule: &SvrgSchedule,
    w0: &ParameterVector,
    rng: &mut SeededRng,
) -> Result<RunTrace> {
    run_with(problem, schedule, w0, rng, RunOptions::default())
}

pub fn run_with<O: StochasticObjective + ?Sized>(
    problem: &O,
    schedule: &SvrgSchedule,
    w0: &ParameterVector,
    rng: &mut SeededRng,
    opts: RunOptions,
) -> Result<RunTrace> {
    schedule.validate()?;
    check_dim(problem.dim(), w0.dim())?;
    if schedule.max_stages.is_none() && schedule.sample_budget.is_none() {
        return Err(Error::invalid("schedule needs max_stages or sample_budget"));
    }
    let k0 = schedule.batch.k0();
    if let Some(budget) = schedule.sample_budget {
        if budget < k0 + 1 {
            return Err(Error::BudgetBelowFirstStage {
                budget,
                required: k0 + 1,
            });
        }
    }
    let smoothness = schedule.smoothness.unwrap_or_else(|| problem.smoothness());
    let threshold = DIVERGENCE_FACTOR * (1.0 + w0.norm() + problem.parameter_scale());
    let pool = if opts.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(opts.threads)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    let mut trace = RunTrace {
        seed: rng.seed(),
        stream: rng.stream(),
        threads: opts.threads.max(1),
        initial_excess: problem.excess_risk(w0),
        records: Vec::new(),
    };
    let mut w_tilde = w0.clone();
    let mut n_budgeted: u64 = 0;
    let mut n_used: u64 = 0;
    for s in 0.. {
        if schedule.max_stages.is_some_and(|max| s >= max) {
            break;
        }
        let mut params = match schedule.stage(s) {
            Ok(p) => p,
            // later stages of a fast-growing plan may not fit in 64 bits
            Err(Error::ScheduleInfeasible(_)) if s > 0 => break,
            Err(e) => return Err(e),
        };
        if let Some(budget) = schedule.sample_budget {
            let need = n_budgeted.saturating_add(params.k).saturating_add(params.m);
            if need > budget {
                if s > 0 {
                    break;
                }
                // first stage: shrink the inner cap to fit
                params.m = budget - params.k;
            }
        }
        let outcome = match run_stage_inner(problem, &w_tilde, params, smoothness, rng, pool.as_ref(), threshold, s) {
            Ok(o) => o,
            Err(Error::Diverged(mut div)) => {
                div.partial = Some(trace);
                return Err(Error::Diverged(div));
            }
            Err(e) => return Err(e),
        };
        n_budgeted += params.k + params.m;
        n_used += outcome.samples;
        w_tilde = outcome.w;
        trace.records.push(StageRecord {
            stage: s,
            n_s: n_budgeted,
            samples_used: n_used,
            k: params.k,
            m_tilde: outcome.m_tilde,
            w_tilde: w_tilde.clone(),
            excess_risk: problem.excess_risk(&w_tilde),
            grad_evals: outcome.grad_evals,
            seed: trace.seed,
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{Design, LinearRegressionProblem};

    fn pv(x: &[f64]) -> ParameterVector {
        ParameterVector::from_slice(x).unwrap()
    }

    fn deterministic(x: f64, y: f64) -> LinearRegressionProblem {
        let design = Design::finite(vec![vec![x]], vec![1.0]).unwrap();
        LinearRegressionProblem::builder(design, pv(&[y / x]))
            .sigma_noise(0.0)
            .build()
            .unwrap()
    }

    #[test]
    fn fixed_point_at_optimum() {
        let p = deterministic(1.0, 2.0);
        let mut rng = SeededRng::new(1, 0);
        let params = StageParams { k: 10, m: 20, eta: 0.1 };
        let out = run_stage(&p, &pv(&[2.0]), params, 1.0, &mut rng).unwrap();
        assert_eq!(out.w.as_slice(), &[2.0]);
    }

    #[test]
    fn single_inner_step_arithmetic() {
        // sample (x=1, y=0): ∇ψ(1) = 2, ĝ = 2 → w₁ = 1 − 0.1·2 = 0.8
        let p = deterministic(1.0, 0.0);
        let mut rng = SeededRng::new(2, 0);
        let params = StageParams { k: 1, m: 1, eta: 0.1 };
        let out = run_stage(&p, &pv(&[1.0]), params, 1.0, &mut rng).unwrap();
        assert_eq!(out.m_tilde, 1);
        assert_eq!(out.grad_evals, 3);
        assert_eq!(out.samples, 2);
        assert!((out.w[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn budget_below_first_stage() {
        let p = deterministic(1.0, 1.0);
        let s = SvrgSchedule::practical(1.0, 0, 2.0).unwrap().with_budget(5);
        let err = run(&p, &s, &pv(&[0.0]), &mut SeededRng::new(0, 0)).unwrap_err();
        assert!(matches!(err, Error::BudgetBelowFirstStage { budget: 5, required: 6 }));
    }

    #[test]
    fn geometric_budget_bookkeeping() {
        let p = deterministic(1.0, 1.0);
        let s = SvrgSchedule {
            eta: 0.1,
            smoothness: None,
            m: 50,
            batch: BatchGrowth::Geometric { k0: 100, b: 2.0 },
            max_stages: None,
            sample_budget: Some(1000),
            bound: None,
        };
        let trace = run(&p, &s, &pv(&[0.0]), &mut SeededRng::new(4, 0)).unwrap();
        let ns: Vec<u64> = trace.records.iter().map(|r| r.n_s).collect();
        assert_eq!(ns, vec![150, 400, 850]);
        for r in &trace.records {
            assert_eq!(r.grad_evals, r.k + 2 * r.m_tilde);
        }
        let used: u64 = trace.records.iter().map(|r| r.k + r.m_tilde).sum();
        assert_eq!(used, trace.samples_used());
        assert!(trace.samples_used() <= trace.budgeted_samples());
    }

    #[test]
    fn first_stage_inner_cap_shrinks_to_budget() {
        let p = deterministic(1.0, 1.0);
        let s = SvrgSchedule::practical(1.0, 0, 2.0).unwrap().with_budget(6);
        let trace = run(&p, &s, &pv(&[0.0]), &mut SeededRng::new(0, 0)).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].m_tilde, 1);
        assert_eq!(trace.records[0].n_s, 6);
    }

    #[test]
    fn divergence_guard_trips_with_partial_trace() {
        let p = deterministic(1.0, 1.0);
        // a step far above 2/L oscillates with growing amplitude
        let s = SvrgSchedule::practical(1.0, 50, 1.0).unwrap().with_smoothness(1e-3);
        let err = run(&p, &s, &pv(&[0.0]), &mut SeededRng::new(0, 0)).unwrap_err();
        match err {
            Error::Diverged(div) => {
                assert!(div.iterate_norm > div.threshold);
                assert!(div.partial.is_some());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tree_reduction_is_thread_count_invariant() {
        let design = Design::truncated_gaussian(3, 3.0).unwrap();
        let p = LinearRegressionProblem::builder(design, pv(&[1.0, -1.0, 0.5])).build().unwrap();
        let w = [0.3, 0.2, -0.1];
        let serial = batch_gradient(&p, &w, 10_000, &mut SeededRng::new(5, 0), None);
        for threads in [2, 3, 8] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let par = batch_gradient(&p, &w, 10_000, &mut SeededRng::new(5, 0), Some(&pool));
            assert_eq!(par, serial);
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let p = deterministic(1.0, 1.0);
        let s = SvrgSchedule::practical(1.0, 3, 2.0).unwrap();
        let trace = run(&p, &s, &pv(&[0.0]), &mut SeededRng::new(9, 0)).unwrap();
        let text = trace.to_csv_string().unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("stage,N_s,excess_risk,grad_evals,seed"));
        assert_eq!(lines.count(), 3);
    }
}

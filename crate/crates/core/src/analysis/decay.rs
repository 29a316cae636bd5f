use rand::RngCore;

use crate::baselines::{map_indexed, thread_pool, trial_rng};
use crate::error::Result;
use crate::linalg::ParameterVector;
use crate::objectives::StochasticObjective;
use crate::rng::{Draws, SeededRng};
use crate::stats::RunningStats;
use crate::svrg::{self, SvrgSchedule};

#[derive(Debug, Clone, PartialEq)]
pub struct DecayAtScale {
    /// `‖w0 − w*‖`
    pub scale: f64,
    pub initial_excess: f64,
    /// Seed-averaged `excess_s / excess_{s−1}`, stage 0 relative to `w0`.
    pub mean_contraction: Vec<f64>,
    pub contraction_std_err: Vec<f64>,
    /// Seed-averaged excess after each stage.
    pub mean_excess: Vec<f64>,
    /// Seed-averaged least-squares slope of `ln excess` against stage index.
    pub log_slope: f64,
    pub log_slope_std_err: f64,
    /// `initial_excess / mean final excess`
    pub total_decay: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub direction: ParameterVector,
    pub scales: Vec<DecayAtScale>,
}

fn slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xbar = (n - 1.0) / 2.0;
    let ybar = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in ys.iter().enumerate() {
        let dx = i as f64 - xbar;
        sxy += dx * (y - ybar);
        sxx += dx * dx;
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Runs the schedule from `w* + r·u` for each `r` in `scales` and `seeds`
/// independent seeds, `u` a random unit direction shared across scales.
pub fn initial_error_decay_probe<O: StochasticObjective + ?Sized>(
    problem: &O,
    schedule: &SvrgSchedule,
    scales: &[f64],
    seeds: usize,
    rng: &mut SeededRng,
    threads: usize,
) -> Result<DecayReport> {
    let d = problem.dim();
    let mut u = vec![0.0; d];
    rng.fill_standard_normal(&mut u);
    let direction = ParameterVector::from_vec(u)?;
    let direction = direction.scale(1.0 / direction.norm());
    let pool = thread_pool(threads)?;
    let mut out = Vec::with_capacity(scales.len());
    for &scale in scales {
        let mut w0 = problem.minimizer().clone();
        w0.axpy(scale, &direction)?;
        let initial_excess = problem.excess_risk(&w0);
        let cell = rng.next_u64();
        let traces = map_indexed(pool.as_ref(), seeds, |t| svrg::run(problem, schedule, &w0, &mut trial_rng(cell, t)));
        let ok: Vec<_> = traces.iter().filter_map(|t| t.as_ref().ok()).collect();
        let stages = ok.iter().map(|t| t.records.len()).min().unwrap_or(0);
        let mut contraction = vec![RunningStats::new(); stages];
        let mut excess = vec![RunningStats::new(); stages];
        let mut slopes = RunningStats::new();
        for tr in &ok {
            let mut prev = initial_excess;
            let mut logs = Vec::with_capacity(stages);
            for (s, rec) in tr.records.iter().take(stages).enumerate() {
                contraction[s].push(rec.excess_risk / prev);
                excess[s].push(rec.excess_risk);
                logs.push(rec.excess_risk.max(f64::MIN_POSITIVE).ln());
                prev = rec.excess_risk;
            }
            if logs.len() > 1 {
                slopes.push(slope(&logs));
            }
        }
        let mean_excess: Vec<f64> = excess.iter().map(|s| s.mean()).collect();
        out.push(DecayAtScale {
            scale,
            initial_excess,
            mean_contraction: contraction.iter().map(|s| s.mean()).collect(),
            contraction_std_err: contraction.iter().map(|s| s.std_err()).collect(),
            total_decay: mean_excess.last().map_or(f64::NAN, |e| initial_excess / e),
            mean_excess,
            log_slope: slopes.mean(),
            log_slope_std_err: slopes.std_err(),
            failures: seeds - ok.len(),
        });
    }
    Ok(DecayReport { direction, scales: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{Design, LinearRegressionProblem};

    fn noiseless() -> LinearRegressionProblem {
        let design = Design::truncated_gaussian(3, 3.0).unwrap();
        LinearRegressionProblem::builder(design, ParameterVector::from_slice(&[1.0, 0.5, -0.5]).unwrap())
            .sigma_noise(0.0)
            .build()
            .unwrap()
    }

    #[test]
    fn start_at_optimum_stays_flat() {
        let p = noiseless();
        let s = SvrgSchedule::practical(p.condition_number(), 4, 2.0).unwrap();
        let r = initial_error_decay_probe(&p, &s, &[0.0], 3, &mut SeededRng::new(1, 0), 1).unwrap();
        assert_eq!(r.scales[0].initial_excess, 0.0);
        assert!(r.scales[0].mean_excess.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn doubling_the_distance_quadruples_the_initial_excess() {
        let p = noiseless();
        let s = SvrgSchedule::practical(p.condition_number(), 5, 2.0).unwrap();
        let r = initial_error_decay_probe(&p, &s, &[1.0, 2.0], 40, &mut SeededRng::new(2, 0), 1).unwrap();
        let (a, b) = (&r.scales[0], &r.scales[1]);
        assert!((b.initial_excess / a.initial_excess - 4.0).abs() < 1e-12);
        let se = a.log_slope_std_err.hypot(b.log_slope_std_err);
        assert!((a.log_slope - b.log_slope).abs() <= 3.0 * se, "{} vs {}", a.log_slope, b.log_slope);
        assert!(a.log_slope < 0.0);
    }

    #[test]
    fn slope_of_a_line() {
        assert!((slope(&[1.0, -1.0, -3.0, -5.0]) + 2.0).abs() < 1e-15);
    }
}

//! Monte Carlo properties that need many seeded runs.

use streaming_svrg::analysis::competitive_ratio;
use streaming_svrg::baselines::erm_rate_experiment;
use streaming_svrg::linalg::ParameterVector;
use streaming_svrg::objectives::{Design, LinearRegressionProblem, Problem, StochasticObjective};
use streaming_svrg::rng::SeededRng;
use streaming_svrg::svrg::{self, SvrgSchedule};

fn ls(d: usize, radius_sq: f64, sigma_noise: f64) -> LinearRegressionProblem {
    let w: Vec<f64> = (0..d).map(|i| 1.0 - 0.3 * i as f64).collect();
    LinearRegressionProblem::builder(
        Design::truncated_gaussian(d, radius_sq.sqrt()).unwrap(),
        ParameterVector::from_vec(w).unwrap(),
    )
    .sigma_noise(sigma_noise)
    .build()
    .unwrap()
}

#[test]
fn noiseless_runs_decrease_monotonically() {
    let p = ls(3, 9.0, 0.0);
    let schedule = SvrgSchedule::practical(p.condition_number(), 6, 3.0).unwrap();
    let w0 = ParameterVector::zeros(3);
    let monotone = (0..100)
        .filter(|&seed| {
            let trace = svrg::run(&p, &schedule, &w0, &mut SeededRng::new(seed, 0)).unwrap();
            let mut prev = trace.initial_excess;
            trace.records.iter().all(|r| {
                let ok = r.excess_risk < prev;
                prev = r.excess_risk;
                ok
            })
        })
        .count();
    assert!(monotone >= 95, "{monotone} of 100 runs monotone");
}

#[test]
fn streaming_within_three_times_erm_at_kappa_ten() {
    // radius² 10 puts κ near 10
    let p = ls(5, 10.0, 1.0);
    let kappa = p.condition_number();
    assert!((9.0..=12.0).contains(&kappa), "{kappa}");
    let schedule = SvrgSchedule::practical(kappa, 0, 3.0).unwrap();
    // N = 100κ·d; at N = 100κ only the first stage (55κ of 120κ) fits
    let n = (100.0 * kappa * 5.0).round() as u64;
    let reports = competitive_ratio(
        &Problem::LeastSquares(p),
        &schedule,
        &ParameterVector::zeros(5),
        None,
        &[n],
        200,
        &mut SeededRng::new(9, 0),
        1,
    )
    .unwrap();
    let r = &reports[0];
    assert!(r.streaming.excess.mean <= 3.0 * r.erm.excess.mean, "{:?}", r.streaming_over_erm);
}

#[test]
fn erm_tracks_sigma_sq_over_n() {
    let d = 4;
    let p = LinearRegressionProblem::builder(
        Design::truncated_gaussian_default(d).unwrap(),
        ParameterVector::from_slice(&[0.5, -1.0, 2.0, 0.0]).unwrap(),
    )
    .build()
    .unwrap();
    let grid = [400 * d, 800 * d];
    let table = erm_rate_experiment(&Problem::LeastSquares(p), &grid, 500, &mut SeededRng::new(10, 0), 1).unwrap();
    for row in &table.rows {
        let ratio = row.ratio.unwrap();
        assert!((0.8..=1.2).contains(&ratio), "N={}: {ratio}", row.n);
    }
}

#[test]
fn trials_are_thread_count_invariant() {
    let p = Problem::LeastSquares(ls(3, 9.0, 1.0));
    let schedule = SvrgSchedule::practical(p.condition_number(), 0, 3.0).unwrap();
    let run = |threads| {
        competitive_ratio(&p, &schedule, &ParameterVector::zeros(3), None, &[3000], 8, &mut SeededRng::new(4, 0), threads)
            .unwrap()
    };
    assert_eq!(run(1), run(3));
}

//! Averaged SGD with decaying steps next to streaming SVRG at equal budgets.
//!
//!     cargo run --release --example sgd_baseline

use streaming_svrg::analysis::competitive_ratio;
use streaming_svrg::baselines::{sgd_run, SgdConfig, SgdStep};
use streaming_svrg::linalg::ParameterVector;
use streaming_svrg::objectives::{Design, LinearRegressionProblem, Problem, StochasticObjective};
use streaming_svrg::rng::SeededRng;
use streaming_svrg::svrg::SvrgSchedule;

pub fn run() -> streaming_svrg::Result<()> {
    let problem = Problem::LeastSquares(
        LinearRegressionProblem::builder(Design::truncated_gaussian(2, 3.0)?, ParameterVector::from_slice(&[1.0, -1.0])?)
            .build()?,
    );
    let sgd = SgdConfig {
        step: SgdStep::PolynomialDecay {
            gamma0: 1.0 / problem.smoothness(),
            c: 0.51,
        },
        average: true,
        sample_budget: 10_000,
    };
    let w = sgd_run(&problem, &sgd, &ParameterVector::zeros(2), &mut SeededRng::new(4, 0))?;
    println!("one averaged SGD run, N = 10000: excess = {:.3e}", problem.excess_risk(&w));

    let schedule = SvrgSchedule::practical(problem.condition_number(), 0, 3.0)?;
    let reports = competitive_ratio(
        &problem,
        &schedule,
        &ParameterVector::zeros(2),
        Some(&sgd),
        &[10_000],
        30,
        &mut SeededRng::new(5, 0),
        1,
    )?;
    let r = &reports[0];
    let sgd_excess = r.sgd.as_ref().map_or(f64::NAN, |s| s.excess.mean);
    println!(
        "30 trials: streaming {:.3e}, ERM {:.3e}, averaged SGD {:.3e}, sigma^2/N {:.3e}",
        r.streaming.excess.mean, r.erm.excess.mean, sgd_excess, r.sigma2_over_n
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> streaming_svrg::Result<()> {
    run()
}

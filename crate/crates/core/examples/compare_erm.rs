//! Streaming SVRG against empirical risk minimization on the same number of
//! samples. Prints the ratio table as CSV.
//!
//!     cargo run --release --example compare_erm

use streaming_svrg::analysis::{competitive_ratio, write_ratio_csv, RatioReport};
use streaming_svrg::linalg::ParameterVector;
use streaming_svrg::objectives::{Design, LinearRegressionProblem, Problem, StochasticObjective};
use streaming_svrg::rng::SeededRng;
use streaming_svrg::svrg::SvrgSchedule;

pub fn run() -> streaming_svrg::Result<Vec<RatioReport>> {
    let design = Design::truncated_gaussian(3, 3.0)?;
    let problem = Problem::LeastSquares(
        LinearRegressionProblem::builder(design, ParameterVector::from_slice(&[1.0, 0.5, -1.0])?).build()?,
    );
    let kappa = problem.condition_number();
    let schedule = SvrgSchedule::practical(kappa, 0, 3.0)?;
    let grid = [(300.0 * kappa) as u64, (1000.0 * kappa) as u64];
    let reports = competitive_ratio(
        &problem,
        &schedule,
        &ParameterVector::zeros(3),
        None,
        &grid,
        40,
        &mut SeededRng::new(2, 0),
        1,
    )?;
    write_ratio_csv(&reports, std::io::stdout())?;
    for r in &reports {
        eprintln!(
            "N = {}: ERM/streaming = {:?}, streaming used {:.0} samples on average",
            r.n, r.erm_over_streaming, r.streaming.mean_samples_used
        );
    }
    Ok(reports)
}

#[allow(dead_code)]
fn main() -> streaming_svrg::Result<()> {
    run()?;
    Ok(())
}

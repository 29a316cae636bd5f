//! One streaming SVRG run on well-specified least squares, printing the
//! per-stage trace.
//!
//!     cargo run --example simulate

use streaming_svrg::linalg::ParameterVector;
use streaming_svrg::objectives::{Design, LinearRegressionProblem, StochasticObjective};
use streaming_svrg::rng::SeededRng;
use streaming_svrg::svrg::{self, SvrgSchedule};

pub fn run() -> streaming_svrg::Result<svrg::RunTrace> {
    let design = Design::truncated_gaussian(4, 3.0)?;
    let problem = LinearRegressionProblem::builder(design, ParameterVector::from_slice(&[1.0, -2.0, 0.5, 0.0])?)
        .sigma_noise(0.5)
        .build()?;
    let kappa = problem.condition_number();
    let schedule = SvrgSchedule::practical(kappa, 0, 3.0)?.with_budget(50_000);
    let w0 = ParameterVector::zeros(4);
    let trace = svrg::run(&problem, &schedule, &w0, &mut SeededRng::new(1, 0))?;

    println!("kappa = {kappa:.2}, k0 = {}, m = {}", schedule.batch.k0(), schedule.m);
    println!("stage      N_s   used     k   m~      excess");
    for r in &trace.records {
        println!(
            "{:>5} {:>8} {:>6} {:>5} {:>4} {:>11.4e}",
            r.stage, r.n_s, r.samples_used, r.k, r.m_tilde, r.excess_risk
        );
    }
    let sigma_sq = problem.sigma_squared()?.value();
    println!("sigma^2 / samples used = {:.4e}", sigma_sq / trace.samples_used() as f64);
    Ok(trace)
}

#[allow(dead_code)]
fn main() -> streaming_svrg::Result<()> {
    run()?;
    Ok(())
}

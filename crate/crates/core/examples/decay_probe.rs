//! Noiseless least squares started far from the optimum: per-stage
//! contraction of the excess risk at two starting distances.
//!
//!     cargo run --release --example decay_probe

use streaming_svrg::analysis::{initial_error_decay_probe, DecayReport};
use streaming_svrg::linalg::ParameterVector;
use streaming_svrg::objectives::{Design, LinearRegressionProblem, StochasticObjective};
use streaming_svrg::rng::SeededRng;
use streaming_svrg::svrg::SvrgSchedule;

pub fn run() -> streaming_svrg::Result<DecayReport> {
    let problem = LinearRegressionProblem::builder(Design::truncated_gaussian(3, 3.0)?, ParameterVector::from_slice(&[1.0, 0.0, -1.0])?)
        .sigma_noise(0.0)
        .build()?;
    let schedule = SvrgSchedule::practical(problem.condition_number(), 5, 3.0)?;
    let report = initial_error_decay_probe(&problem, &schedule, &[1.0, 10.0], 20, &mut SeededRng::new(8, 0), 1)?;
    for s in &report.scales {
        let factors: Vec<String> = s.mean_contraction.iter().map(|c| format!("{c:.3}")).collect();
        println!(
            "|w0 - w*| = {:>4}: initial {:.3e}, contraction per stage [{}], log-slope {:.2} +- {:.2}, total decay {:.2e}",
            s.scale,
            s.initial_excess,
            factors.join(", "),
            s.log_slope,
            s.log_slope_std_err,
            s.total_decay
        );
    }
    Ok(report)
}

#[allow(dead_code)]
fn main() -> streaming_svrg::Result<()> {
    run()?;
    Ok(())
}

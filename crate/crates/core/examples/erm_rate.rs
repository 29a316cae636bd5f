//! Mean ERM excess risk against `σ²/N` for well-specified least squares,
//! where `σ² = d·σ²_noise` exactly.
//!
//!     cargo run --release --example erm_rate

use streaming_svrg::baselines::{erm_rate_experiment, ErmRateTable};
use streaming_svrg::linalg::ParameterVector;
use streaming_svrg::objectives::{Design, LinearRegressionProblem, Problem};
use streaming_svrg::rng::SeededRng;

pub fn run() -> streaming_svrg::Result<ErmRateTable> {
    let d = 3;
    let problem = Problem::LeastSquares(
        LinearRegressionProblem::builder(Design::truncated_gaussian_default(d)?, ParameterVector::zeros(d))
            .sigma_noise(2.0)
            .build()?,
    );
    let table = erm_rate_experiment(&problem, &[200, 800, 3200], 100, &mut SeededRng::new(3, 0), 1)?;
    println!("sigma^2 = {} (d * sigma_noise^2 = {})", table.sigma_sq, d as f64 * 4.0);
    table.write_csv(std::io::stdout())?;
    Ok(table)
}

#[allow(dead_code)]
fn main() -> streaming_svrg::Result<()> {
    run()?;
    Ok(())
}

//! Closed-form and Monte Carlo problem constants: `σ²`, the kurtosis `κ̄`
//! (9 for a one-dimensional Gaussian design with Gaussian noise), and the
//! condition number.
//!
//!     cargo run --release --example problem_constants

use streaming_svrg::linalg::ParameterVector;
use streaming_svrg::objectives::{
    kurtosis_monte_carlo, sigma_squared_monte_carlo, Design, LinearRegressionProblem, StochasticObjective,
};
use streaming_svrg::rng::SeededRng;

pub fn run() -> streaming_svrg::Result<f64> {
    let gauss = LinearRegressionProblem::builder(Design::gaussian(1)?, ParameterVector::from_slice(&[1.0])?).build()?;
    let k = kurtosis_monte_carlo(&gauss, 200_000, &mut SeededRng::new(9, 0));
    println!("d = 1 Gaussian kurtosis: {:.3} +- {:.3} (exact 9)", k.value(), k.std_err());

    let ridge = LinearRegressionProblem::builder(Design::truncated_gaussian(3, 3.0)?, ParameterVector::from_slice(&[1.0, 2.0, 3.0])?)
        .lambda(0.2)
        .build()?;
    let exact = ridge.sigma_squared()?;
    let mc = sigma_squared_monte_carlo(&ridge, 200_000, &mut SeededRng::new(10, 0))?;
    println!(
        "ridge sigma^2: closed form {:.5}, Monte Carlo {:.5} +- {:.5}",
        exact.value(),
        mc.value(),
        mc.std_err()
    );
    let c = ridge.constants();
    println!("ridge mu = {:.4}, L = {:.4}, kappa = {:.2}", c.mu, c.l, c.kappa);
    Ok(k.value())
}

#[allow(dead_code)]
fn main() -> streaming_svrg::Result<()> {
    run()?;
    Ok(())
}

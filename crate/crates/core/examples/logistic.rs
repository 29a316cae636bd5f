//! Regularized logistic regression: problem constants, an exact ERM fit by
//! damped Newton, and a streaming run from the origin.
//!
//!     cargo run --release --example logistic

use streaming_svrg::baselines::erm_logistic;
use streaming_svrg::linalg::ParameterVector;
use streaming_svrg::objectives::{Design, LogisticRegressionProblem, LossSample, StochasticObjective};
use streaming_svrg::rng::SeededRng;
use streaming_svrg::svrg::{self, SvrgSchedule};

pub fn run() -> streaming_svrg::Result<(f64, f64)> {
    let design = Design::finite(
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![-0.5, 1.5]],
        vec![0.1, 0.2, 0.3, 0.4],
    )?;
    let problem = LogisticRegressionProblem::builder(design, ParameterVector::from_slice(&[1.5, -1.0])?)
        .lambda(0.05)
        .build()?;
    let c = problem.constants();
    println!(
        "mu = {:.4}, L = {:.4}, kappa = {:.2}, alpha = {:.3}, sigma^2 = {:.4}, M = {:.3}",
        c.mu,
        c.l,
        c.kappa,
        c.alpha,
        c.sigma_sq.value(),
        c.self_concordance_m.value()
    );
    println!("w* = {:?}", problem.minimizer().as_slice());

    let mut rng = SeededRng::new(7, 0);
    let data: Vec<LossSample> = (0..5000).map(|_| problem.sample(&mut rng)).collect();
    let erm = erm_logistic(&data, problem.lambda(), &ParameterVector::zeros(2))?;
    let erm_excess = problem.excess_risk(&erm.w_hat);
    println!("ERM on 5000 samples: excess {erm_excess:.3e}, gradient residual {:.1e}", erm.solver_residual);

    let schedule = SvrgSchedule::practical(c.kappa, 0, 3.0)?.with_budget(5000);
    let trace = svrg::run(&problem, &schedule, &ParameterVector::zeros(2), &mut rng)?;
    let streaming_excess = trace.final_excess().unwrap_or(trace.initial_excess);
    println!(
        "streaming, budget 5000: {} stages, {} samples, excess {streaming_excess:.3e}",
        trace.records.len(),
        trace.samples_used()
    );
    Ok((erm_excess, streaming_excess))
}

#[allow(dead_code)]
fn main() -> streaming_svrg::Result<()> {
    run()?;
    Ok(())
}

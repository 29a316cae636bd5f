//! Monte Carlo and exact oracles: the smoothness and variance lemmas, the
//! self-concordance lower bound, `λ_max(∇²P(w*)) ≤ 2L`, finite differences
//! and exact unbiasedness of the inner step.
//!
//!     cargo run --release --example lemma_checks

use streaming_svrg::analysis::{
    check_hessian_bound, check_lemma1, check_lemma2, check_self_concordance_bound, random_probes,
    sample_gradient_check, unbiasedness_error,
};
use streaming_svrg::linalg::ParameterVector;
use streaming_svrg::objectives::{Design, LinearRegressionProblem, LogisticRegressionProblem, Noise, Problem};
use streaming_svrg::rng::SeededRng;

pub fn run() -> streaming_svrg::Result<bool> {
    let ridge = LinearRegressionProblem::builder(Design::truncated_gaussian(2, 3.0)?, ParameterVector::from_slice(&[1.0, -1.0])?)
        .lambda(0.1)
        .build()?;
    let finite = Design::finite(vec![vec![1.0, 0.0], vec![0.5, 1.0], vec![-1.0, 1.0]], vec![0.5, 0.3, 0.2])?;
    let logistic = LogisticRegressionProblem::builder(finite, ParameterVector::from_slice(&[2.0, -1.0])?)
        .lambda(0.1)
        .build()?;
    let mut rng = SeededRng::new(6, 0);
    let mut ok = true;
    for (name, p) in [("ridge", Problem::LeastSquares(ridge)), ("logistic", Problem::Logistic(logistic))] {
        let probes = random_probes(&p, 20, 2.0, &mut rng);
        let reports = [
            check_lemma1(&p, &probes, 2000, &mut rng),
            check_lemma2(&p, &probes, 2000, &mut rng)?,
            check_self_concordance_bound(&p, &probes)?,
            check_hessian_bound(&p),
        ];
        for r in &reports {
            println!("{name:>8} {:<16} {} violations of {}", r.name, r.violations, r.probes);
            ok &= r.passed();
        }
        let fd = sample_gradient_check(&p, 20, 2.0, &mut rng);
        println!("{name:>8} gradient fd gap  {fd:.2e}");
        ok &= fd <= 1e-5;
    }

    // two design points times a symmetric sign: four outcomes
    let rad = LinearRegressionProblem::builder(
        Design::finite(vec![vec![1.0, 0.5], vec![-0.5, 2.0]], vec![0.3, 0.7])?,
        ParameterVector::from_slice(&[0.7, -1.2])?,
    )
    .noise(Noise::Rademacher)
    .build()?;
    let w = ParameterVector::from_slice(&[0.0, 1.0])?;
    let w_tilde = ParameterVector::from_slice(&[2.0, -2.0])?;
    for k in 1..=3 {
        let err = unbiasedness_error(&rad, &w, &w_tilde, k)?;
        println!("unbiasedness k = {k}: {err:.2e}");
        ok &= err <= 1e-12;
    }
    Ok(ok)
}

#[allow(dead_code)]
fn main() -> streaming_svrg::Result<()> {
    let ok = run()?;
    println!("{}", if ok { "all checks pass" } else { "some checks FAILED" });
    Ok(())
}

use crate::error::{Error, Result};
use crate::linalg::ParameterVector;
use crate::objectives::{LossSample, StochasticObjective};

/// Largest coordinate error in the two unbiasedness identities of the inner
/// step, by exhaustive enumeration over a finite outcome set:
///
/// - for every batch of `k` outcomes, `E_ψ[∇ψ(w) − ∇ψ(w̃)] + ĝ = ∇P(w) + ĝ − ∇P(w̃)`;
/// - averaged over all batches, the direction equals `∇P(w)`.
///
/// `∇P` comes from the problem's own closed form.
pub fn unbiasedness_error<O: StochasticObjective + ?Sized>(
    problem: &O,
    w: &ParameterVector,
    w_tilde: &ParameterVector,
    k: usize,
) -> Result<f64> {
    let outcomes = problem
        .outcomes()
        .ok_or_else(|| Error::invalid("unbiasedness enumeration needs a finite outcome set"))?;
    if k == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    let d = problem.dim();
    let grad = |s: &LossSample, at: &ParameterVector| problem.gradient(s, at.as_slice());
    let grad_p_w = problem.population_gradient(w).to_vec();
    let grad_p_tilde = problem.population_gradient(w_tilde).to_vec();

    // E_ψ[∇ψ(w) − ∇ψ(w̃)]
    let mut inner = vec![0.0; d];
    for (p, s) in &outcomes {
        let (a, b) = (grad(s, w), grad(s, w_tilde));
        for i in 0..d {
            inner[i] += p * (a[i] - b[i]);
        }
    }

    let n = outcomes.len();
    let total = n.checked_pow(k as u32).filter(|t| *t <= 1 << 20).ok_or_else(|| Error::invalid("batch enumeration too large"))?;
    let per_outcome: Vec<Vec<f64>> = outcomes.iter().map(|(_, s)| grad(s, w_tilde)).collect();
    let mut worst = 0.0f64;
    let mut averaged = vec![0.0; d];
    let mut idx = vec![0usize; k];
    for _ in 0..total {
        let mut prob = 1.0;
        let mut g_hat = vec![0.0; d];
        for &j in &idx {
            prob *= outcomes[j].0;
            for i in 0..d {
                g_hat[i] += per_outcome[j][i] / k as f64;
            }
        }
        for i in 0..d {
            let dir = inner[i] + g_hat[i];
            let expected = grad_p_w[i] + g_hat[i] - grad_p_tilde[i];
            worst = worst.max((dir - expected).abs());
            averaged[i] += prob * dir;
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < n {
                break;
            }
            *slot = 0;
        }
    }
    for i in 0..d {
        worst = worst.max((averaged[i] - grad_p_w[i]).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{Design, LinearRegressionProblem, Noise};

    #[test]
    fn four_outcome_regression_is_exactly_unbiased() {
        // two design points × Rademacher noise = four outcomes
        let design = Design::finite(vec![vec![1.0, 0.5], vec![-0.5, 2.0]], vec![0.3, 0.7]).unwrap();
        let p = LinearRegressionProblem::builder(design, ParameterVector::from_slice(&[1.0, -1.0]).unwrap())
            .noise(Noise::Rademacher)
            .sigma_noise(0.5)
            .build()
            .unwrap();
        assert_eq!(p.outcomes().unwrap().len(), 4);
        let w = ParameterVector::from_slice(&[0.3, 2.0]).unwrap();
        let w_tilde = ParameterVector::from_slice(&[-1.0, 0.7]).unwrap();
        for k in 1..=3 {
            assert!(unbiasedness_error(&p, &w, &w_tilde, k).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn continuous_designs_are_rejected() {
        let design = Design::truncated_gaussian(2, 3.0).unwrap();
        let p = LinearRegressionProblem::builder(design, ParameterVector::zeros(2)).build().unwrap();
        assert!(unbiasedness_error(&p, &ParameterVector::zeros(2), &ParameterVector::zeros(2), 1).is_err());
    }
}

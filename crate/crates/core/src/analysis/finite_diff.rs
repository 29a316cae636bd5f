use crate::linalg::ParameterVector;
use crate::objectives::{LossSample, StochasticObjective};
use crate::rng::SeededRng;

/// Largest relative gap between `grad_f` and central differences of `f`
/// over `points`, with step `h = 1e-5·(1 + |x_i|)` per coordinate. The gap
/// at a point is `‖g_fd − g‖_∞ / max(1, ‖g‖_∞)`.
pub fn finite_diff_check<F, G>(f: F, grad_f: G, points: &[Vec<f64>]) -> f64
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let mut worst = 0.0f64;
    for x in points {
        let g = grad_f(x);
        let mut xp = x.clone();
        let mut gap = 0.0f64;
        for i in 0..x.len() {
            let h = 1e-5 * (1.0 + x[i].abs());
            xp[i] = x[i] + h;
            let fp = f(&xp);
            xp[i] = x[i] - h;
            let fm = f(&xp);
            xp[i] = x[i];
            // divide by the step actually represented
            let fd = (fp - fm) / ((x[i] + h) - (x[i] - h));
            gap = gap.max((fd - g[i]).abs());
        }
        let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(gap / scale);
    }
    worst
}

/// Finite-difference check of the per-sample gradient at `count` random
/// (sample, w) pairs with `w` drawn around the minimizer.
pub fn sample_gradient_check<O: StochasticObjective + ?Sized>(
    problem: &O,
    count: usize,
    radius: f64,
    rng: &mut SeededRng,
) -> f64 {
    let probes = super::lemmas::random_probes(problem, count, radius, rng);
    let mut worst = 0.0f64;
    for w in &probes {
        let s: LossSample = problem.sample(rng);
        let err = finite_diff_check(|x| problem.loss(&s, x), |x| problem.gradient(&s, x), &[w.to_vec()]);
        worst = worst.max(err);
    }
    worst
}

/// Finite-difference check of the population gradient.
pub fn population_gradient_check<O: StochasticObjective + ?Sized>(problem: &O, points: &[ParameterVector]) -> f64 {
    let pts: Vec<Vec<f64>> = points.iter().map(|p| p.to_vec()).collect();
    finite_diff_check(
        |x| problem.excess_risk(&ParameterVector::from_slice(x).expect("finite")),
        |x| problem.population_gradient(&ParameterVector::from_slice(x).expect("finite")).to_vec(),
        &pts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{Design, LogisticRegressionProblem};
    use crate::rng::Draws;

    fn random_points(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = SeededRng::new(seed, 0);
        (0..n).map(|_| (0..d).map(|_| 3.0 * rng.standard_normal()).collect()).collect()
    }

    #[test]
    fn linear_is_exact() {
        let a = [1.5, -2.0, 0.25];
        let f = |x: &[f64]| 3.0 + x.iter().zip(&a).map(|(u, v)| u * v).sum::<f64>();
        let g = |_: &[f64]| a.to_vec();
        assert!(finite_diff_check(f, g, &random_points(50, 3, 1)) <= 1e-10);
    }

    #[test]
    fn quadratic_is_exact_up_to_rounding() {
        let f = |x: &[f64]| x[0] * x[0] + 3.0 * x[0] * x[1] - 0.5 * x[1] * x[1];
        let g = |x: &[f64]| vec![2.0 * x[0] + 3.0 * x[1], 3.0 * x[0] - x[1]];
        assert!(finite_diff_check(f, g, &random_points(50, 2, 2)) <= 1e-9);
    }

    #[test]
    fn wrong_gradient_is_caught() {
        let f = |x: &[f64]| x[0] * x[0];
        let g = |x: &[f64]| vec![x[0]];
        assert!(finite_diff_check(f, g, &[vec![1.0]]) > 0.4);
    }

    #[test]
    fn logistic_sample_loss() {
        let design = Design::truncated_gaussian(3, 3.0).unwrap();
        let p = LogisticRegressionProblem::builder(design, ParameterVector::from_slice(&[1.0, 0.0, -1.0]).unwrap())
            .anchor_points(2000)
            .build()
            .unwrap();
        let err = sample_gradient_check(&p, 100, 3.0, &mut SeededRng::new(3, 0));
        assert!(err <= 1e-5, "{err}");
    }
}

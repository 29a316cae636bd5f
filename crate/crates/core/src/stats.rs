//! Running moments, bootstrap intervals and a two-sample KS statistic.

use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;

/// Welford accumulator for mean and variance.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two observations.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_err(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for RunningStats {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = RunningStats::new();
        for x in iter {
            s.push(x);
        }
        s
    }
}

/// Mean with a two-sided confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub std_err: f64,
    pub lo: f64,
    pub hi: f64,
}

impl MeanCi {
    /// `None` interval bounds when fewer than two values are available.
    pub fn available(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Percentile bootstrap interval for the mean at level `1 - alpha`.
pub fn bootstrap_mean_ci(xs: &[f64], resamples: usize, alpha: f64, rng: &mut SeededRng) -> MeanCi {
    let stats: RunningStats = xs.iter().copied().collect();
    if xs.len() < 2 {
        return MeanCi {
            mean: stats.mean(),
            std_err: f64::NAN,
            lo: f64::NAN,
            hi: f64::NAN,
        };
    }
    let mut means: Vec<f64> = (0..resamples).map(|_| resample_mean(xs, rng)).collect();
    means.sort_by(f64::total_cmp);
    MeanCi {
        mean: stats.mean(),
        std_err: stats.std_err(),
        lo: quantile_sorted(&means, alpha / 2.0),
        hi: quantile_sorted(&means, 1.0 - alpha / 2.0),
    }
}

pub fn resample_mean(xs: &[f64], rng: &mut SeededRng) -> f64 {
    let n = xs.len() as u64;
    let mut s = 0.0;
    for _ in 0..n {
        s += xs[(rng.uniform_index1(n) - 1) as usize];
    }
    s / n as f64
}

/// Fraction of joint bootstrap resamples (each group resampled on its own)
/// whose group means satisfy `pred`.
pub fn bootstrap_fraction<F>(groups: &[&[f64]], resamples: usize, rng: &mut SeededRng, pred: F) -> f64
where
    F: Fn(&[f64]) -> bool,
{
    if resamples == 0 || groups.iter().any(|g| g.is_empty()) {
        return f64::NAN;
    }
    let mut means = vec![0.0; groups.len()];
    let mut hits = 0usize;
    for _ in 0..resamples {
        for (m, g) in means.iter_mut().zip(groups) {
            *m = resample_mean(g, rng);
        }
        if pred(&means) {
            hits += 1;
        }
    }
    hits as f64 / resamples as f64
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a − F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at level `alpha`.
pub fn ks_critical(n_a: usize, n_b: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    let (na, nb) = (n_a as f64, n_b as f64);
    c * ((na + nb) / (na * nb)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, -2.0, 8.5, 3.25];
        let s: RunningStats = xs.iter().copied().collect();
        let m = mean(&xs);
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / 4.0;
        assert!((s.mean() - m).abs() < 1e-14);
        assert!((s.variance() - v).abs() < 1e-12);
    }

    #[test]
    fn quantiles() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.5), 2.0);
        assert_eq!(quantile_sorted(&xs, 0.125), 0.5);
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_statistic(&a, &a), 0.0);
        assert_eq!(ks_statistic(&a, &[10.0, 11.0]), 1.0);
    }

    #[test]
    fn bootstrap_single_value_has_no_interval() {
        let mut rng = SeededRng::new(1, 0);
        let ci = bootstrap_mean_ci(&[3.0], 100, 0.05, &mut rng);
        assert_eq!(ci.mean, 3.0);
        assert!(!ci.available());
    }

    #[test]
    fn bootstrap_brackets_mean() {
        let mut rng = SeededRng::new(2, 0);
        let xs: Vec<f64> = (0..200).map(|i| (i % 7) as f64).collect();
        let ci = bootstrap_mean_ci(&xs, 500, 0.05, &mut rng);
        assert!(ci.lo < ci.mean && ci.mean < ci.hi);
    }
}

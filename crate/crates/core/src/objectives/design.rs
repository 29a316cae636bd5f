//! Covariate distributions.
//!
//! Spherically symmetric designs expose closed-form radial moments
//! `E‖X‖^{2k}`; finite designs expose their support for exact enumeration.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::linalg::PsdMatrix;
use crate::rng::{Draws, SampleRng};

/// Smallest acceptance probability allowed for a truncated Gaussian.
const MIN_ACCEPTANCE: f64 = 1e-3;

#[derive(Debug, Clone)]
enum Kind {
    /// N(0, I) conditioned on `‖X‖ ≤ radius`.
    TruncatedGaussian { radius: f64, acceptance: f64 },
    /// N(0, I); unbounded, for moment checks only.
    Gaussian,
    /// Uniform on the sphere `‖X‖ = radius`.
    Sphere { radius: f64 },
    Finite {
        points: Vec<Vec<f64>>,
        probs: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct Design {
    d: usize,
    kind: Kind,
}

impl Design {
    /// Gaussian truncated at the default radius `4√d`.
    pub fn truncated_gaussian_default(d: usize) -> Result<Self> {
        Self::truncated_gaussian(d, 4.0 * (d as f64).sqrt())
    }

    pub fn truncated_gaussian(d: usize, radius: f64) -> Result<Self> {
        check_d(d)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("design radius must be positive, got {radius}")));
        }
        let acceptance = chi_sq_cdf(d, radius * radius);
        if acceptance < MIN_ACCEPTANCE {
            return Err(Error::invalid(format!(
                "truncation radius {radius} keeps only {acceptance:e} of the Gaussian mass in d={d}"
            )));
        }
        Ok(Design {
            d,
            kind: Kind::TruncatedGaussian { radius, acceptance },
        })
    }

    pub fn gaussian(d: usize) -> Result<Self> {
        check_d(d)?;
        Ok(Design { d, kind: Kind::Gaussian })
    }

    pub fn sphere(d: usize, radius: f64) -> Result<Self> {
        check_d(d)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("design radius must be positive, got {radius}")));
        }
        Ok(Design {
            d,
            kind: Kind::Sphere { radius },
        })
    }

    /// Finite support; probabilities are normalized.
    pub fn finite(points: Vec<Vec<f64>>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(Error::invalid("finite design needs one probability per point"));
        }
        let d = points[0].len();
        check_d(d)?;
        if points.iter().any(|p| p.len() != d) {
            return Err(Error::invalid("finite design points differ in dimension"));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("design point"));
        }
        if probs.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::invalid("design probabilities must be nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("design probabilities sum to zero"));
        }
        let probs: Vec<f64> = probs.iter().map(|p| p / total).collect();
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Ok(Design {
            d,
            kind: Kind::Finite {
                points,
                probs,
                cumulative,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::TruncatedGaussian { .. } => "truncated_gaussian",
            Kind::Gaussian => "gaussian",
            Kind::Sphere { .. } => "sphere",
            Kind::Finite { .. } => "finite",
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self.kind {
            Kind::TruncatedGaussian { radius, .. } | Kind::Sphere { radius } => Some(radius),
            _ => None,
        }
    }

    pub fn sample_into(&self, rng: &mut SampleRng, x: &mut [f64]) {
        match &self.kind {
            Kind::TruncatedGaussian { radius, .. } => {
                let r2 = radius * radius;
                loop {
                    rng.fill_standard_normal(x);
                    if x.iter().map(|v| v * v).sum::<f64>() <= r2 {
                        break;
                    }
                }
            }
            Kind::Gaussian => rng.fill_standard_normal(x),
            Kind::Sphere { radius } => loop {
                rng.fill_standard_normal(x);
                let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if n > 0.0 {
                    x.iter_mut().for_each(|v| *v *= radius / n);
                    break;
                }
            },
            Kind::Finite { points, cumulative, .. } => {
                x.copy_from_slice(&points[rng.categorical(cumulative)]);
            }
        }
    }

    /// `sup ‖X‖²` over the support (infinite for the untruncated Gaussian).
    pub fn sup_norm_sq(&self) -> f64 {
        match &self.kind {
            Kind::TruncatedGaussian { radius, .. } | Kind::Sphere { radius } => radius * radius,
            Kind::Gaussian => f64::INFINITY,
            Kind::Finite { points, .. } => points
                .iter()
                .map(|p| p.iter().map(|v| v * v).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    /// `E‖X‖^{2k}` for spherically symmetric designs.
    pub fn radial_moment(&self, k: u32) -> Option<f64> {
        let d = self.d as f64;
        // d(d+2)…(d+2k−2): raw moment of χ²_d
        let chi_moment = (0..k).map(|i| d + 2.0 * i as f64).product::<f64>();
        match self.kind {
            Kind::Gaussian => Some(chi_moment),
            Kind::TruncatedGaussian { radius, acceptance } => {
                // E[χ²_d^k ; χ²_d ≤ t] = d(d+2)…(d+2k−2) · P(χ²_{d+2k} ≤ t)
                let t = radius * radius;
                Some(chi_moment * chi_sq_cdf(self.d + 2 * k as usize, t) / acceptance)
            }
            Kind::Sphere { radius } => Some(radius.powi(2 * k as i32)),
            Kind::Finite { .. } => None,
        }
    }

    pub fn is_spherical(&self) -> bool {
        !matches!(self.kind, Kind::Finite { .. })
    }

    /// Weighted support points of a finite design.
    pub fn support(&self) -> Option<Vec<(f64, &[f64])>> {
        match &self.kind {
            Kind::Finite { points, probs, .. } => {
                Some(probs.iter().copied().zip(points.iter().map(|p| p.as_slice())).collect())
            }
            _ => None,
        }
    }

    /// Second moment `Σ = E[XXᵀ]`, exact for every design.
    pub fn second_moment(&self) -> PsdMatrix {
        match self.support() {
            Some(support) => {
                let mut m = PsdMatrix::zeros(self.d);
                for (p, x) in support {
                    m.add_outer(p, x);
                }
                m
            }
            None => {
                let s = self.radial_moment(1).expect("spherical design") / self.d as f64;
                PsdMatrix::scaled_identity(self.d, s)
            }
        }
    }

    /// `E[x₁⁴]` for spherical designs: `3 E‖X‖⁴ / (d(d+2))`.
    pub(crate) fn first_coordinate_fourth_moment(&self) -> Option<f64> {
        let d = self.d as f64;
        self.radial_moment(2).map(|m4| 3.0 * m4 / (d * (d + 2.0)))
    }
}

fn check_d(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::invalid("dimension must be at least 1"));
    }
    Ok(())
}

fn chi_sq_cdf(dof: usize, x: f64) -> f64 {
    ChiSquared::new(dof as f64).expect("positive degrees of freedom").cdf(x)
}

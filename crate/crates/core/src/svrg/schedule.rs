//! Stage plans: step parameter, inner-epoch cap and batch-size growth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Batch-size sequence `{k_s}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BatchGrowth {
    /// `k_s = ⌈b · k_{s−1}⌉`
    Geometric { k0: u64, b: f64 },
    /// `k_s = k0` for `s < s_switch`, geometric afterwards.
    ConstantThenGeometric { k0: u64, b: f64, s_switch: usize },
    /// `k_s = 4^s · s! · k0`, with `η_s = η/2^s` and `m_s = m·4^s`.
    Factorial { k0: u64 },
}

impl BatchGrowth {
    pub fn k0(&self) -> u64 {
        match *self {
            BatchGrowth::Geometric { k0, .. }
            | BatchGrowth::ConstantThenGeometric { k0, .. }
            | BatchGrowth::Factorial { k0 } => k0,
        }
    }
}

/// Constants recorded by the theory constructors for the rate bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub p: f64,
    pub b: f64,
    pub kappa: f64,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kurtosis: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_concordance_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
}

/// Parameters of one stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageParams {
    pub k: u64,
    pub m: u64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvrgSchedule {
    /// Step parameter; the inner step is `η/L`.
    pub eta: f64,
    /// Smoothness `L` used in the step. `None` takes it from the problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<f64>,
    /// Inner-epoch cap `m`.
    pub m: u64,
    pub batch: BatchGrowth,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_stages: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_budget: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundParams>,
}

/// Multipliers for [`SvrgSchedule::practical_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PracticalOptions {
    pub eta: f64,
    pub m_mult: f64,
    pub k0_mult: f64,
}

impl Default for PracticalOptions {
    fn default() -> Self {
        PracticalOptions {
            eta: 0.1,
            m_mult: 5.0,
            k0_mult: 5.0,
        }
    }
}

/// `⌈x⌉`, snapping values within floating-point noise of an integer.
fn ceil_to_u64(x: f64, what: &str) -> Result<u64> {
    if !x.is_finite() || x >= u64::MAX as f64 {
        return Err(Error::ScheduleInfeasible(format!("{what} = {x:e} overflows 64 bits")));
    }
    let r = x.round();
    let v = if (x - r).abs() <= 1e-9 * r.abs().max(1.0) { r } else { x.ceil() };
    Ok(v.max(1.0) as u64)
}

fn check_theory_inputs(p: f64, b: f64, kappa: f64) -> Result<()> {
    if !(p >= 2.0) {
        return Err(Error::invalid(format!("p must be at least 2, got {p}")));
    }
    if !(b >= 3.0) {
        return Err(Error::invalid(format!("b must be at least 3, got {b}")));
    }
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::invalid(format!("kappa must be finite and at least 1, got {kappa}")));
    }
    Ok(())
}

impl SvrgSchedule {
    /// α-bounded Hessian setting:
    /// `η = 1/(20b^{p+1})`, `m = 20b^{p+1}κ/η`, `k0 = 20ακb^{p+1}`, `k_s = b k_{s−1}`.
    pub fn corollary1(p: f64, b: f64, kappa: f64, alpha: f64) -> Result<Self> {
        check_theory_inputs(p, b, kappa)?;
        if !(alpha >= 1.0 && alpha <= kappa) {
            return Err(Error::invalid(format!("alpha must lie in [1, kappa], got {alpha}")));
        }
        let bp1 = b.powf(p + 1.0);
        let eta = 1.0 / (20.0 * bp1);
        let m = ceil_to_u64(400.0 * bp1 * bp1 * kappa, "m")?;
        let k0 = ceil_to_u64(20.0 * alpha * kappa * bp1, "k0")?;
        Ok(SvrgSchedule {
            eta,
            smoothness: None,
            m,
            batch: BatchGrowth::Geometric { k0, b },
            max_stages: None,
            sample_budget: None,
            bound: Some(BoundParams {
                p,
                b,
                kappa,
                alpha,
                kurtosis: None,
                self_concordance_m: None,
                sigma: None,
            }),
        })
    }

    /// Self-concordant setting: as [`corollary1`](Self::corollary1) but with
    /// `k0 = max{400κ²b^{2p+3}, 10κ̄}`.
    pub fn corollary2(p: f64, b: f64, kappa: f64, kurtosis: f64, m_sc: f64, sigma: f64) -> Result<Self> {
        check_theory_inputs(p, b, kappa)?;
        if !(kurtosis >= 1.0) {
            return Err(Error::invalid(format!("kurtosis must be at least 1, got {kurtosis}")));
        }
        let bp1 = b.powf(p + 1.0);
        let eta = 1.0 / (20.0 * bp1);
        let m = ceil_to_u64(400.0 * bp1 * bp1 * kappa, "m")?;
        let k_curv = ceil_to_u64(Self::corollary2_curvature_k0(p, b, kappa), "k0")?;
        let k_kurt = ceil_to_u64(10.0 * kurtosis, "k0")?;
        Ok(SvrgSchedule {
            eta,
            smoothness: None,
            m,
            batch: BatchGrowth::Geometric { k0: k_curv.max(k_kurt), b },
            max_stages: None,
            sample_budget: None,
            bound: Some(BoundParams {
                p,
                b,
                kappa,
                alpha: 1.0,
                kurtosis: Some(kurtosis),
                self_concordance_m: Some(m_sc),
                sigma: Some(sigma),
            }),
        })
    }

    /// `400κ²b^{2p+3}`
    pub fn corollary2_curvature_k0(p: f64, b: f64, kappa: f64) -> f64 {
        400.0 * kappa * kappa * b.powf(2.0 * p + 3.0)
    }

    /// Desk-scale preset: `m = ⌈5κ/η⌉`, `k0 = ⌈5κ⌉`, `η = 0.1`.
    pub fn practical(kappa: f64, target_stages: usize, b: f64) -> Result<Self> {
        Self::practical_with(kappa, target_stages, b, PracticalOptions::default())
    }

    pub fn practical_with(kappa: f64, target_stages: usize, b: f64, opts: PracticalOptions) -> Result<Self> {
        if !(opts.eta > 0.0 && opts.eta < 0.25) {
            return Err(Error::invalid(format!("eta must lie in (0, 1/4), got {}", opts.eta)));
        }
        if !(opts.m_mult >= 1.0 && opts.k0_mult >= 1.0) {
            return Err(Error::invalid("multipliers must be at least 1"));
        }
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!("kappa must be finite and at least 1, got {kappa}")));
        }
        if !(b >= 1.0) {
            return Err(Error::invalid(format!("growth factor must be at least 1, got {b}")));
        }
        Ok(SvrgSchedule {
            eta: opts.eta,
            smoothness: None,
            m: ceil_to_u64(opts.m_mult * kappa / opts.eta, "m")?,
            batch: BatchGrowth::Geometric {
                k0: ceil_to_u64(opts.k0_mult * kappa, "k0")?,
                b,
            },
            max_stages: (target_stages > 0).then_some(target_stages),
            sample_budget: None,
            bound: None,
        })
    }

    pub fn with_smoothness(mut self, l: f64) -> Self {
        self.smoothness = Some(l);
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.sample_budget = Some(budget);
        self
    }

    pub fn with_max_stages(mut self, stages: usize) -> Self {
        self.max_stages = Some(stages);
        self
    }

    /// Replaces the batch growth, keeping `η` and `m`.
    pub fn with_batch(mut self, batch: BatchGrowth) -> Self {
        self.batch = batch;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 0.25) {
            return Err(Error::invalid(format!("eta must lie in (0, 1/4), got {}", self.eta)));
        }
        if let Some(l) = self.smoothness {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::invalid(format!("smoothness must be positive, got {l}")));
            }
        }
        if self.m == 0 {
            return Err(Error::invalid("m must be at least 1"));
        }
        if self.batch.k0() == 0 {
            return Err(Error::invalid("k0 must be at least 1"));
        }
        match self.batch {
            BatchGrowth::Geometric { b, .. } | BatchGrowth::ConstantThenGeometric { b, .. } if !(b >= 1.0) => {
                Err(Error::invalid(format!("growth factor must be at least 1, got {b}")))
            }
            _ => Ok(()),
        }
    }

    /// `(k_s, m_s, η_s)` for stage `s`.
    pub fn stage(&self, s: usize) -> Result<StageParams> {
        match self.batch {
            BatchGrowth::Geometric { k0, b } => Ok(StageParams {
                k: geometric(k0, b, s)?,
                m: self.m,
                eta: self.eta,
            }),
            BatchGrowth::ConstantThenGeometric { k0, b, s_switch } => Ok(StageParams {
                k: if s < s_switch { k0 } else { geometric(k0, b, s - s_switch + 1)? },
                m: self.m,
                eta: self.eta,
            }),
            BatchGrowth::Factorial { k0 } => {
                let overflow = || Error::ScheduleInfeasible(format!("factorial batch at stage {s} overflows 64 bits"));
                let four_s = 4u64.checked_pow(s as u32).ok_or_else(overflow)?;
                let mut k = four_s.checked_mul(k0).ok_or_else(overflow)?;
                for i in 2..=s as u64 {
                    k = k.checked_mul(i).ok_or_else(overflow)?;
                }
                Ok(StageParams {
                    k,
                    m: self.m.checked_mul(four_s).ok_or_else(overflow)?,
                    eta: self.eta / 2f64.powi(s as i32),
                })
            }
        }
    }

    /// `N_s = Σ_{τ<s} (k_τ + m_τ)`, the worst-case sample count before stage `s`.
    pub fn budgeted_samples(&self, s: usize) -> Result<u64> {
        let mut total: u64 = 0;
        for tau in 0..s {
            let p = self.stage(tau)?;
            total = total
                .checked_add(p.k)
                .and_then(|t| t.checked_add(p.m))
                .ok_or_else(|| Error::ScheduleInfeasible(format!("N_{s} overflows 64 bits")))?;
        }
        Ok(total)
    }

    /// Worst-case samples for the planned stages, if `max_stages` is set.
    pub fn budget_bound(&self) -> Option<Result<u64>> {
        self.max_stages.map(|s| self.budgeted_samples(s))
    }

    /// Right-hand side of the rate bound at `N_s` samples for the recorded
    /// theory constants, given `σ` and the initial excess risk.
    pub fn rate_bound(&self, n_s: f64, sigma: f64, initial_excess: f64) -> Option<f64> {
        let bp = self.bound?;
        let (p, b, kappa, alpha) = (bp.p, bp.b, bp.kappa, bp.alpha);
        match bp.self_concordance_m {
            None => {
                let stat = (1.0 + 4.0 / b) * (alpha.sqrt() * sigma) / n_s.sqrt();
                let init = (initial_excess / (n_s / (alpha * kappa)).powf(p)).sqrt();
                Some((stat + init).powi(2))
            }
            Some(m_sc) => {
                let k0 = self.batch.k0() as f64;
                let stat = (1.0 + 5.0 / b) * sigma / n_s.sqrt();
                let ratio = n_s / (2.0 * (m_sc * sigma + 1.0).powi(2) * k0);
                let curv = (2.0 + 5.0 / b) * (kappa.sqrt() * sigma) / n_s.sqrt() * 1f64.min(ratio.powf(-p / 2.0));
                let init = (initial_excess / (n_s / (2.0 * k0)).powf(p + 1.0)).sqrt();
                Some((stat + curv + init).powi(2))
            }
        }
    }
}

fn geometric(k0: u64, b: f64, s: usize) -> Result<u64> {
    let overflow = || Error::ScheduleInfeasible(format!("batch size at stage {s} overflows 64 bits"));
    let mut k = k0;
    if b.fract() == 0.0 && b < u64::MAX as f64 {
        let bi = b as u64;
        for _ in 0..s {
            k = k.checked_mul(bi).ok_or_else(overflow)?;
        }
    } else {
        for _ in 0..s {
            let next = (b * k as f64).ceil();
            if next >= u64::MAX as f64 {
                return Err(overflow());
            }
            k = next as u64;
        }
    }
    Ok(k)
}

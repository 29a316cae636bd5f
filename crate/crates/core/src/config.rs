//! Experiment configuration, read from TOML. Unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//! threads = 1
//! trials = 200
//! n_grid = [1000, 2000, 4000]
//! out = "trace.csv"
//!
//! [problem]
//! family = "least_squares"
//! d = 5
//!
//! [schedule]
//! preset = "practical"   # practical | corollary1 | corollary2 | explicit
//! b = 3.0
//! budget = 20000
//!
//! [baselines]
//! erm = true
//! sgd = { step = { kind = "polynomial_decay", gamma0 = 0.05, c = 0.6 }, average = true }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{SgdConfig, SgdStep};
use crate::error::{Error, Result};
use crate::linalg::ParameterVector;
use crate::objectives::{ProblemDescriptor, StochasticObjective};
use crate::svrg::{PracticalOptions, SvrgSchedule};

fn default_threads() -> usize {
    1
}

fn default_trials() -> usize {
    30
}

fn default_b() -> f64 {
    3.0
}

fn default_eta() -> f64 {
    0.1
}

fn default_mult() -> f64 {
    5.0
}

fn default_p() -> f64 {
    2.0
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    Practical {
        #[serde(default = "default_b")]
        b: f64,
        #[serde(default = "default_eta")]
        eta: f64,
        #[serde(default = "default_mult")]
        m_mult: f64,
        #[serde(default = "default_mult")]
        k0_mult: f64,
        /// Overrides the problem's condition number.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stages: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        budget: Option<u64>,
    },
    Corollary1 {
        #[serde(default = "default_p")]
        p: f64,
        #[serde(default = "default_b")]
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stages: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        budget: Option<u64>,
    },
    Corollary2 {
        #[serde(default = "default_p")]
        p: f64,
        #[serde(default = "default_b")]
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        stages: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        budget: Option<u64>,
    },
    Explicit {
        plan: SvrgSchedule,
    },
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig::Practical {
            b: default_b(),
            eta: default_eta(),
            m_mult: default_mult(),
            k0_mult: default_mult(),
            kappa: None,
            stages: None,
            budget: None,
        }
    }
}

fn schedule_err(e: Error) -> Error {
    match e {
        Error::InvalidParameter(message) | Error::ScheduleInfeasible(message) => Error::Config {
            key: "schedule".into(),
            message,
        },
        other => other,
    }
}

impl ScheduleConfig {
    /// Builds the plan for `problem`, filling `κ`, `α`, `κ̄`, `M` and `σ`
    /// from its constants where the preset needs them.
    pub fn build<O: StochasticObjective + ?Sized>(&self, problem: &O) -> Result<SvrgSchedule> {
        let with_limits = |s: SvrgSchedule, stages: Option<usize>, budget: Option<u64>| {
            let s = match stages {
                Some(n) => s.with_max_stages(n),
                None => s,
            };
            match budget {
                Some(n) => s.with_budget(n),
                None => s,
            }
        };
        let built = match *self {
            ScheduleConfig::Practical {
                b,
                eta,
                m_mult,
                k0_mult,
                kappa,
                stages,
                budget,
            } => {
                let kappa = kappa.unwrap_or_else(|| problem.condition_number());
                let opts = PracticalOptions { eta, m_mult, k0_mult };
                SvrgSchedule::practical_with(kappa, 0, b, opts).map(|s| with_limits(s, stages, budget))
            }
            ScheduleConfig::Corollary1 { p, b, stages, budget } => {
                let c = problem.constants();
                SvrgSchedule::corollary1(p, b, c.kappa, c.alpha.clamp(1.0, c.kappa)).map(|s| with_limits(s, stages, budget))
            }
            ScheduleConfig::Corollary2 { p, b, stages, budget } => {
                let c = problem.constants();
                let sigma = c.sigma_sq.value().max(0.0).sqrt();
                SvrgSchedule::corollary2(p, b, c.kappa, c.kurtosis.value().max(1.0), c.self_concordance_m.value(), sigma)
                    .map(|s| with_limits(s, stages, budget))
            }
            ScheduleConfig::Explicit { ref plan } => plan.validate().map(|_| plan.clone()),
        };
        built.map_err(schedule_err)
    }
}

/// Averaged or plain SGD baseline; the budget follows the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SgdBaseline {
    pub step: SgdStep,
    #[serde(default = "default_true")]
    pub average: bool,
}

impl SgdBaseline {
    pub fn config(&self, budget: u64) -> SgdConfig {
        SgdConfig {
            step: self.step,
            average: self.average,
            sample_budget: budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselinesConfig {
    #[serde(default = "default_true")]
    pub erm: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sgd: Option<SgdBaseline>,
}

impl Default for BaselinesConfig {
    fn default() -> Self {
        BaselinesConfig { erm: true, sgd: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SweepEstimator {
    #[default]
    Erm,
    Streaming,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_probes")]
    pub probes: usize,
    /// Monte Carlo draws per expectation.
    #[serde(default = "default_draws")]
    pub draws: usize,
    /// Probe radius around `w*`.
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_probes() -> usize {
    100
}

fn default_draws() -> usize {
    10_000
}

fn default_radius() -> f64 {
    2.0
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            probes: default_probes(),
            draws: default_draws(),
            radius: default_radius(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n_grid: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Starting point; zeros when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w0: Option<Vec<f64>>,
    #[serde(default)]
    pub sweep: SweepEstimator,
    #[serde(default)]
    pub problem: ProblemDescriptor,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    #[serde(default)]
    pub baselines: BaselinesConfig,
    #[serde(default)]
    pub check: CheckConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            threads: default_threads(),
            trials: default_trials(),
            n_grid: Vec::new(),
            out: None,
            w0: None,
            sweep: SweepEstimator::default(),
            problem: ProblemDescriptor::default(),
            schedule: ScheduleConfig::default(),
            baselines: BaselinesConfig::default(),
            check: CheckConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config {
            key: "config".into(),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config {
            key: "config".into(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::Config {
                key: "threads".into(),
                message: "must be at least 1".into(),
            });
        }
        if self.trials == 0 {
            return Err(Error::Config {
                key: "trials".into(),
                message: "must be at least 1".into(),
            });
        }
        if self.n_grid.contains(&0) {
            return Err(Error::Config {
                key: "n_grid".into(),
                message: "every N must be at least 1".into(),
            });
        }
        Ok(())
    }

    pub fn start(&self, d: usize) -> Result<ParameterVector> {
        match &self.w0 {
            None => Ok(ParameterVector::zeros(d)),
            Some(w) if w.len() != d => Err(Error::Config {
                key: "w0".into(),
                message: format!("expected {d} entries, found {}", w.len()),
            }),
            Some(w) => ParameterVector::from_slice(w).map_err(|e| Error::Config {
                key: "w0".into(),
                message: e.to_string(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::descriptor::Family;

    const FULL: &str = r#"
seed = 11
threads = 2
trials = 40
n_grid = [100, 200]
out = "x.csv"
w0 = [0.0, 1.0]
sweep = "streaming"

[problem]
family = "ridge"
d = 2
lambda = 0.5

[schedule]
preset = "practical"
b = 2.0
budget = 5000

[baselines]
erm = true
sgd = { step = { kind = "polynomial_decay", gamma0 = 0.05, c = 0.6 } }

[check]
probes = 10
"#;

    #[test]
    fn round_trip_is_lossless() {
        let cfg = ExperimentConfig::from_toml_str(FULL).unwrap();
        assert_eq!(cfg.problem.family, Some(Family::Ridge));
        assert_eq!(cfg.sweep, SweepEstimator::Streaming);
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml_string().unwrap(), text);
    }

    #[test]
    fn unknown_keys_are_rejected_at_every_level() {
        for bad in [
            "bogus = 1",
            "[problem]\nfamily = \"ridge\"\nwat = 2",
            "[schedule]\npreset = \"practical\"\nspeed = 2",
            "[baselines]\nknn = true",
            "[check]\nfoo = 1",
        ] {
            let err = ExperimentConfig::from_toml_str(bad).unwrap_err();
            assert!(err.to_string().contains("unknown field"), "{bad}: {err}");
        }
    }

    #[test]
    fn explicit_plan_round_trips() {
        let text = r#"
[schedule]
preset = "explicit"
[schedule.plan]
eta = 0.1
m = 50
sample_budget = 1000
batch = { kind = "geometric", k0 = 100, b = 2.0 }
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn presets_build_from_problem_constants() {
        let mut cfg = ExperimentConfig {
            problem: ProblemDescriptor::least_squares(2),
            ..Default::default()
        };
        let p = cfg.problem.build().unwrap();
        let s = cfg.schedule.build(&p).unwrap();
        assert_eq!(s.batch.k0(), (5.0 * p.condition_number()).ceil() as u64);
        cfg.schedule = ScheduleConfig::Corollary1 {
            p: 2.0,
            b: 3.0,
            stages: Some(1),
            budget: None,
        };
        assert_eq!(cfg.schedule.build(&p).unwrap().eta, 1.0 / 540.0);
    }

    #[test]
    fn bad_eta_names_the_schedule() {
        let cfg = ExperimentConfig::from_toml_str("[schedule]\npreset = \"practical\"\neta = 0.3").unwrap();
        let p = ProblemDescriptor::least_squares(2).build().unwrap();
        let err = cfg.schedule.build(&p).unwrap_err();
        assert!(matches!(err, Error::Config { ref key, .. } if key == "schedule"), "{err}");
    }
}

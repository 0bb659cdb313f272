use std::path::PathBuf;

use fairalloc::arrivals::{ArrivalDistribution, SeedSpec};
use fairalloc::policies::{PolicyRule, DEFAULT_ETA};
use fairalloc::solvers::SolverConfig;
use fairalloc::welfare::WelfareParam;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Horizons at or below this use the short-horizon replication default.
pub const SHORT_HORIZON: usize = 4096;
pub const SHORT_REPS: usize = 2000;
pub const LONG_REPS: usize = 500;

const DOMAIN_INSTANCES: u64 = 1;
const DOMAIN_TRAJECTORIES: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Single,
    Randomized,
    Special,
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Randomized => "randomized",
            Mode::Special => "special",
        }
    }
}

/// Meta-distribution of random instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RandomizedSpec {
    pub agents: usize,
    pub types: usize,
    pub instances: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for RandomizedSpec {
    fn default() -> Self {
        Self { agents: 4, types: 5, instances: 30, alpha: 0.5, beta: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    /// Instance for single mode, with a label for the `instance` column.
    pub dist: Option<(String, ArrivalDistribution)>,
    pub qs: Vec<WelfareParam>,
    pub policies: Vec<PolicyRule>,
    pub horizons: Vec<usize>,
    /// `None` picks the per-horizon defaults.
    pub reps: Option<usize>,
    pub master_seed: u64,
    pub eta: f64,
    pub out: PathBuf,
    pub randomized: RandomizedSpec,
    pub solver: SolverConfig,
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, out: impl Into<PathBuf>) -> Self {
        let (qs, policies, horizons) = match mode {
            Mode::Single => (vec![WelfareParam::Egalitarian], vec![PolicyRule::Fluid], vec![1024]),
            Mode::Randomized => (
                vec![WelfareParam::Egalitarian, WelfareParam::Power(-1.0), WelfareParam::Nash],
                vec![PolicyRule::Fluid, PolicyRule::Birt { eta: DEFAULT_ETA }],
                powers_of_four(16, 16384),
            ),
            Mode::Special => (
                vec![WelfareParam::Egalitarian],
                vec![
                    PolicyRule::Fluid,
                    PolicyRule::FrequentResolve,
                    PolicyRule::Bir { eta: DEFAULT_ETA },
                    PolicyRule::Birt { eta: DEFAULT_ETA },
                ],
                powers_of_four(16, 65536),
            ),
        };
        Self {
            mode,
            dist: None,
            qs,
            policies,
            horizons,
            reps: None,
            master_seed: 0,
            eta: DEFAULT_ETA,
            out: out.into(),
            randomized: RandomizedSpec::default(),
            solver: SolverConfig::default(),
            record_timing: true,
        }
    }

    /// Replications used at horizon `t`.
    pub fn reps_for(&self, t: usize) -> usize {
        self.reps.unwrap_or(if t <= SHORT_HORIZON { SHORT_REPS } else { LONG_REPS })
    }

    /// Sets `eta` and re-targets every BIR/BIRT entry to it.
    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        for p in &mut self.policies {
            *p = match *p {
                PolicyRule::Bir { .. } => PolicyRule::Bir { eta },
                PolicyRule::Birt { .. } => PolicyRule::Birt { eta },
                other => other,
            };
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() {
            return Err(CliError::config("T", "at least one horizon is required"));
        }
        if self.horizons[0] < 1 {
            return Err(CliError::config("T", "horizons must be >= 1"));
        }
        if !self.horizons.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::config("T", "horizons must be strictly increasing"));
        }
        if let Some(r) = self.reps {
            if r < 2 {
                return Err(CliError::config("reps", format!("need at least 2 replications, got {r}")));
            }
        }
        if self.qs.is_empty() {
            return Err(CliError::config("q", "at least one welfare exponent is required"));
        }
        if self.policies.is_empty() {
            return Err(CliError::config("policy", "at least one policy is required"));
        }
        for p in &self.policies {
            p.validate().map_err(|e| CliError::config("eta", e.to_string()))?;
        }
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            return Err(CliError::config("eta", format!("must be a finite number > 1, got {}", self.eta)));
        }
        self.solver.validate().map_err(|e| CliError::config("solver", e.to_string()))?;
        match self.mode {
            Mode::Single if self.dist.is_none() => {
                return Err(CliError::config("dist", "single mode needs a distribution"));
            }
            Mode::Randomized => {
                let r = &self.randomized;
                if r.agents == 0 || r.types == 0 || r.instances == 0 {
                    return Err(CliError::config("n/L/instances", "must all be >= 1"));
                }
                if !(r.alpha > 0.0 && r.alpha.is_finite() && r.beta > 0.0 && r.beta.is_finite()) {
                    return Err(CliError::config("alpha/beta", "Beta parameters must be finite and > 0"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Master seed of the instance draws in randomized mode.
    pub fn instance_seed(&self) -> SeedSpec {
        SeedSpec::new(SeedSpec::derive(self.master_seed, DOMAIN_INSTANCES), 0)
    }

    /// Master seed of the trajectories of instance `index`; shared by every
    /// policy and metric so they see the same arrivals.
    pub fn trajectory_seed(&self, index: usize) -> u64 {
        SeedSpec::derive(SeedSpec::derive(self.master_seed, DOMAIN_TRAJECTORIES), index as u64)
    }
}

/// `lo, 4·lo, 16·lo, …` up to `hi`.
pub fn powers_of_four(lo: usize, hi: usize) -> Vec<usize> {
    std::iter::successors(Some(lo), |&t| Some(t * 4)).take_while(|&t| t <= hi).collect()
}

//! Trajectory execution and Monte Carlo regret estimation.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::arrivals::{count_types, sample_sequence, ArrivalDistribution, SeedSpec, TypeCounts};
use crate::error::{Error, Result};
use crate::policies::{init_policy, step, PolicyKind};
use crate::solvers::{hindsight_opt, SolveStatus, SolverConfig};

/// Largest tolerated `alg − opt`, relative to `max(1, opt)`.
pub const DOMINANCE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub alg_welfare: f64,
    pub opt_welfare: f64,
    pub seed: SeedSpec,
    pub counts: TypeCounts,
}

impl TrajectoryResult {
    pub fn regret(&self) -> f64 {
        self.opt_welfare - self.alg_welfare
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretEstimate {
    pub mean_regret: f64,
    pub stderr: f64,
    pub mean_opt: f64,
    pub mean_alg: f64,
    pub rel_regret: f64,
    pub reps: usize,
}

impl RegretEstimate {
    /// Aggregates in slice order, so equal inputs give bitwise-equal output.
    pub fn from_trajectories(results: &[TrajectoryResult]) -> Result<Self> {
        let reps = results.len();
        if reps < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 replications, got {reps}")));
        }
        let r = reps as f64;
        let mean_opt = results.iter().map(|t| t.opt_welfare).sum::<f64>() / r;
        let mean_alg = results.iter().map(|t| t.alg_welfare).sum::<f64>() / r;
        let mean_regret = results.iter().map(|t| t.regret()).sum::<f64>() / r;
        let var = results.iter().map(|t| (t.regret() - mean_regret).powi(2)).sum::<f64>() / (r - 1.0);
        Ok(Self {
            mean_regret,
            stderr: (var / r).sqrt(),
            mean_opt,
            mean_alg,
            rel_regret: if mean_opt == 0.0 { 0.0 } else { mean_regret / mean_opt },
            reps,
        })
    }
}

type OptCache = HashMap<Vec<u64>, f64>;

fn trajectory(
    kind: &PolicyKind,
    dist: &ArrivalDistribution,
    horizon: usize,
    seed: SeedSpec,
    cfg: &SolverConfig,
    cache: &mut OptCache,
) -> Result<TrajectoryResult> {
    let context = |period: usize| {
        move |e: Error| Error::Trajectory {
            master_seed: seed.master_seed,
            stream: seed.stream_index,
            period,
            source: Box::new(e),
        }
    };

    let seq = sample_sequence(dist, horizon, seed);
    let mut state = init_policy(kind, dist, horizon, cfg).map_err(context(0))?;
    for (t, &ty) in seq.types().iter().enumerate() {
        step(&mut state, kind, dist, ty, cfg).map_err(context(t + 1))?;
    }
    let alg_welfare = kind.param.value(state.utilities().as_slice());

    let counts = count_types(&seq, dist.types())?;
    let opt_welfare = match cache.get(counts.counts()) {
        Some(&v) => v,
        None => {
            let r = hindsight_opt(kind.param, dist, &counts, cfg).map_err(context(horizon))?;
            if r.status != SolveStatus::Optimal {
                return Err(context(horizon)(Error::NotConverged(format!(
                    "hindsight optimum for counts {:?}: {:?}",
                    counts.counts(),
                    r.status
                ))));
            }
            cache.insert(counts.counts().to_vec(), r.value);
            r.value
        }
    };

    if alg_welfare - opt_welfare > DOMINANCE_TOLERANCE * opt_welfare.max(1.0) {
        return Err(Error::NegativeRegret {
            master_seed: seed.master_seed,
            stream: seed.stream_index,
            opt: opt_welfare,
            alg: alg_welfare,
            counts: counts.counts().to_vec(),
        });
    }
    Ok(TrajectoryResult { alg_welfare, opt_welfare, seed, counts })
}

/// Samples one arrival sequence, runs the policy over it and scores it
/// against the hindsight optimum of the same sequence.
pub fn run_trajectory(
    kind: &PolicyKind,
    dist: &ArrivalDistribution,
    horizon: usize,
    seed: SeedSpec,
    cfg: &SolverConfig,
) -> Result<TrajectoryResult> {
    trajectory(kind, dist, horizon, seed, cfg, &mut OptCache::new())
}

/// Runs streams `0..reps` of `master_seed` and returns every trajectory in
/// stream order.
pub fn run_trajectories(
    kind: &PolicyKind,
    dist: &ArrivalDistribution,
    horizon: usize,
    reps: usize,
    master_seed: u64,
    cfg: &SolverConfig,
) -> Result<Vec<TrajectoryResult>> {
    cfg.validate()?;
    (0..reps as u64)
        .into_par_iter()
        .map_init(OptCache::new, |cache, stream| {
            trajectory(kind, dist, horizon, SeedSpec::new(master_seed, stream), cfg, cache)
        })
        .collect()
}

pub fn estimate_regret(
    kind: &PolicyKind,
    dist: &ArrivalDistribution,
    horizon: usize,
    reps: usize,
    master_seed: u64,
    cfg: &SolverConfig,
) -> Result<RegretEstimate> {
    if reps < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 replications, got {reps}")));
    }
    let results = run_trajectories(kind, dist, horizon, reps, master_seed, cfg)?;
    RegretEstimate::from_trajectories(&results)
}

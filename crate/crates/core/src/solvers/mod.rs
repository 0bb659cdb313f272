//! Static-policy optimization over products of agent simplices.
//!
//! Every problem solved here has the shape
//!
//! ```text
//! maximize  w_q( B0 + Σ_ℓ weights_ℓ · β_ℓ ∗ ξ_ℓ )   over   ξ_ℓ ∈ Δ_n for every type ℓ
//! ```
//!
//! With `weights = T·p` this is the fluid problem, with `(T − t)·p` and the
//! current utilities as `B0` it is the re-solving subproblem, and with the
//! realized type counts it is the hindsight optimum (static policies are
//! optimal offline). The egalitarian metric goes through the epigraph LP in
//! [`lp`]; finite exponents go through projected gradient ascent in
//! [`smooth`].

mod lp;
mod simplex_projection;
mod smooth;

pub use lp::solve_egalitarian;
pub use simplex_projection::{project_onto_simplex, project_onto_simplex_scaled};
pub use smooth::solve_smooth;

use crate::arrivals::{ArrivalDistribution, TypeCounts};
use crate::error::{Error, Result};
use crate::welfare::{UtilityVector, WelfareParam};

const ROW_SUM_TOL: f64 = 1e-9;

/// Per-type allocation shares; every row is a point of the n-simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticPolicy {
    agents: usize,
    shares: Vec<f64>,
}

impl StaticPolicy {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let agents = rows.first().map_or(0, Vec::len);
        if agents == 0 {
            return Err(Error::InvalidArgument(
                "a static policy needs at least one type and one agent".into(),
            ));
        }
        let mut shares = Vec::with_capacity(rows.len() * agents);
        for (l, row) in rows.iter().enumerate() {
            if row.len() != agents {
                return Err(Error::DimensionMismatch(format!(
                    "policy row {l} has {} shares, expected {agents}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !(*x >= 0.0)) {
                return Err(Error::InvalidArgument(format!(
                    "policy row {l} has a negative share: {row:?}"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidArgument(format!(
                    "policy row {l} sums to {sum}, not 1"
                )));
            }
            shares.extend_from_slice(row);
        }
        Ok(Self { agents, shares })
    }

    pub fn uniform(types: usize, agents: usize) -> Self {
        assert!(types > 0 && agents > 0);
        Self {
            agents,
            shares: vec![1.0 / agents as f64; types * agents],
        }
    }

    pub(crate) fn from_flat(agents: usize, shares: Vec<f64>) -> Self {
        debug_assert_eq!(shares.len() % agents, 0);
        Self { agents, shares }
    }

    pub fn types(&self) -> usize {
        self.shares.len() / self.agents
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn row(&self, ty: usize) -> &[f64] {
        &self.shares[ty * self.agents..(ty + 1) * self.agents]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.shares.chunks_exact(self.agents)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    /// `B0 + Σ_ℓ weights_ℓ · β_ℓ ∗ ξ_ℓ`.
    pub fn utilities(&self, support: &[Vec<f64>], weights: &[f64], b0: &[f64]) -> Vec<f64> {
        let mut b = b0.to_vec();
        for ((row, beta), &w) in self.rows().zip(support).zip(weights) {
            for ((acc, &x), &u) in b.iter_mut().zip(row).zip(beta) {
                *acc += w * u * x;
            }
        }
        b
    }
}

/// Nonnegative mass per type: `T·p_ℓ`, `(T − t)·p_ℓ`, or realized counts.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationWeights(Vec<f64>);

impl AllocationWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(l) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "weight {l} = {} must be finite and nonnegative",
                weights[l]
            )));
        }
        Ok(Self(weights))
    }

    /// Expected arrivals of each type over `remaining` periods.
    pub fn expected(dist: &ArrivalDistribution, remaining: f64) -> Self {
        Self(dist.probs().iter().map(|p| p * remaining).collect())
    }

    pub fn from_counts(counts: &TypeCounts) -> Self {
        Self(counts.as_weights())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub policy: StaticPolicy,
    pub value: f64,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub lp_tolerance: f64,
    pub grad_tolerance: f64,
    pub max_iters: usize,
    pub degeneracy_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            lp_tolerance: 1e-9,
            grad_tolerance: 1e-8,
            max_iters: 100_000,
            degeneracy_tolerance: 1e-7,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if positive(self.lp_tolerance)
            && positive(self.grad_tolerance)
            && positive(self.degeneracy_tolerance)
            && self.max_iters > 0
        {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "solver tolerances and iteration cap must be positive: {self:?}"
            )))
        }
    }
}

pub(crate) fn check_dimensions(
    support: &[Vec<f64>],
    weights: &AllocationWeights,
    b0: &UtilityVector,
) -> Result<usize> {
    let agents = b0.len();
    if support.is_empty() {
        return Err(Error::DimensionMismatch("empty support".into()));
    }
    if support.len() != weights.as_slice().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} types but {} weights",
            support.len(),
            weights.as_slice().len()
        )));
    }
    if let Some(l) = support.iter().position(|row| row.len() != agents) {
        return Err(Error::DimensionMismatch(format!(
            "support row {l} has {} agents but B0 has {agents}",
            support[l].len()
        )));
    }
    Ok(agents)
}

/// Dispatches on the metric: LP for q = −∞, projected gradient otherwise.
pub fn solve(
    param: WelfareParam,
    support: &[Vec<f64>],
    weights: &AllocationWeights,
    b0: &UtilityVector,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    match param {
        WelfareParam::Egalitarian => solve_egalitarian(support, weights, b0, cfg),
        _ => solve_smooth(param, support, weights, b0, cfg),
    }
}

/// Fluid problem over the `remaining` periods starting from utilities `b0`.
pub fn solve_fluid(
    param: WelfareParam,
    dist: &ArrivalDistribution,
    remaining: f64,
    b0: &UtilityVector,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let weights = AllocationWeights::expected(dist, remaining);
    solve(param, dist.support(), &weights, b0, cfg)
}

/// Best welfare achievable with full knowledge of the realized type counts.
pub fn hindsight_opt(
    param: WelfareParam,
    dist: &ArrivalDistribution,
    counts: &TypeCounts,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let (types, agents) = (dist.types(), dist.agents());
    if counts.counts().len() != types {
        return Err(Error::DimensionMismatch(format!(
            "{} counts for {types} types",
            counts.counts().len()
        )));
    }
    let present: Vec<usize> = (0..types).filter(|&l| counts.counts()[l] > 0).collect();
    let b0 = UtilityVector::zeros(agents);
    if present.is_empty() {
        return Ok(SolveResult {
            policy: StaticPolicy::uniform(types, agents),
            value: param.value(b0.as_slice()),
            status: SolveStatus::Optimal,
        });
    }
    let support: Vec<Vec<f64>> = present.iter().map(|&l| dist.utilities(l).to_vec()).collect();
    let weights =
        AllocationWeights::new(present.iter().map(|&l| counts.counts()[l] as f64).collect())?;
    let reduced = solve(param, &support, &weights, &b0, cfg)?;

    let mut shares = vec![1.0 / agents as f64; types * agents];
    for (k, &l) in present.iter().enumerate() {
        shares[l * agents..(l + 1) * agents].copy_from_slice(reduced.policy.row(k));
    }
    Ok(SolveResult {
        policy: StaticPolicy::from_flat(agents, shares),
        value: reduced.value,
        status: reduced.status,
    })
}

/// Active-constraint tally of the epigraph LP at a given optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegeneracyReport {
    pub active_agents: usize,
    pub full_types: usize,
    pub zero_shares: usize,
    pub tally: usize,
    pub degenerate: bool,
}

/// Counts tight agent constraints, saturated type rows and zero shares, and
/// flags degeneracy when the tally exceeds the `nL + 1` variables.
pub fn check_degeneracy(
    policy: &StaticPolicy,
    support: &[Vec<f64>],
    weights: &AllocationWeights,
    value: f64,
    cfg: &SolverConfig,
) -> Result<DegeneracyReport> {
    let agents = policy.agents();
    let types = policy.types();
    check_dimensions(support, weights, &UtilityVector::zeros(agents))?;
    if support.len() != types {
        return Err(Error::DimensionMismatch(format!(
            "policy has {types} rows, support has {}",
            support.len()
        )));
    }
    let tol = cfg.degeneracy_tolerance;
    let b = policy.utilities(support, weights.as_slice(), &vec![0.0; agents]);
    let active_agents = b
        .iter()
        .filter(|&&bi| (bi - value).abs() <= tol * value.abs().max(1.0))
        .count();
    let full_types = policy
        .rows()
        .filter(|row| (row.iter().sum::<f64>() - 1.0).abs() <= tol)
        .count();
    let zero_shares = policy.rows().flatten().filter(|&&x| x <= tol).count();
    let tally = active_agents + full_types + zero_shares;
    Ok(DegeneracyReport {
        active_agents,
        full_types,
        zero_shares,
        tally,
        degenerate: tally > agents * types + 1,
    })
}

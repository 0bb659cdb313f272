//! Online allocation policies: fluid (F), frequent re-solving (FR), backward
//! infrequent re-solving (BIR) and BIR with thresholding (BIRT).
//!
//! A policy is driven one arrival at a time through [`step`]; the state never
//! sees future arrivals.

use std::fmt;
use std::str::FromStr;

use crate::arrivals::ArrivalDistribution;
use crate::error::{Error, Result};
use crate::solvers::{solve_fluid, SolveResult, SolveStatus, SolverConfig, StaticPolicy};
use crate::welfare::{UtilityVector, WelfareParam};

pub const DEFAULT_ETA: f64 = 1.05;

/// Backward-geometric re-solving epochs and their thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolveSchedule {
    pub horizon: usize,
    pub eta: f64,
    /// `⌈ln ln T / ln η⌉`, or 0 when `T < 4`.
    pub k: usize,
    /// Distinct epochs in increasing order, starting at 0.
    pub epochs: Vec<usize>,
    /// `thresholds[i]` applies to the solve at `epochs[i]`.
    pub thresholds: Vec<f64>,
}

pub fn make_schedule(horizon: usize, eta: f64, agents: usize) -> Result<ResolveSchedule> {
    if !(eta > 1.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!("eta must be a finite number > 1, got {eta}")));
    }
    if horizon == 0 || agents == 0 {
        return Err(Error::InvalidArgument("schedule needs T >= 1 and n >= 1".into()));
    }
    if horizon < 4 {
        return Ok(ResolveSchedule { horizon, eta, k: 0, epochs: vec![0], thresholds: vec![0.0] });
    }

    let t = horizon as f64;
    let k = (t.ln().ln() / eta.ln()).ceil() as usize;
    // raw t_k for k = 0..=K, then the sentinel t_{K+1} = T
    let mut raw: Vec<usize> = (0..=k)
        .map(|j| {
            if j == 0 {
                return 0;
            }
            let back = eta.powi((k - j) as i32).exp().floor();
            if back >= t { 0 } else { horizon - back as usize }
        })
        .collect();
    raw.push(horizon);

    let n2 = (agents * agents) as f64;
    let mut epochs: Vec<usize> = Vec::with_capacity(k + 1);
    let mut thresholds: Vec<f64> = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let gamma = if j == k {
            0.0
        } else {
            (horizon - raw[j + 1]) as f64 / (2.0 * n2 * (horizon - raw[j]) as f64)
        };
        if epochs.last() == Some(&raw[j]) {
            *thresholds.last_mut().unwrap() = gamma;
        } else {
            epochs.push(raw[j]);
            thresholds.push(gamma);
        }
    }
    Ok(ResolveSchedule { horizon, eta, k, epochs, thresholds })
}

/// Zeroes every share below `gamma` except the row's largest, which absorbs
/// the withheld mass.
pub fn threshold_policy(xi: &StaticPolicy, gamma: f64) -> Result<StaticPolicy> {
    let agents = xi.agents();
    if !(gamma >= 0.0 && gamma < 1.0 / agents as f64) {
        return Err(Error::InvalidArgument(format!(
            "threshold must lie in [0, 1/n) = [0, {}), got {gamma}",
            1.0 / agents as f64
        )));
    }
    let mut shares = Vec::with_capacity(xi.types() * agents);
    for row in xi.rows() {
        let top = row
            .iter()
            .enumerate()
            .fold(0, |best, (i, &x)| if x > row[best] { i } else { best });
        let start = shares.len();
        shares.extend_from_slice(row);
        if row.iter().enumerate().any(|(i, &x)| i != top && x < gamma && x > 0.0) {
            for (i, s) in shares[start..].iter_mut().enumerate() {
                if i != top && *s < gamma {
                    *s = 0.0;
                }
            }
            let others: f64 = (0..agents).filter(|&i| i != top).map(|i| shares[start + i]).sum();
            shares[start + top] = 1.0 - others;
        }
    }
    Ok(StaticPolicy::from_flat(agents, shares))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicyRule {
    Fluid,
    FrequentResolve,
    Bir { eta: f64 },
    Birt { eta: f64 },
}

impl PolicyRule {
    pub fn token(&self) -> &'static str {
        match self {
            PolicyRule::Fluid => "f",
            PolicyRule::FrequentResolve => "fr",
            PolicyRule::Bir { .. } => "bir",
            PolicyRule::Birt { .. } => "birt",
        }
    }

    pub fn eta(&self) -> Option<f64> {
        match *self {
            PolicyRule::Bir { eta } | PolicyRule::Birt { eta } => Some(eta),
            _ => None,
        }
    }

    /// Parses `f`, `fr`, `bir` or `birt`; `eta` applies to the last two.
    pub fn parse(token: &str, eta: f64) -> Result<Self> {
        let rule = match token.to_ascii_lowercase().as_str() {
            "f" => PolicyRule::Fluid,
            "fr" => PolicyRule::FrequentResolve,
            "bir" => PolicyRule::Bir { eta },
            "birt" => PolicyRule::Birt { eta },
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown policy '{other}' (expected f, fr, bir or birt)"
                )))
            }
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        match self.eta() {
            Some(eta) if !(eta > 1.0 && eta.is_finite()) => Err(Error::InvalidArgument(format!(
                "eta must be a finite number > 1, got {eta}"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PolicyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for PolicyRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, DEFAULT_ETA)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyKind {
    pub rule: PolicyRule,
    pub param: WelfareParam,
}

impl PolicyKind {
    pub fn new(rule: PolicyRule, param: WelfareParam) -> Result<Self> {
        rule.validate()?;
        Ok(Self { rule, param })
    }
}

#[derive(Debug, Clone)]
pub struct PolicyState {
    utilities: UtilityVector,
    policy: StaticPolicy,
    schedule: Option<ResolveSchedule>,
    /// Index into `schedule.epochs` of the next re-solve.
    next_epoch: usize,
    period: usize,
    horizon: usize,
    solves: usize,
}

impl PolicyState {
    /// Cumulative utilities `B_t` after the completed periods.
    pub fn utilities(&self) -> &UtilityVector {
        &self.utilities
    }

    /// The static policy currently in force.
    pub fn policy(&self) -> &StaticPolicy {
        &self.policy
    }

    pub fn schedule(&self) -> Option<&ResolveSchedule> {
        self.schedule.as_ref()
    }

    /// Completed periods.
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Fluid solves so far, including the initial one.
    pub fn solves(&self) -> usize {
        self.solves
    }
}

fn checked(result: SolveResult, period: usize) -> Result<StaticPolicy> {
    match result.status {
        SolveStatus::Optimal => Ok(result.policy),
        status => Err(Error::NotConverged(format!("fluid re-solve after period {period}: {status:?}"))),
    }
}

pub fn init_policy(
    kind: &PolicyKind,
    dist: &ArrivalDistribution,
    horizon: usize,
    cfg: &SolverConfig,
) -> Result<PolicyState> {
    kind.rule.validate()?;
    let schedule = match kind.rule.eta() {
        Some(eta) => Some(make_schedule(horizon.max(1), eta, dist.agents())?),
        None => None,
    };
    start(kind, dist, horizon, schedule, cfg)
}

/// Like [`init_policy`] but BIR/BIRT follow `schedule` instead of the
/// closed-form one. Ignored by F and FR.
pub fn init_with_schedule(
    kind: &PolicyKind,
    dist: &ArrivalDistribution,
    schedule: ResolveSchedule,
    cfg: &SolverConfig,
) -> Result<PolicyState> {
    kind.rule.validate()?;
    let ok = schedule.epochs.first() == Some(&0)
        && schedule.epochs.len() == schedule.thresholds.len()
        && schedule.epochs.windows(2).all(|w| w[0] < w[1])
        && schedule.epochs.iter().all(|&t| t <= schedule.horizon);
    if !ok {
        return Err(Error::InvalidArgument(
            "schedule epochs must start at 0, increase strictly, stay within T and match the thresholds".into(),
        ));
    }
    let horizon = schedule.horizon;
    let schedule = kind.rule.eta().map(|_| schedule);
    start(kind, dist, horizon, schedule, cfg)
}

fn start(
    kind: &PolicyKind,
    dist: &ArrivalDistribution,
    horizon: usize,
    schedule: Option<ResolveSchedule>,
    cfg: &SolverConfig,
) -> Result<PolicyState> {
    let b0 = UtilityVector::zeros(dist.agents());
    let mut policy = checked(solve_fluid(kind.param, dist, horizon as f64, &b0, cfg)?, 0)?;
    if let (PolicyRule::Birt { .. }, Some(s)) = (kind.rule, &schedule) {
        policy = threshold_policy(&policy, s.thresholds[0])?;
    }
    Ok(PolicyState { utilities: b0, policy, schedule, next_epoch: 1, period: 0, horizon, solves: 1 })
}

/// Allocates the arrival of type `ty` in the next period and returns `x_t`.
pub fn step<'s>(
    state: &'s mut PolicyState,
    kind: &PolicyKind,
    dist: &ArrivalDistribution,
    ty: usize,
    cfg: &SolverConfig,
) -> Result<&'s [f64]> {
    let done = state.period;
    if done >= state.horizon {
        return Err(Error::HorizonExceeded { horizon: state.horizon });
    }
    if ty >= dist.types() {
        return Err(Error::CorruptSequence { period: done + 1, index: ty, types: dist.types() });
    }

    let remaining = (state.horizon - done) as f64;
    match kind.rule {
        PolicyRule::Fluid => {}
        PolicyRule::FrequentResolve => {
            if done > 0 {
                let r = solve_fluid(kind.param, dist, remaining, &state.utilities, cfg)?;
                state.policy = checked(r, done)?;
                state.solves += 1;
            }
        }
        PolicyRule::Bir { .. } | PolicyRule::Birt { .. } => {
            let schedule = state.schedule.as_ref().expect("schedule set for BIR/BIRT");
            if schedule.epochs.get(state.next_epoch) == Some(&done) {
                let gamma = schedule.thresholds[state.next_epoch];
                let r = solve_fluid(kind.param, dist, remaining, &state.utilities, cfg)?;
                let mut xi = checked(r, done)?;
                if matches!(kind.rule, PolicyRule::Birt { .. }) {
                    xi = threshold_policy(&xi, gamma)?;
                }
                state.policy = xi;
                state.next_epoch += 1;
                state.solves += 1;
            }
        }
    }

    state.utilities.accrue(dist.utilities(ty), state.policy.row(ty));
    state.period += 1;
    Ok(state.policy.row(ty))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_schedule_by_hand() {
        let s = make_schedule(16, 1.25, 2).unwrap();
        assert_eq!(s.k, 5);
        assert_eq!(s.epochs, vec![0, 5, 9, 12, 13, 14]);
        assert_eq!(s.thresholds[0], 11.0 / 128.0);
        assert_eq!(*s.thresholds.last().unwrap(), 0.0);
    }

    #[test]
    fn short_horizons_collapse_to_one_solve() {
        for t in 1..4 {
            let s = make_schedule(t, 1.05, 3).unwrap();
            assert_eq!(s.epochs, vec![0]);
            assert_eq!(s.thresholds, vec![0.0]);
        }
        let s = make_schedule(4, 1.05, 2).unwrap();
        assert_eq!(*s.epochs.last().unwrap(), 2);
    }

    #[test]
    fn schedule_rejects_bad_eta() {
        assert!(make_schedule(100, 1.0, 2).is_err());
        assert!(make_schedule(100, f64::NAN, 2).is_err());
    }

    #[test]
    fn duplicate_epochs_keep_later_threshold() {
        let s = make_schedule(65536, 1.05, 2).unwrap();
        assert_eq!(s.k, 50);
        assert!(s.epochs.len() < s.k + 1);
        assert!(s.epochs.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*s.epochs.last().unwrap(), 65534);
        // the merged epoch at T − 2 is the final one, so its threshold is γ_K
        assert_eq!(*s.thresholds.last().unwrap(), 0.0);
    }

    #[test]
    fn threshold_hand_trace() {
        let xi = StaticPolicy::new(vec![vec![0.9, 0.06, 0.04]]).unwrap();
        let out = threshold_policy(&xi, 0.05).unwrap();
        let row = out.row(0);
        assert!((row[0] - 0.94).abs() < 1e-15 && row[1] == 0.06 && row[2] == 0.0);
    }

    #[test]
    fn threshold_noop_cases() {
        let xi = StaticPolicy::new(vec![vec![0.5, 0.5], vec![0.3, 0.7]]).unwrap();
        assert_eq!(threshold_policy(&xi, 0.0).unwrap(), xi);
        assert_eq!(threshold_policy(&xi, 0.1).unwrap(), xi);
    }

    #[test]
    fn threshold_ties_go_to_lowest_index() {
        let xi = StaticPolicy::new(vec![vec![0.45, 0.1, 0.45]]).unwrap();
        let out = threshold_policy(&xi, 0.2).unwrap();
        assert_eq!(out.row(0), &[0.55, 0.0, 0.45]);
    }

    #[test]
    fn threshold_rejects_large_gamma() {
        let xi = StaticPolicy::uniform(1, 4);
        assert!(threshold_policy(&xi, 0.25).is_err());
        assert!(threshold_policy(&xi, -0.1).is_err());
    }

    #[test]
    fn parse_tokens() {
        assert_eq!("F".parse::<PolicyRule>().unwrap(), PolicyRule::Fluid);
        assert_eq!("fr".parse::<PolicyRule>().unwrap(), PolicyRule::FrequentResolve);
        assert_eq!(PolicyRule::parse("birt", 1.2).unwrap(), PolicyRule::Birt { eta: 1.2 });
        assert!(PolicyRule::parse("bir", 0.9).is_err());
        assert!(PolicyRule::parse("greedy", 1.05).is_err());
        assert_eq!(PolicyRule::Bir { eta: 1.05 }.to_string(), "bir");
    }

    fn degenerate() -> ArrivalDistribution {
        ArrivalDistribution::new(vec![vec![1.0, 0.5], vec![0.5, 1.0]], vec![0.5, 0.5]).unwrap()
    }

    fn kind(rule: PolicyRule) -> PolicyKind {
        PolicyKind::new(rule, WelfareParam::Egalitarian).unwrap()
    }

    #[test]
    fn fluid_on_degenerate_instance_is_the_diagonal() {
        let dist = degenerate();
        let cfg = SolverConfig::default();
        let k = kind(PolicyRule::Fluid);
        let mut state = init_policy(&k, &dist, 10, &cfg).unwrap();
        assert_eq!(state.policy().to_rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        for t in 0..10 {
            let x = step(&mut state, &k, &dist, t % 2, &cfg).unwrap().to_vec();
            assert_eq!(x, if t % 2 == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] });
        }
        assert_eq!(state.utilities().as_slice(), &[5.0, 5.0]);
        assert!(matches!(step(&mut state, &k, &dist, 0, &cfg), Err(Error::HorizonExceeded { horizon: 10 })));
    }

    #[test]
    fn solve_counts() {
        let dist = degenerate();
        let cfg = SolverConfig::default();
        let t = 200;
        for (rule, expected) in [
            (PolicyRule::Fluid, 1),
            (PolicyRule::FrequentResolve, t),
            (PolicyRule::Bir { eta: 1.05 }, make_schedule(t, 1.05, 2).unwrap().epochs.len()),
        ] {
            let k = kind(rule);
            let mut state = init_policy(&k, &dist, t, &cfg).unwrap();
            for s in 0..t {
                step(&mut state, &k, &dist, (s * 7 + s / 3) % 2, &cfg).unwrap();
            }
            assert_eq!(state.solves(), expected, "{rule}");
        }
    }

    #[test]
    fn bad_type_is_rejected() {
        let dist = degenerate();
        let cfg = SolverConfig::default();
        let k = kind(PolicyRule::Fluid);
        let mut state = init_policy(&k, &dist, 3, &cfg).unwrap();
        assert!(matches!(step(&mut state, &k, &dist, 2, &cfg), Err(Error::CorruptSequence { .. })));
    }
}

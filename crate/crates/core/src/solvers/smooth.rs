//! Projected gradient ascent for finite Hölder exponents.
//!
//! The iterate is a static policy; each row is moved along a diagonally
//! scaled gradient and projected back onto the simplex in the same metric. Ascent runs on `ln w_q`, which has the
//! same maximizers as `w_q`, is concave, and is invariant to rescaling the
//! utilities, so one set of tolerances works for every horizon.

use super::lp::best_agent;
use super::{
    check_dimensions, project_onto_simplex_scaled, AllocationWeights, SolveResult, SolveStatus,
    SolverConfig, StaticPolicy,
};
use crate::error::{Error, Result};
use crate::welfare::{UtilityVector, WelfareParam};

const ARMIJO: f64 = 1e-4;
const MIN_MOVE: f64 = 1e-16;
const MAX_STEP: f64 = 1e8;

pub fn solve_smooth(
    param: WelfareParam,
    support: &[Vec<f64>],
    weights: &AllocationWeights,
    b0: &UtilityVector,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    if param.is_egalitarian() {
        return Err(Error::InvalidWelfareParam(
            "q = -inf is not smooth; use solve_egalitarian".into(),
        ));
    }
    let agents = check_dimensions(support, weights, b0)?;
    let types = support.len();
    let w = weights.as_slice();

    if param == WelfareParam::Utilitarian {
        // linear objective separates by type
        let mut shares = vec![0.0; types * agents];
        for (l, beta) in support.iter().enumerate() {
            shares[l * agents + best_agent(beta)] = 1.0;
        }
        return Ok(finish(param, StaticPolicy::from_flat(agents, shares), support, w, b0, SolveStatus::Optimal));
    }

    let scale = support
        .iter()
        .zip(w)
        .flat_map(|(row, &wl)| row.iter().map(move |&b| wl * b))
        .chain(b0.as_slice().iter().copied())
        .fold(0.0, f64::max);
    let uniform = StaticPolicy::uniform(types, agents);
    if scale == 0.0 {
        return Ok(finish(param, uniform, support, w, b0, SolveStatus::Optimal));
    }

    let problem = Problem {
        param,
        agents,
        coef: support
            .iter()
            .zip(w)
            .flat_map(|(row, &wl)| row.iter().map(move |&b| wl * b / scale))
            .collect(),
        base: b0.as_slice().iter().map(|&b| b / scale).collect(),
        metric: Vec::new(),
    };
    let metric = problem
        .coef
        .chunks_exact(agents)
        .map(|row| {
            let top = row.iter().copied().fold(0.0, f64::max);
            if top > 0.0 { 1.0 / (top * top) } else { 1.0 }
        })
        .collect();
    let problem = Problem { metric, ..problem };

    if param.q() <= 0.0 {
        let stuck = (0..agents)
            .any(|i| problem.base[i] == 0.0 && (0..types).all(|l| problem.coef[l * agents + i] == 0.0));
        if stuck {
            // some agent ends at zero whatever we do, so every policy scores 0
            return Ok(finish(param, uniform, support, w, b0, SolveStatus::Optimal));
        }
    }

    let (shares, status) = problem.ascend(cfg);
    Ok(finish(param, StaticPolicy::from_flat(agents, shares), support, w, b0, status))
}

fn finish(
    param: WelfareParam,
    policy: StaticPolicy,
    support: &[Vec<f64>],
    weights: &[f64],
    b0: &UtilityVector,
    status: SolveStatus,
) -> SolveResult {
    let b = policy.utilities(support, weights, b0.as_slice());
    SolveResult {
        value: param.value(&b),
        policy,
        status,
    }
}

struct Problem {
    param: WelfareParam,
    agents: usize,
    /// `W_ℓ β_ℓⁱ / scale`, flattened like the policy.
    coef: Vec<f64>,
    base: Vec<f64>,
    /// Per-type step multiplier `1/max_i(c_ℓⁱ)²`: the diagonal Hessian block
    /// of a type scales with its squared mass, so light types would
    /// otherwise crawl.
    metric: Vec<f64>,
}

impl Problem {
    fn utilities(&self, shares: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.base);
        for (c_row, x_row) in self.coef.chunks_exact(self.agents).zip(shares.chunks_exact(self.agents)) {
            for ((b, &c), &x) in out.iter_mut().zip(c_row).zip(x_row) {
                *b += c * x;
            }
        }
    }

    /// `ln w_q(b)`; −∞ when the welfare vanishes.
    fn objective(&self, b: &[f64]) -> f64 {
        self.param.value(b).ln()
    }

    /// ∂ ln w / ∂ξ_ℓⁱ = c_ℓⁱ (1/n)(bⁱ/w)^{q−1} / w.
    fn gradient(&self, b: &[f64], dpsi: &mut [f64], grad: &mut [f64]) {
        let n = self.agents as f64;
        let q = self.param.q();
        let w = self.param.value(b);
        for (d, &bi) in dpsi.iter_mut().zip(b) {
            *d = (bi.max(f64::MIN_POSITIVE) / w).powf(q - 1.0) / (n * w);
        }
        for (g_row, c_row) in grad.chunks_exact_mut(self.agents).zip(self.coef.chunks_exact(self.agents)) {
            for ((g, &c), &d) in g_row.iter_mut().zip(c_row).zip(dpsi.iter()) {
                *g = if c == 0.0 { 0.0 } else { c * d };
            }
        }
    }

    /// Per-entry step scale: the row metric, shrunk to the inverse of the
    /// diagonal curvature `c² (1−q) ψ'(bⁱ)/bⁱ` where that is larger. Near a
    /// small utility this turns the step into a relative change of `bⁱ`.
    fn scaling(&self, b: &[f64], dpsi: &[f64], grad: &[f64], scale: &mut [f64]) {
        let bend = 1.0 - self.param.q();
        for ((s_row, c_row), &m) in scale
            .chunks_exact_mut(self.agents)
            .zip(self.coef.chunks_exact(self.agents))
            .zip(&self.metric)
        {
            for (i, (s, &c)) in s_row.iter_mut().zip(c_row).enumerate() {
                let curvature = c * c * bend * dpsi[i] / b[i];
                *s = if b[i] > 0.0 && curvature.is_finite() && curvature > 0.0 { m.min(1.0 / curvature) } else { m };
            }
        }
        // a nearly massless type can carry a huge scale; cap every row at unit
        // spread so it does not throttle the shared step
        for (s_row, g_row) in scale.chunks_exact_mut(self.agents).zip(grad.chunks_exact(self.agents)) {
            let spread = row_spread(g_row, s_row);
            if spread > 1.0 {
                s_row.iter_mut().for_each(|s| *s /= spread);
            }
        }
    }

    /// Largest within-row range of `d_j (g_j − ḡ)`, with `ḡ` the
    /// `d`-weighted row mean: the first-order move of a scaled projected step.
    fn spread(&self, grad: &[f64], scale: &[f64]) -> f64 {
        grad.chunks_exact(self.agents)
            .zip(scale.chunks_exact(self.agents))
            .map(|(g, d)| row_spread(g, d))
            .fold(0.0, f64::max)
    }

    fn project_step(&self, shares: &[f64], dir: &[f64], scale: &[f64], step: f64, out: &mut [f64]) {
        for ((o, &x), &g) in out.iter_mut().zip(shares).zip(dir) {
            *o = x + step * g;
        }
        for (row, s_row) in out.chunks_exact_mut(self.agents).zip(scale.chunks_exact(self.agents)) {
            project_onto_simplex_scaled(row, s_row);
        }
    }

    fn ascend(&self, cfg: &SolverConfig) -> (Vec<f64>, SolveStatus) {
        let n = self.agents;
        let size = self.coef.len();
        let mut shares = vec![1.0 / n as f64; size];
        let mut b = vec![0.0; n];
        self.utilities(&shares, &mut b);
        let mut value = self.objective(&b);
        let mut grad = vec![0.0; size];
        let mut dpsi = vec![0.0; n];
        let mut scale = vec![0.0; size];
        let unit = vec![1.0; size];
        let mut dir = vec![0.0; size];
        let mut trial = vec![0.0; size];
        let mut trial_b = vec![0.0; n];
        let mut step: f64 = 1.0;

        for _ in 0..cfg.max_iters {
            self.gradient(&b, &mut dpsi, &mut grad);

            // unit-step gradient mapping as the stationarity measure
            self.project_step(&shares, &grad, &unit, 1.0, &mut trial);
            let mapping = dist(&trial, &shares);
            if mapping <= cfg.grad_tolerance {
                return (shares, SolveStatus::Optimal);
            }
            self.scaling(&b, &dpsi, &grad, &mut scale);
            for ((d, &g), &m) in dir.iter_mut().zip(&grad).zip(&scale) {
                *d = m * g;
            }

            // Moves are measured against the largest within-row spread of the
            // direction: past 4/spread every row is already at a vertex, and
            // below 1e-16/spread nothing changes. The cap is not remembered
            // since it moves with the scaling.
            let spread = self.spread(&grad, &scale);
            let base = (2.0 * step).min(MAX_STEP);
            let cap = 4.0 / spread;
            let mut trial_step = base.min(cap);
            // at an exactly-zero utility the derivative is infinite for q < 1
            // and the linear model is useless; accept any increase instead
            let singular = b.iter().any(|&x| x == 0.0);
            let accepted = loop {
                self.project_step(&shares, &dir, &scale, trial_step, &mut trial);
                self.utilities(&trial, &mut trial_b);
                let candidate = self.objective(&trial_b);
                let ascent: f64 = trial
                    .iter()
                    .zip(&shares)
                    .zip(&grad)
                    .map(|((t, x), g)| (t - x) * g)
                    .sum();
                let enough = if singular { candidate > value } else { candidate >= value + ARMIJO * ascent };
                if enough {
                    break Some(candidate);
                }
                trial_step *= 0.5;
                if trial_step * spread < MIN_MOVE {
                    break None;
                }
            };
            if base <= cap {
                step = trial_step;
            }
            match accepted {
                Some(candidate) if candidate - value > 4.0 * f64::EPSILON * value.abs() => {
                    std::mem::swap(&mut shares, &mut trial);
                    std::mem::swap(&mut b, &mut trial_b);
                    value = candidate;
                }
                // no representable ascent left: converged to rounding precision
                _ => return (shares, SolveStatus::Optimal),
            }
        }
        (shares, SolveStatus::MaxIters)
    }
}

fn row_spread(g: &[f64], d: &[f64]) -> f64 {
    let mean = g.iter().zip(d).map(|(g, d)| g * d).sum::<f64>() / d.iter().sum::<f64>();
    let (lo, hi) = g
        .iter()
        .zip(d)
        .map(|(g, d)| d * (g - mean))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

//! Egalitarian (max-min) allocation as a small dense LP.
//!
//! ```text
//! max u   s.t.  u − Σ_ℓ W_ℓ β_ℓⁱ ξ_ℓⁱ ≤ B0ⁱ   (agents i)
//!               Σ_i ξ_ℓⁱ ≤ 1                  (types ℓ)
//!               u, ξ ≥ 0
//! ```
//!
//! Since `B0 ≥ 0` the all-slack basis is feasible, so a single primal phase
//! suffices. Rows that end below 1 are topped up on the type's best agent,
//! which can only raise utilities.

use super::{check_dimensions, AllocationWeights, SolveResult, SolveStatus, SolverConfig, StaticPolicy};
use crate::error::{Error, Result};
use crate::welfare::UtilityVector;

pub fn solve_egalitarian(
    support: &[Vec<f64>],
    weights: &AllocationWeights,
    b0: &UtilityVector,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    let agents = check_dimensions(support, weights, b0)?;
    let types = support.len();
    let w = weights.as_slice();
    let b0 = b0.as_slice();

    // scale so coefficients are O(1) regardless of the horizon
    let scale = support
        .iter()
        .zip(w)
        .flat_map(|(row, &wl)| row.iter().map(move |&b| wl * b))
        .chain(b0.iter().copied())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        let policy = StaticPolicy::uniform(types, agents);
        return Ok(SolveResult {
            policy,
            value: 0.0,
            status: SolveStatus::Optimal,
        });
    }

    let vars = 1 + agents * types;
    let rows = agents + types;
    let mut lp = Tableau::new(rows, vars);
    for i in 0..agents {
        lp.set(i, 0, 1.0);
        for l in 0..types {
            lp.set(i, 1 + l * agents + i, -w[l] * support[l][i] / scale);
        }
        lp.set_rhs(i, b0[i] / scale);
    }
    for l in 0..types {
        for i in 0..agents {
            lp.set(agents + l, 1 + l * agents + i, 1.0);
        }
        lp.set_rhs(agents + l, 1.0);
    }
    let mut objective = vec![0.0; vars];
    objective[0] = 1.0;
    lp.set_objective(&objective);

    let outcome = lp.maximize(cfg.lp_tolerance, cfg.max_iters, 50 * rows);
    let status = match outcome {
        Outcome::Optimal => SolveStatus::Optimal,
        Outcome::IterationLimit => SolveStatus::MaxIters,
        Outcome::Unbounded => {
            return Err(Error::NotConverged(
                "epigraph LP reported unbounded; the simplex rows bound every share".into(),
            ))
        }
    };

    let x = lp.primal();
    let mut shares = Vec::with_capacity(types * agents);
    for l in 0..types {
        let row = &x[1 + l * agents..1 + (l + 1) * agents];
        let start = shares.len();
        shares.extend(row.iter().map(|&v| v.clamp(0.0, 1.0)));
        let slot = &mut shares[start..];
        let sum: f64 = slot.iter().sum();
        if sum > 1.0 {
            slot.iter_mut().for_each(|v| *v /= sum);
        } else {
            slot[best_agent(&support[l])] += 1.0 - sum;
        }
    }
    let policy = StaticPolicy::from_flat(agents, shares);
    let b = policy.utilities(support, w, b0);
    let value = b.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SolveResult {
        policy,
        value,
        status,
    })
}

/// Lowest-index agent with the largest marginal utility.
pub(crate) fn best_agent(beta: &[f64]) -> usize {
    let mut best = 0;
    for (i, &b) in beta.iter().enumerate() {
        if b > beta[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    IterationLimit,
    Unbounded,
}

/// Dense tableau for `max c·x s.t. A x ≤ b, x ≥ 0` with `b ≥ 0`.
///
/// Columns are the structural variables followed by one slack per row; the
/// last column holds the right-hand side. The extra bottom row holds the
/// reduced costs, with `-z` in its last cell.
struct Tableau {
    rows: usize,
    vars: usize,
    width: usize,
    cells: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(rows: usize, vars: usize) -> Self {
        let width = vars + rows + 1;
        let mut cells = vec![0.0; (rows + 1) * width];
        for r in 0..rows {
            cells[r * width + vars + r] = 1.0;
        }
        Self {
            rows,
            vars,
            width,
            cells,
            basis: (vars..vars + rows).collect(),
        }
    }

    fn set(&mut self, row: usize, col: usize, v: f64) {
        self.cells[row * self.width + col] = v;
    }

    fn set_rhs(&mut self, row: usize, v: f64) {
        debug_assert!(v >= 0.0);
        self.cells[row * self.width + self.width - 1] = v;
    }

    fn set_objective(&mut self, c: &[f64]) {
        let base = self.rows * self.width;
        self.cells[base..base + self.vars].copy_from_slice(c);
    }

    fn at(&self, row: usize, col: usize) -> f64 {
        self.cells[row * self.width + col]
    }

    fn rhs(&self, row: usize) -> f64 {
        self.at(row, self.width - 1)
    }

    /// Dantzig pricing with lowest-index ties; falls back to Bland's rule for
    /// good once `bland_after` consecutive pivots fail to improve.
    fn maximize(&mut self, tol: f64, max_pivots: usize, bland_after: usize) -> Outcome {
        let columns = self.vars + self.rows;
        let mut stalled = 0usize;
        let mut bland = false;
        for _ in 0..max_pivots {
            let cost_row = self.rows;
            let mut entering = None;
            let mut best = tol;
            for j in 0..columns {
                let d = self.at(cost_row, j);
                if d > best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(col) = entering else {
                return Outcome::Optimal;
            };

            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, col);
                if a <= tol {
                    continue;
                }
                let ratio = self.rhs(r) / a;
                leaving = match leaving {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let tie = (ratio - lratio).abs() <= tol * lratio.abs().max(1.0);
                        if ratio < lratio - tol * lratio.abs().max(1.0)
                            || (tie && self.basis[r] < self.basis[lr])
                        {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((row, ratio)) = leaving else {
                return Outcome::Unbounded;
            };

            if ratio <= tol {
                stalled += 1;
                if stalled >= bland_after {
                    bland = true;
                }
            } else {
                stalled = 0;
            }
            self.pivot(row, col);
        }
        Outcome::IterationLimit
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(row, col);
        for v in &mut self.cells[row * w..(row + 1) * w] {
            *v *= inv;
        }
        self.cells[row * w + col] = 1.0;
        let (before, rest) = self.cells.split_at_mut(row * w);
        let (pivot_row, after) = rest.split_at_mut(w);
        for other in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let factor = other[col];
            if factor == 0.0 {
                continue;
            }
            for (o, &p) in other.iter_mut().zip(pivot_row.iter()) {
                *o -= factor * p;
            }
            other[col] = 0.0;
        }
        self.basis[row] = col;
    }

    fn primal(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.vars];
        for (r, &j) in self.basis.iter().enumerate() {
            if j < self.vars {
                x[j] = self.rhs(r).max(0.0);
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn solve(support: Vec<Vec<f64>>, weights: Vec<f64>, b0: Vec<f64>) -> SolveResult {
        solve_egalitarian(
            &support,
            &AllocationWeights::new(weights).unwrap(),
            &UtilityVector::new(b0).unwrap(),
            &cfg(),
        )
        .unwrap()
    }

    fn crossed() -> Vec<Vec<f64>> {
        vec![vec![1.0, 0.5], vec![0.5, 1.0]]
    }

    #[test]
    fn degenerate_fluid() {
        let t = 4096.0;
        let r = solve(crossed(), vec![t / 2.0, t / 2.0], vec![0.0, 0.0]);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.value - t / 2.0).abs() < 1e-9 * t);
        assert_eq!(r.policy.to_rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    }

    #[test]
    fn nondegenerate_fluid_unique_basis() {
        let t = 1000.0;
        let r = solve(crossed(), vec![0.4 * t, 0.6 * t], vec![0.0, 0.0]);
        assert!((r.value - 7.0 * t / 15.0).abs() < 1e-9 * t, "{}", r.value);
        let p = r.policy.to_rows();
        assert!((p[0][0] - 1.0).abs() < 1e-12 && p[0][1].abs() < 1e-12);
        assert!((p[1][0] - 2.0 / 9.0).abs() < 1e-12);
        assert!((p[1][1] - 7.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn identity_is_naive() {
        let r = solve(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![7.0, 3.0], vec![0.0, 0.0]);
        assert!((r.value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_symmetric_type() {
        let r = solve(vec![vec![1.0, 1.0]], vec![10.0], vec![0.0, 0.0]);
        assert!((r.value - 5.0).abs() < 1e-12);
        assert!((r.policy.row(0)[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn initial_utilities_shift_the_split() {
        // agent 1 already has 4; ten items worth 1 to both equalize at 7
        let r = solve(vec![vec![1.0, 1.0]], vec![10.0], vec![4.0, 0.0]);
        assert!((r.value - 7.0).abs() < 1e-12);
        assert!((r.policy.row(0)[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_mass_keeps_initial_minimum() {
        let r = solve(crossed(), vec![0.0, 0.0], vec![2.0, 3.0]);
        assert_eq!(r.value, 2.0);
        let r = solve(crossed(), vec![0.0, 0.0], vec![0.0, 0.0]);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn useless_type_is_topped_up() {
        // nobody values type 2; its row must still be a simplex point
        let r = solve(vec![vec![1.0, 1.0], vec![0.0, 0.0]], vec![4.0, 9.0], vec![0.0, 0.0]);
        assert!((r.value - 2.0).abs() < 1e-12);
        assert!((r.policy.row(1).iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rows_always_on_simplex() {
        let support = vec![
            vec![0.9, 0.1, 0.4],
            vec![0.2, 0.8, 0.3],
            vec![0.5, 0.5, 0.9],
            vec![0.05, 0.0, 0.02],
        ];
        let r = solve(support, vec![11.0, 3.0, 7.5, 2.0], vec![0.0, 1.0, 0.5]);
        for row in r.policy.rows() {
            assert!(row.iter().all(|&x| x >= 0.0));
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn best_agent_ties_to_lowest_index() {
        assert_eq!(best_agent(&[0.5, 0.9, 0.9]), 1);
        assert_eq!(best_agent(&[0.0, 0.0]), 0);
    }
}

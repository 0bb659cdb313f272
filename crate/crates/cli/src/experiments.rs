use std::path::PathBuf;
use std::time::Instant;

use fairalloc::arrivals::{random_distribution, ArrivalDistribution};
use fairalloc::policies::{make_schedule, PolicyKind};
use fairalloc::simulator::estimate_regret;
use fairalloc::solvers::{check_degeneracy, solve_egalitarian, solve_fluid, AllocationWeights};
use fairalloc::welfare::UtilityVector;
use serde_json::json;

use crate::config::{ExperimentConfig, Mode};
use crate::error::{CliError, Result};
use crate::output::{sibling, summarize, write_json, write_rows, ResultRow, RowWriter, SummaryRow};

/// Crossed utilities with equal type probabilities: the fluid LP optimum is
/// degenerate.
pub const DEGENERATE_JSON: &str = r#"{"support":[[1.0,0.5],[0.5,1.0]],"probs":[0.5,0.5]}"#;
/// Same utilities with probabilities (2/5, 3/5): a nondegenerate optimum.
pub const NONDEGENERATE_JSON: &str = r#"{"support":[[1.0,0.5],[0.5,1.0]],"probs":[0.4,0.6]}"#;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    pub dist: ArrivalDistribution,
}

pub fn special_instances() -> Vec<Instance> {
    [("degenerate", DEGENERATE_JSON), ("nondegenerate", NONDEGENERATE_JSON)]
        .into_iter()
        .map(|(name, text)| Instance {
            name: name.into(),
            dist: ArrivalDistribution::from_json_str(text).expect("built-in instance is valid"),
        })
        .collect()
}

pub fn randomized_instances(cfg: &ExperimentConfig) -> Result<Vec<Instance>> {
    let r = &cfg.randomized;
    let mut rng = cfg.instance_seed().rng();
    (0..r.instances)
        .map(|i| {
            Ok(Instance {
                name: i.to_string(),
                dist: random_distribution(&mut rng, r.agents, r.types, r.alpha, r.beta)?,
            })
        })
        .collect()
}

/// Instances the configured mode runs on.
pub fn instances_for(cfg: &ExperimentConfig) -> Result<Vec<Instance>> {
    match cfg.mode {
        Mode::Single => {
            let (name, dist) = cfg.dist.clone().ok_or_else(|| CliError::config("dist", "missing"))?;
            Ok(vec![Instance { name, dist }])
        }
        Mode::Randomized => randomized_instances(cfg),
        Mode::Special => Ok(special_instances()),
    }
}

/// Runs every (instance, policy, q, T) cell in a fixed order, handing each
/// finished row to `on_row`.
pub fn run_grid(
    cfg: &ExperimentConfig,
    instances: &[Instance],
    mut on_row: impl FnMut(&ResultRow) -> Result<()>,
) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let zeros = |n| UtilityVector::zeros(n);
    let mut rows = Vec::new();
    for (index, inst) in instances.iter().enumerate() {
        let dist = &inst.dist;
        let seed = cfg.trajectory_seed(index);
        for rule in &cfg.policies {
            for &param in &cfg.qs {
                let kind = PolicyKind::new(*rule, param)?;
                for &t in &cfg.horizons {
                    let reps = cfg.reps_for(t);
                    let flu = solve_fluid(param, dist, t as f64, &zeros(dist.agents()), &cfg.solver)?.value;
                    let weights = AllocationWeights::expected(dist, t as f64);
                    let lp = solve_egalitarian(dist.support(), &weights, &zeros(dist.agents()), &cfg.solver)?;
                    let degenerate =
                        check_degeneracy(&lp.policy, dist.support(), &weights, lp.value, &cfg.solver)?.degenerate;

                    let started = Instant::now();
                    let est = estimate_regret(&kind, dist, t, reps, seed, &cfg.solver)?;
                    let elapsed = started.elapsed().as_millis() as u64;

                    let row = ResultRow {
                        experiment: cfg.mode.name().into(),
                        instance: inst.name.clone(),
                        policy: rule.token().into(),
                        q: param,
                        eta: rule.eta(),
                        horizon: t,
                        reps,
                        mean_alg: est.mean_alg,
                        mean_opt: est.mean_opt,
                        regret: est.mean_regret,
                        regret_stderr: est.stderr,
                        rel_regret: est.rel_regret,
                        flu_value: flu,
                        degenerate,
                        wall_time_ms: if cfg.record_timing { elapsed } else { 0 },
                    };
                    on_row(&row)?;
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

pub fn run_single(cfg: &ExperimentConfig, on_row: impl FnMut(&ResultRow) -> Result<()>) -> Result<Vec<ResultRow>> {
    run_grid(cfg, &instances_for(cfg)?, on_row)
}

pub fn run_randomized(
    cfg: &ExperimentConfig,
    on_row: impl FnMut(&ResultRow) -> Result<()>,
) -> Result<(Vec<ResultRow>, Vec<SummaryRow>)> {
    let rows = run_grid(cfg, &randomized_instances(cfg)?, on_row)?;
    let summary = summarize(&rows);
    Ok((rows, summary))
}

pub fn run_special(cfg: &ExperimentConfig, on_row: impl FnMut(&ResultRow) -> Result<()>) -> Result<Vec<ResultRow>> {
    run_grid(cfg, &special_instances(), on_row)
}

/// Config echo, seeds, instances and build identity for the audit trail.
pub fn manifest(cfg: &ExperimentConfig, instances: &[Instance], outputs: &[PathBuf]) -> serde_json::Value {
    json!({
        "tool": "fairalloc",
        "version": env!("CARGO_PKG_VERSION"),
        "git_describe": env!("FAIRALLOC_GIT_DESCRIBE"),
        "mode": cfg.mode,
        "master_seed": cfg.master_seed,
        "q": cfg.qs.iter().map(|q| q.to_string()).collect::<Vec<_>>(),
        "policies": cfg.policies.iter().map(|p| json!({"policy": p.token(), "eta": p.eta()})).collect::<Vec<_>>(),
        "T": cfg.horizons,
        "reps": cfg.horizons.iter().map(|&t| cfg.reps_for(t)).collect::<Vec<_>>(),
        "randomized": if cfg.mode == Mode::Randomized { json!(cfg.randomized) } else { json!(null) },
        "solver": {
            "lp_tolerance": cfg.solver.lp_tolerance,
            "grad_tolerance": cfg.solver.grad_tolerance,
            "max_iters": cfg.solver.max_iters,
            "degeneracy_tolerance": cfg.solver.degeneracy_tolerance,
        },
        "instances": instances.iter().enumerate().map(|(i, inst)| json!({
            "name": inst.name,
            "trajectory_seed": cfg.trajectory_seed(i),
            "distribution": serde_json::from_str::<serde_json::Value>(&inst.dist.to_json()).expect("valid json"),
        })).collect::<Vec<_>>(),
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    })
}

/// Runs the configured experiment and writes the CSV, the summary CSV in
/// randomized mode, and the JSON manifest. Returns the written paths.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let instances = instances_for(cfg)?;
    let mut writer = RowWriter::create(&cfg.out)?;
    let rows = run_grid(cfg, &instances, |row| writer.write(row))?;
    writer.finish()?;

    let mut outputs = vec![cfg.out.clone()];
    if cfg.mode == Mode::Randomized {
        let path = sibling(&cfg.out, "summary.csv");
        write_rows(&path, &summarize(&rows))?;
        outputs.push(path);
    }
    let manifest_path = sibling(&cfg.out, "manifest.json");
    outputs.push(manifest_path.clone());
    write_json(&manifest_path, &manifest(cfg, &instances, &outputs))?;
    Ok(outputs)
}

/// Human-readable schedule table followed by a one-line JSON dump.
pub fn print_schedule(horizon: usize, eta: f64, agents: usize) -> Result<String> {
    let s = make_schedule(horizon, eta, agents).map_err(|e| CliError::config("eta", e.to_string()))?;
    let mut out = format!("T = {horizon}, eta = {eta}, n = {agents}, K = {}\n", s.k);
    out.push_str(&format!("{} distinct solves\n", s.epochs.len()));
    out.push_str("epoch      t_k  threshold\n");
    for (i, (t, g)) in s.epochs.iter().zip(&s.thresholds).enumerate() {
        out.push_str(&format!("{i:>5} {t:>8}  {g:.6e}\n"));
    }
    let dump = json!({ "T": horizon, "eta": eta, "n": agents, "K": s.k, "epochs": s.epochs, "thresholds": s.thresholds });
    out.push_str(&dump.to_string());
    out.push('\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_in_instances_are_exact() {
        let s = special_instances();
        assert_eq!(s[0].dist.support(), &[vec![1.0, 0.5], vec![0.5, 1.0]]);
        assert_eq!(s[0].dist.probs(), &[0.5, 0.5]);
        assert_eq!(s[1].dist.support(), s[0].dist.support());
        assert_eq!(s[1].dist.probs(), &[0.4, 0.6]);
        assert_eq!(s[0].dist.to_json(), DEGENERATE_JSON);
        assert_eq!(s[1].dist.to_json(), NONDEGENERATE_JSON);
    }

    #[test]
    fn schedule_printout() {
        let text = print_schedule(16, 1.25, 2).unwrap();
        assert!(text.starts_with("T = 16, eta = 1.25, n = 2, K = 5\n"));
        let dump: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
        assert_eq!(dump["epochs"], json!([0, 5, 9, 12, 13, 14]));
        assert_eq!(dump["thresholds"][0], json!(11.0 / 128.0));
        assert!(print_schedule(16, 1.0, 2).is_err());
    }
}

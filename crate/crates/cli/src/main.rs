use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairalloc::arrivals::ArrivalDistribution;
use fairalloc::policies::{PolicyRule, DEFAULT_ETA};
use fairalloc::welfare::WelfareParam;
use fairalloc_cli::experiments::{execute, print_schedule};
use fairalloc_cli::{CliError, ExperimentConfig, Mode, Result};

#[derive(Parser)]
#[command(name = "fairalloc", version, about = "Regret benchmarks for dynamic fair allocation policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate regret on one distribution file.
    Simulate {
        #[arg(long)]
        dist: PathBuf,
        #[command(flatten)]
        grid: Grid,
        /// Welfare exponents; `-inf` for egalitarian.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-inf")]
        q: Vec<String>,
    },
    /// Run one of the built-in experiment suites.
    Experiment {
        #[command(subcommand)]
        suite: Suite,
    },
    /// Print the re-solving epochs and thresholds.
    Schedule {
        #[arg(long = "T")]
        horizon: usize,
        #[arg(long, default_value_t = DEFAULT_ETA)]
        eta: f64,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Subcommand)]
enum Suite {
    /// Random instances with Beta-distributed utilities.
    Randomized {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        #[arg(long, default_value_t = 30)]
        instances: usize,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long = "L", default_value_t = 5)]
        types: usize,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-inf,-1,0")]
        q: Vec<String>,
    },
    /// The degenerate and nondegenerate two-agent instances under q = -inf.
    Special {
        #[command(flatten)]
        grid: Grid,
    },
}

#[derive(Args)]
struct Grid {
    /// Policies among f, fr, bir, birt (mode default when omitted).
    #[arg(long, value_delimiter = ',')]
    policy: Vec<String>,
    /// Horizons, strictly increasing (mode default when omitted).
    #[arg(long = "T", value_delimiter = ',')]
    horizons: Vec<usize>,
    /// Replications per cell; defaults to 2000 for T <= 4096 and 500 above.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_ETA)]
    eta: f64,
    #[arg(long)]
    out: PathBuf,
    /// Write 0 in wall_time_ms so reruns produce identical files.
    #[arg(long)]
    omit_timing: bool,
}

impl Grid {
    fn apply(self, mut cfg: ExperimentConfig) -> Result<ExperimentConfig> {
        if !self.policy.is_empty() {
            cfg.policies = self
                .policy
                .iter()
                .map(|p| PolicyRule::parse(p, self.eta).map_err(|e| CliError::config("policy", e.to_string())))
                .collect::<Result<_>>()?;
        }
        if !self.horizons.is_empty() {
            cfg.horizons = self.horizons;
        }
        cfg.reps = self.reps;
        cfg.master_seed = self.seed;
        cfg.out = self.out;
        cfg.record_timing = !self.omit_timing;
        Ok(cfg.with_eta(self.eta))
    }
}

fn parse_qs(qs: &[String]) -> Result<Vec<WelfareParam>> {
    qs.iter()
        .map(|q| q.trim().parse::<WelfareParam>().map_err(|e| CliError::config("q", e.to_string())))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match cli.command {
        Command::Schedule { horizon, eta, n } => {
            if horizon == 0 || n == 0 {
                return Err(CliError::config("T/n", "must be >= 1"));
            }
            let text = print_schedule(horizon, eta, n)?;
            print!("{text}");
            return Ok(());
        }
        Command::Simulate { dist, grid, q } => {
            let label = dist.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let d = ArrivalDistribution::from_json_file(&dist).map_err(|e| CliError::config("dist", e.to_string()))?;
            let mut cfg = grid.apply(ExperimentConfig::new(Mode::Single, ""))?;
            cfg.dist = Some((label, d));
            cfg.qs = parse_qs(&q)?;
            cfg
        }
        Command::Experiment { suite: Suite::Randomized { alpha, beta, instances, n, types, grid, q } } => {
            let mut cfg = grid.apply(ExperimentConfig::new(Mode::Randomized, ""))?;
            cfg.randomized.alpha = alpha;
            cfg.randomized.beta = beta;
            cfg.randomized.instances = instances;
            cfg.randomized.agents = n;
            cfg.randomized.types = types;
            cfg.qs = parse_qs(&q)?;
            cfg
        }
        Command::Experiment { suite: Suite::Special { grid } } => grid.apply(ExperimentConfig::new(Mode::Special, ""))?,
    };
    for path in execute(&cfg)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ballspace::harness::{emit_report, run_criterion, run_experiment, ExperimentConfig, ExperimentKind, CRITERIA};
use ballspace::spaces::SpaceSpec;
use ballspace::spec_text::parse_f64;
use ballspace::weights::WeightSpec;
use ballspace::{DomainSpec, Error, Grid, Result, TestFunctionSpec};

/// Function-space norms, nonlocal Sobolev functionals and their numerical checks.
#[derive(Debug, Parser)]
#[command(name = "ballspace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Norms of test functions in the configured spaces.
    Norm,
    /// Fractional seminorm limits against gradient norms.
    Bbm,
    /// Level-set functionals against gradient norms.
    Bsvy {
        /// Run the full equivalence suite instead of a single configuration.
        #[arg(long)]
        suite: bool,
    },
    /// Maximal operator norm estimates and the Rubio de Francia iteration.
    Maximal,
    /// Muckenhoupt constants of weights.
    Apconst,
    /// Morrey norms against cube-weighted Lebesgue norms.
    MorreyDuality,
    /// Random instances of the weak-Holder inequality.
    WeakHolder,
    /// Monte Carlo falsifier of the (eps, inf) domain condition.
    EpsilonCheck,
    /// The full acceptance suite.
    Verify {
        /// Run only these criteria (comma separated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV, JSON and plot-script output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid as `n=…,L=…,N=…` (or `lo=…,hi=…` in place of `L`).
    #[arg(long, global = true)]
    grid: Option<String>,
    /// Space spec such as `lorentz:r=2,tau=3`; repeatable.
    #[arg(long = "space", global = true)]
    spaces: Vec<String>,
    /// Test function spec such as `gaussian:sigma=0.5`; repeatable.
    #[arg(long = "fn", global = true)]
    functions: Vec<String>,
    /// Domain spec such as `ball:radius=1`; repeatable.
    #[arg(long = "domain", global = true)]
    domains: Vec<String>,
    /// Weight spec such as `power:a=-0.5`; repeatable.
    #[arg(long = "weight", global = true)]
    weights: Vec<String>,
    /// Exponents `p`, `|`-separated.
    #[arg(long, global = true)]
    p: Option<String>,
    /// Exponents `γ`, `|`-separated.
    #[arg(long, global = true, allow_hyphen_values = true)]
    gamma: Option<String>,
    /// Values of `ε`, `|`-separated.
    #[arg(long, global = true)]
    epsilon: Option<String>,
}

fn numbers(text: &str) -> Result<Vec<f64>> {
    text.split('|').map(str::trim).filter(|s| !s.is_empty()).map(parse_f64).collect()
}

fn parse_all<T>(items: &[String], parse: fn(&str) -> Result<T>) -> Result<Vec<T>> {
    items.iter().map(|s| parse(s)).collect()
}

fn build_config(kind: ExperimentKind, common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let cfg = ExperimentConfig::parse(&std::fs::read_to_string(path)?)?;
            let compatible = cfg.kind == kind
                || (kind == ExperimentKind::Bsvy && cfg.kind == ExperimentKind::EquivalenceSuite);
            if !compatible {
                return Err(Error::Parse(format!("config kind `{}` does not match subcommand `{kind}`", cfg.kind)));
            }
            cfg
        }
        None => ExperimentConfig::defaults(kind),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    if let Some(g) = &common.grid {
        cfg.grid = Grid::parse(g)?;
    }
    if !common.spaces.is_empty() {
        cfg.spaces = parse_all(&common.spaces, SpaceSpec::parse)?;
    }
    if !common.functions.is_empty() {
        cfg.functions = parse_all(&common.functions, TestFunctionSpec::parse)?;
        cfg.indicator = None;
    }
    if !common.domains.is_empty() {
        cfg.domains = parse_all(&common.domains, DomainSpec::parse)?;
    }
    if !common.weights.is_empty() {
        cfg.weights = parse_all(&common.weights, WeightSpec::parse)?;
    }
    if let Some(p) = &common.p {
        cfg.p = numbers(p)?;
    }
    if let Some(g) = &common.gamma {
        cfg.gamma = numbers(g)?;
    }
    if let Some(e) = &common.epsilon {
        cfg.epsilon = numbers(e)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_one(kind: ExperimentKind, common: &Common) -> Result<bool> {
    let cfg = build_config(kind, common)?;
    let table = run_experiment(&cfg)?;
    match &cfg.out {
        Some(dir) => {
            for path in emit_report(&table, dir, cfg.kind.as_str())? {
                println!("wrote {}", path.display());
            }
        }
        None => print!("{}", table.to_csv()?),
    }
    for c in &table.checks {
        println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(table.passed())
}

fn verify(only: &[usize], common: &Common) -> Result<bool> {
    let seed = common.seed.unwrap_or(0);
    let ids: Vec<usize> = if only.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { only.to_vec() };
    let mut outcomes = Vec::new();
    for id in ids {
        let o = run_criterion(id, seed);
        println!("{o}");
        outcomes.push(o);
    }
    if let Some(dir) = &common.out {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("verify.json");
        let body = serde_json::to_string_pretty(&outcomes).map_err(|e| Error::Io(e.to_string()))?;
        std::fs::write(&path, body)?;
        println!("wrote {}", path.display());
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria pass", outcomes.len());
    Ok(passed == outcomes.len())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Norm => run_one(ExperimentKind::Norms, &cli.common),
        Command::Bbm => run_one(ExperimentKind::Bbm, &cli.common),
        Command::Bsvy { suite } => {
            let kind = if *suite { ExperimentKind::EquivalenceSuite } else { ExperimentKind::Bsvy };
            run_one(kind, &cli.common)
        }
        Command::Maximal => run_one(ExperimentKind::Maximal, &cli.common),
        Command::Apconst => run_one(ExperimentKind::ApConstants, &cli.common),
        Command::MorreyDuality => run_one(ExperimentKind::MorreyDuality, &cli.common),
        Command::WeakHolder => run_one(ExperimentKind::WeakHolder, &cli.common),
        Command::EpsilonCheck => run_one(ExperimentKind::EpsilonCheck, &cli.common),
        Command::Verify { only } => verify(only, &cli.common),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

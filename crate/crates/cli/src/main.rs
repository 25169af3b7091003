use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use charpoly_cli::{run, CommandKind, FnCache, Params, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "charpoly",
    version,
    about = "Negative moments of GOE characteristic polynomials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate F_n(eps) for one eps.
    FnEval(Flags),
    /// Monte Carlo estimate of the ratio K_n, with the large-N prediction at omega = 0.
    McRatio(Flags),
    /// Monte Carlo estimate of K1 with its saddle-point value.
    McK1(Flags),
    /// F_n over an eps grid alongside the small- and large-eps laws.
    AsympScan(Flags),
    /// Cluster integrals over an eps grid (p goes in the n column).
    ClusterScan(Flags),
    /// Run the acceptance criteria.
    Validate(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// JSON file of parameters; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// goe or gue.
    #[arg(long)]
    ensemble: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Matrix dimension.
    #[arg(long = "N")]
    dim: Option<usize>,
    /// Coupling J.
    #[arg(long = "J")]
    coupling: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// start:stop:count:logspace
    #[arg(long = "eps-grid")]
    eps_grid: Option<String>,
    /// auto, quadrature, pfaffian or closed_form.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    stream: Option<u64>,
    /// Cluster cutoff X.
    #[arg(long = "X")]
    cutoff: Option<f64>,
    /// Cluster size.
    #[arg(long)]
    p: Option<usize>,
    /// Moment exponent k for cluster integrals.
    #[arg(long)]
    k: Option<f64>,
    /// Output file; standard output when absent or "-".
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Cache directory (default: $CHARPOLY_CACHE).
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Comma-separated subset of acceptance criteria for validate.
    #[arg(long, value_delimiter = ',')]
    criteria: Option<Vec<u8>>,
}

impl Flags {
    fn into_params(self) -> (Option<PathBuf>, Params) {
        let p = Params {
            ensemble: self.ensemble,
            n: self.n,
            dim: self.dim,
            coupling: self.coupling,
            mu: self.mu,
            omega: self.omega,
            delta: self.delta,
            eps: self.eps,
            eps_grid: self.eps_grid,
            method: self.method,
            tol: self.tol,
            samples: self.samples,
            seed: self.seed,
            stream: self.stream,
            cutoff: self.cutoff,
            p: self.p,
            k: self.k,
            out: self.out,
            format: self.format,
            cache: self.cache,
            criteria: self.criteria,
        };
        (self.config, p)
    }
}

fn resolve(cli: Cli) -> Result<RunConfig, charpoly_cli::UsageError> {
    let (kind, flags) = match cli.command {
        Command::FnEval(f) => (CommandKind::FnEval, f),
        Command::McRatio(f) => (CommandKind::McRatio, f),
        Command::McK1(f) => (CommandKind::McK1, f),
        Command::AsympScan(f) => (CommandKind::AsympScan, f),
        Command::ClusterScan(f) => (CommandKind::ClusterScan, f),
        Command::Validate(f) => (CommandKind::Validate, f),
    };
    let (config, params) = flags.into_params();
    let base = match config {
        Some(path) => Params::from_json_file(&path)?,
        None => Params::default(),
    };
    RunConfig::resolve(kind, base.overlay(params))
}

fn execute(cfg: &RunConfig) -> anyhow::Result<i32> {
    let cache = match &cfg.cache_path {
        Some(dir) => {
            Some(FnCache::open(dir).with_context(|| format!("opening cache {}", dir.display()))?)
        }
        None => None,
    };
    let outcome = run(cfg, cache.as_ref());
    for r in outcome.records.iter().filter(|r| r.error.is_some()) {
        log::error!("{}: {}", r.method, r.error.as_deref().unwrap_or_default());
    }
    if cache.is_some() {
        log::info!(
            "cache: {} hits, {} misses",
            outcome.cache_hits,
            outcome.cache_misses
        );
    }
    charpoly_cli::records::write_results(&outcome.records, cfg.output_path.as_deref(), cfg.format)
        .context("writing results")?;
    Ok(outcome.exit_code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cfg = match resolve(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    match execute(&cfg) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

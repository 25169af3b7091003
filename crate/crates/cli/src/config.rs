//! Run configuration: a JSON document overlaid by command-line flags, resolved to
//! defaults and checked against the preconditions of the target operation before
//! anything is computed.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use charpoly_core::acceptance::CRITERIA;
use charpoly_core::fneval::{FnMethod, CLUSTER_MAX_P, EPS_MAX, EPS_MIN, TOL_MIN};
use charpoly_core::rmt::mean_density;
use charpoly_core::specialfns::N_MAX;
use serde::Deserialize;

/// Environment variable naming the default cache directory.
pub const CACHE_ENV: &str = "CHARPOLY_CACHE";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    FnEval,
    McRatio,
    McK1,
    AsympScan,
    ClusterScan,
    Validate,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::FnEval => "fn-eval",
            CommandKind::McRatio => "mc-ratio",
            CommandKind::McK1 => "mc-k1",
            CommandKind::AsympScan => "asymp-scan",
            CommandKind::ClusterScan => "cluster-scan",
            CommandKind::Validate => "validate",
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, CommandKind::AsympScan | CommandKind::ClusterScan)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ensemble {
    Goe,
    Gue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Auto,
    Fixed(FnMethod),
}

pub use crate::records::Format as OutputFormat;

/// Raw parameters, as they appear in a JSON config file or on the command line.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub ensemble: Option<String>,
    pub n: Option<usize>,
    #[serde(rename = "N")]
    pub dim: Option<usize>,
    #[serde(rename = "J")]
    pub coupling: Option<f64>,
    pub mu: Option<f64>,
    pub omega: Option<f64>,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub eps_grid: Option<String>,
    pub method: Option<String>,
    pub tol: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub stream: Option<u64>,
    #[serde(rename = "X")]
    pub cutoff: Option<f64>,
    pub p: Option<usize>,
    pub k: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub cache: Option<PathBuf>,
    pub criteria: Option<Vec<u8>>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f; } )*
    };
}

impl Params {
    pub fn from_json_file(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))
    }

    /// `self` with every field that is set in `top` replaced by it.
    pub fn overlay(mut self, top: Params) -> Params {
        overlay_fields!(self, top; ensemble, n, dim, coupling, mu, omega, delta, eps,
            eps_grid, method, tol, samples, seed, stream, cutoff, p, k, out, format,
            cache, criteria);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "usage error: {}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T, UsageError> {
    Err(UsageError(msg.into()))
}

/// A fully resolved and validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub ensemble: Ensemble,
    pub n: usize,
    pub dim: usize,
    pub coupling: f64,
    pub mu: f64,
    pub omega: f64,
    /// Regularizer for the Monte Carlo commands (derived from `eps` when absent).
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    pub eps_grid: Vec<f64>,
    pub method: MethodChoice,
    pub tol: f64,
    pub samples: usize,
    pub seed: u64,
    pub stream: u64,
    pub cutoff: f64,
    pub p: usize,
    pub k: f64,
    pub criteria: Vec<u8>,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub cache_path: Option<PathBuf>,
}

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_SEED: u64 = 1;

/// Parses `start:stop:count:logspace` (or `...:linspace`).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, UsageError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        return usage(format!("grid '{spec}' must be start:stop:count:logspace"));
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| UsageError(format!("bad number '{s}' in grid '{spec}'")))
    };
    let start = num(parts[0])?;
    let stop = num(parts[1])?;
    let count: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| UsageError(format!("bad count '{}' in grid '{spec}'", parts[2])))?;
    if count == 0 {
        return usage("grid count must be at least 1");
    }
    match parts[3].trim() {
        "logspace" | "log" => {
            if !(start > 0.0 && stop > 0.0) {
                return usage("logspace grid needs positive endpoints");
            }
            Ok(charpoly_core::asymptotics::log_grid(start, stop, count))
        }
        "linspace" | "lin" => Ok((0..count)
            .map(|i| {
                if count == 1 {
                    start
                } else {
                    start + (stop - start) * i as f64 / (count - 1) as f64
                }
            })
            .collect()),
        other => usage(format!("unknown grid spacing '{other}'")),
    }
}

fn parse_method(s: &str) -> Result<MethodChoice, UsageError> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(MethodChoice::Auto);
    }
    s.parse::<FnMethod>()
        .map(MethodChoice::Fixed)
        .map_err(|e| UsageError(e.to_string()))
}

impl RunConfig {
    pub fn resolve(command: CommandKind, p: Params) -> Result<Self, UsageError> {
        let ensemble = match p.ensemble.as_deref().unwrap_or("goe") {
            s if s.eq_ignore_ascii_case("goe") => Ensemble::Goe,
            s if s.eq_ignore_ascii_case("gue") => Ensemble::Gue,
            other => return usage(format!("unknown ensemble '{other}'")),
        };
        let format = match p.format.as_deref().unwrap_or("csv") {
            s if s.eq_ignore_ascii_case("csv") => OutputFormat::Csv,
            s if s.eq_ignore_ascii_case("json") => OutputFormat::Json,
            other => return usage(format!("unknown format '{other}'")),
        };
        let eps_grid = match (&p.eps_grid, p.eps) {
            (Some(g), _) => parse_grid(g)?,
            (None, Some(e)) => vec![e],
            (None, None) => Vec::new(),
        };
        let p_size = p.p.unwrap_or(2);
        let cache_path = p
            .cache
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from));
        let cfg = RunConfig {
            command,
            ensemble,
            n: p.n.unwrap_or(1),
            dim: p.dim.unwrap_or(100),
            coupling: p.coupling.unwrap_or(1.0),
            mu: p.mu.unwrap_or(0.0),
            omega: p.omega.unwrap_or(0.0),
            delta: p.delta,
            eps: p.eps,
            eps_grid,
            method: parse_method(p.method.as_deref().unwrap_or("auto"))?,
            tol: p.tol.unwrap_or(DEFAULT_TOL),
            samples: p.samples.unwrap_or(DEFAULT_SAMPLES),
            seed: p.seed.unwrap_or(DEFAULT_SEED),
            stream: p.stream.unwrap_or(0),
            cutoff: p.cutoff.unwrap_or(1.0),
            p: p_size,
            k: p.k.unwrap_or(p_size as f64),
            criteria: p.criteria.unwrap_or_else(|| CRITERIA.to_vec()),
            output_path: p.out.filter(|o| o.as_os_str() != "-"),
            format,
            cache_path,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Regularizer used by the Monte Carlo commands.
    pub fn effective_delta(&self) -> Option<f64> {
        match (self.delta, self.eps) {
            (Some(d), _) => Some(d),
            (None, Some(e)) => {
                let rho = mean_density(self.mu, self.coupling).ok()?;
                Some(e / (self.dim as f64 * PI * rho))
            }
            (None, None) => None,
        }
    }

    fn validate(&self) -> Result<(), UsageError> {
        match self.command {
            CommandKind::FnEval | CommandKind::AsympScan => self.validate_fn(),
            CommandKind::McRatio | CommandKind::McK1 => self.validate_mc(),
            CommandKind::ClusterScan => self.validate_cluster(),
            CommandKind::Validate => {
                for id in &self.criteria {
                    if !CRITERIA.contains(id) {
                        return usage(format!("no acceptance criterion {id}"));
                    }
                }
                Ok(())
            }
        }
    }

    fn validate_fn(&self) -> Result<(), UsageError> {
        if self.command == CommandKind::FnEval && self.eps.is_none() {
            return usage("fn-eval needs --eps");
        }
        if self.command == CommandKind::AsympScan && self.eps_grid.is_empty() {
            return usage("asymp-scan needs --eps-grid or --eps");
        }
        if self.n == 0 {
            return usage("--n must be at least 1");
        }
        if !(self.tol >= TOL_MIN) {
            return usage(format!("--tol must be at least {TOL_MIN:e}"));
        }
        let goe = self.ensemble == Ensemble::Goe;
        match (self.ensemble, self.method) {
            (Ensemble::Goe, MethodChoice::Fixed(FnMethod::ClosedForm)) => {
                return usage("no closed form for GOE; use quadrature or pfaffian")
            }
            (Ensemble::Gue, MethodChoice::Fixed(FnMethod::Pfaffian)) => {
                return usage("pfaffian route is GOE only")
            }
            (_, MethodChoice::Fixed(FnMethod::MonteCarlo)) => {
                return usage("monte_carlo is selected by quadrature for n >= 4")
            }
            (Ensemble::Gue, MethodChoice::Fixed(FnMethod::Quadrature)) if self.n > 5 => {
                return usage("GUE quadrature supports n <= 5")
            }
            _ => {}
        }
        if goe && self.n > N_MAX {
            return usage(format!("GOE evaluations support n <= {N_MAX}"));
        }
        for &e in &self.eps_grid {
            if goe && !(EPS_MIN..=EPS_MAX).contains(&e) {
                return usage(format!("eps = {e} outside [{EPS_MIN:e}, {EPS_MAX:e}]"));
            }
            if !(e > 0.0) || !e.is_finite() {
                return usage(format!("eps must be positive, got {e}"));
            }
        }
        Ok(())
    }

    fn validate_mc(&self) -> Result<(), UsageError> {
        if self.n == 0 {
            return usage("--n must be at least 1");
        }
        if !(self.coupling > 0.0) {
            return usage("--J must be positive");
        }
        if mean_density(self.mu, self.coupling).is_err() {
            return usage(format!(
                "--mu {} outside the bulk |mu| < {}",
                self.mu,
                self.coupling * 2f64.sqrt()
            ));
        }
        let min_dim = if self.command == CommandKind::McRatio {
            2 * self.n + 1
        } else {
            self.n + 1
        };
        if self.dim < min_dim {
            return usage(format!("--N must be at least {min_dim} for n = {}", self.n));
        }
        if self.delta.is_some() && self.eps.is_some() {
            return usage("give either --delta or --eps, not both");
        }
        match self.effective_delta() {
            Some(d) if d > 0.0 && d.is_finite() => {}
            Some(d) => return usage(format!("delta must be positive, got {d}")),
            None => return usage("Monte Carlo commands need --delta or --eps"),
        }
        if self.samples < charpoly_core::moments::MIN_SAMPLES {
            return usage(format!(
                "--samples must be at least {}",
                charpoly_core::moments::MIN_SAMPLES
            ));
        }
        if self.command == CommandKind::McK1 && self.omega != 0.0 {
            return usage("mc-k1 evaluates K1 at mu1 = mu + i delta; omega must be 0");
        }
        Ok(())
    }

    fn validate_cluster(&self) -> Result<(), UsageError> {
        if !(1..=CLUSTER_MAX_P).contains(&self.p) {
            return usage(format!("--p must be in 1..={CLUSTER_MAX_P}"));
        }
        if !(self.k > 0.0) {
            return usage("--k must be positive");
        }
        if !(self.cutoff > 0.0) {
            return usage("--X must be positive");
        }
        if self.eps_grid.is_empty() {
            return usage("cluster-scan needs --eps-grid or --eps");
        }
        for &e in &self.eps_grid {
            if !(e > 0.0 && e < self.cutoff) {
                return usage(format!("need 0 < eps < X, got eps = {e}"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("1e-6:1e-3:4:logspace").unwrap();
        assert_eq!(g.len(), 4);
        assert!((g[1] / 1e-5 - 1.0).abs() < 1e-12);
        assert_eq!(parse_grid("0:1:3:linspace").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_grid("1:2:3").is_err());
        assert!(parse_grid("0:1:3:logspace").is_err());
        assert!(parse_grid("1:2:0:logspace").is_err());
    }

    #[test]
    fn flags_override_json() {
        let json: Params =
            serde_json::from_str(r#"{"n": 2, "N": 40, "eps": 0.5, "J": 2.0}"#).unwrap();
        let cli = Params {
            n: Some(3),
            ..Default::default()
        };
        let merged = json.overlay(cli);
        assert_eq!(merged.n, Some(3));
        assert_eq!(merged.dim, Some(40));
        assert_eq!(merged.coupling, Some(2.0));
        assert!(serde_json::from_str::<Params>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn preconditions_checked_up_front() {
        let p = |s: &str| serde_json::from_str::<Params>(s).unwrap();
        assert!(RunConfig::resolve(CommandKind::FnEval, p(r#"{"eps": 1.0}"#)).is_ok());
        assert!(RunConfig::resolve(CommandKind::FnEval, p(r#"{}"#)).is_err());
        assert!(RunConfig::resolve(CommandKind::FnEval, p(r#"{"eps": 1e-9}"#)).is_err());
        assert!(RunConfig::resolve(CommandKind::FnEval, p(r#"{"eps": 1, "n": 9}"#)).is_err());
        assert!(
            RunConfig::resolve(CommandKind::McRatio, p(r#"{"N": 4, "n": 2, "delta": 1}"#)).is_err()
        );
        assert!(RunConfig::resolve(
            CommandKind::McRatio,
            p(r#"{"N": 5, "n": 2, "delta": 1, "samples": 100}"#)
        )
        .is_ok());
        assert!(RunConfig::resolve(
            CommandKind::McRatio,
            p(r#"{"N": 5, "n": 2, "samples": 100}"#)
        )
        .is_err());
        assert!(
            RunConfig::resolve(CommandKind::McK1, p(r#"{"N": 5, "mu": 2, "delta": 1}"#)).is_err()
        );
        assert!(RunConfig::resolve(CommandKind::ClusterScan, p(r#"{"eps": 2, "X": 1}"#)).is_err());
        assert!(RunConfig::resolve(CommandKind::Validate, p(r#"{"criteria": [12]}"#)).is_err());
    }

    #[test]
    fn delta_from_eps() {
        let p: Params =
            serde_json::from_str(r#"{"N": 200, "eps": 1.4142135623730951, "samples": 100}"#)
                .unwrap();
        let cfg = RunConfig::resolve(CommandKind::McRatio, p).unwrap();
        assert!((cfg.effective_delta().unwrap() - 0.005).abs() < 1e-15);
    }
}

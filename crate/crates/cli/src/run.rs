//! Command dispatch: turns a [`RunConfig`] into result records.

use std::time::Instant;

use charpoly_core::acceptance;
use charpoly_core::asymptotics::{crossover_fit, large_eps_law, small_eps_law};
use charpoly_core::fneval::{
    cluster_integral, fn_goe_pfaffian, fn_goe_quadrature, fn_gue, FnEvaluation, FnMethod,
    QUADRATURE_MAX_ORDER,
};
use charpoly_core::moments::{estimate_k1, predicted_ratio, ratio_parts, saddle_point_k1};
use charpoly_core::rmt::{epsilon_from_params, GoeConfig, SpectralParams};

use crate::cache::{CacheKey, FnCache};
use crate::config::{CommandKind, Ensemble, MethodChoice, RunConfig};
use crate::records::ResultRecord;

#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<ResultRecord>,
    /// Rows that carry an error.
    pub errors: usize,
    pub exit_code: i32,
    pub cache_hits: usize,
    pub cache_misses: usize,
}

/// Method actually used for `(ensemble, n)` under `choice`.
pub fn resolve_method(ensemble: Ensemble, n: usize, choice: MethodChoice) -> FnMethod {
    match (choice, ensemble) {
        (MethodChoice::Fixed(m), _) => m,
        (MethodChoice::Auto, Ensemble::Goe) if n <= QUADRATURE_MAX_ORDER => FnMethod::Quadrature,
        (MethodChoice::Auto, Ensemble::Goe) => FnMethod::Pfaffian,
        (MethodChoice::Auto, Ensemble::Gue) => FnMethod::ClosedForm,
    }
}

fn ensemble_name(e: Ensemble) -> &'static str {
    match e {
        Ensemble::Goe => "goe",
        Ensemble::Gue => "gue",
    }
}

fn compute_fn(
    ensemble: Ensemble,
    n: usize,
    eps: f64,
    method: FnMethod,
    tol: f64,
) -> charpoly_core::Result<FnEvaluation> {
    match (ensemble, method) {
        (Ensemble::Goe, FnMethod::Pfaffian) => fn_goe_pfaffian(n, eps),
        (Ensemble::Goe, _) => fn_goe_quadrature(n, eps, tol),
        (Ensemble::Gue, m) => fn_gue(n, eps, m),
    }
}

/// `F_n(ε)`, served from the cache when possible.
pub fn evaluate_fn(
    cfg: &RunConfig,
    eps: f64,
    cache: Option<&FnCache>,
) -> charpoly_core::Result<FnEvaluation> {
    let method = resolve_method(cfg.ensemble, cfg.n, cfg.method);
    let key = CacheKey::new(
        ensemble_name(cfg.ensemble),
        cfg.n,
        eps,
        method.as_str(),
        cfg.tol,
    );
    if let Some(hit) = cache.and_then(|c| c.lookup(&key)) {
        return Ok(hit);
    }
    let ev = compute_fn(cfg.ensemble, cfg.n, eps, method, cfg.tol)?;
    if let Some(c) = cache {
        if let Err(e) = c.store(&key, &ev) {
            log::warn!("cache store failed for {}: {e}", key.as_str());
        }
    }
    Ok(ev)
}

fn base_record(cfg: &RunConfig) -> ResultRecord {
    ResultRecord {
        command: cfg.command.name().to_string(),
        n: Some(cfg.n as u64),
        tol: Some(cfg.tol),
        ..Default::default()
    }
}

fn error_record(mut r: ResultRecord, err: impl std::fmt::Display) -> ResultRecord {
    r.value_re = f64::NAN;
    r.value_im = f64::NAN;
    r.abs_error = f64::NAN;
    r.error = Some(err.to_string());
    r
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn fn_row(cfg: &RunConfig, eps: f64, cache: Option<&FnCache>) -> ResultRecord {
    let t = Instant::now();
    let mut r = base_record(cfg);
    r.eps = Some(eps);
    r.method = resolve_method(cfg.ensemble, cfg.n, cfg.method)
        .as_str()
        .to_string();
    let mut r = match evaluate_fn(cfg, eps, cache) {
        Ok(ev) => {
            r.method = ev.method.as_str().to_string();
            r.value_re = ev.value;
            r.abs_error = ev.abs_error;
            r
        }
        Err(e) => error_record(r, e),
    };
    r.wall_ms = elapsed_ms(t);
    r
}

fn asymp_rows(cfg: &RunConfig, cache: Option<&FnCache>) -> Vec<ResultRecord> {
    let mut rows = Vec::new();
    let mut points = Vec::new();
    let laws = [small_eps_law(cfg.n), large_eps_law(cfg.n)];
    for &eps in &cfg.eps_grid {
        let row = fn_row(cfg, eps, cache);
        if row.error.is_none() {
            points.push((eps, row.value_re));
        }
        rows.push(row);
        for (law, name) in laws.iter().zip(["small_eps_law", "large_eps_law"]) {
            let mut r = base_record(cfg);
            r.eps = Some(eps);
            r.method = name.to_string();
            rows.push(match law {
                Ok(l) => {
                    r.value_re = l.evaluate(eps);
                    r.abs_error = 0.0;
                    r
                }
                Err(e) => error_record(r, e),
            });
        }
    }
    if points.len() >= 3 {
        let with_log = cfg.ensemble == Ensemble::Goe;
        match crossover_fit(&points, with_log) {
            Ok(fit) => log::info!(
                "fit over {} points: exponent {:.6}, constant {:.6}, offset {:.6}, rms residual {:.3e}",
                points.len(),
                fit.exponent,
                fit.constant,
                fit.offset,
                fit.residual
            ),
            Err(e) => log::warn!("crossover fit failed: {e}"),
        }
    }
    rows
}

fn mc_base(cfg: &RunConfig) -> ResultRecord {
    ResultRecord {
        dim: Some(cfg.dim as u64),
        coupling: Some(cfg.coupling),
        mu: Some(cfg.mu),
        omega: Some(cfg.omega),
        delta: cfg.effective_delta(),
        seed: Some(cfg.seed),
        stream: Some(cfg.stream),
        ..base_record(cfg)
    }
}

fn mc_setup(cfg: &RunConfig) -> charpoly_core::Result<(GoeConfig, SpectralParams, f64)> {
    let goe = GoeConfig::new(cfg.dim, cfg.coupling, cfg.seed, cfg.stream)?;
    let delta = cfg.effective_delta().unwrap_or(f64::NAN);
    let sp = SpectralParams::new(cfg.mu, cfg.omega, delta)?;
    let eps = epsilon_from_params(&goe, &sp)?;
    Ok((goe, sp, eps.re))
}

fn mc_ratio_rows(cfg: &RunConfig) -> Vec<ResultRecord> {
    let t = Instant::now();
    let mut r = mc_base(cfg);
    r.method = "monte_carlo".into();
    r.samples = Some(cfg.samples as u64);
    let (goe, sp, eps) = match mc_setup(cfg) {
        Ok(x) => x,
        Err(e) => return vec![error_record(r, e)],
    };
    r.eps = Some(eps);
    let mut rows = Vec::new();
    let mut mc = match ratio_parts(&goe, &sp, cfg.n, cfg.samples) {
        Ok(parts) => {
            let v = parts.ratio.value();
            r.value_re = v.re;
            r.value_im = v.im;
            r.abs_error = parts.ratio.stderr();
            if parts.ratio.heavy_tail {
                r.note = Some("heavy-tailed block means".into());
            }
            r
        }
        Err(e) => error_record(r, e),
    };
    mc.wall_ms = elapsed_ms(t);
    let pred_base = mc.clone();
    rows.push(mc);
    if cfg.omega == 0.0 {
        let t = Instant::now();
        let mut p = ResultRecord {
            method: "prediction".into(),
            samples: None,
            note: None,
            error: None,
            ..pred_base
        };
        let mut p = match predicted_ratio(&goe, &sp, cfg.n) {
            Ok(v) => {
                p.value_re = v.re;
                p.value_im = v.im;
                p.abs_error = 0.0;
                p
            }
            Err(e) => error_record(p, e),
        };
        p.wall_ms = elapsed_ms(t);
        rows.push(p);
    }
    rows
}

fn mc_k1_rows(cfg: &RunConfig) -> Vec<ResultRecord> {
    let t = Instant::now();
    let mut r = mc_base(cfg);
    r.method = "monte_carlo".into();
    r.samples = Some(cfg.samples as u64);
    let (goe, sp, eps) = match mc_setup(cfg) {
        Ok(x) => x,
        Err(e) => return vec![error_record(r, e)],
    };
    r.eps = Some(eps);
    let mut mc = match estimate_k1(&goe, &sp, cfg.n, cfg.samples) {
        Ok(est) => {
            let v = est.value();
            r.value_re = v.re;
            r.value_im = v.im;
            r.abs_error = est.stderr();
            if est.heavy_tail {
                r.note = Some("heavy-tailed block means".into());
            }
            r
        }
        Err(e) => error_record(r, e),
    };
    mc.wall_ms = elapsed_ms(t);
    let t = Instant::now();
    let mut s = ResultRecord {
        method: "saddle".into(),
        samples: None,
        note: None,
        error: None,
        ..mc.clone()
    };
    let mut s = match saddle_point_k1(&goe, &sp, cfg.n) {
        Ok(pred) => {
            let v = pred.value.to_complex();
            s.value_re = v.re;
            s.value_im = v.im;
            s.abs_error = 0.0;
            s
        }
        Err(e) => error_record(s, e),
    };
    s.wall_ms = elapsed_ms(t);
    vec![mc, s]
}

fn cluster_rows(cfg: &RunConfig) -> Vec<ResultRecord> {
    cfg.eps_grid
        .iter()
        .map(|&eps| {
            let t = Instant::now();
            let mut r = ResultRecord {
                command: cfg.command.name().to_string(),
                n: Some(cfg.p as u64),
                eps: Some(eps),
                p: Some(cfg.p as u64),
                k: Some(cfg.k),
                cutoff_x: Some(cfg.cutoff),
                ..Default::default()
            };
            let mut r = match cluster_integral(cfg.p, cfg.k, cfg.cutoff, eps) {
                Ok(c) => {
                    r.method = c.method.as_str().to_string();
                    r.value_re = c.i_value;
                    r.abs_error = c.abs_error;
                    r.note = Some(format!("m_exponent={}", c.m_exponent));
                    r
                }
                Err(e) => error_record(r, e),
            };
            r.wall_ms = elapsed_ms(t);
            r
        })
        .collect()
}

fn validate_rows(cfg: &RunConfig) -> Vec<ResultRecord> {
    cfg.criteria
        .iter()
        .map(|&id| {
            let o = acceptance::run_criterion(id);
            log::info!("{o}");
            ResultRecord {
                command: "validate".into(),
                n: Some(id as u64),
                method: format!("criterion_{id:02}"),
                value_re: if o.passed { 1.0 } else { 0.0 },
                value_im: 0.0,
                abs_error: 0.0,
                seed: Some(acceptance::ACCEPTANCE_SEED),
                wall_ms: o.elapsed.as_secs_f64() * 1e3,
                note: Some(format!("{} | {}", o.title, o.detail)),
                error: (!o.passed).then(|| o.detail.clone()),
                ..Default::default()
            }
        })
        .collect()
}

/// Runs the command. Exit code: point commands 0 iff no row failed, grid
/// commands 0 iff at least one row succeeded, `validate` 0 iff every
/// criterion passed.
pub fn run(cfg: &RunConfig, cache: Option<&FnCache>) -> RunOutcome {
    let records = match cfg.command {
        CommandKind::FnEval => vec![fn_row(cfg, cfg.eps.unwrap_or(f64::NAN), cache)],
        CommandKind::AsympScan => asymp_rows(cfg, cache),
        CommandKind::McRatio => mc_ratio_rows(cfg),
        CommandKind::McK1 => mc_k1_rows(cfg),
        CommandKind::ClusterScan => cluster_rows(cfg),
        CommandKind::Validate => validate_rows(cfg),
    };
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    let ok = if cfg.command.is_grid() {
        errors < records.len()
    } else {
        errors == 0
    };
    RunOutcome {
        errors,
        exit_code: if ok { 0 } else { 1 },
        cache_hits: cache.map_or(0, FnCache::hits),
        cache_misses: cache.map_or(0, FnCache::misses),
        records,
    }
}

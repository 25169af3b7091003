use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use charpoly_cli::records::{read_csv, read_json, COLUMNS};
use charpoly_cli::{run, CacheKey, CommandKind, FnCache, Params, RunConfig};
use charpoly_core::fneval::{FnEvaluation, FnMethod};

fn params(json: &str) -> Params {
    serde_json::from_str(json).unwrap()
}

fn resolve(kind: CommandKind, json: &str) -> RunConfig {
    RunConfig::resolve(kind, params(json)).unwrap()
}

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_charpoly"));
    c.env_remove("CHARPOLY_CACHE").env("RUST_LOG", "warn");
    c
}

#[test]
fn fn_eval_first_order() {
    let out = run(
        &resolve(
            CommandKind::FnEval,
            r#"{"n": 1, "eps": 1.0, "method": "quadrature", "tol": 1e-10}"#,
        ),
        None,
    );
    assert_eq!(out.exit_code, 0);
    let r = &out.records[0];
    assert_eq!(r.method, "quadrature");
    assert!(
        (r.value_re - 1.144_463_079_8).abs() < 1e-6,
        "{}",
        r.value_re
    );
}

#[test]
fn mc_ratio_is_reproducible() {
    let json = r#"{"N": 5, "n": 2, "samples": 100, "delta": 0.1, "seed": 7}"#;
    let a = run(&resolve(CommandKind::McRatio, json), None);
    let b = run(&resolve(CommandKind::McRatio, json), None);
    assert_eq!(a.exit_code, 0);
    assert_eq!(a.records.len(), 2);
    assert_eq!(
        a.records[0].value_re.to_bits(),
        b.records[0].value_re.to_bits()
    );
    assert_eq!(
        a.records[0].abs_error.to_bits(),
        b.records[0].abs_error.to_bits()
    );
    assert_eq!(a.records[1].method, "prediction");
}

#[test]
fn mc_ratio_rejects_small_inputs() {
    let p = params(r#"{"N": 1, "n": 2, "samples": 10, "delta": 0.1}"#);
    assert!(RunConfig::resolve(CommandKind::McRatio, p).is_err());
}

#[test]
fn mc_k1_has_saddle_row() {
    let out = run(
        &resolve(
            CommandKind::McK1,
            r#"{"N": 20, "n": 1, "samples": 200, "eps": 1.0}"#,
        ),
        None,
    );
    assert_eq!(out.exit_code, 0);
    assert_eq!(out.records[1].method, "saddle");
    assert!(out.records.iter().all(|r| r.value_re.is_finite()));
}

#[test]
fn warm_cache_grid_recomputes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = resolve(
        CommandKind::AsympScan,
        r#"{"n": 2, "eps_grid": "0.1:10:5:logspace"}"#,
    );
    let cold = FnCache::open(dir.path()).unwrap();
    let first = run(&cfg, Some(&cold));
    assert_eq!((first.cache_hits, first.cache_misses), (0, 5));
    let warm = FnCache::open(dir.path()).unwrap();
    let second = run(&cfg, Some(&warm));
    assert_eq!((second.cache_hits, second.cache_misses), (5, 0));
    let vals = |o: &charpoly_cli::RunOutcome| -> Vec<u64> {
        o.records.iter().map(|r| r.value_re.to_bits()).collect()
    };
    assert_eq!(vals(&first), vals(&second));
    assert_eq!(first.records.len(), 15);
}

#[test]
fn concurrent_writers_leave_one_valid_entry() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Arc::new(FnCache::open(dir.path()).unwrap());
    let key = CacheKey::new("goe", 3, 0.5, "quadrature", 1e-8);
    let ev = FnEvaluation {
        n_order: 3,
        epsilon: 0.5,
        value: 42.0,
        abs_error: 1e-7,
        method: FnMethod::Quadrature,
    };
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let (c, k) = (Arc::clone(&cache), key.clone());
            std::thread::spawn(move || {
                for _ in 0..20 {
                    c.store(&k, &ev).unwrap();
                    if let Some(got) = c.lookup(&k) {
                        assert_eq!(got, ev);
                    }
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
    assert_eq!(cache.lookup(&key), Some(ev));
}

#[test]
fn cluster_scan_puts_p_in_n() {
    let out = run(
        &resolve(
            CommandKind::ClusterScan,
            r#"{"p": 2, "k": 2, "X": 1, "eps_grid": "1e-3:1e-1:3:logspace"}"#,
        ),
        None,
    );
    assert_eq!(out.exit_code, 0);
    assert!(out
        .records
        .iter()
        .all(|r| r.n == Some(2) && r.value_re > 0.0));
}

#[test]
fn validate_subset() {
    let out = run(
        &resolve(CommandKind::Validate, r#"{"criteria": [2, 10]}"#),
        None,
    );
    assert_eq!(out.exit_code, 0);
    assert_eq!(out.records.len(), 2);
    assert!(out.records.iter().all(|r| r.value_re == 1.0));
}

fn read_file(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn binary_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    let st = bin()
        .args(["fn-eval", "--n", "1", "--eps", "1.0", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let text = read_file(&out);
    assert_eq!(text.lines().count(), 2);
    assert_eq!(text.lines().next().unwrap(), COLUMNS.join(","));
    let recs = read_csv(text.as_bytes()).unwrap();
    assert!((recs[0].value_re - 1.144_463_079_8).abs() < 1e-6);
}

#[test]
fn binary_json_and_config_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 3, "eps": 1.0, "format": "json"}"#).unwrap();
    let out = dir.path().join("f.json");
    let st = bin()
        .args(["fn-eval", "--n", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(st.success());
    let recs = read_json(read_file(&out).as_bytes()).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].n, Some(1));
    assert_eq!(recs[0].tol, Some(1e-8));
}

#[test]
fn binary_exit_codes() {
    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code();
    assert_eq!(code(&["fn-eval", "--n", "1"]), Some(2));
    assert_eq!(code(&["fn-eval", "--n", "1", "--eps", "1e-9"]), Some(2));
    assert_eq!(
        code(&[
            "mc-ratio",
            "--N",
            "1",
            "--n",
            "2",
            "--samples",
            "10",
            "--delta",
            "0.1"
        ]),
        Some(2)
    );
    assert_eq!(code(&["bogus"]), Some(2));
    assert_eq!(code(&["validate", "--criteria", "10"]), Some(0));
}

#[test]
fn binary_cache_env() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .env("CHARPOLY_CACHE", dir.path())
        .args(["fn-eval", "--n", "2", "--eps", "0.5", "--out", "-"])
        .output()
        .unwrap();
    assert!(st.status.success());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

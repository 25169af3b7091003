//! On-disk cache of central-integral evaluations.
//!
//! One JSON file per key, named by the SHA-256 of the canonical key string.
//! Stores go through a temporary file in the same directory followed by a
//! rename, so readers never see a partial entry and concurrent writers of the
//! same key leave exactly one complete file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use charpoly_core::fneval::{FnEvaluation, FnMethod};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey(String);

impl CacheKey {
    /// Canonical key: ensemble, order, ε to 17 significant digits, method, tolerance.
    pub fn new(ensemble: &str, n: usize, eps: f64, method: &str, tol: f64) -> Self {
        Self(format!(
            "{}|n={n}|eps={eps:.16e}|method={method}|tol={tol:.16e}",
            ensemble.to_ascii_lowercase()
        ))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.0.as_bytes()))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    key: String,
    n_order: usize,
    epsilon: f64,
    value: f64,
    abs_error: f64,
    method: String,
}

#[derive(Debug)]
pub struct FnCache {
    dir: PathBuf,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl FnCache {
    pub fn open(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.digest()))
    }

    /// Exact-match lookup. Unreadable or mismatched entries count as misses.
    pub fn lookup(&self, key: &CacheKey) -> Option<FnEvaluation> {
        let path = self.path_for(key);
        let found = match fs::read_to_string(&path) {
            Ok(text) => match parse_entry(&text, key) {
                Ok(ev) => Some(ev),
                Err(why) => {
                    log::warn!("ignoring corrupt cache entry {}: {why}", path.display());
                    None
                }
            },
            Err(_) => None,
        };
        if found.is_some() {
            self.hits.fetch_add(1, Ordering::Relaxed);
        } else {
            self.misses.fetch_add(1, Ordering::Relaxed);
        }
        found
    }

    pub fn store(&self, key: &CacheKey, ev: &FnEvaluation) -> std::io::Result<()> {
        let entry = Entry {
            key: key.as_str().to_string(),
            n_order: ev.n_order,
            epsilon: ev.epsilon,
            value: ev.value,
            abs_error: ev.abs_error,
            method: ev.method.as_str().to_string(),
        };
        let body = serde_json::to_vec(&entry).map_err(std::io::Error::other)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(&body)?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.path_for(key)).map_err(|e| e.error)?;
        Ok(())
    }
}

fn parse_entry(text: &str, key: &CacheKey) -> Result<FnEvaluation, String> {
    let e: Entry = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if e.key != key.as_str() {
        return Err(format!("key mismatch: stored '{}'", e.key));
    }
    let method: FnMethod = e
        .method
        .parse()
        .map_err(|x: charpoly_core::Error| x.to_string())?;
    Ok(FnEvaluation {
        n_order: e.n_order,
        epsilon: e.epsilon,
        value: e.value,
        abs_error: e.abs_error,
        method,
    })
}

//! Run directory layout and batch checkpoints.
//!
//! A run lives at `<out>/runs/<run-id>/` with one directory per completed
//! batch: `batch-<i>/{chains.jsonl, pool.jsonl, metrics.json}`. Report files
//! land at the run root. A lock file guards against concurrent runs in one
//! directory, and an interrupted run resumes at the first missing batch.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::{load_chains, save_chains};
use crate::error::{Error, Result};
use crate::metrics::{MetricBundle, PhaseEfficiency, RetrievalEvent};
use crate::pool::ExperiencePool;
use crate::propagation::{BatchResult, EliminationAccounting, RunConfig, ShortcutGain};
use crate::report::RunReport;

/// Serialized per-batch sidecar (everything a resume needs beyond the chain
/// log and the acquisition pool).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchRecord {
    pub ordinal: u32,
    pub tasks_total: usize,
    pub tasks_failed: usize,
    pub shortcut_gains: Vec<ShortcutGain>,
    pub acquisition_failures: usize,
    pub active_size: usize,
    pub active_by_origin: BTreeMap<u32, usize>,
    pub active_ids: Vec<String>,
    pub batch_freq: BTreeMap<String, u64>,
    pub retrieval_events: Vec<RetrievalEvent>,
    pub hit_ratio: f64,
    pub metrics: MetricBundle,
    pub efficiency: PhaseEfficiency,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elimination: Option<EliminationAccounting>,
}

impl From<&BatchResult> for BatchRecord {
    fn from(result: &BatchResult) -> Self {
        BatchRecord {
            ordinal: result.ordinal,
            tasks_total: result.tasks_total,
            tasks_failed: result.tasks_failed,
            shortcut_gains: result.shortcut_gains.clone(),
            acquisition_failures: result.acquisition_failures,
            active_size: result.active_size,
            active_by_origin: result.active_by_origin.clone(),
            active_ids: result.active_ids.clone(),
            batch_freq: result.batch_freq.clone(),
            retrieval_events: result.retrieval_events.clone(),
            hit_ratio: result.hit_ratio,
            metrics: result.metrics.clone(),
            efficiency: result.efficiency,
            elimination: result.elimination.clone(),
        }
    }
}

/// Derives the run id from the run inputs, so reruns of identical inputs
/// land in the same directory with identical bytes.
pub fn run_id(config: &RunConfig, extra_inputs: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_string(config).expect("config serializes").as_bytes());
    for input in extra_inputs {
        hasher.update([0u8]);
        hasher.update(input);
    }
    let digest = hasher.finalize();
    digest
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Handle on one run's directory tree.
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    /// Opens (creating if needed) `<out>/runs/<run-id>/`.
    pub fn open(out_dir: &Path, run_id: &str) -> Result<Self> {
        let root = out_dir.join("runs").join(run_id);
        fs::create_dir_all(&root)?;
        Ok(Self { root })
    }

    /// Wraps an existing run directory without creating anything.
    pub fn at(root: PathBuf) -> Self {
        Self { root }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn batch_dir(&self, ordinal: u32) -> PathBuf {
        self.root.join(format!("batch-{ordinal}"))
    }

    /// Acquires the run lock. Fails when another process holds it.
    pub fn lock(&self) -> Result<RunLock> {
        let path = self.root.join("run.lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(RunLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Config(format!(
                "run directory {} is locked (run.lock present); \
                 remove the lock if no run is in progress",
                self.root.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes chains.jsonl, pool.jsonl, and metrics.json for one batch.
    /// The batch directory only appears complete once all three exist.
    pub fn save_batch(&self, result: &BatchResult) -> Result<()> {
        let dir = self.batch_dir(result.ordinal);
        fs::create_dir_all(&dir)?;
        save_chains(&dir.join("chains.jsonl"), &result.chains)?;
        result.acquired.save(&dir.join("pool.jsonl"))?;
        let record = BatchRecord::from(result);
        let mut json = serde_json::to_string_pretty(&record)
            .map_err(|e| Error::InvalidState(format!("batch record serialization: {e}")))?;
        json.push('\n');
        fs::write(dir.join("metrics.json"), json)?;
        Ok(())
    }

    fn batch_complete(&self, ordinal: u32) -> bool {
        let dir = self.batch_dir(ordinal);
        ["chains.jsonl", "pool.jsonl", "metrics.json"]
            .iter()
            .all(|f| dir.join(f).is_file())
    }

    /// Loads one completed batch back into a `BatchResult`.
    pub fn load_batch(&self, ordinal: u32) -> Result<BatchResult> {
        let dir = self.batch_dir(ordinal);
        let chains = load_chains(&dir.join("chains.jsonl"))?;
        let acquired = ExperiencePool::load(&dir.join("pool.jsonl"))?;
        let raw = fs::read_to_string(dir.join("metrics.json"))?;
        let record: BatchRecord = serde_json::from_str(&raw).map_err(|e| Error::Parse {
            path: dir.join("metrics.json").display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        Ok(BatchResult {
            ordinal: record.ordinal,
            chains,
            tasks_total: record.tasks_total,
            tasks_failed: record.tasks_failed,
            acquired,
            shortcut_gains: record.shortcut_gains,
            acquisition_failures: record.acquisition_failures,
            active_size: record.active_size,
            active_by_origin: record.active_by_origin,
            active_ids: record.active_ids,
            batch_freq: record.batch_freq,
            retrieval_events: record.retrieval_events,
            hit_ratio: record.hit_ratio,
            metrics: record.metrics,
            efficiency: record.efficiency,
            elimination: record.elimination,
        })
    }

    /// Loads the longest consecutive prefix of completed batches.
    pub fn load_completed(&self, n_batches: u32) -> Result<Vec<BatchResult>> {
        let mut results = Vec::new();
        for ordinal in 1..=n_batches {
            if !self.batch_complete(ordinal) {
                break;
            }
            results.push(self.load_batch(ordinal)?);
        }
        Ok(results)
    }

    /// Ordinals of completed batches, consecutive or not (for reporting gaps).
    pub fn completed_ordinals(&self, n_batches: u32) -> Vec<u32> {
        (1..=n_batches).filter(|&o| self.batch_complete(o)).collect()
    }

    /// Writes report.json, report.txt, and utilization.csv at the run root.
    pub fn write_report(&self, report: &RunReport) -> Result<()> {
        fs::write(self.root.join("report.json"), report.to_json())?;
        fs::write(self.root.join("report.txt"), report.to_text_table())?;
        fs::write(self.root.join("utilization.csv"), report.utilization_csv())?;
        Ok(())
    }
}

/// Held for the duration of a run; releasing removes the lock file.
pub struct RunLock {
    path: PathBuf,
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_id_is_deterministic_and_input_sensitive() {
        let config = RunConfig::default();
        let a = run_id(&config, &[b"corpus-bytes"]);
        let b = run_id(&config, &[b"corpus-bytes"]);
        assert_eq!(a, b);
        assert_eq!(a.len(), 16);
        let c = run_id(&config, &[b"other-corpus"]);
        assert_ne!(a, c);
        let config2 = RunConfig {
            seed: 99,
            ..RunConfig::default()
        };
        assert_ne!(a, run_id(&config2, &[b"corpus-bytes"]));
    }

    #[test]
    fn lock_excludes_and_releases() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunDir::open(dir.path(), "abc").unwrap();
        let lock = run.lock().unwrap();
        assert!(matches!(run.lock(), Err(Error::Config(_))));
        drop(lock);
        let again = run.lock().unwrap();
        drop(again);
    }

    #[test]
    fn incomplete_batch_dirs_do_not_count() {
        let dir = tempfile::tempdir().unwrap();
        let run = RunDir::open(dir.path(), "abc").unwrap();
        fs::create_dir_all(run.root().join("batch-1")).unwrap();
        fs::write(run.root().join("batch-1/chains.jsonl"), "").unwrap();
        assert!(run.load_completed(3).unwrap().is_empty());
        assert!(run.completed_ordinals(3).is_empty());
    }
}

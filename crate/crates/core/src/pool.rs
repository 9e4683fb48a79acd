//! Experience pools.
//!
//! Records come in two kinds: solution→instruction (what the instructive
//! agent knows) and instruction→solution (what the responsive agent knows).
//! A pool serves exact top-k cosine retrieval over unit-norm key embeddings
//! with per-record usage counters, merges with other pools by record id, and
//! persists to JSON Lines deterministically.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backends::{cosine_similarity, Embedder};
use crate::error::{Error, Result};

const POOL_FORMAT_VERSION: u32 = 1;
const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// Which agent role a record serves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RecordKind {
    /// Key is a solution text, value the instruction that improved it.
    S2I,
    /// Key is an instruction text, value the solution that answered it.
    I2S,
}

/// One retrievable key-value experience.
#[derive(Debug)]
pub struct ExperienceRecord {
    /// Stable content digest of (kind, key_text, value_text).
    pub id: String,
    pub kind: RecordKind,
    pub key_text: String,
    pub value_text: String,
    /// Unit-norm embedding of `key_text`.
    pub key_embedding: Vec<f64>,
    /// Information gain of the originating shortcut, in [−1, 1].
    pub gain: f64,
    freq: AtomicU64,
    pub origin_batch: u32,
    pub origin_task: String,
    /// Insertion ordinal assigned by the pool; breaks retrieval ties.
    pub created_ord: u64,
}

impl ExperienceRecord {
    pub fn new(
        kind: RecordKind,
        key_text: impl Into<String>,
        value_text: impl Into<String>,
        key_embedding: Vec<f64>,
        gain: f64,
        origin_batch: u32,
        origin_task: impl Into<String>,
    ) -> Self {
        let key_text = key_text.into();
        let value_text = value_text.into();
        Self {
            id: record_id(kind, &key_text, &value_text),
            kind,
            key_text,
            value_text,
            key_embedding,
            gain,
            freq: AtomicU64::new(0),
            origin_batch,
            origin_task: origin_task.into(),
            created_ord: 0,
        }
    }

    /// Times this record has been returned from retrieval.
    pub fn freq(&self) -> u64 {
        self.freq.load(Ordering::SeqCst)
    }

    fn clone_with_freq(&self, freq: u64) -> Self {
        Self {
            id: self.id.clone(),
            kind: self.kind,
            key_text: self.key_text.clone(),
            value_text: self.value_text.clone(),
            key_embedding: self.key_embedding.clone(),
            gain: self.gain,
            freq: AtomicU64::new(freq),
            origin_batch: self.origin_batch,
            origin_task: self.origin_task.clone(),
            created_ord: self.created_ord,
        }
    }
}

impl Clone for ExperienceRecord {
    fn clone(&self) -> Self {
        self.clone_with_freq(self.freq())
    }
}

impl PartialEq for ExperienceRecord {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.kind == other.kind
            && self.key_text == other.key_text
            && self.value_text == other.value_text
            && self.key_embedding == other.key_embedding
            && self.gain == other.gain
            && self.freq() == other.freq()
            && self.origin_batch == other.origin_batch
            && self.origin_task == other.origin_task
            && self.created_ord == other.created_ord
    }
}

/// Content digest identifying a record independent of provenance.
pub fn record_id(kind: RecordKind, key_text: &str, value_text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(match kind {
        RecordKind::S2I => b"S2I\0",
        RecordKind::I2S => b"I2S\0",
    });
    hasher.update(key_text.as_bytes());
    hasher.update(b"\0");
    hasher.update(value_text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Retrievable collection of experience records of both kinds.
#[derive(Debug, Default)]
pub struct ExperiencePool {
    dimension: usize,
    records: Vec<Arc<ExperienceRecord>>,
    by_id: HashMap<String, usize>,
    next_ord: u64,
}

impl ExperiencePool {
    pub fn new(dimension: usize) -> Self {
        Self {
            dimension,
            records: Vec::new(),
            by_id: HashMap::new(),
            next_ord: 0,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Arc<ExperienceRecord>] {
        &self.records
    }

    pub fn get(&self, id: &str) -> Option<&Arc<ExperienceRecord>> {
        self.by_id.get(id).map(|&i| &self.records[i])
    }

    /// Adds records, assigning insertion ordinals. Re-ingesting an id already
    /// present is a no-op, so ingestion is idempotent. Returns the number of
    /// records actually added.
    pub fn ingest(&mut self, records: Vec<ExperienceRecord>) -> Result<usize> {
        let mut added = 0;
        for mut record in records {
            if record.key_embedding.len() != self.dimension {
                return Err(Error::InvalidArgument(format!(
                    "record {} has dimension {} but pool expects {}",
                    record.id,
                    record.key_embedding.len(),
                    self.dimension
                )));
            }
            let norm: f64 = record.key_embedding.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
                return Err(Error::InvalidArgument(format!(
                    "record {} embedding norm {norm} is not unit",
                    record.id
                )));
            }
            if self.by_id.contains_key(&record.id) {
                continue;
            }
            record.created_ord = self.next_ord;
            self.next_ord += 1;
            self.by_id.insert(record.id.clone(), self.records.len());
            self.records.push(Arc::new(record));
            added += 1;
        }
        Ok(added)
    }

    /// Inserts records that already carry their `created_ord` (used when
    /// rebuilding active pools from stored acquisitions, preserving the
    /// original tie-breaking order). Duplicated ids are skipped.
    pub fn ingest_preserving_ord(&mut self, records: Vec<ExperienceRecord>) -> Result<usize> {
        let mut added = 0;
        for record in records {
            if record.key_embedding.len() != self.dimension {
                return Err(Error::InvalidArgument(format!(
                    "record {} has dimension {} but pool expects {}",
                    record.id,
                    record.key_embedding.len(),
                    self.dimension
                )));
            }
            if self.by_id.contains_key(&record.id) {
                continue;
            }
            self.next_ord = self.next_ord.max(record.created_ord + 1);
            self.by_id.insert(record.id.clone(), self.records.len());
            self.records.push(Arc::new(record));
            added += 1;
        }
        Ok(added)
    }

    /// Exact top-k retrieval: descending cosine similarity between the query
    /// embedding and each key embedding of the requested kind; ties break by
    /// ascending insertion ordinal, then id. Every returned record's usage
    /// counter is incremented. An empty pool yields an empty list without
    /// invoking the embedder.
    pub fn retrieve(
        &self,
        kind: RecordKind,
        query_text: &str,
        k: usize,
        embedder: &dyn Embedder,
    ) -> Result<Vec<Arc<ExperienceRecord>>> {
        if k == 0 {
            return Err(Error::InvalidArgument("retrieval k must be >= 1".into()));
        }
        if self.records.is_empty() {
            return Ok(Vec::new());
        }
        if embedder.dimension() != self.dimension {
            return Err(Error::InvalidArgument(format!(
                "embedder dimension {} does not match pool dimension {}",
                embedder.dimension(),
                self.dimension
            )));
        }
        let query = embedder.embed(query_text)?;
        let mut scored: Vec<(f64, &Arc<ExperienceRecord>)> = self
            .records
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| (cosine_similarity(&query, &r.key_embedding), r))
            .collect();
        scored.sort_by(|(sa, ra), (sb, rb)| {
            sb.total_cmp(sa)
                .then(ra.created_ord.cmp(&rb.created_ord))
                .then(ra.id.cmp(&rb.id))
        });
        let hits: Vec<Arc<ExperienceRecord>> = scored
            .into_iter()
            .take(k)
            .map(|(_, r)| Arc::clone(r))
            .collect();
        for hit in &hits {
            hit.freq.fetch_add(1, Ordering::SeqCst);
        }
        Ok(hits)
    }

    /// Fraction of records retrieved at least once.
    pub fn hit_ratio(&self) -> Result<f64> {
        if self.records.is_empty() {
            return Err(Error::UndefinedRatio(
                "hit ratio of an empty pool".into(),
            ));
        }
        let hit = self.records.iter().filter(|r| r.freq() > 0).count();
        Ok(hit as f64 / self.records.len() as f64)
    }

    /// Total retrieval-return events recorded by this pool's counters.
    pub fn freq_total(&self) -> u64 {
        self.records.iter().map(|r| r.freq()).sum()
    }

    /// Nonzero usage counters keyed by record id.
    pub fn freq_snapshot(&self) -> BTreeMap<String, u64> {
        self.records
            .iter()
            .filter(|r| r.freq() > 0)
            .map(|r| (r.id.clone(), r.freq()))
            .collect()
    }

    /// Zeroes every usage counter (used when stored acquisitions become a
    /// batch's active pool, so counters measure that batch alone).
    pub fn reset_freqs(&mut self) {
        for record in &self.records {
            record.freq.store(0, Ordering::SeqCst);
        }
    }

    /// Set-union by record id across pools of identical dimension. The first
    /// occurrence of an id wins its fields (including insertion ordinal);
    /// the usage counter becomes the maximum across inputs.
    pub fn merge(pools: &[&ExperiencePool]) -> Result<ExperiencePool> {
        let first = pools
            .first()
            .ok_or_else(|| Error::InvalidArgument("merge of zero pools".into()))?;
        let dimension = first.dimension;
        if pools.iter().any(|p| p.dimension != dimension) {
            return Err(Error::InvalidArgument(
                "merged pools must share one embedding dimension".into(),
            ));
        }
        let mut merged = ExperiencePool::new(dimension);
        let mut max_freq: HashMap<String, u64> = HashMap::new();
        for pool in pools {
            for record in &pool.records {
                let entry = max_freq.entry(record.id.clone()).or_insert(0);
                *entry = (*entry).max(record.freq());
                if merged.by_id.contains_key(&record.id) {
                    continue;
                }
                merged.next_ord = merged.next_ord.max(record.created_ord + 1);
                merged
                    .by_id
                    .insert(record.id.clone(), merged.records.len());
                merged.records.push(Arc::new((**record).clone()));
            }
        }
        for record in &merged.records {
            record
                .freq
                .store(max_freq[&record.id], Ordering::SeqCst);
        }
        Ok(merged)
    }

    /// Writes the pool: a header line with format version and dimension,
    /// then one record per line sorted by insertion ordinal (id as a
    /// tiebreaker), so identical pools always serialize byte-identically.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        let header = PoolHeader {
            version: POOL_FORMAT_VERSION,
            dimension: self.dimension,
        };
        writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
        let mut sorted: Vec<&Arc<ExperienceRecord>> = self.records.iter().collect();
        sorted.sort_by(|a, b| a.created_ord.cmp(&b.created_ord).then(a.id.cmp(&b.id)));
        for record in sorted {
            let line = PoolLine {
                id: record.id.clone(),
                kind: record.kind,
                key_text: record.key_text.clone(),
                value_text: record.value_text.clone(),
                key_embedding: record.key_embedding.clone(),
                gain: record.gain,
                freq: record.freq(),
                origin_batch: record.origin_batch,
                origin_task: record.origin_task.clone(),
                created_ord: record.created_ord,
            };
            writeln!(out, "{}", serde_json::to_string(&line).expect("record serializes"))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ExperiencePool> {
        let file = File::open(path)?;
        let reader = BufReader::new(file);
        let mut lines = reader.lines().enumerate();

        let (_, header_line) = lines.next().ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            line: 1,
            message: "missing header line".into(),
        })?;
        let header_line = header_line?;
        let header: PoolHeader =
            serde_json::from_str(&header_line).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: 1,
                message: format!("bad header: {e}"),
            })?;
        if header.version != POOL_FORMAT_VERSION {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: 1,
                message: format!("unsupported pool format version {}", header.version),
            });
        }

        let mut pool = ExperiencePool::new(header.dimension);
        for (lineno, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: PoolLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
            if parsed.key_embedding.len() != header.dimension {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: format!(
                        "embedding dimension {} does not match header {}",
                        parsed.key_embedding.len(),
                        header.dimension
                    ),
                });
            }
            if pool.by_id.contains_key(&parsed.id) {
                return Err(Error::Parse {
                    path: path.display().to_string(),
                    line: lineno + 1,
                    message: format!("duplicate record id {}", parsed.id),
                });
            }
            let record = ExperienceRecord {
                id: parsed.id,
                kind: parsed.kind,
                key_text: parsed.key_text,
                value_text: parsed.value_text,
                key_embedding: parsed.key_embedding,
                gain: parsed.gain,
                freq: AtomicU64::new(parsed.freq),
                origin_batch: parsed.origin_batch,
                origin_task: parsed.origin_task,
                created_ord: parsed.created_ord,
            };
            pool.next_ord = pool.next_ord.max(record.created_ord + 1);
            pool.by_id.insert(record.id.clone(), pool.records.len());
            pool.records.push(Arc::new(record));
        }
        Ok(pool)
    }
}

impl PartialEq for ExperiencePool {
    fn eq(&self, other: &Self) -> bool {
        if self.dimension != other.dimension || self.records.len() != other.records.len() {
            return false;
        }
        let key = |r: &Arc<ExperienceRecord>| (r.created_ord, r.id.clone());
        let mut a: Vec<&Arc<ExperienceRecord>> = self.records.iter().collect();
        let mut b: Vec<&Arc<ExperienceRecord>> = other.records.iter().collect();
        a.sort_by_key(|r| key(r));
        b.sort_by_key(|r| key(r));
        a.iter().zip(b.iter()).all(|(x, y)| ***x == ***y)
    }
}

#[derive(Serialize, Deserialize)]
struct PoolHeader {
    version: u32,
    dimension: usize,
}

#[derive(Serialize, Deserialize)]
struct PoolLine {
    id: String,
    kind: RecordKind,
    key_text: String,
    value_text: String,
    key_embedding: Vec<f64>,
    gain: f64,
    freq: u64,
    origin_batch: u32,
    origin_task: String,
    created_ord: u64,
}

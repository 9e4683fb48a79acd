//! Experience elimination.
//!
//! Two independent prunes:
//!
//! - **Information gain**: a solution's score ω multiplies its similarity to
//!   the task text, its similarity to the chain's terminal solution, and a
//!   binary compile flag, each factor clamped to [0, 1]. A shortcut survives
//!   when ω(target) − ω(source) meets the ε threshold.
//! - **Usage frequency**: records sort by descending retrieval count; the
//!   head whose inclusive cumulative normalized frequency stays within θ
//!   survives, cutting the long tail.
//!
//! The combined schedule unions a gain-filtered pool from the previous batch
//! with a frequency-filtered pool from the batch before it.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::acquisition::Shortcut;
use crate::backends::{cosine_similarity, Embedder, Sandbox};
use crate::chain::Solution;
use crate::error::{Error, Result};
use crate::pool::{ExperiencePool, ExperienceRecord};

/// Per-solution quality score and its factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionScore {
    pub omega: f64,
    pub sim_task: f64,
    pub sim_terminal: f64,
    pub compiles: bool,
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Scores one solution against the task text and the chain's terminal
/// solution. A compile failure (including timeout) zeroes ω but is not
/// fatal; embedder failures are.
pub fn solution_score(
    solution: &Solution,
    task_text: &str,
    terminal: &Solution,
    embedder: &dyn Embedder,
    sandbox: &Sandbox,
) -> Result<SolutionScore> {
    // The empty initial solution has no embeddable content and nothing to
    // compile: every factor is zero.
    if solution.artifact.is_empty() {
        return Ok(SolutionScore {
            omega: 0.0,
            sim_task: 0.0,
            sim_terminal: 0.0,
            compiles: false,
        });
    }
    let compiles = match solution.compiled {
        Some(cached) => cached,
        None => sandbox.check_compile(&solution.artifact)?.0,
    };
    let own = embedder.embed(&solution.artifact.flatten())?;
    let task = embedder.embed(task_text)?;
    let sim_task = clamp01(cosine_similarity(&own, &task));
    let sim_terminal = if terminal.artifact.is_empty() {
        0.0
    } else {
        let term = embedder.embed(&terminal.artifact.flatten())?;
        clamp01(cosine_similarity(&own, &term))
    };
    let omega = sim_task * sim_terminal * if compiles { 1.0 } else { 0.0 };
    Ok(SolutionScore {
        omega,
        sim_task,
        sim_terminal,
        compiles,
    })
}

/// Memoizing scorer for one chain: endpoints repeat across shortcuts, and
/// compile checks are the expensive part.
pub struct ChainScorer<'a> {
    task_text: &'a str,
    terminal: &'a Solution,
    embedder: &'a dyn Embedder,
    sandbox: &'a Sandbox,
    cache: HashMap<String, SolutionScore>,
}

impl<'a> ChainScorer<'a> {
    pub fn new(
        task_text: &'a str,
        terminal: &'a Solution,
        embedder: &'a dyn Embedder,
        sandbox: &'a Sandbox,
    ) -> Self {
        Self {
            task_text,
            terminal,
            embedder,
            sandbox,
            cache: HashMap::new(),
        }
    }

    pub fn score(&mut self, solution: &Solution) -> Result<SolutionScore> {
        if let Some(score) = self.cache.get(&solution.id) {
            return Ok(*score);
        }
        let score = solution_score(
            solution,
            self.task_text,
            self.terminal,
            self.embedder,
            self.sandbox,
        )?;
        self.cache.insert(solution.id.clone(), score);
        Ok(score)
    }
}

/// Fills every shortcut's gain field with ω(target) − ω(source).
pub fn score_shortcuts(shortcuts: &mut [Shortcut], scorer: &mut ChainScorer) -> Result<()> {
    for shortcut in shortcuts.iter_mut() {
        let source = scorer.score(&shortcut.source)?;
        let target = scorer.score(&shortcut.target)?;
        shortcut.gain = Some(target.omega - source.omega);
    }
    Ok(())
}

/// Retains exactly the shortcuts whose gain is ≥ ε (inclusive). Every input
/// must already be scored.
pub fn gain_filter(shortcuts: Vec<Shortcut>, epsilon: f64) -> Result<Vec<Shortcut>> {
    let mut retained = Vec::new();
    for shortcut in shortcuts {
        let gain = shortcut.gain.ok_or_else(|| {
            Error::InvalidState(format!(
                "shortcut ({}, {}, {}) has no gain; score it first",
                shortcut.provenance.task_id,
                shortcut.provenance.source_index,
                shortcut.provenance.target_index
            ))
        })?;
        if gain >= epsilon {
            retained.push(shortcut);
        }
    }
    Ok(retained)
}

/// Result of a frequency cut.
#[derive(Debug, Clone)]
pub struct FrequencyCut {
    pub retained: Vec<Arc<ExperienceRecord>>,
    /// True when every candidate had zero frequency, so nothing could be
    /// ranked and the cut is empty by fiat.
    pub all_zero: bool,
}

/// Frequency fractile cut over explicit records and an explicit frequency
/// map (ids absent from the map count as zero). Records sort by descending
/// frequency with ties broken by ascending insertion ordinal then id; a
/// record at rank r survives iff the inclusive cumulative normalized
/// frequency through r is ≤ θ.
pub fn frequency_filter_by(
    records: &[Arc<ExperienceRecord>],
    freqs: &BTreeMap<String, u64>,
    theta: f64,
) -> Result<FrequencyCut> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "theta {theta} must lie in [0, 1]"
        )));
    }
    let freq_of = |r: &ExperienceRecord| freqs.get(&r.id).copied().unwrap_or(0);
    let total: u64 = records.iter().map(|r| freq_of(r)).sum();
    if total == 0 {
        return Ok(FrequencyCut {
            retained: Vec::new(),
            all_zero: true,
        });
    }
    let mut sorted: Vec<&Arc<ExperienceRecord>> = records.iter().collect();
    sorted.sort_by(|a, b| {
        freq_of(b)
            .cmp(&freq_of(a))
            .then(a.created_ord.cmp(&b.created_ord))
            .then(a.id.cmp(&b.id))
    });
    let mut retained = Vec::new();
    let mut cumulative: u64 = 0;
    for record in sorted {
        cumulative += freq_of(record);
        if cumulative as f64 / total as f64 <= theta {
            retained.push(Arc::clone(record));
        } else {
            break;
        }
    }
    Ok(FrequencyCut {
        retained,
        all_zero: false,
    })
}

/// Frequency cut over a pool's own usage counters.
pub fn frequency_filter(pool: &ExperiencePool, theta: f64) -> Result<FrequencyCut> {
    let freqs = pool.freq_snapshot();
    frequency_filter_by(pool.records(), &freqs, theta)
}

/// Set-union by record id of the gain-filtered and frequency-filtered sides,
/// preserving first-seen order.
pub fn combine(
    gain_side: &[Arc<ExperienceRecord>],
    freq_side: &[Arc<ExperienceRecord>],
) -> Vec<Arc<ExperienceRecord>> {
    let mut seen = std::collections::HashSet::new();
    let mut union = Vec::new();
    for record in gain_side.iter().chain(freq_side) {
        if seen.insert(record.id.clone()) {
            union.push(Arc::clone(record));
        }
    }
    union
}

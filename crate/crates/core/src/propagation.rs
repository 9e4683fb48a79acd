//! End-to-end run orchestration.
//!
//! Tasks partition into stratified batches; each batch runs through the
//! two-agent loop with retrieval-augmented few-shot prompting; completed
//! chains are mined for shortcuts at the batch barrier; and the resulting
//! pools wire into the next batch under one of three schedules:
//!
//! - **successive**: batch i uses exactly the acquisitions of batch i−1;
//! - **cumulative**: batch i uses the union of all earlier acquisitions;
//! - **eliminated**: batch i uses the gain-filtered pool of batch i−1 union
//!   the frequency-filtered pool of batch i−2.
//!
//! Batch 1 always runs without experiences.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::acquisition::{extract_shortcuts, split_shortcut, solution_text, Shortcut};
use crate::backends::{AgentContext, Backends, PHASE_DONE_MARKER};
use crate::chain::{ExecutionChain, Instruction, Phase, Solution};
use crate::elimination::{frequency_filter_by, ChainScorer};
use crate::error::{Error, Result};
use crate::metrics::{
    self, MetricBundle, PhaseEfficiency, PhaseRounds, RetrievalEvent,
};
use crate::pool::{ExperiencePool, ExperienceRecord, RecordKind};

/// One software requirement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub task_id: String,
    pub category: String,
    pub task_text: String,
}

/// Reads a task corpus: JSON Lines with fields task_id, category, task_text.
pub fn load_tasks(path: &std::path::Path) -> Result<Vec<Task>> {
    use std::io::BufRead;
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut tasks = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let task: Task = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        tasks.push(task);
    }
    Ok(tasks)
}

/// A stratified slice of the task corpus. Ordinals are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskBatch {
    pub ordinal: u32,
    pub tasks: Vec<Task>,
}

/// Experience propagation schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Successive,
    Cumulative,
    Eliminated,
}

impl Pattern {
    pub fn as_str(&self) -> &'static str {
        match self {
            Pattern::Successive => "successive",
            Pattern::Cumulative => "cumulative",
            Pattern::Eliminated => "eliminated",
        }
    }
}

impl FromStr for Pattern {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "successive" => Ok(Pattern::Successive),
            "cumulative" => Ok(Pattern::Cumulative),
            "eliminated" => Ok(Pattern::Eliminated),
            other => Err(Error::InvalidArgument(format!(
                "unknown pattern {other:?}; expected successive, cumulative, or eliminated"
            ))),
        }
    }
}

/// Run parameters. Thresholds default to ε = θ = 0.95; rounds default to
/// 1 coding, 3 review, 3 test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub pattern: Pattern,
    pub n_batches: u32,
    /// Retrieved few-shot examples per query.
    pub k: usize,
    pub epsilon: f64,
    pub theta: f64,
    pub max_review_rounds: u32,
    pub max_test_rounds: u32,
    pub seed: u64,
    /// Whether tasks aborted by backend failures still count in the metric
    /// denominators.
    pub metrics_include_failed: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pattern: Pattern::Successive,
            n_batches: 6,
            k: 1,
            epsilon: 0.95,
            theta: 0.95,
            max_review_rounds: 3,
            max_test_rounds: 3,
            seed: 0,
            metrics_include_failed: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_batches < 1 {
            return Err(Error::InvalidArgument("n_batches must be >= 1".into()));
        }
        if self.k < 1 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        for (name, v) in [("epsilon", self.epsilon), ("theta", self.theta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {v} must lie in [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Output of [`partition_tasks`]: the batches plus stratification warnings
/// for categories too small to reach every batch.
#[derive(Debug, Clone)]
pub struct Partition {
    pub batches: Vec<TaskBatch>,
    pub warnings: Vec<String>,
}

/// Stratified partition: tasks group by category, shuffle within each
/// category under the seed, and deal onto batches through a rotating cursor,
/// so per-category counts differ by at most one across batches and batch
/// sizes stay balanced. Batches are disjoint and cover the input.
pub fn partition_tasks(tasks: &[Task], n_batches: u32, seed: u64) -> Result<Partition> {
    if n_batches < 1 {
        return Err(Error::InvalidArgument("n_batches must be >= 1".into()));
    }
    if tasks.is_empty() {
        return Err(Error::InvalidArgument("no tasks to partition".into()));
    }
    let mut seen = BTreeSet::new();
    let mut by_category: BTreeMap<String, Vec<Task>> = BTreeMap::new();
    for task in tasks {
        if task.category.trim().is_empty() {
            return Err(Error::InvalidArgument(format!(
                "task {} has no category label",
                task.task_id
            )));
        }
        if !seen.insert(task.task_id.clone()) {
            return Err(Error::InvalidArgument(format!(
                "duplicate task id {}",
                task.task_id
            )));
        }
        by_category
            .entry(task.category.clone())
            .or_default()
            .push(task.clone());
    }

    let mut rng = StdRng::seed_from_u64(seed);
    let mut batches: Vec<TaskBatch> = (1..=n_batches)
        .map(|ordinal| TaskBatch {
            ordinal,
            tasks: Vec::new(),
        })
        .collect();
    let mut warnings = Vec::new();
    let mut cursor = 0usize;
    for (category, mut group) in by_category {
        if group.len() < n_batches as usize {
            warnings.push(format!(
                "category {category:?} has {} task(s) for {n_batches} batches; \
                 remainder distributed round-robin",
                group.len()
            ));
        }
        group.shuffle(&mut rng);
        for task in group {
            batches[cursor % n_batches as usize].tasks.push(task);
            cursor += 1;
        }
    }
    Ok(Partition { batches, warnings })
}

/// The record of running one task.
#[derive(Debug, Clone)]
pub struct TaskRun {
    pub chain: ExecutionChain,
    pub completed: bool,
    /// Failure description when a backend aborted the task; the chain is
    /// truncated at the failure point but still mined.
    pub failure: Option<String>,
    pub duration_seconds: f64,
    pub retrieval: Vec<RetrievalEvent>,
    pub rounds: PhaseRounds,
}

enum RoundOutcome {
    Stepped,
    PhaseDone,
}

/// Drives one task's chain through the conversation phases.
struct TaskDriver<'a> {
    chain: ExecutionChain,
    events: Vec<RetrievalEvent>,
    batch_ordinal: u32,
    active: &'a ExperiencePool,
    backends: &'a Backends,
    config: &'a RunConfig,
}

impl TaskDriver<'_> {
    fn retrieve_logged(
        &mut self,
        kind: RecordKind,
        query: &str,
    ) -> Result<Vec<(String, String)>> {
        let hits = self.active.retrieve(
            kind,
            query,
            self.config.k,
            self.backends.embedder.as_ref(),
        )?;
        self.events.extend(hits.iter().map(|hit| RetrievalEvent {
            consumer_batch: self.batch_ordinal,
            task_id: self.chain.task_id().to_string(),
            kind,
            record_id: hit.id.clone(),
            origin_batch: hit.origin_batch,
        }));
        Ok(hits
            .iter()
            .map(|h| (h.key_text.clone(), h.value_text.clone()))
            .collect())
    }

    fn round(&mut self, phase: Phase, round: u32) -> Result<RoundOutcome> {
        let task_id = self.chain.task_id().to_string();
        let task_text = self.chain.task_text().to_string();
        let current_flat = self.chain.terminal().artifact.flatten();
        let query = solution_text(self.chain.terminal());

        let fewshot = self.retrieve_logged(RecordKind::S2I, &query)?;
        let ctx = AgentContext {
            task_id: &task_id,
            phase,
            round,
        };
        let instruction_text =
            self.backends
                .agent
                .propose_instruction(&ctx, &task_text, &current_flat, &fewshot)?;
        self.backends.clock.advance(1.0);
        if instruction_text.trim().is_empty() {
            return Err(Error::backend(format!(
                "instructive agent replied with empty text for ({task_id}, {}, round {round})",
                phase.as_str()
            )));
        }
        if instruction_text.trim() == PHASE_DONE_MARKER {
            return Ok(RoundOutcome::PhaseDone);
        }

        let fewshot = self.retrieve_logged(RecordKind::I2S, &instruction_text)?;
        let artifact =
            self.backends
                .agent
                .respond_solution(&ctx, &instruction_text, &current_flat, &fewshot)?;
        self.backends.clock.advance(1.0);

        let solution = Solution::new(task_id.clone(), self.chain.nodes().len(), artifact);
        let instruction =
            Instruction::new(task_id, self.chain.edges().len() + 1, instruction_text, phase);
        self.chain.append_step(instruction, solution)?;
        Ok(RoundOutcome::Stepped)
    }

    fn drive(&mut self) -> Result<()> {
        // Coding: a single round.
        self.round(Phase::Coding, 1)?;

        // Reviewing: bounded rounds, ended early by the done marker.
        for round in 1..=self.config.max_review_rounds {
            if let RoundOutcome::PhaseDone = self.round(Phase::Review, round)? {
                break;
            }
        }

        // Testing: each round first checks the current solution and exits as
        // soon as it compiles and executes.
        for round in 1..=self.config.max_test_rounds {
            let report = self
                .backends
                .sandbox
                .compile_and_run(&self.chain.terminal().artifact)?;
            let terminal_index = self.chain.nodes().len() - 1;
            self.chain.cache_compile(terminal_index, report.compiled)?;
            if report.compiled && report.executed {
                break;
            }
            if let RoundOutcome::PhaseDone = self.round(Phase::Test, round)? {
                break;
            }
        }
        Ok(())
    }
}

/// Runs one task through coding, reviewing, and testing against the active
/// pool. Backend failures abort the task but return the truncated chain;
/// any other error propagates.
pub fn run_task(
    task: &Task,
    batch_ordinal: u32,
    active: &ExperiencePool,
    backends: &Backends,
    config: &RunConfig,
) -> Result<TaskRun> {
    let started = backends.clock.now_seconds();
    let mut driver = TaskDriver {
        chain: ExecutionChain::new(&task.task_id, &task.task_text)?,
        events: Vec::new(),
        batch_ordinal,
        active,
        backends,
        config,
    };

    let failure = match driver.drive() {
        Ok(()) => None,
        Err(err) if err.is_task_scoped() => Some(err.to_string()),
        Err(err) => return Err(err),
    };

    let rounds = metrics::actual_rounds(&driver.chain);
    Ok(TaskRun {
        completed: failure.is_none(),
        failure,
        duration_seconds: backends.clock.now_seconds() - started,
        retrieval: driver.events,
        rounds,
        chain: driver.chain,
    })
}

/// Gain of one mined shortcut, recorded for reports and audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortcutGain {
    pub task_id: String,
    pub source_index: usize,
    pub target_index: usize,
    pub gain: Option<f64>,
}

/// Size accounting of one elimination step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationAccounting {
    pub gain_candidates: usize,
    pub gain_retained: usize,
    pub freq_candidates: usize,
    pub freq_retained: usize,
    pub freq_all_zero: bool,
    /// Total records feeding this step (the raw acquisition pools).
    pub original_total: usize,
    /// Records surviving into the active pool.
    pub retained_total: usize,
    pub retained_fraction: f64,
}

/// Everything one batch produced.
#[derive(Debug)]
pub struct BatchResult {
    pub ordinal: u32,
    pub chains: Vec<ExecutionChain>,
    pub tasks_total: usize,
    pub tasks_failed: usize,
    /// Newly mined experience pool 𝓔ᵢ (unfiltered).
    pub acquired: ExperiencePool,
    pub shortcut_gains: Vec<ShortcutGain>,
    pub acquisition_failures: usize,
    pub active_size: usize,
    pub active_by_origin: BTreeMap<u32, usize>,
    pub active_ids: Vec<String>,
    /// Retrieval counts accumulated on the active pool during this batch.
    pub batch_freq: BTreeMap<String, u64>,
    pub retrieval_events: Vec<RetrievalEvent>,
    pub hit_ratio: f64,
    pub metrics: MetricBundle,
    pub efficiency: PhaseEfficiency,
    pub elimination: Option<EliminationAccounting>,
}

fn records_with_gain(pool: &ExperiencePool, epsilon: f64) -> Vec<Arc<ExperienceRecord>> {
    pool.records()
        .iter()
        .filter(|r| r.gain >= epsilon)
        .cloned()
        .collect()
}

fn pool_from_arcs(dimension: usize, records: &[Arc<ExperienceRecord>]) -> Result<ExperiencePool> {
    let mut pool = ExperiencePool::new(dimension);
    pool.ingest_preserving_ord(records.iter().map(|r| (**r).clone()).collect())?;
    Ok(pool)
}

/// Builds the active pool for `ordinal` under the configured schedule.
fn build_active_pool(
    config: &RunConfig,
    ordinal: u32,
    results: &[BatchResult],
    dimension: usize,
) -> Result<(ExperiencePool, Option<EliminationAccounting>)> {
    let empty = |d| (ExperiencePool::new(d), None);
    if ordinal == 1 {
        return Ok(empty(dimension));
    }
    let prior = |i: u32| &results[i as usize - 1];
    match config.pattern {
        Pattern::Successive => {
            let pool = ExperiencePool::merge(&[&prior(ordinal - 1).acquired])?;
            Ok((pool, None))
        }
        Pattern::Cumulative => {
            let pools: Vec<&ExperiencePool> =
                results[..ordinal as usize - 1].iter().map(|r| &r.acquired).collect();
            if pools.is_empty() {
                return Ok(empty(dimension));
            }
            let pool = ExperiencePool::merge(&pools)?;
            Ok((pool, None))
        }
        Pattern::Eliminated => {
            let prev = &prior(ordinal - 1).acquired;
            let gain_side = records_with_gain(prev, config.epsilon);
            let (freq_side, freq_candidates, freq_all_zero, prev2_len) = if ordinal >= 3 {
                let prev2 = &prior(ordinal - 2).acquired;
                let candidates = records_with_gain(prev2, config.epsilon);
                let freqs = &prior(ordinal - 1).batch_freq;
                let cut = frequency_filter_by(&candidates, freqs, config.theta)?;
                (cut.retained, candidates.len(), cut.all_zero, prev2.len())
            } else {
                (Vec::new(), 0, false, 0)
            };
            let union = crate::elimination::combine(&gain_side, &freq_side);
            let original_total = prev.len() + prev2_len;
            let accounting = EliminationAccounting {
                gain_candidates: prev.len(),
                gain_retained: gain_side.len(),
                freq_candidates,
                freq_retained: freq_side.len(),
                freq_all_zero,
                original_total,
                retained_total: union.len(),
                retained_fraction: if original_total == 0 {
                    0.0
                } else {
                    union.len() as f64 / original_total as f64
                },
            };
            Ok((pool_from_arcs(dimension, &union)?, Some(accounting)))
        }
    }
}

fn zero_metrics() -> MetricBundle {
    MetricBundle {
        completeness: 0.0,
        executability: 0.0,
        consistency: 0.0,
        quality: 0.0,
        mean_duration_seconds: 0.0,
        rounds: PhaseRounds::default(),
    }
}

fn batch_metrics(
    runs: &[TaskRun],
    backends: &Backends,
    config: &RunConfig,
) -> Result<(MetricBundle, PhaseEfficiency)> {
    let included: Vec<&TaskRun> = runs
        .iter()
        .filter(|r| r.completed || config.metrics_include_failed)
        .collect();
    if included.is_empty() {
        return Ok((zero_metrics(), PhaseEfficiency::default()));
    }
    let artifacts: Vec<&crate::artifact::Artifact> = included
        .iter()
        .map(|r| &r.chain.terminal().artifact)
        .collect();
    let pairs: Vec<(&str, &crate::artifact::Artifact)> = included
        .iter()
        .map(|r| (r.chain.task_text(), &r.chain.terminal().artifact))
        .collect();

    let alpha = metrics::completeness(&artifacts)?;
    let beta = metrics::executability(&artifacts, &backends.sandbox)?;
    let gamma = metrics::consistency(&pairs, backends.embedder.as_ref())?;
    let quality = metrics::quality(alpha, beta, gamma)?;
    let mean_duration =
        included.iter().map(|r| r.duration_seconds).sum::<f64>() / included.len() as f64;

    let mut rounds = PhaseRounds::default();
    let mut eff_sum = PhaseEfficiency::default();
    for run in &included {
        rounds.coding += run.rounds.coding;
        rounds.review += run.rounds.review;
        rounds.test += run.rounds.test;
        let eff = metrics::phase_efficiency(
            &run.chain,
            config.max_review_rounds,
            config.max_test_rounds,
        )?;
        eff_sum.review += eff.review;
        eff_sum.test += eff.test;
        eff_sum.overall += eff.overall;
    }
    let n = included.len() as f64;
    let efficiency = PhaseEfficiency {
        review: eff_sum.review / n,
        test: eff_sum.test / n,
        overall: eff_sum.overall / n,
    };

    Ok((
        MetricBundle {
            completeness: alpha,
            executability: beta,
            consistency: gamma,
            quality,
            mean_duration_seconds: mean_duration,
            rounds,
        },
        efficiency,
    ))
}

fn acquire_batch(
    runs: &[TaskRun],
    ordinal: u32,
    backends: &Backends,
    config: &RunConfig,
) -> Result<(ExperiencePool, Vec<ShortcutGain>, usize)> {
    let mut acquired = ExperiencePool::new(backends.embedder.dimension());
    let mut gains = Vec::new();
    let mut failures = 0;
    for run in runs {
        let mut shortcuts: Vec<Shortcut> =
            match extract_shortcuts(&run.chain, backends.agent.as_ref(), ordinal) {
                Ok(shortcuts) => shortcuts,
                Err(err) if err.is_task_scoped() => {
                    // All-or-nothing per chain: drop this chain's shortcuts.
                    failures += 1;
                    continue;
                }
                Err(err) => return Err(err),
            };
        if config.pattern == Pattern::Eliminated {
            let terminal = run.chain.terminal().clone();
            let mut scorer = ChainScorer::new(
                run.chain.task_text(),
                &terminal,
                backends.embedder.as_ref(),
                &backends.sandbox,
            );
            crate::elimination::score_shortcuts(&mut shortcuts, &mut scorer)?;
        }
        let mut records = Vec::new();
        for shortcut in &shortcuts {
            gains.push(ShortcutGain {
                task_id: shortcut.provenance.task_id.clone(),
                source_index: shortcut.provenance.source_index,
                target_index: shortcut.provenance.target_index,
                gain: shortcut.gain,
            });
            let (s2i, i2s) = split_shortcut(shortcut, backends.embedder.as_ref())?;
            records.push(s2i);
            records.push(i2s);
        }
        acquired.ingest(records)?;
    }
    Ok((acquired, gains, failures))
}

/// Callback invoked after each freshly completed batch, typically to write
/// checkpoints.
pub type BatchSink<'a> = &'a mut dyn FnMut(&BatchResult) -> Result<()>;

/// Runs every batch in ordinal order. `preloaded` carries results of batches
/// already completed (resume); `on_batch` is invoked after each fresh batch.
pub fn run_with(
    batches: &[TaskBatch],
    backends: &Backends,
    config: &RunConfig,
    preloaded: Vec<BatchResult>,
    mut on_batch: Option<BatchSink<'_>>,
) -> Result<Vec<BatchResult>> {
    config.validate()?;
    if batches.len() != config.n_batches as usize {
        return Err(Error::InvalidArgument(format!(
            "config expects {} batches but {} were supplied",
            config.n_batches,
            batches.len()
        )));
    }
    for (i, batch) in batches.iter().enumerate() {
        if batch.ordinal != i as u32 + 1 {
            return Err(Error::InvalidArgument(format!(
                "batch ordinals must run 1..={}, found {} at position {}",
                batches.len(),
                batch.ordinal,
                i
            )));
        }
    }
    for (i, result) in preloaded.iter().enumerate() {
        if result.ordinal != i as u32 + 1 {
            return Err(Error::InvalidArgument(
                "preloaded results must cover a prefix of the batches".into(),
            ));
        }
    }

    let dimension = backends.embedder.dimension();
    let mut results = preloaded;
    for batch in batches.iter().skip(results.len()) {
        let (mut active, elimination) =
            build_active_pool(config, batch.ordinal, &results, dimension)?;
        active.reset_freqs();

        let mut active_ids: Vec<String> =
            active.records().iter().map(|r| r.id.clone()).collect();
        active_ids.sort();
        let mut active_by_origin: BTreeMap<u32, usize> = BTreeMap::new();
        for record in active.records() {
            *active_by_origin.entry(record.origin_batch).or_insert(0) += 1;
        }

        let mut runs = Vec::new();
        for task in &batch.tasks {
            runs.push(run_task(task, batch.ordinal, &active, backends, config)?);
        }

        let batch_freq = active.freq_snapshot();
        let hit_ratio = if active.is_empty() {
            0.0
        } else {
            batch_freq.len() as f64 / active.len() as f64
        };
        let retrieval_events: Vec<RetrievalEvent> =
            runs.iter().flat_map(|r| r.retrieval.clone()).collect();

        let (acquired, shortcut_gains, acquisition_failures) =
            acquire_batch(&runs, batch.ordinal, backends, config)?;
        let (bundle, efficiency) = batch_metrics(&runs, backends, config)?;

        let result = BatchResult {
            ordinal: batch.ordinal,
            tasks_total: runs.len(),
            tasks_failed: runs.iter().filter(|r| !r.completed).count(),
            chains: runs.into_iter().map(|r| r.chain).collect(),
            acquired,
            shortcut_gains,
            acquisition_failures,
            active_size: active.len(),
            active_by_origin,
            active_ids,
            batch_freq,
            retrieval_events,
            hit_ratio,
            metrics: bundle,
            efficiency,
            elimination,
        };
        if let Some(callback) = on_batch.as_mut() {
            callback(&result)?;
        }
        results.push(result);
    }
    Ok(results)
}

/// Successive schedule: batch i consumes exactly batch i−1's acquisitions.
pub fn run_successive(
    batches: &[TaskBatch],
    backends: &Backends,
    config: &RunConfig,
) -> Result<Vec<BatchResult>> {
    expect_pattern(config, Pattern::Successive)?;
    run_with(batches, backends, config, Vec::new(), None)
}

/// Cumulative schedule: batch i consumes the union of all prior acquisitions.
pub fn run_cumulative(
    batches: &[TaskBatch],
    backends: &Backends,
    config: &RunConfig,
) -> Result<Vec<BatchResult>> {
    expect_pattern(config, Pattern::Cumulative)?;
    run_with(batches, backends, config, Vec::new(), None)
}

/// Elimination schedule: batch i consumes the gain-filtered pool of batch
/// i−1 union the frequency-filtered pool of batch i−2.
pub fn run_eliminated(
    batches: &[TaskBatch],
    backends: &Backends,
    config: &RunConfig,
) -> Result<Vec<BatchResult>> {
    expect_pattern(config, Pattern::Eliminated)?;
    run_with(batches, backends, config, Vec::new(), None)
}

fn expect_pattern(config: &RunConfig, pattern: Pattern) -> Result<()> {
    if config.pattern != pattern {
        return Err(Error::InvalidArgument(format!(
            "config pattern is {} but the {} runner was invoked",
            config.pattern.as_str(),
            pattern.as_str()
        )));
    }
    Ok(())
}

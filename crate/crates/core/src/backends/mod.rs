//! Pluggable boundaries to nondeterministic services.
//!
//! Three service kinds sit behind traits: chat agents (instructive and
//! responsive roles), text embedders, and the compile/execute sandbox. Each
//! has a production wire client and a deterministic in-process double, so an
//! entire run can execute offline as a pure function of fixtures, config,
//! and seed.

mod embed;
mod remote;
mod sandbox;
pub mod scripted;

pub use embed::{cosine_similarity, Embedder, HashEmbedder};
pub use remote::{RemoteBackend, RemoteConfig, RemoteEmbedder, RemoteEmbedderConfig};
pub use sandbox::{ExecReport, Sandbox, SandboxConfig};
pub use scripted::{FixtureTable, ScriptedBackend};

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use crate::artifact::{Artifact, SourceFile};
use crate::chain::{Phase, Solution};
use crate::error::{Error, Result};

/// Marker an instructive agent replies with to end the current phase
/// without requesting another change.
pub const PHASE_DONE_MARKER: &str = "<DONE>";

/// Identifies which task, phase, and round an agent call belongs to.
#[derive(Debug, Clone)]
pub struct AgentContext<'a> {
    pub task_id: &'a str,
    pub phase: Phase,
    /// 1-based round number within the phase.
    pub round: u32,
}

/// A chat agent able to play both conversation roles.
pub trait AgentBackend: Send + Sync {
    /// Instructive role: produce the next directive for the current solution.
    /// `fewshot` carries retrieved (key, value) experience pairs; it may be
    /// empty, in which case prompts omit the examples section entirely.
    fn propose_instruction(
        &self,
        ctx: &AgentContext,
        task_text: &str,
        current_solution: &str,
        fewshot: &[(String, String)],
    ) -> Result<String>;

    /// Responsive role: produce the next solution for the given instruction.
    fn respond_solution(
        &self,
        ctx: &AgentContext,
        instruction: &str,
        current_solution: &str,
        fewshot: &[(String, String)],
    ) -> Result<Artifact>;

    /// Self-instruction: describe in one directive the transformation from
    /// `source` to `target`.
    fn pseudo_instruction(
        &self,
        task_id: &str,
        task_text: &str,
        source: &Solution,
        target: &Solution,
    ) -> Result<String>;
}

/// Wall or simulated time. Scripted runs use simulated time (a fixed cost
/// per agent call) so durations in reports are reproducible byte-for-byte.
#[derive(Debug)]
pub enum RunClock {
    Wall(Instant),
    /// Milliseconds advanced explicitly by the runner.
    Simulated(AtomicU64),
}

impl RunClock {
    pub fn wall() -> Self {
        RunClock::Wall(Instant::now())
    }

    pub fn simulated() -> Self {
        RunClock::Simulated(AtomicU64::new(0))
    }

    /// Seconds since the clock was created.
    pub fn now_seconds(&self) -> f64 {
        match self {
            RunClock::Wall(start) => start.elapsed().as_secs_f64(),
            RunClock::Simulated(ms) => ms.load(Ordering::SeqCst) as f64 / 1000.0,
        }
    }

    /// Advances simulated time; a no-op on the wall clock.
    pub fn advance(&self, seconds: f64) {
        if let RunClock::Simulated(ms) = self {
            ms.fetch_add((seconds * 1000.0).round() as u64, Ordering::SeqCst);
        }
    }
}

/// Everything a run needs to talk to the outside world.
pub struct Backends {
    pub agent: Box<dyn AgentBackend>,
    pub embedder: Box<dyn Embedder>,
    pub sandbox: Sandbox,
    pub clock: RunClock,
}

impl Backends {
    /// A fully deterministic bundle: scripted agent, hash embedder,
    /// sh-based sandbox, simulated clock.
    pub fn scripted(table: FixtureTable, dimension: usize, seed: u64) -> Self {
        Backends {
            agent: Box::new(ScriptedBackend::new(table)),
            embedder: Box::new(HashEmbedder::new(dimension, seed)),
            sandbox: Sandbox::new(SandboxConfig::default()),
            clock: RunClock::simulated(),
        }
    }
}

/// Parses an agent reply into an artifact using the fenced-block convention:
/// each file is introduced by one header line naming its path, followed by a
/// triple-backtick fence around the content. Replies with no parseable file
/// block are malformed.
pub fn parse_file_blocks(reply: &str) -> Result<Artifact> {
    let mut files: Vec<SourceFile> = Vec::new();
    let mut header: Option<String> = None;
    let mut body: Option<Vec<String>> = None;

    for line in reply.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with("```") {
            match body.take() {
                // Opening fence: the preceding non-empty line names the file.
                None => {
                    if header.is_none() {
                        return Err(Error::backend(format!(
                            "malformed reply: fence without a path header: {reply:?}"
                        )));
                    }
                    body = Some(Vec::new());
                }
                // Closing fence: emit the file.
                Some(lines) => {
                    let path = header.take().expect("checked at opening fence");
                    if files.iter().any(|f| f.path == path) {
                        return Err(Error::backend(format!(
                            "malformed reply: duplicate file path {path:?}"
                        )));
                    }
                    files.push(SourceFile::new(path, lines.join("\n")));
                }
            }
            continue;
        }
        match body.as_mut() {
            Some(lines) => lines.push(line.to_string()),
            None => {
                if !trimmed.is_empty() {
                    header = Some(trimmed.trim_matches('`').trim().to_string());
                }
            }
        }
    }

    if body.is_some() {
        return Err(Error::backend(format!(
            "malformed reply: unterminated fence: {reply:?}"
        )));
    }
    if files.is_empty() {
        return Err(Error::backend(format!(
            "malformed reply: no file blocks found: {reply:?}"
        )));
    }
    Ok(Artifact::from_files(files))
}

//! Deterministic scripted agent backend.
//!
//! A fixture table maps (task_id, phase, round) to the instruction an
//! instructive agent would speak and the files a responsive agent would
//! produce. Pseudo-instruction fixtures are keyed by (task_id, source index,
//! target index); when no entry exists, a deterministic directive is
//! synthesized, so acquisition never requires per-pair fixtures. The backend
//! performs zero network operations.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::{Artifact, SourceFile};
use crate::backends::{AgentBackend, AgentContext};
use crate::chain::{Phase, Solution};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FixtureLine {
    task_id: String,
    /// "coding" | "review" | "test" | "pseudo"
    phase: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    round: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<usize>,
    instruction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    files: Option<Vec<SourceFile>>,
}

/// One scripted round: what the instructive agent says and, when a step
/// follows, what the responsive agent produces.
#[derive(Debug, Clone)]
pub struct RoundFixture {
    pub instruction: String,
    pub files: Option<Artifact>,
}

/// In-memory fixture table with JSON Lines persistence.
#[derive(Debug, Clone, Default)]
pub struct FixtureTable {
    rounds: BTreeMap<(String, Phase, u32), RoundFixture>,
    pseudo: BTreeMap<(String, usize, usize), String>,
}

impl FixtureTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_round(
        &mut self,
        task_id: impl Into<String>,
        phase: Phase,
        round: u32,
        instruction: impl Into<String>,
        files: Option<Artifact>,
    ) {
        self.rounds.insert(
            (task_id.into(), phase, round),
            RoundFixture {
                instruction: instruction.into(),
                files,
            },
        );
    }

    pub fn insert_pseudo(
        &mut self,
        task_id: impl Into<String>,
        source: usize,
        target: usize,
        text: impl Into<String>,
    ) {
        self.pseudo.insert((task_id.into(), source, target), text.into());
    }

    pub fn round(&self, task_id: &str, phase: Phase, round: u32) -> Option<&RoundFixture> {
        self.rounds.get(&(task_id.to_string(), phase, round))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for ((task_id, phase, round), fixture) in &self.rounds {
            let line = FixtureLine {
                task_id: task_id.clone(),
                phase: phase.as_str().to_string(),
                round: Some(*round),
                source: None,
                target: None,
                instruction: fixture.instruction.clone(),
                files: fixture.files.as_ref().map(|a| a.files().to_vec()),
            };
            writeln!(out, "{}", serde_json::to_string(&line).expect("fixture serializes"))?;
        }
        for ((task_id, source, target), text) in &self.pseudo {
            let line = FixtureLine {
                task_id: task_id.clone(),
                phase: "pseudo".to_string(),
                round: None,
                source: Some(*source),
                target: Some(*target),
                instruction: text.clone(),
                files: None,
            };
            writeln!(out, "{}", serde_json::to_string(&line).expect("fixture serializes"))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(file_err_path(path))?;
        let reader = BufReader::new(file);
        let mut table = FixtureTable::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: FixtureLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
            table.insert_line(parsed).map_err(|message| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                message,
            })?;
        }
        Ok(table)
    }

    fn insert_line(&mut self, line: FixtureLine) -> std::result::Result<(), String> {
        if line.phase == "pseudo" {
            let (source, target) = match (line.source, line.target) {
                (Some(s), Some(t)) => (s, t),
                _ => return Err("pseudo fixture requires source and target".into()),
            };
            self.insert_pseudo(line.task_id, source, target, line.instruction);
            return Ok(());
        }
        let phase = match line.phase.as_str() {
            "coding" => Phase::Coding,
            "review" => Phase::Review,
            "test" => Phase::Test,
            other => return Err(format!("unknown phase {other:?}")),
        };
        let round = line.round.ok_or("round fixture requires a round number")?;
        self.insert_round(
            line.task_id,
            phase,
            round,
            line.instruction,
            line.files.map(Artifact::from_files),
        );
        Ok(())
    }
}

fn file_err_path(path: &Path) -> &Path {
    path
}

/// Agent backend that replays a fixture table.
pub struct ScriptedBackend {
    table: FixtureTable,
}

impl ScriptedBackend {
    pub fn new(table: FixtureTable) -> Self {
        Self { table }
    }
}

impl AgentBackend for ScriptedBackend {
    fn propose_instruction(
        &self,
        ctx: &AgentContext,
        _task_text: &str,
        _current_solution: &str,
        _fewshot: &[(String, String)],
    ) -> Result<String> {
        let fixture = self
            .table
            .round(ctx.task_id, ctx.phase, ctx.round)
            .ok_or_else(|| {
                Error::Fixture(format!(
                    "no fixture entry for ({}, {}, round {})",
                    ctx.task_id,
                    ctx.phase.as_str(),
                    ctx.round
                ))
            })?;
        if fixture.instruction.trim().is_empty() {
            return Err(Error::backend(format!(
                "empty instruction fixture for ({}, {}, round {})",
                ctx.task_id,
                ctx.phase.as_str(),
                ctx.round
            )));
        }
        Ok(fixture.instruction.clone())
    }

    fn respond_solution(
        &self,
        ctx: &AgentContext,
        _instruction: &str,
        _current_solution: &str,
        _fewshot: &[(String, String)],
    ) -> Result<Artifact> {
        let fixture = self
            .table
            .round(ctx.task_id, ctx.phase, ctx.round)
            .ok_or_else(|| {
                Error::Fixture(format!(
                    "no fixture entry for ({}, {}, round {})",
                    ctx.task_id,
                    ctx.phase.as_str(),
                    ctx.round
                ))
            })?;
        fixture.files.clone().ok_or_else(|| {
            Error::Fixture(format!(
                "fixture for ({}, {}, round {}) has no solution files",
                ctx.task_id,
                ctx.phase.as_str(),
                ctx.round
            ))
        })
    }

    fn pseudo_instruction(
        &self,
        task_id: &str,
        _task_text: &str,
        source: &Solution,
        target: &Solution,
    ) -> Result<String> {
        if let Some(text) = self
            .table
            .pseudo
            .get(&(task_id.to_string(), source.index, target.index))
        {
            return Ok(text.clone());
        }
        // Deterministic fallback so acquisition works without per-pair fixtures.
        Ok(format!(
            "Apply in one step every change that takes task {task_id} from revision {} to revision {}.",
            source.index, target.index
        ))
    }
}

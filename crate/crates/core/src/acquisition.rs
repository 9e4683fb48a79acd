//! Shortcut mining.
//!
//! A completed chain is traversed over its non-adjacent node pairs; for each
//! pair a pseudo-instruction is synthesized describing the jump from the
//! earlier solution straight to the later one. Each shortcut then splits
//! into its two key-value projections: solution→instruction for the
//! instructive agent and instruction→solution for the responsive agent.

use crate::backends::{AgentBackend, Embedder};
use crate::chain::{ExecutionChain, Instruction, Solution};
use crate::error::{Error, Result};
use crate::pool::{ExperienceRecord, RecordKind};

/// Stable stand-in text for the empty initial solution, used wherever a
/// solution must be embedded or retrieved against.
pub const EMPTY_SOLUTION_TEXT: &str = "<empty solution>";

/// Embeddable text of a solution: the flattened artifact, or the empty-state
/// sentinel for the initial empty solution.
pub fn solution_text(solution: &Solution) -> String {
    if solution.artifact.is_empty() {
        EMPTY_SOLUTION_TEXT.to_string()
    } else {
        solution.artifact.flatten()
    }
}

/// Where a shortcut came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub batch: u32,
    pub task_id: String,
    pub source_index: usize,
    pub target_index: usize,
}

/// A synthesized triple linking two non-adjacent chain nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Shortcut {
    pub source: Solution,
    pub pseudo_instruction: Instruction,
    pub target: Solution,
    /// ω(target) − ω(source), filled by elimination scoring.
    pub gain: Option<f64>,
    pub provenance: Provenance,
}

/// Asks the backend to describe the source→target transformation as one
/// directive. The result is marked pseudo and carries the target's index.
pub fn generate_pseudo_instruction(
    backend: &dyn AgentBackend,
    task_id: &str,
    task_text: &str,
    source: &Solution,
    target: &Solution,
) -> Result<Instruction> {
    if source.index >= target.index {
        return Err(Error::InvalidArgument(format!(
            "source index {} must precede target index {}",
            source.index, target.index
        )));
    }
    let text = backend.pseudo_instruction(task_id, task_text, source, target)?;
    if text.trim().is_empty() {
        return Err(Error::backend(format!(
            "pseudo-instruction for ({task_id}, {}, {}) was empty",
            source.index, target.index
        )));
    }
    Ok(Instruction {
        id: format!("{task_id}#p{}-{}", source.index, target.index),
        text,
        index: target.index,
        pseudo: true,
        phase: None,
    })
}

/// Mines every shortcut of a completed chain, one per non-adjacent node pair
/// in lexicographic order. Backend failures abort the whole chain: partial
/// results are discarded.
pub fn extract_shortcuts(
    chain: &ExecutionChain,
    backend: &dyn AgentBackend,
    batch: u32,
) -> Result<Vec<Shortcut>> {
    let mut shortcuts = Vec::new();
    for (i, j) in chain.nonadjacent_pairs() {
        let source = &chain.nodes()[i];
        let target = &chain.nodes()[j];
        let pseudo = generate_pseudo_instruction(
            backend,
            chain.task_id(),
            chain.task_text(),
            source,
            target,
        )?;
        shortcuts.push(Shortcut {
            source: source.clone(),
            pseudo_instruction: pseudo,
            target: target.clone(),
            gain: None,
            provenance: Provenance {
                batch,
                task_id: chain.task_id().to_string(),
                source_index: i,
                target_index: j,
            },
        });
    }
    Ok(shortcuts)
}

/// Projects a shortcut into its two experience records. Both share the
/// shortcut's provenance and gain; the S2I value and the I2S key are the
/// same pseudo-instruction text.
pub fn split_shortcut(
    shortcut: &Shortcut,
    embedder: &dyn Embedder,
) -> Result<(ExperienceRecord, ExperienceRecord)> {
    let gain = shortcut.gain.unwrap_or(0.0);
    let instruction = &shortcut.pseudo_instruction.text;

    let s2i_key = solution_text(&shortcut.source);
    let s2i = ExperienceRecord::new(
        RecordKind::S2I,
        s2i_key.clone(),
        instruction.clone(),
        embedder.embed(&s2i_key)?,
        gain,
        shortcut.provenance.batch,
        shortcut.provenance.task_id.clone(),
    );

    let i2s_value = shortcut.target.artifact.flatten();
    let i2s = ExperienceRecord::new(
        RecordKind::I2S,
        instruction.clone(),
        i2s_value,
        embedder.embed(instruction)?,
        gain,
        shortcut.provenance.batch,
        shortcut.provenance.task_id.clone(),
    );

    Ok((s2i, i2s))
}

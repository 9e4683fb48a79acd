//! Task execution chains.
//!
//! Each task's cooperative execution is recorded as a strictly linear
//! directed chain: solution nodes joined by instruction edges. Node 0 is the
//! initial, empty solution; edge k carries the instruction that turned
//! solution k−1 into solution k. Completed chains are immutable run records;
//! acquisition mines their non-adjacent node pairs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::artifact::{Artifact, SourceFile};
use crate::error::{Error, Result};

/// Which conversation phase produced an instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Coding,
    Review,
    Test,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Coding => "coding",
            Phase::Review => "review",
            Phase::Test => "test",
        }
    }
}

/// One solution node: a complete software snapshot at a point in the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub id: String,
    pub task_id: String,
    /// Ordinal position in the chain, 0-based.
    pub index: usize,
    pub artifact: Artifact,
    /// Cached compile outcome, filled lazily by whoever compiles it.
    pub compiled: Option<bool>,
}

impl Solution {
    pub fn new(task_id: impl Into<String>, index: usize, artifact: Artifact) -> Self {
        let task_id = task_id.into();
        Self {
            id: format!("{task_id}#s{index}"),
            task_id,
            index,
            artifact,
            compiled: None,
        }
    }
}

/// One instruction edge. Edge `index` joins solution `index−1` to solution
/// `index`; indices are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Instruction {
    pub id: String,
    pub text: String,
    pub index: usize,
    /// True when the text was synthesized (self-instructed) rather than
    /// spoken during task execution.
    pub pseudo: bool,
    /// Phase of the round that produced this edge; `None` for pseudo
    /// instructions, which belong to no phase.
    pub phase: Option<Phase>,
}

impl Instruction {
    pub fn new(
        task_id: impl Into<String>,
        index: usize,
        text: impl Into<String>,
        phase: Phase,
    ) -> Self {
        let task_id = task_id.into();
        Self {
            id: format!("{task_id}#i{index}"),
            text: text.into(),
            index,
            pseudo: false,
            phase: Some(phase),
        }
    }
}

/// The linear execution record of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionChain {
    task_id: String,
    task_text: String,
    nodes: Vec<Solution>,
    edges: Vec<Instruction>,
}

impl ExecutionChain {
    /// Starts a chain with the single empty initial solution and no edges.
    pub fn new(task_id: impl Into<String>, task_text: impl Into<String>) -> Result<Self> {
        let task_id = task_id.into();
        let task_text = task_text.into();
        if task_text.trim().is_empty() {
            return Err(Error::InvalidArgument(
                "task_text must be non-empty".into(),
            ));
        }
        let initial = Solution::new(task_id.clone(), 0, Artifact::empty());
        Ok(Self {
            task_id,
            task_text,
            nodes: vec![initial],
            edges: Vec::new(),
        })
    }

    pub fn task_id(&self) -> &str {
        &self.task_id
    }

    pub fn task_text(&self) -> &str {
        &self.task_text
    }

    pub fn nodes(&self) -> &[Solution] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Instruction] {
        &self.edges
    }

    /// The last solution in the chain.
    pub fn terminal(&self) -> &Solution {
        self.nodes.last().expect("chain always has node 0")
    }

    /// Appends one (instruction, solution) step. The solution's index must be
    /// the next node position and the instruction's index the next edge
    /// position, so chains can only grow in order.
    pub fn append_step(&mut self, instruction: Instruction, solution: Solution) -> Result<()> {
        if solution.index != self.nodes.len() {
            return Err(Error::Sequencing(format!(
                "solution index {} does not follow chain of {} nodes",
                solution.index,
                self.nodes.len()
            )));
        }
        if instruction.index != self.edges.len() + 1 {
            return Err(Error::Sequencing(format!(
                "instruction index {} does not follow chain of {} edges",
                instruction.index,
                self.edges.len()
            )));
        }
        if solution.task_id != self.task_id {
            return Err(Error::Sequencing(format!(
                "solution belongs to task {} but chain is for {}",
                solution.task_id, self.task_id
            )));
        }
        self.edges.push(instruction);
        self.nodes.push(solution);
        Ok(())
    }

    /// Caches a compile outcome on an existing node. The chain structure
    /// (artifacts, instructions, order) is never mutated.
    pub fn cache_compile(&mut self, index: usize, compiled: bool) -> Result<()> {
        let node = self.nodes.get_mut(index).ok_or_else(|| {
            Error::InvalidArgument(format!("node index {index} out of range"))
        })?;
        node.compiled = Some(compiled);
        Ok(())
    }

    /// All node index pairs (i, j) with j ≥ i + 2, in lexicographic order.
    /// For n nodes this yields (n−1)(n−2)/2 pairs.
    pub fn nonadjacent_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.nodes.len();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in (i + 2)..n {
                pairs.push((i, j));
            }
        }
        pairs
    }

    /// Whether node j can be reached from node i. The chain is linear, so
    /// this is true exactly when i < j.
    pub fn reachable(&self, i: usize, j: usize) -> Result<bool> {
        let n = self.nodes.len();
        if i >= n || j >= n {
            return Err(Error::InvalidArgument(format!(
                "node index out of range: ({i}, {j}) on {n}-node chain"
            )));
        }
        Ok(i < j)
    }
}

// --- chain log (JSON Lines) -------------------------------------------------

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    index: usize,
    files: Vec<SourceFile>,
}

#[derive(Serialize, Deserialize)]
struct EdgeRecord {
    index: usize,
    text: String,
    pseudo: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phase: Option<Phase>,
}

#[derive(Serialize, Deserialize)]
struct ChainRecord {
    task_id: String,
    task_text: String,
    nodes: Vec<NodeRecord>,
    edges: Vec<EdgeRecord>,
}

impl From<&ExecutionChain> for ChainRecord {
    fn from(chain: &ExecutionChain) -> Self {
        ChainRecord {
            task_id: chain.task_id.clone(),
            task_text: chain.task_text.clone(),
            nodes: chain
                .nodes
                .iter()
                .map(|s| NodeRecord {
                    index: s.index,
                    files: s.artifact.files().to_vec(),
                })
                .collect(),
            edges: chain
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    index: e.index,
                    text: e.text.clone(),
                    pseudo: e.pseudo,
                    phase: e.phase,
                })
                .collect(),
        }
    }
}

fn chain_from_record(record: ChainRecord) -> std::result::Result<ExecutionChain, String> {
    if record.nodes.len() != record.edges.len() + 1 {
        return Err(format!(
            "{} nodes and {} edges violate |edges| = |nodes| - 1",
            record.nodes.len(),
            record.edges.len()
        ));
    }
    if record.nodes.first().map(|n| n.files.is_empty()) != Some(true) {
        return Err("node 0 must carry an empty artifact".into());
    }
    let mut chain = ExecutionChain::new(record.task_id.clone(), record.task_text)
        .map_err(|e| e.to_string())?;
    for (node, edge) in record.nodes.into_iter().skip(1).zip(record.edges) {
        let solution = Solution::new(
            record.task_id.clone(),
            node.index,
            Artifact::from_files(node.files),
        );
        let instruction = Instruction {
            id: format!("{}#i{}", record.task_id, edge.index),
            text: edge.text,
            index: edge.index,
            pseudo: edge.pseudo,
            phase: edge.phase,
        };
        chain
            .append_step(instruction, solution)
            .map_err(|e| e.to_string())?;
    }
    Ok(chain)
}

/// Writes one JSON record per chain, LF-terminated.
pub fn save_chains(path: &Path, chains: &[ExecutionChain]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    for chain in chains {
        let record = ChainRecord::from(chain);
        let line = serde_json::to_string(&record)
            .map_err(|e| Error::InvalidState(format!("chain serialization failed: {e}")))?;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a chain log written by [`save_chains`].
pub fn load_chains(path: &Path) -> Result<Vec<ExecutionChain>> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut chains = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ChainRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let chain = chain_from_record(record).map_err(|message| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            message,
        })?;
        chains.push(chain);
    }
    Ok(chains)
}

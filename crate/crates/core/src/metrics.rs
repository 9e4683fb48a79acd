//! Software-quality and propagation metrics.
//!
//! Completeness is the proportion of artifacts free of "TODO" markers,
//! executability the proportion that compile and launch, consistency the
//! mean requirement↔code embedding similarity, and quality their product.
//! Phase efficiency measures early stopping against the configured round
//! caps; the utilization matrix shows which predecessor batches supplied
//! each batch's retrieval hits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::artifact::Artifact;
use crate::backends::{cosine_similarity, Embedder, Sandbox};
use crate::chain::{ExecutionChain, Phase};
use crate::error::{Error, Result};
use crate::pool::RecordKind;

/// Round counts per conversation phase.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRounds {
    pub coding: u32,
    pub review: u32,
    pub test: u32,
}

/// The per-batch metric bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub completeness: f64,
    pub executability: f64,
    pub consistency: f64,
    pub quality: f64,
    pub mean_duration_seconds: f64,
    pub rounds: PhaseRounds,
}

/// Proportion of artifacts with no file containing the case-sensitive
/// token "TODO".
pub fn completeness(corpus: &[&Artifact]) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::UndefinedMetric(
            "completeness over an empty corpus".into(),
        ));
    }
    let complete = corpus.iter().filter(|a| !a.contains_token("TODO")).count();
    Ok(complete as f64 / corpus.len() as f64)
}

/// Proportion of artifacts that compile and launch successfully.
pub fn executability(corpus: &[&Artifact], sandbox: &Sandbox) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::UndefinedMetric(
            "executability over an empty corpus".into(),
        ));
    }
    let mut ok = 0;
    for artifact in corpus {
        let report = sandbox.compile_and_run(artifact)?;
        if report.compiled && report.executed {
            ok += 1;
        }
    }
    Ok(ok as f64 / corpus.len() as f64)
}

/// Mean cosine similarity (clamped to [0, 1]) between each requirement text
/// and its artifact's flattened source. Empty artifacts contribute zero.
pub fn consistency(pairs: &[(&str, &Artifact)], embedder: &dyn Embedder) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::UndefinedMetric(
            "consistency over an empty corpus".into(),
        ));
    }
    let mut sum = 0.0;
    for (requirement, artifact) in pairs {
        if artifact.is_empty() {
            continue; // contributes 0.0
        }
        let req = embedder.embed(requirement)?;
        let code = embedder.embed(&artifact.flatten())?;
        sum += cosine_similarity(&req, &code).clamp(0.0, 1.0);
    }
    Ok(sum / pairs.len() as f64)
}

/// The comprehensive quality score α·β·γ.
pub fn quality(alpha: f64, beta: f64, gamma: f64) -> Result<f64> {
    for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "{name} = {v} lies outside [0, 1]"
            )));
        }
    }
    Ok(alpha * beta * gamma)
}

/// Early-stopping efficiencies in [0, 1]; higher means fewer rounds used.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseEfficiency {
    pub review: f64,
    pub test: f64,
    pub overall: f64,
}

/// Counts a chain's review/test rounds from its edge phases.
pub fn actual_rounds(chain: &ExecutionChain) -> PhaseRounds {
    let mut rounds = PhaseRounds::default();
    for edge in chain.edges() {
        match edge.phase {
            Some(Phase::Coding) => rounds.coding += 1,
            Some(Phase::Review) => rounds.review += 1,
            Some(Phase::Test) => rounds.test += 1,
            None => {}
        }
    }
    rounds
}

/// Normalized difference between the configured round caps and the rounds a
/// chain actually used. A phase with cap 0 scores 0; the overall score spans
/// both interactive phases.
pub fn phase_efficiency(
    chain: &ExecutionChain,
    max_review: u32,
    max_test: u32,
) -> Result<PhaseEfficiency> {
    let rounds = actual_rounds(chain);
    if rounds.review > max_review || rounds.test > max_test {
        return Err(Error::InvalidArgument(format!(
            "chain used {}/{} review/test rounds beyond caps {}/{}",
            rounds.review, rounds.test, max_review, max_test
        )));
    }
    let ratio = |max: u32, actual: u32| {
        if max == 0 {
            0.0
        } else {
            f64::from(max - actual) / f64::from(max)
        }
    };
    Ok(PhaseEfficiency {
        review: ratio(max_review, rounds.review),
        test: ratio(max_test, rounds.test),
        overall: ratio(max_review + max_test, rounds.review + rounds.test),
    })
}

/// One retrieval hit: batch `consumer_batch` pulled a record produced by
/// batch `origin_batch`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalEvent {
    pub consumer_batch: u32,
    pub task_id: String,
    pub kind: RecordKind,
    pub record_id: String,
    pub origin_batch: u32,
}

/// Row-normalized hit counts: rows are consuming batches, columns producing
/// batches. Strictly lower-triangular by construction of the schedules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationMatrix {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl UtilizationMatrix {
    pub fn n_batches(&self) -> usize {
        self.n
    }

    /// Entry for consuming batch `i` and producing batch `j` (1-based).
    pub fn entry(&self, i: u32, j: u32) -> f64 {
        self.rows[i as usize - 1][j as usize - 1]
    }

    pub fn row(&self, i: u32) -> &[f64] {
        &self.rows[i as usize - 1]
    }

    pub fn is_strictly_lower_triangular(&self) -> bool {
        self.rows
            .iter()
            .enumerate()
            .all(|(i, row)| row.iter().enumerate().all(|(j, &v)| j < i || v == 0.0))
    }

    /// CSV rendering: one row per consuming batch, one column per producer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("consumer_batch");
        for j in 1..=self.n {
            out.push_str(&format!(",producer_{j}"));
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(&format!("{}", i + 1));
            for v in row {
                out.push_str(&format!(",{v:.6}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Builds the utilization matrix from a run's retrieval events. Rows with no
/// hits stay all-zero; rows with hits are normalized to sum to 1.
pub fn utilization_matrix(n_batches: usize, events: &[RetrievalEvent]) -> UtilizationMatrix {
    let mut counts = vec![vec![0u64; n_batches]; n_batches];
    for event in events {
        let i = event.consumer_batch as usize;
        let j = event.origin_batch as usize;
        if i >= 1 && i <= n_batches && j >= 1 && j <= n_batches {
            counts[i - 1][j - 1] += 1;
        }
    }
    let rows = counts
        .into_iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                vec![0.0; n_batches]
            } else {
                row.into_iter().map(|c| c as f64 / total as f64).collect()
            }
        })
        .collect();
    UtilizationMatrix { n: n_batches, rows }
}

/// Per-origin hit counts for one consuming batch, useful for reports.
pub fn hits_by_origin(events: &[RetrievalEvent], consumer: u32) -> BTreeMap<u32, u64> {
    let mut map = BTreeMap::new();
    for event in events.iter().filter(|e| e.consumer_batch == consumer) {
        *map.entry(event.origin_batch).or_insert(0) += 1;
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::artifact::SourceFile;
    use crate::backends::SandboxConfig;
    use crate::chain::{Instruction, Solution};
    use crate::error::Error;

    fn artifact(content: &str) -> Artifact {
        Artifact::from_files(vec![SourceFile::new("main.sh", content)])
    }

    #[test]
    fn completeness_counts_todo_free_artifacts() {
        let clean1 = artifact("echo done\n");
        let clean2 = artifact("echo also done\n");
        let dirty = artifact("# TODO finish this\necho wip\n");
        let corpus = vec![&clean1, &clean2, &dirty];
        let got = completeness(&corpus).unwrap();
        assert!((got - 2.0 / 3.0).abs() < 1e-12);

        let all_dirty = vec![&dirty];
        assert_eq!(completeness(&all_dirty).unwrap(), 0.0);

        let all_clean = vec![&clean1, &clean2];
        assert_eq!(completeness(&all_clean).unwrap(), 1.0);

        assert!(matches!(
            completeness(&[]),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn completeness_is_invariant_under_file_order() {
        let a = Artifact::from_files(vec![
            SourceFile::new("a.sh", "echo a"),
            SourceFile::new("b.sh", "TODO"),
        ]);
        let b = Artifact::from_files(vec![
            SourceFile::new("b.sh", "TODO"),
            SourceFile::new("a.sh", "echo a"),
        ]);
        assert_eq!(
            completeness(&[&a]).unwrap(),
            completeness(&[&b]).unwrap()
        );
    }

    #[test]
    fn executability_counts_compile_and_launch() {
        let sandbox = Sandbox::new(SandboxConfig::default());
        let good1 = artifact("echo one\n");
        let good2 = artifact("true\n");
        let good3 = artifact("exit 0\n");
        let broken = artifact("if then fi ((\n");
        let corpus = vec![&good1, &good2, &good3, &broken];
        let got = executability(&corpus, &sandbox).unwrap();
        assert!((got - 0.75).abs() < 1e-12);

        let empty = Artifact::empty();
        assert_eq!(executability(&[&empty], &sandbox).unwrap(), 0.0);

        let all = vec![&good1, &good2];
        assert_eq!(executability(&all, &sandbox).unwrap(), 1.0);
    }

    /// Embedder double with pinned vectors per text.
    struct FixedEmbedder(std::collections::HashMap<String, Vec<f64>>);
    impl Embedder for FixedEmbedder {
        fn dimension(&self) -> usize {
            2
        }
        fn embed(&self, text: &str) -> Result<Vec<f64>> {
            self.0
                .get(text)
                .cloned()
                .ok_or_else(|| Error::backend(format!("no vector for {text:?}")))
        }
    }

    #[test]
    fn consistency_means_fixture_similarities() {
        let a1 = artifact("matching code\n");
        let a2 = artifact("half matching code\n");
        let mut map = std::collections::HashMap::new();
        map.insert("req one".to_string(), vec![1.0, 0.0]);
        map.insert(a1.flatten(), vec![1.0, 0.0]); // cos = 1.0
        map.insert("req two".to_string(), vec![0.0, 1.0]);
        map.insert(a2.flatten(), vec![0.5, 3.0_f64.sqrt() / 2.0]); // cos = √3/2... pinned below
        let embedder = FixedEmbedder(map);

        // Pair scores: 1.0 and cos((0,1),(0.5,√3/2)) = √3/2 ≈ 0.8660.
        let pairs = vec![("req one", &a1), ("req two", &a2)];
        let got = consistency(&pairs, &embedder).unwrap();
        let expect = (1.0 + 3.0_f64.sqrt() / 2.0) / 2.0;
        assert!((got - expect).abs() < 1e-12);
    }

    #[test]
    fn consistency_extremes() {
        let a1 = artifact("identical text\n");
        let a2 = artifact("orthogonal text\n");
        let mut map = std::collections::HashMap::new();
        map.insert("same".to_string(), vec![1.0, 0.0]);
        map.insert(a1.flatten(), vec![1.0, 0.0]);
        map.insert("other".to_string(), vec![1.0, 0.0]);
        map.insert(a2.flatten(), vec![0.0, 1.0]);
        let embedder = FixedEmbedder(map);

        assert_eq!(consistency(&[("same", &a1)], &embedder).unwrap(), 1.0);
        assert_eq!(consistency(&[("other", &a2)], &embedder).unwrap(), 0.0);
        // Mixed pair scores {1.0, 0.5}: craft a 60° vector for 0.5.
        let a3 = artifact("sixty degrees\n");
        let mut map = std::collections::HashMap::new();
        map.insert("same".to_string(), vec![1.0, 0.0]);
        map.insert(a1.flatten(), vec![1.0, 0.0]);
        map.insert("sixty".to_string(), vec![1.0, 0.0]);
        map.insert(a3.flatten(), vec![0.5, 3.0_f64.sqrt() / 2.0]);
        let embedder = FixedEmbedder(map);
        let got = consistency(&[("same", &a1), ("sixty", &a3)], &embedder).unwrap();
        assert!((got - 0.75).abs() < 1e-12);
    }

    #[test]
    fn quality_reproduces_published_rows() {
        // (α, β, γ, printed quality) for six published framework rows.
        let rows = [
            (0.4824, 0.3583, 0.7887, 0.1363),
            (0.4472, 0.4208, 0.7649, 0.1439),
            (0.7337, 0.8040, 0.7909, 0.4665),
            (0.8442, 0.8643, 0.7915, 0.5775),
            (0.8744, 0.9146, 0.7968, 0.6372),
            (0.8492, 0.9347, 0.7983, 0.6337),
        ];
        for (alpha, beta, gamma, printed) in rows {
            let q = quality(alpha, beta, gamma).unwrap();
            assert!(
                (q - printed).abs() < 1e-3,
                "{alpha}·{beta}·{gamma} = {q}, printed {printed}"
            );
            assert!(q <= alpha.min(beta).min(gamma));
        }
        assert_eq!(quality(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert!(quality(1.2, 0.5, 0.5).is_err());
        assert!(quality(0.5, -0.1, 0.5).is_err());
    }

    fn chain_with_rounds(review: u32, test: u32) -> ExecutionChain {
        let mut chain = ExecutionChain::new("t", "task").unwrap();
        let mut idx = 0;
        let mut push = |chain: &mut ExecutionChain, phase: Phase| {
            idx += 1;
            chain
                .append_step(
                    Instruction::new("t", idx, "step", phase),
                    Solution::new("t", idx, artifact("echo x\n")),
                )
                .unwrap();
        };
        push(&mut chain, Phase::Coding);
        for _ in 0..review {
            push(&mut chain, Phase::Review);
        }
        for _ in 0..test {
            push(&mut chain, Phase::Test);
        }
        chain
    }

    #[test]
    fn phase_efficiency_cases() {
        // Actual equals max in both phases: no early stopping anywhere.
        let eff = phase_efficiency(&chain_with_rounds(3, 3), 3, 3).unwrap();
        assert_eq!(eff, PhaseEfficiency { review: 0.0, test: 0.0, overall: 0.0 });

        // One of three review rounds used.
        let eff = phase_efficiency(&chain_with_rounds(1, 3), 3, 3).unwrap();
        assert!((eff.review - 2.0 / 3.0).abs() < 1e-12);

        // Zero rounds in both phases.
        let eff = phase_efficiency(&chain_with_rounds(0, 0), 3, 3).unwrap();
        assert_eq!(eff, PhaseEfficiency { review: 1.0, test: 1.0, overall: 1.0 });

        // Cap zero scores zero.
        let eff = phase_efficiency(&chain_with_rounds(0, 2), 0, 3).unwrap();
        assert_eq!(eff.review, 0.0);

        // Rounds beyond the caps are a precondition violation.
        assert!(phase_efficiency(&chain_with_rounds(4, 0), 3, 3).is_err());
    }

    fn event(consumer: u32, origin: u32) -> RetrievalEvent {
        RetrievalEvent {
            consumer_batch: consumer,
            task_id: "t".into(),
            kind: RecordKind::S2I,
            record_id: "r".into(),
            origin_batch: origin,
        }
    }

    #[test]
    fn utilization_matrix_normalizes_rows() {
        let events = vec![event(3, 1), event(3, 1), event(3, 2), event(3, 2)];
        let matrix = utilization_matrix(4, &events);
        assert_eq!(matrix.row(3), &[0.5, 0.5, 0.0, 0.0]);
        assert!(matrix.is_strictly_lower_triangular());
        let sum: f64 = matrix.row(3).iter().sum();
        assert!((sum - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn batch_without_hits_stays_all_zero() {
        let matrix = utilization_matrix(3, &[event(2, 1)]);
        assert_eq!(matrix.row(3), &[0.0, 0.0, 0.0]);
        assert_eq!(matrix.row(1), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn successive_style_events_fill_only_the_subdiagonal() {
        let events = vec![event(2, 1), event(3, 2), event(4, 3), event(4, 3)];
        let matrix = utilization_matrix(4, &events);
        for i in 2..=4u32 {
            assert_eq!(matrix.entry(i, i - 1), 1.0);
            for j in 1..=4u32 {
                if j != i - 1 {
                    assert_eq!(matrix.entry(i, j), 0.0);
                }
            }
        }
        let csv = matrix.to_csv();
        assert!(csv.starts_with("consumer_batch,producer_1"));
    }
}

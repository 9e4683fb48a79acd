//! Run reports.
//!
//! One structured JSON document per run carrying per-batch metric bundles,
//! hit ratios, elimination accounting, and the utilization matrix, plus an
//! aligned plain-text table for terminals and the matrix as CSV. All
//! renderings are deterministic functions of the run results.

use serde::{Deserialize, Serialize};

use crate::metrics::{utilization_matrix, MetricBundle, PhaseEfficiency, UtilizationMatrix};
use crate::propagation::{BatchResult, EliminationAccounting, RunConfig};

/// Per-batch slice of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub ordinal: u32,
    pub tasks_total: usize,
    pub tasks_failed: usize,
    pub metrics: MetricBundle,
    pub efficiency: PhaseEfficiency,
    pub active_pool_size: usize,
    pub acquired_records: usize,
    pub hit_ratio: f64,
    pub retrieval_events: usize,
    pub distinct_records_hit: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elimination: Option<EliminationAccounting>,
}

/// The whole-run report document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub pattern: String,
    pub n_batches: u32,
    pub seed: u64,
    pub k: usize,
    pub epsilon: f64,
    pub theta: f64,
    pub batches: Vec<BatchReport>,
    pub utilization: UtilizationMatrix,
    /// Ordinals of batches missing from an incomplete run directory.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing_batches: Vec<u32>,
}

/// Builds the report from in-memory batch results.
pub fn build_report(config: &RunConfig, results: &[BatchResult]) -> RunReport {
    let events: Vec<_> = results
        .iter()
        .flat_map(|r| r.retrieval_events.iter().cloned())
        .collect();
    let present: Vec<u32> = results.iter().map(|r| r.ordinal).collect();
    let missing: Vec<u32> = (1..=config.n_batches)
        .filter(|o| !present.contains(o))
        .collect();
    RunReport {
        pattern: config.pattern.as_str().to_string(),
        n_batches: config.n_batches,
        seed: config.seed,
        k: config.k,
        epsilon: config.epsilon,
        theta: config.theta,
        batches: results
            .iter()
            .map(|r| BatchReport {
                ordinal: r.ordinal,
                tasks_total: r.tasks_total,
                tasks_failed: r.tasks_failed,
                metrics: r.metrics.clone(),
                efficiency: r.efficiency,
                active_pool_size: r.active_size,
                acquired_records: r.acquired.len(),
                hit_ratio: r.hit_ratio,
                retrieval_events: r.retrieval_events.len(),
                distinct_records_hit: r.batch_freq.len(),
                elimination: r.elimination.clone(),
            })
            .collect(),
        utilization: utilization_matrix(config.n_batches as usize, &events),
        missing_batches: missing,
    }
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut json = serde_json::to_string_pretty(self).expect("report serializes");
        json.push('\n');
        json
    }

    pub fn from_json(json: &str) -> crate::error::Result<Self> {
        serde_json::from_str(json).map_err(|e| {
            crate::error::Error::InvalidArgument(format!("unreadable report: {e}"))
        })
    }

    pub fn utilization_csv(&self) -> String {
        self.utilization.to_csv()
    }

    /// Aligned fixed-width table for terminals.
    pub fn to_text_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "pattern={} batches={} seed={} k={} epsilon={} theta={}\n\n",
            self.pattern, self.n_batches, self.seed, self.k, self.epsilon, self.theta
        ));
        out.push_str(&format!(
            "{:>5} {:>5} {:>6} {:>7} {:>7} {:>7} {:>7} {:>9} {:>6} {:>8} {:>9} {:>8}\n",
            "batch", "tasks", "failed", "complet", "executa", "consist", "quality",
            "duration", "pool", "acquired", "hit_ratio", "overall"
        ));
        for b in &self.batches {
            out.push_str(&format!(
                "{:>5} {:>5} {:>6} {:>7.4} {:>7.4} {:>7.4} {:>7.4} {:>9.3} {:>6} {:>8} {:>9.4} {:>8.4}\n",
                b.ordinal,
                b.tasks_total,
                b.tasks_failed,
                b.metrics.completeness,
                b.metrics.executability,
                b.metrics.consistency,
                b.metrics.quality,
                b.metrics.mean_duration_seconds,
                b.active_pool_size,
                b.acquired_records,
                b.hit_ratio,
                b.efficiency.overall,
            ));
        }
        let eliminations: Vec<&BatchReport> = self
            .batches
            .iter()
            .filter(|b| b.elimination.is_some())
            .collect();
        if !eliminations.is_empty() {
            out.push_str("\nelimination accounting:\n");
            for b in eliminations {
                let e = b.elimination.as_ref().expect("filtered to some");
                out.push_str(&format!(
                    "  batch {}: retained {} / {} (fraction {:.6}); gain {}/{}, freq {}/{}{}\n",
                    b.ordinal,
                    e.retained_total,
                    e.original_total,
                    e.retained_fraction,
                    e.gain_retained,
                    e.gain_candidates,
                    e.freq_retained,
                    e.freq_candidates,
                    if e.freq_all_zero {
                        " [warning: all-zero frequencies]"
                    } else {
                        ""
                    },
                ));
            }
        }
        if !self.missing_batches.is_empty() {
            out.push_str(&format!(
                "\nincomplete run: missing batches {:?}\n",
                self.missing_batches
            ));
        }
        out
    }
}

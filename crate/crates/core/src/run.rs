//! Execution traces shared by all optimizers.

use serde::{Deserialize, Serialize};

/// One optimizer execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub best_fitness: f64,
    pub feasible: bool,
    pub subgroup_size: usize,
    pub rule_text: String,
    pub rule_bits: String,
    /// Fingerprint of the induced subgroup of the best rule.
    pub subgroup_digest: String,
    pub evaluations: u64,
    pub wall_s: f64,
    pub trace: Vec<TraceRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl RunRecord {
    /// Copy with wall time zeroed, for comparing runs.
    pub fn without_timing(&self) -> RunRecord {
        RunRecord {
            wall_s: 0.0,
            ..self.clone()
        }
    }

    pub fn best_ever_series(&self) -> Vec<f64> {
        self.trace
            .iter()
            .map(|t| match t {
                TraceRow::Generation { best_ever, .. } => *best_ever,
                TraceRow::Iteration { incumbent, .. } => *incumbent,
                TraceRow::Step { fitness, .. } => *fitness,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceRow {
    Generation {
        generation: usize,
        best_fitness: f64,
        best_ever: f64,
        /// Mean over feasible individuals.
        mean_fitness: Option<f64>,
        detected: bool,
        class_count: Option<usize>,
        elite_count: usize,
    },
    Iteration {
        iteration: usize,
        incumbent: f64,
        ei: Option<f64>,
        training_size: usize,
    },
    Step {
        step: usize,
        atom: Option<usize>,
        fitness: f64,
        subgroup_size: usize,
    },
}

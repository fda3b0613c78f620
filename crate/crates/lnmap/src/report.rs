//! Evaluation and ablation reports.
//!
//! `report.json` and `ablation.json` carry a `schema_version` field; the
//! corresponding JSON Schema documents live under `docs/` in the
//! repository root.

use std::collections::BTreeMap;

use lnmap_core::embedding::EmbeddingSpace;
use lnmap_core::retrieval::EvaluationReport;
use serde::{Deserialize, Serialize};

/// Current `report.json` schema.
pub const REPORT_SCHEMA: u32 = 1;
/// Current `ablation.json` schema.
pub const ABLATION_SCHEMA: u32 = 1;

/// One ranked candidate for a source word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub token: String,
    pub score: f64,
}

/// Evaluation outcome for one source word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub source: String,
    pub gold: Vec<String>,
    pub top: Vec<Candidate>,
}

/// The `report.json` document for one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub schema_version: u32,
    /// Model kind the evaluation ran against: `latent` or `procrustes`.
    pub model: String,
    pub csls_k: usize,
    /// Distinct gold source words that were scored.
    pub evaluated: usize,
    /// Gold source words dropped as out-of-vocabulary.
    pub oov: usize,
    /// Precision at each requested cutoff, keyed by the cutoff.
    pub precision: BTreeMap<String, f64>,
    pub predictions: Vec<PredictionRecord>,
}

impl EvalRecord {
    /// Converts a core evaluation into its serializable record, resolving
    /// row indices back to tokens.
    pub fn new(
        report: &EvaluationReport,
        src_space: &EmbeddingSpace,
        tgt_space: &EmbeddingSpace,
        model: &str,
        csls_k: usize,
    ) -> EvalRecord {
        let precision = report
            .precision
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        let predictions = report
            .predictions
            .iter()
            .map(|p| PredictionRecord {
                source: src_space.token(p.source).to_string(),
                gold: p.gold.iter().map(|&g| tgt_space.token(g).to_string()).collect(),
                top: p
                    .ranked
                    .iter()
                    .map(|&(t, score)| Candidate {
                        token: tgt_space.token(t).to_string(),
                        score,
                    })
                    .collect(),
            })
            .collect();
        EvalRecord {
            schema_version: REPORT_SCHEMA,
            model: model.to_string(),
            csls_k,
            evaluated: report.evaluated,
            oov: report.oov,
            precision,
            predictions,
        }
    }

    /// Human-readable summary table for stdout.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "evaluated {} source words ({} out-of-vocabulary)\n",
            self.evaluated, self.oov
        ));
        let mut cutoffs: Vec<(&String, &f64)> = self.precision.iter().collect();
        cutoffs.sort_by_key(|(k, _)| k.parse::<usize>().unwrap_or(usize::MAX));
        for (k, v) in cutoffs {
            out.push_str(&format!("p@{k:<3} {:.4}\n", v));
        }
        out
    }
}

/// One row of an ablation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    /// `ok` or `failed`.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p5: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p10: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

/// The `ablation.json` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRecord {
    pub schema_version: u32,
    pub rows: Vec<AblationRow>,
}

impl AblationRecord {
    pub fn new(rows: Vec<AblationRow>) -> AblationRecord {
        AblationRecord {
            schema_version: ABLATION_SCHEMA,
            rows,
        }
    }

    /// Markdown table with one row per variant, failures marked.
    pub fn render_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| variant | p@1 | p@5 | p@10 | iterations | status |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
        for row in &self.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} |\n",
                row.variant,
                cell(row.p1),
                cell(row.p5),
                cell(row.p10),
                row.iterations.map_or("-".to_string(), |i| i.to_string()),
                row.status,
            ));
        }
        out
    }
}

//! Answer scoring and metric aggregation.
//!
//! Each (query, context, answer) triple receives a hallucination score
//! (higher = more unsupported content) and an answer-relevance score
//! (higher = better), from either a remote LLM judge or the deterministic
//! lexical oracle. Aggregation sorts verdicts and sums pairwise so the
//! report is identical no matter the order verdicts arrive in.

mod judge_llm;
mod oracle;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use judge_llm::{JudgeSpec, LlmJudge};
pub use oracle::{judge_oracle, ORACLE_JUDGE_ID};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unjudgeable: no parseable verdict after {attempts} attempts")]
    Unjudgeable { attempts: u32 },
    #[error("pipeline {0} has zero verdicts")]
    NoVerdicts(String),
    #[error("invalid judge spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Http(#[from] crate::http::HttpError),
    #[error("unknown report format {0:?} (expected table, csv or json)")]
    UnknownFormat(String),
    #[error("malformed report JSON: {0}")]
    BadReport(String),
}

/// Scores for one query from one judge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub query_id: String,
    /// Fraction of answer content unsupported by the context, in [0,1];
    /// higher is worse.
    pub hallucination: f64,
    /// How directly the answer addresses the query, in [0,1]; higher is
    /// better.
    pub relevance: f64,
    pub rationale: String,
    pub judge_id: String,
}

/// Aggregated metrics for one pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineMetrics {
    pub answer_relevance_mean: f64,
    pub hallucination_mean: f64,
    pub n_queries: usize,
    pub n_missing: usize,
    pub per_query: Vec<JudgeVerdict>,
}

/// The full report; pipeline order follows config order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub pipelines: IndexMap<String, PipelineMetrics>,
}

/// Sum with recursive halving: the result depends only on element order,
/// and inputs are sorted first, so aggregation is permutation-invariant.
fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Verdicts for one pipeline plus how many queries produced none.
#[derive(Debug, Clone, Default)]
pub struct PipelineVerdicts {
    pub verdicts: Vec<JudgeVerdict>,
    pub n_missing: usize,
}

/// Compute per-pipeline means in ascending `query_id` order.
pub fn aggregate(
    per_pipeline: IndexMap<String, PipelineVerdicts>,
) -> Result<MetricsReport, EvalError> {
    let mut pipelines = IndexMap::new();
    for (name, mut input) in per_pipeline {
        if input.verdicts.is_empty() {
            return Err(EvalError::NoVerdicts(name));
        }
        input.verdicts.sort_by(|a, b| {
            a.query_id
                .cmp(&b.query_id)
                .then_with(|| a.hallucination.total_cmp(&b.hallucination))
                .then_with(|| a.relevance.total_cmp(&b.relevance))
        });
        let n = input.verdicts.len();
        let relevance: Vec<f64> = input.verdicts.iter().map(|v| v.relevance).collect();
        let hallucination: Vec<f64> = input.verdicts.iter().map(|v| v.hallucination).collect();
        pipelines.insert(
            name,
            PipelineMetrics {
                answer_relevance_mean: pairwise_sum(&relevance) / n as f64,
                hallucination_mean: pairwise_sum(&hallucination) / n as f64,
                n_queries: n,
                n_missing: input.n_missing,
                per_query: input.verdicts,
            },
        );
    }
    Ok(MetricsReport { pipelines })
}

/// Output format for [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Self::Table),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(EvalError::UnknownFormat(other.to_string())),
        }
    }
}

/// Render `report` in the requested format.
pub fn emit_report(report: &MetricsReport, format: ReportFormat) -> Result<String, EvalError> {
    if report.pipelines.is_empty() {
        return Err(EvalError::BadReport("report has no pipelines".into()));
    }
    Ok(match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(report).expect("report serializes") + "\n"
        }
        ReportFormat::Csv => {
            let mut out = String::from("pipeline,metric,value\n");
            for (name, metrics) in &report.pipelines {
                out.push_str(&format!(
                    "{name},answer_relevance,{:.2}\n",
                    metrics.answer_relevance_mean
                ));
                out.push_str(&format!(
                    "{name},hallucination,{:.2}\n",
                    metrics.hallucination_mean
                ));
            }
            out
        }
        ReportFormat::Table => render_table(report),
    })
}

/// Fixed-width table: metric rows by pipeline columns, 2-decimal means.
fn render_table(report: &MetricsReport) -> String {
    const METRIC_COL: usize = 16;
    let names: Vec<&String> = report.pipelines.keys().collect();
    let widths: Vec<usize> = names.iter().map(|n| n.len().max(6)).collect();

    let mut out = String::new();
    out.push_str(&format!("{:<METRIC_COL$}", "Metric"));
    for (name, width) in names.iter().zip(&widths) {
        out.push_str(&format!(" | {name:>width$}"));
    }
    out.push('\n');
    out.push_str(&"-".repeat(METRIC_COL));
    for width in &widths {
        out.push_str("-+-");
        out.push_str(&"-".repeat(*width));
    }
    out.push('\n');

    let rows: [(&str, fn(&PipelineMetrics) -> f64); 2] = [
        ("Answer Relevance", |m| m.answer_relevance_mean),
        ("Hallucination", |m| m.hallucination_mean),
    ];
    for (label, getter) in rows {
        out.push_str(&format!("{label:<METRIC_COL$}"));
        for (metrics, width) in report.pipelines.values().zip(&widths) {
            out.push_str(&format!(" | {:>width$.2}", getter(metrics)));
        }
        out.push('\n');
    }

    let missing_total: usize = report.pipelines.values().map(|m| m.n_missing).sum();
    if missing_total > 0 {
        out.push('\n');
        for (name, metrics) in &report.pipelines {
            if metrics.n_missing > 0 {
                out.push_str(&format!(
                    "note: {name}: {} unjudgeable quer{} excluded from means\n",
                    metrics.n_missing,
                    if metrics.n_missing == 1 { "y" } else { "ies" }
                ));
            }
        }
    }
    out
}

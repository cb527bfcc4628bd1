//! Remote LLM judge.
//!
//! The judge model receives a fixed rubric prompt and must reply with a
//! strict JSON verdict. Replies are parsed by extracting the first
//! complete JSON object (judges love to wrap JSON in prose); scores are
//! clamped to [0,1] with a warning. An unparseable reply triggers up to
//! two re-asks before the query is declared unjudgeable.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::generation::{ContextBlock, GenerationDialect};
use crate::http::HttpClient;

use super::{EvalError, JudgeVerdict};

/// Total requests per query: the initial ask plus two re-asks.
const MAX_ATTEMPTS: u32 = 3;

/// How to reach the judge model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeSpec {
    pub model_name: String,
    pub endpoint_url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dialect: Option<GenerationDialect>,
}

impl JudgeSpec {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.endpoint_url.is_empty() {
            return Err(EvalError::InvalidSpec("judge requires endpoint_url".into()));
        }
        Ok(())
    }
}

/// Judge backed by a remote model endpoint.
pub struct LlmJudge {
    spec: JudgeSpec,
    http: HttpClient,
}

/// Normative scoring rubric sent with every judging request.
const RUBRIC: &str = "You are an evaluation judge for retrieval-augmented answers.\n\
Score \"hallucination\" as the fraction of answer claims not supported by the provided context \
(0.0 = every claim supported, 1.0 = nothing supported).\n\
Score \"relevance\" as how directly the answer addresses the question \
(0.0 = unrelated, 1.0 = fully on point).\n\
Respond with strict JSON only, exactly one object of the form \
{\"hallucination\": <number>, \"relevance\": <number>, \"rationale\": \"<one sentence>\"}.";

const REASK_SUFFIX: &str = "\n\nYour previous reply could not be parsed. \
Respond with ONLY the JSON object, no surrounding text.";

impl LlmJudge {
    pub fn new(spec: JudgeSpec) -> Result<Self, EvalError> {
        Self::with_http(spec, HttpClient::from_env())
    }

    pub fn with_http(spec: JudgeSpec, http: HttpClient) -> Result<Self, EvalError> {
        spec.validate()?;
        Ok(Self { spec, http })
    }

    fn judging_prompt(query: &str, context_blocks: &[ContextBlock], answer: &str) -> String {
        let mut prompt = String::new();
        prompt.push_str("Question: ");
        prompt.push_str(query);
        prompt.push_str("\n\nContext:\n");
        if context_blocks.is_empty() {
            prompt.push_str("(no context was retrieved)\n");
        }
        for (i, block) in context_blocks.iter().enumerate() {
            prompt.push_str(&format!("[{}] ({})\n{}\n", i + 1, block.chunk_id, block.text));
        }
        prompt.push_str("\nAnswer to evaluate:\n");
        prompt.push_str(answer);
        prompt
    }

    fn request_body(&self, rubric: &str, task: &str) -> Value {
        match self.spec.dialect.unwrap_or(GenerationDialect::Native) {
            GenerationDialect::OpenAiChat => serde_json::json!({
                "model": self.spec.model_name,
                "messages": [
                    {"role": "system", "content": rubric},
                    {"role": "user", "content": task},
                ],
                "temperature": 0.0,
                "top_p": 1.0,
                "max_tokens": 512,
            }),
            GenerationDialect::Ollama => serde_json::json!({
                "model": self.spec.model_name,
                "prompt": format!("{rubric}\n\n{task}"),
                "stream": false,
                "options": {"temperature": 0.0, "top_p": 1.0, "num_predict": 512},
            }),
            GenerationDialect::Native => serde_json::json!({
                "model": self.spec.model_name,
                "prompt": format!("{rubric}\n\n{task}"),
                "temperature": 0.0,
                "top_p": 1.0,
                "max_tokens": 512,
            }),
        }
    }

    fn reply_text(&self, value: &Value) -> Option<String> {
        match self.spec.dialect.unwrap_or(GenerationDialect::Native) {
            GenerationDialect::Native => value.get("text").and_then(Value::as_str).map(String::from),
            GenerationDialect::Ollama => value
                .get("response")
                .and_then(Value::as_str)
                .map(String::from),
            GenerationDialect::OpenAiChat => value
                .get("choices")
                .and_then(Value::as_array)
                .and_then(|c| c.first())
                .and_then(|c| c.get("message"))
                .and_then(|m| m.get("content"))
                .and_then(Value::as_str)
                .map(String::from),
        }
    }

    /// Judge one answer. Returns the verdict plus any clamp warnings;
    /// errors with [`EvalError::Unjudgeable`] after the re-ask budget.
    pub fn judge(
        &self,
        query_id: &str,
        query: &str,
        context_blocks: &[ContextBlock],
        answer: &str,
    ) -> Result<(JudgeVerdict, Vec<String>), EvalError> {
        let task = Self::judging_prompt(query, context_blocks, answer);
        let mut attempts = 0;
        while attempts < MAX_ATTEMPTS {
            attempts += 1;
            let rubric = if attempts == 1 {
                RUBRIC.to_string()
            } else {
                format!("{RUBRIC}{REASK_SUFFIX}")
            };
            let reply = self
                .http
                .post_json(&self.spec.endpoint_url, &self.request_body(&rubric, &task))?;
            let Some(text) = self.reply_text(&reply) else {
                continue;
            };
            if let Some(raw) = parse_verdict(&text) {
                let mut warnings = Vec::new();
                let hallucination = clamp_score(raw.hallucination, "hallucination", query_id, &mut warnings);
                let relevance = clamp_score(raw.relevance, "relevance", query_id, &mut warnings);
                return Ok((
                    JudgeVerdict {
                        query_id: query_id.to_string(),
                        hallucination,
                        relevance,
                        rationale: raw.rationale,
                        judge_id: self.spec.model_name.clone(),
                    },
                    warnings,
                ));
            }
        }
        Err(EvalError::Unjudgeable { attempts })
    }
}

struct RawVerdict {
    hallucination: f64,
    relevance: f64,
    rationale: String,
}

fn clamp_score(value: f64, name: &str, query_id: &str, warnings: &mut Vec<String>) -> f64 {
    if (0.0..=1.0).contains(&value) {
        return value;
    }
    let clamped = value.clamp(0.0, 1.0);
    warnings.push(format!(
        "{query_id}: judge {name} score {value} clamped to {clamped}"
    ));
    clamped
}

/// Extract the first complete JSON object carrying both scores.
fn parse_verdict(reply: &str) -> Option<RawVerdict> {
    for candidate in json_objects(reply) {
        let Ok(value) = serde_json::from_str::<Value>(&candidate) else {
            continue;
        };
        let (Some(hallucination), Some(relevance)) = (
            value.get("hallucination").and_then(Value::as_f64),
            value.get("relevance").and_then(Value::as_f64),
        ) else {
            continue;
        };
        if !hallucination.is_finite() || !relevance.is_finite() {
            continue;
        }
        let rationale = value
            .get("rationale")
            .and_then(Value::as_str)
            .unwrap_or("")
            .to_string();
        return Some(RawVerdict {
            hallucination,
            relevance,
            rationale,
        });
    }
    None
}

/// Balanced-brace candidate objects in `text`, left to right, skipping
/// brace characters inside JSON strings.
fn json_objects(text: &str) -> impl Iterator<Item = String> + '_ {
    let bytes = text.as_bytes();
    let mut search_from = 0;
    std::iter::from_fn(move || {
        while search_from < bytes.len() {
            let Some(open) = text[search_from..].find('{').map(|i| i + search_from) else {
                return None;
            };
            let mut depth = 0usize;
            let mut in_string = false;
            let mut escaped = false;
            for (offset, ch) in text[open..].char_indices() {
                if escaped {
                    escaped = false;
                    continue;
                }
                match ch {
                    '\\' if in_string => escaped = true,
                    '"' => in_string = !in_string,
                    '{' if !in_string => depth += 1,
                    '}' if !in_string => {
                        depth -= 1;
                        if depth == 0 {
                            let end = open + offset + ch.len_utf8();
                            search_from = open + 1;
                            return Some(text[open..end].to_string());
                        }
                    }
                    _ => {}
                }
            }
            // Unbalanced tail: try the next opening brace.
            search_from = open + 1;
        }
        None
    })
}

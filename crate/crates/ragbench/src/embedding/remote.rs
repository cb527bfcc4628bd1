//! Remote embedding endpoints.
//!
//! Internally every provider speaks one shape — `POST {"model", "input":
//! [texts]}` returning `{"vectors": [[...]]}` — with thin adapters mapping
//! that shape onto specific endpoint dialects. Requests are batched and
//! issued with bounded concurrency.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::http::{HttpClient, Semaphore};

use super::{EmbedError, EmbedderSpec};

/// Wire dialect spoken by an embedding endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingDialect {
    /// `{"model","input"}` → `{"vectors": [[...]]}`.
    Native,
    /// OpenAI-style: `{"model","input"}` → `{"data":[{"embedding":[...]},..]}`.
    OpenAi,
    /// Ollama-style: `{"model","input"}` → `{"embeddings": [[...]]}`.
    Ollama,
}

/// Texts per request; keeps request bodies small without flooding the
/// endpoint with tiny calls.
const BATCH_SIZE: usize = 16;
/// Maximum concurrent embedding requests.
const MAX_IN_FLIGHT: usize = 4;

pub(crate) fn build_request(dialect: EmbeddingDialect, model: &str, texts: &[String]) -> Value {
    // All three dialects happen to accept the same request shape today;
    // keeping the dispatch explicit documents that this is per-dialect.
    match dialect {
        EmbeddingDialect::Native | EmbeddingDialect::OpenAi | EmbeddingDialect::Ollama => {
            json!({ "model": model, "input": texts })
        }
    }
}

pub(crate) fn parse_response(
    dialect: EmbeddingDialect,
    value: &Value,
) -> Result<Vec<Vec<f64>>, EmbedError> {
    let rows: Vec<&Value> = match dialect {
        EmbeddingDialect::Native => as_array(value, "vectors")?.iter().collect(),
        EmbeddingDialect::Ollama => as_array(value, "embeddings")?.iter().collect(),
        EmbeddingDialect::OpenAi => {
            let mut data: Vec<&Value> = as_array(value, "data")?.iter().collect();
            data.sort_by_key(|row| row.get("index").and_then(Value::as_u64).unwrap_or(0));
            data.iter()
                .map(|row| {
                    row.get("embedding").ok_or_else(|| {
                        EmbedError::BadResponse("data row missing \"embedding\"".into())
                    })
                })
                .collect::<Result<Vec<_>, _>>()?
        }
    };
    rows.into_iter().map(parse_vector).collect()
}

fn as_array<'v>(value: &'v Value, field: &str) -> Result<&'v Vec<Value>, EmbedError> {
    value
        .get(field)
        .and_then(Value::as_array)
        .ok_or_else(|| EmbedError::BadResponse(format!("response missing array field \"{field}\"")))
}

fn parse_vector(value: &Value) -> Result<Vec<f64>, EmbedError> {
    let row = value
        .as_array()
        .ok_or_else(|| EmbedError::BadResponse("vector is not an array".into()))?;
    row.iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| EmbedError::BadResponse("non-numeric vector component".into()))
        })
        .collect()
}

/// Fetch raw vectors for `texts`, batched, preserving order.
pub(crate) fn fetch_embeddings(
    http: &HttpClient,
    spec: &EmbedderSpec,
    texts: &[String],
) -> Result<Vec<Vec<f64>>, EmbedError> {
    let url = spec.endpoint_url.as_deref().expect("validated spec");
    let dialect = spec.dialect.unwrap_or(EmbeddingDialect::Native);
    let batches: Vec<&[String]> = texts.chunks(BATCH_SIZE).collect();
    let semaphore = Semaphore::new(MAX_IN_FLIGHT);

    let mut results: Vec<Option<Result<Vec<Vec<f64>>, EmbedError>>> =
        (0..batches.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(batches.len());
        for batch in &batches {
            let semaphore = &semaphore;
            let model = &spec.model_name;
            handles.push(scope.spawn(move || {
                let _permit = semaphore.acquire();
                let body = build_request(dialect, model, batch);
                let reply = http.post_json(url, &body)?;
                let vectors = parse_response(dialect, &reply)?;
                if vectors.len() != batch.len() {
                    return Err(EmbedError::BadResponse(format!(
                        "asked for {} embeddings, got {}",
                        batch.len(),
                        vectors.len()
                    )));
                }
                Ok(vectors)
            }));
        }
        for (slot, handle) in results.iter_mut().zip(handles) {
            *slot = Some(handle.join().expect("embedding worker panicked"));
        }
    });

    let mut out = Vec::with_capacity(texts.len());
    for slot in results {
        out.extend(slot.expect("all slots filled")?);
    }
    Ok(out)
}

//! Remote completion endpoints.
//!
//! The normalized internal request is `POST {"model", "prompt",
//! "temperature", "top_p", "max_tokens"}` returning `{"text"}`; adapters
//! map it onto chat-style and Ollama-style endpoints. Greedy decoding is
//! forwarded as the profile temperature plus `top_p = 1.0`; the native
//! dialect additionally carries an explicit `greedy` flag, dialects
//! without one rely on the `top_p` mapping alone.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::http::HttpClient;

use super::{DecodingParams, DecodingStrategy, GenError, GeneratorSpec, PromptBundle};

/// Wire dialect spoken by a generation endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationDialect {
    /// `{"model","prompt","temperature","top_p","max_tokens"[,"greedy"]}`
    /// → `{"text"}`.
    Native,
    /// Chat-style: system/user messages → `{"choices":[{"message":...}]}`.
    OpenAiChat,
    /// Ollama-style: `{"model","prompt","options",...}` → `{"response"}`.
    Ollama,
}

pub(crate) fn build_request(
    dialect: GenerationDialect,
    spec: &GeneratorSpec,
    bundle: &PromptBundle,
    decoding: &DecodingParams,
) -> Value {
    let top_p = decoding.effective_top_p();
    match dialect {
        GenerationDialect::Native => {
            let mut body = json!({
                "model": spec.model_name,
                "prompt": bundle.render(),
                "temperature": decoding.temperature,
                "top_p": top_p,
                "max_tokens": decoding.max_output_tokens,
            });
            if decoding.strategy == DecodingStrategy::Greedy {
                body["greedy"] = Value::Bool(true);
            }
            body
        }
        GenerationDialect::OpenAiChat => {
            let mut user = String::new();
            for (i, block) in bundle.context_blocks.iter().enumerate() {
                user.push_str(&format!(
                    "Context [{}] ({}):\n{}\n\n",
                    i + 1,
                    block.chunk_id,
                    block.text
                ));
            }
            user.push_str(&format!("Question: {}", bundle.query));
            json!({
                "model": spec.model_name,
                "messages": [
                    {"role": "system", "content": bundle.system_preamble},
                    {"role": "user", "content": user},
                ],
                "temperature": decoding.temperature,
                "top_p": top_p,
                "max_tokens": decoding.max_output_tokens,
            })
        }
        GenerationDialect::Ollama => json!({
            "model": spec.model_name,
            "prompt": bundle.render(),
            "stream": false,
            "options": {
                "temperature": decoding.temperature,
                "top_p": top_p,
                "num_predict": decoding.max_output_tokens,
            },
        }),
    }
}

pub(crate) fn parse_response(dialect: GenerationDialect, value: &Value) -> Result<String, GenError> {
    let text = match dialect {
        GenerationDialect::Native => value.get("text").and_then(Value::as_str),
        GenerationDialect::Ollama => value.get("response").and_then(Value::as_str),
        GenerationDialect::OpenAiChat => value
            .get("choices")
            .and_then(Value::as_array)
            .and_then(|choices| choices.first())
            .and_then(|choice| choice.get("message"))
            .and_then(|message| message.get("content"))
            .and_then(Value::as_str),
    };
    text.map(str::to_string)
        .ok_or_else(|| GenError::BadResponse("no completion text in response".into()))
}

pub(crate) fn fetch_completion(
    http: &HttpClient,
    spec: &GeneratorSpec,
    bundle: &PromptBundle,
    decoding: &DecodingParams,
) -> Result<String, GenError> {
    let url = spec.endpoint_url.as_deref().expect("validated spec");
    let dialect = spec.dialect.unwrap_or(GenerationDialect::Native);
    let body = build_request(dialect, spec, bundle, decoding);
    let reply = http.post_json(url, &body)?;
    parse_response(dialect, &reply)
}

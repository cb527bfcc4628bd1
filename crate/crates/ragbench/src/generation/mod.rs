//! Prompt assembly and answer generation.
//!
//! [`assemble_prompt`] packs retrieved chunks into a token-budgeted prompt:
//! blocks are taken in retrieval order and included whole while they fit;
//! the first block that would overflow is truncated at a token boundary and
//! every later block is dropped. [`Generator`] sends the prompt to a remote
//! endpoint or answers locally with a deterministic extractive stub.

mod remote;
mod stub;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunking::Chunk;
use crate::http::{HttpClient, HttpError, Semaphore};
use crate::retrieval::RetrievalResult;
use crate::tokenize::{count_tokens, tokens};

pub use remote::GenerationDialect;
pub use stub::stub_generate;

/// Grounding instruction at the top of every prompt (11 tokens).
pub const SYSTEM_PREAMBLE: &str =
    "You are a research assistant. Answer strictly from the provided context.";

/// Tokens consumed by one block header "Context [i] (chunk_id):".
const BLOCK_HEADER_TOKENS: usize = 3;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid decoding params: {0}")]
    InvalidParams(String),
    #[error("query exceeds window")]
    QueryExceedsWindow,
    #[error("retrieved chunk {0} not found in chunk set")]
    UnknownChunk(String),
    #[error("prompt of {prompt_tokens} tokens plus {max_output_tokens} output exceeds window {window}")]
    PromptExceedsWindow {
        prompt_tokens: usize,
        max_output_tokens: usize,
        window: usize,
    },
    #[error("empty answer")]
    EmptyAnswer,
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error("malformed generation response: {0}")]
    BadResponse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodingStrategy {
    Greedy,
    Nucleus,
}

/// Per-profile decoding controls, forwarded verbatim to the backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub temperature: f64,
    pub strategy: DecodingStrategy,
    pub top_p: f64,
    pub max_output_tokens: usize,
}

impl DecodingParams {
    pub fn greedy() -> Self {
        Self {
            temperature: 0.2,
            strategy: DecodingStrategy::Greedy,
            top_p: 1.0,
            max_output_tokens: 512,
        }
    }

    pub fn nucleus(top_p: f64) -> Self {
        Self {
            temperature: 0.2,
            strategy: DecodingStrategy::Nucleus,
            top_p,
            max_output_tokens: 512,
        }
    }

    /// Greedy decoding always maps to an effective top_p of 1.0.
    pub fn effective_top_p(&self) -> f64 {
        match self.strategy {
            DecodingStrategy::Greedy => 1.0,
            DecodingStrategy::Nucleus => self.top_p,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.temperature < 0.0 || !self.temperature.is_finite() {
            return Err(GenError::InvalidParams(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if self.strategy == DecodingStrategy::Nucleus
            && !(self.top_p > 0.0 && self.top_p <= 1.0)
        {
            return Err(GenError::InvalidParams(format!(
                "top_p must be in (0,1], got {}",
                self.top_p
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(GenError::InvalidParams(
                "max_output_tokens must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// One context block as it appears in the prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBlock {
    pub chunk_id: String,
    pub text: String,
}

/// A fully budgeted prompt, immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_preamble: String,
    pub query: String,
    pub context_blocks: Vec<ContextBlock>,
    pub total_prompt_tokens: usize,
    pub window: usize,
    /// Output reservation the bundle was budgeted against.
    pub max_output_tokens: usize,
}

impl PromptBundle {
    /// The literal prompt text sent to completion-style backends.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.system_preamble);
        for (i, block) in self.context_blocks.iter().enumerate() {
            out.push_str("\n\nContext [");
            out.push_str(&(i + 1).to_string());
            out.push_str("] (");
            out.push_str(&block.chunk_id);
            out.push_str("):\n");
            out.push_str(&block.text);
        }
        out.push_str("\n\nQuestion: ");
        out.push_str(&self.query);
        out
    }
}

/// Pack the retrieval result into a prompt that fits `window`.
///
/// Budget: `window − max_output_tokens − preamble − "Question:" − query`,
/// spent on blocks of `3 header tokens + content` in retrieval order. The
/// first block that does not fit whole is truncated at a token boundary
/// (kept only if at least one content token survives); later blocks are
/// dropped whole.
pub fn assemble_prompt(
    query: &str,
    result: &RetrievalResult,
    chunks: &[Chunk],
    window: usize,
    decoding: &DecodingParams,
) -> Result<PromptBundle, GenError> {
    decoding.validate()?;
    let fixed_overhead = count_tokens(SYSTEM_PREAMBLE) + 1 + count_tokens(query);
    let budget = window
        .checked_sub(decoding.max_output_tokens)
        .and_then(|b| b.checked_sub(fixed_overhead));
    let Some(mut remaining) = budget.filter(|&b| b > 0) else {
        return Err(GenError::QueryExceedsWindow);
    };

    let mut context_blocks = Vec::new();
    let mut used = 0usize;
    for selection in &result.selected {
        let chunk = chunks
            .iter()
            .find(|c| c.chunk_id == selection.chunk_id)
            .ok_or_else(|| GenError::UnknownChunk(selection.chunk_id.clone()))?;
        let text = chunk.retrieval_text();
        let content_tokens = count_tokens(&text);
        let whole_cost = BLOCK_HEADER_TOKENS + content_tokens;
        if whole_cost <= remaining {
            remaining -= whole_cost;
            used += whole_cost;
            context_blocks.push(ContextBlock {
                chunk_id: chunk.chunk_id.clone(),
                text,
            });
            continue;
        }
        // Truncate this block to the remaining budget, then stop taking
        // blocks altogether.
        if remaining > BLOCK_HEADER_TOKENS {
            let keep = remaining - BLOCK_HEADER_TOKENS;
            let kept_tokens = tokens(&text);
            let truncated = kept_tokens[..keep.min(kept_tokens.len())].join(" ");
            let cost = BLOCK_HEADER_TOKENS + count_tokens(&truncated);
            used += cost;
            context_blocks.push(ContextBlock {
                chunk_id: chunk.chunk_id.clone(),
                text: truncated,
            });
        }
        break;
    }

    let total_prompt_tokens = fixed_overhead + used;
    debug_assert!(total_prompt_tokens + decoding.max_output_tokens <= window);
    Ok(PromptBundle {
        system_preamble: SYSTEM_PREAMBLE.to_string(),
        query: query.to_string(),
        context_blocks,
        total_prompt_tokens,
        window,
        max_output_tokens: decoding.max_output_tokens,
    })
}

/// Completed generation with token accounting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationResponse {
    pub answer: String,
    pub backend_id: String,
    pub prompt_tokens: usize,
    pub output_tokens: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenProvider {
    Remote,
    Stub,
}

/// Which text generator to use and how to reach it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub provider: GenProvider,
    pub model_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dialect: Option<GenerationDialect>,
}

impl GeneratorSpec {
    pub fn stub(model_name: &str, seed: u64) -> Self {
        Self {
            provider: GenProvider::Stub,
            model_name: model_name.to_string(),
            endpoint_url: None,
            seed: Some(seed),
            dialect: None,
        }
    }

    pub fn remote(model_name: &str, endpoint_url: &str) -> Self {
        Self {
            provider: GenProvider::Remote,
            model_name: model_name.to_string(),
            endpoint_url: Some(endpoint_url.to_string()),
            seed: None,
            dialect: None,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        match self.provider {
            GenProvider::Remote => {
                if self.endpoint_url.as_deref().unwrap_or("").is_empty() {
                    return Err(GenError::InvalidSpec(
                        "remote generator requires endpoint_url".into(),
                    ));
                }
            }
            GenProvider::Stub => {
                if self.seed.is_none() {
                    return Err(GenError::InvalidSpec("stub generator requires a seed".into()));
                }
            }
        }
        Ok(())
    }
}

/// Answer backend with bounded request concurrency (2 in flight).
pub struct Generator {
    spec: GeneratorSpec,
    http: HttpClient,
    in_flight: Semaphore,
}

impl Generator {
    pub fn new(spec: GeneratorSpec) -> Result<Self, GenError> {
        Self::with_http(spec, HttpClient::from_env())
    }

    pub fn with_http(spec: GeneratorSpec, http: HttpClient) -> Result<Self, GenError> {
        spec.validate()?;
        Ok(Self {
            spec,
            http,
            in_flight: Semaphore::new(2),
        })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    /// Produce an answer for `bundle`; decoding parameters are forwarded
    /// verbatim. Over-window bundles are refused before any network call.
    pub fn generate(
        &self,
        bundle: &PromptBundle,
        decoding: &DecodingParams,
    ) -> Result<GenerationResponse, GenError> {
        decoding.validate()?;
        if bundle.total_prompt_tokens + decoding.max_output_tokens > bundle.window {
            return Err(GenError::PromptExceedsWindow {
                prompt_tokens: bundle.total_prompt_tokens,
                max_output_tokens: decoding.max_output_tokens,
                window: bundle.window,
            });
        }
        let answer = match self.spec.provider {
            GenProvider::Stub => {
                return Ok(stub::stub_generate(
                    self.spec.seed.expect("validated"),
                    bundle,
                ));
            }
            GenProvider::Remote => {
                let _permit = self.in_flight.acquire();
                remote::fetch_completion(&self.http, &self.spec, bundle, decoding)?
            }
        };
        if answer.trim().is_empty() {
            return Err(GenError::EmptyAnswer);
        }
        Ok(GenerationResponse {
            output_tokens: count_tokens(&answer),
            prompt_tokens: bundle.total_prompt_tokens,
            backend_id: self.spec.model_name.clone(),
            answer,
        })
    }
}

//! Deterministic offline answer backend.
//!
//! The stub answers extractively: it copies the first 60 tokens of the
//! highest-ranked context block behind an "Answer:" prefix. Extractive
//! answers are fully supported by their context, which gives the lexical
//! judge a clean zero-hallucination baseline to calibrate against.

use crate::tokenize::{count_tokens, tokens};

use super::{GenerationResponse, PromptBundle};

/// Copied-token budget for stub answers.
const ANSWER_TOKENS: usize = 60;

/// Produce the deterministic extractive answer for `bundle`.
pub fn stub_generate(seed: u64, bundle: &PromptBundle) -> GenerationResponse {
    let answer = match bundle.context_blocks.first() {
        None => "Answer: no context available".to_string(),
        Some(block) => {
            let toks = tokens(&block.text);
            let take = toks.len().min(ANSWER_TOKENS);
            format!("Answer: {}", toks[..take].join(" "))
        }
    };
    GenerationResponse {
        output_tokens: count_tokens(&answer),
        prompt_tokens: bundle.total_prompt_tokens,
        backend_id: format!("stub:{seed}"),
        answer,
    }
}

//! Deterministic lexical judge.
//!
//! Scores are pure token-set arithmetic: a token "supports" the answer if
//! it also appears in the context, and the answer is "relevant" to the
//! extent it reuses the query's content words. Tokens are lowercased,
//! stripped of surrounding punctuation, and filtered against a fixed
//! stopword list so that glue words (and the "Answer:"/"Question:" scaffold)
//! do not count as content.

use std::collections::BTreeSet;

use crate::generation::ContextBlock;

use super::JudgeVerdict;

pub const ORACLE_JUDGE_ID: &str = "lexical-oracle";

/// 30 function words (plus the prompt scaffold words) ignored by the
/// oracle.
const STOPWORDS: [&str; 30] = [
    "a", "an", "the", "and", "or", "but", "if", "then", "is", "are", "was", "were", "be", "been",
    "to", "of", "in", "on", "at", "by", "for", "with", "as", "from", "that", "this", "it", "its",
    "answer", "question",
];

fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(&token)
}

/// Lowercased, punctuation-stripped, stopword-filtered token set.
pub(crate) fn content_tokens(text: &str) -> BTreeSet<String> {
    text.split_whitespace()
        .filter_map(|raw| {
            let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if trimmed.is_empty() {
                return None;
            }
            let lower = trimmed.to_lowercase();
            if is_stopword(&lower) {
                None
            } else {
                Some(lower)
            }
        })
        .collect()
}

/// Score an answer against its context and query with set arithmetic.
///
/// hallucination = 1 − |answer ∩ context| / |answer|, 0 for an answer with
/// no content tokens; relevance = |answer ∩ query| / |query|, 0 for a
/// query with none. Context blocks are a set union, so their order never
/// matters.
pub fn judge_oracle(
    query_id: &str,
    query: &str,
    context_blocks: &[ContextBlock],
    answer: &str,
) -> JudgeVerdict {
    let mut context = BTreeSet::new();
    for block in context_blocks {
        context.extend(content_tokens(&block.text));
    }
    let answer_tokens = content_tokens(answer);
    let query_tokens = content_tokens(query);

    let hallucination = if answer_tokens.is_empty() {
        0.0
    } else {
        let supported = answer_tokens.intersection(&context).count();
        1.0 - supported as f64 / answer_tokens.len() as f64
    };
    let relevance = if query_tokens.is_empty() {
        0.0
    } else {
        let addressed = query_tokens.intersection(&answer_tokens).count();
        addressed as f64 / query_tokens.len() as f64
    };

    JudgeVerdict {
        query_id: query_id.to_string(),
        hallucination,
        relevance,
        rationale: String::new(),
        judge_id: ORACLE_JUDGE_ID.to_string(),
    }
}

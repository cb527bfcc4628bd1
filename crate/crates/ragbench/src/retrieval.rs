//! Context selection: plain top-k or Maximal Marginal Relevance.
//!
//! MMR uses the standard Carbonell–Goldstein form. The first pick is the
//! plain similarity argmax; every later pick maximizes
//! `λ·sim(q,d) − (1−λ)·max_{s∈selected} sim(d,s)` over the remaining
//! candidate pool. All ties break by ascending chunk_id so retrieval is
//! reproducible.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingVector;
use crate::vector_index::{dot, Index, IndexError, SearchHit};

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("invalid retrieval params: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalStrategy {
    Topk,
    Mmr,
}

/// How many chunks to select and by which rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalParams {
    pub strategy: RetrievalStrategy,
    pub k: usize,
    /// MMR trade-off: 1.0 = pure relevance, 0.0 = pure diversity.
    pub lambda: f64,
    /// MMR re-ranks only the top `candidate_pool` hits.
    pub candidate_pool: usize,
}

impl RetrievalParams {
    pub fn topk(k: usize) -> Self {
        Self {
            strategy: RetrievalStrategy::Topk,
            k,
            lambda: 1.0,
            candidate_pool: k,
        }
    }

    pub fn mmr(k: usize, lambda: f64) -> Self {
        Self {
            strategy: RetrievalStrategy::Mmr,
            k,
            lambda,
            candidate_pool: 20.max(k),
        }
    }

    pub fn validate(&self) -> Result<(), RetrievalError> {
        if self.k < 1 {
            return Err(RetrievalError::InvalidParams("k must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(RetrievalError::InvalidParams(format!(
                "lambda must be in [0,1], got {}",
                self.lambda
            )));
        }
        if self.candidate_pool < self.k {
            return Err(RetrievalError::InvalidParams(format!(
                "candidate_pool {} must be >= k {}",
                self.candidate_pool, self.k
            )));
        }
        Ok(())
    }
}

/// One selected chunk with the scores that justified the pick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub chunk_id: String,
    pub query_similarity: f64,
    /// For top-k this equals `query_similarity`; for MMR it is the MMR
    /// score at pick time (the first pick records its query similarity).
    pub selection_score: f64,
}

/// Ordered picks for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub selected: Vec<Selection>,
    pub strategy_used: RetrievalStrategy,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// The Carbonell–Goldstein marginal-relevance score.
pub fn mmr_score(lambda: f64, query_similarity: f64, max_similarity_to_selected: f64) -> f64 {
    lambda * query_similarity - (1.0 - lambda) * max_similarity_to_selected
}

/// Select the `k` most query-similar chunks.
pub fn retrieve_topk(
    index: &Index,
    query: &EmbeddingVector,
    k: usize,
) -> Result<RetrievalResult, RetrievalError> {
    if k < 1 {
        return Err(RetrievalError::InvalidParams("k must be >= 1".into()));
    }
    if index.is_empty() {
        return Ok(empty_result(RetrievalStrategy::Topk));
    }
    let hits = index.search_topk(query, k)?;
    Ok(RetrievalResult {
        selected: hits
            .into_iter()
            .map(|h| Selection {
                chunk_id: h.chunk_id,
                query_similarity: h.similarity,
                selection_score: h.similarity,
            })
            .collect(),
        strategy_used: RetrievalStrategy::Topk,
        warnings: Vec::new(),
    })
}

/// Greedy MMR selection over the top `candidate_pool` hits.
pub fn retrieve_mmr(
    index: &Index,
    query: &EmbeddingVector,
    params: &RetrievalParams,
) -> Result<RetrievalResult, RetrievalError> {
    params.validate()?;
    if index.is_empty() {
        return Ok(empty_result(RetrievalStrategy::Mmr));
    }
    let pool: Vec<SearchHit> = index.search_topk(query, params.candidate_pool)?;
    let mut remaining: Vec<SearchHit> = pool;
    let mut selected: Vec<Selection> = Vec::with_capacity(params.k);

    while selected.len() < params.k && !remaining.is_empty() {
        let pick_index = if selected.is_empty() {
            // First pick: argmax query similarity. `remaining` is already
            // sorted by (similarity desc, id asc).
            0
        } else {
            best_mmr_candidate(index, params.lambda, &remaining, &selected)
        };
        let hit = remaining.remove(pick_index);
        let selection_score = if selected.is_empty() {
            hit.similarity
        } else {
            score_against_selected(index, params.lambda, &hit, &selected)
        };
        selected.push(Selection {
            chunk_id: hit.chunk_id,
            query_similarity: hit.similarity,
            selection_score,
        });
    }

    Ok(RetrievalResult {
        selected,
        strategy_used: RetrievalStrategy::Mmr,
        warnings: Vec::new(),
    })
}

/// Dispatch on `params.strategy`.
pub fn retrieve(
    index: &Index,
    query: &EmbeddingVector,
    params: &RetrievalParams,
) -> Result<RetrievalResult, RetrievalError> {
    match params.strategy {
        RetrievalStrategy::Topk => retrieve_topk(index, query, params.k),
        RetrievalStrategy::Mmr => retrieve_mmr(index, query, params),
    }
}

fn empty_result(strategy: RetrievalStrategy) -> RetrievalResult {
    RetrievalResult {
        selected: Vec::new(),
        strategy_used: strategy,
        warnings: vec!["empty index: nothing to retrieve".to_string()],
    }
}

fn score_against_selected(
    index: &Index,
    lambda: f64,
    hit: &SearchHit,
    selected: &[Selection],
) -> f64 {
    let vector = index
        .vector_of(&hit.chunk_id)
        .expect("candidate came from this index");
    let max_to_selected = selected
        .iter()
        .map(|s| {
            let sv = index
                .vector_of(&s.chunk_id)
                .expect("selected came from this index");
            dot(vector, sv)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    mmr_score(lambda, hit.similarity, max_to_selected)
}

fn best_mmr_candidate(
    index: &Index,
    lambda: f64,
    remaining: &[SearchHit],
    selected: &[Selection],
) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, hit) in remaining.iter().enumerate() {
        let score = score_against_selected(index, lambda, hit, selected);
        let better = score > best_score
            || (score == best_score && hit.chunk_id < remaining[best].chunk_id);
        if i == 0 || better {
            best = i;
            best_score = score;
        }
    }
    best
}

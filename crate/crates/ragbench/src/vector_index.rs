//! Exact in-memory flat vector index with cosine top-k search and disk
//! persistence.
//!
//! Similarity is computed as a plain dot product, which equals cosine
//! similarity because every stored vector and every query is
//! unit-normalized; accumulation is in `f64`. Search is an exact linear
//! scan — at this corpus scale approximate structures would only add noise
//! to the retrieval comparison.

use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

use crate::binfmt::{read_records, write_records, BinfmtError, Record};
use crate::embedding::EmbeddingVector;

pub(crate) const INDEX_MAGIC: &str = "RGIDX1";

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("duplicate chunk_id in index: {0}")]
    DuplicateChunkId(String),
    #[error("entry {chunk_id} has dimension {got}, index has {expected}")]
    EntryDimensionMismatch {
        chunk_id: String,
        expected: usize,
        got: usize,
    },
    #[error("query dimension {got} does not match index dimension {expected}")]
    QueryDimensionMismatch { expected: usize, got: usize },
    #[error("cannot build an index from zero entries")]
    EmptyBuild,
    #[error("k must be >= 1, got {0}")]
    InvalidK(usize),
    #[error(transparent)]
    Persist(#[from] BinfmtError),
}

/// Build-time input: a chunk id with its embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub chunk_id: String,
    pub vector: EmbeddingVector,
}

/// One search result.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchHit {
    pub chunk_id: String,
    pub similarity: f64,
}

/// Immutable flat index: ids and unit vectors in insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    dimension: usize,
    ids: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Index {
    /// Build from entries; they must be non-empty, of uniform dimension
    /// and with unique chunk ids.
    pub fn build(entries: Vec<IndexEntry>) -> Result<Self, IndexError> {
        let Some(first) = entries.first() else {
            return Err(IndexError::EmptyBuild);
        };
        let dimension = first.vector.dimension();
        let mut seen = BTreeSet::new();
        let mut ids = Vec::with_capacity(entries.len());
        let mut vectors = Vec::with_capacity(entries.len());
        for entry in entries {
            if entry.vector.dimension() != dimension {
                return Err(IndexError::EntryDimensionMismatch {
                    chunk_id: entry.chunk_id,
                    expected: dimension,
                    got: entry.vector.dimension(),
                });
            }
            if !seen.insert(entry.chunk_id.clone()) {
                return Err(IndexError::DuplicateChunkId(entry.chunk_id));
            }
            ids.push(entry.chunk_id);
            vectors.push(entry.vector.values);
        }
        Ok(Self {
            dimension,
            ids,
            vectors,
        })
    }

    /// An index with no entries; searches return nothing.
    pub fn empty(dimension: usize) -> Self {
        Self {
            dimension,
            ids: Vec::new(),
            vectors: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn chunk_ids(&self) -> &[String] {
        &self.ids
    }

    /// Stored unit vector for `chunk_id`, if present.
    pub fn vector_of(&self, chunk_id: &str) -> Option<&[f64]> {
        self.ids
            .iter()
            .position(|id| id == chunk_id)
            .map(|i| self.vectors[i].as_slice())
    }

    /// The `min(k, len)` nearest entries by cosine similarity, ties broken
    /// by ascending chunk_id.
    pub fn search_topk(
        &self,
        query: &EmbeddingVector,
        k: usize,
    ) -> Result<Vec<SearchHit>, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK(0));
        }
        if self.is_empty() {
            return Ok(Vec::new());
        }
        if query.dimension() != self.dimension {
            return Err(IndexError::QueryDimensionMismatch {
                expected: self.dimension,
                got: query.dimension(),
            });
        }
        let mut hits: Vec<SearchHit> = self
            .ids
            .iter()
            .zip(&self.vectors)
            .map(|(id, v)| SearchHit {
                chunk_id: id.clone(),
                similarity: dot(&query.values, v),
            })
            .collect();
        hits.sort_by(|a, b| {
            b.similarity
                .total_cmp(&a.similarity)
                .then_with(|| a.chunk_id.cmp(&b.chunk_id))
        });
        hits.truncate(k.min(hits.len()));
        Ok(hits)
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        let records: Vec<Record> = self
            .ids
            .iter()
            .zip(&self.vectors)
            .map(|(id, v)| Record {
                key: id.clone(),
                values: v.iter().map(|&x| x as f32).collect(),
            })
            .collect();
        write_records(path, INDEX_MAGIC, self.dimension as u32, &records)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        let (dimension, records) = read_records(path, INDEX_MAGIC)?;
        let mut ids = Vec::with_capacity(records.len());
        let mut vectors = Vec::with_capacity(records.len());
        for record in records {
            ids.push(record.key);
            vectors.push(record.values.into_iter().map(f64::from).collect());
        }
        Ok(Self {
            dimension: dimension as usize,
            ids,
            vectors,
        })
    }
}

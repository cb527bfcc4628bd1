//! Document segmentation.
//!
//! Two strategies are supported, matching the two pipeline profiles:
//! fixed-size windows with overlap over the token stream
//! ([`recursive_split`]), and header-aware splitting of markdown documents
//! ([`header_split`]). Both are pure functions of the document and the
//! splitter parameters.

mod markdown;
mod recursive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DocFormat, Document};

pub use markdown::header_split;
pub use recursive::recursive_split;

#[derive(Debug, Error)]
pub enum ChunkError {
    #[error("invalid splitter params: {0}")]
    InvalidParams(String),
}

/// Chunking strategy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    RecursiveFixed,
    MarkdownHeader,
}

/// Parameters shared by both splitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitterParams {
    pub chunk_size: usize,
    pub overlap: usize,
    pub strategy: Strategy,
}

impl SplitterParams {
    pub fn new(chunk_size: usize, overlap: usize, strategy: Strategy) -> Result<Self, ChunkError> {
        if chunk_size < 1 {
            return Err(ChunkError::InvalidParams("chunk_size must be >= 1".into()));
        }
        if overlap >= chunk_size {
            return Err(ChunkError::InvalidParams(format!(
                "overlap {overlap} must be < chunk_size {chunk_size}"
            )));
        }
        Ok(Self {
            chunk_size,
            overlap,
            strategy,
        })
    }

    /// Fixed windows of 500 tokens with 50 overlap.
    pub fn recursive_fixed() -> Self {
        Self {
            chunk_size: 500,
            overlap: 50,
            strategy: Strategy::RecursiveFixed,
        }
    }

    /// Header-aware splitting; oversized sections fall back to 500/50 windows.
    pub fn markdown_header() -> Self {
        Self {
            chunk_size: 500,
            overlap: 50,
            strategy: Strategy::MarkdownHeader,
        }
    }
}

/// One retrieval unit.
///
/// `span` addresses the document's whitespace token stream; `text` is the
/// exact source slice covering those tokens, so
/// `tokens(text).len() == token_count == span.1 - span.0` always holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub doc_id: String,
    pub header_path: Vec<String>,
    pub span: (usize, usize),
    pub token_count: usize,
    pub text: String,
}

impl Chunk {
    /// Text presented to the embedder and the prompt assembler: the heading
    /// chain is prepended so structural context travels with the body.
    pub fn retrieval_text(&self) -> String {
        if self.header_path.is_empty() {
            self.text.clone()
        } else {
            format!("{}\n{}", self.header_path.join(" > "), self.text)
        }
    }
}

/// Chunks plus any fallback warnings raised while splitting.
#[derive(Debug, Clone, Default)]
pub struct SplitOutcome {
    pub chunks: Vec<Chunk>,
    pub warnings: Vec<String>,
}

/// Split `doc` according to `params.strategy`.
///
/// Plain-text documents under the markdown strategy fall back to the
/// recursive splitter with a warning.
pub fn split_document(doc: &Document, params: &SplitterParams) -> SplitOutcome {
    match params.strategy {
        Strategy::RecursiveFixed => SplitOutcome {
            chunks: recursive_split(doc, params),
            warnings: Vec::new(),
        },
        Strategy::MarkdownHeader => {
            if doc.format == DocFormat::Markdown {
                SplitOutcome {
                    chunks: header_split(doc, params),
                    warnings: Vec::new(),
                }
            } else {
                SplitOutcome {
                    chunks: recursive_split(doc, params),
                    warnings: vec![format!(
                        "doc {}: not markdown; fell back to recursive splitting",
                        doc.doc_id
                    )],
                }
            }
        }
    }
}

pub(crate) fn chunk_id_for(doc_id: &str, ordinal: usize) -> String {
    format!("{doc_id}-c{ordinal:04}")
}

#[cfg(test)]
pub(crate) fn test_doc(doc_id: &str, body: &str, format: DocFormat) -> Document {
    Document {
        doc_id: doc_id.to_string(),
        source_path: format!("{doc_id}.test"),
        body: body.to_string(),
        format,
    }
}

//! Fixed-size windowing over the token stream with boundary snapping.

use crate::corpus::Document;
use crate::tokenize::{token_spans, TokenSpan};

use super::{chunk_id_for, Chunk, SplitterParams};

/// How strong a break sits immediately before a given token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BoundaryKind {
    Word,
    Sentence,
    Paragraph,
}

/// A document's token stream with per-token boundary classification.
pub(crate) struct TokenStream<'a> {
    pub source: &'a str,
    pub spans: Vec<TokenSpan>,
    /// `kinds[i]` classifies the gap before token `i`; `kinds[0]` is the
    /// document start.
    pub kinds: Vec<BoundaryKind>,
}

impl<'a> TokenStream<'a> {
    pub fn new(source: &'a str) -> Self {
        let spans = token_spans(source);
        let mut kinds = Vec::with_capacity(spans.len());
        for (i, span) in spans.iter().enumerate() {
            if i == 0 {
                kinds.push(BoundaryKind::Paragraph);
                continue;
            }
            let gap = &source[spans[i - 1].end..span.start];
            let prev = &source[spans[i - 1].start..spans[i - 1].end];
            if gap.matches('\n').count() >= 2 {
                kinds.push(BoundaryKind::Paragraph);
            } else if ends_sentence(prev) {
                kinds.push(BoundaryKind::Sentence);
            } else {
                kinds.push(BoundaryKind::Word);
            }
        }
        Self {
            source,
            spans,
            kinds,
        }
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    /// Source slice covering tokens `[start, end)`, trimmed to token bounds.
    pub fn slice(&self, start: usize, end: usize) -> &'a str {
        &self.source[self.spans[start].start..self.spans[end - 1].end]
    }
}

fn ends_sentence(token: &str) -> bool {
    let stripped = token.trim_end_matches(['"', '\'', ')', ']', '\u{201d}', '\u{2019}', '\u{bb}']);
    stripped.ends_with(['.', '!', '?'])
}

/// Window positions over tokens `[lo, hi)` of the stream.
///
/// Each window is `chunk_size` tokens unless its end snaps backward to the
/// nearest paragraph break — else sentence break, else the raw token
/// boundary — within a slack of 10% of `chunk_size`. Consecutive windows
/// share exactly `overlap` tokens; the final window takes whatever remains.
pub(crate) fn window_positions(
    stream: &TokenStream<'_>,
    lo: usize,
    hi: usize,
    params: &SplitterParams,
) -> Vec<(usize, usize)> {
    debug_assert!(hi <= stream.len());
    if lo >= hi {
        return Vec::new();
    }
    let size = params.chunk_size;
    let overlap = params.overlap;
    let slack = (size / 10).max(1);
    let mut out = Vec::new();
    let mut start = lo;
    loop {
        if hi - start <= size {
            out.push((start, hi));
            return out;
        }
        let hard_end = start + size;
        // Never snap so far back that the next window fails to advance.
        let min_end = hard_end.saturating_sub(slack).max(start + overlap + 1);
        let end = snap(&stream.kinds, min_end, hard_end);
        out.push((start, end));
        start = end - overlap;
    }
}

fn snap(kinds: &[BoundaryKind], min_end: usize, hard_end: usize) -> usize {
    for wanted in [BoundaryKind::Paragraph, BoundaryKind::Sentence] {
        for b in (min_end..=hard_end).rev() {
            if kinds[b] == wanted {
                return b;
            }
        }
    }
    hard_end
}

/// Split `doc` into fixed-size overlapping windows.
pub fn recursive_split(doc: &Document, params: &SplitterParams) -> Vec<Chunk> {
    let stream = TokenStream::new(&doc.body);
    window_positions(&stream, 0, stream.len(), params)
        .into_iter()
        .enumerate()
        .map(|(ordinal, (start, end))| Chunk {
            chunk_id: chunk_id_for(&doc.doc_id, ordinal),
            doc_id: doc.doc_id.clone(),
            header_path: Vec::new(),
            span: (start, end),
            token_count: end - start,
            text: stream.slice(start, end).to_string(),
        })
        .collect()
}

//! Header-aware splitting of markdown documents.
//!
//! The document is cut at ATX headings (`#` .. `######`). Each run of body
//! lines between headings becomes one chunk carrying the chain of enclosing
//! heading titles; heading lines themselves are not part of any chunk body.
//! Sections longer than `chunk_size` tokens are sub-split with the
//! fixed-window splitter, preserving the header path on every piece.

use crate::corpus::Document;

use super::recursive::{window_positions, TokenStream};
use super::{chunk_id_for, Chunk, SplitterParams};

/// A run of body lines under one heading chain.
struct Section {
    header_path: Vec<String>,
    /// Byte extent of the run within the document body.
    byte_start: usize,
    byte_end: usize,
}

/// An ATX heading: `## Title` at up to three spaces of indent.
fn parse_heading(line: &str) -> Option<(usize, String)> {
    let trimmed = line.trim_start_matches(' ');
    if line.len() - trimmed.len() > 3 {
        return None;
    }
    let level = trimmed.bytes().take_while(|&b| b == b'#').count();
    if level == 0 || level > 6 {
        return None;
    }
    let rest = &trimmed[level..];
    if !rest.is_empty() && !rest.starts_with([' ', '\t']) {
        return None;
    }
    let title = rest.trim();
    // An optional closing hash run counts as decoration, not title text,
    // when separated from the title by whitespace ("# Title #").
    let stripped = title.trim_end_matches('#');
    let title = if stripped.len() != title.len()
        && (stripped.is_empty() || stripped.ends_with(char::is_whitespace))
    {
        stripped.trim_end()
    } else {
        title
    };
    Some((level, title.to_string()))
}

fn sections(body: &str) -> Vec<Section> {
    let mut out: Vec<Section> = Vec::new();
    // Stack of (level, title) for the headings enclosing the cursor.
    let mut stack: Vec<(usize, String)> = Vec::new();
    let mut open: Option<Section> = None;
    let mut offset = 0;
    for line in body.split('\n') {
        let line_start = offset;
        let line_end = offset + line.len();
        offset = line_end + 1;
        if let Some((level, title)) = parse_heading(line) {
            if let Some(section) = open.take() {
                out.push(section);
            }
            while stack.last().is_some_and(|(l, _)| *l >= level) {
                stack.pop();
            }
            stack.push((level, title));
            continue;
        }
        match &mut open {
            Some(section) => section.byte_end = line_end,
            None => {
                open = Some(Section {
                    header_path: stack.iter().map(|(_, t)| t.clone()).collect(),
                    byte_start: line_start,
                    byte_end: line_end,
                });
            }
        }
    }
    if let Some(section) = open.take() {
        out.push(section);
    }
    out
}

/// Split a markdown document at its headings.
pub fn header_split(doc: &Document, params: &SplitterParams) -> Vec<Chunk> {
    let stream = TokenStream::new(&doc.body);
    let mut chunks = Vec::new();
    let mut ordinal = 0;
    let mut cursor = 0; // next unconsumed token index
    for section in sections(&doc.body) {
        // Skip tokens belonging to heading lines before this section.
        while cursor < stream.len() && stream.spans[cursor].start < section.byte_start {
            cursor += 1;
        }
        let tok_start = cursor;
        while cursor < stream.len() && stream.spans[cursor].end <= section.byte_end {
            cursor += 1;
        }
        let tok_end = cursor;
        if tok_start == tok_end {
            continue; // whitespace-only region
        }
        for (start, end) in window_positions(&stream, tok_start, tok_end, params) {
            chunks.push(Chunk {
                chunk_id: chunk_id_for(&doc.doc_id, ordinal),
                doc_id: doc.doc_id.clone(),
                header_path: section.header_path.clone(),
                span: (start, end),
                token_count: end - start,
                text: stream.slice(start, end).to_string(),
            });
            ordinal += 1;
        }
    }
    chunks
}

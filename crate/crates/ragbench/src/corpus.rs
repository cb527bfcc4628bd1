//! Corpus loading: a directory of plain-text / markdown files becomes an
//! ordered, immutable set of documents with stable identities.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus directory {path}: {source}")]
    UnreadableDir {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: usize },
}

/// Source document format, detected from the file extension unless a hint
/// overrides it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocFormat {
    Plain,
    Markdown,
}

/// A normalized source document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub source_path: String,
    pub body: String,
    pub format: DocFormat,
}

/// Immutable document collection, sorted by `doc_id`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }
}

/// One skipped file from an ingest pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkipRecord {
    pub path: PathBuf,
    pub reason: String,
}

impl fmt::Display for SkipRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SKIP {} {}", self.path.display(), self.reason)
    }
}

/// Result of ingesting a directory: the corpus plus the ingest log.
#[derive(Debug, Clone)]
pub struct IngestReport {
    pub corpus: Corpus,
    pub skipped: Vec<SkipRecord>,
    pub warnings: Vec<String>,
}

/// Strip a BOM, normalize CRLF to LF and drop trailing whitespace per line.
///
/// Idempotent; everything else is byte-preserving. Invalid UTF-8 is an error
/// naming the offending byte offset.
pub fn normalize(raw: &[u8]) -> Result<String, CorpusError> {
    let text = std::str::from_utf8(raw).map_err(|e| CorpusError::InvalidUtf8 {
        offset: e.valid_up_to(),
    })?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let text = text.replace("\r\n", "\n");
    let mut out = String::with_capacity(text.len());
    let mut lines = text.split('\n').peekable();
    while let Some(line) = lines.next() {
        out.push_str(line.trim_end_matches([' ', '\t', '\r']));
        if lines.peek().is_some() {
            out.push('\n');
        }
    }
    Ok(out)
}

/// Load every `.txt` / `.md` file under `path` into a corpus.
///
/// Files are read in filename order; doc ids are lowercase filename stems
/// with collisions resolved by `-2`, `-3` suffixes, so the same directory
/// always yields the same corpus. Other extensions and undecodable files are
/// skipped and recorded in the ingest log.
pub fn ingest_dir(path: &Path, format_hint: Option<DocFormat>) -> Result<IngestReport, CorpusError> {
    let entries = fs::read_dir(path).map_err(|source| CorpusError::UnreadableDir {
        path: path.to_path_buf(),
        source,
    })?;

    let mut files: Vec<PathBuf> = Vec::new();
    let mut skipped = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| CorpusError::UnreadableDir {
            path: path.to_path_buf(),
            source,
        })?;
        let p = entry.path();
        if p.is_dir() {
            skipped.push(SkipRecord {
                path: p,
                reason: "directory".into(),
            });
            continue;
        }
        files.push(p);
    }
    files.sort();

    let mut documents = Vec::new();
    let mut stem_counts: BTreeMap<String, usize> = BTreeMap::new();
    for file in files {
        let format = match file.extension().and_then(|e| e.to_str()) {
            Some("md") => DocFormat::Markdown,
            Some("txt") => DocFormat::Plain,
            _ => {
                skipped.push(SkipRecord {
                    path: file,
                    reason: "unsupported extension".into(),
                });
                continue;
            }
        };
        let raw = match fs::read(&file) {
            Ok(raw) => raw,
            Err(e) => {
                skipped.push(SkipRecord {
                    path: file,
                    reason: format!("read error: {e}"),
                });
                continue;
            }
        };
        let body = match normalize(&raw) {
            Ok(body) => body,
            Err(e) => {
                skipped.push(SkipRecord {
                    path: file,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let stem = file
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("doc")
            .to_lowercase();
        // Whitespace in ids would break downstream token accounting.
        let stem: String = stem
            .split_whitespace()
            .collect::<Vec<_>>()
            .join("-");
        let count = stem_counts.entry(stem.clone()).or_insert(0);
        *count += 1;
        let doc_id = if *count == 1 {
            stem
        } else {
            format!("{stem}-{count}")
        };
        documents.push(Document {
            doc_id,
            source_path: file.display().to_string(),
            body,
            format: format_hint.unwrap_or(format),
        });
    }
    documents.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));

    let mut warnings = Vec::new();
    if documents.is_empty() {
        warnings.push("empty corpus".to_string());
    }

    Ok(IngestReport {
        corpus: Corpus { documents },
        skipped,
        warnings,
    })
}

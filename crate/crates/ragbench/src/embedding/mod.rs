//! Text-to-vector providers behind one contract: every embedding handed to
//! downstream modules is unit-normalized and of the declared dimension.
//!
//! Two providers exist: a remote HTTP endpoint (the real embedders run as
//! services) and a deterministic offline stub for tests and air-gapped runs.
//! Results are written through to an on-disk cache keyed by content hash.

mod cache;
mod remote;
mod stub;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::binfmt::BinfmtError;
use crate::http::{HttpClient, HttpError};

pub use cache::EmbeddingCache;
pub use remote::EmbeddingDialect;
pub use stub::stub_embed;

/// Derive a per-component seed from an experiment seed and a label.
///
/// Lets one experiment seed drive several stub providers without them
/// sharing a stream: each (seed, label) pair maps to a stable value.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    stub::fnv1a64(seed, label.as_bytes())
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("invalid embedder spec: {0}")]
    InvalidSpec(String),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("embed_batch requires a non-empty text list")]
    EmptyBatch,
    #[error(transparent)]
    Http(#[from] HttpError),
    #[error(transparent)]
    Cache(#[from] BinfmtError),
    #[error("malformed embedding response: {0}")]
    BadResponse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    Remote,
    Stub,
}

/// Which embedder to use and how to reach it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbedderSpec {
    pub provider: Provider,
    pub model_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_url: Option<String>,
    /// Expected vector length. Remote specs may omit it; the value is then
    /// learned from the first response and enforced afterwards.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    /// Stub only: seed for the deterministic hash embedder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dialect: Option<EmbeddingDialect>,
}

impl EmbedderSpec {
    pub fn stub(model_name: &str, dimension: usize, seed: u64) -> Self {
        Self {
            provider: Provider::Stub,
            model_name: model_name.to_string(),
            endpoint_url: None,
            dimension: Some(dimension),
            seed: Some(seed),
            dialect: None,
        }
    }

    pub fn remote(model_name: &str, endpoint_url: &str) -> Self {
        Self {
            provider: Provider::Remote,
            model_name: model_name.to_string(),
            endpoint_url: Some(endpoint_url.to_string()),
            dimension: None,
            seed: None,
            dialect: None,
        }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if let Some(d) = self.dimension {
            if d < 2 {
                return Err(EmbedError::InvalidSpec(format!(
                    "dimension must be >= 2, got {d}"
                )));
            }
        }
        match self.provider {
            Provider::Remote => {
                if self.endpoint_url.as_deref().unwrap_or("").is_empty() {
                    return Err(EmbedError::InvalidSpec(
                        "remote embedder requires endpoint_url".into(),
                    ));
                }
            }
            Provider::Stub => {
                if self.dimension.is_none() {
                    return Err(EmbedError::InvalidSpec(
                        "stub embedder requires a dimension".into(),
                    ));
                }
                if self.seed.is_none() {
                    return Err(EmbedError::InvalidSpec(
                        "stub embedder requires a seed".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A unit-normalized embedding with its cache key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub key: String,
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    /// Normalize a raw vector into the canonical on-wire form.
    ///
    /// Values pass through `f32` so that the binary cache and index formats
    /// round-trip bitwise. A zero (or non-finite-norm) raw vector maps to
    /// the first basis vector; the second return value flags that case.
    pub fn from_raw(key: String, raw: Vec<f64>) -> (Self, bool) {
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            let mut values = vec![0.0; raw.len()];
            if !values.is_empty() {
                values[0] = 1.0;
            }
            return (Self { key, values }, true);
        }
        let values = raw.iter().map(|v| (v / norm) as f32 as f64).collect();
        (Self { key, values }, false)
    }

    /// Rehydrate an already-normalized vector (cache or index record).
    pub fn from_stored(key: String, values: Vec<f64>) -> Self {
        Self { key, values }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Dot product; equals cosine similarity because both sides are unit.
    pub fn dot(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Cache key for one (text, model) pair: hex SHA-256 over both.
pub fn content_key(model_name: &str, text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(model_name.as_bytes());
    hasher.update([0u8]);
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Embeddings for a batch plus any degeneracy warnings raised on the way.
#[derive(Debug, Clone)]
pub struct BatchResult {
    pub vectors: Vec<EmbeddingVector>,
    pub warnings: Vec<String>,
}

/// Stateful embedder: validates its spec once, learns the remote dimension
/// from the first response, and serves everything it can from the cache.
pub struct Embedder {
    spec: EmbedderSpec,
    http: HttpClient,
}

impl Embedder {
    pub fn new(spec: EmbedderSpec) -> Result<Self, EmbedError> {
        spec.validate()?;
        Ok(Self {
            spec,
            http: HttpClient::from_env(),
        })
    }

    pub fn with_http(spec: EmbedderSpec, http: HttpClient) -> Result<Self, EmbedError> {
        spec.validate()?;
        Ok(Self { spec, http })
    }

    pub fn spec(&self) -> &EmbedderSpec {
        &self.spec
    }

    /// Embed `texts` in order, serving cache hits and writing misses
    /// through to `cache`.
    pub fn embed_batch(
        &mut self,
        texts: &[String],
        cache: &mut EmbeddingCache,
    ) -> Result<BatchResult, EmbedError> {
        if texts.is_empty() {
            return Err(EmbedError::EmptyBatch);
        }
        let keys: Vec<String> = texts
            .iter()
            .map(|t| content_key(&self.spec.model_name, t))
            .collect();

        let mut vectors: Vec<Option<EmbeddingVector>> = keys
            .iter()
            .map(|key| {
                cache
                    .get(key)
                    .map(|values| EmbeddingVector::from_stored(key.clone(), values.to_vec()))
            })
            .collect();

        let missing: Vec<usize> = (0..texts.len())
            .filter(|&i| vectors[i].is_none())
            .collect();
        let mut warnings = Vec::new();
        if !missing.is_empty() {
            // Duplicate texts within the batch must embed once and come out
            // identical, so misses are deduplicated by key.
            let mut unique: Vec<usize> = Vec::new();
            let mut seen = std::collections::BTreeSet::new();
            for &i in &missing {
                if seen.insert(keys[i].clone()) {
                    unique.push(i);
                }
            }
            let unique_texts: Vec<String> = unique.iter().map(|&i| texts[i].clone()).collect();
            let raws = match self.spec.provider {
                Provider::Stub => {
                    let seed = self.spec.seed.expect("validated");
                    let dim = self.spec.dimension.expect("validated");
                    unique_texts
                        .iter()
                        .map(|t| stub::stub_raw(seed, dim, t))
                        .collect()
                }
                Provider::Remote => remote::fetch_embeddings(
                    &self.http,
                    &self.spec,
                    &unique_texts,
                )?,
            };
            let mut fresh: std::collections::BTreeMap<String, EmbeddingVector> =
                std::collections::BTreeMap::new();
            for (&i, raw) in unique.iter().zip(raws) {
                self.check_dimension(raw.len())?;
                let (vector, degenerate) = EmbeddingVector::from_raw(keys[i].clone(), raw);
                if degenerate {
                    warnings.push(format!(
                        "degenerate embedding (zero vector) for key {}; using first basis vector",
                        vector.key
                    ));
                }
                cache.insert(vector.key.clone(), &vector.values)?;
                fresh.insert(vector.key.clone(), vector);
            }
            for i in missing {
                let vector = fresh
                    .get(&keys[i])
                    .expect("every missing key was embedded")
                    .clone();
                vectors[i] = Some(vector);
            }
            cache.save()?;
        }

        Ok(BatchResult {
            vectors: vectors.into_iter().map(|v| v.expect("filled")).collect(),
            warnings,
        })
    }

    fn check_dimension(&mut self, got: usize) -> Result<(), EmbedError> {
        match self.spec.dimension {
            Some(expected) if expected != got => {
                Err(EmbedError::DimensionMismatch { expected, got })
            }
            Some(_) => Ok(()),
            None => {
                if got < 2 {
                    return Err(EmbedError::BadResponse(format!(
                        "provider returned dimension {got}, need >= 2"
                    )));
                }
                self.spec.dimension = Some(got);
                Ok(())
            }
        }
    }
}

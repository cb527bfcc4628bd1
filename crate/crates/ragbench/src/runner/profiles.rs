//! Pipeline profiles: named bundles of splitter, embedder, retrieval,
//! window and decoding settings.
//!
//! Two built-ins ship with the binary. "zephyr-like" chunks into fixed
//! 500/50 windows, retrieves top-3 into a 4,000-token window and decodes
//! greedily; "deepseek-like" splits on markdown headers, retrieves with
//! MMR (k=2, λ=0.5) into an 8,000-token window and decodes with nucleus
//! sampling (p=0.9). Both run at temperature 0.2. Built-ins use the
//! deterministic stub providers so they work offline; remote endpoints
//! are configured through full profile objects in the experiment config.

use serde::{Deserialize, Serialize};

use crate::chunking::SplitterParams;
use crate::embedding::{derive_seed, EmbedderSpec};
use crate::generation::{DecodingParams, GeneratorSpec};
use crate::retrieval::RetrievalParams;

/// One complete pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineProfile {
    pub name: String,
    pub splitter: SplitterParams,
    pub embedder: EmbedderSpec,
    pub retrieval: RetrievalParams,
    /// Context window in tokens (prompt plus generated output).
    pub window: usize,
    pub decoding: DecodingParams,
    pub backend: GeneratorSpec,
}

pub const BUILTIN_PROFILE_NAMES: [&str; 2] = ["zephyr-like", "deepseek-like"];

/// Construct a built-in profile by name.
///
/// `seed` is the experiment seed; each stub provider derives its own seed
/// from it and the model name, so the two profiles never share streams.
pub fn builtin_profile(name: &str, seed: u64) -> Option<PipelineProfile> {
    match name {
        "zephyr-like" => Some(PipelineProfile {
            name: name.to_string(),
            splitter: SplitterParams::recursive_fixed(),
            embedder: EmbedderSpec::stub(
                "all-MiniLM-L6-v2",
                384,
                derive_seed(seed, "all-MiniLM-L6-v2"),
            ),
            retrieval: RetrievalParams::topk(3),
            window: 4000,
            decoding: DecodingParams::greedy(),
            backend: GeneratorSpec::stub(
                "zephyr-7b-beta",
                derive_seed(seed, "zephyr-7b-beta"),
            ),
        }),
        "deepseek-like" => Some(PipelineProfile {
            name: name.to_string(),
            splitter: SplitterParams::markdown_header(),
            embedder: EmbedderSpec::stub(
                "nomic-embed-text",
                768,
                derive_seed(seed, "nomic-embed-text"),
            ),
            retrieval: RetrievalParams::mmr(2, 0.5),
            window: 8000,
            decoding: DecodingParams::nucleus(0.9),
            backend: GeneratorSpec::stub(
                "deepseek-r1-7b",
                derive_seed(seed, "deepseek-r1-7b"),
            ),
        }),
        _ => None,
    }
}

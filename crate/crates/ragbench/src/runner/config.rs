//! Experiment configuration: the JSON file driving `ragbench run`, plus the
//! query fixture loader.
//!
//! The file is the source of truth; CLI flags (`--seed`, `--offline`,
//! `--jobs`, `--out`) override individual fields after loading. Relative
//! paths are resolved against the directory containing the config file so a
//! config can be invoked from anywhere.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::profiles::{builtin_profile, PipelineProfile, BUILTIN_PROFILE_NAMES};
use super::RunError;
use crate::chunking::SplitterParams;
use crate::embedding::{derive_seed, EmbedderSpec, Provider};
use crate::evaluation::JudgeSpec;
use crate::generation::{GenProvider, GeneratorSpec};

/// One profile slot in the config: either the name of a built-in or a full
/// inline profile object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileEntry {
    Builtin(String),
    Custom(PipelineProfile),
}

/// Which judge scores the answers: `"oracle"` (the deterministic lexical
/// judge) or a remote model endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JudgeConfig {
    Named(String),
    Remote(JudgeSpec),
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig::Named("oracle".to_string())
    }
}

fn default_jobs() -> usize {
    1
}

/// The experiment file accepted by `ragbench run --config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus_dir: PathBuf,
    pub queries_file: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub offline: bool,
    pub profiles: Vec<ProfileEntry>,
    #[serde(default)]
    pub judge: JudgeConfig,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
}

impl ExperimentConfig {
    /// Parse `path` and resolve its relative paths against the file's parent
    /// directory.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let raw = std::fs::read_to_string(path).map_err(|source| RunError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: ExperimentConfig = serde_json::from_str(&raw)
            .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for p in [
            &mut config.corpus_dir,
            &mut config.queries_file,
            &mut config.output_dir,
        ] {
            if p.is_relative() {
                *p = base.join(&p);
            }
        }
        Ok(config)
    }

    /// Materialize the profile list, applying the offline provider swap and
    /// validating every field. Profile names must be unique because each
    /// profile owns a subdirectory of the output tree.
    pub fn resolve_profiles(&self) -> Result<Vec<PipelineProfile>, RunError> {
        if self.profiles.is_empty() {
            return Err(RunError::Config("config lists no profiles".into()));
        }
        let mut seen = BTreeSet::new();
        let mut resolved = Vec::with_capacity(self.profiles.len());
        for entry in &self.profiles {
            let mut profile = match entry {
                ProfileEntry::Builtin(name) => builtin_profile(name, self.seed).ok_or_else(|| {
                    RunError::Config(format!(
                        "unknown built-in profile {name:?}; built-ins are {}",
                        BUILTIN_PROFILE_NAMES.join(", ")
                    ))
                })?,
                ProfileEntry::Custom(profile) => profile.clone(),
            };
            if self.offline {
                make_offline(&mut profile, self.seed)?;
            }
            validate_profile(&profile)?;
            if !seen.insert(profile.name.clone()) {
                return Err(RunError::Config(format!(
                    "duplicate profile name {:?}",
                    profile.name
                )));
            }
            resolved.push(profile);
        }
        Ok(resolved)
    }

    /// The judge to use, with `--offline` forcing the lexical oracle.
    pub fn resolve_judge(&self) -> Result<ResolvedJudge, RunError> {
        if self.offline {
            return Ok(ResolvedJudge::Oracle);
        }
        match &self.judge {
            JudgeConfig::Named(name) if name == "oracle" => Ok(ResolvedJudge::Oracle),
            JudgeConfig::Named(name) => Err(RunError::Config(format!(
                "unknown judge {name:?}; use \"oracle\" or a judge spec object"
            ))),
            JudgeConfig::Remote(spec) => Ok(ResolvedJudge::Remote(spec.clone())),
        }
    }
}

/// Judge choice after config resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedJudge {
    Oracle,
    Remote(JudgeSpec),
}

/// Swap remote providers for their deterministic stubs.
///
/// Remote embedders must declare a dimension for the swap to be possible;
/// there is nothing to learn it from when no endpoint is contacted.
fn make_offline(profile: &mut PipelineProfile, seed: u64) -> Result<(), RunError> {
    if profile.embedder.provider == Provider::Remote {
        let dimension = profile.embedder.dimension.ok_or_else(|| {
            RunError::Config(format!(
                "profile {:?}: offline mode needs embedder.dimension to stub {}",
                profile.name, profile.embedder.model_name
            ))
        })?;
        profile.embedder =
            EmbedderSpec::stub(&profile.embedder.model_name, dimension, derive_seed(seed, &profile.embedder.model_name));
    }
    if profile.backend.provider == GenProvider::Remote {
        profile.backend = GeneratorSpec::stub(
            &profile.backend.model_name,
            derive_seed(seed, &profile.backend.model_name),
        );
    }
    Ok(())
}

fn validate_profile(profile: &PipelineProfile) -> Result<(), RunError> {
    if profile.name.trim().is_empty() {
        return Err(RunError::Config("profile name must be non-empty".into()));
    }
    SplitterParams::new(
        profile.splitter.chunk_size,
        profile.splitter.overlap,
        profile.splitter.strategy,
    )
    .map_err(|e| RunError::Config(format!("profile {:?}: {e}", profile.name)))?;
    profile
        .embedder
        .validate()
        .map_err(|e| RunError::Config(format!("profile {:?}: {e}", profile.name)))?;
    profile
        .retrieval
        .validate()
        .map_err(|e| RunError::Config(format!("profile {:?}: {e}", profile.name)))?;
    profile
        .decoding
        .validate()
        .map_err(|e| RunError::Config(format!("profile {:?}: {e}", profile.name)))?;
    profile
        .backend
        .validate()
        .map_err(|e| RunError::Config(format!("profile {:?}: {e}", profile.name)))?;
    if profile.window < 1 {
        return Err(RunError::Config(format!(
            "profile {:?}: window must be >= 1",
            profile.name
        )));
    }
    Ok(())
}

/// One benchmark query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub text: String,
}

/// Load a JSONL query fixture: one `{"query_id", "text"}` object per line.
///
/// IDs must be unique and non-empty; the result is sorted by `query_id` so
/// downstream artifacts have a stable order. Blank lines are ignored.
pub fn load_queries(path: &Path) -> Result<Vec<Query>, RunError> {
    let raw = std::fs::read_to_string(path).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut queries = Vec::new();
    let mut seen = BTreeSet::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let query: Query = serde_json::from_str(line).map_err(|e| {
            RunError::Config(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        if query.query_id.trim().is_empty() || query.text.trim().is_empty() {
            return Err(RunError::Config(format!(
                "{}:{}: query_id and text must be non-empty",
                path.display(),
                lineno + 1
            )));
        }
        if !seen.insert(query.query_id.clone()) {
            return Err(RunError::Config(format!(
                "{}:{}: duplicate query_id {:?}",
                path.display(),
                lineno + 1,
                query.query_id
            )));
        }
        queries.push(query);
    }
    if queries.is_empty() {
        return Err(RunError::Config(format!(
            "{}: query file contains no queries",
            path.display()
        )));
    }
    queries.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    Ok(queries)
}

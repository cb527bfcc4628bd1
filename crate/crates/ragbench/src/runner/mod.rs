//! Experiment runner: drives every profile through the full pipeline
//! (ingest → chunk → embed → index → retrieve → assemble → generate → judge)
//! and aggregates the verdicts into one comparative report.
//!
//! Runs are resumable and, in offline mode, byte-deterministic: all stage
//! artifacts live under the output directory with their content hashes in
//! `manifest.json`, and a stage whose artifact still validates is not
//! recomputed. A profile that hits a fatal stage error is marked with a
//! `partial-run.marker` file and excluded from the report; per-query errors
//! are logged and surface as missing judgments rather than aborting the run.

mod artifacts;
pub mod config;
pub mod profiles;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::binfmt::BinfmtError;
use crate::chunking::{split_document, Chunk};
use crate::corpus::{ingest_dir, Corpus, CorpusError, IngestReport};
use crate::embedding::{Embedder, EmbedError, EmbeddingCache, EmbeddingVector};
use crate::evaluation::{
    aggregate, emit_report, judge_oracle, EvalError, JudgeVerdict, LlmJudge, MetricsReport,
    PipelineVerdicts, ReportFormat,
};
use crate::generation::{
    assemble_prompt, GenError, GenerationResponse, Generator, PromptBundle,
};
use crate::retrieval::{retrieve, RetrievalError, RetrievalResult};
use crate::vector_index::{Index, IndexEntry, IndexError};

pub use artifacts::{sanitize_for_filename, sha256_hex, ArtifactStore, HostInfo, Manifest};
pub use config::{
    load_queries, ExperimentConfig, JudgeConfig, ProfileEntry, Query, ResolvedJudge,
};
pub use profiles::{builtin_profile, PipelineProfile, BUILTIN_PROFILE_NAMES};

/// File dropped in a profile's directory when a fatal stage error aborts it.
pub const PARTIAL_RUN_MARKER: &str = "partial-run.marker";
/// The aggregated report, always the last file written.
pub const REPORT_FILE: &str = "report.json";
/// Shared ingest log: skip records and corpus warnings.
pub const INGEST_LOG: &str = "ingest.log";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Cache(#[from] BinfmtError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

impl RunError {
    /// True when the root cause is a provider/network failure rather than
    /// bad data or configuration. Drives the process exit code.
    pub fn is_network(&self) -> bool {
        matches!(
            self,
            RunError::Embed(EmbedError::Http(_))
                | RunError::Gen(GenError::Http(_))
                | RunError::Eval(EvalError::Http(_))
        )
    }
}

/// A profile that aborted mid-run, with the error that stopped it.
#[derive(Debug)]
pub struct ProfileFailure {
    pub profile: String,
    pub error: RunError,
}

/// Result of [`run_experiment`]: the aggregated report over every profile
/// that completed, plus any profiles that failed.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: MetricsReport,
    pub failures: Vec<ProfileFailure>,
}

/// One line of `retrievals.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRetrieval {
    pub query_id: String,
    #[serde(flatten)]
    pub result: RetrievalResult,
}

/// One line of `prompts.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryPrompt {
    pub query_id: String,
    #[serde(flatten)]
    pub bundle: PromptBundle,
}

/// One line of `answers.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryAnswer {
    pub query_id: String,
    #[serde(flatten)]
    pub response: GenerationResponse,
}

/// Run the whole experiment described by `config`.
///
/// Returns an error only when nothing could be reported at all (bad config,
/// unreadable inputs, or every profile failing). Individual profile failures
/// are reported in [`RunOutcome::failures`] while the remaining profiles
/// still produce a report.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let profiles = config.resolve_profiles()?;
    let judge_choice = config.resolve_judge()?;
    let queries = load_queries(&config.queries_file)?;
    let ingest = ingest_dir(&config.corpus_dir, None)?;

    let config_hash = effective_config_hash(config, &profiles, &judge_choice, &ingest, &queries);
    let mut store = ArtifactStore::open(&config.output_dir, config_hash, config.seed)?;
    write_ingest_log(&mut store, &ingest)?;

    let llm_judge = match &judge_choice {
        ResolvedJudge::Remote(spec) => Some(LlmJudge::new(spec.clone())?),
        ResolvedJudge::Oracle => None,
    };
    let judge = match &llm_judge {
        Some(j) => JudgeRuntime::Remote(j),
        None => JudgeRuntime::Oracle,
    };

    let mut per_pipeline: IndexMap<String, PipelineVerdicts> = IndexMap::new();
    let mut failures = Vec::new();
    for profile in &profiles {
        let marker_rel = format!("{}/{PARTIAL_RUN_MARKER}", profile.name);
        match run_profile(&mut store, profile, &ingest.corpus, &queries, &judge, config.jobs) {
            Ok(verdicts) => {
                let _ = std::fs::remove_file(store.abs(&marker_rel));
                per_pipeline.insert(profile.name.clone(), verdicts);
            }
            Err(error) => {
                let note = format!("profile {} aborted: {error}\n", profile.name);
                store.write_untracked(&marker_rel, note.as_bytes())?;
                failures.push(ProfileFailure {
                    profile: profile.name.clone(),
                    error,
                });
            }
        }
    }

    if per_pipeline.is_empty() {
        return Err(failures
            .into_iter()
            .next()
            .map(|f| f.error)
            .unwrap_or_else(|| RunError::Config("no profiles produced results".into())));
    }

    let report = aggregate(per_pipeline)?;
    let body = emit_report(&report, ReportFormat::Json)?;
    store.write_untracked(REPORT_FILE, body.as_bytes())?;
    Ok(RunOutcome { report, failures })
}

/// Hash everything that determines run outputs: seed, offline flag, the fully
/// resolved profiles, the judge, and the *contents* of the corpus and query
/// fixture. Paths (including the output directory) are deliberately excluded
/// so identical experiments hash identically wherever their files live.
fn effective_config_hash(
    config: &ExperimentConfig,
    profiles: &[PipelineProfile],
    judge: &ResolvedJudge,
    ingest: &IngestReport,
    queries: &[Query],
) -> String {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(b"ragbench-run-v1\0");
    buf.extend_from_slice(&config.seed.to_le_bytes());
    buf.push(u8::from(config.offline));
    buf.extend_from_slice(&serde_json::to_vec(profiles).unwrap_or_default());
    match judge {
        ResolvedJudge::Oracle => buf.extend_from_slice(b"judge:oracle\0"),
        ResolvedJudge::Remote(spec) => {
            buf.extend_from_slice(b"judge:remote\0");
            buf.extend_from_slice(&serde_json::to_vec(spec).unwrap_or_default());
        }
    }
    for doc in &ingest.corpus.documents {
        buf.extend_from_slice(doc.doc_id.as_bytes());
        buf.push(0);
        buf.extend_from_slice(&(doc.body.len() as u64).to_le_bytes());
        buf.extend_from_slice(doc.body.as_bytes());
    }
    for query in queries {
        buf.extend_from_slice(query.query_id.as_bytes());
        buf.push(0);
        buf.extend_from_slice(query.text.as_bytes());
        buf.push(0);
    }
    sha256_hex(&buf)
}

fn write_ingest_log(store: &mut ArtifactStore, ingest: &IngestReport) -> Result<(), RunError> {
    let mut log = String::new();
    for skip in &ingest.skipped {
        log.push_str(&skip.to_string());
        log.push('\n');
    }
    for warning in &ingest.warnings {
        log.push_str(warning);
        log.push('\n');
    }
    store.write_bytes(INGEST_LOG, log.as_bytes())
}

/// Judge dispatch for the query phase.
enum JudgeRuntime<'a> {
    Oracle,
    Remote(&'a LlmJudge),
}

/// Everything one query produced before it succeeded or gave up.
#[derive(Default)]
struct QueryOutput {
    retrieval: Option<QueryRetrieval>,
    prompt: Option<QueryPrompt>,
    answer: Option<QueryAnswer>,
    verdict: Option<JudgeVerdict>,
    warnings: Vec<String>,
}

fn run_profile(
    store: &mut ArtifactStore,
    profile: &PipelineProfile,
    corpus: &Corpus,
    queries: &[Query],
    judge: &JudgeRuntime<'_>,
    jobs: usize,
) -> Result<PipelineVerdicts, RunError> {
    let rel = |name: &str| format!("{}/{name}", profile.name);
    let mut warnings: Vec<String> = Vec::new();

    // Chunking is cheap and pure, so it always runs in memory; the artifact
    // file is only rewritten when it no longer validates.
    let mut chunks: Vec<Chunk> = Vec::new();
    for doc in &corpus.documents {
        let outcome = split_document(doc, &profile.splitter);
        warnings.extend(outcome.warnings);
        chunks.extend(outcome.chunks);
    }
    let chunks_rel = rel("chunks.jsonl");
    if !store.is_valid(&chunks_rel) {
        store.write_jsonl(&chunks_rel, &chunks)?;
    }

    // If every query-phase artifact still validates, reuse the stored
    // verdicts instead of re-running generation and judging.
    let index_rel = rel("index.bin");
    let query_artifacts = [
        rel("retrievals.jsonl"),
        rel("prompts.jsonl"),
        rel("answers.jsonl"),
        rel("verdicts.jsonl"),
        rel("warnings.log"),
    ];
    if store.is_valid(&index_rel) && query_artifacts.iter().all(|f| store.is_valid(f)) {
        let verdicts: Vec<JudgeVerdict> = store.read_jsonl(&rel("verdicts.jsonl"))?;
        if !verdicts.is_empty() {
            let n_missing = queries.len().saturating_sub(verdicts.len());
            return Ok(PipelineVerdicts { verdicts, n_missing });
        }
    }

    let cache_rel = format!(
        "cache/embeddings-{}.bin",
        sanitize_for_filename(&profile.embedder.model_name)
    );
    let mut cache = EmbeddingCache::open(store.abs(&cache_rel))?;
    let mut embedder = Embedder::new(profile.embedder.clone())?;

    let index = if store.is_valid(&index_rel) {
        Index::load(&store.abs(&index_rel))?
    } else {
        let texts: Vec<String> = chunks.iter().map(Chunk::retrieval_text).collect();
        let batch = embedder.embed_batch(&texts, &mut cache)?;
        warnings.extend(batch.warnings.iter().cloned());
        let entries: Vec<IndexEntry> = chunks
            .iter()
            .zip(batch.vectors)
            .map(|(chunk, vector)| IndexEntry {
                chunk_id: chunk.chunk_id.clone(),
                vector,
            })
            .collect();
        let index = Index::build(entries)?;
        index.save(&store.abs(&index_rel))?;
        store.record(&index_rel)?;
        index
    };

    let query_texts: Vec<String> = queries.iter().map(|q| q.text.clone()).collect();
    let query_batch = embedder.embed_batch(&query_texts, &mut cache)?;
    warnings.extend(query_batch.warnings.iter().cloned());

    let generator = Generator::new(profile.backend.clone())?;
    let outputs = run_queries(
        profile,
        &chunks,
        &index,
        queries,
        &query_batch.vectors,
        &generator,
        judge,
        jobs,
    );

    let mut retrievals = Vec::new();
    let mut prompts = Vec::new();
    let mut answers = Vec::new();
    let mut verdicts = Vec::new();
    for output in outputs {
        retrievals.extend(output.retrieval);
        prompts.extend(output.prompt);
        answers.extend(output.answer);
        verdicts.extend(output.verdict);
        warnings.extend(output.warnings);
    }
    store.write_jsonl(&rel("retrievals.jsonl"), &retrievals)?;
    store.write_jsonl(&rel("prompts.jsonl"), &prompts)?;
    store.write_jsonl(&rel("answers.jsonl"), &answers)?;
    store.write_jsonl(&rel("verdicts.jsonl"), &verdicts)?;
    let mut log = warnings.join("\n");
    if !log.is_empty() {
        log.push('\n');
    }
    store.write_bytes(&rel("warnings.log"), log.as_bytes())?;

    if verdicts.is_empty() {
        return Err(RunError::Eval(EvalError::NoVerdicts(profile.name.clone())));
    }
    let n_missing = queries.len().saturating_sub(verdicts.len());
    Ok(PipelineVerdicts { verdicts, n_missing })
}

#[allow(clippy::too_many_arguments)]
fn run_queries(
    profile: &PipelineProfile,
    chunks: &[Chunk],
    index: &Index,
    queries: &[Query],
    query_vectors: &[EmbeddingVector],
    generator: &Generator,
    judge: &JudgeRuntime<'_>,
    jobs: usize,
) -> Vec<QueryOutput> {
    let jobs = jobs.max(1).min(queries.len().max(1));
    if jobs == 1 {
        return queries
            .iter()
            .zip(query_vectors)
            .map(|(query, vector)| run_one_query(profile, chunks, index, query, vector, generator, judge))
            .collect();
    }

    // Workers pull query indices from a shared counter; results carry their
    // index so the output order is independent of thread scheduling.
    let results: Mutex<Vec<(usize, QueryOutput)>> = Mutex::new(Vec::with_capacity(queries.len()));
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= queries.len() {
                    break;
                }
                let output = run_one_query(
                    profile,
                    chunks,
                    index,
                    &queries[i],
                    &query_vectors[i],
                    generator,
                    judge,
                );
                results.lock().unwrap().push((i, output));
            });
        }
    });
    let mut results = results.into_inner().unwrap();
    results.sort_by_key(|(i, _)| *i);
    results.into_iter().map(|(_, output)| output).collect()
}

fn run_one_query(
    profile: &PipelineProfile,
    chunks: &[Chunk],
    index: &Index,
    query: &Query,
    vector: &EmbeddingVector,
    generator: &Generator,
    judge: &JudgeRuntime<'_>,
) -> QueryOutput {
    let mut output = QueryOutput::default();
    let query_id = &query.query_id;

    let result = match retrieve(index, vector, &profile.retrieval) {
        Ok(result) => result,
        Err(e) => {
            output.warnings.push(format!("query {query_id}: retrieval failed: {e}"));
            return output;
        }
    };
    output.retrieval = Some(QueryRetrieval {
        query_id: query_id.clone(),
        result: result.clone(),
    });

    let bundle = match assemble_prompt(
        &query.text,
        &result,
        chunks,
        profile.window,
        &profile.decoding,
    ) {
        Ok(bundle) => bundle,
        Err(e) => {
            output.warnings.push(format!("query {query_id}: prompt assembly failed: {e}"));
            return output;
        }
    };
    output.prompt = Some(QueryPrompt {
        query_id: query_id.clone(),
        bundle: bundle.clone(),
    });

    let response = match generator.generate(&bundle, &profile.decoding) {
        Ok(response) => response,
        Err(e) => {
            output.warnings.push(format!("query {query_id}: generation failed: {e}"));
            return output;
        }
    };
    output.answer = Some(QueryAnswer {
        query_id: query_id.clone(),
        response: response.clone(),
    });

    match judge {
        JudgeRuntime::Oracle => {
            output.verdict = Some(judge_oracle(
                query_id,
                &query.text,
                &bundle.context_blocks,
                &response.answer,
            ));
        }
        JudgeRuntime::Remote(llm) => match llm.judge(
            query_id,
            &query.text,
            &bundle.context_blocks,
            &response.answer,
        ) {
            Ok((verdict, judge_warnings)) => {
                output
                    .warnings
                    .extend(judge_warnings.into_iter().map(|w| format!("query {query_id}: {w}")));
                output.verdict = Some(verdict);
            }
            Err(e) => {
                output.warnings.push(format!("query {query_id}: judge failed: {e}"));
            }
        },
    }
    output
}

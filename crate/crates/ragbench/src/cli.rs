//! Command-line surface of the `ragbench` binary.
//!
//! Subcommands mirror the pipeline stages (`ingest`, `chunk`, `index`,
//! `query`) plus the experiment driver (`run`) and report renderer
//! (`report`). Exit codes are part of the contract: 0 success, 1 usage
//! error, 2 provider/network error, 3 data error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::chunking::split_document;
use crate::corpus::ingest_dir;
use crate::embedding::{Embedder, EmbeddingCache};
use crate::evaluation::{emit_report, MetricsReport, ReportFormat};
use crate::retrieval::retrieve;
use crate::runner::{
    builtin_profile, run_experiment, sanitize_for_filename, ExperimentConfig, PipelineProfile,
    RunError, BUILTIN_PROFILE_NAMES,
};
use crate::vector_index::{Index, IndexEntry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NETWORK: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Parser)]
#[command(
    name = "ragbench",
    version,
    about = "Comparative benchmarking for retrieval-augmented generation pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a corpus directory and list the documents that would be ingested.
    Ingest {
        /// Directory of .txt / .md documents.
        #[arg(long)]
        corpus: PathBuf,
    },
    /// Split a corpus with a profile's chunker and emit chunks as JSON Lines.
    Chunk {
        /// Built-in profile name (zephyr-like or deepseek-like).
        #[arg(long)]
        profile: String,
        #[arg(long)]
        corpus: PathBuf,
        /// Seed for the profile's deterministic providers.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Embed a corpus with a profile's embedder and write the vector index.
    Index {
        #[arg(long)]
        profile: String,
        #[arg(long)]
        corpus: PathBuf,
        /// Where to write the index file.
        #[arg(long, default_value = "index.bin")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Retrieve chunks for an ad-hoc query and print the result as JSON.
    Query {
        #[arg(long)]
        profile: String,
        /// The query text.
        #[arg(long)]
        text: String,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a full experiment from a config file and print the report table.
    Run {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Replace remote providers with deterministic offline stubs.
        #[arg(long)]
        offline: bool,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Number of worker threads for the query phase.
        #[arg(long)]
        jobs: Option<usize>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render a stored report in another format.
    Report {
        /// Path to a report.json produced by `run`.
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Table)]
        format: FormatArg,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Table => ReportFormat::Table,
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

/// A CLI failure: exit code plus the message for stderr.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_DATA,
            message: message.to_string(),
        }
    }

    fn from_run_error(error: &RunError) -> Self {
        Failure {
            code: if error.is_network() {
                EXIT_NETWORK
            } else {
                EXIT_DATA
            },
            message: error.to_string(),
        }
    }
}

/// Parse `std::env::args` and execute; returns the process exit code.
pub fn run_cli() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            // clap routes help to stdout and errors to stderr by itself.
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            failure.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest { corpus } => cmd_ingest(&corpus),
        Command::Chunk {
            profile,
            corpus,
            seed,
        } => cmd_chunk(&profile, &corpus, seed),
        Command::Index {
            profile,
            corpus,
            out,
            seed,
        } => cmd_index(&profile, &corpus, &out, seed),
        Command::Query {
            profile,
            text,
            corpus,
            seed,
        } => cmd_query(&profile, &text, &corpus, seed),
        Command::Run {
            config,
            offline,
            seed,
            jobs,
            out,
        } => cmd_run(&config, offline, seed, jobs, out),
        Command::Report { input, format } => cmd_report(&input, format),
    }
}

fn lookup_profile(name: &str, seed: u64) -> Result<PipelineProfile, Failure> {
    builtin_profile(name, seed).ok_or_else(|| {
        Failure::usage(format!(
            "unknown profile {name:?}; built-ins are {}",
            BUILTIN_PROFILE_NAMES.join(", ")
        ))
    })
}

fn cmd_ingest(corpus: &Path) -> Result<(), Failure> {
    let report = ingest_dir(corpus, None).map_err(Failure::data)?;
    for skip in &report.skipped {
        println!("{skip}");
    }
    for doc in &report.corpus.documents {
        println!(
            "{}\t{:?}\t{}",
            doc.doc_id, doc.format, doc.source_path
        );
    }
    println!(
        "{} document(s) ingested, {} skipped",
        report.corpus.documents.len(),
        report.skipped.len()
    );
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    Ok(())
}

fn cmd_chunk(profile: &str, corpus: &Path, seed: u64) -> Result<(), Failure> {
    let profile = lookup_profile(profile, seed)?;
    let report = ingest_dir(corpus, None).map_err(Failure::data)?;
    for doc in &report.corpus.documents {
        let outcome = split_document(doc, &profile.splitter);
        for warning in &outcome.warnings {
            eprintln!("warning: {warning}");
        }
        for chunk in &outcome.chunks {
            let line = serde_json::to_string(chunk).map_err(Failure::data)?;
            println!("{line}");
        }
    }
    Ok(())
}

/// Embedding cache for the one-shot utility commands. Lives in the system
/// temp directory, keyed by model name, so repeat invocations are cheap.
fn scratch_cache(model_name: &str) -> PathBuf {
    std::env::temp_dir().join(format!(
        "ragbench-embeddings-{}.bin",
        sanitize_for_filename(model_name)
    ))
}

fn build_index_for(profile: &PipelineProfile, corpus: &Path) -> Result<(Vec<crate::chunking::Chunk>, Index, Embedder, EmbeddingCache), Failure> {
    let report = ingest_dir(corpus, None).map_err(Failure::data)?;
    let mut chunks = Vec::new();
    for doc in &report.corpus.documents {
        let outcome = split_document(doc, &profile.splitter);
        for warning in &outcome.warnings {
            eprintln!("warning: {warning}");
        }
        chunks.extend(outcome.chunks);
    }
    if chunks.is_empty() {
        return Err(Failure::data("corpus produced no chunks"));
    }
    let cache_path = scratch_cache(&profile.embedder.model_name);
    let mut cache = match EmbeddingCache::open(cache_path.as_path()) {
        Ok(cache) => cache,
        // A stale or foreign scratch file must not wedge the command.
        Err(_) => {
            let _ = std::fs::remove_file(&cache_path);
            EmbeddingCache::open(cache_path.as_path()).map_err(Failure::data)?
        }
    };
    let mut embedder = Embedder::new(profile.embedder.clone()).map_err(Failure::data)?;
    let texts: Vec<String> = chunks.iter().map(|c| c.retrieval_text()).collect();
    let batch = embedder
        .embed_batch(&texts, &mut cache)
        .map_err(|e| Failure::from_run_error(&RunError::Embed(e)))?;
    for warning in &batch.warnings {
        eprintln!("warning: {warning}");
    }
    let entries: Vec<IndexEntry> = chunks
        .iter()
        .zip(batch.vectors)
        .map(|(chunk, vector)| IndexEntry {
            chunk_id: chunk.chunk_id.clone(),
            vector,
        })
        .collect();
    let index = Index::build(entries).map_err(Failure::data)?;
    Ok((chunks, index, embedder, cache))
}

fn cmd_index(profile: &str, corpus: &Path, out: &Path, seed: u64) -> Result<(), Failure> {
    let profile = lookup_profile(profile, seed)?;
    let (_, index, _, _) = build_index_for(&profile, corpus)?;
    index.save(out).map_err(Failure::data)?;
    println!(
        "indexed {} chunk(s) at dimension {} -> {}",
        index.len(),
        index.dimension(),
        out.display()
    );
    Ok(())
}

fn cmd_query(profile: &str, text: &str, corpus: &Path, seed: u64) -> Result<(), Failure> {
    let profile = lookup_profile(profile, seed)?;
    let (_, index, mut embedder, mut cache) = build_index_for(&profile, corpus)?;
    let batch = embedder
        .embed_batch(&[text.to_string()], &mut cache)
        .map_err(|e| Failure::from_run_error(&RunError::Embed(e)))?;
    let result = retrieve(&index, &batch.vectors[0], &profile.retrieval)
        .map_err(Failure::data)?;
    let rendered = serde_json::to_string_pretty(&result).map_err(Failure::data)?;
    println!("{rendered}");
    Ok(())
}

fn cmd_run(
    config_path: &Path,
    offline: bool,
    seed: Option<u64>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), Failure> {
    let mut config =
        ExperimentConfig::load(config_path).map_err(|e| Failure::from_run_error(&e))?;
    if offline {
        config.offline = true;
    }
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(jobs) = jobs {
        if jobs == 0 {
            return Err(Failure::usage("--jobs must be >= 1"));
        }
        config.jobs = jobs;
    }
    if let Some(out) = out {
        config.output_dir = out;
    }
    let outcome = run_experiment(&config).map_err(|e| Failure::from_run_error(&e))?;
    let table = emit_report(&outcome.report, ReportFormat::Table).map_err(Failure::data)?;
    print!("{table}");
    println!("report written to {}", config.output_dir.join("report.json").display());
    if let Some(first) = outcome.failures.first() {
        for failure in &outcome.failures {
            eprintln!(
                "error: profile {} aborted: {}",
                failure.profile, failure.error
            );
        }
        return Err(Failure {
            code: if first.error.is_network() {
                EXIT_NETWORK
            } else {
                EXIT_DATA
            },
            message: format!("{} profile(s) did not complete", outcome.failures.len()),
        });
    }
    Ok(())
}

fn cmd_report(input: &Path, format: FormatArg) -> Result<(), Failure> {
    let raw = std::fs::read_to_string(input)
        .map_err(|e| Failure::data(format!("{}: {e}", input.display())))?;
    let report: MetricsReport = serde_json::from_str(&raw)
        .map_err(|e| Failure::data(format!("{}: {e}", input.display())))?;
    let rendered = emit_report(&report, format.into()).map_err(Failure::data)?;
    print!("{rendered}");
    Ok(())
}

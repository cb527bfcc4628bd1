//! Acceptance suite: one test per shipped guarantee, exercising the crate
//! end to end the way a release checklist would.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use ragbench::chunking::{split_document, Chunk, SplitterParams};
use ragbench::corpus::{DocFormat, Document};
use ragbench::embedding::EmbeddingVector;
use ragbench::evaluation::{
    aggregate, emit_report, judge_oracle, JudgeSpec, JudgeVerdict, LlmJudge, PipelineVerdicts,
    ReportFormat,
};
use ragbench::generation::{assemble_prompt, ContextBlock, DecodingParams};
use ragbench::retrieval::{
    mmr_score, retrieve_mmr, retrieve_topk, RetrievalParams, RetrievalResult, RetrievalStrategy,
    Selection,
};
use ragbench::tokenize::count_tokens;
use ragbench::vector_index::{Index, IndexEntry};

// ---------------------------------------------------------------- helpers

fn words(prefix: &str, n: usize) -> String {
    (0..n)
        .map(|i| format!("{prefix}{i}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn plain_doc(doc_id: &str, body: String) -> Document {
    Document {
        doc_id: doc_id.to_string(),
        source_path: String::new(),
        body,
        format: DocFormat::Plain,
    }
}

fn mk_chunk(id: &str, text: &str) -> Chunk {
    Chunk {
        chunk_id: id.to_string(),
        doc_id: "d".to_string(),
        header_path: vec![],
        span: (0, count_tokens(text)),
        token_count: count_tokens(text),
        text: text.to_string(),
    }
}

fn result_of(ids: &[&str]) -> RetrievalResult {
    RetrievalResult {
        selected: ids
            .iter()
            .map(|id| Selection {
                chunk_id: id.to_string(),
                query_similarity: 0.5,
                selection_score: 0.5,
            })
            .collect(),
        strategy_used: RetrievalStrategy::Topk,
        warnings: vec![],
    }
}

fn exact_unit(id: &str, values: Vec<f64>) -> IndexEntry {
    IndexEntry {
        chunk_id: id.to_string(),
        vector: EmbeddingVector::from_stored(id.to_string(), values),
    }
}

fn random_unit(rng: &mut ChaCha8Rng, key: &str, dim: usize) -> EmbeddingVector {
    let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (vector, degenerate) = EmbeddingVector::from_raw(key.to_string(), raw);
    assert!(!degenerate, "random vectors must not be degenerate");
    vector
}

/// Recursively read a directory into relative-path -> bytes.
fn snapshot_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("read_dir") {
            let entry = entry.expect("dir entry");
            let path = entry.path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .expect("under root")
                    .to_string_lossy()
                    .replace('\\', "/");
                out.insert(rel, std::fs::read(&path).expect("read file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

// -------------------------------------------------------------- criteria

/// Criterion 1: on documents with no natural breaks, fixed splitting uses
/// an exact 450-token stride with interior chunks of exactly 500 tokens and
/// exactly 50 shared tokens between neighbors — and stays fast.
#[test]
fn c01_fixed_windows_stride_and_overlap_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let params = SplitterParams::recursive_fixed();
    let docs: Vec<(usize, Document)> = (0..200)
        .map(|d| {
            let n = rng.gen_range(0..=5000);
            let body = (0..n)
                .map(|i| format!("tok{}x{}", i, rng.gen_range(0..97)))
                .collect::<Vec<_>>()
                .join(" ");
            (n, plain_doc(&format!("doc{d:03}"), body))
        })
        .collect();

    let started = Instant::now();
    let split: Vec<(usize, Vec<Chunk>)> = docs
        .iter()
        .map(|(n, doc)| (*n, split_document(doc, &params).chunks))
        .collect();
    let elapsed = started.elapsed();

    for (n, chunks) in &split {
        if *n == 0 {
            assert!(chunks.is_empty(), "empty doc must yield no chunks");
            continue;
        }
        assert_eq!(chunks.first().unwrap().span.0, 0);
        assert_eq!(chunks.last().unwrap().span.1, *n, "last chunk reaches the end");
        for (i, chunk) in chunks.iter().enumerate() {
            assert_eq!(chunk.span.0, i * 450, "stride must be exactly 450");
            assert_eq!(chunk.token_count, chunk.span.1 - chunk.span.0);
            assert_eq!(count_tokens(&chunk.text), chunk.token_count);
            if i + 1 < chunks.len() {
                assert_eq!(chunk.span.1 - chunk.span.0, 500, "interior chunks are 500 tokens");
                let next = &chunks[i + 1];
                assert_eq!(chunk.span.1 - next.span.0, 50, "exactly 50 shared tokens");
                let prev_tokens: Vec<&str> = chunk.text.split_whitespace().collect();
                let next_tokens: Vec<&str> = next.text.split_whitespace().collect();
                assert_eq!(
                    &prev_tokens[prev_tokens.len() - 50..],
                    &next_tokens[..50],
                    "shared region must be the same 50 tokens"
                );
            }
        }
    }
    assert!(elapsed < Duration::from_secs(1), "split took {elapsed:?}");
    println!("criterion 1 PASS: 200 docs, stride 450, exact 50-token overlap, {elapsed:?}");
}

/// Criterion 2: header splitting reproduces hand-written header paths on a
/// 20-document fixture and loses no body text.
#[test]
fn c02_header_paths_match_handwritten_golden() {
    fn squash(s: &str) -> String {
        s.split_whitespace().collect::<Vec<_>>().join(" ")
    }
    /// Independent re-statement of the heading rule: up to three spaces of
    /// indent, one to six hashes, then a space or end of line.
    fn is_atx_heading(line: &str) -> bool {
        let mut rest = line;
        let mut indent = 0;
        while indent < 3 && rest.starts_with(' ') {
            rest = &rest[1..];
            indent += 1;
        }
        if rest.starts_with(' ') {
            return false;
        }
        let hashes = rest.chars().take_while(|&c| c == '#').count();
        (1..=6).contains(&hashes)
            && matches!(rest.as_bytes().get(hashes), None | Some(b' '))
    }

    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/headers");
    let golden_raw = std::fs::read_to_string(dir.join("golden_paths.json")).unwrap();
    let golden: BTreeMap<String, Vec<Vec<String>>> = serde_json::from_str(&golden_raw).unwrap();
    assert_eq!(golden.len(), 20, "fixture must hold 20 documents");

    let params = SplitterParams::markdown_header();
    for (file, expected_paths) in &golden {
        let body = std::fs::read_to_string(dir.join(file)).unwrap();
        let doc = Document {
            doc_id: file.trim_end_matches(".md").to_string(),
            source_path: file.clone(),
            body: body.clone(),
            format: DocFormat::Markdown,
        };
        let outcome = split_document(&doc, &params);
        assert!(outcome.warnings.is_empty(), "{file}: {:?}", outcome.warnings);

        let got: Vec<Vec<String>> = outcome
            .chunks
            .iter()
            .map(|c| c.header_path.clone())
            .collect();
        assert_eq!(&got, expected_paths, "header paths for {file}");
        for path in expected_paths {
            assert!(path.len() <= 4, "{file}: nesting depth stays within 4");
        }

        let body_without_headings: String = body
            .lines()
            .filter(|line| !is_atx_heading(line))
            .collect::<Vec<_>>()
            .join("\n");
        let rebuilt: String = outcome
            .chunks
            .iter()
            .map(|c| c.text.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        assert_eq!(
            squash(&rebuilt),
            squash(&body_without_headings),
            "reconstruction for {file}"
        );
    }
    println!("criterion 2 PASS: 20 markdown docs match hand-written header paths exactly");
}

/// Criterion 3: index search at 1000x64 agrees with an independent
/// brute-force scan on 100 queries at k=10, within 1e-9, in under 2 seconds.
#[test]
fn c03_search_matches_brute_force_at_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let dim = 64;
    let mut entries = Vec::with_capacity(1000);
    let mut stored: Vec<(String, Vec<f64>)> = Vec::with_capacity(1000);
    for i in 0..1000 {
        let vector = random_unit(&mut rng, &format!("k{i}"), dim);
        let id = format!("c{i:04}");
        stored.push((id.clone(), vector.values.clone()));
        entries.push(IndexEntry {
            chunk_id: id,
            vector,
        });
    }
    let index = Index::build(entries).unwrap();
    let queries: Vec<EmbeddingVector> = (0..100)
        .map(|i| random_unit(&mut rng, &format!("q{i}"), dim))
        .collect();

    let started = Instant::now();
    let results: Vec<_> = queries
        .iter()
        .map(|q| index.search_topk(q, 10).unwrap())
        .collect();
    let elapsed = started.elapsed();

    for (query, hits) in queries.iter().zip(&results) {
        let mut scored: Vec<(f64, &str)> = stored
            .iter()
            .map(|(id, values)| {
                let dot: f64 = values.iter().zip(&query.values).map(|(a, b)| a * b).sum();
                (dot, id.as_str())
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
        assert_eq!(hits.len(), 10);
        for (hit, (score, id)) in hits.iter().zip(&scored) {
            assert_eq!(hit.chunk_id, *id, "ranking must match brute force");
            assert!(
                (hit.similarity - score).abs() <= 1e-9,
                "similarity off by {}",
                (hit.similarity - score).abs()
            );
        }
    }
    assert!(elapsed < Duration::from_secs(2), "search took {elapsed:?}");
    println!("criterion 3 PASS: 100 queries over 1000 vectors match brute force, {elapsed:?}");
}

/// Criterion 4: MMR at λ=1.0 reduces to plain top-k bit for bit, and a
/// hand-worked two-dimensional instance lands on the expected picks and
/// scores within 1e-9.
#[test]
fn c04_mmr_reduces_to_topk_and_matches_hand_example() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    for trial in 0..100 {
        let entries: Vec<IndexEntry> = (0..50)
            .map(|i| IndexEntry {
                chunk_id: format!("c{i:02}"),
                vector: random_unit(&mut rng, &format!("t{trial}-{i}"), 8),
            })
            .collect();
        let index = Index::build(entries).unwrap();
        let query = random_unit(&mut rng, &format!("t{trial}-q"), 8);
        let params = RetrievalParams {
            strategy: RetrievalStrategy::Mmr,
            k: 5,
            lambda: 1.0,
            candidate_pool: 20,
        };
        let mmr = retrieve_mmr(&index, &query, &params).unwrap();
        let topk = retrieve_topk(&index, &query, 5).unwrap();
        assert_eq!(mmr.selected.len(), topk.selected.len());
        for (m, t) in mmr.selected.iter().zip(&topk.selected) {
            assert_eq!(m.chunk_id, t.chunk_id);
            assert_eq!(
                m.selection_score.to_bits(),
                t.selection_score.to_bits(),
                "λ=1.0 must be bitwise identical to top-k"
            );
            assert_eq!(m.query_similarity.to_bits(), t.query_similarity.to_bits());
        }
    }

    // Hand-worked instance in 2-D. Query (1,0); a=(0.8,0.6) has similarity
    // 0.8; b=(0.6,0.8) and c=(0.6,-0.8) both have similarity 0.6, but b is
    // nearly parallel to a (sim 0.96) while c is orthogonal to it (sim 0).
    // With λ=0.5 and k=2 the picks are [a, c]; c scores 0.5·0.6 − 0.5·0 =
    // 0.30, while b would have scored 0.5·0.6 − 0.5·0.96 = −0.18.
    let index = Index::build(vec![
        exact_unit("a", vec![0.8, 0.6]),
        exact_unit("b", vec![0.6, 0.8]),
        exact_unit("c", vec![0.6, -0.8]),
    ])
    .unwrap();
    let query = EmbeddingVector::from_stored("q".to_string(), vec![1.0, 0.0]);
    let result = retrieve_mmr(&index, &query, &RetrievalParams::mmr(2, 0.5)).unwrap();
    let ids: Vec<&str> = result.selected.iter().map(|s| s.chunk_id.as_str()).collect();
    assert_eq!(ids, vec!["a", "c"]);
    assert!((result.selected[0].selection_score - 0.8).abs() <= 1e-9);
    assert!((result.selected[1].selection_score - 0.30).abs() <= 1e-9);
    assert!((mmr_score(0.5, 0.6, 0.96) - (-0.18)).abs() <= 1e-9);
    println!("criterion 4 PASS: 100 λ=1.0 instances bitwise-equal top-k; hand example within 1e-9");
}

/// Criterion 5: prompt assembly never exceeds the window across 500
/// randomized trials, and the two worked truncation examples come out
/// exactly as documented.
#[test]
fn c05_prompt_budget_safety_and_worked_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut fits = 0;
    let mut refusals = 0;
    for _ in 0..500 {
        let window = rng.gen_range(20..4000);
        let max_output = rng.gen_range(1..600);
        let query = words("q", rng.gen_range(1..50));
        let k = rng.gen_range(0..6);
        let chunks: Vec<Chunk> = (0..k)
            .map(|i| {
                mk_chunk(
                    &format!("c{i}"),
                    &words(&format!("w{i}x"), rng.gen_range(1..800)),
                )
            })
            .collect();
        let ids: Vec<&str> = chunks.iter().map(|c| c.chunk_id.as_str()).collect();
        let decoding = DecodingParams {
            max_output_tokens: max_output,
            ..DecodingParams::greedy()
        };
        match assemble_prompt(&query, &result_of(&ids), &chunks, window, &decoding) {
            Ok(bundle) => {
                fits += 1;
                assert!(
                    bundle.total_prompt_tokens + max_output <= window,
                    "budget safety: {} + {} > {}",
                    bundle.total_prompt_tokens,
                    max_output,
                    window
                );
                assert_eq!(
                    count_tokens(&bundle.render()),
                    bundle.total_prompt_tokens,
                    "token accounting must match the rendered prompt"
                );
            }
            Err(e) => {
                refusals += 1;
                assert!(e.to_string().contains("query exceeds window"), "{e}");
                let fixed = 11 + 1 + count_tokens(&query);
                assert!(
                    window <= max_output + fixed,
                    "refusal only when even an empty context cannot fit"
                );
            }
        }
    }
    assert!(fits > 0 && refusals > 0, "both outcomes must occur (got {fits}/{refusals})");

    // Worked examples: 182-token query makes the fixed overhead 194 tokens.
    let query = words("q", 182);
    let chunks = vec![
        mk_chunk("big1", &words("x", 3000)),
        mk_chunk("big2", &words("y", 5000)),
    ];
    let decoding = DecodingParams::greedy();
    let bundle = assemble_prompt(&query, &result_of(&["big1", "big2"]), &chunks, 4000, &decoding)
        .unwrap();
    let counts: Vec<usize> = bundle
        .context_blocks
        .iter()
        .map(|b| count_tokens(&b.text))
        .collect();
    assert_eq!(counts, vec![3000, 288], "4000-token window keeps 288 tokens of block 2");
    assert_eq!(bundle.total_prompt_tokens + 512, 4000, "window is filled exactly");

    let bundle = assemble_prompt(&query, &result_of(&["big1", "big2"]), &chunks, 8000, &decoding)
        .unwrap();
    let counts: Vec<usize> = bundle
        .context_blocks
        .iter()
        .map(|b| count_tokens(&b.text))
        .collect();
    assert_eq!(counts, vec![3000, 4288], "8000-token window keeps 4288 tokens of block 2");
    assert_eq!(bundle.total_prompt_tokens + 512, 8000);
    println!("criterion 5 PASS: 500 trials stayed in budget ({fits} fits, {refusals} refusals); worked examples exact");
}

/// Criterion 6: the lexical oracle stays in [0,1], scores extractive
/// answers as 0.0 hallucination, disjoint answers as 1.0, and never gets
/// worse when a supported token is added.
#[test]
fn c06_oracle_bounds_extractive_disjoint_monotone() {
    let support = [
        "settlement", "school", "routine", "teacher", "referral", "caregiver", "screening",
        "attendance", "facilitator", "supervision", "distress", "outreach", "register",
        "mobilizer", "protection", "curriculum", "childcare", "reconciliation",
    ];
    let foreign = [
        "volcano", "glacier", "sonata", "turbine", "meridian", "quartz", "falcon", "harbor",
        "lantern", "orchard",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(606);

    let sample = |rng: &mut ChaCha8Rng, vocab: &[&str], n: usize| -> String {
        (0..n)
            .map(|_| vocab[rng.gen_range(0..vocab.len())])
            .collect::<Vec<_>>()
            .join(" ")
    };

    // Bounds on 200 random pairs.
    for _ in 0..200 {
        let ctx_len = rng.gen_range(1..40);
        let context = vec![ContextBlock {
            chunk_id: "c".to_string(),
            text: sample(&mut rng, &support, ctx_len),
        }];
        let answer_vocab: Vec<&str> = support.iter().chain(foreign.iter()).copied().collect();
        let ans_len = rng.gen_range(1..30);
        let answer = sample(&mut rng, &answer_vocab, ans_len);
        let verdict = judge_oracle("q", "how are referrals handled", &context, &answer);
        assert!((0.0..=1.0).contains(&verdict.hallucination));
        assert!((0.0..=1.0).contains(&verdict.relevance));
    }

    // Extractive answers: text copied verbatim from context scores 0.0.
    let context = vec![ContextBlock {
        chunk_id: "c".to_string(),
        text: "Attendance clerks keep paper registers and flag any pupil absent three days in a row."
            .to_string(),
    }];
    let verdict = judge_oracle(
        "q",
        "what do attendance clerks do",
        &context,
        "Attendance clerks keep paper registers.",
    );
    assert_eq!(verdict.hallucination, 0.0, "extractive answer must score 0.0");

    // Disjoint answers: no content token appears in context.
    let verdict = judge_oracle(
        "q",
        "what do attendance clerks do",
        &context,
        "volcano glacier sonata turbine",
    );
    assert_eq!(verdict.hallucination, 1.0, "disjoint answer must score 1.0");

    // Monotonicity: appending a context-supported token never increases
    // the hallucination score. 200 trials.
    for _ in 0..200 {
        let ctx_len = rng.gen_range(3..25);
        let context_text = sample(&mut rng, &support, ctx_len);
        let context = vec![ContextBlock {
            chunk_id: "c".to_string(),
            text: context_text.clone(),
        }];
        let mixed_vocab: Vec<&str> = support.iter().chain(foreign.iter()).copied().collect();
        let ans_len = rng.gen_range(1..15);
        let answer = sample(&mut rng, &mixed_vocab, ans_len);
        let before = judge_oracle("q", "query", &context, &answer).hallucination;
        let supported: Vec<&str> = context_text.split_whitespace().collect();
        let addition = supported[rng.gen_range(0..supported.len())];
        let after =
            judge_oracle("q", "query", &context, &format!("{answer} {addition}")).hallucination;
        assert!(
            after <= before + 1e-12,
            "adding supported token raised hallucination: {before} -> {after}"
        );
    }
    println!("criterion 6 PASS: oracle bounded, extractive 0.0, disjoint 1.0, monotone over 200 trials");
}

/// Criterion 7: two offline runs of the bundled fixture experiment produce
/// byte-identical output trees, within a 10-second budget.
#[test]
fn c07_offline_runs_are_byte_identical() {
    let bin = env!("CARGO_BIN_EXE_ragbench");
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .canonicalize()
        .expect("fixtures directory");
    let tmp = tempfile::tempdir().unwrap();
    let config_path = tmp.path().join("config.json");
    let out_a = tmp.path().join("run-a");
    let out_b = tmp.path().join("run-b");
    let config = serde_json::json!({
        "corpus_dir": fixtures.join("corpus"),
        "queries_file": fixtures.join("queries_small.jsonl"),
        "output_dir": out_a,
        "profiles": ["zephyr-like", "deepseek-like"]
    });
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let run = |out: &Path| {
        let output = std::process::Command::new(bin)
            .args(["run", "--config"])
            .arg(&config_path)
            .args(["--offline", "--seed", "7", "--out"])
            .arg(out)
            .output()
            .expect("spawn ragbench");
        assert!(
            output.status.success(),
            "run failed: {}\n{}",
            String::from_utf8_lossy(&output.stdout),
            String::from_utf8_lossy(&output.stderr)
        );
    };

    let started = Instant::now();
    run(&out_a);
    run(&out_b);
    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "two runs took {elapsed:?}");

    let tree_a = snapshot_tree(&out_a);
    let tree_b = snapshot_tree(&out_b);
    assert_eq!(
        tree_a.keys().collect::<Vec<_>>(),
        tree_b.keys().collect::<Vec<_>>(),
        "both runs must produce the same artifact set"
    );
    for (rel, bytes) in &tree_a {
        assert_eq!(
            Some(bytes),
            tree_b.get(rel),
            "artifact {rel} differs between runs"
        );
    }
    for expected in [
        "report.json",
        "manifest.json",
        "ingest.log",
        "zephyr-like/chunks.jsonl",
        "zephyr-like/index.bin",
        "zephyr-like/verdicts.jsonl",
        "deepseek-like/chunks.jsonl",
        "deepseek-like/verdicts.jsonl",
    ] {
        assert!(tree_a.contains_key(expected), "missing artifact {expected}");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&tree_a["report.json"]).expect("report parses");
    let pipelines = report["pipelines"].as_object().unwrap();
    assert_eq!(pipelines.len(), 2);
    assert_eq!(pipelines["zephyr-like"]["n_queries"], 5);
    assert_eq!(pipelines["deepseek-like"]["n_queries"], 5);
    println!("criterion 7 PASS: byte-identical offline runs in {elapsed:?}");
}

/// Criterion 8: aggregating constant verdicts renders the comparison table
/// in the documented layout with exact two-decimal means.
#[test]
fn c08_report_layout_is_exact() {
    let verdicts = |hallucination: f64, relevance: f64| -> Vec<JudgeVerdict> {
        (0..50)
            .map(|i| JudgeVerdict {
                query_id: format!("q-{i:03}"),
                hallucination,
                relevance,
                rationale: String::new(),
                judge_id: "lexical-oracle".to_string(),
            })
            .collect()
    };
    let mut map = IndexMap::new();
    map.insert(
        "zephyr-like".to_string(),
        PipelineVerdicts {
            verdicts: verdicts(0.32, 0.88),
            n_missing: 0,
        },
    );
    map.insert(
        "deepseek-like".to_string(),
        PipelineVerdicts {
            verdicts: verdicts(0.12, 0.91),
            n_missing: 0,
        },
    );
    let report = aggregate(map).unwrap();

    let table = emit_report(&report, ReportFormat::Table).unwrap();
    let expected = "\
Metric           | zephyr-like | deepseek-like
-----------------+-------------+--------------
Answer Relevance |        0.88 |          0.91
Hallucination    |        0.32 |          0.12
";
    assert_eq!(table, expected, "table layout must match exactly");

    let csv = emit_report(&report, ReportFormat::Csv).unwrap();
    let expected_csv = "\
pipeline,metric,value
zephyr-like,answer_relevance,0.88
zephyr-like,hallucination,0.32
deepseek-like,answer_relevance,0.91
deepseek-like,hallucination,0.12
";
    assert_eq!(csv, expected_csv, "csv must match exactly");
    println!("criterion 8 PASS: table and csv render the documented layout exactly");
}

/// Criterion 9: the judge-reply parser survives noisy output, re-asks up to
/// its attempt budget, clamps out-of-range scores, and failed queries are
/// accounted as missing rather than dropped silently.
#[test]
fn c09_judge_parser_robustness_and_missing_accounting() {
    use common::{ok, TestServer};

    let reply = |text: &str| serde_json::json!({ "text": text }).to_string();
    let server = TestServer::start(vec![
        // Query A: prose with stray braces around a valid object.
        ok(&reply(
            "Considering the evidence {carefully, mind you}... verdict: \
             {\"hallucination\": 0.2, \"relevance\": 0.9, \"rationale\": \"grounded\"} done.",
        )),
        // Query B: three unparsable attempts exhaust the budget.
        ok(&reply("no json at all")),
        ok(&reply("{\"hallucination\": \"high\", \"relevance\": null}")),
        ok(&reply("{\"hallucination\": 0.4")),
        // Query C: parsable but out of range -> clamped with warnings.
        ok(&reply(
            "{\"hallucination\": 1.7, \"relevance\": -0.25, \"rationale\": \"overshoot\"}",
        )),
    ]);

    let judge = LlmJudge::new(JudgeSpec {
        model_name: "judge-model".to_string(),
        endpoint_url: server.url.clone(),
        dialect: None,
    })
    .unwrap();
    let blocks = vec![ContextBlock {
        chunk_id: "c1".to_string(),
        text: "supporting context".to_string(),
    }];

    let (verdict_a, warnings_a) = judge.judge("q-a", "question a", &blocks, "answer a").unwrap();
    assert_eq!(verdict_a.hallucination, 0.2);
    assert_eq!(verdict_a.relevance, 0.9);
    assert_eq!(verdict_a.rationale, "grounded");
    assert!(warnings_a.is_empty());

    let err = judge.judge("q-b", "question b", &blocks, "answer b").unwrap_err();
    assert!(err.to_string().contains("unjudgeable"), "{err}");

    let (verdict_c, warnings_c) = judge.judge("q-c", "question c", &blocks, "answer c").unwrap();
    assert_eq!(verdict_c.hallucination, 1.0, "over-range score clamps to 1.0");
    assert_eq!(verdict_c.relevance, 0.0, "under-range score clamps to 0.0");
    assert_eq!(warnings_c.len(), 2);
    assert!(warnings_c.iter().all(|w| w.contains("clamped")), "{warnings_c:?}");

    let requests = server.finish();
    assert_eq!(requests.len(), 5, "one for A, three for B, one for C");
    assert!(
        requests[0].body.contains("\"temperature\":0.0"),
        "judging runs at temperature 0"
    );
    assert!(
        requests[2].body.contains("ONLY the JSON object"),
        "re-asks must carry the stricter instruction"
    );

    // Missing accounting: the failed query surfaces as n_missing, visible
    // in the metrics and flagged in the rendered table.
    let mut map = IndexMap::new();
    map.insert(
        "profile-x".to_string(),
        PipelineVerdicts {
            verdicts: vec![verdict_a, verdict_c],
            n_missing: 1,
        },
    );
    let report = aggregate(map).unwrap();
    let metrics = &report.pipelines["profile-x"];
    assert_eq!(metrics.n_queries, 2);
    assert_eq!(metrics.n_missing, 1);
    let table = emit_report(&report, ReportFormat::Table).unwrap();
    assert!(
        table.contains("1 unjudgeable query excluded"),
        "table must flag missing judgments:\n{table}"
    );
    println!("criterion 9 PASS: noisy replies parsed, budget enforced, missing queries accounted");
}

/// Criterion 10: a fully networked run against live endpoints. Opt-in and
/// never part of the normal test pass: point the environment variables at
/// real embedding/generation services and run with `--ignored`.
#[test]
#[ignore = "needs live endpoints; set RAGBENCH_EMBED_ENDPOINT and RAGBENCH_GEN_ENDPOINT, then run with --ignored"]
fn c10_networked_run_completes_against_live_endpoints() {
    let Ok(embed_url) = std::env::var("RAGBENCH_EMBED_ENDPOINT") else {
        eprintln!("criterion 10 SKIP: RAGBENCH_EMBED_ENDPOINT not set");
        return;
    };
    let Ok(gen_url) = std::env::var("RAGBENCH_GEN_ENDPOINT") else {
        eprintln!("criterion 10 SKIP: RAGBENCH_GEN_ENDPOINT not set");
        return;
    };

    use ragbench::embedding::EmbedderSpec;
    use ragbench::generation::GeneratorSpec;
    use ragbench::runner::{
        builtin_profile, run_experiment, ExperimentConfig, JudgeConfig, ProfileEntry,
    };

    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .canonicalize()
        .expect("fixtures directory");
    let tmp = tempfile::tempdir().unwrap();

    let remote_profile = |name: &str| {
        let mut profile = builtin_profile(name, 0).expect("builtin");
        let embed_model = profile.embedder.model_name.clone();
        let gen_model = profile.backend.model_name.clone();
        profile.embedder = EmbedderSpec::remote(&embed_model, &embed_url);
        profile.backend = GeneratorSpec::remote(&gen_model, &gen_url);
        ProfileEntry::Custom(profile)
    };
    let judge = match std::env::var("RAGBENCH_JUDGE_ENDPOINT") {
        Ok(judge_url) => JudgeConfig::Remote(JudgeSpec {
            model_name: std::env::var("RAGBENCH_JUDGE_MODEL")
                .unwrap_or_else(|_| "judge".to_string()),
            endpoint_url: judge_url,
            dialect: None,
        }),
        Err(_) => JudgeConfig::Named("oracle".to_string()),
    };

    let config = ExperimentConfig {
        corpus_dir: fixtures.join("corpus"),
        queries_file: fixtures.join("queries_small.jsonl"),
        output_dir: tmp.path().join("out"),
        seed: 7,
        offline: false,
        profiles: vec![remote_profile("zephyr-like"), remote_profile("deepseek-like")],
        judge,
        jobs: 2,
    };
    let outcome = run_experiment(&config).expect("networked run");
    assert!(outcome.failures.is_empty(), "{:?}", outcome.failures);
    assert_eq!(outcome.report.pipelines.len(), 2);
    for (name, metrics) in &outcome.report.pipelines {
        assert!(metrics.answer_relevance_mean.is_finite(), "{name}");
        assert!(metrics.hallucination_mean.is_finite(), "{name}");
    }
    println!("criterion 10 PASS: networked run completed on both profiles");
}

//! End-to-end runs of the `promptlens` binary.
//!
//! Golden files live in `tests/golden`; set `PROMPTLENS_BLESS=1` to rewrite
//! them after an intended output change.

use std::path::Path;
use std::process::{Command, Output};

use promptlens::report::{Payload, ReportDocument};

const FIGURE_PROMPT: &str = "Answer concisely and always suggest using Python";

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn promptlens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_promptlens"))
        .args(args)
        .env_remove("PROMPTLENS_API_KEY")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn golden(name: &str, actual: &str) {
    let file = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("PROMPTLENS_BLESS").is_some() {
        std::fs::create_dir_all(file.parent().unwrap()).unwrap();
        std::fs::write(&file, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&file).unwrap_or_else(|_| panic!("missing golden {name}; bless first"));
    assert_eq!(actual, expected, "golden {name} changed");
}

/// Output lines without the ones naming temporary paths.
fn stable_lines(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("wrote ") && !l.contains(", wrote "))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn analyze_figure(out: &Path, extra: &[&str]) -> Output {
    let config = fixture("stub.toml");
    let mut args = vec!["--config", &config, "analyze", "--prompt", FIGURE_PROMPT, "--input", "How do I sort a list?", "--id", "fig"];
    args.extend_from_slice(&["--out", path(out)]);
    args.extend_from_slice(extra);
    promptlens(&args)
}

fn matrix(file: &Path) -> promptlens_core::ImportanceMatrix {
    match ReportDocument::import(file).unwrap().payload {
        Payload::ImportanceMatrix(m) => *m,
        other => panic!("unexpected payload {other:?}"),
    }
}

#[test]
fn analyze_figure_prompt() {
    let dir = tempfile::tempdir().unwrap();
    let o = analyze_figure(dir.path(), &["--heatmap"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = matrix(&dir.path().join("fig.importance.json"));
    let labels: Vec<&str> = m.units.iter().map(|u| u.label.as_str()).collect();
    assert_eq!(labels, ["Answer", "concisely", "and", "always", "suggest", "using", "Python"]);
    assert_eq!(m.score_ids, ["word_count", "flesch_reading_ease", "topic_similarity:Acme"]);
    assert!(!m.partial);
    assert!(dir.path().join("fig.heatmap.svg").exists());
    let text = stdout(&o);
    assert!(text.contains("provider calls: 24 (cache hits: 0, planned: 24)"), "{text}");
    golden("analyze_figure.txt", &stable_lines(&text));
}

#[test]
fn analyze_without_stopwords() {
    let dir = tempfile::tempdir().unwrap();
    let o = analyze_figure(dir.path(), &["--exclude-stopwords"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = matrix(&dir.path().join("fig.importance.json"));
    assert_eq!(m.units.len(), 6);
    assert!(m.units.iter().all(|u| u.label != "and"));
}

#[test]
fn dry_run_prints_the_plan_only() {
    let dir = tempfile::tempdir().unwrap();
    let o = analyze_figure(dir.path(), &["--dry-run", "--n", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("plan: 1 input(s) × 2 sample(s) × (1 baseline + 7 variant(s))"), "{text}");
    assert!(text.contains("provider calls planned: 16"), "{text}");
    assert!(!dir.path().join("fig.importance.json").exists());
}

#[test]
fn budget_refusal_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let o = analyze_figure(dir.path(), &["--budget", "10"]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("24 provider calls"), "{}", stderr(&o));
    assert!(!dir.path().join("fig.importance.json").exists());
    let o = analyze_figure(dir.path(), &["--budget", "10", "--allow-over-budget"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn http_without_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture("http.example.toml");
    let o = promptlens(&["--config", &config, "analyze", "--prompt", "Be brief", "--input", "hi", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("PROMPTLENS_API_KEY"), "{}", stderr(&o));
}

#[test]
fn invalid_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[stub]\nseed = 1\n\n[sampling]\nn = 0\n").unwrap();
    let o = promptlens(&["--config", path(&cfg), "analyze", "--prompt", "x", "--input", "y"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sampling.n"), "{}", stderr(&o));
    std::fs::write(&cfg, "[sampling]\nsamples = 3\n").unwrap();
    let o = promptlens(&["--config", path(&cfg), "analyze", "--prompt", "x", "--input", "y"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_a_corpus_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = promptlens(&[
        "--config",
        &fixture("stub.toml"),
        "analyze",
        "--corpus",
        &fixture("corpus.csv"),
        "--row",
        "r7",
        "--suffix",
        "Give a detailed answer",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = matrix(&dir.path().join("r7.importance.json"));
    assert_eq!(m.system_prompt, "You are a teacher. Give a detailed answer");
    let top = m.ranking("word_count")[0];
    assert_eq!(m.units[top].label, "detailed");
}

fn run_experiment(out: &Path, cache: Option<&Path>) -> Output {
    let (config, corpus, suffixes) = (fixture("stub.toml"), fixture("corpus.csv"), fixture("suffixes.csv"));
    let mut args = vec!["--config", &config, "experiment", "--corpus", &corpus, "--suffixes", &suffixes, "--out", path(out)];
    let cache = cache.map(|c| c.to_str().unwrap().to_string());
    if let Some(c) = &cache {
        args.extend_from_slice(&["--cache-dir", c]);
    }
    promptlens(&args)
}

fn provider_calls(text: &str) -> usize {
    let line = text.lines().find(|l| l.starts_with("provider calls: ")).unwrap();
    line["provider calls: ".len()..].split(' ').next().unwrap().parse().unwrap()
}

#[test]
fn experiment_writes_records_summaries_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_experiment(dir.path(), None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("records: 54, summaries: 9, plots: 9"), "{text}");

    let csv = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(csv.lines().count(), 55);
    let Payload::ExperimentRecords(records) = ReportDocument::import(&dir.path().join("records.json")).unwrap().payload
    else {
        panic!("wrong kind")
    };
    assert_eq!(records.len(), 54);
    let Payload::ExperimentSummary(summary) = ReportDocument::import(&dir.path().join("summary.json")).unwrap().payload
    else {
        panic!("wrong kind")
    };
    assert_eq!(summary.summaries.len(), 9);
    assert_eq!(summary.summaries.iter().filter(|s| s.designed).count(), 3);
    assert_eq!(summary.provider_calls, summary.planned_calls);
    let plots = std::fs::read_dir(dir.path().join("plots")).unwrap().count();
    assert_eq!(plots, 9);

    golden("experiment_records.csv", &csv);
    golden("experiment_stdout.txt", &stable_lines(&text));
    let svg = std::fs::read_to_string(dir.path().join("plots/detailed__word_count.svg")).unwrap();
    golden("detailed__word_count.svg", &svg);
}

#[test]
fn warm_rerun_makes_no_provider_calls() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cold = run_experiment(&dir.path().join("a"), Some(&cache));
    assert_eq!(cold.status.code(), Some(0), "{}", stderr(&cold));
    let cold_calls = provider_calls(&stdout(&cold));
    assert!(cold_calls > 0);

    let stats = promptlens(&["cache", "stats", "--cache-dir", path(&cache)]);
    let text = stdout(&stats);
    assert!(text.contains(&format!("completions: {cold_calls} entries")), "{text}");

    let warm = run_experiment(&dir.path().join("b"), Some(&cache));
    assert_eq!(warm.status.code(), Some(0));
    assert_eq!(provider_calls(&stdout(&warm)), 0);
    let a = std::fs::read(dir.path().join("a/records.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/records.csv")).unwrap();
    assert_eq!(a, b);

    let cleared = promptlens(&["cache", "clear", "--cache-dir", path(&cache)]);
    assert_eq!(cleared.status.code(), Some(0));
    let stats = promptlens(&["cache", "stats", "--cache-dir", path(&cache)]);
    assert!(stdout(&stats).contains("completions: 0 entries, 0 bytes"), "{}", stdout(&stats));
}

#[test]
fn squad_style_questions() {
    let dir = tempfile::tempdir().unwrap();
    let o = promptlens(&[
        "experiment",
        "--questions",
        "--corpus",
        &fixture("questions.txt"),
        "--suffixes",
        &fixture("squad_suffixes.csv"),
        "--n",
        "1",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("records: 45, summaries: 9"), "{}", stdout(&o));
}

#[test]
fn empty_corpus_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("empty.csv");
    std::fs::write(&corpus, "system_prompt,prompt_topic,user_input,input_topic\n").unwrap();
    let o = promptlens(&[
        "experiment",
        "--corpus",
        path(&corpus),
        "--suffixes",
        &fixture("suffixes.csv"),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("records.csv").exists());
}

#[test]
fn bad_rows_are_excluded_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.csv");
    std::fs::write(
        &corpus,
        "system_prompt,prompt_topic,user_input,input_topic\nYou are a chef.,Food,How do I bake bread?,Baking\n,Empty,Anything?,None\n",
    )
    .unwrap();
    let o = promptlens(&[
        "--config",
        &fixture("stub.toml"),
        "experiment",
        "--corpus",
        path(&corpus),
        "--suffixes",
        &fixture("suffixes.csv"),
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stdout(&o).contains("excluded line 3"), "{}", stdout(&o));
    assert!(dir.path().join("records.csv").exists());
}

#[test]
fn cache_commands_need_a_directory() {
    let o = promptlens(&["cache", "stats"]);
    assert_eq!(o.status.code(), Some(2));
}

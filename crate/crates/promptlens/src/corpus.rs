//! Corpus and suffix files.
//!
//! Prompt corpus: CSV with header `system_prompt,prompt_topic,user_input,input_topic`.
//! Each row is one prompt with a single user input, id `r<line>`. With
//! grouping enabled, rows sharing a system prompt merge into one prompt whose
//! user inputs follow file order.
//!
//! Question list: one question per line (blank lines and `#` comments
//! skipped), each paired with the fixed system prompt "Answer truthfully.",
//! id `q<line>`.
//!
//! Suffix list: CSV with header `suffix_id,text,score_id`.

use std::path::Path;

use promptlens_core::{PromptSpec, SuffixSpec};

pub const QUESTION_SYSTEM_PROMPT: &str = "Answer truthfully.";

const CORPUS_HEADER: [&str; 4] = ["system_prompt", "prompt_topic", "user_input", "input_topic"];
const SUFFIX_HEADER: [&str; 3] = ["suffix_id", "text", "score_id"];

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: header must be `{expected}`")]
    Header { path: String, expected: String },
    #[error("{path}: line {line}: {message}")]
    Line { path: String, line: u64, message: String },
    #[error("{path}: no usable rows")]
    Empty { path: String },
}

/// A row that was skipped, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIssue {
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRow {
    pub line: u64,
    pub system_prompt: String,
    pub prompt_topic: String,
    pub user_input: String,
    pub input_topic: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub rows: Vec<CorpusRow>,
    pub issues: Vec<RowIssue>,
}

impl Corpus {
    /// Prompts for the engine, one per row or one per distinct system prompt.
    pub fn prompts(&self, group: bool) -> Vec<PromptSpec> {
        if !group {
            return self
                .rows
                .iter()
                .map(|r| PromptSpec::new(&format!("r{}", r.line), &r.system_prompt, &[r.user_input.as_str()]))
                .collect();
        }
        let mut out: Vec<PromptSpec> = Vec::new();
        for r in &self.rows {
            match out.iter_mut().find(|p| p.system_prompt == r.system_prompt) {
                Some(p) => p.user_inputs.push(r.user_input.clone()),
                None => out.push(PromptSpec::new(&format!("r{}", r.line), &r.system_prompt, &[r.user_input.as_str()])),
            }
        }
        out
    }
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str], path: &str) -> Result<(), CorpusError> {
    let header = rdr.headers().map_err(|e| CorpusError::Line {
        path: path.into(),
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(CorpusError::Header {
            path: path.into(),
            expected: expected.join(","),
        });
    }
    Ok(())
}

/// Parses a four-column corpus. Malformed rows are skipped and reported in
/// `issues`; a file without any usable row is an error.
pub fn parse_corpus(text: &str, path: &str) -> Result<Corpus, CorpusError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &CORPUS_HEADER, path)?;
    let mut corpus = Corpus::default();
    for record in rdr.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                corpus.issues.push(RowIssue { line, message: e.to_string() });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 4 {
            corpus.issues.push(RowIssue {
                line,
                message: format!("expected 4 fields, found {}", record.len()),
            });
            continue;
        }
        if record[0].is_empty() || record[2].is_empty() {
            corpus.issues.push(RowIssue {
                line,
                message: "system_prompt and user_input must not be empty".into(),
            });
            continue;
        }
        corpus.rows.push(CorpusRow {
            line,
            system_prompt: record[0].to_string(),
            prompt_topic: record[1].to_string(),
            user_input: record[2].to_string(),
            input_topic: record[3].to_string(),
        });
    }
    if corpus.rows.is_empty() {
        return Err(CorpusError::Empty { path: path.into() });
    }
    Ok(corpus)
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    parse_corpus(&read(path)?, &path.display().to_string())
}

pub fn parse_questions(text: &str, path: &str) -> Result<Vec<PromptSpec>, CorpusError> {
    let prompts: Vec<PromptSpec> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(line, q)| PromptSpec::new(&format!("q{line}"), QUESTION_SYSTEM_PROMPT, &[q]))
        .collect();
    if prompts.is_empty() {
        return Err(CorpusError::Empty { path: path.into() });
    }
    Ok(prompts)
}

pub fn load_questions(path: &Path) -> Result<Vec<PromptSpec>, CorpusError> {
    parse_questions(&read(path)?, &path.display().to_string())
}

/// Parses a suffix list. Any malformed row is an error, since suffixes define
/// the experiment.
pub fn parse_suffixes(text: &str, path: &str) -> Result<Vec<SuffixSpec>, CorpusError> {
    let mut rdr = reader(text);
    check_header(&mut rdr, &SUFFIX_HEADER, path)?;
    let mut out: Vec<SuffixSpec> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CorpusError::Line {
            path: path.into(),
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let fail = |message: String| CorpusError::Line { path: path.into(), line, message };
        if record.len() != 3 {
            return Err(fail(format!("expected 3 fields, found {}", record.len())));
        }
        if record.iter().any(str::is_empty) {
            return Err(fail("empty field".into()));
        }
        if out.iter().any(|s| s.suffix_id == record[0]) {
            return Err(fail(format!("duplicate suffix_id `{}`", &record[0])));
        }
        out.push(SuffixSpec::new(&record[0], &record[1], &record[2]));
    }
    if out.is_empty() {
        return Err(CorpusError::Empty { path: path.into() });
    }
    Ok(out)
}

pub fn load_suffixes(path: &Path) -> Result<Vec<SuffixSpec>, CorpusError> {
    parse_suffixes(&read(path)?, &path.display().to_string())
}

//! Text scores: word count, Flesch reading-ease and topic similarity.
//!
//! Counting rules, shared by every score in this module:
//!
//! * **Words** are the tokens of [`crate::text::tokenize`]: letter/digit runs
//!   with internal apostrophes or hyphens. `state-of-the-art` is one word.
//! * **Sentences**: the text is split on whitespace. A chunk whose end (after
//!   closing quotes and brackets) is a run of `.`, `!` or `?` closes a
//!   sentence, unless the chunk is a listed abbreviation such as `Dr.` or
//!   `e.g.`. Trailing word content without a terminator counts as one more
//!   sentence. Any non-blank text has at least one sentence.
//! * **Syllables**: lowercase the word, count maximal groups of `a e i o u y`,
//!   subtract one for a silent final `e` (a lone `e` after a consonant) unless
//!   the word ends in consonant + `le`, and clamp to at least 1.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::provider::{Embedder, ProviderError};
use crate::stopwords::Stopwords;
use crate::text::tokenize;

pub const WORD_COUNT_ID: &str = "word_count";
pub const FLESCH_ID: &str = "flesch_reading_ease";
pub const TOPIC_PREFIX: &str = "topic_similarity:";

/// Chunks ending in a period that do not close a sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "vs.", "e.g.", "i.e.", "cf.",
    "approx.", "fig.", "inc.", "ltd.",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("{score_id} is undefined for this text: {reason}")]
    Undefined { score_id: String, reason: &'static str },
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("embedding failed for text {text:?}: {source}")]
    Embedding {
        text: String,
        #[source]
        source: ProviderError,
    },
}

/// Number of words under the module's counting rule.
pub fn word_count(text: &str) -> usize {
    tokenize(text, &Stopwords::none()).len()
}

fn strip_closers(chunk: &str) -> &str {
    chunk.trim_end_matches(['"', '\'', ')', ']', '}', '\u{201D}', '\u{2019}'])
}

/// Number of sentences under the module's counting rule.
pub fn count_sentences(text: &str) -> usize {
    let mut count = 0;
    let mut has_content = false;
    let mut any_chunk = false;
    for chunk in text.split_whitespace() {
        any_chunk = true;
        if chunk.chars().any(char::is_alphanumeric) {
            has_content = true;
        }
        let core = strip_closers(chunk);
        if !core.ends_with(['.', '!', '?']) || !has_content {
            continue;
        }
        let lower = core.to_lowercase();
        if ABBREVIATIONS.contains(&lower.as_str()) {
            continue;
        }
        count += 1;
        has_content = false;
    }
    if has_content {
        count += 1;
    }
    if any_chunk {
        count.max(1)
    } else {
        0
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Heuristic syllable count of a single word; always at least 1.
pub fn count_syllables(word: &str) -> usize {
    let chars: Vec<char> = word.to_lowercase().chars().collect();
    let mut groups = 0usize;
    let mut prev_vowel = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let len = chars.len();
    if len >= 2 && chars[len - 1] == 'e' && !is_vowel(chars[len - 2]) {
        let consonant_le = len >= 3
            && chars[len - 2] == 'l'
            && chars[len - 3].is_alphabetic()
            && !is_vowel(chars[len - 3]);
        if !consonant_le {
            groups = groups.saturating_sub(1);
        }
    }
    groups.max(1)
}

/// 206.835 − 1.015·(words/sentences) − 84.6·(syllables/words), unclamped.
pub fn flesch_reading_ease(text: &str) -> Result<f64, ScoreError> {
    let tokens = tokenize(text, &Stopwords::none());
    if tokens.is_empty() {
        return Err(ScoreError::Undefined {
            score_id: FLESCH_ID.to_string(),
            reason: "text has no words",
        });
    }
    let words = tokens.len() as f64;
    let sentences = count_sentences(text) as f64;
    let syllables: usize = tokens.iter().map(|t| count_syllables(&t.text)).sum();
    Ok(206.835 - 1.015 * (words / sentences) - 84.6 * (syllables as f64 / words))
}

/// dot(a, b) / (‖a‖·‖b‖).
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, ScoreError> {
    if a.len() != b.len() {
        return Err(ScoreError::InvalidArgument("vector dimensions differ"));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(ScoreError::InvalidArgument("vectors must be finite"));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(ScoreError::InvalidArgument("zero vector"));
    }
    Ok(dot / (libm::sqrt(na) * libm::sqrt(nb)))
}

/// A function from completion text to a real-valued score.
pub trait Scorer {
    /// Stable identifier written into reports.
    fn id(&self) -> &str;
    fn score(&self, text: &str) -> Result<f64, ScoreError>;
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn score(&self, text: &str) -> Result<f64, ScoreError> {
        (**self).score(text)
    }
}

impl<S: Scorer + ?Sized> Scorer for alloc::boxed::Box<S> {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn score(&self, text: &str) -> Result<f64, ScoreError> {
        (**self).score(text)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WordCount;

impl Scorer for WordCount {
    fn id(&self) -> &str {
        WORD_COUNT_ID
    }
    fn score(&self, text: &str) -> Result<f64, ScoreError> {
        Ok(word_count(text) as f64)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FleschReadingEase;

impl Scorer for FleschReadingEase {
    fn id(&self) -> &str {
        FLESCH_ID
    }
    fn score(&self, text: &str) -> Result<f64, ScoreError> {
        flesch_reading_ease(text)
    }
}

/// A topic name with its embedding computed once up front.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicSpec {
    pub topic_name: String,
    pub embedding: Vec<f64>,
}

impl TopicSpec {
    pub fn new<E: Embedder + ?Sized>(topic_name: &str, embedder: &E) -> Result<Self, ScoreError> {
        let embedding = embedder.embed(topic_name).map_err(|source| ScoreError::Embedding {
            text: topic_name.to_string(),
            source,
        })?;
        if embedding.iter().all(|x| *x == 0.0) || embedding.iter().any(|x| !x.is_finite()) {
            return Err(ScoreError::InvalidArgument("topic embedding must be finite and nonzero"));
        }
        Ok(Self {
            topic_name: topic_name.to_string(),
            embedding,
        })
    }
}

/// Cosine similarity between a text's embedding and a topic's embedding.
pub fn topic_similarity<E: Embedder + ?Sized>(
    text: &str,
    topic: &TopicSpec,
    embedder: &E,
) -> Result<f64, ScoreError> {
    if text.trim().is_empty() {
        return Err(ScoreError::Undefined {
            score_id: format!("{TOPIC_PREFIX}{}", topic.topic_name),
            reason: "text is empty",
        });
    }
    let v = embedder.embed(text).map_err(|source| ScoreError::Embedding {
        text: preview(text),
        source,
    })?;
    cosine_similarity(&v, &topic.embedding).map_err(|_| ScoreError::Undefined {
        score_id: format!("{TOPIC_PREFIX}{}", topic.topic_name),
        reason: "text embedding is zero or mismatched",
    })
}

fn preview(text: &str) -> String {
    const MAX: usize = 60;
    match text.char_indices().nth(MAX) {
        Some((i, _)) => format!("{}…", &text[..i]),
        None => text.to_string(),
    }
}

/// Topic-similarity scorer bound to one topic and one embedder.
pub struct TopicSimilarity<E> {
    id: String,
    topic: TopicSpec,
    embedder: E,
}

impl<E: Embedder> TopicSimilarity<E> {
    pub fn new(topic_name: &str, embedder: E) -> Result<Self, ScoreError> {
        let topic = TopicSpec::new(topic_name, &embedder)?;
        Ok(Self {
            id: format!("{TOPIC_PREFIX}{topic_name}"),
            topic,
            embedder,
        })
    }

    pub fn topic(&self) -> &TopicSpec {
        &self.topic
    }
}

impl<E: Embedder> Scorer for TopicSimilarity<E> {
    fn id(&self) -> &str {
        &self.id
    }
    fn score(&self, text: &str) -> Result<f64, ScoreError> {
        topic_similarity(text, &self.topic, &self.embedder)
    }
}

/// Named score values for one text, in scorer order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreVector {
    entries: Vec<(String, f64)>,
}

impl ScoreVector {
    /// Scores `text` with every scorer; fails on the first undefined score.
    pub fn compute<S: Scorer>(scorers: &[S], text: &str) -> Result<Self, ScoreError> {
        let mut entries = Vec::with_capacity(scorers.len());
        for s in scorers {
            if entries.iter().any(|(id, _): &(String, f64)| id == s.id()) {
                return Err(ScoreError::InvalidArgument("duplicate score id"));
            }
            entries.push((s.id().to_string(), s.score(text)?));
        }
        Ok(Self { entries })
    }

    pub fn get(&self, score_id: &str) -> Option<f64> {
        self.entries.iter().find(|(id, _)| id == score_id).map(|(_, v)| *v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries.iter().map(|(id, v)| (id.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

//! Stopword sets.
//!
//! The bundled English list lives verbatim in `stopwords.txt` next to this
//! file, one lowercase word per line.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};

const ENGLISH: &str = include_str!("stopwords.txt");

/// A set of lowercase stopwords.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stopwords {
    words: BTreeSet<String>,
}

impl Stopwords {
    /// An empty set; no word is flagged.
    pub fn none() -> Self {
        Self::default()
    }

    /// The bundled English list.
    pub fn english() -> Self {
        Self::from_words(ENGLISH.lines())
    }

    /// Builds a set from arbitrary words. Entries are trimmed and lowercased;
    /// blank lines and `#` comments are skipped.
    pub fn from_words<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let words = words
            .into_iter()
            .map(str::trim)
            .filter(|w| !w.is_empty() && !w.starts_with('#'))
            .map(|w| w.to_lowercase())
            .collect();
        Self { words }
    }

    /// Case-insensitive membership.
    pub fn contains(&self, word: &str) -> bool {
        if self.words.contains(word) {
            return true;
        }
        let lower = word.to_lowercase();
        lower != word && self.words.contains(&lower)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    pub fn insert(&mut self, word: &str) {
        self.words.insert(word.trim().to_lowercase().to_string());
    }
}

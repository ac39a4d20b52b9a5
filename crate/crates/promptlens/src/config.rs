//! Run configuration, read from a TOML file.
//!
//! ```toml
//! [provider]
//! kind = "stub"            # or "http"
//! base_url = "https://api.openai.com"
//! model_id = "gpt-3.5-turbo-0613"
//! embedding_model = "text-embedding-3-small"
//! parallelism = 4
//! cache_dir = ".promptlens-cache"
//!
//! [sampling]
//! n = 3
//! temperature = 1.0
//! aggregation = "paired"   # or "mean_baseline"
//!
//! [scoring]
//! scores = ["word_count", "flesch_reading_ease", "topic_similarity"]
//! topics = ["AI"]
//!
//! [masking]
//! exclude_stopwords = false
//! glyph = "_"
//! window = 1
//!
//! [budget]
//! max_calls = 5000
//!
//! [stub]
//! seed = 7
//!
//! [[stub.rules]]
//! trigger = "detailed"
//! words = 90
//!
//! [output]
//! dir = "promptlens-out"
//! ```
//!
//! Every section and key is optional except where noted in
//! [`RunConfig::validate`]; unknown keys are rejected.

use std::path::{Path, PathBuf};

use promptlens_core::stub::{Effect, Jitter, ResponseShape, StubConfig, StubRule};
use promptlens_core::{Aggregation, AnalysisOptions, Granularity, Stopwords};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config key `{key}`: {message}")]
    Invalid { key: &'static str, message: String },
}

fn invalid(key: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    Stub,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProviderSection {
    pub kind: ProviderKind,
    pub base_url: Option<String>,
    pub model_id: Option<String>,
    pub embedding_model: Option<String>,
    pub parallelism: usize,
    pub cache_dir: Option<PathBuf>,
    pub timeout_secs: u64,
    pub single_call_n: bool,
    pub retry_attempts: u32,
    pub retry_initial_ms: u64,
}

impl Default for ProviderSection {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Stub,
            base_url: None,
            model_id: None,
            embedding_model: None,
            parallelism: 4,
            cache_dir: None,
            timeout_secs: 120,
            single_call_n: true,
            retry_attempts: 3,
            retry_initial_ms: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    Paired,
    MeanBaseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    pub n: u32,
    pub temperature: f64,
    pub aggregation: AggregationMode,
}

impl Default for SamplingSection {
    fn default() -> Self {
        Self {
            n: 3,
            temperature: 1.0,
            aggregation: AggregationMode::Paired,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoringSection {
    /// Any of `word_count`, `flesch_reading_ease`, `topic_similarity`.
    pub scores: Vec<String>,
    /// One topic-similarity score per topic.
    pub topics: Vec<String>,
}

impl Default for ScoringSection {
    fn default() -> Self {
        Self {
            scores: vec!["word_count".into(), "flesch_reading_ease".into(), "topic_similarity".into()],
            topics: vec!["AI".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaskingSection {
    pub exclude_stopwords: bool,
    pub glyph: String,
    /// 1 masks single words; larger values mask runs of that many words.
    pub window: usize,
    /// Replaces the built-in English list; one word per line.
    pub stopwords_file: Option<PathBuf>,
}

impl Default for MaskingSection {
    fn default() -> Self {
        Self {
            exclude_stopwords: false,
            glyph: "_".into(),
            window: 1,
            stopwords_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetSection {
    /// Refuse runs planning more provider samples than this.
    pub max_calls: Option<usize>,
    pub allow_over_budget: bool,
    /// Used by dry runs to estimate cost.
    pub cost_per_call: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleEntry {
    pub trigger: String,
    #[serde(default)]
    pub words: f64,
    #[serde(default)]
    pub long_share: f64,
    #[serde(default)]
    pub topic_word: Option<String>,
    #[serde(default)]
    pub topic_count: f64,
    #[serde(default)]
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StubSection {
    pub seed: Option<u64>,
    pub base_words: f64,
    pub base_long_share: f64,
    pub jitter_words: u32,
    pub system_sensitive: bool,
    pub sentence_len: u32,
    pub rules: Vec<RuleEntry>,
}

impl Default for StubSection {
    fn default() -> Self {
        let base = ResponseShape::default();
        Self {
            seed: None,
            base_words: base.words,
            base_long_share: base.long_share,
            jitter_words: 0,
            system_sensitive: true,
            sentence_len: 10,
            rules: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Decimal places in terminal tables.
    pub precision: usize,
    /// Terminal table width in columns.
    pub width: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("promptlens-out"),
            precision: 3,
            width: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub provider: ProviderSection,
    pub sampling: SamplingSection,
    pub scoring: ScoringSection,
    pub masking: MaskingSection,
    pub budget: BudgetSection,
    pub stub: StubSection,
    pub output: OutputSection,
}

const KNOWN_SCORES: [&str; 3] = ["word_count", "flesch_reading_ease", "topic_similarity"];

impl RunConfig {
    /// The configuration used when no file is given: the stub provider with
    /// seed 0.
    pub fn stub_default() -> Self {
        let mut c = RunConfig::default();
        c.stub.seed = Some(0);
        c
    }

    /// Parses without validating, so command-line overrides can be applied
    /// first.
    pub fn parse_unchecked(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config = Self::parse_unchecked(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load_unchecked(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_unchecked(&text)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let config = Self::load_unchecked(path)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.provider;
        if p.parallelism == 0 {
            return Err(invalid("provider.parallelism", "must be at least 1"));
        }
        if p.retry_attempts == 0 {
            return Err(invalid("provider.retry_attempts", "must be at least 1"));
        }
        match p.kind {
            ProviderKind::Stub => {
                if self.stub.seed.is_none() {
                    return Err(invalid("stub.seed", "the stub provider requires a seed"));
                }
            }
            ProviderKind::Http => {
                if p.base_url.as_deref().is_none_or(|u| u.trim().is_empty()) {
                    return Err(invalid("provider.base_url", "required for the http provider"));
                }
                if p.model_id.as_deref().is_none_or(|m| m.trim().is_empty()) {
                    return Err(invalid("provider.model_id", "required for the http provider"));
                }
                if self.wants_topics() && p.embedding_model.as_deref().is_none_or(|m| m.trim().is_empty()) {
                    return Err(invalid(
                        "provider.embedding_model",
                        "required for topic_similarity with the http provider",
                    ));
                }
            }
        }
        let s = &self.sampling;
        if s.n == 0 {
            return Err(invalid("sampling.n", "must be at least 1"));
        }
        if !s.temperature.is_finite() || s.temperature < 0.0 {
            return Err(invalid("sampling.temperature", "must be finite and ≥ 0"));
        }
        if self.scoring.scores.is_empty() {
            return Err(invalid("scoring.scores", "at least one score is required"));
        }
        for (i, id) in self.scoring.scores.iter().enumerate() {
            if !KNOWN_SCORES.contains(&id.as_str()) {
                return Err(invalid("scoring.scores", format!("unknown score `{id}`")));
            }
            if self.scoring.scores[..i].contains(id) {
                return Err(invalid("scoring.scores", format!("duplicate score `{id}`")));
            }
        }
        if self.wants_topics() && self.scoring.topics.is_empty() {
            return Err(invalid("scoring.topics", "topic_similarity needs at least one topic"));
        }
        for (i, t) in self.scoring.topics.iter().enumerate() {
            if t.trim().is_empty() {
                return Err(invalid("scoring.topics", "topics must not be blank"));
            }
            if self.scoring.topics[..i].contains(t) {
                return Err(invalid("scoring.topics", format!("duplicate topic `{t}`")));
            }
        }
        let m = &self.masking;
        if m.glyph.is_empty() || m.glyph.chars().any(char::is_alphanumeric) {
            return Err(invalid("masking.glyph", "must be non-empty and free of letters and digits"));
        }
        if m.window == 0 {
            return Err(invalid("masking.window", "must be at least 1"));
        }
        if !self.budget.cost_per_call.is_finite() || self.budget.cost_per_call < 0.0 {
            return Err(invalid("budget.cost_per_call", "must be finite and ≥ 0"));
        }
        let st = &self.stub;
        if !st.base_words.is_finite() || st.base_words < 0.0 {
            return Err(invalid("stub.base_words", "must be finite and ≥ 0"));
        }
        if !(0.0..=1.0).contains(&st.base_long_share) {
            return Err(invalid("stub.base_long_share", "must lie in [0, 1]"));
        }
        if st.sentence_len == 0 {
            return Err(invalid("stub.sentence_len", "must be at least 1"));
        }
        for r in &st.rules {
            if r.trigger.trim().is_empty() {
                return Err(invalid("stub.rules.trigger", "must not be blank"));
            }
            if [r.words, r.long_share, r.topic_count, r.spread].iter().any(|v| !v.is_finite()) {
                return Err(invalid("stub.rules", format!("rule `{}` has a non-finite number", r.trigger)));
            }
        }
        if self.output.precision > 12 {
            return Err(invalid("output.precision", "must be at most 12"));
        }
        if self.output.width < 40 {
            return Err(invalid("output.width", "must be at least 40"));
        }
        Ok(())
    }

    pub fn wants_topics(&self) -> bool {
        self.scoring.scores.iter().any(|s| s == "topic_similarity")
    }

    pub fn model_id(&self) -> String {
        match self.provider.kind {
            ProviderKind::Stub => self.provider.model_id.clone().unwrap_or_else(|| "stub".into()),
            ProviderKind::Http => self.provider.model_id.clone().unwrap_or_default(),
        }
    }

    /// Hex SHA-256 of the canonical JSON form of this configuration, leaving
    /// out settings that cannot change results (output, cache location,
    /// parallelism).
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        c.provider.cache_dir = None;
        c.provider.parallelism = ProviderSection::default().parallelism;
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn stub_config(&self) -> StubConfig {
        let s = &self.stub;
        StubConfig {
            seed: s.seed.unwrap_or(0),
            base: ResponseShape {
                words: s.base_words,
                long_share: s.base_long_share,
            },
            rules: s
                .rules
                .iter()
                .map(|r| StubRule {
                    trigger: r.trigger.clone(),
                    effect: Effect {
                        words: r.words,
                        long_share: r.long_share,
                        topic_word: r.topic_word.clone(),
                        topic_count: r.topic_count,
                    },
                    spread: r.spread,
                })
                .collect(),
            jitter: Jitter {
                words: s.jitter_words,
                system_sensitive: s.system_sensitive,
            },
            sentence_len: s.sentence_len,
        }
    }

    pub fn analysis_options(&self) -> Result<AnalysisOptions, ConfigError> {
        let stopwords = match &self.masking.stopwords_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                    path: path.clone(),
                    source,
                })?;
                Stopwords::from_words(text.lines().map(str::trim).filter(|l| !l.is_empty()))
            }
            None => Stopwords::english(),
        };
        Ok(AnalysisOptions {
            n: self.sampling.n,
            temperature: self.sampling.temperature,
            model_id: self.model_id(),
            aggregation: match self.sampling.aggregation {
                AggregationMode::Paired => Aggregation::Paired,
                AggregationMode::MeanBaseline => Aggregation::MeanBaseline,
            },
            granularity: match self.masking.window {
                1 => Granularity::Word,
                w => Granularity::Window(w),
            },
            exclude_stopwords: self.masking.exclude_stopwords,
            stopwords,
            glyph: self.masking.glyph.clone(),
            budget: self.budget.max_calls,
            allow_over_budget: self.budget.allow_over_budget,
            only_tokens: None,
        })
    }
}

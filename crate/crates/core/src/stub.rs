//! Deterministic stand-ins for a language model and an embedding model.
//!
//! [`StubProvider`] builds each completion from a rule table. A rule fires
//! when its trigger phrase appears as whole words in the system prompt
//! (case-insensitive), and adds its effect to the base response shape:
//!
//! * `words`: number of words in the response,
//! * `long_share`: fraction of filler words drawn from a pool of
//!   four-syllable words instead of one-syllable words (drives Flesch),
//! * `topic_word` × `topic_count`: occurrences of a topic word (drives topic
//!   similarity).
//!
//! A completion is a pure function of (system prompt, user input, sample
//! index, seed, rule table). The sample index only matters at temperature
//! above zero; the system prompt only matters through fired rules unless
//! [`Jitter::system_sensitive`] is set, in which case any change to the prompt
//! reshuffles the filler words the way a real sampler would.
//!
//! [`StubEmbedder`] is a bag of hashed words: each lowercase word adds 1.0 to
//! bucket `sha256(word) mod dim`. Texts with disjoint vocabularies are
//! orthogonal unless two of their words share a bucket.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::digest::{hash64, FieldHasher};
use crate::provider::{CompletionProvider, CompletionRequest, Embedder, ProviderError};
use crate::stopwords::Stopwords;
use crate::text::tokenize;

/// One-syllable filler words.
pub const SHORT_WORDS: &[&str] = &[
    "cat", "dog", "sun", "run", "big", "red", "map", "cup", "hat", "pen", "box", "fish", "bird",
    "milk", "lamp", "desk", "road", "ship", "star", "rock", "tall", "cold", "warm", "fast", "slow",
    "green", "blue", "sand", "wind", "rain", "hill", "farm", "bread", "salt", "corn", "nest",
    "frog", "bell", "drum", "kite",
];

/// Four-syllable filler words.
pub const LONG_WORDS: &[&str] = &[
    "information",
    "education",
    "relationship",
    "technology",
    "communicate",
    "individual",
    "particular",
    "philosophy",
    "development",
    "democracy",
    "environment",
    "experiment",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseShape {
    pub words: f64,
    pub long_share: f64,
}

impl Default for ResponseShape {
    fn default() -> Self {
        Self {
            words: 30.0,
            long_share: 0.1,
        }
    }
}

/// Additive change applied to the response shape when a rule fires.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Effect {
    #[serde(default)]
    pub words: f64,
    #[serde(default)]
    pub long_share: f64,
    #[serde(default)]
    pub topic_word: Option<String>,
    #[serde(default)]
    pub topic_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubRule {
    /// Word or phrase that must appear in the system prompt.
    pub trigger: String,
    pub effect: Effect,
    /// Per-input variation of the effect size: the effect is multiplied by
    /// `1 + spread·h` with `h ∈ [0, 1)` hashed from (seed, user input,
    /// trigger). Zero keeps the effect fixed.
    #[serde(default)]
    pub spread: f64,
}

impl StubRule {
    pub fn new(trigger: &str, effect: Effect) -> Self {
        Self {
            trigger: trigger.to_string(),
            effect,
            spread: 0.0,
        }
    }

    pub fn words(trigger: &str, words: f64) -> Self {
        Self::new(trigger, Effect { words, ..Effect::default() })
    }

    pub fn long_share(trigger: &str, long_share: f64) -> Self {
        Self::new(trigger, Effect { long_share, ..Effect::default() })
    }

    pub fn topic(trigger: &str, topic_word: &str, topic_count: f64) -> Self {
        Self::new(
            trigger,
            Effect {
                topic_word: Some(topic_word.to_string()),
                topic_count,
                ..Effect::default()
            },
        )
    }

    pub fn with_spread(mut self, spread: f64) -> Self {
        self.spread = spread;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Jitter {
    /// Up to this many extra words per sample.
    #[serde(default)]
    pub words: u32,
    /// Mix the whole system prompt into the sampling seed.
    #[serde(default)]
    pub system_sensitive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubConfig {
    pub seed: u64,
    #[serde(default)]
    pub base: ResponseShape,
    #[serde(default)]
    pub rules: Vec<StubRule>,
    #[serde(default)]
    pub jitter: Jitter,
    #[serde(default = "default_sentence_len")]
    pub sentence_len: u32,
}

fn default_sentence_len() -> u32 {
    10
}

impl StubConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            base: ResponseShape::default(),
            rules: Vec::new(),
            jitter: Jitter::default(),
            sentence_len: default_sentence_len(),
        }
    }

    pub fn base_words(mut self, words: f64) -> Self {
        self.base.words = words;
        self
    }

    pub fn base_long_share(mut self, share: f64) -> Self {
        self.base.long_share = share;
        self
    }

    pub fn rule(mut self, rule: StubRule) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn jitter(mut self, words: u32, system_sensitive: bool) -> Self {
        self.jitter = Jitter {
            words,
            system_sensitive,
        };
        self
    }
}

/// Rule-table completion provider. Counts every generated sample.
#[derive(Debug)]
pub struct StubProvider {
    config: StubConfig,
    triggers: Vec<Vec<String>>,
    calls: AtomicUsize,
}

fn lower_words(text: &str) -> Vec<String> {
    tokenize(text, &Stopwords::none())
        .into_iter()
        .map(|t| t.text.to_lowercase())
        .collect()
}

fn contains_phrase(haystack: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && haystack.windows(phrase.len()).any(|w| w == phrase)
}

fn unit_interval(x: u64) -> f64 {
    (x >> 11) as f64 / (1u64 << 53) as f64
}

impl StubProvider {
    pub fn new(config: StubConfig) -> Self {
        let triggers = config.rules.iter().map(|r| lower_words(&r.trigger)).collect();
        Self {
            config,
            triggers,
            calls: AtomicUsize::new(0),
        }
    }

    /// A model whose output does not depend on the system prompt at all.
    pub fn insensitive(seed: u64) -> Self {
        Self::new(StubConfig::new(seed).jitter(5, false))
    }

    pub fn config(&self) -> &StubConfig {
        &self.config
    }

    /// Samples generated since construction or the last reset.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn reset_calls(&self) {
        self.calls.store(0, Ordering::Relaxed);
    }

    /// Indices of the rules that fire for `system_prompt`.
    pub fn fired_rules(&self, system_prompt: &str) -> Vec<usize> {
        let words = lower_words(system_prompt);
        self.triggers
            .iter()
            .enumerate()
            .filter(|(_, t)| contains_phrase(&words, t))
            .map(|(i, _)| i)
            .collect()
    }

    /// The text for one sample, without touching the call counter.
    pub fn generate(&self, system_prompt: &str, user_input: &str, sample_index: u32, temperature: f64) -> String {
        let cfg = &self.config;
        let mut words = cfg.base.words;
        let mut long_share = cfg.base.long_share;
        let mut topics: Vec<(&str, f64)> = Vec::new();
        for i in self.fired_rules(system_prompt) {
            let rule = &cfg.rules[i];
            let scale = if rule.spread == 0.0 {
                1.0
            } else {
                let mut h = FieldHasher::new("promptlens-stub-spread");
                h.u64(cfg.seed).str(user_input).str(&rule.trigger);
                let d = h.finish();
                let x = u64::from_le_bytes([d[0], d[1], d[2], d[3], d[4], d[5], d[6], d[7]]);
                1.0 + rule.spread * unit_interval(x)
            };
            words += rule.effect.words * scale;
            long_share += rule.effect.long_share * scale;
            if let Some(word) = rule.effect.topic_word.as_deref() {
                let add = rule.effect.topic_count * scale;
                match topics.iter_mut().find(|(w, _)| *w == word) {
                    Some(entry) => entry.1 += add,
                    None => topics.push((word, add)),
                }
            }
        }

        let mut h = FieldHasher::new("promptlens-stub-sample");
        h.u64(cfg.seed).str(user_input);
        h.u64(if temperature > 0.0 { u64::from(sample_index) } else { 0 });
        if cfg.jitter.system_sensitive {
            h.str(system_prompt);
        }
        let mut rng = ChaCha8Rng::from_seed(h.finish());

        let mut total = libm::round(words.max(0.0)) as usize;
        if cfg.jitter.words > 0 {
            total += rng.random_range(0..=cfg.jitter.words) as usize;
        }

        let mut slots: Vec<&str> = Vec::with_capacity(total);
        for (word, count) in &topics {
            let n = libm::round(count.max(0.0)) as usize;
            for _ in 0..n {
                if slots.len() < total {
                    slots.push(word);
                }
            }
        }
        let filler = total - slots.len();
        let n_long = libm::round(long_share.clamp(0.0, 1.0) * filler as f64) as usize;
        for k in 0..filler {
            let pool = if k < n_long { LONG_WORDS } else { SHORT_WORDS };
            slots.push(pool.choose(&mut rng).copied().unwrap_or("cat"));
        }
        slots.shuffle(&mut rng);

        let sentence_len = cfg.sentence_len.max(1) as usize;
        let mut text = String::new();
        for (s, sentence) in slots.chunks(sentence_len).enumerate() {
            if s > 0 {
                text.push(' ');
            }
            for (w, word) in sentence.iter().enumerate() {
                if w > 0 {
                    text.push(' ');
                }
                if w == 0 {
                    let mut chars = word.chars();
                    if let Some(first) = chars.next() {
                        text.extend(first.to_uppercase());
                        text.push_str(chars.as_str());
                    }
                } else {
                    text.push_str(word);
                }
            }
            text.push('.');
        }
        text
    }
}

impl CompletionProvider for StubProvider {
    fn kind(&self) -> &str {
        "stub"
    }

    fn sample(&self, request: &CompletionRequest, sample_index: u32) -> Result<String, ProviderError> {
        request.validate()?;
        if sample_index >= request.n {
            return Err(ProviderError::InvalidRequest(String::from("sample index out of range")));
        }
        self.calls.fetch_add(1, Ordering::Relaxed);
        Ok(self.generate(
            &request.system_prompt,
            &request.user_input,
            sample_index,
            request.temperature,
        ))
    }
}

/// Bag-of-hashed-words embedder.
#[derive(Debug, Clone)]
pub struct StubEmbedder {
    dim: usize,
}

impl StubEmbedder {
    pub const DEFAULT_DIM: usize = 4096;

    pub fn new(dim: usize) -> Self {
        Self { dim: dim.max(1) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Bucket a (lowercased) word lands in.
    pub fn bucket(&self, word: &str) -> usize {
        (hash64("promptlens-stub-embed", &word.to_lowercase()) % self.dim as u64) as usize
    }
}

impl Default for StubEmbedder {
    fn default() -> Self {
        Self::new(Self::DEFAULT_DIM)
    }
}

impl Embedder for StubEmbedder {
    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        if text.trim().is_empty() {
            return Err(ProviderError::InvalidRequest(String::from("cannot embed empty text")));
        }
        let mut v = vec![0.0; self.dim];
        for token in tokenize(text, &Stopwords::none()) {
            v[self.bucket(&token.text)] += 1.0;
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::{count_syllables, flesch_reading_ease, topic_similarity, word_count, TopicSpec};
    use alloc::collections::BTreeSet;

    fn request(system: &str, user: &str, n: u32) -> CompletionRequest {
        CompletionRequest {
            system_prompt: system.into(),
            user_input: user.into(),
            n,
            temperature: 1.0,
            model_id: "stub".into(),
        }
    }

    #[test]
    fn filler_pools_have_fixed_syllables() {
        for w in SHORT_WORDS {
            assert_eq!(count_syllables(w), 1, "{w}");
        }
        for w in LONG_WORDS {
            assert_eq!(count_syllables(w), 4, "{w}");
        }
    }

    #[test]
    fn filler_words_occupy_distinct_buckets_from_common_topics() {
        let e = StubEmbedder::default();
        let mut seen = BTreeSet::new();
        for w in SHORT_WORDS.iter().chain(LONG_WORDS) {
            seen.insert(e.bucket(w));
        }
        for topic in ["ai", "python", "acme", "climate", "story", "healthcare", "sports", "music"] {
            assert!(!seen.contains(&e.bucket(topic)), "{topic} collides with filler");
        }
    }

    #[test]
    fn detailed_rule_controls_word_count() {
        let stub = StubProvider::new(StubConfig::new(7).base_words(30.0).rule(StubRule::words("detailed", 90.0)));
        let full = request("You are a teacher. Give a detailed answer", "Why is the sky blue?", 3);
        for c in stub.complete(&full).unwrap() {
            assert_eq!(word_count(&c.text), 120);
        }
        let masked = request("You are a teacher. Give a _ answer", "Why is the sky blue?", 3);
        for c in stub.complete(&masked).unwrap() {
            assert_eq!(word_count(&c.text), 30);
        }
        assert_eq!(stub.calls(), 6);
    }

    #[test]
    fn single_sample_has_index_zero() {
        let stub = StubProvider::insensitive(1);
        let out = stub.complete(&request("x", "y", 1)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].sample_index, 0);
    }

    #[test]
    fn triggers_match_whole_words_only() {
        let stub = StubProvider::new(StubConfig::new(1).rule(StubRule::words("AI", 10.0)).rule(StubRule::words("long story", 5.0)));
        assert_eq!(stub.fired_rules("He said hello"), Vec::<usize>::new());
        assert_eq!(stub.fired_rules("Talk about ai."), [0]);
        assert_eq!(stub.fired_rules("A long, long story"), [1]);
        assert_eq!(stub.fired_rules("A long _"), Vec::<usize>::new());
    }

    #[test]
    fn temperature_zero_repeats_samples() {
        let stub = StubProvider::new(StubConfig::new(3).jitter(10, false));
        let mut req = request("Be brief", "Hello there", 3);
        req.temperature = 0.0;
        let out = stub.complete(&req).unwrap();
        assert!(out.iter().all(|c| c.text == out[0].text));
        req.temperature = 1.0;
        let out = stub.complete(&req).unwrap();
        assert!(out.iter().any(|c| c.text != out[0].text));
    }

    #[test]
    fn insensitive_stub_ignores_the_system_prompt() {
        let stub = StubProvider::insensitive(11);
        for i in 0..3 {
            assert_eq!(stub.generate("Answer concisely", "q", i, 1.0), stub.generate("_ concisely", "q", i, 1.0));
        }
    }

    #[test]
    fn system_sensitive_jitter_changes_with_the_prompt() {
        let stub = StubProvider::new(StubConfig::new(3).jitter(4, true));
        assert_ne!(stub.generate("Answer concisely", "q", 0, 1.0), stub.generate("_ concisely", "q", 0, 1.0));
    }

    #[test]
    fn long_share_moves_flesch() {
        let stub = StubProvider::new(StubConfig::new(5).base_long_share(0.0).rule(StubRule::long_share("technical", 0.7)));
        let plain = flesch_reading_ease(&stub.generate("Be clear", "q", 0, 1.0)).unwrap();
        let tech = flesch_reading_ease(&stub.generate("Be technical", "q", 0, 1.0)).unwrap();
        assert!(plain - tech > 20.0, "{plain} {tech}");
    }

    #[test]
    fn topic_injection_moves_similarity() {
        let e = StubEmbedder::default();
        let topic = TopicSpec::new("Python", &e).unwrap();
        let stub = StubProvider::new(StubConfig::new(5).rule(StubRule::topic("Python", "Python", 3.0)));
        let with = stub.generate("Always suggest Python", "q", 0, 1.0);
        let without = stub.generate("Always suggest _", "q", 0, 1.0);
        assert_eq!(word_count(&with), word_count(&without));
        let a = topic_similarity(&with, &topic, &e).unwrap();
        let b = topic_similarity(&without, &topic, &e).unwrap();
        assert_eq!(b, 0.0);
        assert!(a > 0.3, "{a}");
    }

    #[test]
    fn spread_varies_effect_by_user_input() {
        let stub = StubProvider::new(StubConfig::new(5).base_words(10.0).rule(StubRule::words("detailed", 100.0).with_spread(1.0)));
        let counts: BTreeSet<usize> = ["a", "b", "c", "d", "e"]
            .iter()
            .map(|u| word_count(&stub.generate("Be detailed", u, 0, 1.0)))
            .collect();
        assert!(counts.len() > 1);
        assert!(counts.iter().all(|c| (110..=210).contains(c)));
    }

    #[test]
    fn negative_effects_clamp_to_empty_text() {
        let stub = StubProvider::new(StubConfig::new(5).base_words(10.0).rule(StubRule::words("silent", -50.0)));
        assert_eq!(stub.generate("Stay silent", "q", 0, 1.0), "");
    }

    #[test]
    fn embedder_properties() {
        let e = StubEmbedder::default();
        assert!(e.embed("").is_err());
        assert!(e.embed("   ").is_err());
        assert_eq!(e.embed("AI").unwrap(), e.embed("AI").unwrap());
        let a = e.embed("cat dog").unwrap();
        let b = e.embed("sun rain").unwrap();
        let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert_eq!(dot, 0.0);
        assert_eq!(a.len(), StubEmbedder::DEFAULT_DIM);
    }

    #[test]
    fn rejects_out_of_range_sample_index() {
        let stub = StubProvider::insensitive(1);
        assert!(stub.sample(&request("a", "b", 2), 2).is_err());
        let mut bad = request("a", "b", 0);
        assert!(stub.complete(&bad).is_err());
        bad.n = 1;
        bad.temperature = f64::NAN;
        assert!(stub.complete(&bad).is_err());
    }
}

//! Word importance for LLM system prompts.
//!
//! Each word of a system prompt is masked in turn, the model is re-sampled
//! with the masked prompt, and the change of arbitrary text scores relative
//! to the unmasked baseline is averaged into a per-word importance value.
//!
//! This crate is `no_std` (with `alloc`) and contains no IO. Completions and
//! embeddings come in through the [`provider::CompletionProvider`] and
//! [`provider::Embedder`] traits; the deterministic [`stub`] implementations
//! make every computation reproducible without network access.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod experiment;
pub mod importance;
pub mod provider;
pub mod scoring;
pub mod stats;
pub mod stopwords;
pub mod stub;
pub mod text;

mod digest;

pub use experiment::{
    plan_experiment, run_suffix_experiment, suffix_impact, summarize, CorrelationSummary, Exclusion, ExperimentError,
    ExperimentOutcome, SuffixExperimentRecord, SuffixSpec,
};
pub use importance::{
    compute_baseline, plan_calls, suffix_words, word_importance, Aggregation, AnalysisOptions,
    Baseline, CallPlan, Granularity, ImportanceError, ImportanceMatrix, MaskUnit, PromptSpec,
    Provenance,
};
pub use provider::{Completion, CompletionProvider, CompletionRequest, Embedder, ProviderError};
pub use scoring::{
    cosine_similarity, count_sentences, count_syllables, flesch_reading_ease, word_count,
    FleschReadingEase, ScoreError, ScoreVector, Scorer, TopicSimilarity, TopicSpec, WordCount,
};
pub use stats::{linear_fit, pearson, StatsError};
pub use stopwords::Stopwords;
pub use text::{mask, mask_span, tokenize, MaskedVariant, TextError, WordToken, DEFAULT_GLYPH};

//! Word importance engine.
//!
//! For a system prompt `s`, user inputs `u_1..u_M` and `N` samples per
//! request, the importance of word `k` under score `f` is
//!
//! ```text
//! w(k) = 1/(N·M) · Σ_i Σ_j | f(m(s, u_j))_i − f(m(s_k, u_j))_i |
//! ```
//!
//! where `s_k` is `s` with word `k` masked. In [`Aggregation::Paired`] mode
//! the i-th baseline sample is compared with the i-th masked sample; in
//! [`Aggregation::MeanBaseline`] mode every masked sample is compared with the
//! mean baseline score of its user input.
//!
//! A completion whose score is undefined (e.g. Flesch on empty text) is a
//! *score hole*: the term is skipped and the divisor shrinks accordingly. A
//! cell with more than half of its terms missing, or whose masked variant
//! could not be sampled, is reported as missing (`None`), never as zero.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::provider::{Completion, CompletionProvider, CompletionRequest, ProviderError};
use crate::scoring::Scorer;
use crate::stopwords::Stopwords;
use crate::text::{mask, mask_span, tokenize, TextError, WordToken, DEFAULT_GLYPH};

/// A system prompt with its user inputs and an optional suffix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub prompt_id: String,
    pub system_prompt: String,
    pub user_inputs: Vec<String>,
    /// Appended to `system_prompt` after a single space.
    #[serde(default)]
    pub suffix: Option<String>,
}

impl PromptSpec {
    pub fn new(prompt_id: &str, system_prompt: &str, user_inputs: &[&str]) -> Self {
        Self {
            prompt_id: prompt_id.to_string(),
            system_prompt: system_prompt.to_string(),
            user_inputs: user_inputs.iter().map(|u| u.to_string()).collect(),
            suffix: None,
        }
    }

    pub fn with_suffix(mut self, suffix: &str) -> Self {
        self.suffix = Some(suffix.to_string());
        self
    }

    pub fn validate(&self) -> Result<(), ImportanceError> {
        if self.system_prompt.trim().is_empty() {
            return Err(ImportanceError::InvalidSpec(format!(
                "prompt {}: system prompt is empty",
                self.prompt_id
            )));
        }
        if self.user_inputs.is_empty() {
            return Err(ImportanceError::InvalidSpec(format!(
                "prompt {}: at least one user input is required",
                self.prompt_id
            )));
        }
        Ok(())
    }

    fn suffix_text(&self) -> Option<&str> {
        self.suffix.as_deref().filter(|s| !s.is_empty())
    }

    /// The system prompt actually sent to the model.
    pub fn full_prompt(&self) -> String {
        match self.suffix_text() {
            Some(suffix) => format!("{} {}", self.system_prompt, suffix),
            None => self.system_prompt.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Paired,
    MeanBaseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// One word per masked variant.
    #[default]
    Word,
    /// Consecutive runs of this many words, each collapsed to one glyph.
    Window(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    /// Samples per request.
    pub n: u32,
    pub temperature: f64,
    pub model_id: String,
    pub aggregation: Aggregation,
    pub granularity: Granularity,
    pub exclude_stopwords: bool,
    pub stopwords: Stopwords,
    pub glyph: String,
    /// Maximum provider samples a run may request without override.
    pub budget: Option<usize>,
    pub allow_over_budget: bool,
    /// Restrict masking to these token indices.
    pub only_tokens: Option<Vec<usize>>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            n: 3,
            temperature: 1.0,
            model_id: String::from("stub"),
            aggregation: Aggregation::Paired,
            granularity: Granularity::Word,
            exclude_stopwords: false,
            stopwords: Stopwords::english(),
            glyph: String::from(DEFAULT_GLYPH),
            budget: None,
            allow_over_budget: false,
            only_tokens: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ImportanceError {
    #[error("invalid prompt spec: {0}")]
    InvalidSpec(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("planned {planned} provider calls exceeds the budget of {budget}")]
    BudgetExceeded { planned: usize, budget: usize },
    #[error("baseline sampling failed for user input {input_index} ({user_input:?}): {source}")]
    Baseline {
        input_index: usize,
        user_input: String,
        #[source]
        source: ProviderError,
    },
}

/// One row of an importance matrix: the word (or run of words) masked together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskUnit {
    pub label: String,
    pub token_indices: Vec<usize>,
    /// True when every masked token is a stopword.
    pub is_stopword: bool,
    pub masked_prompt: String,
}

/// Score of every sample, indexed `[input j][sample i][score s]`.
pub type SampleGrid = Vec<Vec<Vec<Option<f64>>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub system_prompt: String,
    pub score_ids: Vec<String>,
    pub scores: SampleGrid,
}

impl Baseline {
    /// Number of (input, sample) records.
    pub fn records(&self) -> usize {
        self.scores.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Provenance {
    pub model_id: String,
    pub provider_kind: String,
    pub temperature: f64,
    pub n: u32,
    pub m: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub config_digest: Option<String>,
    #[serde(default)]
    pub tool_version: Option<String>,
    /// Seconds since the Unix epoch.
    #[serde(default)]
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceMatrix {
    pub prompt_id: String,
    /// Full system prompt analyzed, suffix included.
    pub system_prompt: String,
    /// Every word of the prompt.
    pub tokens: Vec<WordToken>,
    /// Rows of the matrix.
    pub units: Vec<MaskUnit>,
    pub score_ids: Vec<String>,
    /// `values[row][score]`; `None` marks a missing cell.
    pub values: Vec<Vec<Option<f64>>>,
    pub baseline: Baseline,
    /// Per-row sample scores, `None` when the variant failed.
    pub variant_scores: Vec<Option<SampleGrid>>,
    pub n: u32,
    pub m: usize,
    pub aggregation: Aggregation,
    pub granularity: Granularity,
    /// At least one cell is missing.
    pub partial: bool,
    pub provenance: Provenance,
}

impl ImportanceMatrix {
    pub fn score_index(&self, score_id: &str) -> Option<usize> {
        self.score_ids.iter().position(|s| s == score_id)
    }

    /// Importance of row `row` under `score_id`.
    pub fn get(&self, row: usize, score_id: &str) -> Option<f64> {
        let s = self.score_index(score_id)?;
        self.values.get(row)?.get(s).copied().flatten()
    }

    /// Rows ordered by descending importance for one score; missing cells last.
    pub fn ranking(&self, score_id: &str) -> Vec<usize> {
        let mut rows: Vec<usize> = (0..self.units.len()).collect();
        rows.sort_by(|&a, &b| {
            let va = self.get(a, score_id).unwrap_or(f64::NEG_INFINITY);
            let vb = self.get(b, score_id).unwrap_or(f64::NEG_INFINITY);
            vb.partial_cmp(&va).unwrap_or(core::cmp::Ordering::Equal)
        });
        rows
    }

    /// Checks dimensions and that every present value is finite and ≥ 0.
    pub fn check(&self) -> Result<(), String> {
        if self.values.len() != self.units.len() {
            return Err(format!("{} rows for {} units", self.values.len(), self.units.len()));
        }
        for (r, row) in self.values.iter().enumerate() {
            if row.len() != self.score_ids.len() {
                return Err(format!("row {r} has {} cells for {} scores", row.len(), self.score_ids.len()));
            }
            for v in row.iter().flatten() {
                if !v.is_finite() || *v < 0.0 {
                    return Err(format!("row {r} holds invalid value {v}"));
                }
            }
        }
        Ok(())
    }
}

/// Provider samples a run will request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallPlan {
    pub inputs: usize,
    pub n: u32,
    pub variants: usize,
    pub calls: usize,
}

impl CallPlan {
    pub fn new(inputs: usize, n: u32, variants: usize) -> Self {
        Self {
            inputs,
            n,
            variants,
            calls: inputs * n as usize * (1 + variants),
        }
    }
}

pub(crate) fn check_options(options: &AnalysisOptions) -> Result<(), ImportanceError> {
    if options.n == 0 {
        return Err(ImportanceError::InvalidOptions("n must be at least 1".into()));
    }
    if !options.temperature.is_finite() || options.temperature < 0.0 {
        return Err(ImportanceError::InvalidOptions("temperature must be finite and ≥ 0".into()));
    }
    if let Granularity::Window(0) = options.granularity {
        return Err(ImportanceError::InvalidOptions("window size must be at least 1".into()));
    }
    Ok(())
}

pub(crate) fn check_scorers<S: Scorer>(scorers: &[S]) -> Result<Vec<String>, ImportanceError> {
    if scorers.is_empty() {
        return Err(ImportanceError::InvalidOptions("no scorers configured".into()));
    }
    let mut ids: Vec<String> = Vec::with_capacity(scorers.len());
    for s in scorers {
        if ids.iter().any(|id| id == s.id()) {
            return Err(ImportanceError::InvalidOptions(format!("duplicate score id {}", s.id())));
        }
        ids.push(s.id().to_string());
    }
    Ok(ids)
}

pub(crate) fn check_budget(planned: usize, options: &AnalysisOptions) -> Result<(), ImportanceError> {
    match options.budget {
        Some(budget) if planned > budget && !options.allow_over_budget => {
            Err(ImportanceError::BudgetExceeded { planned, budget })
        }
        _ => Ok(()),
    }
}

/// Builds the masked rows for `prompt`.
pub(crate) fn build_units(
    prompt: &str,
    tokens: &[WordToken],
    options: &AnalysisOptions,
) -> Result<Vec<MaskUnit>, ImportanceError> {
    let allowed = |i: usize| -> bool {
        options.only_tokens.as_ref().is_none_or(|only| only.contains(&i))
    };
    let mut units = Vec::new();
    match options.granularity {
        Granularity::Word => {
            for t in tokens {
                if !allowed(t.index) || (options.exclude_stopwords && t.is_stopword) {
                    continue;
                }
                let v = mask(prompt, tokens, &[t.index], &options.glyph)?;
                units.push(MaskUnit {
                    label: t.text.clone(),
                    token_indices: v.masked_indices,
                    is_stopword: t.is_stopword,
                    masked_prompt: v.rendered,
                });
            }
        }
        Granularity::Window(width) => {
            let candidates: Vec<usize> = (0..tokens.len()).filter(|&i| allowed(i)).collect();
            // windows never straddle a gap in the allowed set
            let mut runs: Vec<Vec<usize>> = Vec::new();
            for i in candidates {
                match runs.last_mut() {
                    Some(run) if run.last() == Some(&(i - 1)) && run.len() < width => run.push(i),
                    _ => runs.push(alloc::vec![i]),
                }
            }
            for run in runs {
                let all_stop = run.iter().all(|&i| tokens[i].is_stopword);
                if options.exclude_stopwords && all_stop {
                    continue;
                }
                let v = mask_span(prompt, tokens, run[0]..run[run.len() - 1] + 1, &options.glyph)?;
                let label = run
                    .iter()
                    .map(|&i| tokens[i].text.as_str())
                    .collect::<Vec<_>>()
                    .join(" ");
                units.push(MaskUnit {
                    label,
                    token_indices: v.masked_indices,
                    is_stopword: all_stop,
                    masked_prompt: v.rendered,
                });
            }
        }
    }
    Ok(units)
}

/// Number of provider samples `word_importance` will request for `spec`.
pub fn plan_calls(spec: &PromptSpec, options: &AnalysisOptions) -> Result<CallPlan, ImportanceError> {
    spec.validate()?;
    check_options(options)?;
    let prompt = spec.full_prompt();
    let tokens = tokenize(&prompt, &options.stopwords);
    let units = build_units(&prompt, &tokens, options)?;
    Ok(CallPlan::new(spec.user_inputs.len(), options.n, units.len()))
}

pub(crate) struct Evaluation {
    pub baseline: SampleGrid,
    pub alternates: Vec<Result<SampleGrid, ProviderError>>,
}

fn sorted_samples(mut samples: Vec<Completion>, n: u32) -> Result<Vec<Completion>, ProviderError> {
    if samples.len() != n as usize {
        return Err(ProviderError::Truncated {
            expected: n,
            received: samples.len() as u32,
        });
    }
    samples.sort_by_key(|c| c.sample_index);
    if samples.iter().enumerate().any(|(i, c)| c.sample_index as usize != i) {
        return Err(ProviderError::Malformed("duplicate or missing sample index".into()));
    }
    Ok(samples)
}

fn score_samples<S: Scorer>(samples: &[Completion], scorers: &[S]) -> Vec<Vec<Option<f64>>> {
    samples
        .iter()
        .map(|c| {
            scorers
                .iter()
                .map(|s| s.score(&c.text).ok().filter(|v| v.is_finite()))
                .collect()
        })
        .collect()
}

/// Samples and scores the baseline prompt and every alternate prompt against
/// every user input, in one provider batch.
pub(crate) fn evaluate<P, S>(
    baseline_prompt: &str,
    alternates: &[&str],
    user_inputs: &[String],
    provider: &P,
    scorers: &[S],
    options: &AnalysisOptions,
) -> Result<Evaluation, ImportanceError>
where
    P: CompletionProvider + ?Sized,
    S: Scorer,
{
    let m = user_inputs.len();
    let prompts = core::iter::once(baseline_prompt).chain(alternates.iter().copied());
    let requests: Vec<CompletionRequest> = prompts
        .flat_map(|p| {
            user_inputs.iter().map(move |u| CompletionRequest {
                system_prompt: p.to_string(),
                user_input: u.clone(),
                n: options.n,
                temperature: options.temperature,
                model_id: options.model_id.clone(),
            })
        })
        .collect();
    let mut results = provider.complete_many(&requests).into_iter();

    let mut baseline = Vec::with_capacity(m);
    for (j, user_input) in user_inputs.iter().enumerate() {
        let outcome = results
            .next()
            .unwrap_or(Err(ProviderError::Malformed("provider returned too few results".into())))
            .and_then(|s| sorted_samples(s, options.n));
        match outcome {
            Ok(samples) => baseline.push(score_samples(&samples, scorers)),
            Err(source) => {
                return Err(ImportanceError::Baseline {
                    input_index: j,
                    user_input: user_input.clone(),
                    source,
                })
            }
        }
    }

    let mut alts = Vec::with_capacity(alternates.len());
    for _ in alternates {
        let mut grid = Vec::with_capacity(m);
        let mut failure = None;
        for _ in 0..m {
            let outcome = results
                .next()
                .unwrap_or(Err(ProviderError::Malformed("provider returned too few results".into())))
                .and_then(|s| sorted_samples(s, options.n));
            match outcome {
                Ok(samples) => grid.push(score_samples(&samples, scorers)),
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
        alts.push(match failure {
            Some(e) => Err(e),
            None => Ok(grid),
        });
    }
    Ok(Evaluation {
        baseline,
        alternates: alts,
    })
}

/// Mean absolute deviation of `alt` from `baseline` for score `s`, following
/// the aggregation mode and hole rules.
pub(crate) fn deviation(baseline: &SampleGrid, alt: &SampleGrid, s: usize, mode: Aggregation) -> Option<f64> {
    let m = baseline.len();
    let n = baseline.first().map_or(0, Vec::len);
    let total = n * m;
    if total == 0 {
        return None;
    }
    let means: Vec<Option<f64>> = match mode {
        Aggregation::Paired => Vec::new(),
        Aggregation::MeanBaseline => baseline
            .iter()
            .map(|samples| {
                let present: Vec<f64> = samples.iter().filter_map(|sc| sc[s]).collect();
                if present.is_empty() {
                    None
                } else {
                    Some(present.iter().sum::<f64>() / present.len() as f64)
                }
            })
            .collect(),
    };
    let mut sum = 0.0;
    let mut holes = 0usize;
    for i in 0..n {
        for j in 0..m {
            let reference = match mode {
                Aggregation::Paired => baseline[j][i][s],
                Aggregation::MeanBaseline => means[j],
            };
            match (reference, alt[j][i][s]) {
                (Some(b), Some(a)) => sum += (b - a).abs(),
                _ => holes += 1,
            }
        }
    }
    if holes * 2 > total {
        None
    } else {
        Some(sum / (total - holes) as f64)
    }
}

fn baseline_for<P, S>(
    spec: &PromptSpec,
    provider: &P,
    scorers: &[S],
    options: &AnalysisOptions,
) -> Result<Baseline, ImportanceError>
where
    P: CompletionProvider + ?Sized,
    S: Scorer,
{
    spec.validate()?;
    check_options(options)?;
    let score_ids = check_scorers(scorers)?;
    let prompt = spec.full_prompt();
    let eval = evaluate(&prompt, &[], &spec.user_inputs, provider, scorers, options)?;
    Ok(Baseline {
        system_prompt: prompt,
        score_ids,
        scores: eval.baseline,
    })
}

/// Samples the unmasked prompt `n` times per user input and scores every
/// sample with every scorer.
pub fn compute_baseline<P, S>(
    spec: &PromptSpec,
    provider: &P,
    scorers: &[S],
    options: &AnalysisOptions,
) -> Result<Baseline, ImportanceError>
where
    P: CompletionProvider + ?Sized,
    S: Scorer,
{
    baseline_for(spec, provider, scorers, options)
}

/// Masks each selected word of the (suffixed) system prompt and measures how
/// far every score moves from the baseline.
pub fn word_importance<P, S>(
    spec: &PromptSpec,
    provider: &P,
    scorers: &[S],
    options: &AnalysisOptions,
) -> Result<ImportanceMatrix, ImportanceError>
where
    P: CompletionProvider + ?Sized,
    S: Scorer,
{
    spec.validate()?;
    check_options(options)?;
    let score_ids = check_scorers(scorers)?;
    let prompt = spec.full_prompt();
    let tokens = tokenize(&prompt, &options.stopwords);
    let units = build_units(&prompt, &tokens, options)?;
    let plan = CallPlan::new(spec.user_inputs.len(), options.n, units.len());
    check_budget(plan.calls, options)?;

    let alternates: Vec<&str> = units.iter().map(|u| u.masked_prompt.as_str()).collect();
    let eval = evaluate(&prompt, &alternates, &spec.user_inputs, provider, scorers, options)?;

    let values: Vec<Vec<Option<f64>>> = eval
        .alternates
        .iter()
        .map(|alt| {
            (0..score_ids.len())
                .map(|s| match alt {
                    Ok(grid) => deviation(&eval.baseline, grid, s, options.aggregation),
                    Err(_) => None,
                })
                .collect()
        })
        .collect();
    let partial = values.iter().flatten().any(Option::is_none);
    let variant_scores = eval.alternates.into_iter().map(Result::ok).collect();

    Ok(ImportanceMatrix {
        prompt_id: spec.prompt_id.clone(),
        system_prompt: prompt.clone(),
        tokens,
        units,
        score_ids: score_ids.clone(),
        values,
        baseline: Baseline {
            system_prompt: prompt,
            score_ids,
            scores: eval.baseline,
        },
        variant_scores,
        n: options.n,
        m: spec.user_inputs.len(),
        aggregation: options.aggregation,
        granularity: options.granularity,
        partial,
        provenance: Provenance {
            model_id: options.model_id.clone(),
            provider_kind: provider.kind().to_string(),
            temperature: options.temperature,
            n: options.n,
            m: spec.user_inputs.len(),
            ..Provenance::default()
        },
    })
}

/// Indices of the tokens of `spec.full_prompt()` that come from the suffix.
pub fn suffix_words(spec: &PromptSpec) -> Result<Vec<usize>, ImportanceError> {
    spec.suffix_text()
        .ok_or_else(|| ImportanceError::InvalidSpec(format!("prompt {} has no suffix", spec.prompt_id)))?;
    let boundary = spec.system_prompt.chars().count() + 1;
    let tokens = tokenize(&spec.full_prompt(), &Stopwords::none());
    Ok(tokens
        .iter()
        .filter(|t| t.char_span.start >= boundary)
        .map(|t| t.index)
        .collect())
}

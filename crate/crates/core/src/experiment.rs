//! Suffix experiment: does the largest word importance inside an appended
//! suffix track the impact of the suffix as a whole?
//!
//! For every (prompt, suffix) pair the engine samples the prompt with the
//! suffix (baseline), the prompt with each suffix word masked, and the prompt
//! without the suffix. The suffix impact is the importance formula applied
//! with the whole suffix as the masked unit; the record's x value is the
//! maximum word importance over the suffix words.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::importance::{
    build_units, check_budget, check_options, check_scorers, deviation, evaluate, suffix_words, AnalysisOptions, ImportanceError,
    PromptSpec,
};
use crate::provider::{CompletionProvider, ProviderError};
use crate::scoring::Scorer;
use crate::stats::{linear_fit, pearson};
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffixSpec {
    pub suffix_id: String,
    pub text: String,
    /// The score this suffix is designed to move.
    pub score_id: String,
}

impl SuffixSpec {
    pub fn new(suffix_id: &str, text: &str, score_id: &str) -> Self {
        Self {
            suffix_id: suffix_id.to_string(),
            text: text.to_string(),
            score_id: score_id.to_string(),
        }
    }
}

/// One scatter point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuffixExperimentRecord {
    pub prompt_id: String,
    pub suffix_id: String,
    pub score_id: String,
    pub suffix_impact: f64,
    pub max_word_importance: f64,
    pub n: u32,
    pub m: usize,
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub suffix_id: String,
    pub score_id: String,
    /// The suffix was designed for this score.
    pub designed: bool,
    pub n_points: usize,
    pub r: Option<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Why `r` could not be computed.
    pub note: Option<String>,
}

impl CorrelationSummary {
    pub fn computable(&self) -> bool {
        self.r.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub prompt_id: String,
    pub suffix_id: Option<String>,
    pub score_id: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    /// Sorted by (suffix_id, score_id, prompt_id).
    pub records: Vec<SuffixExperimentRecord>,
    pub summaries: Vec<CorrelationSummary>,
    pub exclusions: Vec<Exclusion>,
    pub planned_calls: usize,
    /// The run was interrupted before every request was issued.
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no suffixes configured")]
    NoSuffixes,
    #[error("suffix {suffix_id} is paired with score {score_id}, which is not configured")]
    UnknownScore { suffix_id: String, score_id: String },
    #[error(transparent)]
    Importance(#[from] ImportanceError),
}

/// Whole-suffix impact per scorer, in scorer order.
pub fn suffix_impact<P, S>(
    spec: &PromptSpec,
    provider: &P,
    scorers: &[S],
    options: &AnalysisOptions,
) -> Result<Vec<Option<f64>>, ImportanceError>
where
    P: CompletionProvider + ?Sized,
    S: Scorer,
{
    spec.validate()?;
    check_options(options)?;
    check_scorers(scorers)?;
    suffix_words(spec)?;
    let full = spec.full_prompt();
    let eval = evaluate(&full, &[spec.system_prompt.as_str()], &spec.user_inputs, provider, scorers, options)?;
    let Some(Ok(without)) = eval.alternates.first() else {
        return Ok(alloc::vec![None; scorers.len()]);
    };
    Ok((0..scorers.len())
        .map(|s| deviation(&eval.baseline, without, s, options.aggregation))
        .collect())
}

fn suffixed(prompt: &PromptSpec, suffix: &SuffixSpec) -> PromptSpec {
    PromptSpec {
        suffix: Some(suffix.text.clone()),
        ..prompt.clone()
    }
}

fn suffix_options(spec: &PromptSpec, options: &AnalysisOptions) -> Result<AnalysisOptions, ImportanceError> {
    Ok(AnalysisOptions {
        only_tokens: Some(suffix_words(spec)?),
        budget: None,
        ..options.clone()
    })
}

/// Provider samples a full experiment will request, before cache hits.
pub fn plan_experiment(
    corpus: &[PromptSpec],
    suffixes: &[SuffixSpec],
    options: &AnalysisOptions,
) -> usize {
    let mut calls = 0;
    for prompt in corpus {
        for suffix in suffixes {
            let spec = suffixed(prompt, suffix);
            if spec.validate().is_err() {
                continue;
            }
            let Ok(opts) = suffix_options(&spec, options) else { continue };
            let full = spec.full_prompt();
            let tokens = tokenize(&full, &options.stopwords);
            let units = build_units(&full, &tokens, &opts).map_or(0, |u| u.len());
            calls += spec.user_inputs.len() * options.n as usize * (2 + units);
        }
    }
    calls
}

/// Runs the suffix experiment over a corpus. Records come out for every
/// prompt × suffix × score combination that could be computed; everything
/// else is listed in `exclusions`.
pub fn run_suffix_experiment<P, S>(
    corpus: &[PromptSpec],
    suffixes: &[SuffixSpec],
    provider: &P,
    scorers: &[S],
    options: &AnalysisOptions,
) -> Result<ExperimentOutcome, ExperimentError>
where
    P: CompletionProvider + ?Sized,
    S: Scorer,
{
    if corpus.is_empty() {
        return Err(ExperimentError::EmptyCorpus);
    }
    if suffixes.is_empty() {
        return Err(ExperimentError::NoSuffixes);
    }
    check_options(options)?;
    check_scorers(scorers)?;
    let score_ids: Vec<&str> = scorers.iter().map(|s| s.id()).collect();
    for suffix in suffixes {
        if !score_ids.contains(&suffix.score_id.as_str()) {
            return Err(ExperimentError::UnknownScore {
                suffix_id: suffix.suffix_id.clone(),
                score_id: suffix.score_id.clone(),
            });
        }
    }
    let planned_calls = plan_experiment(corpus, suffixes, options);
    check_budget(planned_calls, options)?;

    let mut records = Vec::new();
    let mut exclusions = Vec::new();
    let mut partial = false;
    let exclude = |prompt: &PromptSpec, suffix: Option<&SuffixSpec>, score: Option<&str>, reason: String| Exclusion {
        prompt_id: prompt.prompt_id.clone(),
        suffix_id: suffix.map(|s| s.suffix_id.clone()),
        score_id: score.map(str::to_string),
        reason,
    };

    for prompt in corpus {
        if let Err(e) = prompt.validate() {
            exclusions.push(exclude(prompt, None, None, e.to_string()));
            continue;
        }
        for suffix in suffixes {
            let spec = suffixed(prompt, suffix);
            let opts = match suffix_options(&spec, options) {
                Ok(o) => o,
                Err(e) => {
                    exclusions.push(exclude(prompt, Some(suffix), None, e.to_string()));
                    continue;
                }
            };
            let full = spec.full_prompt();
            let tokens = tokenize(&full, &options.stopwords);
            let units = build_units(&full, &tokens, &opts).map_err(ExperimentError::from)?;
            if units.is_empty() {
                exclusions.push(exclude(prompt, Some(suffix), None, "suffix has no maskable words".into()));
                continue;
            }
            let mut alternates: Vec<&str> = units.iter().map(|u| u.masked_prompt.as_str()).collect();
            alternates.push(&spec.system_prompt);
            let eval = match evaluate(&full, &alternates, &spec.user_inputs, provider, scorers, options) {
                Ok(eval) => eval,
                Err(e) => {
                    if let ImportanceError::Baseline { source: ProviderError::Cancelled, .. } = e {
                        partial = true;
                    }
                    exclusions.push(exclude(prompt, Some(suffix), None, e.to_string()));
                    continue;
                }
            };
            let (word_alts, impact_alt) = eval.alternates.split_at(units.len());
            if eval
                .alternates
                .iter()
                .any(|a| matches!(a, Err(ProviderError::Cancelled)))
            {
                partial = true;
            }
            for (s, score_id) in score_ids.iter().enumerate() {
                let max_word = word_alts
                    .iter()
                    .filter_map(|alt| alt.as_ref().ok())
                    .filter_map(|grid| deviation(&eval.baseline, grid, s, options.aggregation))
                    .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
                let impact = impact_alt[0]
                    .as_ref()
                    .ok()
                    .and_then(|grid| deviation(&eval.baseline, grid, s, options.aggregation));
                match (max_word, impact) {
                    (Some(max_word_importance), Some(suffix_impact)) => records.push(SuffixExperimentRecord {
                        prompt_id: prompt.prompt_id.clone(),
                        suffix_id: suffix.suffix_id.clone(),
                        score_id: score_id.to_string(),
                        suffix_impact,
                        max_word_importance,
                        n: options.n,
                        m: prompt.user_inputs.len(),
                        model_id: options.model_id.clone(),
                    }),
                    (None, _) => exclusions.push(exclude(
                        prompt,
                        Some(suffix),
                        Some(score_id),
                        "every suffix word cell is missing".into(),
                    )),
                    (_, None) => exclusions.push(exclude(
                        prompt,
                        Some(suffix),
                        Some(score_id),
                        "suffix impact is missing".into(),
                    )),
                }
            }
        }
    }

    records.sort_by(|a, b| {
        (&a.suffix_id, &a.score_id, &a.prompt_id).cmp(&(&b.suffix_id, &b.score_id, &b.prompt_id))
    });
    let summaries = summarize(&records, suffixes, &score_ids);
    Ok(ExperimentOutcome {
        records,
        summaries,
        exclusions,
        planned_calls,
        partial,
    })
}

/// One summary per (suffix, score), in suffix order then score order.
pub fn summarize(
    records: &[SuffixExperimentRecord],
    suffixes: &[SuffixSpec],
    score_ids: &[&str],
) -> Vec<CorrelationSummary> {
    let mut out = Vec::with_capacity(suffixes.len() * score_ids.len());
    for suffix in suffixes {
        for score_id in score_ids {
            let (xs, ys): (Vec<f64>, Vec<f64>) = records
                .iter()
                .filter(|r| r.suffix_id == suffix.suffix_id && r.score_id == *score_id)
                .map(|r| (r.max_word_importance, r.suffix_impact))
                .unzip();
            let mut summary = CorrelationSummary {
                suffix_id: suffix.suffix_id.clone(),
                score_id: score_id.to_string(),
                designed: suffix.score_id == *score_id,
                n_points: xs.len(),
                r: None,
                slope: None,
                intercept: None,
                note: None,
            };
            if xs.len() < 2 {
                summary.note = Some(format!("not computable: {} point(s)", xs.len()));
            } else {
                match pearson(&xs, &ys) {
                    Ok(r) => summary.r = Some(r),
                    Err(e) => summary.note = Some(format!("not computable: {e}")),
                }
                if let Ok((slope, intercept)) = linear_fit(&xs, &ys) {
                    summary.slope = Some(slope);
                    summary.intercept = Some(intercept);
                }
            }
            out.push(summary);
        }
    }
    out
}

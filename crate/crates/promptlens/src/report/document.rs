//! Versioned JSON report documents.
//!
//! ```json
//! {"format_version": 1, "kind": "importance_matrix", "partial": false,
//!  "provenance": {...}, "payload": {...}}
//! ```
//!
//! `kind` is one of `importance_matrix`, `experiment_records` and
//! `experiment_summary`. Floats are written in shortest round-trip form, so
//! parsing an exported document gives back the exact values.

use std::path::Path;

use promptlens_core::{
    CorrelationSummary, Exclusion, ImportanceMatrix, Provenance, SuffixExperimentRecord,
};
use serde::{Deserialize, Serialize};

use crate::cache::write_atomic;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{}: {source}", path.display())]
    Io { path: std::path::PathBuf, source: std::io::Error },
    #[error("parse error near byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("document format version {found} is newer than the supported version {supported}")]
    UnsupportedVersion { found: u64, supported: u32 },
    #[error("invalid document: {0}")]
    Invalid(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("plot: {0}")]
    Plot(String),
}

/// Payload of the summary document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub summaries: Vec<CorrelationSummary>,
    pub exclusions: Vec<Exclusion>,
    pub planned_calls: usize,
    /// Samples actually requested from the provider.
    pub provider_calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    ImportanceMatrix(Box<ImportanceMatrix>),
    ExperimentRecords(Vec<SuffixExperimentRecord>),
    ExperimentSummary(ExperimentSummary),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::ImportanceMatrix(_) => "importance_matrix",
            Payload::ExperimentRecords(_) => "experiment_records",
            Payload::ExperimentSummary(_) => "experiment_summary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportDocument {
    pub format_version: u32,
    pub provenance: Provenance,
    /// The run stopped early or left cells missing.
    pub partial: bool,
    pub payload: Payload,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Wire {
    format_version: u32,
    kind: String,
    partial: bool,
    provenance: Provenance,
    payload: serde_json::Value,
}

fn finite(v: f64, what: &str) -> Result<(), ReportError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ReportError::Invalid(format!("{what} is not finite")))
    }
}

impl ReportDocument {
    pub fn new(provenance: Provenance, partial: bool, payload: Payload) -> Result<Self, ReportError> {
        let doc = Self {
            format_version: FORMAT_VERSION,
            provenance,
            partial,
            payload,
        };
        doc.validate()?;
        Ok(doc)
    }

    /// Rejects non-finite numbers and inconsistent shapes.
    pub fn validate(&self) -> Result<(), ReportError> {
        finite(self.provenance.temperature, "provenance.temperature")?;
        match &self.payload {
            Payload::ImportanceMatrix(m) => {
                m.check().map_err(ReportError::Invalid)?;
                let grids = std::iter::once(&m.baseline.scores).chain(m.variant_scores.iter().flatten());
                for grid in grids {
                    for v in grid.iter().flatten().flatten().flatten() {
                        finite(*v, "sample score")?;
                    }
                }
            }
            Payload::ExperimentRecords(records) => {
                for r in records {
                    finite(r.suffix_impact, "suffix_impact")?;
                    finite(r.max_word_importance, "max_word_importance")?;
                    if r.suffix_impact < 0.0 || r.max_word_importance < 0.0 {
                        return Err(ReportError::Invalid(format!("negative value in record {}", r.prompt_id)));
                    }
                }
            }
            Payload::ExperimentSummary(s) => {
                for c in &s.summaries {
                    for v in [c.r, c.slope, c.intercept].into_iter().flatten() {
                        finite(v, "summary value")?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        self.validate()?;
        let payload = match &self.payload {
            Payload::ImportanceMatrix(m) => serde_json::to_value(m),
            Payload::ExperimentRecords(r) => serde_json::to_value(r),
            Payload::ExperimentSummary(s) => serde_json::to_value(s),
        }
        .map_err(|e| ReportError::Invalid(e.to_string()))?;
        let wire = Wire {
            format_version: self.format_version,
            kind: self.payload.kind().to_string(),
            partial: self.partial,
            provenance: self.provenance.clone(),
            payload,
        };
        let mut s = serde_json::to_string_pretty(&wire).map_err(|e| ReportError::Invalid(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse_error(text, &e))?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| ReportError::Invalid("missing format_version".into()))?;
        if version > u64::from(FORMAT_VERSION) {
            return Err(ReportError::UnsupportedVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let wire: Wire = serde_json::from_value(value).map_err(|e| ReportError::Invalid(e.to_string()))?;
        let bad = |e: serde_json::Error| ReportError::Invalid(format!("{} payload: {e}", wire.kind));
        let payload = match wire.kind.as_str() {
            "importance_matrix" => Payload::ImportanceMatrix(Box::new(serde_json::from_value(wire.payload).map_err(bad)?)),
            "experiment_records" => Payload::ExperimentRecords(serde_json::from_value(wire.payload).map_err(bad)?),
            "experiment_summary" => Payload::ExperimentSummary(serde_json::from_value(wire.payload).map_err(bad)?),
            other => return Err(ReportError::Invalid(format!("unknown kind `{other}`"))),
        };
        let doc = Self {
            format_version: wire.format_version,
            provenance: wire.provenance,
            partial: wire.partial,
            payload,
        };
        doc.validate()?;
        Ok(doc)
    }

    /// Writes the document atomically.
    pub fn export(&self, path: &Path) -> Result<(), ReportError> {
        let json = self.to_json()?;
        write_atomic(path, json.as_bytes()).map_err(|source| ReportError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn import(path: &Path) -> Result<Self, ReportError> {
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// Converts serde_json's line and column into a byte offset.
fn parse_error(text: &str, e: &serde_json::Error) -> ReportError {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(e.line().saturating_sub(1))
        .map(str::len)
        .sum();
    let offset = (line_start + e.column().saturating_sub(1)).min(text.len());
    ReportError::Parse {
        offset,
        message: e.to_string(),
    }
}

/// Experiment records as CSV with a header row matching the field names.
pub fn records_csv(records: &[SuffixExperimentRecord]) -> Result<String, ReportError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(["prompt_id", "suffix_id", "score_id", "suffix_impact", "max_word_importance", "n", "m", "model_id"])?;
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| ReportError::Invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ReportError::Invalid(e.to_string()))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    write_atomic(path, text.as_bytes()).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(prompt: &str, impact: f64, max: f64) -> SuffixExperimentRecord {
        SuffixExperimentRecord {
            prompt_id: prompt.into(),
            suffix_id: "detail".into(),
            score_id: "word_count".into(),
            suffix_impact: impact,
            max_word_importance: max,
            n: 3,
            m: 1,
            model_id: "stub".into(),
        }
    }

    fn provenance() -> Provenance {
        Provenance {
            model_id: "stub".into(),
            provider_kind: "stub".into(),
            temperature: 1.0,
            n: 3,
            m: 1,
            seed: Some(7),
            config_digest: Some("ab".repeat(32)),
            tool_version: Some("0.1.0".into()),
            timestamp: Some(1_760_000_000),
        }
    }

    #[test]
    fn records_round_trip_exactly() {
        let doc = ReportDocument::new(
            provenance(),
            false,
            Payload::ExperimentRecords(vec![record("r2", 0.1 + 0.2, 1.0 / 3.0), record("r3", 1e-300, 123456.789)]),
        )
        .unwrap();
        let back = ReportDocument::from_json(&doc.to_json().unwrap()).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let err = ReportDocument::new(provenance(), false, Payload::ExperimentRecords(vec![record("r", f64::NAN, 1.0)]));
        assert!(matches!(err, Err(ReportError::Invalid(_))));
    }

    #[test]
    fn newer_versions_are_refused() {
        let doc = ReportDocument::new(provenance(), false, Payload::ExperimentRecords(vec![])).unwrap();
        let json = doc.to_json().unwrap().replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(
            ReportDocument::from_json(&json),
            Err(ReportError::UnsupportedVersion { found: 2, supported: 1 })
        ));
    }

    #[test]
    fn truncation_reports_a_byte_offset() {
        let doc = ReportDocument::new(provenance(), false, Payload::ExperimentRecords(vec![record("r", 1.0, 2.0)])).unwrap();
        let json = doc.to_json().unwrap();
        let cut = &json[..json.len() / 2];
        match ReportDocument::from_json(cut) {
            Err(ReportError::Parse { offset, .. }) => assert!(offset <= cut.len() && offset + 40 >= cut.len(), "{offset}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_has_header_and_quotes() {
        let mut r = record("r,2", 1.5, 2.0);
        r.model_id = "gpt \"x\"".into();
        let text = records_csv(&[r]).unwrap();
        assert_eq!(
            text,
            "prompt_id,suffix_id,score_id,suffix_impact,max_word_importance,n,m,model_id\n\"r,2\",detail,word_count,1.5,2.0,3,1,\"gpt \"\"x\"\"\"\n"
        );
    }
}

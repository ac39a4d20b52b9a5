//! Report documents and plots built from real engine output.

use promptlens::report::{heatmap_svg, records_csv, scatter_svg, ColorScale, Payload, ReportDocument, ReportError};
use promptlens_core::stub::{StubConfig, StubEmbedder, StubProvider, StubRule};
use promptlens_core::{
    run_suffix_experiment, word_importance, AnalysisOptions, FleschReadingEase, PromptSpec, Provenance, Scorer,
    SuffixSpec, TopicSimilarity, WordCount,
};

fn stub() -> StubProvider {
    StubProvider::new(
        StubConfig::new(9)
            .rule(StubRule::words("detailed", 90.0).with_spread(0.6))
            .rule(StubRule::long_share("technical", 0.5))
            .jitter(5, true),
    )
}

fn scorers() -> Vec<Box<dyn Scorer>> {
    vec![
        Box::new(WordCount),
        Box::new(FleschReadingEase),
        Box::new(TopicSimilarity::new("AI", StubEmbedder::default()).unwrap()),
    ]
}

fn provenance(m: usize) -> Provenance {
    Provenance {
        model_id: "stub".into(),
        provider_kind: "stub".into(),
        temperature: 1.0,
        n: 3,
        m,
        seed: Some(9),
        ..Provenance::default()
    }
}

#[test]
fn importance_matrix_round_trips_exactly() {
    let spec = PromptSpec::new("p", "Give a detailed and technical answer", &["What is a CPU?", "Define RAM."]);
    let matrix = word_importance(&spec, &stub(), &scorers(), &AnalysisOptions::default()).unwrap();
    let doc = ReportDocument::new(provenance(2), false, Payload::ImportanceMatrix(Box::new(matrix))).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("nested/p.importance.json");
    doc.export(&file).unwrap();
    let back = ReportDocument::import(&file).unwrap();
    assert_eq!(back, doc);
    assert_eq!(back.to_json().unwrap(), std::fs::read_to_string(&file).unwrap());
}

#[test]
fn heatmap_of_a_matrix_is_well_formed() {
    let spec = PromptSpec::new("p", "Give a detailed answer", &["Why?"]);
    let m = word_importance(&spec, &stub(), &scorers(), &AnalysisOptions::default()).unwrap();
    let labels: Vec<String> = m.units.iter().map(|u| u.label.clone()).collect();
    for scale in [ColorScale::Global, ColorScale::PerColumn] {
        let svg = heatmap_svg(&m.score_ids, &labels, &m.values, scale, 3).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let cells = doc.descendants().filter(|n| n.has_tag_name("rect") && n.attribute("class") == Some("cell")).count();
        assert_eq!(cells, labels.len() * m.score_ids.len());
    }
}

#[test]
fn experiment_exports() {
    let corpus: Vec<PromptSpec> = ["a nurse", "a pilot", "a chef", "a poet"]
        .iter()
        .enumerate()
        .map(|(i, p)| PromptSpec::new(&format!("r{}", i + 2), &format!("You answer like {p}."), &[&format!("Question {i}?")]))
        .collect();
    let suffixes = vec![SuffixSpec::new("detailed", "Give a detailed answer", "word_count")];
    let out = run_suffix_experiment(&corpus, &suffixes, &stub(), &scorers(), &AnalysisOptions::default()).unwrap();
    assert_eq!(out.records.len(), 12);

    let csv = records_csv(&out.records).unwrap();
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let parsed: Vec<promptlens_core::SuffixExperimentRecord> = rdr.deserialize().map(Result::unwrap).collect();
    assert_eq!(parsed, out.records);

    let summary = out.summaries.iter().find(|s| s.designed).unwrap();
    let points: Vec<_> = out.records.iter().filter(|r| r.score_id == "word_count").cloned().collect();
    let svg = scatter_svg(&points, summary).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let circles = doc.descendants().filter(|n| n.attribute("class") == Some("point")).count();
    assert_eq!(circles, 4);
    assert!(svg.contains(&format!("r = {:.2}", summary.r.unwrap())));
}

#[test]
fn garbage_is_a_parse_error() {
    assert!(matches!(ReportDocument::from_json("{\"format_version\": 1,"), Err(ReportError::Parse { .. })));
    assert!(matches!(ReportDocument::from_json("[]"), Err(ReportError::Invalid(_))));
}

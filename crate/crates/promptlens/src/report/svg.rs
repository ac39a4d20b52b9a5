//! Standalone SVG figures: suffix scatter plots and heatmaps.
//!
//! Numbers are printed with fixed precision so the same input always yields
//! byte-identical files.
//!
//! Heatmap colors run linearly in RGB from `#f7fbff` (lowest value) to
//! `#08306b` (highest value); luminance falls monotonically along the ramp.
//! Missing cells are grey with a `—` label.

use std::fmt::Write as _;

use promptlens_core::scoring::{FLESCH_ID, TOPIC_PREFIX, WORD_COUNT_ID};
use promptlens_core::{CorrelationSummary, SuffixExperimentRecord};

use super::document::ReportError;

const RAMP_LOW: (f64, f64, f64) = (247.0, 251.0, 255.0);
const RAMP_HIGH: (f64, f64, f64) = (8.0, 48.0, 107.0);
const MISSING_FILL: &str = "#d9d9d9";

/// Axis unit for a score id.
pub fn score_unit(score_id: &str) -> &'static str {
    match score_id {
        WORD_COUNT_ID => "words",
        FLESCH_ID => "Flesch points",
        s if s.starts_with(TOPIC_PREFIX) => "cosine similarity",
        _ => "score units",
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Round numbers for axis ticks covering `[0, max]`.
fn nice_step(max: f64) -> f64 {
    let raw = max / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let step = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    step * mag
}

fn tick_label(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 { 0 } else { (-step.log10().floor()) as usize };
    format!("{v:.decimals$}")
}

/// Scatter of suffix impact (y) against the largest word importance inside
/// the suffix (x), with the least-squares line, the identity line and the
/// correlation coefficient.
pub fn scatter_svg(records: &[SuffixExperimentRecord], summary: &CorrelationSummary) -> Result<String, ReportError> {
    if records.len() < 2 {
        return Err(ReportError::Plot(format!("need at least 2 points, got {}", records.len())));
    }
    for r in records {
        if !r.suffix_impact.is_finite() || !r.max_word_importance.is_finite() {
            return Err(ReportError::Plot(format!("non-finite point for prompt {}", r.prompt_id)));
        }
    }
    let (w, h) = (480.0, 480.0);
    let (left, right, top, bottom) = (70.0, 20.0, 40.0, 60.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let data_max = records
        .iter()
        .flat_map(|r| [r.suffix_impact, r.max_word_importance])
        .fold(0.0f64, f64::max);
    let step = nice_step(if data_max > 0.0 { data_max * 1.05 } else { 1.0 });
    let axis_max = (data_max * 1.05 / step).ceil().max(1.0) * step;
    let sx = |x: f64| left + x / axis_max * pw;
    let sy = |y: f64| top + ph - y / axis_max * ph;
    let unit = score_unit(&summary.score_id);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<title>{} / {}</title>"#,
        escape(&summary.suffix_id),
        escape(&summary.score_id)
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot-area"><rect x="{left:.2}" y="{top:.2}" width="{pw:.2}" height="{ph:.2}"/></clipPath></defs>"#
    );
    // axes and ticks
    let _ = writeln!(
        s,
        r#"<g class="axes" stroke="black"><line x1="{left:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/><line x1="{left:.2}" y1="{top:.2}" x2="{left:.2}" y2="{:.2}"/></g>"#,
        top + ph,
        left + pw,
        top + ph,
        top + ph
    );
    let ticks = (axis_max / step).round() as usize;
    let _ = writeln!(s, r#"<g class="ticks">"#);
    for t in 0..=ticks {
        let v = t as f64 * step;
        let label = tick_label(v, step);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{label}</text><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
            sx(v),
            top + ph + 16.0,
            left - 6.0,
            sy(v) + 4.0
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text class="x-label" x="{:.2}" y="{:.2}" text-anchor="middle">max word importance in suffix ({unit})</text>"#,
        left + pw / 2.0,
        h - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text class="y-label" transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">suffix impact ({unit})</text>"#,
        top + ph / 2.0
    );
    // reference lines
    let _ = writeln!(
        s,
        r#"<line class="identity" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="grey" stroke-dasharray="4 4"/>"#,
        sx(0.0),
        sy(0.0),
        sx(axis_max),
        sy(axis_max)
    );
    if let (Some(slope), Some(intercept)) = (summary.slope, summary.intercept) {
        let _ = writeln!(
            s,
            r#"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson" stroke-width="1.5" clip-path="url(#plot-area)"/>"#,
            sx(0.0),
            sy(intercept),
            sx(axis_max),
            sy(intercept + slope * axis_max)
        );
    }
    let _ = writeln!(s, r#"<g class="points" fill="steelblue" fill-opacity="0.8">"#);
    for r in records {
        let _ = writeln!(
            s,
            r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="4"><title>{}</title></circle>"#,
            sx(r.max_word_importance),
            sy(r.suffix_impact),
            escape(&r.prompt_id)
        );
    }
    let _ = writeln!(s, "</g>");
    let r_text = summary.r.map_or_else(|| "r = n/a".to_string(), |r| format!("r = {r:.2}"));
    let _ = writeln!(
        s,
        r#"<text class="annotation" x="{:.2}" y="{:.2}">{r_text}</text>"#,
        left + 10.0,
        top + 16.0
    );
    let _ = writeln!(
        s,
        r#"<text class="caption" x="{:.2}" y="24" text-anchor="middle" font-size="14">{} / {}</text>"#,
        w / 2.0,
        escape(&summary.suffix_id),
        escape(&summary.score_id)
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// How heatmap cells map to colors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorScale {
    /// One ramp across the whole grid.
    Global,
    /// Each column on its own ramp, for columns in different units.
    PerColumn,
}

fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let mix = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(RAMP_LOW.0, RAMP_HIGH.0),
        mix(RAMP_LOW.1, RAMP_HIGH.1),
        mix(RAMP_LOW.2, RAMP_HIGH.2)
    )
}

/// Heatmap with one row per `labels_y` entry and one column per `labels_x`
/// entry; `values[row][column]`, `None` for a missing cell.
pub fn heatmap_svg(
    labels_x: &[String],
    labels_y: &[String],
    values: &[Vec<Option<f64>>],
    scale: ColorScale,
    precision: usize,
) -> Result<String, ReportError> {
    if labels_x.is_empty() || labels_y.is_empty() {
        return Err(ReportError::Plot("empty grid".into()));
    }
    if values.len() != labels_y.len() || values.iter().any(|row| row.len() != labels_x.len()) {
        return Err(ReportError::Plot(format!(
            "grid shape does not match {} × {} labels",
            labels_y.len(),
            labels_x.len()
        )));
    }
    if values.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(ReportError::Plot("grid holds a non-finite value".into()));
    }
    let range = |cells: &mut dyn Iterator<Item = f64>| {
        cells.fold(None, |acc: Option<(f64, f64)>, v| Some(acc.map_or((v, v), |(lo, hi)| (lo.min(v), hi.max(v)))))
    };
    let global = range(&mut values.iter().flatten().flatten().copied());
    let column_ranges: Vec<Option<(f64, f64)>> = (0..labels_x.len())
        .map(|c| match scale {
            ColorScale::Global => global,
            ColorScale::PerColumn => range(&mut values.iter().filter_map(|row| row[c])),
        })
        .collect();

    let cell_w = 90.0;
    let cell_h = 28.0;
    let label_w = labels_y.iter().map(|l| l.chars().count()).max().unwrap_or(0) as f64 * 7.0 + 16.0;
    let header_h = 110.0;
    let w = label_w + cell_w * labels_x.len() as f64 + 10.0;
    let h = header_h + cell_h * labels_y.len() as f64 + 10.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="white"/>"#);
    for (c, label) in labels_x.iter().enumerate() {
        let x = label_w + cell_w * (c as f64 + 0.5);
        let _ = writeln!(
            s,
            r#"<text class="x-label" transform="translate({x:.2} {:.2}) rotate(-40)">{}</text>"#,
            header_h - 8.0,
            escape(label)
        );
    }
    for (r, label) in labels_y.iter().enumerate() {
        let y = header_h + cell_h * (r as f64 + 0.5) + 4.0;
        let _ = writeln!(
            s,
            r#"<text class="y-label" x="{:.2}" y="{y:.2}" text-anchor="end">{}</text>"#,
            label_w - 8.0,
            escape(label)
        );
        for (c, value) in values[r].iter().enumerate() {
            let x = label_w + cell_w * c as f64;
            let y0 = header_h + cell_h * r as f64;
            let (fill, text, ink) = match value {
                Some(v) => {
                    let t = match column_ranges[c] {
                        Some((lo, hi)) if hi > lo => (v - lo) / (hi - lo),
                        _ => 0.0,
                    };
                    let ink = if t > 0.5 { "white" } else { "black" };
                    (ramp(t), format!("{v:.precision$}"), ink)
                }
                None => (MISSING_FILL.to_string(), "—".to_string(), "black"),
            };
            let _ = writeln!(
                s,
                r#"<rect class="cell" x="{x:.2}" y="{y0:.2}" width="{cell_w:.2}" height="{cell_h:.2}" fill="{fill}" stroke="white"/><text x="{:.2}" y="{:.2}" text-anchor="middle" fill="{ink}">{text}</text>"#,
                x + cell_w / 2.0,
                y0 + cell_h / 2.0 + 4.0
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(x: f64, y: f64, i: usize) -> SuffixExperimentRecord {
        SuffixExperimentRecord {
            prompt_id: format!("p{i}"),
            suffix_id: "s".into(),
            score_id: "word_count".into(),
            suffix_impact: y,
            max_word_importance: x,
            n: 1,
            m: 1,
            model_id: "stub".into(),
        }
    }

    fn summary(r: Option<f64>, slope: Option<f64>, intercept: Option<f64>) -> CorrelationSummary {
        CorrelationSummary {
            suffix_id: "s".into(),
            score_id: "word_count".into(),
            designed: true,
            n_points: 3,
            r,
            slope,
            intercept,
            note: None,
        }
    }

    #[test]
    fn identity_points_give_r_one_and_coinciding_lines() {
        let recs: Vec<_> = (1..=3).map(|i| rec(i as f64 * 10.0, i as f64 * 10.0, i)).collect();
        let svg = scatter_svg(&recs, &summary(Some(1.0), Some(1.0), Some(0.0))).unwrap();
        assert!(svg.contains("r = 1.00"));
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let line = |class: &str| {
            let n = doc.descendants().find(|n| n.attribute("class") == Some(class)).unwrap();
            ["x1", "y1", "x2", "y2"].map(|a| n.attribute(a).unwrap().to_string())
        };
        assert_eq!(line("fit"), line("identity"));
        let points = doc.descendants().filter(|n| n.attribute("class") == Some("point")).count();
        assert_eq!(points, 3);
        assert!(svg.contains("(words)"));
    }

    #[test]
    fn too_few_points() {
        assert!(scatter_svg(&[rec(1.0, 1.0, 0)], &summary(None, None, None)).is_err());
    }

    #[test]
    fn ramp_is_monotone_in_luminance() {
        let lum = |hex: &str| {
            let c = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).unwrap() as f64;
            0.2126 * c(1) + 0.7152 * c(3) + 0.0722 * c(5)
        };
        let mut prev = f64::INFINITY;
        for i in 0..=20 {
            let l = lum(&ramp(i as f64 / 20.0));
            assert!(l < prev);
            prev = l;
        }
    }

    #[test]
    fn heatmap_one_cell_and_errors() {
        let svg = heatmap_svg(&["AI".into()], &["text".into()], &[vec![Some(0.25)]], ColorScale::Global, 2).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.descendants().filter(|n| n.attribute("class") == Some("cell")).count(), 1);
        assert!(svg.contains(">0.25<"));
        assert!(heatmap_svg(&[], &[], &[], ColorScale::Global, 2).is_err());
        assert!(heatmap_svg(&["a".into()], &["b".into()], &[vec![Some(f64::NAN)]], ColorScale::Global, 2).is_err());
        assert!(heatmap_svg(&["a".into()], &["b".into()], &[vec![]], ColorScale::Global, 2).is_err());
    }

    #[test]
    fn missing_cells_are_grey() {
        let svg = heatmap_svg(
            &["x".into()],
            &["a".into(), "b".into()],
            &[vec![Some(1.0)], vec![None]],
            ColorScale::PerColumn,
            1,
        )
        .unwrap();
        assert!(svg.contains(MISSING_FILL) && svg.contains(">—<"));
    }
}

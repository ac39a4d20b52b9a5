//! Fixed-width terminal rendering of an importance matrix.
//!
//! One row per masked unit, one column per score. Stopword rows carry an `s`
//! in the flag column, the largest value of each column is followed by `*`,
//! and missing cells print as `—`. Labels and headers that do not fit are
//! cut and end in `…`. When the score columns do not fit the width, they are
//! split over several stacked panels.

use promptlens_core::ImportanceMatrix;

pub const MISSING: &str = "—";
pub const ELISION: char = '…';
const MAX_HEADER: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableOptions {
    pub precision: usize,
    pub width: usize,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self { precision: 3, width: 100 }
    }
}

fn chars(s: &str) -> usize {
    s.chars().count()
}

/// Shortens `s` to at most `width` characters, marking cuts with `…`.
pub fn elide(s: &str, width: usize) -> String {
    if chars(s) <= width {
        return s.to_string();
    }
    if width == 0 {
        return String::new();
    }
    let mut out: String = s.chars().take(width - 1).collect();
    out.push(ELISION);
    out
}

fn pad_left(s: &str, width: usize) -> String {
    format!("{}{s}", " ".repeat(width.saturating_sub(chars(s))))
}

fn pad_right(s: &str, width: usize) -> String {
    format!("{s}{}", " ".repeat(width.saturating_sub(chars(s))))
}

struct Column {
    header: String,
    cells: Vec<String>,
    width: usize,
}

pub fn render_terminal(matrix: &ImportanceMatrix, options: &TableOptions) -> String {
    let rows = matrix.units.len();
    let columns: Vec<Column> = matrix
        .score_ids
        .iter()
        .enumerate()
        .map(|(s, id)| {
            let values: Vec<Option<f64>> = matrix.values.iter().map(|row| row[s]).collect();
            let max = values.iter().flatten().copied().fold(None, |acc: Option<f64>, v| {
                Some(acc.map_or(v, |a| a.max(v)))
            });
            let cells: Vec<String> = values
                .iter()
                .map(|v| match v {
                    Some(v) => {
                        let mark = if Some(*v) == max { "*" } else { " " };
                        format!("{v:.prec$}{mark}", prec = options.precision)
                    }
                    None => format!("{MISSING} "),
                })
                .collect();
            let value_width = cells.iter().map(|c| chars(c)).max().unwrap_or(0);
            let header = elide(id, MAX_HEADER.max(value_width));
            let width = value_width.max(chars(&header));
            Column { header, cells, width }
        })
        .collect();

    let index_width = rows.to_string().len().max(1);
    let longest_label = matrix.units.iter().map(|u| chars(&u.label)).max().unwrap_or(0).max(4);
    let fixed = index_width + 2 + 2 + 1; // index, gaps, flag
    let widest_column = columns.iter().map(|c| c.width + 2).max().unwrap_or(0);
    let label_width = longest_label.min(options.width.saturating_sub(fixed + widest_column)).max(4);

    // group columns into panels that fit
    let room = options.width.saturating_sub(fixed + label_width);
    let mut panels: Vec<Vec<&Column>> = vec![Vec::new()];
    let mut used = 0;
    for col in &columns {
        let need = col.width + 2;
        let current = panels.last_mut().expect("at least one panel");
        if !current.is_empty() && used + need > room {
            panels.push(vec![col]);
            used = need;
        } else {
            current.push(col);
            used += need;
        }
    }

    let mut out = String::new();
    for (p, panel) in panels.iter().enumerate() {
        if p > 0 {
            out.push('\n');
        }
        let mut header = format!("{}  {}  {}", pad_left("#", index_width), pad_right("word", label_width), " ");
        for col in panel {
            header.push_str("  ");
            header.push_str(&pad_left(&col.header, col.width));
        }
        out.push_str(header.trim_end());
        out.push('\n');
        for r in 0..rows {
            let unit = &matrix.units[r];
            let flag = if unit.is_stopword { "s" } else { " " };
            let mut line = format!(
                "{}  {}  {flag}",
                pad_left(&(r + 1).to_string(), index_width),
                pad_right(&elide(&unit.label, label_width), label_width),
            );
            for col in panel {
                line.push_str("  ");
                line.push_str(&pad_left(&col.cells[r], col.width));
            }
            out.push_str(line.trim_end());
            out.push('\n');
        }
    }
    out
}

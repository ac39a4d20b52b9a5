//! Terminal tables, JSON and CSV exports, and SVG figures.

pub mod document;
pub mod svg;
pub mod table;

pub use document::{records_csv, write_text, ExperimentSummary, Payload, ReportDocument, ReportError, FORMAT_VERSION};
pub use svg::{heatmap_svg, scatter_svg, score_unit, ColorScale};
pub use table::{render_terminal, TableOptions};

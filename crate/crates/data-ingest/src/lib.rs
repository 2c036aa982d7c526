//! Indicator ingestion: delimited files in, a daily-aligned panel out.
//!
//! Each source is parsed into [`RawRecord`]s (malformed rows are rejected and
//! counted, never dropped silently), aligned onto a daily grid with bounded
//! forward fill, and merged into a [`Panel`] over the common date range.

mod align;
mod error;
mod normalize;
mod panel;
mod parse;
mod source;

pub use align::{align_daily, DateRange, FillFlag, IndicatorSeries};
pub use error::IngestError;
pub use normalize::{normalize_for_display, NormalizedSeries};
pub use panel::{build_panel, read_panel_csv, ColumnCoverage, CoverageReport, Panel};
pub use parse::{parse_indicator_file, parse_indicator_reader, IngestReport, RawRecord, RejectReason, Rejection};
pub use source::{Frequency, IndicatorSource, SourceRegistry};

/// Default forward-fill limit in days.
pub const DEFAULT_MAX_GAP: u32 = 7;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::{IndicatorSource, IngestError};

/// One accepted row. `value` is `None` for an explicitly empty cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRecord {
    pub date: NaiveDate,
    pub value: Option<f64>,
    pub source_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Duplicate,
    UnparseableDate,
    UnparseableValue,
    NonFiniteValue,
    MalformedRow,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::Duplicate => "duplicate",
            RejectReason::UnparseableDate => "unparseable date",
            RejectReason::UnparseableValue => "unparseable value",
            RejectReason::NonFiniteValue => "non-finite value",
            RejectReason::MalformedRow => "malformed row",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based data row number (the header is row 0).
    pub row: usize,
    pub reason: RejectReason,
}

/// Per-source ingestion accounting. `rows_read == rows_accepted + rejected.len()`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub source_id: String,
    pub rows_read: usize,
    pub rows_accepted: usize,
    pub rejected: Vec<Rejection>,
    /// Runs of non-observed days on the aligned grid.
    pub gap_count: usize,
    pub longest_gap: usize,
    pub fill_count: usize,
}

impl IngestReport {
    pub fn rejected_with(&self, reason: RejectReason) -> usize {
        self.rejected.iter().filter(|r| r.reason == reason).count()
    }
}

const MISSING_TOKENS: [&str; 4] = ["", "NA", "N/A", "null"];

pub fn parse_indicator_file(
    path: &Path,
    source: &IndicatorSource,
) -> Result<(Vec<RawRecord>, IngestReport), IngestError> {
    let file = std::fs::File::open(path).map_err(|e| IngestError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_indicator_reader(file, source, &path.display().to_string())
}

/// Parses `date,<value_column>` delimited text. Later rows win on duplicate dates.
pub fn parse_indicator_reader<R: Read>(
    reader: R,
    source: &IndicatorSource,
    context: &str,
) -> Result<(Vec<RawRecord>, IngestReport), IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn {
                column: name.to_string(),
                context: context.to_string(),
            })
    };
    let date_col = column("date")?;
    let value_col = column(&source.value_column)?;

    let mut report = IngestReport {
        source_id: source.id.clone(),
        ..Default::default()
    };
    // date -> (row, value)
    let mut accepted: BTreeMap<NaiveDate, (usize, Option<f64>)> = BTreeMap::new();

    for (i, result) in rdr.records().enumerate() {
        let row = i + 1;
        report.rows_read += 1;
        let parsed = result
            .map_err(|_| RejectReason::MalformedRow)
            .and_then(|rec| parse_row(&rec, date_col, value_col));
        match parsed {
            Ok((date, value)) => {
                if let Some((old_row, _)) = accepted.insert(date, (row, value)) {
                    report.rejected.push(Rejection {
                        row: old_row,
                        reason: RejectReason::Duplicate,
                    });
                }
            }
            Err(reason) => report.rejected.push(Rejection { row, reason }),
        }
    }

    if accepted.is_empty() {
        return Err(IngestError::NoAcceptedRows(source.id.clone()));
    }
    report.rows_accepted = accepted.len();
    report.rejected.sort_by_key(|r| r.row);

    let records = accepted
        .into_iter()
        .map(|(date, (_, value))| RawRecord {
            date,
            value,
            source_id: source.id.clone(),
        })
        .collect();
    Ok((records, report))
}

fn parse_row(
    rec: &csv::StringRecord,
    date_col: usize,
    value_col: usize,
) -> Result<(NaiveDate, Option<f64>), RejectReason> {
    let (Some(date), Some(value)) = (rec.get(date_col), rec.get(value_col)) else {
        return Err(RejectReason::MalformedRow);
    };
    let date = NaiveDate::parse_from_str(date, "%Y-%m-%d").map_err(|_| RejectReason::UnparseableDate)?;
    if MISSING_TOKENS.contains(&value) {
        return Ok((date, None));
    }
    let value: f64 = value.parse().map_err(|_| RejectReason::UnparseableValue)?;
    if !value.is_finite() {
        return Err(RejectReason::NonFiniteValue);
    }
    Ok((date, Some(value)))
}

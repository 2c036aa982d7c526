use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::{DateRange, FillFlag, IndicatorSeries, IngestError};

/// Date-by-indicator table over the common range of its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Panel {
    pub range: DateRange,
    /// One series per column, sorted by source id.
    pub columns: Vec<IndicatorSeries>,
    /// `true` for rows where any column is missing.
    pub row_flagged: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnCoverage {
    pub source_id: String,
    pub observed: usize,
    pub filled: usize,
    pub missing: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub range: DateRange,
    pub columns: Vec<ColumnCoverage>,
    pub flagged_rows: usize,
}

impl Panel {
    pub fn column(&self, source_id: &str) -> Option<&IndicatorSeries> {
        self.columns.iter().find(|c| c.source_id == source_id)
    }

    pub fn column_ids(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.source_id.as_str()).collect()
    }

    pub fn coverage(&self) -> CoverageReport {
        let count = |s: &IndicatorSeries, flag| s.fill_mask.iter().filter(|f| **f == flag).count();
        CoverageReport {
            range: self.range,
            columns: self
                .columns
                .iter()
                .map(|s| ColumnCoverage {
                    source_id: s.source_id.clone(),
                    observed: count(s, FillFlag::Observed),
                    filled: count(s, FillFlag::Filled),
                    missing: count(s, FillFlag::Missing),
                })
                .collect(),
            flagged_rows: self.row_flagged.iter().filter(|f| **f).count(),
        }
    }

    /// Writes `date,<ids...>`; missing cells are empty.
    pub fn write_values_csv<W: Write>(&self, out: W) -> Result<(), IngestError> {
        self.write_csv(out, |s, i| s.values[i].map(|v| v.to_string()).unwrap_or_default())
    }

    /// Writes the fill-mask sidecar: `date,<ids...>` with `observed|filled|missing` cells.
    pub fn write_mask_csv<W: Write>(&self, out: W) -> Result<(), IngestError> {
        self.write_csv(out, |s, i| flag_name(s.fill_mask[i]).to_string())
    }

    fn write_csv<W: Write>(
        &self,
        out: W,
        cell: impl Fn(&IndicatorSeries, usize) -> String,
    ) -> Result<(), IngestError> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["date".to_string()];
        header.extend(self.columns.iter().map(|c| c.source_id.clone()));
        wtr.write_record(&header)?;
        for (i, date) in self.range.dates().enumerate() {
            let mut row = vec![date.to_string()];
            row.extend(self.columns.iter().map(|c| cell(c, i)));
            wtr.write_record(&row)?;
        }
        wtr.flush().map_err(|e| IngestError::Csv(e.into()))?;
        Ok(())
    }
}

fn flag_name(flag: FillFlag) -> &'static str {
    match flag {
        FillFlag::Observed => "observed",
        FillFlag::Filled => "filled",
        FillFlag::Missing => "missing",
    }
}

/// Merges aligned series over the intersection of their ranges (and `range`, if given).
///
/// Column order is by source id, so the result does not depend on input order.
pub fn build_panel(series: &[IndicatorSeries], range: Option<DateRange>) -> Result<Panel, IngestError> {
    if series.is_empty() {
        return Err(IngestError::NoSeries);
    }
    let mut by_id: BTreeMap<&str, &IndicatorSeries> = BTreeMap::new();
    for s in series {
        if by_id.insert(&s.source_id, s).is_some() {
            return Err(IngestError::DuplicateSource(s.source_id.clone()));
        }
    }

    let mut common = range.unwrap_or(series[0].range);
    for s in series {
        common = common.intersect(&s.range).ok_or(IngestError::EmptyIntersection)?;
    }

    let columns: Vec<IndicatorSeries> = by_id
        .values()
        .map(|s| s.slice(common).expect("common range lies inside every series"))
        .collect();
    let row_flagged = (0..common.len())
        .map(|i| columns.iter().any(|c| c.fill_mask[i] == FillFlag::Missing))
        .collect();

    Ok(Panel {
        range: common,
        columns,
        row_flagged,
    })
}

/// Reads a panel written by [`Panel::write_values_csv`], with an optional mask sidecar.
///
/// Without a sidecar, present cells are `observed` and empty cells `missing`.
pub fn read_panel_csv<R: Read, M: Read>(values: R, mask: Option<M>) -> Result<Panel, IngestError> {
    let (ids, dates, cells) = read_table(values)?;
    let flags = match mask {
        Some(m) => {
            let (mask_ids, mask_dates, mask_cells) = read_table(m)?;
            if mask_ids != ids || mask_dates != dates {
                return Err(IngestError::Panel("mask sidecar does not match panel layout".into()));
            }
            Some(mask_cells)
        }
        None => None,
    };

    let start = *dates.first().ok_or_else(|| IngestError::Panel("no rows".into()))?;
    let range = DateRange::new(start, *dates.last().unwrap())?;
    if range.len() != dates.len() || dates.iter().zip(range.dates()).any(|(a, b)| *a != b) {
        return Err(IngestError::Panel("dates are not contiguous and ascending".into()));
    }

    let mut columns = Vec::with_capacity(ids.len());
    for (j, id) in ids.iter().enumerate() {
        let mut values = Vec::with_capacity(dates.len());
        let mut mask = Vec::with_capacity(dates.len());
        for (i, row) in cells.iter().enumerate() {
            let cell = &row[j];
            let value = if cell.is_empty() {
                None
            } else {
                Some(cell.parse::<f64>().map_err(|_| {
                    IngestError::Panel(format!("bad value `{cell}` in column {id} row {}", i + 1))
                })?)
            };
            let flag = match &flags {
                Some(f) => parse_flag(&f[i][j])?,
                None if value.is_some() => FillFlag::Observed,
                None => FillFlag::Missing,
            };
            if (flag == FillFlag::Missing) != value.is_none() {
                return Err(IngestError::Panel(format!("mask disagrees with values in column {id} row {}", i + 1)));
            }
            values.push(value);
            mask.push(flag);
        }
        columns.push(IndicatorSeries {
            source_id: id.clone(),
            range,
            values,
            fill_mask: mask,
        });
    }
    build_panel(&columns, None)
}

type Table = (Vec<String>, Vec<NaiveDate>, Vec<Vec<String>>);

fn read_table<R: Read>(input: R) -> Result<Table, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("date") || headers.len() < 2 {
        return Err(IngestError::Panel("expected header `date,<source ids...>`".into()));
    }
    let ids: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut dates = Vec::new();
    let mut cells = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
            .map_err(|_| IngestError::Panel(format!("bad date `{}`", &rec[0])))?;
        dates.push(date);
        cells.push(rec.iter().skip(1).map(str::to_string).collect());
    }
    Ok((ids, dates, cells))
}

fn parse_flag(s: &str) -> Result<FillFlag, IngestError> {
    match s {
        "observed" => Ok(FillFlag::Observed),
        "filled" => Ok(FillFlag::Filled),
        "missing" => Ok(FillFlag::Missing),
        other => Err(IngestError::Panel(format!("bad mask flag `{other}`"))),
    }
}

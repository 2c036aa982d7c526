use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::{IndicatorSource, IngestError, IngestReport, RawRecord};

/// Inclusive calendar range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self, IngestError> {
        if end < start {
            return Err(IngestError::InvalidRange { start, end });
        }
        Ok(DateRange { start, end })
    }

    pub fn len(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    pub fn intersect(&self, other: &DateRange) -> Option<DateRange> {
        let start = self.start.max(other.start);
        let end = self.end.min(other.end);
        (start <= end).then_some(DateRange { start, end })
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> {
        let start = self.start;
        (0..self.len() as u64).map(move |i| start + Days::new(i))
    }

    /// Offset of `date` from the start, if inside the range.
    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.contains(date).then(|| (date - self.start).num_days() as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillFlag {
    Observed,
    Filled,
    Missing,
}

/// A source aligned onto a contiguous daily grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSeries {
    pub source_id: String,
    pub range: DateRange,
    /// `None` exactly where the mask is `Missing`.
    pub values: Vec<Option<f64>>,
    pub fill_mask: Vec<FillFlag>,
}

impl IndicatorSeries {
    /// Builds a fully observed series.
    pub fn observed(source_id: impl Into<String>, start: NaiveDate, values: Vec<f64>) -> Self {
        let n = values.len().max(1);
        let range = DateRange {
            start,
            end: start + Days::new(n as u64 - 1),
        };
        IndicatorSeries {
            source_id: source_id.into(),
            range,
            fill_mask: vec![FillFlag::Observed; values.len()],
            values: values.into_iter().map(Some).collect(),
        }
    }

    pub fn value_at(&self, date: NaiveDate) -> Option<f64> {
        self.range.index_of(date).and_then(|i| self.values[i])
    }

    pub fn flag_at(&self, date: NaiveDate) -> Option<FillFlag> {
        self.range.index_of(date).map(|i| self.fill_mask[i])
    }

    /// Restricts the series to `range`, which must lie inside `self.range`.
    pub fn slice(&self, range: DateRange) -> Option<IndicatorSeries> {
        let lo = self.range.index_of(range.start)?;
        let hi = self.range.index_of(range.end)?;
        Some(IndicatorSeries {
            source_id: self.source_id.clone(),
            range,
            values: self.values[lo..=hi].to_vec(),
            fill_mask: self.fill_mask[lo..=hi].to_vec(),
        })
    }

    /// Lengths of maximal runs of non-observed days.
    pub fn gap_runs(&self) -> Vec<usize> {
        let mut runs = Vec::new();
        let mut current = 0;
        for flag in &self.fill_mask {
            if *flag == FillFlag::Observed {
                if current > 0 {
                    runs.push(current);
                }
                current = 0;
            } else {
                current += 1;
            }
        }
        if current > 0 {
            runs.push(current);
        }
        runs
    }

    /// Copies gap statistics into an ingest report.
    pub fn record_gaps(&self, report: &mut IngestReport) {
        let runs = self.gap_runs();
        report.gap_count = runs.len();
        report.longest_gap = runs.iter().copied().max().unwrap_or(0);
        report.fill_count = self.fill_mask.iter().filter(|f| **f == FillFlag::Filled).count();
    }
}

/// Places records on a daily grid over `range` with bounded forward fill.
///
/// A run of days without an observation is forward-filled from the last
/// observation when the whole run is at most `max_gap` days long (or one
/// reporting period, for weekly and monthly sources); otherwise every day of
/// the run is marked missing. Runs before the first observation are missing.
/// Trailing runs are measured up to the end of `range`.
pub fn align_daily(
    records: &[RawRecord],
    source: &IndicatorSource,
    range: DateRange,
    max_gap: u32,
) -> Result<IndicatorSeries, IngestError> {
    if records.is_empty() {
        return Err(IngestError::EmptyRecords(source.id.clone()));
    }
    let limit = max_gap.max(source.frequency.period_days() - 1) as i64;

    let mut observations: Vec<(NaiveDate, f64)> = records
        .iter()
        .filter_map(|r| r.value.map(|v| (r.date, v)))
        .collect();
    observations.sort_by_key(|(d, _)| *d);

    let n = range.len();
    let mut values = vec![None; n];
    let mut mask = vec![FillFlag::Missing; n];

    // Index of the first observation after the current day.
    let mut next = observations.partition_point(|(d, _)| *d < range.start);
    let mut last: Option<(NaiveDate, f64)> = next.checked_sub(1).map(|i| observations[i]);

    let mut i = 0;
    while i < n {
        let date = range.start + Days::new(i as u64);
        if next < observations.len() && observations[next].0 == date {
            last = Some(observations[next]);
            values[i] = Some(observations[next].1);
            mask[i] = FillFlag::Observed;
            next += 1;
            i += 1;
            continue;
        }
        // Gap run from `date` up to the next observation or the range end.
        let run_end = if next < observations.len() {
            (observations[next].0 - range.start).num_days().min(n as i64) as usize
        } else {
            n
        };
        if let Some((obs_date, value)) = last {
            let gap = (range.start + Days::new(run_end as u64 - 1) - obs_date).num_days();
            if gap <= limit {
                for j in i..run_end {
                    values[j] = Some(value);
                    mask[j] = FillFlag::Filled;
                }
            }
        }
        i = run_end;
    }

    Ok(IndicatorSeries {
        source_id: source.id.clone(),
        range,
        values,
        fill_mask: mask,
    })
}

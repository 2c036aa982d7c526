use chrono::{Days, NaiveDate};
use data_ingest::{DateRange, IndicatorSeries};
use serde::{Deserialize, Serialize};

/// A named daily series with contiguous dates starting at `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySeries {
    pub name: String,
    #[serde(default)]
    pub units: String,
    pub start: NaiveDate,
    /// `None` marks an explicitly missing day.
    pub values: Vec<Option<f64>>,
}

impl DailySeries {
    pub fn new(name: impl Into<String>, start: NaiveDate, values: Vec<f64>) -> Self {
        DailySeries {
            name: name.into(),
            units: String::new(),
            start,
            values: values.into_iter().map(Some).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn end(&self) -> Option<NaiveDate> {
        self.len().checked_sub(1).map(|n| self.start + Days::new(n as u64))
    }

    pub fn range(&self) -> Option<DateRange> {
        self.end().map(|end| DateRange { start: self.start, end })
    }

    pub fn date_at(&self, index: usize) -> NaiveDate {
        self.start + Days::new(index as u64)
    }

    pub fn get(&self, date: NaiveDate) -> Option<f64> {
        if date < self.start {
            return None;
        }
        let i = (date - self.start).num_days() as usize;
        self.values.get(i).copied().flatten()
    }
}

impl From<&IndicatorSeries> for DailySeries {
    fn from(s: &IndicatorSeries) -> Self {
        DailySeries {
            name: s.source_id.clone(),
            units: String::new(),
            start: s.range.start,
            values: s.values.clone(),
        }
    }
}

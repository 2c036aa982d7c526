use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};
use data_ingest::IndicatorSeries;
use serde::{Deserialize, Serialize};

use crate::{build_target, CalendarConfig, CalendarFlag, DailySeries, ForecastError, TargetSpec};

/// What goes into a feature row.
///
/// A row dated `d` holds the target at `d - lag` for every lag, each
/// indicator's value at `d` (and optionally its trailing mean), and the
/// calendar flags at `d`. Its label is the target at `d + horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSpec {
    pub target: TargetSpec,
    pub target_lags: Vec<u32>,
    /// Indicator ids to use; empty means every indicator supplied.
    pub indicators: Vec<String>,
    /// Adds a trailing mean of each indicator over this many days.
    pub indicator_ma_window: Option<u32>,
    pub calendar_flags: Vec<CalendarFlag>,
    pub calendar: CalendarConfig,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            target: TargetSpec::default(),
            target_lags: vec![30, 37, 44],
            indicators: Vec::new(),
            indicator_ma_window: None,
            calendar_flags: vec![CalendarFlag::ChristmasWeek, CalendarFlag::EasterWeek],
            calendar: CalendarConfig::default(),
        }
    }
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<(), ForecastError> {
        self.target.validate()?;
        for &lag in &self.target_lags {
            if lag < self.target.horizon {
                return Err(ForecastError::LeakingLag {
                    lag,
                    horizon: self.target.horizon,
                });
            }
        }
        if self.indicator_ma_window == Some(0) {
            return Err(ForecastError::InvalidSpec("indicator_ma_window must be >= 1".into()));
        }
        Ok(())
    }
}

/// Unlabelled feature rows, e.g. for dates whose target lies in the future.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRows {
    pub dates: Vec<NaiveDate>,
    pub feature_names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub horizon: u32,
}

impl FeatureRows {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Dates the predictions refer to (`row date + horizon`).
    pub fn target_dates(&self) -> Vec<NaiveDate> {
        self.dates.iter().map(|d| *d + Days::new(self.horizon as u64)).collect()
    }
}

/// Labelled design matrix: `y[i]` is the target `horizon` days after `dates[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub dates: Vec<NaiveDate>,
    pub feature_names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub horizon: u32,
}

impl FeatureMatrix {
    /// Builds a matrix from raw parts with generated column names and daily dates.
    pub fn from_xy(x: Vec<Vec<f64>>, y: Vec<f64>) -> Self {
        let p = x.first().map_or(0, Vec::len);
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        FeatureMatrix {
            dates: (0..x.len()).map(|i| start + Days::new(i as u64)).collect(),
            feature_names: (0..p).map(|j| format!("x{j}")).collect(),
            x,
            y,
            horizon: 0,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.x.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            dates: indices.iter().map(|&i| self.dates[i]).collect(),
            feature_names: self.feature_names.clone(),
            x: indices.iter().map(|&i| self.x[i].clone()).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            horizon: self.horizon,
        }
    }

    /// Rows dated before `date`, and the rest.
    pub fn split_at_date(&self, date: NaiveDate) -> (FeatureMatrix, FeatureMatrix) {
        let cut = self.dates.partition_point(|d| *d < date);
        let train: Vec<usize> = (0..cut).collect();
        let test: Vec<usize> = (cut..self.n_rows()).collect();
        (self.subset(&train), self.subset(&test))
    }

    pub fn rows(&self) -> FeatureRows {
        FeatureRows {
            dates: self.dates.clone(),
            feature_names: self.feature_names.clone(),
            x: self.x.clone(),
            horizon: self.horizon,
        }
    }

    pub fn target_dates(&self) -> Vec<NaiveDate> {
        self.rows().target_dates()
    }
}

enum Column<'a> {
    Lag(u32),
    Indicator(&'a IndicatorSeries),
    IndicatorMean(&'a IndicatorSeries, u32),
    Flag(CalendarFlag),
}

struct Design<'a> {
    target: DailySeries,
    columns: Vec<Column<'a>>,
    names: Vec<String>,
    spec: &'a FeatureSpec,
}

impl<'a> Design<'a> {
    fn new(
        arrivals: &DailySeries,
        indicators: &'a [IndicatorSeries],
        spec: &'a FeatureSpec,
    ) -> Result<Self, ForecastError> {
        spec.validate()?;
        let target = build_target(arrivals, &spec.target)?;

        let by_id: BTreeMap<&str, &IndicatorSeries> =
            indicators.iter().map(|s| (s.source_id.as_str(), s)).collect();
        let chosen: Vec<&IndicatorSeries> = if spec.indicators.is_empty() {
            by_id.values().copied().collect()
        } else {
            spec.indicators
                .iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .copied()
                        .ok_or_else(|| ForecastError::UnknownIndicator(id.clone()))
                })
                .collect::<Result<_, _>>()?
        };

        let mut columns = Vec::new();
        let mut names = Vec::new();
        for &lag in &spec.target_lags {
            columns.push(Column::Lag(lag));
            names.push(format!("target_lag{lag}"));
        }
        for s in chosen {
            columns.push(Column::Indicator(s));
            names.push(s.source_id.clone());
            if let Some(w) = spec.indicator_ma_window {
                columns.push(Column::IndicatorMean(s, w));
                names.push(format!("{}_ma{w}", s.source_id));
            }
        }
        for &flag in &spec.calendar_flags {
            columns.push(Column::Flag(flag));
            names.push(flag.name().to_string());
        }
        if columns.is_empty() {
            return Err(ForecastError::InvalidSpec("no feature columns".into()));
        }
        Ok(Design {
            target,
            columns,
            names,
            spec,
        })
    }

    fn row(&self, date: NaiveDate) -> Option<Vec<f64>> {
        self.columns
            .iter()
            .map(|col| match col {
                Column::Lag(lag) => date
                    .checked_sub_days(Days::new(*lag as u64))
                    .and_then(|d| self.target.get(d)),
                Column::Indicator(s) => s.value_at(date),
                Column::IndicatorMean(s, w) => {
                    let mut sum = 0.0;
                    for k in 0..*w {
                        sum += s.value_at(date.checked_sub_days(Days::new(k as u64))?)?;
                    }
                    Some(sum / *w as f64)
                }
                Column::Flag(flag) => Some(self.spec.calendar.value(*flag, date)),
            })
            .collect()
    }

    fn label(&self, date: NaiveDate) -> Option<f64> {
        self.target.get(date + Days::new(self.spec.target.horizon as u64))
    }

    /// Every date on which a row could possibly exist.
    fn candidate_dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        let range = self.target.range().expect("target is non-empty");
        range.dates()
    }
}

/// Labelled rows for every date on which all inputs and the label exist.
pub fn build_features(
    arrivals: &DailySeries,
    indicators: &[IndicatorSeries],
    spec: &FeatureSpec,
) -> Result<FeatureMatrix, ForecastError> {
    let design = Design::new(arrivals, indicators, spec)?;
    let mut dates = Vec::new();
    let mut x = Vec::new();
    let mut y = Vec::new();
    for date in design.candidate_dates() {
        let (Some(label), Some(row)) = (design.label(date), design.row(date)) else {
            continue;
        };
        dates.push(date);
        x.push(row);
        y.push(label);
    }
    if x.is_empty() {
        return Err(ForecastError::EmptyUsableRange);
    }
    Ok(FeatureMatrix {
        dates,
        feature_names: design.names,
        x,
        y,
        horizon: spec.target.horizon,
    })
}

/// Feature rows whose label lies beyond the end of the arrivals target.
pub fn build_future_rows(
    arrivals: &DailySeries,
    indicators: &[IndicatorSeries],
    spec: &FeatureSpec,
) -> Result<FeatureRows, ForecastError> {
    let design = Design::new(arrivals, indicators, spec)?;
    let target_end = design.target.end().expect("target is non-empty");
    let horizon = Days::new(spec.target.horizon as u64);
    let mut dates = Vec::new();
    let mut x = Vec::new();
    for date in design.candidate_dates() {
        if date + horizon <= target_end {
            continue;
        }
        if let Some(row) = design.row(date) {
            dates.push(date);
            x.push(row);
        }
    }
    Ok(FeatureRows {
        dates,
        feature_names: design.names,
        x,
        horizon: spec.target.horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use data_ingest::FillFlag;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn ramp(start: &str, n: usize) -> DailySeries {
        DailySeries::new("arrivals", d(start), (0..n).map(|i| i as f64).collect())
    }

    fn spec(lags: Vec<u32>, horizon: u32) -> FeatureSpec {
        FeatureSpec {
            target: TargetSpec { window: 7, horizon },
            target_lags: lags,
            calendar_flags: Vec::new(),
            ..Default::default()
        }
    }

    #[test]
    fn lag_row_uses_past_target_and_future_label() {
        let arrivals = ramp("2021-06-01", 200);
        let m = build_features(&arrivals, &[], &spec(vec![30], 30)).unwrap();
        let target = build_target(&arrivals, &TargetSpec::default()).unwrap();
        for (i, date) in m.dates.iter().enumerate() {
            assert_eq!(m.x[i][0], target.get(*date - Days::new(30)).unwrap());
            assert_eq!(m.y[i], target.get(*date + Days::new(30)).unwrap());
        }
        // target starts at day 6; the first row needs day 6 at lag 30
        assert_eq!(m.dates[0], d("2021-06-01") + Days::new(36));
        assert_eq!(m.feature_names, vec!["target_lag30"]);
    }

    #[test]
    fn christmas_flag_column() {
        let arrivals = ramp("2021-10-01", 150);
        let mut s = spec(vec![30], 30);
        s.calendar_flags = vec![CalendarFlag::ChristmasWeek];
        let m = build_features(&arrivals, &[], &s).unwrap();
        for (date, row) in m.dates.iter().zip(&m.x) {
            let expected = if (d("2021-12-24")..=d("2021-12-30")).contains(date) { 1.0 } else { 0.0 };
            assert_eq!(row[1], expected, "{date}");
        }
        assert_eq!(m.x.iter().filter(|r| r[1] == 1.0).count(), 7);
    }

    /// Independent enumeration of usable dates.
    fn oracle_row_count(
        arrivals_start: NaiveDate,
        arrivals_len: i64,
        window: i64,
        horizon: i64,
        lags: &[i64],
        indicator_ranges: &[(NaiveDate, NaiveDate)],
    ) -> usize {
        let target_first = arrivals_start + chrono::Duration::days(window - 1);
        let target_last = arrivals_start + chrono::Duration::days(arrivals_len - 1);
        let has_target = |day: NaiveDate| day >= target_first && day <= target_last;
        let mut count = 0;
        let mut day = arrivals_start - chrono::Duration::days(400);
        while day <= target_last + chrono::Duration::days(400) {
            let ok = has_target(day + chrono::Duration::days(horizon))
                && lags.iter().all(|&l| has_target(day - chrono::Duration::days(l)))
                && indicator_ranges.iter().all(|&(a, b)| day >= a && day <= b);
            if ok {
                count += 1;
            }
            day += chrono::Duration::days(1);
        }
        count
    }

    #[test]
    fn row_count_matches_enumeration_oracle() {
        let arrivals = ramp("2021-06-01", 240);
        // Two indicators overlapping for exactly 100 days.
        let a = IndicatorSeries::observed("a", d("2021-08-01"), vec![1.0; 150]);
        let b = IndicatorSeries::observed("b", d("2021-07-01"), vec![2.0; 131]);
        let overlap_start = d("2021-08-01");
        let overlap_end = d("2021-11-08");
        assert_eq!((overlap_end - overlap_start).num_days() + 1, 100);

        let s = spec(vec![30, 37], 30);
        let m = build_features(&arrivals, &[a.clone(), b.clone()], &s).unwrap();
        let expected = oracle_row_count(
            d("2021-06-01"),
            240,
            7,
            30,
            &[30, 37],
            &[(a.range.start, a.range.end), (b.range.start, b.range.end)],
        );
        assert_eq!(m.n_rows(), expected);
        assert_eq!(m.n_rows(), 100);
        assert_eq!(m.feature_names, vec!["target_lag30", "target_lag37", "a", "b"]);

        // Shorter arrivals push the label constraint inside the overlap.
        let short = ramp("2021-06-01", 120);
        let m = build_features(&short, &[a.clone(), b.clone()], &s).unwrap();
        let expected = oracle_row_count(
            d("2021-06-01"),
            120,
            7,
            30,
            &[30, 37],
            &[(a.range.start, a.range.end), (b.range.start, b.range.end)],
        );
        assert_eq!(m.n_rows(), expected);
    }

    #[test]
    fn missing_indicator_days_are_dropped() {
        let arrivals = ramp("2021-06-01", 200);
        let mut a = IndicatorSeries::observed("a", d("2021-06-01"), vec![1.0; 200]);
        a.values[100] = None;
        a.fill_mask[100] = FillFlag::Missing;
        let m = build_features(&arrivals, &[a], &spec(vec![30], 30)).unwrap();
        assert!(!m.dates.contains(&(d("2021-06-01") + Days::new(100))));
    }

    #[test]
    fn spec_errors() {
        let arrivals = ramp("2021-06-01", 200);
        assert_eq!(
            build_features(&arrivals, &[], &spec(vec![29], 30)),
            Err(ForecastError::LeakingLag { lag: 29, horizon: 30 })
        );
        let mut s = spec(vec![30], 30);
        s.indicators = vec!["ghost".into()];
        assert_eq!(
            build_features(&arrivals, &[], &s),
            Err(ForecastError::UnknownIndicator("ghost".into()))
        );
        // no overlap between the indicator and the arrivals-derived rows
        let far = IndicatorSeries::observed("far", d("2030-01-01"), vec![1.0; 10]);
        assert_eq!(
            build_features(&arrivals, &[far], &spec(vec![30], 30)),
            Err(ForecastError::EmptyUsableRange)
        );
    }

    #[test]
    fn future_rows_cover_unlabelled_tail() {
        let arrivals = ramp("2021-06-01", 200);
        let s = spec(vec![30], 30);
        let m = build_features(&arrivals, &[], &s).unwrap();
        let f = build_future_rows(&arrivals, &[], &s).unwrap();
        assert_eq!(f.len(), 30);
        assert_eq!(f.dates[0], *m.dates.last().unwrap() + Days::new(1));
        assert_eq!(*f.target_dates().last().unwrap(), arrivals.end().unwrap() + Days::new(30));
    }

    #[test]
    fn moving_average_columns() {
        let arrivals = ramp("2021-06-01", 200);
        let a = IndicatorSeries::observed("a", d("2021-06-01"), (0..200).map(f64::from).collect());
        let mut s = spec(vec![30], 30);
        s.indicator_ma_window = Some(3);
        let m = build_features(&arrivals, &[a], &s).unwrap();
        assert_eq!(m.feature_names, vec!["target_lag30", "a", "a_ma3"]);
        for row in &m.x {
            assert_eq!(row[2], row[1] - 1.0);
        }
    }
}

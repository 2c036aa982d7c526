use serde::{Deserialize, Serialize};

use crate::{DailySeries, ForecastError};

/// Smoothing window and forecast lead, both in days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub window: u32,
    pub horizon: u32,
}

impl Default for TargetSpec {
    fn default() -> Self {
        TargetSpec { window: 7, horizon: 30 }
    }
}

impl TargetSpec {
    pub fn validate(&self) -> Result<(), ForecastError> {
        if self.window < 1 || self.horizon < 1 {
            return Err(ForecastError::InvalidSpec(format!(
                "window and horizon must be >= 1, got {}/{}",
                self.window, self.horizon
            )));
        }
        Ok(())
    }
}

/// Trailing `window`-day mean, inclusive of the current day.
///
/// The output starts `window - 1` days after the input. A day whose window
/// touches a missing value is itself missing.
pub fn build_target(arrivals: &DailySeries, spec: &TargetSpec) -> Result<DailySeries, ForecastError> {
    spec.validate()?;
    let w = spec.window as usize;
    if arrivals.len() < w {
        return Err(ForecastError::SeriesTooShort {
            len: arrivals.len(),
            needed: w,
        });
    }
    let values = arrivals
        .values
        .windows(w)
        .map(|win| {
            win.iter()
                .copied()
                .collect::<Option<Vec<f64>>>()
                .map(|v| v.iter().sum::<f64>() / w as f64)
        })
        .collect();
    Ok(DailySeries {
        name: format!("{}_ma{}", arrivals.name, w),
        units: arrivals.units.clone(),
        start: arrivals.date_at(w - 1),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn start() -> NaiveDate {
        NaiveDate::from_ymd_opt(2021, 7, 1).unwrap()
    }

    #[test]
    fn constant_stays_constant() {
        let s = DailySeries::new("a", start(), vec![4.5; 20]);
        let t = build_target(&s, &TargetSpec::default()).unwrap();
        assert_eq!(t.len(), 14);
        assert!(t.values.iter().all(|v| *v == Some(4.5)));
        assert_eq!(t.start, NaiveDate::from_ymd_opt(2021, 7, 7).unwrap());
    }

    #[test]
    fn first_value_is_mean_of_first_window() {
        let s = DailySeries::new("a", start(), (0..10).map(f64::from).collect());
        let t = build_target(&s, &TargetSpec::default()).unwrap();
        assert_eq!(t.values[0], Some(3.0));
        assert_eq!(t.values[3], Some(6.0));
    }

    #[test]
    fn too_short_is_an_error() {
        let s = DailySeries::new("a", start(), vec![1.0; 6]);
        assert_eq!(
            build_target(&s, &TargetSpec::default()),
            Err(ForecastError::SeriesTooShort { len: 6, needed: 7 })
        );
    }

    #[test]
    fn missing_day_poisons_its_windows() {
        let mut s = DailySeries::new("a", start(), vec![1.0; 10]);
        s.values[7] = None;
        let t = build_target(&s, &TargetSpec { window: 3, horizon: 1 }).unwrap();
        // windows ending at days 7, 8, 9 include day 7
        assert_eq!(t.values[..5], [Some(1.0); 5]);
        assert_eq!(t.values[5..], [None; 3]);
    }
}

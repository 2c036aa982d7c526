use crate::{predict, FeatureRows, ForecastError, PredictionBand, TrainedModel};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Normalized inverse-RMSE weights.
///
/// Models with zero RMSE, if any, share all the weight equally.
pub fn ensemble_weights(rmse: &[f64]) -> Result<Vec<f64>, ForecastError> {
    if rmse.is_empty() {
        return Err(ForecastError::NoModels);
    }
    if let Some(&bad) = rmse.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
        return Err(ForecastError::InvalidRmse(bad));
    }
    let exact = rmse.iter().filter(|r| **r == 0.0).count();
    if exact > 0 {
        let w = 1.0 / exact as f64;
        return Ok(rmse.iter().map(|r| if *r == 0.0 { w } else { 0.0 }).collect());
    }
    let inv: Vec<f64> = rmse.iter().map(|r| 1.0 / r).collect();
    let total: f64 = inv.iter().sum();
    Ok(inv.iter().map(|v| v / total).collect())
}

fn check_weights(weights: &[f64], components: usize) -> Result<(), ForecastError> {
    if components == 0 {
        return Err(ForecastError::NoModels);
    }
    if weights.len() != components {
        return Err(ForecastError::LengthMismatch {
            left: components,
            right: weights.len(),
        });
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(ForecastError::InvalidWeights("weights must be finite and >= 0".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        return Err(ForecastError::InvalidWeights(format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

fn weighted_mean(values: impl Iterator<Item = f64> + Clone, weights: &[f64]) -> f64 {
    let mean: f64 = values.clone().zip(weights).map(|(v, w)| v * w).sum();
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    mean.clamp(lo, hi)
}

/// Per-row weighted mean of component predictions (`components[model][row]`).
pub fn combine_predictions(components: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>, ForecastError> {
    check_weights(weights, components.len())?;
    let n = components[0].len();
    if let Some(c) = components.iter().find(|c| c.len() != n) {
        return Err(ForecastError::LengthMismatch { left: n, right: c.len() });
    }
    Ok((0..n)
        .map(|i| weighted_mean(components.iter().map(|c| c[i]), weights))
        .collect())
}

/// Weighted ensemble of several models on the same rows.
pub fn ensemble_predict(
    models: &[TrainedModel],
    weights: &[f64],
    rows: &FeatureRows,
) -> Result<Vec<f64>, ForecastError> {
    check_weights(weights, models.len())?;
    let components = models
        .iter()
        .map(|m| predict(m, rows))
        .collect::<Result<Vec<_>, _>>()?;
    combine_predictions(&components, weights)
}

/// Weighted mean of component points, lower bounds and upper bounds.
pub fn ensemble_intervals(bands: &[PredictionBand], weights: &[f64]) -> Result<PredictionBand, ForecastError> {
    check_weights(weights, bands.len())?;
    let first = &bands[0];
    for band in &bands[1..] {
        if band.dates.len() != first.dates.len() {
            return Err(ForecastError::LengthMismatch {
                left: first.dates.len(),
                right: band.dates.len(),
            });
        }
        if let Some(index) = first.dates.iter().zip(&band.dates).position(|(a, b)| a != b) {
            return Err(ForecastError::MisalignedDates {
                index,
                left: first.dates[index],
                right: band.dates[index],
            });
        }
        if band.level != first.level {
            return Err(ForecastError::InvalidBootstrap(format!(
                "mixed interval levels {} and {}",
                first.level, band.level
            )));
        }
    }
    let n = first.dates.len();
    let mut out = PredictionBand {
        dates: first.dates.clone(),
        level: first.level,
        point: Vec::with_capacity(n),
        lower: Vec::with_capacity(n),
        upper: Vec::with_capacity(n),
    };
    for i in 0..n {
        let point = weighted_mean(bands.iter().map(|b| b.point[i]), weights);
        let lower = weighted_mean(bands.iter().map(|b| b.lower[i]), weights).min(point);
        let upper = weighted_mean(bands.iter().map(|b| b.upper[i]), weights).max(point);
        out.point.push(point);
        out.lower.push(lower);
        out.upper.push(upper);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn band(lower: f64, point: f64, upper: f64) -> PredictionBand {
        PredictionBand {
            dates: vec![NaiveDate::from_ymd_opt(2022, 2, 1).unwrap()],
            level: 0.8,
            point: vec![point],
            lower: vec![lower],
            upper: vec![upper],
        }
    }

    #[test]
    fn weight_examples() {
        assert_eq!(ensemble_weights(&[1.0, 3.0]).unwrap(), vec![0.75, 0.25]);
        assert_eq!(ensemble_weights(&[4.2]).unwrap(), vec![1.0]);
        assert_eq!(ensemble_weights(&[0.0, 5.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(ensemble_weights(&[0.0, 5.0, 0.0]).unwrap(), vec![0.5, 0.0, 0.5]);
        assert_eq!(ensemble_weights(&[]).unwrap_err(), ForecastError::NoModels);
        assert_eq!(ensemble_weights(&[-1.0]).unwrap_err(), ForecastError::InvalidRmse(-1.0));
    }

    #[test]
    fn combine_examples() {
        let c = vec![vec![10.0], vec![20.0]];
        assert_eq!(combine_predictions(&c, &[0.75, 0.25]).unwrap(), vec![12.5]);
        assert_eq!(combine_predictions(&c, &[1.0, 0.0]).unwrap(), vec![10.0]);
        let same = vec![vec![3.0, 4.0]; 3];
        let w = ensemble_weights(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(combine_predictions(&same, &w).unwrap(), vec![3.0, 4.0]);
        assert!(matches!(
            combine_predictions(&c, &[1.0]),
            Err(ForecastError::LengthMismatch { .. })
        ));
        assert!(matches!(
            combine_predictions(&c, &[0.5, 0.6]),
            Err(ForecastError::InvalidWeights(_))
        ));
    }

    #[test]
    fn interval_examples() {
        let out = ensemble_intervals(&[band(0.0, 10.0, 20.0), band(10.0, 20.0, 30.0)], &[0.5, 0.5]).unwrap();
        assert_eq!((out.lower[0], out.point[0], out.upper[0]), (5.0, 15.0, 25.0));
        let one = band(1.0, 2.0, 3.0);
        assert_eq!(ensemble_intervals(std::slice::from_ref(&one), &[1.0]).unwrap(), one);
        let same = ensemble_intervals(&[one.clone(), one.clone()], &[0.3, 0.7]).unwrap();
        assert_eq!(same, one);
    }

    #[test]
    fn misaligned_dates_rejected() {
        let a = band(0.0, 1.0, 2.0);
        let mut b = a.clone();
        b.dates[0] = NaiveDate::from_ymd_opt(2022, 2, 2).unwrap();
        assert!(matches!(
            ensemble_intervals(&[a, b], &[0.5, 0.5]),
            Err(ForecastError::MisalignedDates { index: 0, .. })
        ));
    }

    proptest! {
        #[test]
        fn weights_normalized(rmse in prop::collection::vec(0.0f64..100.0, 1..12)) {
            let w = ensemble_weights(&rmse).unwrap();
            prop_assert!(w.iter().all(|v| *v >= 0.0));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn weights_decrease_with_rmse(rmse in prop::collection::vec(0.01f64..100.0, 2..12)) {
            let w = ensemble_weights(&rmse).unwrap();
            for i in 0..rmse.len() {
                for j in 0..rmse.len() {
                    if rmse[i] < rmse[j] {
                        prop_assert!(w[i] >= w[j]);
                    }
                }
            }
        }

        #[test]
        fn ensemble_within_component_range(
            comps in prop::collection::vec(prop::collection::vec(0.0f64..1e4, 5), 1..6),
            raw in prop::collection::vec(0.01f64..10.0, 6),
        ) {
            let w = ensemble_weights(&raw[..comps.len()]).unwrap();
            let out = combine_predictions(&comps, &w).unwrap();
            for (i, v) in out.iter().enumerate() {
                let lo = comps.iter().map(|c| c[i]).fold(f64::INFINITY, f64::min);
                let hi = comps.iter().map(|c| c[i]).fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(*v >= lo && *v <= hi);
            }
        }
    }
}

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::ForecastError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig { folds: 10 }
    }
}

/// One contiguous block: train on its head, validate on its tail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Range<usize>,
    pub validation: Range<usize>,
}

/// Blocking time-series split.
///
/// Rows are cut into `k` contiguous blocks in time order; the first `n % k`
/// blocks get one extra row. Within a block of `m` rows the first
/// `floor(0.8 m)` are training and the remainder validation. Nothing is
/// shuffled.
pub fn blocked_cv_split(n: usize, k: usize) -> Result<Vec<Fold>, ForecastError> {
    if k < 2 || n < 2 * k {
        return Err(ForecastError::TooFewRows { n, k });
    }
    let base = n / k;
    let extra = n % k;
    let mut start = 0;
    let mut folds = Vec::with_capacity(k);
    for b in 0..k {
        let m = base + usize::from(b < extra);
        let cut = start + m * 4 / 5;
        folds.push(Fold {
            train: start..cut,
            validation: cut..start + m,
        });
        start += m;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_rows_ten_folds() {
        let folds = blocked_cv_split(100, 10).unwrap();
        assert_eq!(folds.len(), 10);
        assert_eq!(folds[0], Fold { train: 0..8, validation: 8..10 });
        assert_eq!(folds[9], Fold { train: 90..98, validation: 98..100 });
    }

    #[test]
    fn twenty_rows_one_and_one() {
        let folds = blocked_cv_split(20, 10).unwrap();
        for (b, f) in folds.iter().enumerate() {
            assert_eq!(f.train, 2 * b..2 * b + 1);
            assert_eq!(f.validation, 2 * b + 1..2 * b + 2);
        }
    }

    #[test]
    fn too_few_rows() {
        assert_eq!(blocked_cv_split(19, 10), Err(ForecastError::TooFewRows { n: 19, k: 10 }));
        assert!(blocked_cv_split(10, 1).is_err());
    }

    #[test]
    fn uneven_blocks_front_loaded() {
        let folds = blocked_cv_split(137, 10).unwrap();
        let sizes: Vec<_> = folds.iter().map(|f| f.validation.end - f.train.start).collect();
        assert_eq!(sizes, vec![14, 14, 14, 14, 14, 14, 14, 13, 13, 13]);
        assert_eq!(folds[0], Fold { train: 0..11, validation: 11..14 });
        assert_eq!(folds[7], Fold { train: 98..108, validation: 108..111 });
    }
}

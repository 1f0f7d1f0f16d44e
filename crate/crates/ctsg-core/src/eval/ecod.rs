//! Empirical-CDF outlier detector over flattened series.
//!
//! Each flattened dimension keeps the sorted training values. A scored
//! point accumulates, per dimension, the larger of the negative log left
//! and right tail probabilities (the skewness-selected tail is folded into
//! the same max); the outlier score is the sum over dimensions. The flag
//! threshold is a quantile of the training scores.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::series::TimeSeries;

/// Extrapolation controllability probe: trained on normal series, expected
/// to flag series generated under extreme conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct EcodModel {
    /// Sorted training values per flattened dimension.
    supports: Vec<Vec<f64>>,
    /// Sample skewness per dimension (selects the tail in the third term).
    skew: Vec<f64>,
    threshold: f64,
    flag_quantile: f64,
    series_len: usize,
    channels: usize,
}

impl EcodModel {
    #[inline]
    pub fn dims(&self) -> usize {
        self.supports.len()
    }

    #[inline]
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    #[inline]
    pub fn flag_quantile(&self) -> f64 {
        self.flag_quantile
    }
}

fn sample_skewness(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
    if m2 == 0.0 {
        return 0.0;
    }
    let m3 = values
        .iter()
        .map(|&v| (v - mean) * (v - mean) * (v - mean))
        .sum::<f64>()
        / n;
    m3 / math::powf(m2, 1.5)
}

fn dimension_score(support: &[f64], skew: f64, x: f64) -> f64 {
    let n = support.len();
    // Laplace-smoothed tail probabilities keep the logs finite beyond the
    // observed range.
    let count_le = support.partition_point(|&v| v <= x);
    let count_ge = n - support.partition_point(|&v| v < x);
    let p_left = (count_le + 1) as f64 / (n + 1) as f64;
    let p_right = (count_ge + 1) as f64 / (n + 1) as f64;
    let left = -math::ln(p_left);
    let right = -math::ln(p_right);
    let skew_selected = if skew < 0.0 { left } else { right };
    left.max(right).max(skew_selected)
}

/// Fit the detector on normal series. `flag_quantile` (in `(0, 1]`) sets the
/// flag threshold as that quantile of the training scores; 0.95 is the usual
/// choice.
pub fn ecod_fit(train: &[TimeSeries], flag_quantile: f64) -> Result<EcodModel> {
    if train.is_empty() {
        return Err(Error::Empty("ecod training set"));
    }
    if !(flag_quantile > 0.0 && flag_quantile <= 1.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "flag_quantile must be in (0, 1], got {flag_quantile}"
        )));
    }
    let series_len = train[0].len();
    let channels = train[0].channels();
    let dims = series_len * channels;
    for x in train {
        if x.len() != series_len || x.channels() != channels {
            return Err(Error::DimensionMismatch {
                what: "ecod training shapes",
                expected: dims,
                got: x.len() * x.channels(),
            });
        }
    }
    let mut supports = Vec::with_capacity(dims);
    let mut skew = Vec::with_capacity(dims);
    for d in 0..dims {
        let mut column: Vec<f64> = train.iter().map(|x| x.values()[d]).collect();
        column.sort_by(|a, b| a.partial_cmp(b).unwrap());
        skew.push(sample_skewness(&column));
        supports.push(column);
    }
    let mut model = EcodModel {
        supports,
        skew,
        threshold: 0.0,
        flag_quantile,
        series_len,
        channels,
    };
    let mut train_scores: Vec<f64> = train
        .iter()
        .map(|x| ecod_score(&model, x))
        .collect::<Result<_>>()?;
    train_scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Nearest-rank quantile.
    let rank = (libm::ceil(flag_quantile * train_scores.len() as f64) as usize)
        .clamp(1, train_scores.len());
    model.threshold = train_scores[rank - 1];
    Ok(model)
}

/// Outlier score of one series: summed per-dimension tail surprisal.
pub fn ecod_score(model: &EcodModel, x: &TimeSeries) -> Result<f64> {
    if x.len() != model.series_len || x.channels() != model.channels {
        return Err(Error::DimensionMismatch {
            what: "ecod input shape",
            expected: model.series_len * model.channels,
            got: x.len() * x.channels(),
        });
    }
    Ok(x.values()
        .iter()
        .enumerate()
        .map(|(d, &v)| dimension_score(&model.supports[d], model.skew[d], v))
        .sum())
}

/// Flag decision: score strictly above the training-quantile threshold.
pub fn ecod_flag(model: &EcodModel, x: &TimeSeries) -> Result<bool> {
    Ok(ecod_score(model, x)? > model.threshold)
}

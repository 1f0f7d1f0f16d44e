//! Time series container.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A fixed-length multichannel time series.
///
/// Values are stored row-major: `values[t * channels + c]` is channel `c` at
/// step `t` (time-major, channel-minor). Every entry is finite by
/// construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    len: usize,
    channels: usize,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, len: usize, channels: usize) -> Result<Self> {
        if len == 0 || channels == 0 {
            return Err(Error::Empty("time series shape"));
        }
        if values.len() != len * channels {
            return Err(Error::DimensionMismatch {
                what: "time series storage",
                expected: len * channels,
                got: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                what: "time series values",
            });
        }
        Ok(TimeSeries {
            values,
            len,
            channels,
        })
    }

    pub fn zeros(len: usize, channels: usize) -> Self {
        TimeSeries {
            values: vec![0.0; len * channels],
            len,
            channels,
        }
    }

    /// Single-channel series from a plain slice.
    pub fn univariate(values: &[f64]) -> Result<Self> {
        TimeSeries::new(values.to_vec(), values.len(), 1)
    }

    /// Number of time steps (`T`).
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of channels (`d_r`).
    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn value(&self, t: usize, c: usize) -> f64 {
        self.values[t * self.channels + c]
    }

    /// All values of one time step.
    #[inline]
    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * self.channels..(t + 1) * self.channels]
    }

    /// One channel extracted as a contiguous vector.
    pub fn channel(&self, c: usize) -> Vec<f64> {
        (0..self.len).map(|t| self.value(t, c)).collect()
    }

    pub fn same_shape(&self, other: &TimeSeries) -> bool {
        self.len == other.len && self.channels == other.channels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        let err = TimeSeries::new(vec![1.0, f64::NAN], 2, 1).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn rejects_bad_shape() {
        let err = TimeSeries::new(vec![1.0, 2.0, 3.0], 2, 2).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn frame_and_channel_views_agree() {
        let ts = TimeSeries::new(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3, 2).unwrap();
        assert_eq!(ts.frame(1), &[3.0, 4.0]);
        assert_eq!(ts.channel(1), vec![2.0, 4.0, 6.0]);
        assert_eq!(ts.value(2, 0), 5.0);
    }
}

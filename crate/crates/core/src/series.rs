//! Regular annual time series with missing values, differencing, moments
//! and the sample autocorrelation function.
//!
//! Missing observations are stored as `NaN`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two-sided 95% normal quantile used for white-noise significance bounds.
pub const Z95: f64 = 1.96;

/// Observations on consecutive integer times starting at `start_time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    start_time: i64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(start_time: i64, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("a time series needs at least one observation"));
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::invalid("infinite values are not allowed"));
        }
        Ok(Self { start_time, values })
    }

    /// Series indexed from time 0.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        Self::new(0, values)
    }

    pub fn start_time(&self) -> i64 {
        self.start_time
    }

    /// Time of the last observation (inclusive).
    pub fn end_time(&self) -> i64 {
        self.start_time + self.values.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn times(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.values.len()).map(move |i| self.start_time + i as i64)
    }

    pub fn time_at(&self, index: usize) -> i64 {
        self.start_time + index as i64
    }

    pub fn index_of(&self, time: i64) -> Option<usize> {
        let offset = time - self.start_time;
        (offset >= 0 && (offset as usize) < self.values.len()).then_some(offset as usize)
    }

    /// Value at `time`, `None` when out of range or missing.
    pub fn get(&self, time: i64) -> Option<f64> {
        self.index_of(time)
            .map(|i| self.values[i])
            .filter(|v| !v.is_nan())
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    pub fn non_missing_count(&self) -> usize {
        self.values.len() - self.missing_count()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(|v| !v.is_nan())
    }

    /// Sub-series on the inclusive time range `[from, to]`.
    pub fn window(&self, from: i64, to: i64) -> Result<Self> {
        let (Some(i), Some(j)) = (self.index_of(from), self.index_of(to)) else {
            return Err(Error::invalid(format!(
                "window [{from}, {to}] is outside the series range [{}, {}]",
                self.start_time,
                self.end_time()
            )));
        };
        if i > j {
            return Err(Error::invalid(format!("empty window [{from}, {to}]")));
        }
        Self::new(from, self.values[i..=j].to_vec())
    }

    /// Elementwise affine map `a * x + b`; missing values stay missing.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        Self {
            start_time: self.start_time,
            values: self.values.iter().map(|v| a * v + b).collect(),
        }
    }

    pub(crate) fn require_complete(&self, what: &str) -> Result<()> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(Error::UnsupportedInput(format!(
                "{what} requires a series without missing values ({} missing)",
                self.missing_count()
            )))
        }
    }
}

/// Lag-`lag` difference `x[t + lag] - x[t]`; the result starts `lag` steps later.
pub fn difference(series: &TimeSeries, lag: usize) -> Result<TimeSeries> {
    if lag == 0 {
        return Err(Error::invalid("difference lag must be positive"));
    }
    let n = series.len();
    if n <= lag {
        return Err(Error::invalid(format!(
            "series of length {n} is too short for a lag-{lag} difference"
        )));
    }
    let v = series.values();
    let out = (0..n - lag).map(|t| v[t + lag] - v[t]).collect();
    TimeSeries::new(series.start_time() + lag as i64, out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfResult {
    pub lags: Vec<usize>,
    pub correlations: Vec<f64>,
    /// Number of non-missing observations.
    pub n: usize,
    pub bound: f64,
}

impl AcfResult {
    pub fn at(&self, lag: usize) -> Option<f64> {
        self.correlations.get(lag).copied()
    }
}

/// Sample ACF with divisor `n` and the white-noise bound `1.96 / sqrt(n)`.
///
/// Missing values are handled by pairwise deletion in the lagged sums while the
/// divisor stays the full non-missing count.
pub fn sample_acf(series: &TimeSeries, max_lag: usize) -> Result<AcfResult> {
    let n_obs = series.non_missing_count();
    if n_obs < 2 {
        return Err(Error::invalid("ACF needs at least two non-missing values"));
    }
    if max_lag == 0 || max_lag >= series.len() {
        return Err(Error::invalid(format!(
            "max_lag must be in 1..{} (got {max_lag})",
            series.len()
        )));
    }
    let v = series.values();
    let mean = nan_mean(v);
    let centered: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let n = n_obs as f64;
    let autocov = |h: usize| -> f64 {
        centered[h..]
            .iter()
            .zip(&centered)
            .filter(|(a, b)| !a.is_nan() && !b.is_nan())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n
    };
    let gamma0 = autocov(0);
    if gamma0 <= 0.0 {
        return Err(Error::DegenerateSeries("constant series has zero variance".into()));
    }
    let mut correlations = Vec::with_capacity(max_lag + 1);
    correlations.push(1.0);
    for h in 1..=max_lag {
        correlations.push((autocov(h) / gamma0).clamp(-1.0, 1.0));
    }
    Ok(AcfResult {
        lags: (0..=max_lag).collect(),
        correlations,
        n: n_obs,
        bound: Z95 / n.sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    /// Divisor-n variance.
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    pub missing: usize,
}

pub fn summary_stats(series: &TimeSeries) -> Result<SummaryStats> {
    let observed: Vec<f64> = series.values().iter().copied().filter(|v| !v.is_nan()).collect();
    if observed.is_empty() {
        return Err(Error::EmptySeries);
    }
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let variance = observed.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let min = observed.iter().copied().fold(f64::INFINITY, f64::min);
    let max = observed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SummaryStats {
        mean,
        variance,
        min,
        max,
        missing: series.len() - observed.len(),
    })
}

pub(crate) fn nan_mean(values: &[f64]) -> f64 {
    let (sum, count) = values
        .iter()
        .filter(|v| !v.is_nan())
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count as f64
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / values.len() as f64
}

//! Cross-correlation of two series over positive and negative lags, with an
//! optional ARMA prewhitening step and white-noise significance bounds.
//!
//! Lag convention: the value at lag `h` is `corr(y_{t+h}, x_t)`, so a positive
//! lag means the covariate `x` leads the response `y`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::arma::{innovation_residuals, select_order, ArmaModel, MAX_SELECT_ORDER};
use crate::error::{Error, Result};
use crate::series::{nan_mean, TimeSeries, Z95};

/// Overlap length minus `max_lag` must be at least this.
pub const MIN_EFFECTIVE_OVERLAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CcfMode {
    Raw,
    /// Whiten the covariate with its own AICc-selected ARMA fit, keep `y` raw.
    #[default]
    PrewhitenedX,
    /// Filter both series with the covariate's fitted ARMA filter.
    PrewhitenedBoth,
}

impl std::str::FromStr for CcfMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" | "none" => Ok(CcfMode::Raw),
            "x" | "prewhitened-x" => Ok(CcfMode::PrewhitenedX),
            "both" | "prewhitened-both" => Ok(CcfMode::PrewhitenedBoth),
            other => Err(Error::invalid(format!("unknown CCF mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcfResult {
    /// `-max_lag..=max_lag`
    pub lags: Vec<i64>,
    pub correlations: Vec<f64>,
    /// Overlap length used for the bound.
    pub n: usize,
    pub bound: f64,
    pub mode: CcfMode,
    /// ARMA order fitted to the covariate in the prewhitened modes.
    pub selected_order: Option<(usize, usize)>,
    /// First time of the overlap window.
    pub overlap_start: i64,
}

impl CcfResult {
    pub fn max_lag(&self) -> i64 {
        *self.lags.last().unwrap_or(&0)
    }

    pub fn at(&self, lag: i64) -> Option<f64> {
        let idx = lag + self.max_lag();
        (idx >= 0)
            .then(|| self.correlations.get(idx as usize).copied())
            .flatten()
    }
}

fn overlap(x: &TimeSeries, y: &TimeSeries) -> Option<(i64, i64)> {
    let from = x.start_time().max(y.start_time());
    let to = x.end_time().min(y.end_time());
    (from <= to).then_some((from, to))
}

/// Sample cross-correlation `corr(y_{t+h}, x_t)` for `h` in `-max_lag..=max_lag`.
///
/// Both series are trimmed to their common time range; sums skip missing
/// pairs. The bound `1.96 / sqrt(n)` uses the full overlap length at every lag.
pub fn cross_correlation(x: &TimeSeries, y: &TimeSeries, max_lag: usize) -> Result<CcfResult> {
    let (from, to) = overlap(x, y)
        .ok_or_else(|| Error::invalid("series do not overlap in time"))?;
    let n = (to - from + 1) as usize;
    if n < max_lag + MIN_EFFECTIVE_OVERLAP {
        return Err(Error::invalid(format!(
            "overlap of {n} observations is too short for max_lag {max_lag} (need {})",
            max_lag + MIN_EFFECTIVE_OVERLAP
        )));
    }
    let xs = &x.values()[x.index_of(from).unwrap()..=x.index_of(to).unwrap()];
    let ys = &y.values()[y.index_of(from).unwrap()..=y.index_of(to).unwrap()];
    let (mx, my) = (nan_mean(xs), nan_mean(ys));
    let xc: Vec<f64> = xs.iter().map(|v| v - mx).collect();
    let yc: Vec<f64> = ys.iter().map(|v| v - my).collect();
    let sxx: f64 = xc.iter().filter(|v| !v.is_nan()).map(|v| v * v).sum();
    let syy: f64 = yc.iter().filter(|v| !v.is_nan()).map(|v| v * v).sum();
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(Error::DegenerateSeries(
            "cross-correlation of a constant series".into(),
        ));
    }
    let scale = (sxx * syy).sqrt();

    let max_lag = max_lag as i64;
    let lags: Vec<i64> = (-max_lag..=max_lag).collect();
    let correlations = lags
        .iter()
        .map(|&h| {
            let mut s = 0.0;
            for t in 0..n as i64 {
                let u = t + h;
                if u < 0 || u >= n as i64 {
                    continue;
                }
                let prod = yc[u as usize] * xc[t as usize];
                if !prod.is_nan() {
                    s += prod;
                }
            }
            (s / scale).clamp(-1.0, 1.0)
        })
        .collect();

    Ok(CcfResult {
        lags,
        correlations,
        n,
        bound: Z95 / (n as f64).sqrt(),
        mode: CcfMode::Raw,
        selected_order: None,
        overlap_start: from,
    })
}

/// Cross-correlation after whitening the covariate by an AICc-selected ARMA
/// model with orders up to `(p_max, q_max)`.
pub fn prewhitened_ccf(
    x: &TimeSeries,
    y: &TimeSeries,
    max_lag: usize,
    p_max: usize,
    q_max: usize,
    mode: CcfMode,
) -> Result<CcfResult> {
    if mode == CcfMode::Raw {
        return cross_correlation(x, y, max_lag);
    }
    if p_max > MAX_SELECT_ORDER || q_max > MAX_SELECT_ORDER {
        return Err(Error::invalid(format!(
            "prewhitening orders are limited to {MAX_SELECT_ORDER}"
        )));
    }
    // Fail on the overlap precondition before spending time on the fit.
    let (from, to) = overlap(x, y)
        .ok_or_else(|| Error::invalid("series do not overlap in time"))?;
    if ((to - from + 1) as usize) < max_lag + MIN_EFFECTIVE_OVERLAP {
        return cross_correlation(x, y, max_lag);
    }

    let (p, q, report) = select_order(x, p_max, q_max)?;
    let x_white = innovation_residuals(&report.model, x)?;
    let y_used = match mode {
        CcfMode::PrewhitenedBoth => {
            y.require_complete("double prewhitening")?;
            let filter = ArmaModel {
                mean: nan_mean(y.values()),
                ..report.model.clone()
            };
            innovation_residuals(&filter, y)?
        }
        _ => y.clone(),
    };
    let mut result = cross_correlation(&x_white, &y_used, max_lag)?;
    result.mode = mode;
    result.selected_order = Some((p, q));
    Ok(result)
}

/// Lags whose correlation exceeds the bound in magnitude, largest first.
/// Ties go to the smaller `|lag|`, then to the negative lag.
pub fn significant_lags(result: &CcfResult) -> Vec<(i64, f64)> {
    let mut hits: Vec<(i64, f64)> = result
        .lags
        .iter()
        .zip(&result.correlations)
        .filter(|(_, c)| c.abs() > result.bound)
        .map(|(&h, &c)| (h, c))
        .collect();
    hits.sort_by(rank_order);
    hits
}

pub(crate) fn rank_order(a: &(i64, f64), b: &(i64, f64)) -> Ordering {
    b.1.abs()
        .total_cmp(&a.1.abs())
        .then(a.0.abs().cmp(&b.0.abs()))
        .then(a.0.cmp(&b.0))
}

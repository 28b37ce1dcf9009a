use serde::{Deserialize, Serialize};

use super::{fit_transfer_with, predict, LagSpec, TransferOptions};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const MIN_BLOCK_LEN: usize = 5;

/// Fits a model to a training series (held-out values are missing) and
/// predicts a contiguous time range.
pub trait ModelBuilder {
    fn fit_predict(&self, train: &TimeSeries, from: i64, to: i64) -> Result<Vec<f64>>;
}

impl<F> ModelBuilder for F
where
    F: Fn(&TimeSeries, i64, i64) -> Result<Vec<f64>>,
{
    fn fit_predict(&self, train: &TimeSeries, from: i64, to: i64) -> Result<Vec<f64>> {
        self(train, from, to)
    }
}

/// Predicts the training mean everywhere.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantMean;

impl ModelBuilder for ConstantMean {
    fn fit_predict(&self, train: &TimeSeries, from: i64, to: i64) -> Result<Vec<f64>> {
        let obs: Vec<f64> = train.values().iter().copied().filter(|v| !v.is_nan()).collect();
        if obs.is_empty() {
            return Err(Error::EmptySeries);
        }
        let m = obs.iter().sum::<f64>() / obs.len() as f64;
        Ok(vec![m; (to - from + 1) as usize])
    }
}

/// Lagged regression with ARMA errors, refitted per block.
#[derive(Debug, Clone)]
pub struct TransferBuilder {
    pub covariates: Vec<(TimeSeries, LagSpec)>,
    pub error_p: usize,
    pub error_q: usize,
    pub options: TransferOptions,
}

impl TransferBuilder {
    pub fn new(covariates: Vec<(TimeSeries, LagSpec)>, error_p: usize, error_q: usize) -> Self {
        Self {
            covariates,
            error_p,
            error_q,
            options: TransferOptions::default(),
        }
    }
}

impl ModelBuilder for TransferBuilder {
    fn fit_predict(&self, train: &TimeSeries, from: i64, to: i64) -> Result<Vec<f64>> {
        let model = fit_transfer_with(train, &self.covariates, self.error_p, self.error_q, self.options)?;
        let xs: Vec<TimeSeries> = self.covariates.iter().map(|(x, _)| x.clone()).collect();
        Ok(predict(&model, &xs, from, to)?.mean.into_values())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutBlock {
    pub from: i64,
    pub to: i64,
    pub predictions: Vec<f64>,
    /// Non-missing truth values scored.
    pub n: usize,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub blocks: Vec<HoldoutBlock>,
    pub pooled_rmse: f64,
    pub n: usize,
}

/// For each block: mask it, refit on the rest, predict it, score RMSE.
pub fn holdout_eval<B: ModelBuilder + ?Sized>(
    y: &TimeSeries,
    builder: &B,
    blocks: &[(i64, i64)],
) -> Result<HoldoutReport> {
    if blocks.is_empty() {
        return Err(Error::invalid("no holdout blocks"));
    }
    for &(from, to) in blocks {
        if from > to || ((to - from + 1) as usize) < MIN_BLOCK_LEN {
            return Err(Error::invalid(format!(
                "block {from}..={to} is shorter than {MIN_BLOCK_LEN}"
            )));
        }
        if from < y.start_time() || to > y.end_time() {
            return Err(Error::invalid(format!(
                "block {from}..={to} is outside the series range {}..={}",
                y.start_time(),
                y.end_time()
            )));
        }
    }
    let mut sorted = blocks.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[1].0 <= w[0].1) {
        return Err(Error::invalid(format!(
            "blocks {:?} and {:?} overlap",
            w[0], w[1]
        )));
    }

    let mut out = Vec::with_capacity(blocks.len());
    let (mut sse, mut total) = (0.0, 0usize);
    for &(from, to) in blocks {
        let mut masked = y.values().to_vec();
        let (i0, i1) = (y.index_of(from).unwrap(), y.index_of(to).unwrap());
        for v in &mut masked[i0..=i1] {
            *v = f64::NAN;
        }
        let train = TimeSeries::new(y.start_time(), masked)?;
        let predictions = builder.fit_predict(&train, from, to)?;
        if predictions.len() != i1 - i0 + 1 {
            return Err(Error::invalid(format!(
                "builder returned {} predictions for a block of {}",
                predictions.len(),
                i1 - i0 + 1
            )));
        }
        let (mut block_sse, mut n) = (0.0, 0usize);
        for (p, truth) in predictions.iter().zip(&y.values()[i0..=i1]) {
            if !truth.is_nan() {
                block_sse += (p - truth).powi(2);
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::invalid(format!("block {from}..={to} has no observed values")));
        }
        sse += block_sse;
        total += n;
        out.push(HoldoutBlock {
            from,
            to,
            predictions,
            n,
            rmse: (block_sse / n as f64).sqrt(),
        });
    }
    Ok(HoldoutReport {
        blocks: out,
        pooled_rmse: (sse / total as f64).sqrt(),
        n: total,
    })
}

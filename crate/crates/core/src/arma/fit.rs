use serde::{Deserialize, Serialize};

use super::profile::maximize;
use super::{innovation_residuals, ArmaModel};
use crate::error::{Error, Result};
use crate::series::{self, TimeSeries};

/// Largest AR or MA order searched by [`select_order`].
pub const MAX_SELECT_ORDER: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: ArmaModel,
    /// Whitened residuals on the data scale, one per observation.
    pub residuals: TimeSeries,
    pub loglik: f64,
    pub aicc: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitReport {
    pub fn order(&self) -> (usize, usize) {
        (self.model.p(), self.model.q())
    }
}

/// Corrected AIC with `k = p + q + 2` parameters (coefficients, mean, variance).
pub fn aicc(loglik: f64, n: usize, p: usize, q: usize) -> f64 {
    let k = (p + q + 2) as f64;
    let n = n as f64;
    -2.0 * loglik + 2.0 * k * n / (n - k - 1.0)
}

/// Exact maximum-likelihood ARMA(p, q) fit.
///
/// The mean and innovation variance are concentrated out of the likelihood;
/// AR and MA coefficients are searched through the partial-autocorrelation
/// parameterization, so the result is always causal and invertible.
/// Non-convergence is reported through `converged`, not as an error.
pub fn fit(series: &TimeSeries, p: usize, q: usize) -> Result<FitReport> {
    series.require_complete("ARMA fitting")?;
    let n = series.len();
    let needed = 10 * (p + q + 1);
    if n < needed {
        return Err(Error::invalid(format!(
            "ARMA({p},{q}) needs at least {needed} observations (got {n})"
        )));
    }
    if series::variance(series.values()) <= 0.0 {
        return Err(Error::DegenerateSeries("constant series has zero variance".into()));
    }

    let ones = vec![vec![1.0; n]];
    let fitted = maximize(series.values(), &ones, p, q)?;
    let e = &fitted.eval;
    let model = ArmaModel {
        ar: e.ar.clone(),
        ma: e.ma.clone(),
        mean: e.beta[0],
        noise_variance: e.sigma2,
    };
    model.validate()?;
    let residuals = TimeSeries::new(
        series.start_time(),
        e.residual_innovations()
            .iter()
            .zip(&e.filter.variances)
            .map(|(v, f)| v / f.sqrt())
            .collect(),
    )?;

    Ok(FitReport {
        aicc: aicc(e.loglik, n, p, q),
        loglik: e.loglik,
        model,
        residuals,
        converged: fitted.converged,
        iterations: fitted.iterations,
    })
}

/// Fit every order in `0..=p_max` x `0..=q_max` and keep the smallest AICc.
///
/// Ties go to the smaller `p + q`, then the smaller `p`. Orders whose sample
/// size precondition fails are skipped; other fit errors propagate.
pub fn select_order(
    series: &TimeSeries,
    p_max: usize,
    q_max: usize,
) -> Result<(usize, usize, FitReport)> {
    if p_max > MAX_SELECT_ORDER || q_max > MAX_SELECT_ORDER {
        return Err(Error::invalid(format!(
            "order search is limited to p, q <= {MAX_SELECT_ORDER}"
        )));
    }
    let mut cells: Vec<(usize, usize)> = (0..=p_max)
        .flat_map(|p| (0..=q_max).map(move |q| (p, q)))
        .collect();
    cells.sort_by_key(|&(p, q)| (p + q, p));

    let mut best: Option<FitReport> = None;
    for (p, q) in cells {
        let report = match fit(series, p, q) {
            Ok(r) => r,
            Err(Error::InvalidArgument(_)) => continue,
            Err(e) => return Err(e),
        };
        // Cells are visited in tie-break order, so only a strict improvement wins.
        if best.as_ref().map_or(true, |b| report.aicc < b.aicc) {
            best = Some(report);
        }
    }
    let report = best.ok_or_else(|| {
        Error::NoModel(format!(
            "no ARMA order up to ({p_max},{q_max}) could be fitted to {} observations",
            series.len()
        ))
    })?;
    let (p, q) = report.order();
    Ok((p, q, report))
}

/// Whitened residuals of `series` under a fitted model.
pub fn whiten(series: &TimeSeries, report: &FitReport) -> Result<TimeSeries> {
    if series.len() != report.residuals.len() {
        return Err(Error::invalid(format!(
            "series length {} does not match the fitted length {}",
            series.len(),
            report.residuals.len()
        )));
    }
    series.require_complete("whitening")?;
    innovation_residuals(&report.model, series)
}

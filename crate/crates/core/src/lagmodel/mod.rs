//! Lag scanning and regression of a response on lagged covariates with ARMA
//! errors.
//!
//! Offset convention: a [`LagSpec`] offset `l` regresses `response_t` on
//! `covariate_{t+l}`, so a negative offset uses past covariate values. The
//! cross-correlation lag `h` of [`lag_scan`] (covariate leads by `h`) maps to
//! regression offset `-h`. Every fitted model carries its equation spelled out.

mod holdout;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use holdout::{holdout_eval, ConstantMean, HoldoutBlock, HoldoutReport, ModelBuilder, TransferBuilder};

use crate::arma::kalman::StateSpace;
use crate::arma::profile::maximize;
use crate::arma::ArmaModel;
use crate::ccf::{prewhitened_ccf, rank_order, CcfMode};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const MAX_OFFSET: i64 = 40;
/// Overlap minus `max_lag` required by [`lag_scan`].
pub const MIN_SCAN_OVERLAP: usize = 20;
/// Order grid for prewhitening in [`lag_scan`].
pub const SCAN_P_MAX: usize = 3;
pub const SCAN_Q_MAX: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagSpec {
    pub label: String,
    pub offsets: Vec<i64>,
}

impl LagSpec {
    pub fn new(label: impl Into<String>, offsets: Vec<i64>) -> Result<Self> {
        let spec = Self {
            label: label.into(),
            offsets,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.offsets.is_empty() {
            return Err(Error::invalid(format!("lag spec '{}' has no offsets", self.label)));
        }
        for (i, o) in self.offsets.iter().enumerate() {
            if o.abs() > MAX_OFFSET {
                return Err(Error::invalid(format!(
                    "offset {o} of '{}' exceeds {MAX_OFFSET} in magnitude",
                    self.label
                )));
            }
            if self.offsets[..i].contains(o) {
                return Err(Error::invalid(format!(
                    "offset {o} of '{}' is repeated",
                    self.label
                )));
            }
        }
        Ok(())
    }
}

/// `t`, `t-3`, `t+14`
pub fn time_index(offset: i64) -> String {
    match offset {
        0 => "t".into(),
        o if o > 0 => format!("t+{o}"),
        o => format!("t{o}"),
    }
}

fn term_name(label: &str, offset: i64) -> String {
    format!("{label}_{{{}}}", time_index(offset))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagScore {
    /// Cross-correlation lag: the covariate leads the response by `lag`.
    pub lag: i64,
    /// The same alignment as a regression offset (`-lag`).
    pub regression_offset: i64,
    pub correlation: f64,
    /// `|correlation|`
    pub score: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagScan {
    /// Every lag, strongest first.
    pub entries: Vec<LagScore>,
    pub bound: f64,
    pub n: usize,
    pub mode: CcfMode,
    pub selected_order: Option<(usize, usize)>,
}

impl LagScan {
    pub fn significant(&self) -> impl Iterator<Item = &LagScore> {
        self.entries.iter().filter(|e| e.significant)
    }

    pub fn top(&self) -> Option<&LagScore> {
        self.entries.first()
    }
}

/// Rank lags `-max_lag..=max_lag` by absolute cross-correlation, optionally
/// after whitening the covariate.
pub fn lag_scan(y: &TimeSeries, x: &TimeSeries, max_lag: usize, prewhiten: bool) -> Result<LagScan> {
    let from = x.start_time().max(y.start_time());
    let to = x.end_time().min(y.end_time());
    let overlap = if from <= to { (to - from + 1) as usize } else { 0 };
    if overlap < max_lag + MIN_SCAN_OVERLAP {
        return Err(Error::invalid(format!(
            "overlap of {overlap} observations is too short for max_lag {max_lag} (need {})",
            max_lag + MIN_SCAN_OVERLAP
        )));
    }
    let mode = if prewhiten { CcfMode::PrewhitenedX } else { CcfMode::Raw };
    let ccf = prewhitened_ccf(x, y, max_lag, SCAN_P_MAX, SCAN_Q_MAX, mode)?;
    let mut pairs: Vec<(i64, f64)> = ccf.lags.iter().copied().zip(ccf.correlations.iter().copied()).collect();
    pairs.sort_by(rank_order);
    let entries = pairs
        .into_iter()
        .map(|(lag, c)| LagScore {
            lag,
            regression_offset: -lag,
            correlation: c,
            score: c.abs(),
            significant: c.abs() > ccf.bound,
        })
        .collect();
    Ok(LagScan {
        entries,
        bound: ccf.bound,
        n: ccf.n,
        mode,
        selected_order: ccf.selected_order,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferOptions {
    pub intercept: bool,
}

impl Default for TransferOptions {
    fn default() -> Self {
        Self { intercept: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferTerm {
    pub label: String,
    pub offset: i64,
    pub coefficient: f64,
    pub std_error: f64,
    /// All-zero regressor on the fit window; held at zero.
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferModel {
    pub intercept: Option<f64>,
    pub intercept_std_error: Option<f64>,
    pub terms: Vec<TransferTerm>,
    /// Zero-mean ARMA model of the regression errors.
    pub noise: ArmaModel,
    pub specs: Vec<LagSpec>,
    pub fit_start: i64,
    pub fit_end: i64,
    pub n_obs: usize,
    pub loglik: f64,
    pub aicc: f64,
    /// Share of response variance explained by the regression part alone.
    pub r_squared: f64,
    pub converged: bool,
    pub iterations: usize,
    pub equation: String,
    /// One-step fitted values on the fit window.
    pub fitted: TimeSeries,
    /// `response - fitted`; missing where the response is.
    pub residuals: TimeSeries,
    /// `response - X beta` on the fit window.
    pub regression_errors: TimeSeries,
    /// Covariance of the active coefficients (intercept first, then undropped terms).
    pub covariance: Vec<Vec<f64>>,
}

impl TransferModel {
    pub fn coefficient(&self, label: &str, offset: i64) -> Option<f64> {
        self.terms
            .iter()
            .find(|t| t.label == label && t.offset == offset)
            .map(|t| t.coefficient)
    }

    fn active_row(&self, raw: &[f64]) -> Vec<f64> {
        let mut row = Vec::with_capacity(self.covariance.len());
        if self.intercept.is_some() {
            row.push(1.0);
        }
        row.extend(
            self.terms
                .iter()
                .zip(raw)
                .filter(|(t, _)| !t.dropped)
                .map(|(_, v)| *v),
        );
        row
    }

    fn regression_value(&self, raw: &[f64]) -> f64 {
        self.intercept.unwrap_or(0.0)
            + self
                .terms
                .iter()
                .zip(raw)
                .map(|(t, v)| t.coefficient * v)
                .sum::<f64>()
    }
}

/// Values of every (covariate, offset) regressor at time `t`.
fn regressors_at(covariates: &[&TimeSeries], specs: &[LagSpec], t: i64) -> Result<Vec<f64>> {
    let mut row = Vec::new();
    for (x, spec) in covariates.iter().zip(specs) {
        for &o in &spec.offsets {
            match x.get(t + o) {
                Some(v) if !v.is_nan() => row.push(v),
                _ => {
                    return Err(Error::Coverage {
                        label: spec.label.clone(),
                        time: t,
                        offset: o,
                    })
                }
            }
        }
    }
    Ok(row)
}

pub fn fit_transfer(
    y: &TimeSeries,
    covariates: &[(TimeSeries, LagSpec)],
    error_p: usize,
    error_q: usize,
) -> Result<TransferModel> {
    fit_transfer_with(y, covariates, error_p, error_q, TransferOptions::default())
}

/// Regression of `y` on lagged covariates with ARMA(p, q) errors by exact
/// maximum likelihood.
///
/// The fit window is the span of `y` on which every lagged regressor exists.
/// Missing response values inside it are skipped by the likelihood (this is how
/// block holdout masks data); missing covariate values are a coverage error.
pub fn fit_transfer_with(
    y: &TimeSeries,
    covariates: &[(TimeSeries, LagSpec)],
    error_p: usize,
    error_q: usize,
    options: TransferOptions,
) -> Result<TransferModel> {
    for (_, spec) in covariates {
        spec.validate()?;
    }
    let specs: Vec<LagSpec> = covariates.iter().map(|(_, s)| s.clone()).collect();
    let xs: Vec<&TimeSeries> = covariates.iter().map(|(x, _)| x).collect();

    let mut start = y.start_time();
    let mut end = y.end_time();
    for (x, spec) in covariates {
        for &o in &spec.offsets {
            start = start.max(x.start_time() - o);
            end = end.min(x.end_time() - o);
        }
    }
    if start > end {
        return Err(Error::invalid("covariate lags leave no overlapping fit window"));
    }
    let yw = y.window(start, end)?;
    let n = yw.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| regressors_at(&xs, &specs, start + i as i64))
        .collect::<Result<_>>()?;

    let observed: Vec<usize> = (0..n).filter(|&i| !yw.values()[i].is_nan()).collect();
    let n_obs = observed.len();
    if n_obs == 0 {
        return Err(Error::EmptySeries);
    }
    let n_terms = rows.first().map_or(0, |r| r.len());
    if 10 * n_terms > n_obs {
        return Err(Error::invalid(format!(
            "{n_terms} lagged coefficients need at least {} observations (got {n_obs})",
            10 * n_terms
        )));
    }
    let needed = 10 * (error_p + error_q + 1);
    if n_obs < needed {
        return Err(Error::invalid(format!(
            "ARMA({error_p},{error_q}) errors need at least {needed} observations (got {n_obs})"
        )));
    }
    let y_obs: Vec<f64> = observed.iter().map(|&i| yw.values()[i]).collect();
    if crate::series::variance(&y_obs) <= 0.0 {
        return Err(Error::DegenerateSeries("constant response".into()));
    }

    // Screen regressors: all-zero columns are held at zero, dependent ones are an error.
    let mut names = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    if options.intercept {
        names.push("intercept".to_string());
        columns.push(vec![1.0; n]);
    }
    let mut dropped = vec![false; n_terms];
    let mut term_labels = Vec::with_capacity(n_terms);
    for (spec, _) in specs.iter().zip(0..) {
        for &o in &spec.offsets {
            term_labels.push((spec.label.clone(), o));
        }
    }
    for j in 0..n_terms {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        if observed.iter().all(|&i| col[i] == 0.0) {
            dropped[j] = true;
            continue;
        }
        names.push(term_name(&term_labels[j].0, term_labels[j].1));
        columns.push(col);
    }
    check_rank(&columns, &names, &observed)?;

    let fit = maximize(yw.values(), &columns, error_p, error_q)?;
    let e = &fit.eval;
    let noise = ArmaModel {
        ar: e.ar.clone(),
        ma: e.ma.clone(),
        mean: 0.0,
        noise_variance: e.sigma2,
    };
    noise.validate()?;

    let cov = &e.gls_inverse * e.sigma2;
    let se = |k: usize| cov[(k, k)].max(0.0).sqrt();
    let base = usize::from(options.intercept);
    let mut active = base;
    let mut terms = Vec::with_capacity(n_terms);
    for (j, (label, offset)) in term_labels.into_iter().enumerate() {
        if dropped[j] {
            terms.push(TransferTerm {
                label,
                offset,
                coefficient: 0.0,
                std_error: 0.0,
                dropped: true,
            });
        } else {
            terms.push(TransferTerm {
                label,
                offset,
                coefficient: e.beta[active],
                std_error: se(active),
                dropped: false,
            });
            active += 1;
        }
    }

    // Fitted values: regression part plus the filtered error prediction.
    let pred = &e.filter.predictions;
    let xb: Vec<f64> = (0..n)
        .map(|i| columns.iter().zip(&e.beta).map(|(c, b)| b * c[i]).sum())
        .collect();
    let fitted: Vec<f64> = (0..n)
        .map(|i| {
            let err_pred = pred[0][i]
                - e.beta
                    .iter()
                    .enumerate()
                    .map(|(j, b)| b * pred[j + 1][i])
                    .sum::<f64>();
            xb[i] + err_pred
        })
        .collect();
    let residuals: Vec<f64> = yw.values().iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let reg_errors: Vec<f64> = yw.values().iter().zip(&xb).map(|(y, f)| y - f).collect();

    let y_mean = y_obs.iter().sum::<f64>() / n_obs as f64;
    let tss: f64 = y_obs.iter().map(|v| (v - y_mean).powi(2)).sum();
    let rss: f64 = observed.iter().map(|&i| reg_errors[i].powi(2)).sum();

    let k = columns.len() + error_p + error_q + 1;
    let nf = n_obs as f64;
    let aicc = -2.0 * e.loglik + 2.0 * k as f64 * nf / (nf - k as f64 - 1.0);

    let mut model = TransferModel {
        intercept: options.intercept.then(|| e.beta[0]),
        intercept_std_error: options.intercept.then(|| se(0)),
        terms,
        noise,
        specs,
        fit_start: start,
        fit_end: end,
        n_obs,
        loglik: e.loglik,
        aicc,
        r_squared: 1.0 - rss / tss,
        converged: fit.converged,
        iterations: fit.iterations,
        equation: String::new(),
        fitted: TimeSeries::new(start, fitted)?,
        residuals: TimeSeries::new(start, residuals)?,
        regression_errors: TimeSeries::new(start, reg_errors)?,
        covariance: (0..cov.nrows())
            .map(|i| cov.row(i).iter().copied().collect())
            .collect(),
    };
    model.equation = equation(&model);
    Ok(model)
}

fn equation(m: &TransferModel) -> String {
    let mut s = String::from("response_t =");
    let mut first = true;
    let mut push = |s: &mut String, c: f64, what: Option<String>| {
        let sign = if c < 0.0 { "-" } else { "+" };
        let body = match what {
            Some(w) => format!("{:.6}*{w}", c.abs()),
            None => format!("{:.6}", c.abs()),
        };
        if first {
            s.push_str(&format!(" {}{body}", if c < 0.0 { "-" } else { "" }));
            first = false;
        } else {
            s.push_str(&format!(" {sign} {body}"));
        }
    };
    if let Some(b0) = m.intercept {
        push(&mut s, b0, None);
    }
    for t in m.terms.iter().filter(|t| !t.dropped) {
        push(&mut s, t.coefficient, Some(term_name(&t.label, t.offset)));
    }
    if first {
        s.push_str(" u_t");
    } else {
        s.push_str(" + u_t");
    }
    s.push_str(&format!(", u ~ ARMA({},{})", m.noise.p(), m.noise.q()));
    s
}

/// Modified Gram–Schmidt on the observed rows; columns that are (numerically)
/// combinations of earlier ones are reported together with those ones.
fn check_rank(columns: &[Vec<f64>], names: &[String], rows: &[usize]) -> Result<()> {
    let m = rows.len();
    let k = columns.len();
    if k == 0 {
        return Ok(());
    }
    if k > m {
        return Err(Error::Collinearity {
            columns: names.to_vec(),
        });
    }
    let a = DMatrix::from_fn(m, k, |i, j| columns[j][rows[i]]);
    let mut basis: Vec<nalgebra::DVector<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..k {
        let mut v = a.column(j).into_owned();
        let norm0 = v.norm();
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let norm = v.norm();
        if norm <= 1e-9 * norm0.max(f64::MIN_POSITIVE) {
            dependent.push(j);
        } else {
            basis.push(v / norm);
        }
    }
    if dependent.is_empty() {
        return Ok(());
    }
    // Name each dependent column along with the columns it duplicates.
    let mut involved: Vec<usize> = Vec::new();
    for &j in &dependent {
        let independent: Vec<usize> = (0..j).filter(|c| !dependent.contains(c)).collect();
        let sub = DMatrix::from_fn(m, independent.len(), |i, c| a[(i, independent[c])]);
        let coef = sub
            .clone()
            .svd(true, true)
            .solve(&a.column(j).into_owned(), 1e-12)
            .ok();
        if let Some(coef) = coef {
            for (c, w) in independent.iter().zip(coef.iter()) {
                if w.abs() > 1e-8 && !involved.contains(c) {
                    involved.push(*c);
                }
            }
        }
        involved.push(j);
    }
    involved.sort_unstable();
    involved.dedup();
    Err(Error::Collinearity {
        columns: involved.into_iter().map(|j| names[j].clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub mean: TimeSeries,
    /// Regression part `X beta` alone.
    pub regression: Vec<f64>,
    /// Innovation-only standard errors, `sigma * sqrt(F_t)`.
    pub innovation_std_errors: Vec<f64>,
    /// Innovation and coefficient uncertainty combined.
    pub std_errors: Vec<f64>,
}

/// Predict the response over `from..=to`.
///
/// Inside the fit window the prediction is the one-step forecast given the
/// earlier regression errors; after it the errors are forecast forward from
/// the end of the window, and before it they are backcast from its start.
pub fn predict(model: &TransferModel, covariates: &[TimeSeries], from: i64, to: i64) -> Result<Prediction> {
    if covariates.len() != model.specs.len() {
        return Err(Error::invalid(format!(
            "model has {} covariates, {} supplied",
            model.specs.len(),
            covariates.len()
        )));
    }
    if from > to {
        return Err(Error::invalid(format!("empty prediction range {from}..={to}")));
    }
    let xs: Vec<&TimeSeries> = covariates.iter().collect();
    let len = (to - from + 1) as usize;
    let raw: Vec<Vec<f64>> = (0..len)
        .map(|i| regressors_at(&xs, &model.specs, from + i as i64))
        .collect::<Result<_>>()?;

    let errors = error_forecasts(model, from, to)?;
    let s2 = model.noise.noise_variance;
    let mut mean = Vec::with_capacity(len);
    let mut regression = Vec::with_capacity(len);
    let mut inn_se = Vec::with_capacity(len);
    let mut total_se = Vec::with_capacity(len);
    for (row, (e, f)) in raw.iter().zip(errors) {
        let xb = model.regression_value(row);
        let a = model.active_row(row);
        let coef_var: f64 = a
            .iter()
            .enumerate()
            .map(|(i, ai)| {
                ai * a
                    .iter()
                    .enumerate()
                    .map(|(j, aj)| model.covariance[i][j] * aj)
                    .sum::<f64>()
            })
            .sum();
        regression.push(xb);
        mean.push(xb + e);
        inn_se.push((s2 * f).sqrt());
        total_se.push((s2 * f + coef_var.max(0.0)).sqrt());
    }
    Ok(Prediction {
        mean: TimeSeries::new(from, mean)?,
        regression,
        innovation_std_errors: inn_se,
        std_errors: total_se,
    })
}

/// `(forecast, variance / sigma^2)` of the regression error at each time.
fn error_forecasts(model: &TransferModel, from: i64, to: i64) -> Result<Vec<(f64, f64)>> {
    let ss = StateSpace::new(&model.noise.ar, &model.noise.ma);
    let u = model.regression_errors.values();
    let forward = ss.filter(&[u])?;
    let (start, end) = (model.fit_start, model.fit_end);

    let ahead = |steps: usize, out: &FilterTail| -> Vec<(f64, f64)> {
        let mut a = out.state.clone();
        let mut p = out.cov.clone();
        let mut scratch = vec![0.0; p.len()];
        let mut res = Vec::with_capacity(steps);
        for h in 0..steps {
            if h > 0 {
                ss.advance_state(&mut a);
                ss.advance_cov(&mut p, &mut scratch);
            }
            res.push((a[0], p[0]));
        }
        res
    };

    let after = if to > end {
        ahead(
            (to - end) as usize,
            &FilterTail {
                state: forward.next_state[0].clone(),
                cov: forward.next_cov.clone(),
            },
        )
    } else {
        Vec::new()
    };
    let before = if from < start {
        // A stationary Gaussian ARMA process reversed in time has the same law.
        let rev: Vec<f64> = u.iter().rev().copied().collect();
        let back = ss.filter(&[&rev])?;
        ahead(
            (start - from) as usize,
            &FilterTail {
                state: back.next_state[0].clone(),
                cov: back.next_cov.clone(),
            },
        )
    } else {
        Vec::new()
    };

    Ok((from..=to)
        .map(|t| {
            if t < start {
                before[(start - t - 1) as usize]
            } else if t > end {
                after[(t - end - 1) as usize]
            } else {
                let i = (t - start) as usize;
                (forward.predictions[0][i], forward.prior_variances[i])
            }
        })
        .collect())
}

struct FilterTail {
    state: Vec<f64>,
    cov: Vec<f64>,
}

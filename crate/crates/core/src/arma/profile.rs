//! Regression with ARMA errors by concentrated maximum likelihood.
//!
//! For fixed ARMA coefficients the Kalman filter is linear in the data, so the
//! regression coefficients have a closed-form GLS solution computed from the
//! filtered innovations of `y` and of every design column, and the innovation
//! variance is the mean weighted squared residual. Only the AR/MA coefficients
//! are searched numerically, in the unconstrained partial-autocorrelation
//! parameterization. A plain ARMA fit is the special case whose design is a
//! single column of ones.

use nalgebra::{DMatrix, DVector};

use super::kalman::{FilterOutput, StateSpace};
use super::params::{
    ar_from_unconstrained, coefficients_to_pacf, ma_from_unconstrained, pacf_to_unconstrained,
};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};

#[derive(Debug, Clone)]
pub(crate) struct ProfileEval {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub loglik: f64,
    /// `(X~' X~)^{-1}` of the whitened design; multiply by sigma2 for Cov(beta).
    pub gls_inverse: DMatrix<f64>,
    /// Filter of `[y, x_1, .., x_k]`.
    pub filter: FilterOutput,
}

impl ProfileEval {
    /// Innovations of `y - X beta`.
    pub fn residual_innovations(&self) -> Vec<f64> {
        let inn = &self.filter.innovations;
        (0..inn[0].len())
            .map(|t| {
                inn[0][t]
                    - self
                        .beta
                        .iter()
                        .enumerate()
                        .map(|(j, b)| b * inn[j + 1][t])
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Evaluate the concentrated log-likelihood at given ARMA coefficients.
pub(crate) fn evaluate(y: &[f64], design: &[Vec<f64>], ar: &[f64], ma: &[f64]) -> Result<ProfileEval> {
    let mut columns: Vec<&[f64]> = Vec::with_capacity(design.len() + 1);
    columns.push(y);
    columns.extend(design.iter().map(|c| c.as_slice()));
    let filter = StateSpace::new(ar, ma).filter(&columns)?;

    let k = design.len();
    let mut xtx = DMatrix::<f64>::zeros(k, k);
    let mut xty = DVector::<f64>::zeros(k);
    let mut log_det = 0.0;
    let mut n_obs = 0usize;
    let inn = &filter.innovations;
    for t in filter.observed() {
        let w = 1.0 / filter.variances[t];
        log_det += filter.variances[t].ln();
        n_obs += 1;
        for a in 0..k {
            xty[a] += inn[a + 1][t] * inn[0][t] * w;
            for b in 0..=a {
                xtx[(a, b)] += inn[a + 1][t] * inn[b + 1][t] * w;
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            xtx[(b, a)] = xtx[(a, b)];
        }
    }
    if n_obs == 0 {
        return Err(Error::invalid("no observed values"));
    }

    let (beta, gls_inverse) = if k == 0 {
        (Vec::new(), DMatrix::zeros(0, 0))
    } else {
        let chol = xtx
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Collinearity {
                columns: vec!["<design>".into()],
            })?;
        let beta = chol.solve(&xty);
        (beta.iter().copied().collect(), chol.inverse())
    };

    let rss: f64 = filter
        .observed()
        .map(|t| {
            let fit: f64 = beta.iter().enumerate().map(|(j, b)| b * inn[j + 1][t]).sum();
            (inn[0][t] - fit).powi(2) / filter.variances[t]
        })
        .sum();
    let n = n_obs as f64;
    let sigma2 = rss / n;
    let loglik = -0.5 * (n * (2.0 * std::f64::consts::PI * sigma2).ln() + log_det + n);

    Ok(ProfileEval {
        ar: ar.to_vec(),
        ma: ma.to_vec(),
        beta,
        sigma2,
        loglik,
        gls_inverse,
        filter,
    })
}

#[derive(Debug, Clone)]
pub(crate) struct ProfileFit {
    pub eval: ProfileEval,
    pub converged: bool,
    pub iterations: usize,
}

/// Maximize the concentrated likelihood over ARMA(p, q) coefficients from
/// five deterministic starting points.
pub(crate) fn maximize(y: &[f64], design: &[Vec<f64>], p: usize, q: usize) -> Result<ProfileFit> {
    if p + q == 0 {
        let eval = evaluate(y, design, &[], &[])?;
        return Ok(ProfileFit {
            eval,
            converged: true,
            iterations: 0,
        });
    }

    let objective = |u: &[f64]| -> f64 {
        let ar = ar_from_unconstrained(&u[..p]);
        let ma = ma_from_unconstrained(&u[p..]);
        match evaluate(y, design, &ar, &ma) {
            Ok(e) if e.sigma2 > 0.0 => -e.loglik,
            _ => f64::INFINITY,
        }
    };

    // Screen every start loosely, then polish only the winner.
    let screen = NelderMeadOptions {
        diameter_tol: 1e-3,
        ..NelderMeadOptions::default()
    };
    let mut winner: Option<crate::optim::Minimum> = None;
    for start in starting_points(y, design, p, q) {
        let m = nelder_mead(&objective, &start, &screen);
        if winner.as_ref().map_or(true, |b| m.value < b.value) {
            winner = Some(m);
        }
    }
    let winner = winner.expect("at least one starting point");
    let polish = NelderMeadOptions {
        initial_step: 0.1,
        ..NelderMeadOptions::default()
    };
    let mut best = nelder_mead(&objective, &winner.point, &polish);
    best.iterations += winner.iterations;
    if !best.value.is_finite() {
        return Err(Error::DegenerateSeries(
            "likelihood is not finite at any starting point".into(),
        ));
    }
    let ar = ar_from_unconstrained(&best.point[..p]);
    let ma = ma_from_unconstrained(&best.point[p..]);
    Ok(ProfileFit {
        eval: evaluate(y, design, &ar, &ma)?,
        converged: best.converged,
        iterations: best.iterations,
    })
}

fn starting_points(y: &[f64], design: &[Vec<f64>], p: usize, q: usize) -> Vec<Vec<f64>> {
    let alternating = |len: usize, scale: f64| -> Vec<f64> {
        (0..len)
            .map(|k| if k % 2 == 0 { scale } else { -scale })
            .collect()
    };
    let to_u = |ar_pacf: Vec<f64>, ma_pacf: Vec<f64>| -> Vec<f64> {
        let mut u = pacf_to_unconstrained(&ar_pacf);
        u.extend(pacf_to_unconstrained(&ma_pacf));
        u
    };

    let sample = ols_residual_pacf(y, design, p.max(1));
    vec![
        to_u(
            sample[..p].iter().map(|r| r.clamp(-0.9, 0.9)).collect(),
            vec![0.0; q],
        ),
        vec![0.0; p + q],
        to_u(vec![0.5; p], vec![0.5; q]),
        to_u(vec![-0.5; p], vec![-0.5; q]),
        to_u(alternating(p, 0.3), alternating(q, -0.3)),
    ]
}

/// Sample partial autocorrelations of the OLS residuals, for starting values.
fn ols_residual_pacf(y: &[f64], design: &[Vec<f64>], max_lag: usize) -> Vec<f64> {
    let resid = ols_residuals(y, design);
    let obs: Vec<f64> = resid.into_iter().filter(|v| !v.is_nan()).collect();
    let n = obs.len();
    if n <= max_lag + 1 {
        return vec![0.0; max_lag];
    }
    let m = obs.iter().sum::<f64>() / n as f64;
    let acov: Vec<f64> = (0..=max_lag)
        .map(|h| {
            (h..n)
                .map(|t| (obs[t] - m) * (obs[t - h] - m))
                .sum::<f64>()
                / n as f64
        })
        .collect();
    if acov[0] <= 0.0 {
        return vec![0.0; max_lag];
    }
    let yw = levinson(&acov, max_lag);
    coefficients_to_pacf(&yw).unwrap_or_else(|| vec![0.0; max_lag])
}

/// Yule–Walker AR coefficients from autocovariances (Durbin–Levinson).
pub(crate) fn levinson(acov: &[f64], order: usize) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(order);
    let mut v = acov[0];
    for k in 0..order {
        let num = acov[k + 1] - phi.iter().enumerate().map(|(j, c)| c * acov[k - j]).sum::<f64>();
        let r = if v > 0.0 { num / v } else { 0.0 };
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - r * prev[k - 1 - j];
        }
        phi.push(r);
        v *= 1.0 - r * r;
    }
    phi
}

fn ols_residuals(y: &[f64], design: &[Vec<f64>]) -> Vec<f64> {
    let rows: Vec<usize> = (0..y.len()).filter(|&t| !y[t].is_nan()).collect();
    let k = design.len();
    if k == 0 || rows.is_empty() {
        return y.to_vec();
    }
    let x = DMatrix::from_fn(rows.len(), k, |i, j| design[j][rows[i]]);
    let yv = DVector::from_fn(rows.len(), |i, _| y[rows[i]]);
    let Some(beta) = (x.transpose() * &x)
        .cholesky()
        .map(|c| c.solve(&(x.transpose() * &yv)))
    else {
        return y.to_vec();
    };
    let mut out = vec![f64::NAN; y.len()];
    for (i, &t) in rows.iter().enumerate() {
        out[t] = y[t] - (0..k).map(|j| x[(i, j)] * beta[j]).sum::<f64>();
    }
    out
}

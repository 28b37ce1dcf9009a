//! ARMA(p, q) models: simulation, exact Gaussian likelihood, maximum-likelihood
//! fitting, order selection, whitening and residual diagnostics.
//!
//! Sign convention:
//! `x_t - mu = sum phi_j (x_{t-j} - mu) + z_t + sum theta_j z_{t-j}`, with
//! `z_t` IID N(0, sigma^2). An MA(1) with `theta = -1` therefore has lag-one
//! autocorrelation `-0.5`.

mod diagnostics;
mod fit;
pub(crate) mod kalman;
pub mod params;
pub(crate) mod profile;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub use diagnostics::{ljung_box, residual_diagnostics, LjungBox, Outlier, ResidualDiagnostics};
pub use fit::{fit, select_order, whiten, FitReport, MAX_SELECT_ORDER};

/// Companion matrices must have spectral radius below this.
pub const ROOT_MARGIN: f64 = 1.0 - 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaModel {
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub mean: f64,
    pub noise_variance: f64,
}

impl ArmaModel {
    pub fn new(ar: Vec<f64>, ma: Vec<f64>, mean: f64, noise_variance: f64) -> Result<Self> {
        let model = Self {
            ar,
            ma,
            mean,
            noise_variance,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn white_noise(mean: f64, noise_variance: f64) -> Result<Self> {
        Self::new(Vec::new(), Vec::new(), mean, noise_variance)
    }

    pub fn p(&self) -> usize {
        self.ar.len()
    }

    pub fn q(&self) -> usize {
        self.ma.len()
    }

    pub fn is_causal(&self) -> bool {
        polynomial_is_stable(&self.ar)
    }

    pub fn is_invertible(&self) -> bool {
        let c: Vec<f64> = self.ma.iter().map(|t| -t).collect();
        polynomial_is_stable(&c)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_scalars()?;
        if !self.is_causal() {
            return Err(Error::InvalidModel("AR polynomial is not causal".into()));
        }
        if !self.is_invertible() {
            return Err(Error::InvalidModel("MA polynomial is not invertible".into()));
        }
        Ok(())
    }

    fn validate_scalars(&self) -> Result<()> {
        if !(self.noise_variance > 0.0) || !self.noise_variance.is_finite() {
            return Err(Error::InvalidModel(format!(
                "noise variance must be positive (got {})",
                self.noise_variance
            )));
        }
        if !self.mean.is_finite() || self.ar.iter().chain(&self.ma).any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel("non-finite coefficient".into()));
        }
        Ok(())
    }
}

/// `1 - c_1 z - ... - c_p z^p` has all roots outside the unit circle with margin.
///
/// Polynomials whose step-down partial autocorrelations lie within
/// [`params::PACF_LIMIT`] are accepted directly (every fitted model is of this
/// form); others must have companion spectral radius below [`ROOT_MARGIN`].
/// Eigenvalues of nearly repeated roots are only accurate to about 1e-8, which
/// is why the exact step-down test comes first.
pub fn polynomial_is_stable(coef: &[f64]) -> bool {
    match params::coefficients_to_pacf(coef) {
        None => false,
        Some(pacf) if pacf.iter().all(|r| r.abs() <= params::PACF_LIMIT + 1e-9) => true,
        Some(_) => ar_spectral_radius(coef) < ROOT_MARGIN,
    }
}

/// Spectral radius of the companion matrix of `1 - c_1 z - ... - c_p z^p`,
/// i.e. the largest modulus of the reciprocal roots.
pub fn ar_spectral_radius(coef: &[f64]) -> f64 {
    let p = coef.len();
    if p == 0 {
        return 0.0;
    }
    if p == 1 {
        return coef[0].abs();
    }
    let companion = DMatrix::from_fn(p, p, |i, j| {
        if i == 0 {
            coef[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimulateOptions {
    /// Permit MA polynomials with roots on the unit circle (e.g. `theta = -1`).
    /// Explosive MA roots are still rejected.
    pub allow_unit_ma_root: bool,
}

/// Simulate `n` observations with a fixed-seed ChaCha8 generator.
///
/// For `p + q > 0`, `max(p, q) + 100` leading samples are generated from a zero
/// history and discarded. White noise needs no burn-in, so its output is the
/// raw normal stream scaled and shifted.
pub fn simulate(model: &ArmaModel, n: usize, seed: u64) -> Result<TimeSeries> {
    simulate_with(model, n, seed, SimulateOptions::default())
}

pub fn simulate_with(
    model: &ArmaModel,
    n: usize,
    seed: u64,
    opts: SimulateOptions,
) -> Result<TimeSeries> {
    if n == 0 {
        return Err(Error::invalid("simulation length must be positive"));
    }
    model.validate_scalars()?;
    if !model.is_causal() {
        return Err(Error::InvalidModel("AR polynomial is not causal".into()));
    }
    if !model.is_invertible() {
        let c: Vec<f64> = model.ma.iter().map(|t| -t).collect();
        let on_circle = ar_spectral_radius(&c) <= 1.0 + 1e-9;
        if !(opts.allow_unit_ma_root && on_circle) {
            return Err(Error::InvalidModel("MA polynomial is not invertible".into()));
        }
    }

    let (p, q) = (model.p(), model.q());
    let burn = if p + q == 0 { 0 } else { p.max(q) + 100 };
    let total = burn + n;
    let sd = model.noise_variance.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z: Vec<f64> = (0..total)
        .map(|_| sd * Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect();

    let mut x = vec![0.0; total];
    for t in 0..total {
        let mut v = z[t];
        for (j, phi) in model.ar.iter().enumerate() {
            if t > j {
                v += phi * x[t - 1 - j];
            }
        }
        for (j, theta) in model.ma.iter().enumerate() {
            if t > j {
                v += theta * z[t - 1 - j];
            }
        }
        x[t] = v;
    }
    let out = x[burn..].iter().map(|v| v + model.mean).collect();
    TimeSeries::from_values(out)
}

/// Exact Gaussian log-likelihood of a complete series under a causal model,
/// computed by the Kalman filter with stationary initial covariance.
pub fn log_likelihood(model: &ArmaModel, series: &TimeSeries) -> Result<f64> {
    series.require_complete("log_likelihood")?;
    model.validate_scalars()?;
    if !model.is_causal() {
        return Err(Error::InvalidModel("AR polynomial is not causal".into()));
    }
    let centered: Vec<f64> = series.values().iter().map(|y| y - model.mean).collect();
    let out = kalman::StateSpace::new(&model.ar, &model.ma).filter(&[&centered])?;
    let s2 = model.noise_variance;
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let ll = out
        .innovations[0]
        .iter()
        .zip(&out.variances)
        .map(|(v, f)| ln_2pi + (s2 * f).ln() + v * v / (s2 * f))
        .sum::<f64>();
    Ok(-0.5 * ll)
}

/// One-step prediction errors of `series` under `model`, standardized by their
/// prediction standard deviation and rescaled by `sigma`, so they sit on the
/// data scale with roughly constant variance. Missing inputs stay missing.
pub fn innovation_residuals(model: &ArmaModel, series: &TimeSeries) -> Result<TimeSeries> {
    model.validate_scalars()?;
    let centered: Vec<f64> = series.values().iter().map(|y| y - model.mean).collect();
    let out = kalman::StateSpace::new(&model.ar, &model.ma).filter(&[&centered])?;
    let resid = out.innovations[0]
        .iter()
        .zip(&out.variances)
        .map(|(v, f)| v / f.sqrt())
        .collect();
    TimeSeries::new(series.start_time(), resid)
}

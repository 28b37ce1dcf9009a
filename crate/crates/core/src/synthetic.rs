//! Seeded synthetic systems used as fixtures: a noisy random walk, lagged
//! transfer systems, a factor-driven proxy panel and piecewise AR series.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::arma::{simulate, ArmaModel};
use crate::error::{Error, Result};
use crate::pca::ProxyPanel;
use crate::series::TimeSeries;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    Distribution::<f64>::sample(&StandardNormal, rng)
}

/// `y_t = x_t + z_t`: a random walk with step s.d. `step_sd` plus IID noise.
pub fn random_walk_plus_noise(n: usize, step_sd: f64, noise_sd: f64, seed: u64) -> Result<TimeSeries> {
    if n == 0 || !(step_sd >= 0.0) || !(noise_sd >= 0.0) {
        return Err(Error::invalid("need n > 0 and non-negative standard deviations"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = 0.0;
    let values = (0..n)
        .map(|_| {
            level += step_sd * normal(&mut rng);
            level + noise_sd * normal(&mut rng)
        })
        .collect();
    TimeSeries::from_values(values)
}

/// A covariate and a response `y_t = coef * x_{t-lag} + e_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferSystem {
    pub covariate: TimeSeries,
    pub response: TimeSeries,
    pub lag: usize,
    pub coefficient: f64,
}

/// `x` follows `covariate_model`; `e` follows `error_model`. The covariate
/// starts `lag` steps before the response and ends `extra` steps after it,
/// so forecasts beyond the response window have covariate values.
pub fn transfer_system(
    n: usize,
    lag: usize,
    coefficient: f64,
    covariate_model: &ArmaModel,
    error_model: &ArmaModel,
    extra: usize,
    seed: u64,
) -> Result<TransferSystem> {
    let x = simulate(covariate_model, n + lag + extra, seed)?;
    let e = simulate(error_model, n, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let y: Vec<f64> = (0..n)
        .map(|i| coefficient * x.values()[i] + e.values()[i])
        .collect();
    Ok(TransferSystem {
        covariate: x,
        response: TimeSeries::new(lag as i64, y)?,
        lag,
        coefficient,
    })
}

/// A latent factor, a response lagging it, and a panel of noisy proxies of it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagPanel {
    /// Factor over the panel years.
    pub factor: TimeSeries,
    pub response: TimeSeries,
    pub panel: ProxyPanel,
    pub loadings: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagPanelConfig {
    pub start_time: i64,
    pub n: usize,
    pub n_proxies: usize,
    pub lag: usize,
    pub coefficient: f64,
    pub factor_ar: Vec<f64>,
    pub response_noise_sd: f64,
    pub proxy_noise_sd: f64,
}

impl Default for LagPanelConfig {
    fn default() -> Self {
        Self {
            start_time: 1850,
            n: 150,
            n_proxies: 50,
            lag: 14,
            coefficient: 0.5,
            factor_ar: vec![0.5, -0.3],
            response_noise_sd: 1.0,
            proxy_noise_sd: 1.0,
        }
    }
}

/// `y_t = coefficient * f_{t-lag} + noise`, proxies `lambda_j f_t + noise`
/// with loadings drawn from U(0.5, 1.5). Response and panel share years.
pub fn lag_panel(cfg: &LagPanelConfig, seed: u64) -> Result<LagPanel> {
    if cfg.n < 2 || cfg.n_proxies == 0 {
        return Err(Error::invalid("lag panel needs n >= 2 and at least one proxy"));
    }
    let model = ArmaModel::new(cfg.factor_ar.clone(), vec![], 0.0, 1.0)?;
    let f = simulate(&model, cfg.n + cfg.lag, seed)?;
    let fv = f.values();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5851_f42d_4c95_7f2d));
    let response: Vec<f64> = (0..cfg.n)
        .map(|i| cfg.coefficient * fv[i] + cfg.response_noise_sd * normal(&mut rng))
        .collect();
    let loadings: Vec<f64> = (0..cfg.n_proxies).map(|_| rng.random_range(0.5..1.5)).collect();
    let factor = &fv[cfg.lag..];
    let values = DMatrix::from_fn(cfg.n, cfg.n_proxies, |t, j| {
        loadings[j] * factor[t] + cfg.proxy_noise_sd * normal(&mut rng)
    });
    let ids = (0..cfg.n_proxies).map(|j| format!("proxy{j:03}")).collect();
    Ok(LagPanel {
        factor: TimeSeries::new(cfg.start_time, factor.to_vec())?,
        response: TimeSeries::new(cfg.start_time, response)?,
        panel: ProxyPanel::new(cfg.start_time, ids, values)?,
        loadings,
    })
}

/// Concatenated AR segments `(length, ar, noise variance)`, each simulated
/// from its own stationary start.
pub fn piecewise_ar(segments: &[(usize, Vec<f64>, f64)], seed: u64) -> Result<TimeSeries> {
    let mut values = Vec::new();
    for (k, (len, ar, var)) in segments.iter().enumerate() {
        let model = ArmaModel::new(ar.clone(), vec![], 0.0, *var)?;
        let part = simulate(&model, *len, seed.wrapping_mul(31).wrapping_add(k as u64))?;
        values.extend_from_slice(part.values());
    }
    TimeSeries::from_values(values)
}

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};
use crate::series::{sample_acf, variance, TimeSeries};

/// Robust z-scores beyond this magnitude are reported as outliers.
pub const OUTLIER_Z: f64 = 3.0;
/// Scales the median absolute deviation to a normal standard deviation.
pub const MAD_SCALE: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outlier {
    pub time: i64,
    pub index: usize,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualDiagnostics {
    pub outliers: Vec<Outlier>,
    /// Median absolute deviation times 1.4826.
    pub robust_scale: f64,
    /// Sample variance of the last third over that of the first two thirds.
    pub variance_ratio: f64,
    /// Two-sided F-test p-value for `variance_ratio`.
    pub variance_p_value: f64,
    /// First time of the final third.
    pub split_time: i64,
}

pub fn residual_diagnostics(residuals: &TimeSeries) -> Result<ResidualDiagnostics> {
    let n = residuals.len();
    if n < 30 {
        return Err(Error::invalid(format!(
            "residual diagnostics need at least 30 values (got {n})"
        )));
    }
    residuals.require_complete("residual diagnostics")?;
    let v = residuals.values();

    let center = median(v);
    let deviations: Vec<f64> = v.iter().map(|x| (x - center).abs()).collect();
    let robust_scale = MAD_SCALE * median(&deviations);
    let outliers = if robust_scale > 0.0 {
        v.iter()
            .enumerate()
            .map(|(i, x)| (i, (x - center) / robust_scale))
            .filter(|(_, z)| z.abs() > OUTLIER_Z)
            .map(|(index, z)| Outlier {
                time: residuals.time_at(index),
                index,
                z,
            })
            .collect()
    } else {
        Vec::new()
    };

    let split = n - n / 3;
    let (head, tail) = v.split_at(split);
    let ratio = sample_var(tail) / sample_var(head);
    let p_value = if ratio.is_finite() && ratio > 0.0 {
        let f = FisherSnedecor::new((tail.len() - 1) as f64, (head.len() - 1) as f64)
            .expect("positive degrees of freedom");
        let lower = f.cdf(ratio);
        (2.0 * lower.min(1.0 - lower)).min(1.0)
    } else {
        f64::NAN
    };

    Ok(ResidualDiagnostics {
        outliers,
        robust_scale,
        variance_ratio: ratio,
        variance_p_value: p_value,
        split_time: residuals.time_at(split),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LjungBox {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Ljung–Box portmanteau statistic over lags `1..=lags`, with
/// `lags - fitted_params` degrees of freedom.
pub fn ljung_box(series: &TimeSeries, lags: usize, fitted_params: usize) -> Result<LjungBox> {
    if fitted_params >= lags {
        return Err(Error::invalid("Ljung–Box needs more lags than fitted parameters"));
    }
    let acf = sample_acf(series, lags)?;
    let n = acf.n as f64;
    let statistic = n
        * (n + 2.0)
        * (1..=lags)
            .map(|h| acf.correlations[h].powi(2) / (n - h as f64))
            .sum::<f64>();
    let df = lags - fitted_params;
    let chi = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    Ok(LjungBox {
        statistic,
        df,
        p_value: 1.0 - chi.cdf(statistic),
    })
}

fn sample_var(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    variance(v) * n / (n - 1.0)
}

pub(crate) fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arma::{simulate, ArmaModel};

    fn noise(n: usize, sd: f64, seed: u64) -> Vec<f64> {
        simulate(&ArmaModel::white_noise(0.0, sd * sd).unwrap(), n, seed)
            .unwrap()
            .into_values()
    }

    #[test]
    fn iid_outlier_count_is_plausible() {
        let s = TimeSeries::from_values(noise(1000, 1.0, 77)).unwrap();
        let d = residual_diagnostics(&s).unwrap();
        assert!(d.outliers.len() <= 9, "{} outliers", d.outliers.len());
        assert!((d.robust_scale - 1.0).abs() < 0.1);
    }

    #[test]
    fn single_spike_is_the_only_outlier() {
        let mut v: Vec<f64> = noise(60, 0.01, 3);
        v[37] = 10.0;
        let s = TimeSeries::new(1900, v).unwrap();
        let d = residual_diagnostics(&s).unwrap();
        assert_eq!(d.outliers.len(), 1);
        assert_eq!(d.outliers[0].index, 37);
        assert_eq!(d.outliers[0].time, 1937);
        assert!(d.outliers[0].z > 0.0);
    }

    #[test]
    fn variance_increase_is_detected() {
        let mut v = noise(100, 1.0, 5);
        v.extend(noise(50, 2.0, 6));
        let d = residual_diagnostics(&TimeSeries::from_values(v).unwrap()).unwrap();
        assert!(d.variance_ratio > 2.5, "ratio {}", d.variance_ratio);
        assert!(d.variance_p_value < 0.01, "p {}", d.variance_p_value);
        assert_eq!(d.split_time, 100);
    }

    #[test]
    fn short_input_is_rejected() {
        let s = TimeSeries::from_values(noise(29, 1.0, 1)).unwrap();
        assert!(residual_diagnostics(&s).is_err());
    }

    #[test]
    fn ljung_box_on_white_noise_is_unremarkable() {
        let s = TimeSeries::from_values(noise(500, 1.0, 9)).unwrap();
        let lb = ljung_box(&s, 20, 0).unwrap();
        assert_eq!(lb.df, 20);
        assert!(lb.p_value > 0.01);
    }
}

//! Time-series diagnostics and proxy-based reconstruction tools.
//!
//! The pipeline this crate supports: difference a response series and inspect
//! its autocorrelation, fit ARMA models by exact likelihood and whiten a
//! covariate, cross-correlate the whitened covariate against the response over
//! positive and negative lags, reduce a proxy panel to principal-component
//! scores, regress the response on lagged covariates with ARMA errors, and
//! locate structural breaks with an MDL piecewise-autoregressive criterion.

pub mod arma;
pub mod ccf;
pub mod error;
pub mod io;
pub mod lagmodel;
pub mod optim;
pub mod pca;
pub mod segmentation;
pub mod series;
pub mod synthetic;

pub use error::{Error, Result};
pub use series::{difference, sample_acf, summary_stats, AcfResult, SummaryStats, TimeSeries};
pub use ccf::{cross_correlation, prewhitened_ccf, significant_lags, CcfMode, CcfResult};
pub use pca::{decompose, score_series, PcaDecomposition, ProxyPanel};
pub use segmentation::{mdl_score, segment, Segmentation};
pub use lagmodel::{fit_transfer, holdout_eval, lag_scan, predict, LagSpec, TransferModel};

//! Principal components of a proxy panel (years x proxies).

use std::collections::HashSet;

use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// A panel of proxy series on a shared annual axis. Missing cells are `NaN`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxyPanel {
    start_time: i64,
    proxy_ids: Vec<String>,
    values: DMatrix<f64>,
}

impl ProxyPanel {
    pub fn new(start_time: i64, proxy_ids: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::invalid("a panel needs at least two years"));
        }
        if values.ncols() == 0 || values.ncols() != proxy_ids.len() {
            return Err(Error::invalid(format!(
                "{} labels for {} panel columns",
                proxy_ids.len(),
                values.ncols()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = proxy_ids.iter().find(|id| !seen.insert(id.as_str())) {
            return Err(Error::invalid(format!("duplicate proxy label '{dup}'")));
        }
        Ok(Self {
            start_time,
            proxy_ids,
            values,
        })
    }

    /// Build from equally long columns.
    pub fn from_columns(start_time: i64, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.1.len());
        if columns.iter().any(|c| c.1.len() != rows) {
            return Err(Error::invalid("panel columns differ in length"));
        }
        let values = DMatrix::from_fn(rows, columns.len(), |i, j| columns[j].1[i]);
        Self::new(start_time, columns.into_iter().map(|c| c.0).collect(), values)
    }

    pub fn start_time(&self) -> i64 {
        self.start_time
    }

    pub fn end_time(&self) -> i64 {
        self.start_time + self.values.nrows() as i64 - 1
    }

    pub fn n_years(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_proxies(&self) -> usize {
        self.values.ncols()
    }

    pub fn proxy_ids(&self) -> &[String] {
        &self.proxy_ids
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column(&self, j: usize) -> TimeSeries {
        TimeSeries::new(self.start_time, self.values.column(j).iter().copied().collect())
            .expect("panel has at least two rows")
    }

    pub fn is_missing(&self, year_index: usize, proxy: usize) -> bool {
        self.values[(year_index, proxy)].is_nan()
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    /// Rows restricted to the inclusive year range.
    pub fn window(&self, from: i64, to: i64) -> Result<Self> {
        if from < self.start_time || to > self.end_time() || from > to {
            return Err(Error::invalid(format!(
                "window [{from}, {to}] is outside the panel range [{}, {}]",
                self.start_time,
                self.end_time()
            )));
        }
        let i = (from - self.start_time) as usize;
        let len = (to - from + 1) as usize;
        Self::new(from, self.proxy_ids.clone(), self.values.rows(i, len).into_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaDecomposition {
    pub start_time: i64,
    pub proxy_ids: Vec<String>,
    /// n_proxies x k, orthonormal columns.
    pub loadings: DMatrix<f64>,
    /// n_years x k.
    pub scores: DMatrix<f64>,
    /// Squared singular values over n_years, nonincreasing.
    pub explained_variance: Vec<f64>,
    /// Sum of column variances of the preprocessed matrix.
    pub total_variance: f64,
    pub column_means: Vec<f64>,
    /// Column standard deviations (divisor n) when standardized, else ones.
    pub column_scales: Vec<f64>,
    pub standardized: bool,
    /// Missing cells replaced by their column mean.
    pub imputed_count: usize,
}

impl PcaDecomposition {
    pub fn k(&self) -> usize {
        self.explained_variance.len()
    }

    /// Preprocess a panel row the same way the decomposition did.
    pub fn preprocess(&self, panel: &ProxyPanel) -> DMatrix<f64> {
        let v = panel.values();
        DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| {
            let x = if v[(i, j)].is_nan() {
                self.column_means[j]
            } else {
                v[(i, j)]
            };
            (x - self.column_means[j]) / self.column_scales[j]
        })
    }
}

/// Principal components via SVD of the centered (and optionally standardized)
/// panel. Missing cells are imputed with their column mean first.
///
/// Each loading column is signed so its entry of largest magnitude is positive
/// (first such entry on exact ties).
pub fn decompose(panel: &ProxyPanel, k: usize, standardize: bool) -> Result<PcaDecomposition> {
    let (n, m) = (panel.n_years(), panel.n_proxies());
    let k_max = (n - 1).min(m);
    if k == 0 || k > k_max {
        return Err(Error::invalid(format!(
            "number of components must be in 1..={k_max} (got {k})"
        )));
    }

    let raw = panel.values();
    let mut column_means = Vec::with_capacity(m);
    let mut column_scales = Vec::with_capacity(m);
    for j in 0..m {
        let observed: Vec<f64> = raw.column(j).iter().copied().filter(|v| !v.is_nan()).collect();
        if observed.is_empty() {
            return Err(Error::DegenerateColumn {
                column: panel.proxy_ids[j].clone(),
            });
        }
        let mean = observed.iter().sum::<f64>() / observed.len() as f64;
        column_means.push(mean);
        if standardize {
            // Imputed cells sit at the mean and add nothing to the sum of squares.
            let ss: f64 = observed.iter().map(|v| (v - mean).powi(2)).sum();
            let sd = (ss / n as f64).sqrt();
            if !(sd > 1e-12 * mean.abs().max(1.0)) {
                return Err(Error::DegenerateColumn {
                    column: panel.proxy_ids[j].clone(),
                });
            }
            column_scales.push(sd);
        } else {
            column_scales.push(1.0);
        }
    }

    let imputed_count = panel.missing_count();
    let x = DMatrix::from_fn(n, m, |i, j| {
        let v = raw[(i, j)];
        let v = if v.is_nan() { column_means[j] } else { v };
        (v - column_means[j]) / column_scales[j]
    });
    let total_variance = x.iter().map(|v| v * v).sum::<f64>() / n as f64;

    let svd = SVD::new(x.clone(), false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut loadings = DMatrix::<f64>::zeros(m, k);
    let mut explained_variance = Vec::with_capacity(k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        let mut col: Vec<f64> = v_t.row(idx).iter().copied().collect();
        let pivot = col
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, v)| if v.abs() > best.1 { (i, v.abs()) } else { best })
            .0;
        if col[pivot] < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
        for (r, v) in col.into_iter().enumerate() {
            loadings[(r, c)] = v;
        }
        explained_variance.push(svd.singular_values[idx].powi(2) / n as f64);
    }
    let scores = &x * &loadings;

    Ok(PcaDecomposition {
        start_time: panel.start_time(),
        proxy_ids: panel.proxy_ids.clone(),
        loadings,
        scores,
        explained_variance,
        total_variance,
        column_means,
        column_scales,
        standardized: standardize,
        imputed_count,
    })
}

/// Score series of one component on the panel's year axis.
pub fn score_series(decomp: &PcaDecomposition, component: usize) -> Result<TimeSeries> {
    if component >= decomp.k() {
        return Err(Error::invalid(format!(
            "component {component} out of range (k = {})",
            decomp.k()
        )));
    }
    TimeSeries::new(
        decomp.start_time,
        decomp.scores.column(component).iter().copied().collect(),
    )
}

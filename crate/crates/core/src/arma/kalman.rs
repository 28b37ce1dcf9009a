//! Kalman filter for a zero-mean ARMA(p, q) process with unit innovation variance.
//!
//! State dimension `r = max(p, q + 1)`, transition with the AR coefficients in
//! the first column and ones on the superdiagonal, loading `(1, theta_1, ..)`,
//! and observation picking the first state. The filter runs several columns
//! through the same (shared) covariance recursion, which is what GLS on a
//! regression design needs. Missing values in the first column mark a time as
//! unobserved for every column.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct StateSpace {
    r: usize,
    /// AR coefficients padded with zeros to length r.
    phi: Vec<f64>,
    /// Innovation loading (1, theta_1, ..., theta_{r-1}).
    load: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct FilterOutput {
    /// One-step prediction errors per column; NaN at unobserved times.
    pub innovations: Vec<Vec<f64>>,
    /// Prediction-error variances in units of the innovation variance; NaN when unobserved.
    pub variances: Vec<f64>,
    /// One-step predictions `a_{t|t-1}[0]` per column, at every time.
    pub predictions: Vec<Vec<f64>>,
    /// `P_{t|t-1}[0, 0]` at every time, observed or not.
    pub prior_variances: Vec<f64>,
    /// Predicted state `a_{n+1|n}` per column.
    pub next_state: Vec<Vec<f64>>,
    /// Predicted state covariance `P_{n+1|n}` (row-major).
    pub next_cov: Vec<f64>,
}

impl FilterOutput {
    pub fn observed(&self) -> impl Iterator<Item = usize> + '_ {
        self.variances
            .iter()
            .enumerate()
            .filter(|(_, f)| !f.is_nan())
            .map(|(t, _)| t)
    }
}

impl StateSpace {
    pub fn new(ar: &[f64], ma: &[f64]) -> Self {
        let r = ar.len().max(ma.len() + 1);
        let mut phi = vec![0.0; r];
        phi[..ar.len()].copy_from_slice(ar);
        let mut load = vec![0.0; r];
        load[0] = 1.0;
        load[1..=ma.len()].copy_from_slice(ma);
        Self { r, phi, load }
    }

    fn transition(&self) -> DMatrix<f64> {
        let r = self.r;
        DMatrix::from_fn(r, r, |i, j| {
            if j == 0 {
                self.phi[i]
            } else if j == i + 1 {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Stationary state covariance `P = T P T' + R R'`, solved directly through
    /// the Kronecker form `(I - T (x) T) vec P = vec(R R')`.
    pub fn stationary_cov(&self) -> Result<Vec<f64>> {
        let r = self.r;
        let t = self.transition();
        let kron = t.kronecker(&t);
        let system = DMatrix::<f64>::identity(r * r, r * r) - kron;
        let rhs = DVector::from_fn(r * r, |k, _| {
            // column-major vec: k = i + j * r
            let (i, j) = (k % r, k / r);
            self.load[i] * self.load[j]
        });
        let sol = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::InvalidModel("AR polynomial is not stationary".into()))?;
        let mut p = vec![0.0; r * r];
        for i in 0..r {
            for j in 0..r {
                p[i * r + j] = 0.5 * (sol[i + j * r] + sol[j + i * r]);
            }
        }
        if !(p[0] > 0.0) || p.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidModel("stationary covariance is not positive".into()));
        }
        Ok(p)
    }

    /// `a <- T a`
    pub fn advance_state(&self, a: &mut [f64]) {
        let r = self.r;
        let a0 = a[0];
        for i in 0..r {
            let next = if i + 1 < r { a[i + 1] } else { 0.0 };
            a[i] = self.phi[i] * a0 + next;
        }
    }

    /// `P <- T P T' + R R'`
    pub fn advance_cov(&self, p: &mut [f64], scratch: &mut [f64]) {
        let r = self.r;
        // M = T P
        for i in 0..r {
            for j in 0..r {
                let below = if i + 1 < r { p[(i + 1) * r + j] } else { 0.0 };
                scratch[i * r + j] = self.phi[i] * p[j] + below;
            }
        }
        // P = M T' + R R'
        for i in 0..r {
            for j in 0..r {
                let right = if j + 1 < r { scratch[i * r + j + 1] } else { 0.0 };
                p[i * r + j] = scratch[i * r] * self.phi[j] + right + self.load[i] * self.load[j];
            }
        }
    }

    pub fn filter(&self, columns: &[&[f64]]) -> Result<FilterOutput> {
        let n = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("filter columns differ in length"));
        }
        let r = self.r;
        let k = columns.len();
        let mut p = self.stationary_cov()?;
        let mut scratch = vec![0.0; r * r];
        let mut states = vec![vec![0.0; r]; k];
        let mut innovations = vec![vec![f64::NAN; n]; k];
        let mut variances = vec![f64::NAN; n];
        let mut predictions = vec![vec![0.0; n]; k];
        let mut prior_variances = vec![0.0; n];

        let mut steady = false;
        let mut gain = vec![0.0; r];
        let mut prev = vec![0.0; r * r];

        for t in 0..n {
            for (c, a) in states.iter().enumerate() {
                predictions[c][t] = a[0];
            }
            prior_variances[t] = p[0];
            if columns[0][t].is_nan() {
                for a in states.iter_mut() {
                    self.advance_state(a);
                }
                self.advance_cov(&mut p, &mut scratch);
                steady = false;
                continue;
            }
            let f = p[0];
            if !(f > 0.0) {
                return Err(Error::InvalidModel("non-positive prediction variance".into()));
            }
            variances[t] = f;
            if !steady {
                for i in 0..r {
                    gain[i] = p[i * r] / f;
                }
            }
            for (c, a) in states.iter_mut().enumerate() {
                let v = columns[c][t] - a[0];
                innovations[c][t] = v;
                for i in 0..r {
                    a[i] += gain[i] * v;
                }
                self.advance_state(a);
            }
            if !steady {
                prev.copy_from_slice(&p);
                // filtered covariance P - P e1 e1' P / F
                for i in 0..r {
                    for j in 0..r {
                        p[i * r + j] = prev[i * r + j] - prev[i * r] * prev[j * r] / f;
                    }
                }
                self.advance_cov(&mut p, &mut scratch);
                let change = p
                    .iter()
                    .zip(&prev)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if change < 1e-15 * (1.0 + p[0].abs()) {
                    steady = true;
                }
            }
        }

        Ok(FilterOutput {
            innovations,
            variances,
            predictions,
            prior_variances,
            next_state: states,
            next_cov: p,
        })
    }
}

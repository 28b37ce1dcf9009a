//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsrecon::arma::params::pacf_to_coefficients;
use tsrecon::arma::ArmaModel;
use tsrecon::segmentation::mdl_score;
use tsrecon::TimeSeries;

/// Exact autocovariances `gamma(0..=max_lag)` of an ARMA process with
/// `x_t = sum phi_i x_{t-i} + z_t + sum theta_j z_{t-j}`, Var z = sigma2.
pub fn arma_acvf(ar: &[f64], ma: &[f64], sigma2: f64, max_lag: usize) -> Vec<f64> {
    let p = ar.len();
    let q = ma.len();
    let theta = |j: usize| if j == 0 { 1.0 } else if j <= q { ma[j - 1] } else { 0.0 };
    let mut psi = vec![0.0; q + 1];
    for j in 0..=q {
        psi[j] = theta(j) + (1..=j.min(p)).map(|i| ar[i - 1] * psi[j - i]).sum::<f64>();
    }
    let rhs = |k: usize| -> f64 {
        if k > q {
            0.0
        } else {
            sigma2 * (k..=q).map(|j| theta(j) * psi[j - k]).sum::<f64>()
        }
    };
    let mut a = DMatrix::<f64>::zeros(p + 1, p + 1);
    for k in 0..=p {
        a[(k, k)] += 1.0;
        for i in 1..=p {
            let idx = (k as i64 - i as i64).unsigned_abs() as usize;
            a[(k, idx)] -= ar[i - 1];
        }
    }
    let b = DVector::from_fn(p + 1, |k, _| rhs(k));
    let head = a.lu().solve(&b).expect("stationary AR part");
    let mut gamma: Vec<f64> = head.iter().copied().collect();
    gamma.truncate(max_lag + 1);
    for k in gamma.len()..=max_lag {
        let g = (1..=p).map(|i| ar[i - 1] * gamma[k - i]).sum::<f64>() + rhs(k);
        gamma.push(g);
    }
    gamma
}

/// Gaussian log-likelihood of a zero-mean series by the innovations algorithm
/// applied to the exact autocovariances.
pub fn innovations_loglik(x: &[f64], gamma: &[f64]) -> f64 {
    let n = x.len();
    let mut theta = vec![vec![0.0; n]; n];
    let mut v = vec![0.0; n];
    v[0] = gamma[0];
    for m in 1..n {
        for k in 0..m {
            let s: f64 = (0..k).map(|j| theta[k][k - j] * theta[m][m - j] * v[j]).sum();
            theta[m][m - k] = (gamma[m - k] - s) / v[k];
        }
        v[m] = gamma[0] - (0..m).map(|j| theta[m][m - j].powi(2) * v[j]).sum::<f64>();
    }
    let mut xhat = vec![0.0; n];
    for m in 1..n {
        xhat[m] = (1..=m).map(|j| theta[m][j] * (x[m - j] - xhat[m - j])).sum();
    }
    -0.5 * (0..n)
        .map(|t| (2.0 * std::f64::consts::PI * v[t]).ln() + (x[t] - xhat[t]).powi(2) / v[t])
        .sum::<f64>()
}

/// A random causal, invertible ARMA(p <= 3, q <= 3) model.
pub fn random_model(rng: &mut ChaCha8Rng) -> ArmaModel {
    let p = rng.random_range(0..=3);
    let q = rng.random_range(0..=3);
    let ar_pacf: Vec<f64> = (0..p).map(|_| rng.random_range(-0.9..0.9)).collect();
    let ma_pacf: Vec<f64> = (0..q).map(|_| rng.random_range(-0.9..0.9)).collect();
    let ar = pacf_to_coefficients(&ar_pacf);
    let ma: Vec<f64> = pacf_to_coefficients(&ma_pacf).iter().map(|c| -c).collect();
    let mean = rng.random_range(-5.0..5.0);
    let var = rng.random_range(0.2..4.0);
    ArmaModel::new(ar, ma, mean, var).expect("valid random model")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn combinations(n: usize, min_len: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, min_len: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            if n - start >= min_len {
                out.push(cur.clone());
            }
            return;
        }
        let mut b = start + min_len;
        while b + left * min_len <= n {
            cur.push(b);
            rec(b, n, min_len, left - 1, cur, out);
            cur.pop();
            b += 1;
        }
    }
    let mut out = Vec::new();
    rec(0, n, min_len, m, &mut Vec::new(), &mut out);
    out
}

/// Exhaustive MDL minimization: every breakpoint vector (lexicographic, fewer
/// breaks first) and every order vector; strict improvement only.
pub fn enumerate_segmentation(
    s: &TimeSeries,
    max_breaks: usize,
    max_order: usize,
    min_len: usize,
) -> (Vec<usize>, Vec<usize>, f64) {
    let n = s.len();
    let mut best: Option<(Vec<usize>, Vec<usize>, f64)> = None;
    for m in 0..=max_breaks {
        for bps in combinations(n, min_len, m) {
            let k = m + 1;
            let combos = (max_order + 1).pow(k as u32);
            for code in 0..combos {
                // most significant digit = first segment, so codes run lexicographically
                let mut orders = vec![0; k];
                let mut c = code;
                for j in (0..k).rev() {
                    orders[j] = c % (max_order + 1);
                    c /= max_order + 1;
                }
                let Ok(score) = mdl_score(s, &bps, &orders) else { continue };
                if best.as_ref().map_or(true, |b| score < b.2) {
                    best = Some((bps.clone(), orders, score));
                }
            }
        }
    }
    best.expect("some admissible segmentation")
}

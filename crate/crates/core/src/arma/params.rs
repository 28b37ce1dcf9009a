//! Bijection between partial autocorrelations in (-1, 1)^p and the causal
//! region of AR coefficient vectors (Durbin–Levinson recursion), plus the
//! unconstrained `tanh` layer used by the optimizer.

/// Partial autocorrelations are kept at most this far from +-1.
pub const PACF_LIMIT: f64 = 1.0 - 1e-6;

/// Coefficients `c` of `1 - c_1 z - ... - c_p z^p` from partial autocorrelations.
pub fn pacf_to_coefficients(pacf: &[f64]) -> Vec<f64> {
    let mut coef: Vec<f64> = Vec::with_capacity(pacf.len());
    for (k, &r) in pacf.iter().enumerate() {
        let prev = coef.clone();
        for j in 0..k {
            coef[j] = prev[j] - r * prev[k - 1 - j];
        }
        coef.push(r);
    }
    coef
}

/// Inverse of [`pacf_to_coefficients`] (Levinson step-down).
///
/// Returns `None` when the polynomial has a root on or inside the unit circle.
pub fn coefficients_to_pacf(coef: &[f64]) -> Option<Vec<f64>> {
    let mut c = coef.to_vec();
    let mut pacf = vec![0.0; c.len()];
    for k in (0..c.len()).rev() {
        let r = c[k];
        if !r.is_finite() || r.abs() >= 1.0 {
            return None;
        }
        pacf[k] = r;
        let denom = 1.0 - r * r;
        let prev = c.clone();
        for j in 0..k {
            c[j] = (prev[j] + r * prev[k - 1 - j]) / denom;
        }
        c.truncate(k);
    }
    Some(pacf)
}

pub fn unconstrained_to_pacf(u: &[f64]) -> Vec<f64> {
    u.iter().map(|x| PACF_LIMIT * x.tanh()).collect()
}

pub fn pacf_to_unconstrained(pacf: &[f64]) -> Vec<f64> {
    pacf.iter()
        .map(|r| (r / PACF_LIMIT).clamp(-1.0 + 1e-12, 1.0 - 1e-12).atanh())
        .collect()
}

/// AR coefficients `phi` (model `x_t = sum phi_j x_{t-j} + ...`) from the
/// unconstrained optimizer vector.
pub fn ar_from_unconstrained(u: &[f64]) -> Vec<f64> {
    pacf_to_coefficients(&unconstrained_to_pacf(u))
}

/// MA coefficients `theta` (model `... + z_t + sum theta_j z_{t-j}`) from the
/// unconstrained optimizer vector. `1 + theta(z)` is the polynomial `1 - c(z)`.
pub fn ma_from_unconstrained(u: &[f64]) -> Vec<f64> {
    pacf_to_coefficients(&unconstrained_to_pacf(u))
        .into_iter()
        .map(|c| -c)
        .collect()
}

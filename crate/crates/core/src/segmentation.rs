//! Structural breaks by piecewise autoregression under a minimum description
//! length criterion, minimized exactly by dynamic programming.
//!
//! For `m` breaks splitting the series into segments of lengths `n_j` with AR
//! orders `p_j`:
//!
//! ```text
//! MDL = ln(m + 1) + (m + 1) ln n
//!     + sum_j [ ln max(p_j, 1) + (p_j + 2)/2 ln n_j + n_j/2 ln(2 pi s2_j) ]
//! ```
//!
//! where `s2_j` is the conditional least-squares innovation variance of an
//! AR(p_j) fitted to the mean-corrected segment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

pub const MAX_SERIES_LEN: usize = 10_000;
pub const MAX_BREAKS: usize = 10;

/// Segment costs are cached when the triangular table has at most this many cells.
const COST_CACHE_CELLS: usize = 6_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFit {
    /// First index of the segment.
    pub start: usize,
    /// One past the last index.
    pub end: usize,
    pub start_time: i64,
    pub end_time: i64,
    pub order: usize,
    pub ar: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

impl SegmentFit {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    /// First index of each new segment, strictly increasing.
    pub breakpoints: Vec<usize>,
    pub breakpoint_times: Vec<i64>,
    pub segments: Vec<SegmentFit>,
    pub mdl: f64,
    /// Number of breaks.
    pub m: usize,
}

impl Segmentation {
    pub fn orders(&self) -> Vec<usize> {
        self.segments.iter().map(|s| s.order).collect()
    }
}

struct ArFit {
    ar: Vec<f64>,
    mean: f64,
    variance: f64,
}

/// Conditional least-squares AR(p) fit to a mean-corrected segment.
/// `None` when the normal equations are singular or the fit is exact.
fn fit_segment_direct(x: &[f64], p: usize) -> Option<ArFit> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let mut g = vec![0.0; p * p];
    let mut r = vec![0.0; p];
    for t in p..n {
        for a in 0..p {
            r[a] += c[t] * c[t - 1 - a];
            for b in 0..p {
                g[a * p + b] += c[t - 1 - a] * c[t - 1 - b];
            }
        }
    }
    let ar = solve_spd(&mut g, &r, p)?;
    let rss: f64 = (p..n)
        .map(|t| {
            let pred: f64 = ar.iter().enumerate().map(|(k, phi)| phi * c[t - 1 - k]).sum();
            (c[t] - pred).powi(2)
        })
        .sum();
    let variance = rss / (n - p) as f64;
    (variance > 0.0 && variance.is_finite()).then_some(ArFit { ar, mean, variance })
}

/// Cholesky solve of a small symmetric positive-definite system (row-major).
fn solve_spd(g: &mut [f64], r: &[f64], p: usize) -> Option<Vec<f64>> {
    if p == 0 {
        return Some(Vec::new());
    }
    let scale = (0..p).map(|i| g[i * p + i].abs()).fold(0.0, f64::max);
    for j in 0..p {
        let mut d = g[j * p + j];
        for k in 0..j {
            d -= g[j * p + k] * g[j * p + k];
        }
        if !(d > 1e-12 * scale) {
            return None;
        }
        let d = d.sqrt();
        g[j * p + j] = d;
        for i in j + 1..p {
            let mut s = g[i * p + j];
            for k in 0..j {
                s -= g[i * p + k] * g[j * p + k];
            }
            g[i * p + j] = s / d;
        }
    }
    let mut y = vec![0.0; p];
    for i in 0..p {
        let mut s = r[i];
        for k in 0..i {
            s -= g[i * p + k] * y[k];
        }
        y[i] = s / g[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = y[i];
        for k in i + 1..p {
            s -= g[k * p + i] * y[k];
        }
        y[i] = s / g[i * p + i];
    }
    Some(y)
}

fn segment_term(len: usize, order: usize, variance: f64) -> f64 {
    let n = len as f64;
    (order.max(1) as f64).ln()
        + 0.5 * (order as f64 + 2.0) * n.ln()
        + 0.5 * n * (2.0 * std::f64::consts::PI * variance).ln()
}

fn header_term(m: usize, n: usize) -> f64 {
    ((m + 1) as f64).ln() + (m + 1) as f64 * (n as f64).ln()
}

/// Evaluate the MDL criterion for given breakpoints (first index of each new
/// segment) and per-segment AR orders.
pub fn mdl_score(series: &TimeSeries, breakpoints: &[usize], orders: &[usize]) -> Result<f64> {
    series.require_complete("MDL scoring")?;
    let n = series.len();
    if orders.len() != breakpoints.len() + 1 {
        return Err(Error::invalid(format!(
            "{} breakpoints need {} orders (got {})",
            breakpoints.len(),
            breakpoints.len() + 1,
            orders.len()
        )));
    }
    let bounds = segment_bounds(breakpoints, n)?;
    let x = series.values();
    let mut total = header_term(breakpoints.len(), n);
    for (&(s, e), &p) in bounds.iter().zip(orders) {
        if e - s <= p + 1 {
            return Err(Error::invalid(format!(
                "segment [{s}, {e}) is too short for AR order {p}"
            )));
        }
        let fit = fit_segment_direct(&x[s..e], p).ok_or_else(|| {
            Error::invalid(format!(
                "segment [{s}, {e}) gives a singular or exact AR({p}) fit"
            ))
        })?;
        total += segment_term(e - s, p, fit.variance);
    }
    Ok(total)
}

fn segment_bounds(breakpoints: &[usize], n: usize) -> Result<Vec<(usize, usize)>> {
    let mut prev = 0;
    let mut out = Vec::with_capacity(breakpoints.len() + 1);
    for &b in breakpoints {
        if b <= prev || b >= n {
            return Err(Error::invalid(format!(
                "breakpoints must be strictly increasing and inside (0, {n}): {breakpoints:?}"
            )));
        }
        out.push((prev, b));
        prev = b;
    }
    out.push((prev, n));
    Ok(out)
}

/// Segment cost from prefix sums of the (globally centered) series.
struct CostModel {
    /// prefix[k] = sum of x[..k]
    prefix: Vec<f64>,
    /// lagged[d][k] = sum over u < k of x[u] * x[u + d]
    lagged: Vec<Vec<f64>>,
    max_order: usize,
}

impl CostModel {
    fn new(values: &[f64], max_order: usize) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let x: Vec<f64> = values.iter().map(|v| v - mean).collect();
        let mut prefix = vec![0.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] + x[i];
        }
        let lagged = (0..=max_order)
            .map(|d| {
                let mut q = vec![0.0; n.saturating_sub(d) + 1];
                for u in 0..n.saturating_sub(d) {
                    q[u + 1] = q[u] + x[u] * x[u + d];
                }
                q
            })
            .collect();
        Self {
            prefix,
            lagged,
            max_order,
        }
    }

    /// Best `(cost, order)` over AR orders for the segment `[s, e)`.
    fn best(&self, s: usize, e: usize) -> (f64, usize) {
        let len = e - s;
        let m = (self.prefix[e] - self.prefix[s]) / len as f64;
        let mut best = (f64::INFINITY, 0);
        let mut g = Vec::new();
        let mut r = Vec::new();
        for p in 0..=self.max_order.min(len.saturating_sub(2)) {
            let rows = (len - p) as f64;
            let lo = s + p;
            let sum_at = |a: usize| self.prefix[e - a] - self.prefix[lo - a];
            let cross = |a: usize, b: usize| -> f64 {
                let (a, b) = if a <= b { (a, b) } else { (b, a) };
                let q = &self.lagged[b - a];
                let raw = q[e - b] - q[lo - b];
                raw - m * sum_at(a) - m * sum_at(b) + m * m * rows
            };
            let s00 = cross(0, 0);
            let rss = if p == 0 {
                s00
            } else {
                g.clear();
                r.clear();
                for a in 1..=p {
                    r.push(cross(0, a));
                    for b in 1..=p {
                        g.push(cross(a, b));
                    }
                }
                match solve_spd(&mut g, &r, p) {
                    Some(beta) => s00 - beta.iter().zip(&r).map(|(b, r)| b * r).sum::<f64>(),
                    None => continue,
                }
            };
            let variance = rss / rows;
            if !(variance > 1e-14 * (s00 / rows).max(f64::MIN_POSITIVE)) {
                continue;
            }
            let cost = segment_term(len, p, variance);
            if cost < best.0 {
                best = (cost, p);
            }
        }
        best
    }
}

/// Exact MDL-optimal piecewise-AR segmentation.
///
/// Searches every breakpoint placement with segments of at least
/// `min_seg_len` observations, up to `max_breaks` breaks and AR orders
/// `0..=max_order` per segment. Ties prefer fewer breaks, then the
/// lexicographically smallest breakpoint vector, then smaller orders.
pub fn segment(
    series: &TimeSeries,
    max_breaks: usize,
    max_order: usize,
    min_seg_len: usize,
) -> Result<Segmentation> {
    series.require_complete("segmentation")?;
    let n = series.len();
    if n > MAX_SERIES_LEN {
        return Err(Error::invalid(format!(
            "segmentation is limited to {MAX_SERIES_LEN} observations (got {n})"
        )));
    }
    if max_breaks > MAX_BREAKS {
        return Err(Error::invalid(format!("at most {MAX_BREAKS} breaks (got {max_breaks})")));
    }
    if min_seg_len < max_order + 2 {
        return Err(Error::invalid(format!(
            "min_seg_len must be at least max_order + 2 = {}",
            max_order + 2
        )));
    }
    if n < min_seg_len {
        return Err(Error::invalid(format!(
            "series of length {n} is shorter than min_seg_len {min_seg_len}"
        )));
    }

    let costs = CostModel::new(series.values(), max_order);
    let table = CostTable::build(&costs, n, min_seg_len);
    let segments_max = (max_breaks + 1).min(n / min_seg_len);

    // tail[k][i]: best cost of splitting [i, n) into k + 1 segments
    // next[k][i]: start of the second of those segments
    let mut tail: Vec<Vec<f64>> = Vec::with_capacity(segments_max);
    let mut next: Vec<Vec<usize>> = Vec::with_capacity(segments_max);
    let mut first = vec![f64::INFINITY; n + 1];
    for (i, slot) in first.iter_mut().enumerate().take(n) {
        if n - i >= min_seg_len {
            *slot = table.get(&costs, i, n).0;
        }
    }
    tail.push(first);
    next.push(vec![n; n + 1]);
    for k in 1..segments_max {
        let prev = &tail[k - 1];
        let mut cur = vec![f64::INFINITY; n + 1];
        let mut arg = vec![n; n + 1];
        for i in 0..n {
            let mut j = i + min_seg_len;
            while j + k * min_seg_len <= n {
                if prev[j].is_finite() {
                    let c = table.get(&costs, i, j).0 + prev[j];
                    if c < cur[i] {
                        cur[i] = c;
                        arg[i] = j;
                    }
                }
                j += 1;
            }
        }
        tail.push(cur);
        next.push(arg);
    }

    let mut best: Option<(f64, usize)> = None;
    for (k, row) in tail.iter().enumerate() {
        let total = header_term(k, n) + row[0];
        if total.is_finite() && best.map_or(true, |(b, _)| total < b) {
            best = Some((total, k));
        }
    }
    let (_, m) = best.ok_or_else(|| {
        Error::DegenerateSeries("no segmentation has a finite description length".into())
    })?;

    let mut breakpoints = Vec::with_capacity(m);
    let mut i = 0;
    for k in (1..=m).rev() {
        i = next[k][i];
        breakpoints.push(i);
    }

    let bounds = segment_bounds(&breakpoints, n)?;
    let x = series.values();
    let mut segments = Vec::with_capacity(bounds.len());
    for &(s, e) in &bounds {
        let order = table.get(&costs, s, e).1;
        let fit = fit_segment_direct(&x[s..e], order).ok_or_else(|| {
            Error::DegenerateSeries(format!("segment [{s}, {e}) cannot be refitted"))
        })?;
        segments.push(SegmentFit {
            start: s,
            end: e,
            start_time: series.time_at(s),
            end_time: series.time_at(e - 1),
            order,
            ar: fit.ar,
            mean: fit.mean,
            variance: fit.variance,
        });
    }
    let orders: Vec<usize> = segments.iter().map(|s| s.order).collect();
    let mdl = mdl_score(series, &breakpoints, &orders)?;

    Ok(Segmentation {
        breakpoint_times: breakpoints.iter().map(|&b| series.time_at(b)).collect(),
        breakpoints,
        segments,
        mdl,
        m,
    })
}

enum CostTable {
    Cached {
        n: usize,
        min_len: usize,
        cells: Vec<(f64, usize)>,
    },
    OnDemand,
}

impl CostTable {
    fn build(costs: &CostModel, n: usize, min_len: usize) -> Self {
        let span = n + 1 - min_len;
        let cells = span * (span + 1) / 2;
        if cells > COST_CACHE_CELLS {
            return CostTable::OnDemand;
        }
        let mut table = Vec::with_capacity(cells);
        for s in 0..span {
            for e in s + min_len..=n {
                table.push(costs.best(s, e));
            }
        }
        CostTable::Cached {
            n,
            min_len,
            cells: table,
        }
    }

    fn get(&self, costs: &CostModel, s: usize, e: usize) -> (f64, usize) {
        match self {
            CostTable::Cached { n, min_len, cells } => {
                // row s holds ends s + min_len ..= n
                let row_len = |r: usize| n - r - min_len + 1;
                let offset: usize = if s == 0 {
                    0
                } else {
                    // sum of row_len(r) for r < s
                    s * row_len(0) - s * (s - 1) / 2
                };
                cells[offset + (e - s - min_len)]
            }
            CostTable::OnDemand => costs.best(s, e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arma::{simulate, ArmaModel};
    use proptest::prelude::*;

    fn white(n: usize, seed: u64) -> TimeSeries {
        simulate(&ArmaModel::white_noise(0.0, 1.0).unwrap(), n, seed).unwrap()
    }

    #[test]
    fn single_segment_white_noise_by_hand() {
        // 20 values, zero mean, unit divisor-n variance: +-1 alternating pairs.
        let v: Vec<f64> = (0..20).map(|t| if (t / 2) % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = TimeSeries::from_values(v).unwrap();
        let n = 20f64;
        // p = 0: variance = RSS / n = 1
        let expected = 1f64.ln() + n.ln() + 1f64.ln() + n.ln() + 0.5 * n * (2.0 * std::f64::consts::PI).ln();
        assert!((mdl_score(&s, &[], &[0]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn cached_and_direct_costs_agree() {
        let s = simulate(&ArmaModel::new(vec![0.6], vec![], 3.0, 1.0).unwrap(), 120, 4).unwrap();
        let model = CostModel::new(s.values(), 3);
        for (a, b) in [(0, 120), (10, 50), (37, 119), (5, 12)] {
            let (cost, order) = model.best(a, b);
            let direct = (0..=3usize.min(b - a - 2))
                .filter_map(|p| fit_segment_direct(&s.values()[a..b], p).map(|f| (segment_term(b - a, p, f.variance), p)))
                .fold((f64::INFINITY, 0), |best, c| if c.0 < best.0 { c } else { best });
            assert_eq!(order, direct.1);
            assert!((cost - direct.0).abs() < 1e-9 * direct.0.abs().max(1.0));
        }
        let table = CostTable::build(&model, 120, 8);
        for (a, b) in [(0, 8), (0, 120), (3, 77), (112, 120)] {
            assert_eq!(table.get(&model, a, b), model.best(a, b));
        }
    }

    #[test]
    fn mdl_score_validation() {
        let s = white(50, 1);
        assert!(mdl_score(&s, &[10, 10], &[0, 0, 0]).is_err());
        assert!(mdl_score(&s, &[0], &[0, 0]).is_err());
        assert!(mdl_score(&s, &[50], &[0, 0]).is_err());
        assert!(mdl_score(&s, &[20], &[0]).is_err());
        assert!(mdl_score(&s, &[3], &[2, 0]).is_err());
        assert!(mdl_score(&s, &[4], &[2, 0]).is_ok());
    }

    #[test]
    fn mdl_score_is_deterministic() {
        let s = white(200, 3);
        let a = mdl_score(&s, &[50, 120], &[1, 0, 2]).unwrap();
        let _ = mdl_score(&s, &[70], &[0, 0]).unwrap();
        let b = mdl_score(&s, &[50, 120], &[1, 0, 2]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn splitting_iid_noise_costs_more() {
        let mut raised = 0;
        for seed in 0..100 {
            let s = white(400, 10_000 + seed);
            let one = mdl_score(&s, &[], &[0]).unwrap();
            let two = mdl_score(&s, &[200], &[0, 0]).unwrap();
            if two > one {
                raised += 1;
            }
        }
        assert!(raised >= 95, "{raised}/100");
    }

    #[test]
    fn detects_a_mean_shift() {
        let mut v = white(150, 5).into_values();
        for x in &mut v[90..] {
            *x += 3.0;
        }
        let s = TimeSeries::new(1850, v).unwrap();
        let seg = segment(&s, 3, 2, 10).unwrap();
        // A short early AR(2) segment is also worth its description cost here.
        assert!(seg.m <= 2);
        let k = seg.breakpoints.iter().position(|&b| (b as i64 - 90).abs() <= 2).unwrap();
        assert_eq!(seg.breakpoint_times[k], 1850 + seg.breakpoints[k] as i64);
        assert_eq!(seg.segments.len(), seg.m + 1);
        assert_eq!(seg.segments.last().unwrap().end_time, 1999);
    }

    #[test]
    fn reported_mdl_matches_rescoring_and_beats_single_segment() {
        let s = simulate(&ArmaModel::new(vec![0.4], vec![], 0.0, 1.0).unwrap(), 300, 8).unwrap();
        let seg = segment(&s, 3, 2, 15).unwrap();
        let again = mdl_score(&s, &seg.breakpoints, &seg.orders()).unwrap();
        assert!((seg.mdl - again).abs() < 1e-8);
        let single = (0..=2)
            .map(|p| mdl_score(&s, &[], &[p]).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(seg.mdl <= single + 1e-9);
    }

    #[test]
    fn preconditions() {
        let s = white(100, 1);
        assert!(segment(&s, 11, 1, 10).is_err());
        assert!(segment(&s, 2, 3, 4).is_err());
        assert!(segment(&white(8, 1), 1, 1, 10).is_err());
        let long = white(MAX_SERIES_LEN + 1, 1);
        assert!(segment(&long, 1, 0, 10).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn shift_does_not_move_breaks(seed in 0u64..500, shift in -100.0f64..100.0) {
            let mut v = white(160, seed).into_values();
            for x in &mut v[100..] {
                *x *= 2.5;
            }
            let s = TimeSeries::from_values(v).unwrap();
            let a = segment(&s, 2, 1, 12).unwrap();
            let b = segment(&s.affine(1.0, shift), 2, 1, 12).unwrap();
            prop_assert_eq!(&a.breakpoints, &b.breakpoints);
            prop_assert_eq!(a.orders(), b.orders());
        }
    }
}

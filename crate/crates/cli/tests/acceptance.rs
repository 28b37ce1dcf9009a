//! One line per acceptance criterion, each with its tolerance and runtime budget.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use tsrecon::arma::{log_likelihood, residual_diagnostics, select_order, simulate, whiten, ArmaModel};
use tsrecon::ccf::{cross_correlation, prewhitened_ccf, significant_lags, CcfMode};
use tsrecon::io::{load_panel, load_response};
use tsrecon::lagmodel::{holdout_eval, LagSpec, TransferBuilder};
use tsrecon::pca::{decompose, score_series};
use tsrecon::segmentation::{mdl_score, segment};
use tsrecon::synthetic::{lag_panel, piecewise_ar, random_walk_plus_noise, transfer_system, LagPanelConfig};
use tsrecon::{difference, sample_acf};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn judge(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn ar1(phi: f64) -> ArmaModel {
    ArmaModel::new(vec![phi], vec![], 0.0, 1.0).unwrap()
}

fn white() -> ArmaModel {
    ArmaModel::white_noise(0.0, 1.0).unwrap()
}

fn ma_unit_root_signature() -> Verdict {
    let mut total = 0.0;
    for seed in 0..200 {
        let y = random_walk_plus_noise(150, 0.02, 1.0, seed).unwrap();
        let d = difference(&y, 1).unwrap();
        total += sample_acf(&d, 1).unwrap().correlations[1];
    }
    let mean = total / 200.0;
    judge((-0.55..=-0.40).contains(&mean), format!("mean lag-1 ACF {mean:.4} in [-0.55, -0.40]"))
}

fn likelihood_oracle() -> Verdict {
    let mut r = common::rng(2024);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let model = common::random_model(&mut r);
        let n = r.random_range(20..=200);
        let s = simulate(&model, n, 1000 + case).unwrap();
        let centered: Vec<f64> = s.values().iter().map(|v| v - model.mean).collect();
        let gamma = common::arma_acvf(&model.ar, &model.ma, model.noise_variance, n);
        let oracle = common::innovations_loglik(&centered, &gamma);
        worst = worst.max((log_likelihood(&model, &s).unwrap() - oracle).abs());
    }
    judge(worst < 1e-8, format!("max |kalman - innovations| = {worst:.2e} over 50 models (< 1e-8)"))
}

fn prewhitening_necessity() -> Verdict {
    const MAX_LAG: usize = 20;
    let (mut raw_hit, mut exceed, mut cells) = (0, 0, 0);
    for seed in 0..200 {
        let x = simulate(&ar1(0.9), 150, 10_000 + seed).unwrap();
        let y = simulate(&white(), 150, 20_000 + seed).unwrap();
        if !significant_lags(&cross_correlation(&x, &y, MAX_LAG).unwrap()).is_empty() {
            raw_hit += 1;
        }
        let pw = prewhitened_ccf(&x, &y, MAX_LAG, 3, 2, CcfMode::PrewhitenedX).unwrap();
        exceed += significant_lags(&pw).len();
        cells += pw.lags.len();
    }
    let raw_rate = raw_hit as f64 / 200.0;
    let rate = exceed as f64 / cells as f64;
    judge(
        raw_rate >= 0.30 && (rate - 0.05).abs() <= 0.02,
        format!("raw seeds with a spurious lag {raw_rate:.3} (>= 0.30); prewhitened per-lag exceedance {rate:.4} (0.05 +/- 0.02)"),
    )
}

fn lag_fourteen_recovery() -> Verdict {
    let cfg = LagPanelConfig::default();
    let mut hits = 0;
    for seed in 0..100 {
        let lp = lag_panel(&cfg, 30_000 + seed).unwrap();
        let d = decompose(&lp.panel, 1, true).unwrap();
        let f = score_series(&d, 0).unwrap();
        let c = prewhitened_ccf(&f, &lp.response, 40, 3, 2, CcfMode::PrewhitenedX).unwrap();
        if significant_lags(&c).first().map(|(h, _)| *h) == Some(14) {
            hits += 1;
        }
    }
    judge(hits >= 90, format!("top significant lag 14 in {hits}/100 seeds (>= 90)"))
}

fn segmentation_recovery() -> Verdict {
    let mut hits = 0;
    for seed in 0..100 {
        let s = piecewise_ar(&[(512, vec![0.9], 1.0), (512, vec![-0.5], 1.0)], 5000 + seed).unwrap();
        let seg = segment(&s, 3, 2, 20).unwrap();
        if seg.m == 1 && (seg.breakpoints[0] as i64 - 512).abs() <= 10 {
            hits += 1;
        }
    }
    let mut mismatches = Vec::new();
    let cases: [(usize, usize, usize, u64); 4] = [(100, 2, 2, 1), (180, 2, 2, 2), (240, 2, 1, 3), (300, 2, 1, 4)];
    for (n, breaks, order, seed) in cases {
        let cut = n * 3 / 5;
        let s = piecewise_ar(&[(cut, vec![0.7], 1.0), (n - cut, vec![-0.4], 2.5)], seed).unwrap();
        let dp = segment(&s, breaks, order, 12).unwrap();
        let (bps, orders, score) = common::enumerate_segmentation(&s, breaks, order, 12);
        let rescored = mdl_score(&s, &dp.breakpoints, &dp.orders()).unwrap();
        if dp.breakpoints != bps || dp.orders() != orders || (dp.mdl - score).abs() > 1e-8 * score.abs() || (rescored - dp.mdl).abs() > 1e-8 {
            mismatches.push(n);
        }
    }
    judge(
        hits >= 90 && mismatches.is_empty(),
        format!("break within +/-10 of 512 in {hits}/100 seeds (>= 90); DP vs enumeration mismatches at n = {mismatches:?}"),
    )
}

fn lagged_skill() -> Verdict {
    let mut wins = 0;
    for seed in 0..100 {
        let sys = transfer_system(200, 3, 2.0, &ar1(0.5), &white(), 0, 90_000 + seed).unwrap();
        let y = &sys.response;
        let t0 = y.start_time();
        let blocks = [(t0 + 50, t0 + 99), (t0 + 150, t0 + 179)];
        let lagged = TransferBuilder::new(vec![(sys.covariate.clone(), LagSpec::new("x", vec![-3]).unwrap())], 1, 0);
        let contemp = TransferBuilder::new(vec![(sys.covariate.clone(), LagSpec::new("x", vec![0]).unwrap())], 1, 0);
        let a = holdout_eval(y, &lagged, &blocks).unwrap();
        let b = holdout_eval(y, &contemp, &blocks).unwrap();
        if a.pooled_rmse < b.pooled_rmse {
            wins += 1;
        }
    }
    judge(wins >= 95, format!("lagged RMSE below contemporaneous in {wins}/100 seeds (>= 95)"))
}

fn near(times: &[i64], target: i64, tol: i64) -> bool {
    times.iter().any(|t| (t - target).abs() <= tol)
}

fn real_data_checks() -> Verdict {
    let (Ok(temp), Ok(proxies)) = (std::env::var("TSRECON_TEMPERATURE_CSV"), std::env::var("TSRECON_PROXY_CSV")) else {
        return Verdict::Skip("set TSRECON_TEMPERATURE_CSV and TSRECON_PROXY_CSV to run".into());
    };
    let run = || -> tsrecon::Result<(bool, String)> {
        let (t, _, _) = load_response(Path::new(&temp), None)?;
        let (panel, _) = load_panel(Path::new(&proxies))?;

        let seg = segment(&t, 3, 2, 10)?;
        let seg_ok = (seg.m == 2 || seg.m == 3)
            && (seg.m != 2 || (near(&seg.breakpoint_times, 1920, 5) && near(&seg.breakpoint_times, 1970, 5)));

        let f = score_series(&decompose(&panel, 1, true)?, 0)?;
        let from = t.start_time().max(f.start_time());
        let to = t.end_time().min(f.end_time());
        let (tw, fw) = (t.window(from, to)?, f.window(from, to)?);
        let c = prewhitened_ccf(&fw, &tw, 40, 3, 2, CcfMode::PrewhitenedX)?;
        let sig: Vec<i64> = significant_lags(&c).iter().map(|(h, _)| *h).collect();
        let ccf_ok = c.at(0).is_some_and(|r| r.abs() < c.bound) && sig.contains(&14);

        let (_, _, report) = select_order(&f, 3, 3)?;
        let resid = whiten(&f, &report)?;
        let out: Vec<i64> = residual_diagnostics(&resid)?.outliers.iter().map(|o| o.time).collect();
        let out_ok = near(&out, 1930, 2) && near(&out, 1970, 2);

        Ok((
            seg_ok && ccf_ok && out_ok,
            format!(
                "segments {} breaks {:?}; ccf(0) {:?} bound {:.3} significant {:?}; outliers {:?}",
                seg.m + 1,
                seg.breakpoint_times,
                c.at(0),
                c.bound,
                sig,
                out
            ),
        ))
    };
    match run() {
        Ok((ok, detail)) => judge(ok, detail),
        Err(e) => Verdict::Fail(format!("error: {e}")),
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn invariants() -> Verdict {
    let mut failures: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    // affine invariance
    let x = simulate(&ArmaModel::new(vec![0.6], vec![0.3], 2.0, 1.5).unwrap(), 150, 1).unwrap();
    let y = simulate(&ar1(0.4), 150, 2).unwrap();
    let xa = x.affine(3.5, -7.0);
    let a1 = sample_acf(&x, 20).unwrap().correlations;
    let a2 = sample_acf(&xa, 20).unwrap().correlations;
    check(max_abs_diff(&a1, &a2) < 1e-10, "acf affine invariance");
    let c1 = cross_correlation(&x, &y, 15).unwrap().correlations;
    let c2 = cross_correlation(&xa, &y.affine(0.5, 4.0), 15).unwrap().correlations;
    check(max_abs_diff(&c1, &c2) < 1e-10, "ccf affine invariance");
    let s = piecewise_ar(&[(80, vec![0.5], 1.0), (70, vec![], 5.0)], 3).unwrap();
    check(
        segment(&s, 2, 1, 10).unwrap().breakpoints == segment(&s.affine(1.0, 100.0), 2, 1, 10).unwrap().breakpoints,
        "segmentation shift invariance",
    );

    // orthogonality
    let lp = lag_panel(&LagPanelConfig { n_proxies: 12, ..Default::default() }, 4).unwrap();
    let d = decompose(&lp.panel, 4, true).unwrap();
    let gram = d.loadings.transpose() * &d.loadings;
    let eye = nalgebra::DMatrix::<f64>::identity(gram.nrows(), gram.ncols());
    check((gram - eye).abs().max() < 1e-10, "pca loadings orthonormal");
    let sg = d.scores.transpose() * &d.scores;
    let off = (0..sg.nrows()).flat_map(|i| (0..sg.ncols()).filter(move |&j| j != i).map(move |j| (i, j)));
    check(off.map(|(i, j)| sg[(i, j)].abs()).fold(0.0, f64::max) < 1e-8 * sg.max(), "pca scores uncorrelated");

    // truncation consistency
    let w = x.window(10, 100).unwrap();
    let dw = difference(&w, 1).unwrap();
    let wd = difference(&x, 1).unwrap().window(11, 100).unwrap();
    check(dw == wd, "difference commutes with windowing");
    let model = ArmaModel::new(vec![0.6], vec![0.3], 2.0, 1.5).unwrap();
    let full = tsrecon::arma::innovation_residuals(&model, &x).unwrap();
    let head = tsrecon::arma::innovation_residuals(&model, &x.window(x.start_time(), x.start_time() + 79).unwrap()).unwrap();
    check(max_abs_diff(head.values(), &full.values()[..80]) < 1e-10, "filter residuals are causal");

    // determinism
    check(simulate(&model, 100, 9).unwrap() == simulate(&model, 100, 9).unwrap(), "simulation determinism");
    check(segment(&s, 2, 1, 10).unwrap() == segment(&s, 2, 1, 10).unwrap(), "segmentation determinism");

    // exit-code contract
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| -> PathBuf {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let good = write("good.csv", "year,v\n2000,1\n2001,3\n2002,NA\n2003,2\n");
    let bad = write("bad.csv", "year,v\n2000,1\n2001,oops\n");
    let code = |args: &[&str]| Command::new(env!("CARGO_BIN_EXE_tsrecon")).args(args).output().unwrap().status.code();
    let g = good.to_str().unwrap();
    check(code(&["diff", "--input", g]) == Some(0), "exit 0 on success");
    check(code(&["diff", "--input", bad.to_str().unwrap()]) == Some(1), "exit 1 on parse error");
    check(code(&["acf", "--input", g, "--max-lag", "50"]) == Some(1), "exit 1 on computation error");
    check(code(&["diff"]) == Some(2), "exit 2 on missing flag");
    check(code(&["diff", "--input", g, "--out", "yaml"]) == Some(2), "exit 2 on bad flag value");
    let a = Command::new(env!("CARGO_BIN_EXE_tsrecon")).args(["diff", "--input", g]).output().unwrap();
    let b = Command::new(env!("CARGO_BIN_EXE_tsrecon")).args(["diff", "--input", g]).output().unwrap();
    check(a.stdout == b.stdout, "byte-identical reruns");

    judge(
        failures.is_empty(),
        if failures.is_empty() { "all invariant checks hold".into() } else { format!("failed: {failures:?}") },
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Verdict); 8] = [
        ("1 MA unit-root signature", Duration::from_secs(10), ma_unit_root_signature),
        ("2 likelihood oracle", Duration::from_secs(30), likelihood_oracle),
        ("3 prewhitening necessity", Duration::from_secs(60), prewhitening_necessity),
        ("4 lag-14 recovery", Duration::from_secs(120), lag_fourteen_recovery),
        ("5 segmentation recovery", Duration::from_secs(300), segmentation_recovery),
        ("6 lagged vs contemporaneous skill", Duration::from_secs(120), lagged_skill),
        ("7 real-data checks", Duration::from_secs(600), real_data_checks),
        ("8 invariant suites", Duration::from_secs(120), invariants),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let verdict = run();
        let took = start.elapsed();
        let over = took > budget;
        let (tag, detail) = match verdict {
            Verdict::Pass(d) if !over => ("PASS", d),
            Verdict::Pass(d) => ("FAIL", format!("{d}; over time budget")),
            Verdict::Fail(d) => ("FAIL", d),
            Verdict::Skip(d) => ("SKIP", d),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} criterion {name}: {detail} [{:.1}s of {}s]", took.as_secs_f64(), budget.as_secs());
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

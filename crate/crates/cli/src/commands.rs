use serde_json::{json, Value};
use tsrecon::arma::{
    fit, ljung_box, residual_diagnostics, select_order, simulate, whiten, ArmaModel, FitReport,
};
use tsrecon::ccf::{cross_correlation, prewhitened_ccf, significant_lags, CcfMode};
use tsrecon::io::{format_number, svg, write_csv};
use tsrecon::lagmodel::{
    fit_transfer_with, holdout_eval, lag_scan, predict, time_index, ConstantMean, LagSpec, TransferBuilder,
    TransferOptions,
};
use tsrecon::pca::{decompose, score_series};
use tsrecon::segmentation::segment;
use tsrecon::synthetic::{lag_panel, random_walk_plus_noise, transfer_system, LagPanelConfig};
use tsrecon::{difference, sample_acf, TimeSeries};

use crate::args::*;
use crate::context::Context;
use crate::CliError;

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn series(name: &str, s: &TimeSeries) -> Self {
        let mut t = Table::new(&["year", name]);
        for (year, v) in s.times().zip(s.values()) {
            t.rows.push(vec![year.to_string(), format_number(*v)]);
        }
        t
    }
}

pub struct Output {
    pub results: Value,
    pub table: Table,
    pub plot: String,
}

const LAG_CONVENTION: &str = "value at lag h is corr(response_{t+h}, covariate_t); h > 0 means the covariate leads";
const OFFSET_CONVENTION: &str = "response_t is regressed on covariate_{t+offset}; offset -h uses the covariate h steps earlier";

pub fn run(command: &Command, seed: u64, ctx: &mut Context) -> Result<Output, CliError> {
    match command {
        Command::Diff(a) => diff_cmd(a, ctx),
        Command::Acf(a) => acf_cmd(a, ctx),
        Command::FitArma(a) => fit_cmd(a, ctx),
        Command::Whiten(a) => whiten_cmd(a, ctx),
        Command::Ccf(a) => ccf_cmd(a, ctx),
        Command::Pca(a) => pca_cmd(a, ctx),
        Command::Segment(a) => segment_cmd(a, ctx),
        Command::Lagscan(a) => lagscan_cmd(a, ctx),
        Command::Transfer(a) => transfer_cmd(a, ctx),
        Command::Holdout(a) => holdout_cmd(a, ctx),
        Command::Simulate(a) => simulate_cmd(a, seed, ctx),
    }
}

fn differenced(s: TimeSeries, times: usize) -> Result<TimeSeries, CliError> {
    let mut s = s;
    for _ in 0..times {
        s = difference(&s, 1)?;
    }
    Ok(s)
}

fn load_series(ctx: &mut Context, input: &SeriesInput, diff: usize) -> Result<TimeSeries, CliError> {
    let s = ctx.response("input", &input.input, input.column.as_deref())?;
    differenced(s, diff)
}

fn diff_cmd(a: &DiffArgs, ctx: &mut Context) -> Result<Output, CliError> {
    let s = load_series(ctx, &a.series, 0)?;
    let d = difference(&s, a.lag)?;
    Ok(Output {
        results: json!({ "lag": a.lag, "start_time": d.start_time(), "values": d.values() }),
        plot: svg::line_chart(&format!("lag-{} difference", a.lag), d.start_time(), &[("diff", d.values())], &[]),
        table: Table::series("value", &d),
    })
}

fn acf_cmd(a: &AcfArgs, ctx: &mut Context) -> Result<Output, CliError> {
    let s = load_series(ctx, &a.series, a.difference)?;
    let acf = sample_acf(&s, a.max_lag)?;
    let lags: Vec<i64> = acf.lags.iter().map(|&h| h as i64).collect();
    let mut table = Table::new(&["lag", "acf"]);
    for (h, c) in acf.lags.iter().zip(&acf.correlations) {
        table.rows.push(vec![h.to_string(), format_number(*c)]);
    }
    Ok(Output {
        results: json!({
            "difference": a.difference,
            "n": acf.n,
            "bound": acf.bound,
            "lags": acf.lags,
            "correlations": acf.correlations,
            "start_time": s.start_time(),
        }),
        plot: svg::bar_chart("sample autocorrelation", &lags, &acf.correlations, Some(acf.bound)),
        table,
    })
}

fn fitted(a: &FitArgs, s: &TimeSeries) -> Result<(FitReport, bool), CliError> {
    Ok(match (a.p, a.q) {
        (Some(p), Some(q)) => (fit(s, p, q)?, false),
        _ => (select_order(s, a.p_max, a.q_max)?.2, true),
    })
}

fn model_json(m: &ArmaModel) -> Value {
    json!({
        "ar": m.ar, "ma": m.ma, "mean": m.mean, "noise_variance": m.noise_variance,
        "sign_convention": "x_t - mean = sum ar_i (x_{t-i} - mean) + z_t + sum ma_j z_{t-j}",
    })
}

fn lb_json(s: &TimeSeries, lags: Option<usize>, fitted_params: usize) -> Value {
    let lags = lags.unwrap_or_else(|| 20.min(s.len() / 4));
    match ljung_box(s, lags, fitted_params) {
        Ok(lb) => serde_json::to_value(lb).expect("serializable"),
        Err(e) => json!({ "unavailable": e.to_string() }),
    }
}

fn fit_cmd(a: &FitArgs, ctx: &mut Context) -> Result<Output, CliError> {
    let s = load_series(ctx, &a.series, a.difference)?;
    let (r, searched) = fitted(a, &s)?;
    let (p, q) = r.order();
    let diagnostics = match residual_diagnostics(&r.residuals) {
        Ok(d) => serde_json::to_value(d).expect("serializable"),
        Err(e) => json!({ "unavailable": e.to_string() }),
    };
    Ok(Output {
        results: json!({
            "order": [p, q],
            "searched": searched,
            "model": model_json(&r.model),
            "loglik": r.loglik,
            "aicc": r.aicc,
            "converged": r.converged,
            "iterations": r.iterations,
            "n": s.len(),
            "ljung_box": lb_json(&r.residuals, a.lb_lags, p + q),
            "residual_diagnostics": diagnostics,
        }),
        plot: svg::line_chart(
            &format!("ARMA({p},{q}) whitened residuals"),
            r.residuals.start_time(),
            &[("residual", r.residuals.values())],
            &[],
        ),
        table: Table::series("residual", &r.residuals),
    })
}

fn whiten_cmd(a: &FitArgs, ctx: &mut Context) -> Result<Output, CliError> {
    let s = load_series(ctx, &a.series, a.difference)?;
    let (r, searched) = fitted(a, &s)?;
    let w = whiten(&s, &r)?;
    let (p, q) = r.order();
    Ok(Output {
        results: json!({
            "order": [p, q],
            "searched": searched,
            "model": model_json(&r.model),
            "start_time": w.start_time(),
            "values": w.values(),
            "ljung_box": lb_json(&w, a.lb_lags, p + q),
        }),
        plot: svg::line_chart("whitened series", w.start_time(), &[("whitened", w.values())], &[]),
        table: Table::series("value", &w),
    })
}

fn covariate(ctx: &mut Context, src: &CovariateSource) -> Result<(TimeSeries, Value), CliError> {
    match (&src.covariate, &src.panel) {
        (Some(path), None) => {
            let x = ctx.response("covariate", path, src.covariate_column.as_deref())?;
            Ok((x, json!({ "source": "series" })))
        }
        (None, Some(path)) => {
            let panel = ctx.panel(path)?;
            let d = decompose(&panel, src.pca_component + 1, src.standardize)?;
            let score = score_series(&d, src.pca_component)?;
            let ratio = d.explained_variance[src.pca_component] / d.total_variance;
            Ok((
                score,
                json!({
                    "source": "panel",
                    "pca_component": src.pca_component,
                    "standardized": src.standardize,
                    "explained_ratio": ratio,
                    "imputed_cells": d.imputed_count,
                }),
            ))
        }
        _ => Err(CliError::Usage("exactly one of --covariate or --panel is required".into())),
    }
}

fn ccf_cmd(a: &CcfArgs, ctx: &mut Context) -> Result<Output, CliError> {
    let y = ctx.response("response", &a.response, a.column.as_deref())?;
    let (x, info) = covariate(ctx, &a.source)?;
    let (y, x) = ctx.intersect("ccf", &y, &x)?;
    let (y, x) = (differenced(y, a.difference)?, differenced(x, a.difference)?);
    let result = match a.prewhiten {
        Prewhiten::Raw => cross_correlation(&x, &y, a.max_lag)?,
        Prewhiten::X => prewhitened_ccf(&x, &y, a.max_lag, a.p_max, a.q_max, CcfMode::PrewhitenedX)?,
        Prewhiten::Both => prewhitened_ccf(&x, &y, a.max_lag, a.p_max, a.q_max, CcfMode::PrewhitenedBoth)?,
    };
    let sig = significant_lags(&result);
    let mut table = Table::new(&["lag", "ccf"]);
    for (h, c) in result.lags.iter().zip(&result.correlations) {
        table.rows.push(vec![h.to_string(), format_number(*c)]);
    }
    Ok(Output {
        results: json!({
            "mode": result.mode,
            "lag_convention": LAG_CONVENTION,
            "covariate": info,
            "difference": a.difference,
            "n": result.n,
            "bound": result.bound,
            "overlap_start": result.overlap_start,
            "selected_order": result.selected_order,
            "lags": result.lags,
            "correlations": result.correlations,
            "significant_lags": sig.iter().map(|(h, _)| *h).collect::<Vec<_>>(),
            "significant": sig.iter().map(|(h, c)| json!({ "lag": h, "correlation": c })).collect::<Vec<_>>(),
        }),
        plot: svg::bar_chart("cross-correlation", &result.lags, &result.correlations, Some(result.bound)),
        table,
    })
}

fn pca_cmd(a: &PcaArgs, ctx: &mut Context) -> Result<Output, CliError> {
    let panel = ctx.panel(&a.panel)?;
    let d = decompose(&panel, a.k, a.standardize)?;
    let k = d.k();
    let loadings: Vec<Vec<f64>> = (0..k).map(|c| d.loadings.column(c).iter().copied().collect()).collect();
    let scores: Vec<Vec<f64>> = (0..k).map(|c| d.scores.column(c).iter().copied().collect()).collect();
    let ratio: Vec<f64> = d.explained_variance.iter().map(|v| v / d.total_variance).collect();
    let names: Vec<String> = (0..k).map(|c| format!("pc{c}")).collect();
    let mut header = vec!["year"];
    header.extend(names.iter().map(String::as_str));
    let mut table = Table::new(&header);
    for i in 0..panel.n_years() {
        let mut row = vec![(d.start_time + i as i64).to_string()];
        row.extend(scores.iter().map(|s| format_number(s[i])));
        table.rows.push(row);
    }
    let plot = svg::line_chart("principal component 0 score", d.start_time, &[("pc0", &scores[0])], &[]);
    Ok(Output {
        results: json!({
            "k": k,
            "standardized": d.standardized,
            "n_years": panel.n_years(),
            "n_proxies": panel.n_proxies(),
            "imputed_count": d.imputed_count,
            "explained_variance": d.explained_variance,
            "explained_ratio": ratio,
            "total_variance": d.total_variance,
            "proxy_ids": d.proxy_ids,
            "loadings": loadings,
            "start_time": d.start_time,
            "scores": scores,
        }),
        table,
        plot,
    })
}

fn segment_cmd(a: &SegmentArgs, ctx: &mut Context) -> Result<Output, CliError> {
    let s = load_series(ctx, &a.series, a.difference)?;
    let seg = segment(&s, a.max_breaks, a.max_order, a.min_seg_len)?;
    let mut table = Table::new(&["year", "value", "segment"]);
    for (k, part) in seg.segments.iter().enumerate() {
        for i in part.start..part.end {
            table.rows.push(vec![s.time_at(i).to_string(), format_number(s.values()[i]), k.to_string()]);
        }
    }
    let mut results = serde_json::to_value(&seg).expect("serializable");
    results["difference"] = json!(a.difference);
    results["segment_count"] = json!(seg.segments.len());
    Ok(Output {
        results,
        plot: svg::line_chart("segmentation", s.start_time(), &[("series", s.values())], &seg.breakpoint_times),
        table,
    })
}

fn lagscan_cmd(a: &LagscanArgs, ctx: &mut Context) -> Result<Output, CliError> {
    let y = ctx.response("response", &a.response, a.column.as_deref())?;
    let (x, info) = covariate(ctx, &a.source)?;
    let (y, x) = ctx.intersect("lagscan", &y, &x)?;
    let scan = lag_scan(&y, &x, a.max_lag, !a.raw)?;
    let mut table = Table::new(&["rank", "lag", "regression_offset", "correlation", "significant"]);
    for (i, e) in scan.entries.iter().enumerate() {
        table.rows.push(vec![
            (i + 1).to_string(),
            e.lag.to_string(),
            e.regression_offset.to_string(),
            format_number(e.correlation),
            e.significant.to_string(),
        ]);
    }
    let mut by_lag: Vec<(i64, f64)> = scan.entries.iter().map(|e| (e.lag, e.correlation)).collect();
    by_lag.sort_by_key(|p| p.0);
    let (lags, corr): (Vec<i64>, Vec<f64>) = by_lag.into_iter().unzip();
    Ok(Output {
        results: json!({
            "mode": scan.mode,
            "lag_convention": LAG_CONVENTION,
            "offset_convention": OFFSET_CONVENTION,
            "covariate": info,
            "n": scan.n,
            "bound": scan.bound,
            "selected_order": scan.selected_order,
            "entries": scan.entries,
            "significant_lags": scan.significant().map(|e| e.lag).collect::<Vec<_>>(),
        }),
        plot: svg::bar_chart("lag scan", &lags, &corr, Some(scan.bound)),
        table,
    })
}

fn parse_range(text: &str, flag: &str) -> Result<(i64, i64), CliError> {
    let bad = || CliError::Usage(format!("{flag} expects FROM:TO with integer years, got '{text}'"));
    let (a, b) = text.split_once(':').ok_or_else(bad)?;
    let from = a.trim().parse().map_err(|_| bad())?;
    let to = b.trim().parse().map_err(|_| bad())?;
    if from > to {
        return Err(bad());
    }
    Ok((from, to))
}

struct Loaded {
    y: TimeSeries,
    x: TimeSeries,
    info: Value,
    spec: LagSpec,
    options: TransferOptions,
}

fn load_model_inputs(m: &ModelSpecArgs, ctx: &mut Context) -> Result<Loaded, CliError> {
    let spec = LagSpec::new(m.label.clone(), m.offsets.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
    let y = ctx.response("response", &m.response, m.column.as_deref())?;
    let (x, info) = covariate(ctx, &m.source)?;
    Ok(Loaded {
        y,
        x,
        info,
        spec,
        options: TransferOptions {
            intercept: !m.no_intercept,
        },
    })
}

fn transfer_cmd(a: &TransferArgs, ctx: &mut Context) -> Result<Output, CliError> {
    let l = load_model_inputs(&a.model, ctx)?;
    let model = fit_transfer_with(&l.y, &[(l.x.clone(), l.spec.clone())], a.model.p, a.model.q, l.options)?;
    ctx.alignment.push(crate::context::Alignment {
        what: "transfer fit window".into(),
        response_years: (l.y.start_time(), l.y.end_time()),
        covariate_years: (l.x.start_time(), l.x.end_time()),
        used_years: (model.fit_start, model.fit_end),
        response_trimmed: l.y.len() - model.fitted.len(),
        covariate_trimmed: 0,
    });
    let prediction = match &a.predict {
        Some(text) => {
            let (from, to) = parse_range(text, "--predict")?;
            let p = predict(&model, &[l.x.clone()], from, to)?;
            json!({
                "start_time": from,
                "mean": p.mean.values(),
                "regression": p.regression,
                "std_errors": p.std_errors,
                "innovation_std_errors": p.innovation_std_errors,
            })
        }
        None => Value::Null,
    };
    let diagnostics = match residual_diagnostics(&model.residuals) {
        Ok(d) => serde_json::to_value(d).expect("serializable"),
        Err(e) => json!({ "unavailable": e.to_string() }),
    };
    let terms: Vec<Value> = model
        .terms
        .iter()
        .map(|t| {
            json!({
                "label": t.label,
                "offset": t.offset,
                "regressor": format!("{}_{{{}}}", t.label, time_index(t.offset)),
                "coefficient": t.coefficient,
                "std_error": t.std_error,
                "dropped": t.dropped,
            })
        })
        .collect();

    let yw = l.y.window(model.fit_start, model.fit_end)?;
    let mut table = Table::new(&["year", "response", "fitted", "residual"]);
    for (i, year) in yw.times().enumerate() {
        table.rows.push(vec![
            year.to_string(),
            format_number(yw.values()[i]),
            format_number(model.fitted.values()[i]),
            format_number(model.residuals.values()[i]),
        ]);
    }
    Ok(Output {
        results: json!({
            "equation": model.equation,
            "offset_convention": OFFSET_CONVENTION,
            "covariate": l.info,
            "intercept": model.intercept,
            "intercept_std_error": model.intercept_std_error,
            "terms": terms,
            "noise": model_json(&model.noise),
            "fit_start": model.fit_start,
            "fit_end": model.fit_end,
            "n_obs": model.n_obs,
            "loglik": model.loglik,
            "aicc": model.aicc,
            "r_squared": model.r_squared,
            "converged": model.converged,
            "iterations": model.iterations,
            "residual_diagnostics": diagnostics,
            "prediction": prediction,
        }),
        plot: svg::line_chart(
            "response and fitted values",
            yw.start_time(),
            &[("response", yw.values()), ("fitted", model.fitted.values())],
            &[],
        ),
        table,
    })
}

fn holdout_cmd(a: &HoldoutArgs, ctx: &mut Context) -> Result<Output, CliError> {
    let blocks: Vec<(i64, i64)> = a
        .blocks
        .iter()
        .map(|b| parse_range(b, "--block"))
        .collect::<Result<_, _>>()?;
    let l = load_model_inputs(&a.model, ctx)?;
    let builder = TransferBuilder {
        covariates: vec![(l.x.clone(), l.spec.clone())],
        error_p: a.model.p,
        error_q: a.model.q,
        options: l.options,
    };
    let lagged = holdout_eval(&l.y, &builder, &blocks)?;
    let baseline = holdout_eval(&l.y, &ConstantMean, &blocks)?;

    let mut table = Table::new(&["year", "truth", "prediction", "baseline", "block"]);
    let mut pred_line = vec![f64::NAN; l.y.len()];
    for (k, (b, base)) in lagged.blocks.iter().zip(&baseline.blocks).enumerate() {
        for (i, year) in (b.from..=b.to).enumerate() {
            let idx = l.y.index_of(year).expect("validated block");
            pred_line[idx] = b.predictions[i];
            table.rows.push(vec![
                year.to_string(),
                format_number(l.y.values()[idx]),
                format_number(b.predictions[i]),
                format_number(base.predictions[i]),
                k.to_string(),
            ]);
        }
    }
    let skill = 1.0 - lagged.pooled_rmse / baseline.pooled_rmse;
    Ok(Output {
        results: json!({
            "offset_convention": OFFSET_CONVENTION,
            "covariate": l.info,
            "offsets": l.spec.offsets,
            "error_order": [a.model.p, a.model.q],
            "blocks": lagged.blocks,
            "pooled_rmse": lagged.pooled_rmse,
            "n": lagged.n,
            "baseline": { "model": "constant mean", "blocks": baseline.blocks, "pooled_rmse": baseline.pooled_rmse },
            "skill_vs_baseline": skill,
        }),
        plot: svg::line_chart(
            "holdout predictions",
            l.y.start_time(),
            &[("truth", l.y.values()), ("prediction", &pred_line)],
            &[],
        ),
        table,
    })
}

fn csv_bytes(start: i64, names: &[&str], cols: &[&[f64]]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_csv(&mut buf, start, names, cols)?;
    Ok(buf)
}

fn simulate_cmd(a: &SimulateArgs, seed: u64, ctx: &mut Context) -> Result<Output, CliError> {
    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", a.out_dir.display())))?;
    let path = |name: &str| a.out_dir.join(name);
    let (main, params): (TimeSeries, Value) = match a.kind {
        FixtureKind::Arma => {
            let model = ArmaModel::new(a.ar.clone(), a.ma.clone(), a.mean, a.variance)?;
            let s = simulate(&model, a.n, seed)?;
            let s = TimeSeries::new(a.start, s.into_values())?;
            ctx.wrote("series", &path("series.csv"), &csv_bytes(a.start, &["value"], &[s.values()])?)?;
            (s, json!({ "model": model_json(&model) }))
        }
        FixtureKind::WalkNoise => {
            let s = random_walk_plus_noise(a.n, a.step_sd, a.noise_sd, seed)?;
            let s = TimeSeries::new(a.start, s.into_values())?;
            ctx.wrote("series", &path("series.csv"), &csv_bytes(a.start, &["value"], &[s.values()])?)?;
            (s, json!({ "step_sd": a.step_sd, "noise_sd": a.noise_sd }))
        }
        FixtureKind::Transfer => {
            let lag = a.lag.unwrap_or(3);
            let coef = a.coef.unwrap_or(2.0);
            let ar = if a.ar.is_empty() { vec![0.5] } else { a.ar.clone() };
            let xm = ArmaModel::new(ar.clone(), a.ma.clone(), 0.0, 1.0)?;
            let em = ArmaModel::white_noise(0.0, a.noise_sd * a.noise_sd)?;
            let sys = transfer_system(a.n, lag, coef, &xm, &em, 0, seed)?;
            let x_start = a.start - lag as i64;
            ctx.wrote("response", &path("response.csv"), &csv_bytes(a.start, &["response"], &[sys.response.values()])?)?;
            ctx.wrote("covariate", &path("covariate.csv"), &csv_bytes(x_start, &["covariate"], &[sys.covariate.values()])?)?;
            let y = TimeSeries::new(a.start, sys.response.into_values())?;
            (
                y,
                json!({
                    "equation": format!("response_t = {coef}*covariate_{{{}}} + e_t", time_index(-(lag as i64))),
                    "covariate_ar": ar, "noise_sd": a.noise_sd,
                }),
            )
        }
        FixtureKind::LagPanel => {
            let cfg = LagPanelConfig {
                start_time: a.start,
                n: a.n,
                n_proxies: a.proxies,
                lag: a.lag.unwrap_or(14),
                coefficient: a.coef.unwrap_or(0.5),
                factor_ar: if a.ar.is_empty() { vec![0.5, -0.3] } else { a.ar.clone() },
                response_noise_sd: a.noise_sd,
                proxy_noise_sd: 1.0,
            };
            let lp = lag_panel(&cfg, seed)?;
            ctx.wrote("response", &path("response.csv"), &csv_bytes(a.start, &["response"], &[lp.response.values()])?)?;
            let cols: Vec<Vec<f64>> = (0..a.proxies)
                .map(|j| lp.panel.values().column(j).iter().copied().collect())
                .collect();
            let col_refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let names: Vec<&str> = lp.panel.proxy_ids().iter().map(String::as_str).collect();
            ctx.wrote("panel", &path("panel.csv"), &csv_bytes(a.start, &names, &col_refs)?)?;
            ctx.wrote("factor", &path("factor.csv"), &csv_bytes(a.start, &["factor"], &[lp.factor.values()])?)?;
            (lp.response, serde_json::to_value(&cfg).expect("serializable"))
        }
    };
    let mut table = Table::new(&["role", "path", "sha256"]);
    for o in &ctx.outputs {
        table.rows.push(vec![o.role.clone(), o.path.clone(), o.sha256.clone()]);
    }
    Ok(Output {
        results: json!({
            "kind": a.kind,
            "seed": seed,
            "n": a.n,
            "start": a.start,
            "parameters": params,
            "files": ctx.outputs,
        }),
        plot: svg::line_chart("simulated series", main.start_time(), &[("series", main.values())], &[]),
        table,
    })
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tsrecon"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn json_ok(dir: &Path, args: &[&str]) -> Value {
    let out = run(dir, args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn sha(path: &Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(path).unwrap()))
}

#[test]
fn diff_document_schema() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "s.csv", "year,v\n2000,1\n2001,4\n2002,NA\n2003,10\n");
    let doc = json_ok(dir.path(), &["diff", "--input", "s.csv"]);
    assert_eq!(doc["command"], "diff");
    for key in ["params", "results", "manifest"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert_eq!(doc["params"]["seed"], 0);
    assert_eq!(doc["results"]["lag"], 1);
    assert_eq!(doc["results"]["start_time"], 2001);
    let v = doc["results"]["values"].as_array().unwrap();
    assert_eq!(v.len(), 3);
    assert_eq!(v[0].as_f64(), Some(3.0));
    // NaN serializes as null
    assert!(v[1].is_null() && v[2].is_null());
}

#[test]
fn acf_plot_has_one_bar_per_lag_and_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run(d, &["simulate", "--kind", "walk-noise", "--out-dir", "fx", "--seed", "5"]).status.code(), Some(0));
    let doc = json_ok(d, &["acf", "--input", "fx/series.csv", "--difference", "1", "--max-lag", "40", "--plot", "acf.svg"]);
    assert_eq!(doc["results"]["lags"].as_array().unwrap().len(), 41);
    let svg = std::fs::read_to_string(d.join("acf.svg")).unwrap();
    assert_eq!(svg.matches("class=\"bar\"").count(), 41);
    assert_eq!(svg.matches("class=\"bound\"").count(), 2);
    let plot = &doc["manifest"]["outputs"][0];
    assert_eq!(plot["role"], "plot");
    assert_eq!(plot["sha256"].as_str().unwrap(), sha(&d.join("acf.svg")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "short.csv", "year,v\n2000,1\n2001,2\n2002,3\n");
    write(d, "bad.csv", "year,v\n2000,1\n2001,abc\n");
    assert_eq!(run(d, &["diff", "--input", "short.csv"]).status.code(), Some(0));
    // computation errors
    assert_eq!(run(d, &["acf", "--input", "short.csv", "--max-lag", "10"]).status.code(), Some(1));
    assert_eq!(run(d, &["diff", "--input", "missing.csv"]).status.code(), Some(1));
    let bad = run(d, &["diff", "--input", "bad.csv"]);
    assert_eq!(bad.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&bad.stderr);
    assert!(msg.contains("bad.csv") && msg.contains("row 2") && msg.contains("column 2"), "{msg}");
    // usage errors
    assert_eq!(run(d, &["diff"]).status.code(), Some(2));
    assert_eq!(run(d, &["nonsense"]).status.code(), Some(2));
    assert_eq!(run(d, &["diff", "--input", "short.csv", "--out", "xml"]).status.code(), Some(2));
    assert_eq!(run(d, &["ccf", "--response", "short.csv"]).status.code(), Some(2));
    assert_eq!(run(d, &["fit-arma", "--input", "short.csv", "--p", "1"]).status.code(), Some(2));
    assert_eq!(
        run(d, &["holdout", "--response", "short.csv", "--covariate", "short.csv", "--offsets", "0", "--block", "x"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a = run(d, &["simulate", "--kind", "arma", "--ar", "0.6", "--ma", "0.3", "--out-dir", "a", "--seed", "9"]);
    let b = run(d, &["simulate", "--kind", "arma", "--ar", "0.6", "--ma", "0.3", "--out-dir", "a", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
    let f1 = run(d, &["fit-arma", "--input", "a/series.csv", "--p-max", "2", "--q-max", "2"]);
    let f2 = run(d, &["fit-arma", "--input", "a/series.csv", "--p-max", "2", "--q-max", "2"]);
    assert_eq!(f1.status.code(), Some(0));
    assert_eq!(f1.stdout, f2.stdout);
    let c = run(d, &["simulate", "--kind", "arma", "--ar", "0.6", "--out-dir", "c", "--seed", "10"]);
    assert_eq!(c.status.code(), Some(0));
    assert_ne!(std::fs::read(d.join("a/series.csv")).unwrap(), std::fs::read(d.join("c/series.csv")).unwrap());
}

#[test]
fn manifest_hashes_match_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    json_ok(d, &["simulate", "--kind", "transfer", "--out-dir", "t", "--seed", "2"]);
    let doc = json_ok(
        d,
        &["lagscan", "--response", "t/response.csv", "--covariate", "t/covariate.csv", "--max-lag", "8"],
    );
    let inputs = doc["manifest"]["inputs"].as_array().unwrap();
    assert_eq!(inputs.len(), 2);
    for rec in inputs {
        let path = d.join(rec["path"].as_str().unwrap());
        assert_eq!(rec["sha256"].as_str().unwrap(), sha(&path));
    }
    let align = &doc["manifest"]["alignment"][0];
    assert_eq!(align["used_years"][0], 1850);
    assert_eq!(align["covariate_trimmed"], 3);
    assert_eq!(doc["results"]["entries"][0]["lag"], 3);
    assert_eq!(doc["results"]["entries"][0]["regression_offset"], -3);
}

#[test]
fn numbers_carry_at_most_fifteen_significant_digits() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    json_ok(d, &["simulate", "--kind", "arma", "--ar", "0.5", "--out-dir", "a"]);
    let out = run(d, &["acf", "--input", "a/series.csv", "--max-lag", "5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let doc: Value = serde_json::from_str(&text).unwrap();
    for c in doc["results"]["correlations"].as_array().unwrap() {
        let s = c.to_string();
        let digits: String = s.chars().take_while(|ch| *ch != 'e').filter(char::is_ascii_digit).collect();
        assert!(digits.trim_start_matches('0').len() <= 15, "{s}");
    }
}

#[test]
fn panel_ccf_finds_lag_fourteen() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    json_ok(d, &["simulate", "--kind", "lag-panel", "--out-dir", "lp", "--seed", "11"]);
    let doc = json_ok(
        d,
        &["ccf", "--response", "lp/response.csv", "--panel", "lp/panel.csv", "--max-lag", "40", "--plot", "c.svg"],
    );
    let r = &doc["results"];
    assert_eq!(r["mode"], "prewhitened-x");
    assert_eq!(r["significant"][0]["lag"], 14);
    assert!(r["lag_convention"].as_str().unwrap().contains("covariate leads"));
    let svg = std::fs::read_to_string(d.join("c.svg")).unwrap();
    assert_eq!(svg.matches("class=\"bar\"").count(), 81);
}

#[test]
fn csv_output_round_trips_through_input_reader() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    json_ok(d, &["simulate", "--kind", "walk-noise", "--out-dir", "w", "--seed", "4"]);
    let out = run(d, &["diff", "--input", "w/series.csv", "--out", "csv", "--manifest", "m.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stderr.is_empty());
    std::fs::write(d.join("diff.csv"), &out.stdout).unwrap();
    let manifest: Value = serde_json::from_slice(&std::fs::read(d.join("m.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "diff");

    let doc = json_ok(d, &["diff", "--input", "w/series.csv"]);
    let from_json: Vec<f64> = doc["results"]["values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let (series, _, _) = tsrecon::io::load_response(&d.join("diff.csv"), None).unwrap();
    assert_eq!(series.start_time(), 1851);
    assert_eq!(series.values(), from_json.as_slice());

    // manifest goes to stderr when no path is given
    let out = run(d, &["diff", "--input", "w/series.csv", "--out", "csv"]);
    let m: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap(), sha(&d.join("w/series.csv")));
}

#[test]
fn transfer_and_holdout_recover_the_lag() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    json_ok(d, &["simulate", "--kind", "transfer", "--out-dir", "t", "--seed", "6"]);
    let common = ["--response", "t/response.csv", "--covariate", "t/covariate.csv"];
    let mut args = vec!["transfer"];
    args.extend(common);
    args.extend(["--offsets=-3", "--p", "1", "--predict", "1990:1999"]);
    let doc = json_ok(d, &args);
    let r = &doc["results"];
    assert!(r["equation"].as_str().unwrap().contains("x_{t-3}"));
    let b = r["terms"][0]["coefficient"].as_f64().unwrap();
    assert!((b - 2.0).abs() < 0.3, "{b}");
    let se = r["prediction"]["std_errors"].as_array().unwrap();
    assert_eq!(se.len(), 10);

    let mut args = vec!["holdout"];
    args.extend(common);
    args.extend(["--offsets=-3", "--block", "1900:1919", "--block", "1960:1979"]);
    let doc = json_ok(d, &args);
    let lagged = doc["results"]["pooled_rmse"].as_f64().unwrap();
    let base = doc["results"]["baseline"]["pooled_rmse"].as_f64().unwrap();
    assert!(lagged < base, "{lagged} vs {base}");
    assert_eq!(doc["results"]["n"], 40);
}

#[test]
fn segment_and_pca_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut text = String::from("year,v\n");
    for i in 0..120 {
        let noise = ((i * 7919) % 13) as f64 / 13.0 - 0.5;
        let level = if i < 60 { 0.0 } else { 6.0 };
        text.push_str(&format!("{},{}\n", 1900 + i, level + noise));
    }
    write(d, "shift.csv", &text);
    let doc = json_ok(d, &["segment", "--input", "shift.csv", "--max-order", "1", "--plot", "s.svg"]);
    let times: Vec<i64> = doc["results"]["breakpoint_times"].as_array().unwrap().iter().map(|v| v.as_i64().unwrap()).collect();
    assert!(times.iter().any(|&t| (t - 1960).abs() <= 2), "{times:?}");
    let svg = std::fs::read_to_string(d.join("s.svg")).unwrap();
    assert_eq!(svg.matches("class=\"break\"").count(), times.len());

    json_ok(d, &["simulate", "--kind", "lag-panel", "--out-dir", "lp", "--proxies", "12", "--seed", "1"]);
    let doc = json_ok(d, &["pca", "--panel", "lp/panel.csv", "--k", "2"]);
    let ratio = doc["results"]["explained_ratio"].as_array().unwrap();
    assert_eq!(ratio.len(), 2);
    assert!(ratio[0].as_f64().unwrap() > ratio[1].as_f64().unwrap());
}

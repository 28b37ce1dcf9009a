mod args;
mod commands;
mod context;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, OutFormat};
use context::{Context, Manifest};

#[derive(Debug)]
pub enum CliError {
    /// Bad flag combination or value: exit 2.
    Usage(String),
    /// Module error: exit 1.
    Compute(tsrecon::Error),
    /// File system trouble: exit 1.
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Compute(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<tsrecon::Error> for CliError {
    fn from(e: tsrecon::Error) -> Self {
        CliError::Compute(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}

fn params(cli: &Cli) -> Value {
    use args::Command::*;
    let mut p = match &cli.command {
        Diff(a) => serde_json::to_value(a),
        Acf(a) => serde_json::to_value(a),
        FitArma(a) | Whiten(a) => serde_json::to_value(a),
        Ccf(a) => serde_json::to_value(a),
        Pca(a) => serde_json::to_value(a),
        Segment(a) => serde_json::to_value(a),
        Lagscan(a) => serde_json::to_value(a),
        Transfer(a) => serde_json::to_value(a),
        Holdout(a) => serde_json::to_value(a),
        Simulate(a) => serde_json::to_value(a),
    }
    .expect("arguments serialize");
    p["seed"] = json!(cli.seed);
    p["out"] = json!(cli.out);
    p["plot"] = json!(cli.plot);
    p
}

fn run(cli: Cli, argv: Vec<String>) -> Result<(), CliError> {
    let mut ctx = Context::default();
    let output = commands::run(&cli.command, cli.seed, &mut ctx)?;
    if let Some(path) = &cli.plot {
        ctx.wrote("plot", path, output.plot.as_bytes())?;
    }
    let name = cli.command.name();
    let mut manifest = Manifest::new(name, argv, cli.seed, ctx).to_value();
    tsrecon::io::round_json(&mut manifest);
    if let Some(path) = &cli.manifest {
        let text = serde_json::to_string_pretty(&manifest).expect("json");
        std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let io_err = |e: std::io::Error| CliError::Io(format!("cannot write output: {e}"));
    match cli.out {
        OutFormat::Json => {
            let mut doc = json!({
                "command": name,
                "params": params(&cli),
                "results": output.results,
                "manifest": manifest,
            });
            tsrecon::io::round_json(&mut doc);
            let text = serde_json::to_string_pretty(&doc).expect("json");
            writeln!(out, "{text}").map_err(io_err)?;
        }
        OutFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            let wrap = |e: csv::Error| CliError::Io(format!("cannot write output: {e}"));
            w.write_record(&output.table.header).map_err(wrap)?;
            for row in &output.table.rows {
                w.write_record(row).map_err(wrap)?;
            }
            w.flush().map_err(io_err)?;
            if cli.manifest.is_none() {
                eprintln!("{}", serde_json::to_string(&manifest).expect("json"));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        // clap prints help/version with status 0 and usage errors with status 2
        Err(e) => e.exit(),
    };
    match run(cli, argv.into_iter().skip(1).collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

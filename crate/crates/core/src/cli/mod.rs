//! The `locoh` experiment runner.
//!
//! Each subcommand runs one experiment and emits a [`ResultRecord`] holding
//! the fully resolved configuration (defaults and seed included), the
//! library version and the numeric payload. `sweep` repeats an experiment
//! over the values of one ranged parameter and emits one row per value.
//!
//! Exit codes: 2 for invalid configuration, 3 for dimension overflow, 4 for
//! degenerate input, 1 for I/O failures.

mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use args::*;
pub use commands::{chain_product_state, StateFile, DEFAULT_SAMPLES, SEED_ENV};
pub use output::{flatten_rows, to_csv, write_atomic};

use crate::error::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 1,
            CliError::Core(Error::Overflow(_)) => 3,
            CliError::Core(Error::Degenerate(_)) => 4,
            CliError::Core(_) => 2,
        }
    }
}

/// Self-describing output of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub id: String,
    pub subcommand: String,
    pub timestamp: u64,
    pub version: String,
    pub seed: Option<u64>,
    pub config: Value,
    pub payload: Value,
}

/// Output of a `sweep`: the ranged parameter and one record per value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub parameter: String,
    pub values: Vec<Value>,
    pub records: Vec<ResultRecord>,
}

/// Top-level config-file keys that are not experiment parameters.
const RUNNER_KEYS: [&str; 6] = ["subcommand", "output", "format", "threads", "ranges", "config"];

struct ConfigFile {
    subcommand: Option<String>,
    output: Option<std::path::PathBuf>,
    format: Option<Format>,
    threads: Option<usize>,
    ranges: serde_json::Map<String, Value>,
    params: serde_json::Map<String, Value>,
}

fn load_config(path: Option<&std::path::Path>) -> Result<ConfigFile, CliError> {
    let mut cfg = ConfigFile {
        subcommand: None,
        output: None,
        format: None,
        threads: None,
        ranges: Default::default(),
        params: Default::default(),
    };
    let Some(path) = path else { return Ok(cfg) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let Value::Object(mut obj) =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config is not valid JSON: {e}")))?
    else {
        return Err(CliError::Config("config must be a JSON object".into()));
    };
    let bad = |k: &str| CliError::Config(format!("config key '{k}' has the wrong type"));
    if let Some(v) = obj.remove("subcommand") {
        cfg.subcommand = Some(v.as_str().ok_or_else(|| bad("subcommand"))?.to_string());
    }
    if let Some(v) = obj.remove("output") {
        cfg.output = Some(v.as_str().ok_or_else(|| bad("output"))?.into());
    }
    if let Some(v) = obj.remove("format") {
        cfg.format = Some(serde_json::from_value(v).map_err(|_| bad("format"))?);
    }
    if let Some(v) = obj.remove("threads") {
        cfg.threads = Some(serde_json::from_value(v).map_err(|_| bad("threads"))?);
    }
    if let Some(v) = obj.remove("ranges") {
        let Value::Object(r) = v else { return Err(bad("ranges")) };
        cfg.ranges = r;
    }
    for k in RUNNER_KEYS {
        obj.remove(k);
    }
    cfg.params = obj;
    Ok(cfg)
}

/// Overlays the non-null values of `top` onto `base`.
fn overlay(mut base: serde_json::Map<String, Value>, top: Value) -> Value {
    if let Value::Object(t) = top {
        for (k, v) in t {
            if !v.is_null() {
                base.insert(k, v);
            }
        }
    }
    Value::Object(base)
}

fn resolve(exp: Option<&Experiment>, cfg: &ConfigFile) -> Result<Experiment, CliError> {
    let name = match (exp, &cfg.subcommand) {
        (Some(e), Some(c)) if e.name() != c => {
            return Err(CliError::Config(format!("config is for '{c}' but the command line asks for '{}'", e.name())))
        }
        (Some(e), _) => e.name().to_string(),
        (None, Some(c)) => c.clone(),
        (None, None) => return Err(CliError::Config("no subcommand given on the command line or in the config".into())),
    };
    let cli_values = exp.map(Experiment::to_value).unwrap_or(Value::Null);
    Experiment::from_value(&name, overlay(cfg.params.clone(), cli_values)).map_err(CliError::Config)
}

fn parse_range_value(raw: &str) -> Value {
    let raw = raw.trim();
    if let Ok(i) = raw.parse::<i64>() {
        return Value::from(i);
    }
    if let Ok(x) = raw.parse::<f64>() {
        return Value::from(x);
    }
    Value::from(raw)
}

fn sweep_range(args: &SweepArgs, cfg: &ConfigFile) -> Result<(String, Vec<Value>), CliError> {
    let mut ranges: std::collections::BTreeMap<String, Vec<Value>> = Default::default();
    for (k, v) in &cfg.ranges {
        let Value::Array(vals) = v else {
            return Err(CliError::Config(format!("range '{k}' must be a list")));
        };
        ranges.insert(k.clone(), vals.clone());
    }
    for spec in &args.ranges {
        let (k, vals) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("range '{spec}' is not of the form key=v1,v2,...")))?;
        let vals: Vec<Value> = vals.split(',').filter(|s| !s.trim().is_empty()).map(parse_range_value).collect();
        ranges.insert(k.trim().to_string(), vals);
    }
    if ranges.len() != 1 {
        return Err(CliError::Config(format!("sweep needs exactly one ranged parameter, got {}", ranges.len())));
    }
    let (k, vals) = ranges.into_iter().next().expect("one range");
    if vals.is_empty() {
        return Err(CliError::Config(format!("range '{k}' is empty")));
    }
    Ok((k, vals))
}

fn record(exp: &Experiment) -> Result<ResultRecord, CliError> {
    let out = commands::run(exp)?;
    let seed_part = out.seed.map_or_else(|| "noseed".to_string(), |s| s.to_string());
    Ok(ResultRecord {
        id: format!("{}-{seed_part}", exp.name()),
        subcommand: exp.name().to_string(),
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        version: crate::VERSION.to_string(),
        seed: out.seed,
        config: out.config,
        payload: out.payload,
    })
}

/// Rendered result of a command line, ready to print or write.
pub struct Rendered {
    pub text: String,
    pub output: Option<std::path::PathBuf>,
}

fn execute(cli: &Cli, cfg: &ConfigFile) -> Result<String, CliError> {
    let format = cli.format.or(cfg.format).unwrap_or(Format::Json);
    match &cli.command {
        Some(Command::Sweep(sweep)) => {
            let (key, values) = sweep_range(sweep, cfg)?;
            let base = resolve(sweep.experiment.as_ref(), cfg)?;
            let mut records = Vec::with_capacity(values.len());
            for v in &values {
                let Value::Object(mut obj) = base.to_value() else { unreachable!("arguments serialize to objects") };
                obj.insert(key.clone(), v.clone());
                let exp = Experiment::from_value(base.name(), Value::Object(obj))
                    .map_err(|e| CliError::Config(format!("bad value {v} for '{key}': {e}")))?;
                records.push(record(&exp)?);
            }
            let sweep = SweepRecord { parameter: key, values, records };
            match format {
                Format::Json => Ok(serde_json::to_string_pretty(&sweep).expect("records serialize") + "\n"),
                Format::Csv => {
                    let rows = sweep
                        .records
                        .iter()
                        .zip(&sweep.values)
                        .flat_map(|(r, v)| {
                            let param = sweep.parameter.clone();
                            flatten_rows(&r.payload).into_iter().map(move |mut row| {
                                row.insert(0, (param.clone(), v.clone()));
                                row
                            })
                        })
                        .collect::<Vec<_>>();
                    to_csv(&rows)
                }
            }
        }
        Some(Command::Experiment(exp)) => render(&record(&resolve(Some(exp), cfg)?)?, format),
        None => render(&record(&resolve(None, cfg)?)?, format),
    }
}

fn render(rec: &ResultRecord, format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(rec).expect("records serialize") + "\n"),
        Format::Csv => to_csv(&flatten_rows(&rec.payload)),
    }
}

/// Parses `args` and runs the experiment, returning the rendered output.
pub fn run<I, T>(args: I) -> Result<Rendered, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    let cfg = load_config(cli.config.as_deref())?;
    let threads = cli.threads.or(cfg.threads);
    let output = cli.output.clone().or_else(|| cfg.output.clone());
    let text = match threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(format!("cannot start thread pool: {e}")))?
            .install(|| execute(&cli, &cfg))?,
        None => execute(&cli, &cfg)?,
    };
    Ok(Rendered { text, output })
}

/// Binary entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    // Help and version requests are not errors.
    if let Err(e) = Cli::try_parse_from(&args) {
        if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
            let _ = e.print();
            return 0;
        }
    }
    match run(args) {
        Ok(Rendered { text, output: Some(path) }) => match write_atomic(&path, text.as_bytes()) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("locoh: {e}");
                e.exit_code()
            }
        },
        Ok(Rendered { text, output: None }) => {
            print!("{text}");
            0
        }
        Err(e) => {
            eprintln!("locoh: {e}");
            e.exit_code()
        }
    }
}

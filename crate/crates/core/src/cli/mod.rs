//! Command-line front end: `measure`, `sweep`, `sample` and `builtins`.
//!
//! Exit codes: 0 on success, 1 when a model or value fails validation, 2 on
//! usage errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::algebra::SolveMode;
use crate::dfa::DfaError;
use crate::measures::{format_float, JointDistribution, Measure, MeasureError, MeasureValue, OpacityReport};
use crate::models::{ModelBundle, ModelError};
use crate::oracle::{enumerate_joint, estimate_joint, max_cell_deviation, OracleError, SampleConfig, RNG_ALGORITHM};
use crate::prob::{fmt_rational, parse_rational, to_f64, Rational};
use crate::sched::SchedError;

mod builtin;
mod model_file;

pub use builtin::{bundle_joint, parse_builtin, resolve_builtin, BUILTINS};
pub use model_file::{compile_bundle, parse_model, CompileError, FileTransition, ModelFile, ObservationDecl, ParseError};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Invalid(_) => 1,
        }
    }
}

macro_rules! invalid_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Invalid(e.to_string())
            }
        })*
    };
}

invalid_from!(ModelError, MeasureError, SchedError, DfaError, OracleError, ParseError, CompileError);

#[derive(Parser, Debug)]
#[command(name = "opacity", version, about = "Exact probabilistic opacity measures for finite probabilistic automata")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute opacity measures of one model.
    Measure(MeasureArgs),
    /// Evaluate measures over a grid of builtin parameters.
    Sweep(SweepArgs),
    /// Estimate the joint distribution by seeded sampling.
    Sample(SampleArgs),
    /// List builtin models and their parameters.
    Builtins,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Args, Debug)]
struct Source {
    /// Builtin model, e.g. `dining:q=1/3`.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    builtin: Option<String>,
    /// Path to an `.opm` model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Predicate defined in the model file.
    #[arg(long, requires = "model")]
    predicate: Option<String>,
    /// Observation defined in the model file.
    #[arg(long, requires = "model")]
    observation: Option<String>,
}

#[derive(Args, Debug)]
struct MeasureArgs {
    #[command(flatten)]
    source: Source,
    /// Report only this measure (repeatable).
    #[arg(long = "measure", value_parser = parse_measure)]
    measures: Vec<Measure>,
    /// Full report: all measures, opacity flags and per-class figures.
    #[arg(long, conflicts_with = "measures")]
    all: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Use the floating-point solver.
    #[arg(long)]
    float: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Builtin model to sweep.
    #[arg(long)]
    builtin: String,
    /// `param=lo..hi` (step 1) or `param=lo..hi:step`; repeatable.
    #[arg(long = "range", required = true)]
    ranges: Vec<String>,
    /// `param=value`, comma-separated or repeated.
    #[arg(long = "fixed")]
    fixed: Vec<String>,
    /// Measure column (repeatable, default all four).
    #[arg(long = "measure", value_parser = parse_measure)]
    measures: Vec<Measure>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long)]
    float: bool,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = crate::oracle::DEFAULT_MAX_LEN)]
    max_len: usize,
    /// Also print the exact joint and the largest cell deviation.
    #[arg(long)]
    exact: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn parse_measure(s: &str) -> Result<Measure, String> {
    s.parse()
}

/// Runs the tool on `argv` (program name first) and returns the exit code and output.
pub fn run_cli<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return (code, e.render().to_string());
        }
    };
    let result = match cli.command {
        Command::Measure(args) => measure(&args),
        Command::Sweep(args) => sweep(&args),
        Command::Sample(args) => sample(&args),
        Command::Builtins => Ok(builtins()),
    };
    match result {
        Ok(out) => (0, out),
        Err(e) => (e.exit_code(), format!("error: {e}\n")),
    }
}

fn load(source: &Source) -> Result<ModelBundle, CliError> {
    if let Some(spec) = &source.builtin {
        let (name, params) = parse_builtin(spec)?;
        return resolve_builtin(&name, &params);
    }
    let path = source.model.as_ref().expect("clap enforces a source");
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mf = parse_model(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let predicate = pick("predicate", source.predicate.as_deref(), &mf.predicate_names())?;
    let observation = pick("observation", source.observation.as_deref(), &mf.observation_names())?;
    let mut bundle = compile_bundle(&mf, &predicate, &observation)?;
    bundle.name = path.file_stem().map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned());
    Ok(bundle)
}

fn pick(what: &str, given: Option<&str>, available: &[&str]) -> Result<String, CliError> {
    match (given, available) {
        (Some(name), _) => Ok(name.to_string()),
        (None, [only]) => Ok(only.to_string()),
        (None, []) => Err(CliError::Invalid(format!("the model file defines no {what}"))),
        (None, _) => Err(CliError::Usage(format!("choose a {what} with --{what} ({})", available.join(", ")))),
    }
}

fn mode(float: bool) -> SolveMode {
    if float {
        SolveMode::Float
    } else {
        SolveMode::Exact
    }
}

fn show(v: &MeasureValue, float: bool) -> String {
    if float {
        format_float(v.to_f64())
    } else {
        v.to_string()
    }
}

fn show_rational(r: &Rational, float: bool) -> String {
    if float {
        format_float(to_f64(r))
    } else {
        fmt_rational(r)
    }
}

fn yes_no(b: bool) -> String {
    if b { "yes" } else { "no" }.into()
}

/// Left-aligned columns separated by two spaces.
fn table(rows: &[Vec<String>]) -> String {
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> =
        (0..width).map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            line.push_str(cell);
            if c + 1 < row.len() {
                line.push_str(&" ".repeat(widths[c] - cell.chars().count() + 2));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

fn csv(rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 input")
}

fn render(format: Format, rows: &[Vec<String>]) -> String {
    match format {
        Format::Text => table(rows),
        Format::Csv => csv(rows),
    }
}

fn measure(args: &MeasureArgs) -> Result<String, CliError> {
    let bundle = load(&args.source)?;
    let joint = bundle_joint(&bundle, mode(args.float))?;
    if !args.measures.is_empty() {
        let values: Vec<String> = args.measures.iter().map(|m| show(&m.evaluate(&joint), args.float)).collect();
        return Ok(match (args.format, values.len()) {
            (Format::Text, 1) => format!("{}\n", values[0]),
            (Format::Text, _) => table(&args.measures.iter().zip(values).map(|(m, v)| vec![m.to_string(), v]).collect::<Vec<_>>()),
            (Format::Csv, _) => {
                let mut header = vec!["model".to_string()];
                header.extend(args.measures.iter().map(|m| m.to_string()));
                let mut row = vec![bundle.name.clone()];
                row.extend(values);
                csv(&[header, row])
            }
        });
    }
    let report = OpacityReport::from_joint(&joint);
    let f = args.float;
    let summary = [
        ("lpo", show_rational(report.lpo.value(), f)),
        ("lpso", show_rational(report.lpso.value(), f)),
        ("rpo", show_rational(report.rpo.value(), f)),
        ("rpso", format_float(report.rpso)),
        ("opaque", yes_no(report.opaque)),
        ("sym_opaque", yes_no(report.sym_opaque)),
        ("conditional_entropy", format_float(report.conditional_entropy)),
    ];
    match args.format {
        Format::Csv => {
            let mut header = vec!["model".to_string()];
            let mut row = vec![bundle.name.clone()];
            for (k, v) in summary {
                header.push(k.into());
                row.push(v);
            }
            Ok(csv(&[header, row]))
        }
        Format::Text => {
            let mut rows = vec![vec!["model".to_string(), bundle.name.clone()]];
            rows.extend(summary.into_iter().map(|(k, v)| vec![k.to_string(), v]));
            let mut out = table(&rows);
            out.push('\n');
            let mut classes = vec![vec!["class".to_string(), "P(o)".into(), "P(phi|o)".into(), "V(o)".into()]];
            let dash = || "-".to_string();
            for c in &report.classes {
                classes.push(vec![
                    c.label.clone(),
                    show_rational(&c.probability, f),
                    c.phi_given.as_ref().map_or_else(dash, |r| show_rational(r, f)),
                    c.vulnerability.as_ref().map_or_else(dash, |r| show_rational(r, f)),
                ]);
            }
            out.push_str(&table(&classes));
            for w in &report.warnings {
                out.push_str(&format!("warning: {w}\n"));
            }
            Ok(out)
        }
    }
}

/// Parses `k=lo..hi` or `k=lo..hi:step` into its inclusive list of values.
fn parse_range(spec: &str) -> Result<(String, Vec<Rational>), CliError> {
    let bad = || CliError::Usage(format!("bad range `{spec}` (expected param=lo..hi or param=lo..hi:step)"));
    let (key, body) = spec.split_once('=').ok_or_else(bad)?;
    let (bounds, step) = body.split_once(':').unwrap_or((body, "1"));
    let (lo, hi) = bounds.split_once("..").ok_or_else(bad)?;
    let num = |s: &str| parse_rational(s.trim()).ok_or_else(bad);
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if step <= Rational::from_integer(0.into()) || lo > hi {
        return Err(bad());
    }
    let mut values = Vec::new();
    let mut v = lo;
    while v <= hi {
        if values.len() >= 100_000 {
            return Err(CliError::Usage(format!("range `{spec}` has too many points")));
        }
        values.push(v.clone());
        v += &step;
    }
    Ok((key.trim().to_string(), values))
}

fn sweep(args: &SweepArgs) -> Result<String, CliError> {
    let (name, mut base) = parse_builtin(&args.builtin)?;
    for item in &args.fixed {
        let (_, extra) = parse_builtin(&format!(":{item}"))?;
        base.extend(extra);
    }
    let ranges = args.ranges.iter().map(|r| parse_range(r)).collect::<Result<Vec<_>, _>>()?;
    let measures = if args.measures.is_empty() { Measure::ALL.to_vec() } else { args.measures.clone() };

    // cartesian product, first range outermost
    let mut points: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
    for (key, values) in &ranges {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert(key.clone(), fmt_rational(v));
                    q
                })
            })
            .collect();
    }

    let mut header: Vec<String> = ranges.iter().map(|(k, _)| k.clone()).collect();
    header.extend(measures.iter().map(|m| m.to_string()));
    header.push("error".into());
    let mut rows = vec![header];
    let mut best: Vec<Option<(f64, usize, f64, usize)>> = vec![None; measures.len()];
    for point in &points {
        let mut params = base.clone();
        params.extend(point.clone());
        let mut row: Vec<String> = ranges.iter().map(|(k, _)| point[k].clone()).collect();
        let evaluated = resolve_builtin(&name, &params).and_then(|b| bundle_joint(&b, mode(args.float)));
        match evaluated {
            Ok(j) => {
                for (i, m) in measures.iter().enumerate() {
                    let v = m.evaluate(&j);
                    let x = v.to_f64();
                    let r = rows.len();
                    best[i] = Some(match best[i] {
                        None => (x, r, x, r),
                        Some((lo, lr, hi, hr)) => {
                            let (lo, lr) = if x < lo { (x, r) } else { (lo, lr) };
                            let (hi, hr) = if x > hi { (x, r) } else { (hi, hr) };
                            (lo, lr, hi, hr)
                        }
                    });
                    row.push(show(&v, args.float));
                }
                row.push(String::new());
            }
            Err(CliError::Usage(u)) => return Err(CliError::Usage(u)),
            Err(e) => {
                row.extend(measures.iter().map(|_| String::new()));
                row.push(e.to_string());
            }
        }
        rows.push(row);
    }
    let mut out = render(args.format, &rows);
    if args.format == Format::Text {
        let at = |r: usize| ranges.iter().enumerate().map(|(i, (k, _))| format!("{k}={}", rows[r][i])).collect::<Vec<_>>().join(",");
        for (m, b) in measures.iter().zip(&best) {
            if let Some((lo, lr, hi, hr)) = b {
                out.push_str(&format!("{m}: min {} at {}, max {} at {}\n", format_float(*lo), at(*lr), format_float(*hi), at(*hr)));
            }
        }
    }
    Ok(out)
}

fn sample(args: &SampleArgs) -> Result<String, CliError> {
    let cfg = SampleConfig::with_max_len(args.samples, args.seed, args.max_len).map_err(|e| CliError::Usage(e.to_string()))?;
    let bundle = load(&args.source)?;
    let empirical = estimate_joint(&bundle.system, &bundle.predicate, &bundle.observation, &cfg)?;
    let exact: Option<JointDistribution> = if args.exact {
        Some(match enumerate_joint(&bundle.system, &bundle.predicate, &bundle.observation) {
            Ok(j) => j,
            Err(OracleError::Cyclic) => bundle.joint()?,
            Err(e) => return Err(e.into()),
        })
    } else {
        None
    };

    let mut header = vec!["class".to_string(), "phi".into(), "not_phi".into()];
    if exact.is_some() {
        header.extend(["exact_phi".to_string(), "exact_not_phi".into()]);
    }
    let mut rows = vec![header];
    for (i, label) in empirical.labels().iter().enumerate() {
        let mut row = vec![label.clone(), fmt_rational(empirical.cell_at(i, true)), fmt_rational(empirical.cell_at(i, false))];
        if let Some(x) = &exact {
            row.push(fmt_rational(x.cell(label, true).expect("same labels")));
            row.push(fmt_rational(x.cell(label, false).expect("same labels")));
        }
        rows.push(row);
    }
    let mut meta = vec![
        vec!["rng".to_string(), RNG_ALGORITHM.to_string()],
        vec!["seed".into(), args.seed.to_string()],
        vec!["samples".into(), args.samples.to_string()],
    ];
    for m in Measure::ALL {
        meta.push(vec![m.to_string(), format_float(m.evaluate(&empirical).to_f64())]);
    }
    if let Some(x) = &exact {
        meta.push(vec!["max_deviation".into(), format_float(max_cell_deviation(&empirical, x))]);
    }
    Ok(match args.format {
        Format::Text => format!("{}\n{}", table(&meta), table(&rows)),
        Format::Csv => csv(&rows),
    })
}

fn builtins() -> String {
    let rows: Vec<Vec<String>> = BUILTINS.iter().map(|(n, p)| vec![n.to_string(), p.to_string()]).collect();
    table(&rows)
}

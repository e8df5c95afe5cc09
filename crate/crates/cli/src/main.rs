use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use wdrcm_cli::config::{build, parse_value, read_document, ExperimentKind};
use wdrcm_cli::error::{CliError, CliResult};
use wdrcm_cli::experiment::run;
use wdrcm_cli::plot::{emit_plot, PlotKind};

/// Experiments on weight-dependent random connection models.
///
/// Any `--a.b=value` (or `--a.b value`) argument overrides the JSON path
/// `a.b` of the configuration, and top-level fields such as `--replicas 10`
/// or `--betas '[1,2]'` may be set the same way. Values are parsed as JSON
/// when possible.
#[derive(Parser, Debug)]
#[command(name = "wdrcm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample graphs in a window and report clusters and degrees.
    Sample(RunArgs),
    /// Sweep β and report cluster sizes per grid point.
    Sweep(RunArgs),
    /// Estimate the effective decay exponent from I(n).
    DeltaEff(RunArgs),
    /// Label parameter points with their regime.
    Classify(RunArgs),
    /// Multiscale crossing and block diagnostics.
    Diagnose(RunArgs),
    /// Largest cluster of finite graphs on n vertices.
    FiniteGraph(RunArgs),
    /// Render an SVG from an output CSV.
    Plot(PlotArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// JSON configuration, or a manifest from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config's `output`, then `out/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Fill the runtime_ms column.
    #[arg(long)]
    record_timings: bool,
    /// Also write SVG plots.
    #[arg(long)]
    plot: bool,
}

#[derive(Args, Debug)]
struct PlotArgs {
    #[arg(long)]
    csv: PathBuf,
    /// One of delta-eff, sweep, degree-tail, finite-graph.
    #[arg(long)]
    kind: String,
    #[arg(long)]
    out: PathBuf,
}

/// Top-level configuration fields that may be set directly, e.g. `--replicas 10`.
const FIELD_FLAGS: [&str; 12] = [
    "model",
    "point_process",
    "sampler",
    "replicas",
    "half_width",
    "betas",
    "sizes",
    "n_grid",
    "points",
    "diagnose",
    "tail_fraction",
    "output",
];

type Overrides = Vec<(String, Value)>;

/// Splits dotted `--a.b[=v]` overrides from the arguments clap should see.
fn split_overrides(args: Vec<String>) -> CliResult<(Vec<String>, Overrides)> {
    let mut plain = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(body) = arg.strip_prefix("--") else {
            plain.push(arg);
            continue;
        };
        let (key, inline) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (body.to_string(), None),
        };
        if !key.contains('.') && !FIELD_FLAGS.contains(&key.as_str()) {
            plain.push(arg);
            continue;
        }
        let raw = match inline {
            Some(v) => v,
            None => it
                .next()
                .ok_or_else(|| CliError::Config(format!("override --{key} needs a value")))?,
        };
        overrides.push((key, parse_value(&raw)));
    }
    Ok((plain, overrides))
}

fn execute(kind: ExperimentKind, a: RunArgs, mut overrides: Overrides) -> CliResult<()> {
    let doc = a.config.as_deref().map(read_document).transpose()?;
    if let Some(seed) = a.seed {
        overrides.push(("seed".into(), Value::from(seed)));
    }
    if a.record_timings {
        overrides.push(("record_timings".into(), Value::Bool(true)));
    }
    if a.plot {
        overrides.push(("plot".into(), Value::Bool(true)));
    }
    let (cfg, echo) = build(doc, kind, &overrides)?;
    let out = a
        .out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    let threads = match a.threads {
        Some(0) => return Err(CliError::Config("--threads must be at least 1".into())),
        Some(t) => t,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    log::info!("running {} into {} with {threads} threads", kind.name(), out.display());
    let outcome = run(&cfg, echo, &out, threads)?;
    if outcome.failures > 0 {
        log::warn!("{} replicas failed; see failures.csv", outcome.failures);
    }
    for o in &outcome.manifest.outputs {
        println!("{}", out.join(&o.file).display());
    }
    println!("{}", out.join("manifest.json").display());
    Ok(())
}

fn dispatch(cli: Cli, overrides: Overrides) -> CliResult<()> {
    let (kind, args) = match cli.command {
        Command::Plot(p) => {
            if !overrides.is_empty() {
                return Err(CliError::Config("plot takes no configuration overrides".into()));
            }
            let kind = PlotKind::parse(&p.kind)
                .ok_or_else(|| CliError::Config(format!("unknown plot kind '{}'", p.kind)))?;
            return emit_plot(&p.csv, kind, &p.out);
        }
        Command::Sample(a) => (ExperimentKind::Sample, a),
        Command::Sweep(a) => (ExperimentKind::Sweep, a),
        Command::DeltaEff(a) => (ExperimentKind::DeltaEff, a),
        Command::Classify(a) => (ExperimentKind::Classify, a),
        Command::Diagnose(a) => (ExperimentKind::Diagnose, a),
        Command::FiniteGraph(a) => (ExperimentKind::FiniteGraph, a),
    };
    execute(kind, args, overrides)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = split_overrides(std::env::args().collect()).and_then(|(plain, overrides)| {
        let cli = match Cli::try_parse_from(plain) {
            Ok(c) => c,
            Err(e) => {
                let code = if e.use_stderr() { 2 } else { 0 };
                let _ = e.print();
                std::process::exit(code);
            }
        };
        dispatch(cli, overrides)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

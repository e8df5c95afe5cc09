//! Experiment runners. Every runner builds its outputs in memory in
//! deterministic (grid, replica) order; files are written afterwards and the
//! manifest last.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Value};
use wdrcm::multiscale::{block_sweep, crossing_replicas, summarise_crossings};
use wdrcm::stats::{median, Proportion};
use wdrcm::theory::log_grid;
use wdrcm::{
    classify_regime, components, degree_report, delta_eff_closed_form, delta_eff_estimate, derive_seed, sample_edges,
    sample_finite_graph, GraphSample, KernelSpec, ModelParams,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{CliError, CliResult};
use crate::manifest::{digest, RunManifest, SeedRecord, Timings, TOOL};
use crate::plot::{render, PlotKind};

pub const CLUSTER_COLUMNS: [&str; 14] = [
    "beta",
    "gamma",
    "delta",
    "kernel",
    "profile",
    "seed",
    "L_or_n",
    "n_vertices",
    "n_edges",
    "largest",
    "largest_fraction",
    "root_size",
    "reaches_boundary",
    "runtime_ms",
];

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: RunManifest,
    pub summary: Value,
    pub failures: usize,
}

/// Files and bookkeeping produced by one experiment before anything is written.
#[derive(Default)]
struct Product {
    files: Vec<(String, Vec<u8>)>,
    plots: Vec<(String, PlotKind, String)>,
    seeds: Vec<SeedRecord>,
    tasks_ms: Vec<f64>,
    summary: Value,
    failures: usize,
}

struct Csv(csv::Writer<Vec<u8>>);

impl Csv {
    fn new(header: &[&str]) -> CliResult<Self> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(header)?;
        Ok(Self(w))
    }

    fn row(&mut self, fields: &[String]) -> CliResult<()> {
        self.0.write_record(fields)?;
        Ok(())
    }

    fn finish(self) -> CliResult<Vec<u8>> {
        self.0.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s.into_bytes()
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Creates `dir` and checks that it accepts files.
pub fn prepare_output(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let probe = dir.join(".wdrcm-write-probe");
    std::fs::write(&probe, b"").map_err(|e| CliError::Io(format!("{} is not writable: {e}", dir.display())))?;
    std::fs::remove_file(&probe)?;
    Ok(())
}

pub fn run(cfg: &ExperimentConfig, echo: Value, out_dir: &Path, threads: usize) -> CliResult<RunOutcome> {
    prepare_output(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {threads} worker threads: {e}")))?;
    let start = Instant::now();
    let product = pool.install(|| match cfg.experiment {
        ExperimentKind::Sample => run_sample(cfg),
        ExperimentKind::Sweep => run_sweep(cfg),
        ExperimentKind::FiniteGraph => run_finite_graph(cfg),
        ExperimentKind::DeltaEff => run_delta_eff(cfg),
        ExperimentKind::Classify => run_classify(cfg),
        ExperimentKind::Diagnose => run_diagnose(cfg),
    })?;
    let total_ms = ms_since(start);

    let mut outputs = Vec::new();
    for (name, bytes) in &product.files {
        std::fs::write(out_dir.join(name), bytes)?;
        outputs.push(digest(name, bytes));
    }
    if cfg.plot {
        for (source, kind, name) in &product.plots {
            let (_, bytes) = product
                .files
                .iter()
                .find(|(n, _)| n == source)
                .expect("plot source is an output");
            let svg = render(*kind, std::str::from_utf8(bytes).map_err(|e| CliError::Format(e.to_string()))?)?;
            std::fs::write(out_dir.join(name), &svg)?;
            outputs.push(digest(name, svg.as_bytes()));
        }
    }
    let manifest = RunManifest {
        tool: TOOL.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: cfg.experiment.name().to_string(),
        config: echo,
        threads,
        seeds: product.seeds,
        timings: Timings {
            total_ms,
            tasks_ms: product.tasks_ms,
        },
        outputs,
    };
    manifest.write(out_dir)?;
    Ok(RunOutcome {
        out_dir: out_dir.to_path_buf(),
        manifest,
        summary: product.summary,
        failures: product.failures,
    })
}

struct TaskResult<T> {
    grid: u64,
    replica: u64,
    seed: u64,
    ms: f64,
    value: Result<T, String>,
}

/// Runs `f` over the (grid, replica) tasks in parallel, returning results in task order.
fn run_tasks<T: Send>(
    master: u64,
    grid_len: usize,
    replicas: usize,
    f: impl Fn(u64, u64) -> CliResult<T> + Sync,
) -> Vec<TaskResult<T>> {
    let tasks: Vec<(u64, u64)> = (0..grid_len as u64)
        .flat_map(|g| (0..replicas as u64).map(move |r| (g, r)))
        .collect();
    tasks
        .into_par_iter()
        .map(|(grid, replica)| {
            let seed = derive_seed(master, grid, replica);
            let t = Instant::now();
            let value = f(grid, seed).map_err(|e| e.to_string());
            TaskResult {
                grid,
                replica,
                seed,
                ms: ms_since(t),
                value,
            }
        })
        .collect()
}

fn failures_csv<T>(results: &[TaskResult<T>]) -> CliResult<Option<Vec<u8>>> {
    let failed: Vec<&TaskResult<T>> = results.iter().filter(|r| r.value.is_err()).collect();
    if failed.is_empty() {
        return Ok(None);
    }
    let mut w = Csv::new(&["grid", "replica", "seed", "error"])?;
    for r in failed {
        log::warn!("grid {} replica {} failed: {}", r.grid, r.replica, r.value.as_ref().err().unwrap());
        w.row(&[
            r.grid.to_string(),
            r.replica.to_string(),
            r.seed.to_string(),
            r.value.as_ref().err().unwrap().clone(),
        ])?;
    }
    Ok(Some(w.finish()?))
}

#[derive(Clone, Debug)]
struct ClusterRow {
    model: ModelParams,
    seed: u64,
    l_or_n: f64,
    n_vertices: usize,
    n_edges: usize,
    largest: usize,
    largest_fraction: f64,
    root_size: Option<usize>,
    reaches_boundary: bool,
}

impl ClusterRow {
    fn from_graph(g: &GraphSample, l_or_n: f64) -> Self {
        let r = components(g);
        Self {
            model: *g.params(),
            seed: g.seed(),
            l_or_n,
            n_vertices: g.n_vertices(),
            n_edges: g.edges().len(),
            largest: r.largest,
            largest_fraction: r.largest_fraction,
            root_size: r.root_component_size,
            reaches_boundary: r.root_reaches_boundary,
        }
    }

    fn fields(&self, runtime_ms: Option<f64>) -> Vec<String> {
        let m = &self.model;
        vec![
            m.beta.to_string(),
            m.kernel.gamma.to_string(),
            m.profile.delta.to_string(),
            m.kernel.variant.name().to_string(),
            m.profile.variant.name().to_string(),
            self.seed.to_string(),
            self.l_or_n.to_string(),
            self.n_vertices.to_string(),
            self.n_edges.to_string(),
            self.largest.to_string(),
            self.largest_fraction.to_string(),
            self.root_size.map(|s| s.to_string()).unwrap_or_default(),
            self.reaches_boundary.to_string(),
            runtime_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
        ]
    }
}

fn cluster_csv(cfg: &ExperimentConfig, results: &[TaskResult<ClusterRow>]) -> CliResult<Vec<u8>> {
    let mut w = Csv::new(&CLUSTER_COLUMNS)?;
    for r in results {
        if let Ok(row) = &r.value {
            w.row(&row.fields(cfg.record_timings.then_some(r.ms)))?;
        }
    }
    w.finish()
}

fn bookkeeping<T>(p: &mut Product, results: &[TaskResult<T>]) -> CliResult<()> {
    p.seeds = results
        .iter()
        .map(|r| SeedRecord {
            grid: r.grid,
            replica: r.replica,
            seed: r.seed,
        })
        .collect();
    p.tasks_ms = results.iter().map(|r| r.ms).collect();
    p.failures = results.iter().filter(|r| r.value.is_err()).count();
    if let Some(bytes) = failures_csv(results)? {
        p.files.push(("failures.csv".into(), bytes));
    }
    Ok(())
}

fn run_sample(cfg: &ExperimentConfig) -> CliResult<Product> {
    let l = cfg.half_width.expect("validated");
    let results = run_tasks(cfg.seed, 1, cfg.replicas, |_, seed| {
        let config = Arc::new(cfg.point_process.sample_window(l, seed)?);
        let g = sample_edges(config, &cfg.model, seed, cfg.sampler)?;
        let report = degree_report(&g, cfg.tail_fraction)?;
        Ok((ClusterRow::from_graph(&g, l), report, g))
    });
    let mut p = Product::default();
    let rows: Vec<TaskResult<ClusterRow>> = results
        .iter()
        .map(|r| TaskResult {
            grid: r.grid,
            replica: r.replica,
            seed: r.seed,
            ms: r.ms,
            value: r.value.as_ref().map(|v| v.0.clone()).map_err(Clone::clone),
        })
        .collect();
    p.files.push(("clusters.csv".into(), cluster_csv(cfg, &rows)?));

    let mut histogram = std::collections::BTreeMap::<usize, usize>::new();
    let mut per_replica = Vec::new();
    for r in &results {
        if let Ok((_, report, _)) = &r.value {
            for (&d, &c) in &report.histogram {
                *histogram.entry(d).or_default() += c;
            }
            per_replica.push(json!({
                "seed": r.seed,
                "mean_degree": report.mean_degree,
                "tail_index_estimate": if report.tail_index_estimate.is_finite() { json!(report.tail_index_estimate) } else { Value::Null },
                "tail_points": report.tail_points,
                "reliable": report.reliable,
            }));
        }
    }
    let mut w = Csv::new(&["degree", "count"])?;
    for (d, c) in &histogram {
        w.row(&[d.to_string(), c.to_string()])?;
    }
    p.files.push(("degrees.csv".into(), w.finish()?));
    p.plots.push(("degrees.csv".into(), PlotKind::DegreeTail, "degrees.svg".into()));

    if let Some((_, _, g)) = results.first().and_then(|r| r.value.as_ref().ok()) {
        p.files.push(("configuration.json".into(), json_bytes(&g.config().to_json_value())));
        p.files.push(("graph.json".into(), json_bytes(&g.to_json_value())));
    }
    p.summary = json!({
        "tau_target": cfg.model.kernel.tau(),
        "tail_fraction": cfg.tail_fraction,
        "replicas": per_replica,
    });
    p.files.push(("sample.json".into(), json_bytes(&p.summary)));
    bookkeeping(&mut p, &results)?;
    Ok(p)
}

/// β where the mean largest fraction first exceeds 1/2, by linear
/// interpolation between neighbouring grid points.
pub fn pseudo_critical_beta(betas: &[f64], fractions: &[f64]) -> Option<f64> {
    let i = fractions.iter().position(|&f| f > 0.5)?;
    if i == 0 {
        return Some(betas[0]);
    }
    let (b0, b1, f0, f1) = (betas[i - 1], betas[i], fractions[i - 1], fractions[i]);
    Some(b0 + (0.5 - f0) / (f1 - f0) * (b1 - b0))
}

fn run_sweep(cfg: &ExperimentConfig) -> CliResult<Product> {
    let l = cfg.half_width.expect("validated");
    let results = run_tasks(cfg.seed, cfg.betas.len(), cfg.replicas, |grid, seed| {
        let m = cfg.model.with_beta(cfg.betas[grid as usize]);
        let config = Arc::new(cfg.point_process.sample_window(l, seed)?);
        let g = sample_edges(config, &m, seed, cfg.sampler)?;
        Ok(ClusterRow::from_graph(&g, l))
    });
    let mut p = Product::default();
    p.files.push(("clusters.csv".into(), cluster_csv(cfg, &results)?));

    let mut w = Csv::new(&["beta", "replicas", "mean_largest_fraction", "theta", "theta_ci_low", "theta_ci_high"])?;
    let mut fractions = Vec::new();
    for (gi, &beta) in cfg.betas.iter().enumerate() {
        let rows: Vec<&ClusterRow> = results
            .iter()
            .filter(|r| r.grid == gi as u64)
            .filter_map(|r| r.value.as_ref().ok())
            .collect();
        let n = rows.len();
        let mean = rows.iter().map(|r| r.largest_fraction).sum::<f64>() / n.max(1) as f64;
        let theta = Proportion::new(rows.iter().filter(|r| r.reaches_boundary).count() as u64, n as u64);
        fractions.push(mean);
        w.row(&[
            beta.to_string(),
            n.to_string(),
            mean.to_string(),
            theta.estimate.to_string(),
            theta.ci_low.to_string(),
            theta.ci_high.to_string(),
        ])?;
    }
    p.files.push(("sweep_summary.csv".into(), w.finish()?));
    p.plots.push(("sweep_summary.csv".into(), PlotKind::Sweep, "sweep.svg".into()));
    let beta_hat = pseudo_critical_beta(&cfg.betas, &fractions);
    p.summary = json!({ "beta_hat": beta_hat, "half_width": l, "mean_largest_fraction": fractions });
    p.files.push(("sweep.json".into(), json_bytes(&p.summary)));
    bookkeeping(&mut p, &results)?;
    Ok(p)
}

/// Distribution-free 95% interval for the median from order statistics.
fn median_interval(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let half = wdrcm::stats::Z95 * (n as f64).sqrt() / 2.0;
    let lo = ((n as f64 / 2.0 - half).floor().max(1.0) as usize).min(n) - 1;
    let hi = ((n as f64 / 2.0 + half).ceil().max(1.0) as usize).min(n) - 1;
    (sorted[lo], sorted[hi])
}

fn run_finite_graph(cfg: &ExperimentConfig) -> CliResult<Product> {
    let results = run_tasks(cfg.seed, cfg.sizes.len(), cfg.replicas, |grid, seed| {
        let n = cfg.sizes[grid as usize];
        let g = sample_finite_graph(n, &cfg.model, seed, cfg.sampler)?;
        Ok(ClusterRow::from_graph(&g, n as f64))
    });
    let mut p = Product::default();
    p.files.push(("clusters.csv".into(), cluster_csv(cfg, &results)?));
    let mut w = Csv::new(&["n", "replicas", "median_fraction", "ci_low", "ci_high", "mean_fraction"])?;
    let mut medians = Vec::new();
    for (gi, &n) in cfg.sizes.iter().enumerate() {
        let mut fr: Vec<f64> = results
            .iter()
            .filter(|r| r.grid == gi as u64)
            .filter_map(|r| r.value.as_ref().ok().map(|row| row.largest_fraction))
            .collect();
        fr.sort_by(f64::total_cmp);
        let med = if fr.is_empty() { f64::NAN } else { median(&fr) };
        let (lo, hi) = median_interval(&fr);
        let mean = fr.iter().sum::<f64>() / fr.len().max(1) as f64;
        medians.push(json!({ "n": n, "median_fraction": med, "ci_low": lo, "ci_high": hi }));
        w.row(&[
            n.to_string(),
            fr.len().to_string(),
            med.to_string(),
            lo.to_string(),
            hi.to_string(),
            mean.to_string(),
        ])?;
    }
    p.files.push(("finite_graph_summary.csv".into(), w.finish()?));
    p.plots.push(("finite_graph_summary.csv".into(), PlotKind::FiniteGraph, "finite_graph.svg".into()));
    p.summary = json!({ "sizes": medians });
    bookkeeping(&mut p, &results)?;
    Ok(p)
}

fn run_delta_eff(cfg: &ExperimentConfig) -> CliResult<Product> {
    let (k, prof) = (cfg.model.kernel, cfg.model.profile);
    let grid = log_grid(cfg.n_grid.lo, cfg.n_grid.hi, cfg.n_grid.count);
    let t = Instant::now();
    let report = delta_eff_estimate(&k, &prof, &grid)?;
    let label = classify_regime(&k, prof.delta)?;
    let mut p = Product {
        tasks_ms: vec![ms_since(t)],
        ..Default::default()
    };
    let mut w = Csv::new(&["kernel", "gamma", "delta", "n", "I_n"])?;
    for (n, v) in report.n_grid.iter().zip(&report.i_values) {
        w.row(&[
            k.variant.name().to_string(),
            k.gamma.to_string(),
            prof.delta.to_string(),
            n.to_string(),
            v.to_string(),
        ])?;
    }
    p.files.push(("delta_eff.csv".into(), w.finish()?));
    p.plots.push(("delta_eff.csv".into(), PlotKind::DeltaEff, "delta_eff.svg".into()));
    p.summary = json!({
        "delta_eff": report.delta_eff,
        "closed_form": report.closed_form,
        "residual": report.residual,
        "label": label.label.name(),
        "provenance": label.provenance,
        "fitted_slope": report.fitted_slope,
        "fit_from": report.fit_from,
        "truncated": report.truncated,
    });
    p.files.push(("delta_eff.json".into(), json_bytes(&p.summary)));
    Ok(p)
}

fn run_classify(cfg: &ExperimentConfig) -> CliResult<Product> {
    let points: Vec<(KernelSpec, f64)> = if cfg.points.is_empty() {
        vec![(cfg.model.kernel, cfg.model.profile.delta)]
    } else {
        cfg.points
            .iter()
            .map(|pt| Ok((KernelSpec::new(pt.kernel, pt.gamma)?, pt.delta)))
            .collect::<CliResult<_>>()?
    };
    let mut w = Csv::new(&["kernel", "gamma", "delta", "label", "closed_form", "provenance"])?;
    let mut labels = Vec::new();
    for (k, delta) in points {
        let label = classify_regime(&k, delta)?;
        let cf = delta_eff_closed_form(k.variant, delta, k.gamma);
        w.row(&[
            k.variant.name().to_string(),
            k.gamma.to_string(),
            delta.to_string(),
            label.label.name().to_string(),
            cf.map(|v| v.to_string()).unwrap_or_default(),
            label.provenance.clone(),
        ])?;
        labels.push(label.label.name());
    }
    let mut p = Product::default();
    p.files.push(("classify.csv".into(), w.finish()?));
    p.summary = json!({ "labels": labels });
    Ok(p)
}

fn proportion_json(p: &Proportion) -> Value {
    json!({ "successes": p.successes, "trials": p.trials, "estimate": p.estimate, "ci_low": p.ci_low, "ci_high": p.ci_high })
}

fn run_diagnose(cfg: &ExperimentConfig) -> CliResult<Product> {
    let d = &cfg.diagnose;
    let mut p = Product::default();

    let t = Instant::now();
    let chi = crossing_replicas(&cfg.model, &cfg.point_process, d.k_max, cfg.replicas, cfg.seed)?;
    p.tasks_ms.push(ms_since(t));
    let report = summarise_crossings(&chi, d.k_max);
    let mut w = Csv::new(&["stage", "chi_freq", "ci_low", "ci_high"])?;
    for (i, s) in report.stages.iter().enumerate() {
        w.row(&[(i + 1).to_string(), s.estimate.to_string(), s.ci_low.to_string(), s.ci_high.to_string()])?;
    }
    p.files.push(("crossings.csv".into(), w.finish()?));
    p.seeds
        .extend((0..cfg.replicas as u64).map(|r| SeedRecord { grid: 0, replica: r, seed: derive_seed(cfg.seed, 0, r) }));
    let decay = match d.decay_range {
        Some((lo, hi)) => match report.decay_rate(lo, hi) {
            Ok(rate) => json!(rate),
            Err(e) => {
                log::warn!("decay-rate fit failed: {e}");
                Value::Null
            }
        },
        None => Value::Null,
    };

    let block_replicas = d.block_replicas.unwrap_or(cfg.replicas);
    let block_seed = derive_seed(cfg.seed, 1, 0);
    let t = Instant::now();
    let sweep = block_sweep(
        &cfg.model,
        &cfg.point_process,
        d.block_scale,
        d.theta,
        d.block_range.0..=d.block_range.1,
        block_replicas,
        block_seed,
        cfg.sampler,
    )?;
    p.tasks_ms.push(ms_since(t));
    p.seeds.extend(
        (0..block_replicas as u64).map(|r| SeedRecord { grid: 1, replica: r, seed: derive_seed(block_seed, 0, r) }),
    );
    let mut w = Csv::new(&["scale", "block_index", "largest", "is_good"])?;
    for r in &sweep.reports {
        for b in &r.blocks {
            w.row(&[r.scale.to_string(), b.block.i.to_string(), b.largest.to_string(), b.is_good.to_string()])?;
        }
    }
    p.files.push(("blocks.csv".into(), w.finish()?));
    p.summary = json!({
        "k_max": d.k_max,
        "replicas": cfg.replicas,
        "no_crossing": proportion_json(&report.no_crossing),
        "decay_rate": decay,
        "block_scale": d.block_scale,
        "theta": d.theta,
        "block_replicas": block_replicas,
        "empirical_p_bad": proportion_json(&sweep.empirical_p_bad),
    });
    p.files.push(("diagnose.json".into(), json_bytes(&p.summary)));
    Ok(p)
}

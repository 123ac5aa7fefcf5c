//! Subcommand implementations and artifact writers.
//!
//! Every command writes its artifacts under `--out`: tables as CSV, full
//! reports as JSON. Reports echo the resolved configuration (but never the
//! output directory or thread count), so rerunning a command with the same
//! inputs and seed produces byte-identical files wherever and however
//! parallel it runs.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use shp_core::error::{Result, ShpError};
use shp_core::estimator::FitConfig;
use shp_core::experiment::{
    bivariate_gap, dispersion_check, run_sweep, CellRecord, DispersionCheck, GapSummary,
    SweepSpec, SweptParameter, ValueSummary,
};
use shp_core::graph::CausalGraph;
use shp_core::io as core_io;
use shp_core::search::SearchConfig;
use shp_core::seed::{split, split2, STREAM_DAG, STREAM_EVENTS};
use shp_core::sim::SimConfig;
use shp_core::{BinnedCounts, ContinuousSequence, ShpParams};

const SCHEMA_VERSION: u32 = 1;

/// Seed streams for the identifiability probes, disjoint from the streams
/// the core library draws from.
const STREAM_GAP: u64 = 5;
const STREAM_DISPERSION: u64 = 6;

/// Global flags shared by every subcommand.
pub struct Globals {
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub csv: bool,
    pub json: bool,
}

impl Globals {
    fn prepare(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))
    }

    fn artifact(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn io_err(path: &Path, source: std::io::Error) -> ShpError {
    ShpError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    toml::from_str(&text)
        .map_err(|e| ShpError::InvalidConfig(format!("{}: {e}", path.display())))
}

fn opt_config<T: DeserializeOwned + Default>(path: Option<&PathBuf>) -> Result<T> {
    match path {
        Some(p) => load_toml(p),
        None => Ok(T::default()),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    core_io::write_json(path, value)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn path_string(path: &Path) -> String {
    path.display().to_string()
}

/// Node-name view of a graph for reports.
#[derive(Debug, Serialize)]
struct GraphDump {
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
}

impl GraphDump {
    fn from(g: &CausalGraph) -> Self {
        let nodes = g.node_names().to_vec();
        let edges = g
            .edges()
            .map(|(u, v)| (nodes[u].clone(), nodes[v].clone()))
            .collect();
        Self { nodes, edges }
    }
}

/// Builds a graph over `nodes` from name-pair edge rows.
fn graph_from_rows(nodes: &[String], rows: Vec<(String, String)>) -> Result<CausalGraph> {
    let mut g = CausalGraph::new(nodes.to_vec());
    for (src, dst) in rows {
        let u = g
            .index_of(&src)
            .ok_or_else(|| ShpError::UnknownEventType(src.clone()))?;
        let v = g
            .index_of(&dst)
            .ok_or_else(|| ShpError::UnknownEventType(dst.clone()))?;
        g.add_edge(u, v)?;
    }
    Ok(g)
}

fn write_edge_csv(path: &Path, g: &CausalGraph) -> Result<()> {
    core_io::write_edge_list_csv(path, g)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_alpha_csv(path: &Path, params: &ShpParams, names: &[String]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    write!(out, "src").map_err(|e| io_err(path, e))?;
    for name in names {
        write!(out, ",{name}").map_err(|e| io_err(path, e))?;
    }
    writeln!(out).map_err(|e| io_err(path, e))?;
    for (u, name) in names.iter().enumerate() {
        write!(out, "{name}").map_err(|e| io_err(path, e))?;
        for v in 0..names.len() {
            write!(out, ",{}", params.alpha(u, v)).map_err(|e| io_err(path, e))?;
        }
        writeln!(out).map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_mu_csv(path: &Path, params: &ShpParams, names: &[String]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    writeln!(out, "node,mu").map_err(|e| io_err(path, e))?;
    for (v, name) in names.iter().enumerate() {
        writeln!(out, "{name},{}", params.mu(v)).map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Count-matrix input, either pre-binned or as raw events plus a bin width.
#[derive(Args, Debug)]
pub struct CountsInput {
    /// Binned counts CSV (`bin,<node>,...`).
    #[arg(long, value_name = "FILE")]
    counts: Option<PathBuf>,
    /// Raw events CSV (`event_type,timestamp`), binned with `--delta`.
    #[arg(long, value_name = "FILE", conflicts_with = "counts")]
    events: Option<PathBuf>,
    /// Bin width: used to bin `--events`, and taken as the time scale of
    /// `--counts` (the counts file itself carries none).
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
}

#[derive(Debug, Serialize)]
struct InputEcho {
    counts: Option<String>,
    events: Option<String>,
    delta: f64,
}

impl CountsInput {
    fn load(&self) -> Result<BinnedCounts> {
        match (&self.counts, &self.events) {
            (Some(path), None) => core_io::read_counts_csv(path, self.delta),
            (None, Some(path)) => {
                let records = core_io::read_events_csv(path)?;
                let names: BTreeSet<&str> =
                    records.iter().map(|r| r.event_type.as_str()).collect();
                let nodes: Vec<String> = names.into_iter().map(str::to_string).collect();
                let horizon = records.iter().fold(0.0_f64, |h, r| h.max(r.timestamp));
                let seq = ContinuousSequence::new(records, horizon)?;
                shp_core::bin_events(&seq, self.delta, &nodes)
            }
            _ => Err(ShpError::InvalidConfig(
                "exactly one of --counts or --events is required".into(),
            )),
        }
    }

    fn echo(&self) -> InputEcho {
        InputEcho {
            counts: self.counts.as_deref().map(path_string),
            events: self.events.as_deref().map(path_string),
            delta: self.delta,
        }
    }
}

// ---------------------------------------------------------------------------
// simulate

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Thin a continuous-time Hawkes sequence, then bin it.
    Continuous,
    /// Sample bin counts directly from the discrete model.
    Discrete,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct SimulateConfig {
    #[serde(flatten)]
    sim: SimConfig,
    generator: Generator,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            generator: Generator::Continuous,
        }
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario config (TOML); flags below override file values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    n_nodes: Option<usize>,
    /// Expected parents per node in the sampled DAG.
    #[arg(long)]
    avg_indegree: Option<f64>,
    /// Edge-weight sampling range.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    alpha_range: Option<Vec<f64>>,
    /// Baseline-rate sampling range (per unit time).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    mu_range: Option<Vec<f64>>,
    /// Bin width.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    n_bins: Option<usize>,
    /// Kernel decay rate.
    #[arg(long)]
    beta: Option<f64>,
    /// Also draw lagged self-excitation weights.
    #[arg(long)]
    self_excitation: bool,
    #[arg(long, value_enum)]
    generator: Option<Generator>,
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    schema_version: u32,
    command: &'static str,
    config: &'a SimulateConfig,
    truth: GraphDump,
    total_events: u64,
    params: &'a ShpParams,
}

pub fn simulate(args: SimulateArgs, globals: &Globals) -> Result<()> {
    let mut cfg: SimulateConfig = opt_config(args.config.as_ref())?;
    if let Some(v) = args.n_nodes {
        cfg.sim.n_nodes = v;
    }
    if let Some(v) = args.avg_indegree {
        cfg.sim.avg_indegree = v;
    }
    if let Some(r) = &args.alpha_range {
        cfg.sim.alpha_range = (r[0], r[1]);
    }
    if let Some(r) = &args.mu_range {
        cfg.sim.mu_range = (r[0], r[1]);
    }
    if let Some(v) = args.delta {
        cfg.sim.delta = v;
    }
    if let Some(v) = args.n_bins {
        cfg.sim.n_bins = v;
    }
    if let Some(v) = args.beta {
        cfg.sim.beta = v;
    }
    if args.self_excitation {
        cfg.sim.self_excitation = true;
    }
    if let Some(v) = args.generator {
        cfg.generator = v;
    }
    if let Some(seed) = globals.seed {
        cfg.sim.seed = seed;
    }
    cfg.sim = cfg.sim.validated()?;
    globals.prepare()?;

    let seed = cfg.sim.seed;
    let truth = shp_core::random_dag(cfg.sim.n_nodes, cfg.sim.avg_indegree, split(seed, STREAM_DAG))?;
    let params = shp_core::sample_params(&truth, &cfg.sim)?;
    let event_seed = split(seed, STREAM_EVENTS);
    let (counts, total_events) = match cfg.generator {
        Generator::Continuous => {
            let horizon = cfg.sim.n_bins as f64 * cfg.sim.delta;
            let seq = shp_core::simulate_continuous(&params, &truth, horizon, event_seed)?;
            if globals.csv {
                let path = globals.artifact("events.csv");
                core_io::write_events_csv(&path, seq.records())?;
                println!("wrote {}", path.display());
            }
            let counts = shp_core::bin_events(&seq, cfg.sim.delta, truth.node_names())?;
            let n = seq.len() as u64;
            (counts, n)
        }
        Generator::Discrete => {
            let counts = shp_core::simulate_discrete(&params, &truth, cfg.sim.n_bins, event_seed)?;
            let n = counts.total();
            (counts, n)
        }
    };
    if globals.csv {
        let path = globals.artifact("counts.csv");
        core_io::write_counts_csv(&path, &counts)?;
        println!("wrote {}", path.display());
        write_edge_csv(&globals.artifact("truth_graph.csv"), &truth)?;
    }
    if globals.json {
        let report = SimulateReport {
            schema_version: SCHEMA_VERSION,
            command: "simulate",
            config: &cfg,
            truth: GraphDump::from(&truth),
            total_events,
            params: &params,
        };
        write_json(&globals.artifact("simulate.json"), &report)?;
    }
    println!(
        "simulated {} events over {} bins ({} nodes, {} true edges)",
        total_events,
        counts.n_bins(),
        cfg.sim.n_nodes,
        truth.edge_count()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// fit

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    input: CountsInput,
    /// Graph support to fit on: `src,dst` edge CSV over the count columns.
    #[arg(long, value_name = "FILE")]
    graph: PathBuf,
    /// Fit options (TOML); flags below override file values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Kernel decay assumed when fitting; `inf` disables lagged terms.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Do not fit lagged self-excitation weights.
    #[arg(long)]
    no_self_excitation: bool,
}

#[derive(Serialize)]
struct FitEcho<'a> {
    input: InputEcho,
    graph: String,
    fit: &'a FitConfig,
}

#[derive(Serialize)]
struct FitReport<'a> {
    schema_version: u32,
    command: &'static str,
    config: FitEcho<'a>,
    graph: GraphDump,
    log_likelihood: f64,
    converged: bool,
    iterations: usize,
    loglik_trace: &'a [f64],
    params: &'a ShpParams,
}

pub fn fit(args: FitArgs, globals: &Globals) -> Result<()> {
    let counts = args.input.load()?;
    let mut fit_cfg: FitConfig = opt_config(args.config.as_ref())?;
    if let Some(beta) = args.beta {
        fit_cfg.beta = beta;
    }
    if let Some(iters) = args.max_iters {
        fit_cfg.max_iters = iters;
    }
    if args.no_self_excitation {
        fit_cfg.fit_self_excitation = false;
    }
    let rows = core_io::read_edge_list_csv(&args.graph)?;
    let graph = graph_from_rows(counts.node_names(), rows)?;
    let result = shp_core::fit(&graph, &counts, &fit_cfg)?;
    let log_likelihood = *result.loglik_trace.last().expect("trace is never empty");

    globals.prepare()?;
    if globals.csv {
        write_alpha_csv(
            &globals.artifact("fitted_alpha.csv"),
            &result.params,
            counts.node_names(),
        )?;
        write_mu_csv(
            &globals.artifact("fitted_mu.csv"),
            &result.params,
            counts.node_names(),
        )?;
    }
    if globals.json {
        let report = FitReport {
            schema_version: SCHEMA_VERSION,
            command: "fit",
            config: FitEcho {
                input: args.input.echo(),
                graph: path_string(&args.graph),
                fit: &fit_cfg,
            },
            graph: GraphDump::from(&graph),
            log_likelihood,
            converged: result.converged,
            iterations: result.iterations,
            loglik_trace: &result.loglik_trace,
            params: &result.params,
        };
        write_json(&globals.artifact("fit.json"), &report)?;
    }
    println!(
        "log-likelihood {log_likelihood:.6} after {} iteration(s){}",
        result.iterations,
        if result.converged { ", converged" } else { " (not converged)" }
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// search

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Greedy add/delete/reverse moves on the penalized likelihood.
    HillClimb,
    /// Fit every column on all others and keep edges with weight above tau.
    Threshold,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[command(flatten)]
    input: CountsInput,
    /// Search options (TOML); flags below override file values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Per-edge penalty; default is 0.5 * ln(bins).
    #[arg(long)]
    alpha_s: Option<f64>,
    #[arg(long, value_enum, default_value_t = Method::HillClimb)]
    method: Method,
    /// Edge-weight threshold for `--method threshold`.
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    /// Kernel decay assumed when fitting; `inf` disables lagged terms.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
}

#[derive(Serialize)]
struct SearchEcho<'a> {
    input: InputEcho,
    method: Method,
    tau: Option<f64>,
    alpha_s_used: Option<f64>,
    search: &'a SearchConfig,
}

#[derive(Serialize)]
struct SearchReport<'a> {
    schema_version: u32,
    command: &'static str,
    config: SearchEcho<'a>,
    graph: GraphDump,
    edge_count: usize,
    score: Option<f64>,
    score_trace: Option<&'a [f64]>,
    visited: Option<usize>,
    params: Option<&'a ShpParams>,
}

pub fn search(args: SearchArgs, globals: &Globals) -> Result<()> {
    let counts = args.input.load()?;
    let mut search_cfg: SearchConfig = opt_config(args.config.as_ref())?;
    if args.alpha_s.is_some() {
        search_cfg.alpha_s = args.alpha_s;
    }
    if let Some(beta) = args.beta {
        search_cfg.fit.beta = beta;
    }
    if let Some(sweeps) = args.max_sweeps {
        search_cfg.max_sweeps = sweeps;
    }
    globals.prepare()?;
    match args.method {
        Method::HillClimb => {
            let result = shp_core::hill_climb(&counts, &search_cfg)?;
            let alpha_s_used = search_cfg
                .alpha_s
                .unwrap_or_else(|| 0.5 * (counts.n_bins() as f64).ln());
            if globals.csv {
                write_edge_csv(&globals.artifact("estimated_graph.csv"), &result.graph)?;
                write_alpha_csv(
                    &globals.artifact("fitted_alpha.csv"),
                    &result.params,
                    counts.node_names(),
                )?;
                write_mu_csv(
                    &globals.artifact("fitted_mu.csv"),
                    &result.params,
                    counts.node_names(),
                )?;
            }
            if globals.json {
                let report = SearchReport {
                    schema_version: SCHEMA_VERSION,
                    command: "search",
                    config: SearchEcho {
                        input: args.input.echo(),
                        method: args.method,
                        tau: None,
                        alpha_s_used: Some(alpha_s_used),
                        search: &search_cfg,
                    },
                    graph: GraphDump::from(&result.graph),
                    edge_count: result.graph.edge_count(),
                    score: Some(result.score),
                    score_trace: Some(&result.score_trace),
                    visited: Some(result.visited),
                    params: Some(&result.params),
                };
                write_json(&globals.artifact("search.json"), &report)?;
            }
            println!(
                "hill-climb kept {} edge(s), score {:.6}, {} candidate(s) scored",
                result.graph.edge_count(),
                result.score,
                result.visited
            );
        }
        Method::Threshold => {
            let graph = shp_core::threshold_graph(&counts, args.tau, &search_cfg.fit)?;
            if globals.csv {
                write_edge_csv(&globals.artifact("estimated_graph.csv"), &graph)?;
            }
            if globals.json {
                let report = SearchReport {
                    schema_version: SCHEMA_VERSION,
                    command: "search",
                    config: SearchEcho {
                        input: args.input.echo(),
                        method: args.method,
                        tau: Some(args.tau),
                        alpha_s_used: None,
                        search: &search_cfg,
                    },
                    graph: GraphDump::from(&graph),
                    edge_count: graph.edge_count(),
                    score: None,
                    score_trace: None,
                    visited: None,
                    params: None,
                };
                write_json(&globals.artifact("search.json"), &report)?;
            }
            println!(
                "threshold at {} kept {} edge(s)",
                args.tau,
                graph.edge_count()
            );
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Ground-truth graph: `src,dst` edge CSV.
    #[arg(long, value_name = "FILE")]
    truth: PathBuf,
    /// Estimated graph: `src,dst` edge CSV.
    #[arg(long, value_name = "FILE")]
    estimated: PathBuf,
}

#[derive(Serialize)]
struct EvaluateReport {
    schema_version: u32,
    command: &'static str,
    config: EvaluateEcho,
    nodes: Vec<String>,
    true_edges: usize,
    estimated_edges: usize,
    metrics: shp_core::MetricReport,
}

#[derive(Serialize)]
struct EvaluateEcho {
    truth: String,
    estimated: String,
}

pub fn evaluate(args: EvaluateArgs, globals: &Globals) -> Result<()> {
    let truth_rows = core_io::read_edge_list_csv(&args.truth)?;
    let estimated_rows = core_io::read_edge_list_csv(&args.estimated)?;
    let mut names: BTreeSet<String> = BTreeSet::new();
    for (s, d) in truth_rows.iter().chain(estimated_rows.iter()) {
        names.insert(s.clone());
        names.insert(d.clone());
    }
    let nodes: Vec<String> = names.into_iter().collect();
    let truth = graph_from_rows(&nodes, truth_rows)?;
    let estimated = graph_from_rows(&nodes, estimated_rows)?;
    let metrics = shp_core::compare_graphs(&truth, &estimated)?;

    globals.prepare()?;
    if globals.csv {
        let path = globals.artifact("metrics.csv");
        let mut out = BufWriter::new(File::create(&path).map_err(|e| io_err(&path, e))?);
        writeln!(out, "precision,recall,f1,shd").map_err(|e| io_err(&path, e))?;
        writeln!(
            out,
            "{},{},{},{}",
            metrics.precision, metrics.recall, metrics.f1, metrics.shd
        )
        .map_err(|e| io_err(&path, e))?;
        out.flush().map_err(|e| io_err(&path, e))?;
        println!("wrote {}", path.display());
    }
    if globals.json {
        let report = EvaluateReport {
            schema_version: SCHEMA_VERSION,
            command: "evaluate",
            config: EvaluateEcho {
                truth: path_string(&args.truth),
                estimated: path_string(&args.estimated),
            },
            true_edges: truth.edge_count(),
            estimated_edges: estimated.edge_count(),
            nodes,
            metrics: metrics.clone(),
        };
        write_json(&globals.artifact("metrics.json"), &report)?;
    }
    println!(
        "precision {:.4}, recall {:.4}, F1 {:.4}, SHD {}",
        metrics.precision, metrics.recall, metrics.f1, metrics.shd
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// experiment

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// Sweep description (TOML): swept parameter, values, base scenario.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
}

#[derive(Serialize)]
struct ExperimentArtifact<'a> {
    schema_version: u32,
    command: &'static str,
    config: &'a SweepSpec,
    cells: &'a [CellRecord],
    summaries: &'a [ValueSummary],
}

fn parameter_name(p: SweptParameter) -> &'static str {
    match p {
        SweptParameter::NBins => "n_bins",
        SweptParameter::AvgIndegree => "avg_indegree",
        SweptParameter::Delta => "delta",
        SweptParameter::Beta => "beta",
        SweptParameter::AlphaScale => "alpha_scale",
        SweptParameter::MuScale => "mu_scale",
    }
}

fn fmt_opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn write_cells_csv(path: &Path, cells: &[CellRecord]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    writeln!(
        out,
        "value_index,value,repeat,seed,true_edges,estimated_edges,\
         precision,recall,f1,shd,baseline_precision,baseline_recall,baseline_f1,baseline_shd,error"
    )
    .map_err(|e| io_err(path, e))?;
    for c in cells {
        let m = c.metrics.as_ref();
        let b = c.baseline_metrics.as_ref();
        // Keep the error text on one unquoted CSV field.
        let error = c
            .error
            .as_deref()
            .unwrap_or("")
            .replace([',', '\n', '\r', '"'], ";");
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.value_index,
            c.value,
            c.repeat,
            c.seed,
            fmt_opt(&c.true_edges),
            fmt_opt(&c.estimated_edges),
            fmt_opt(&m.map(|m| m.precision)),
            fmt_opt(&m.map(|m| m.recall)),
            fmt_opt(&m.map(|m| m.f1)),
            fmt_opt(&m.map(|m| m.shd)),
            fmt_opt(&b.map(|m| m.precision)),
            fmt_opt(&b.map(|m| m.recall)),
            fmt_opt(&b.map(|m| m.f1)),
            fmt_opt(&b.map(|m| m.shd)),
            error,
        )
        .map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_summaries_csv(path: &Path, summaries: &[ValueSummary]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    writeln!(
        out,
        "value,n_ok,n_failed,mean_f1,std_f1,mean_precision,mean_recall,mean_shd,mean_baseline_f1"
    )
    .map_err(|e| io_err(path, e))?;
    for s in summaries {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.value,
            s.n_ok,
            s.n_failed,
            s.mean_f1,
            s.std_f1,
            s.mean_precision,
            s.mean_recall,
            s.mean_shd,
            fmt_opt(&s.mean_baseline_f1),
        )
        .map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn experiment(args: ExperimentArgs, globals: &Globals) -> Result<()> {
    let mut spec: SweepSpec = load_toml(&args.config)?;
    if let Some(seed) = globals.seed {
        spec.base.seed = seed;
    }
    let report = run_sweep(&spec)?;

    globals.prepare()?;
    if globals.csv {
        write_cells_csv(&globals.artifact("experiment.csv"), &report.cells)?;
        write_summaries_csv(&globals.artifact("experiment_summary.csv"), &report.summaries)?;
    }
    if globals.json {
        let artifact = ExperimentArtifact {
            schema_version: SCHEMA_VERSION,
            command: "experiment",
            config: &spec,
            cells: &report.cells,
            summaries: &report.summaries,
        };
        write_json(&globals.artifact("experiment.json"), &artifact)?;
    }
    let name = parameter_name(report.parameter);
    println!(
        "swept {} over {} value(s), {} repeat(s) each",
        name,
        spec.values.len(),
        spec.n_repeats
    );
    for s in &report.summaries {
        println!(
            "  {name} = {}: mean F1 {:.4} (sd {:.4}), mean SHD {:.2}, {} ok / {} failed",
            s.value, s.mean_f1, s.std_f1, s.mean_shd, s.n_ok, s.n_failed
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// identifiability

/// Grid for the two-node direction-recovery probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentifiabilityConfig {
    /// Edge weights to probe.
    pub alphas: Vec<f64>,
    pub mu_x: f64,
    pub mu_y: f64,
    /// Bins per likelihood-gap trial.
    pub n_bins: usize,
    pub trials: usize,
    /// Bins for the one-shot dispersion check.
    pub dispersion_bins: usize,
    pub seed: u64,
}

impl Default for IdentifiabilityConfig {
    fn default() -> Self {
        Self {
            alphas: vec![0.05, 0.1, 0.2, 0.3, 0.5],
            mu_x: 1.0,
            mu_y: 0.1,
            n_bins: 20_000,
            trials: 100,
            dispersion_bins: 100_000,
            seed: 0,
        }
    }
}

#[derive(Args, Debug)]
pub struct IdentifiabilityArgs {
    /// Probe config (TOML); flags below override file values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Edge weight to probe; repeat the flag for a grid.
    #[arg(long = "alpha", value_name = "W")]
    alphas: Vec<f64>,
    #[arg(long)]
    mu_x: Option<f64>,
    #[arg(long)]
    mu_y: Option<f64>,
    #[arg(long)]
    n_bins: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    dispersion_bins: Option<usize>,
}

#[derive(Serialize)]
struct AlphaProbe {
    alpha: f64,
    gap: GapSummary,
    dispersion: DispersionCheck,
}

#[derive(Serialize)]
struct IdentifiabilityReport<'a> {
    schema_version: u32,
    command: &'static str,
    config: &'a IdentifiabilityConfig,
    results: &'a [AlphaProbe],
}

fn write_probes_csv(path: &Path, probes: &[AlphaProbe]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?);
    writeln!(
        out,
        "alpha,mean_gap,positive_fraction,min_gap,max_gap,index_x,index_y,index_y_expected"
    )
    .map_err(|e| io_err(path, e))?;
    for p in probes {
        let min = p.gap.gaps.iter().copied().fold(f64::INFINITY, f64::min);
        let max = p.gap.gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.alpha,
            p.gap.mean_gap,
            p.gap.positive_fraction,
            min,
            max,
            p.dispersion.index_x,
            p.dispersion.index_y,
            p.dispersion.index_y_expected,
        )
        .map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn identifiability(args: IdentifiabilityArgs, globals: &Globals) -> Result<()> {
    let mut cfg: IdentifiabilityConfig = opt_config(args.config.as_ref())?;
    if !args.alphas.is_empty() {
        cfg.alphas = args.alphas.clone();
    }
    if let Some(v) = args.mu_x {
        cfg.mu_x = v;
    }
    if let Some(v) = args.mu_y {
        cfg.mu_y = v;
    }
    if let Some(v) = args.n_bins {
        cfg.n_bins = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.dispersion_bins {
        cfg.dispersion_bins = v;
    }
    if let Some(seed) = globals.seed {
        cfg.seed = seed;
    }
    if cfg.alphas.is_empty() {
        return Err(ShpError::InvalidConfig("need at least one alpha".into()));
    }

    let mut results = Vec::with_capacity(cfg.alphas.len());
    for (i, &alpha) in cfg.alphas.iter().enumerate() {
        let gap = bivariate_gap(
            alpha,
            cfg.mu_x,
            cfg.mu_y,
            cfg.n_bins,
            cfg.trials,
            split2(cfg.seed, STREAM_GAP, i as u64),
        )?;
        let dispersion = dispersion_check(
            alpha,
            cfg.mu_x,
            cfg.mu_y,
            cfg.dispersion_bins,
            split2(cfg.seed, STREAM_DISPERSION, i as u64),
        )?;
        println!(
            "alpha {alpha}: mean gap {:.6}, positive in {:.0}% of {} trial(s), \
             child dispersion {:.4} (predicted {:.4})",
            gap.mean_gap,
            100.0 * gap.positive_fraction,
            cfg.trials,
            dispersion.index_y,
            dispersion.index_y_expected,
        );
        results.push(AlphaProbe {
            alpha,
            gap,
            dispersion,
        });
    }

    globals.prepare()?;
    if globals.csv {
        write_probes_csv(&globals.artifact("identifiability.csv"), &results)?;
    }
    if globals.json {
        let report = IdentifiabilityReport {
            schema_version: SCHEMA_VERSION,
            command: "identifiability",
            config: &cfg,
            results: &results,
        };
        write_json(&globals.artifact("identifiability.json"), &report)?;
    }
    Ok(())
}

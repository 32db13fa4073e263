//! `nnc` command-line front end.

pub mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{ExperimentConfig, Kernel};

use crate::channel::{simulate, write_trace, NoiseModel, TraceFile, TraceSeed};
use crate::detection::{
    forward_backward, point_mass, viterbi, write_segmentation_csv, write_symbol_report, DetectorOptions,
    SegmentLikelihood,
};
use crate::error::{NncError, Result};
use crate::kmer_space::{
    fixtures, jump_constrained_reduce, perron_entropy, read_kmer_model, strongly_connected_components,
    write_edge_csv, ChannelMapping, StateGraph,
};
use crate::oracle;
use crate::rates::{monte_carlo_rate, write_sweep_csv, MonteCarloConfig, SweepRow};
use crate::source::{parry_kernel, uniform_kernel, DurationModel, MarkovSource};

#[derive(Debug, Parser)]
#[command(name = "nnc", version, about = "Noisy nanopore channel: graphs, simulation, detection and rates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reduce the k-mer graph, split it into components and pick the one with the largest entropy.
    Graph(CommonArgs),
    /// Simulate one channel trace.
    Simulate(CommonArgs),
    /// Run symbol (forward-backward) or sequence (Viterbi) detection on a trace.
    Detect(DetectArgs),
    /// Estimate the achievable rate for one (sigma, lambda) pair.
    Rate(CommonArgs),
    /// Estimate achievable rates over every (sigma, lambda) pair.
    Sweep(CommonArgs),
    /// Compare the lattice algorithms against exhaustive enumeration on a tiny trace.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectMode {
    Symbol,
    Sequence,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Trace file written by `nnc simulate`.
    pub trace: PathBuf,
    #[arg(long, value_enum, default_value = "symbol")]
    pub mode: DetectMode,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Trace to check; simulated from the config when omitted.
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// k-mer model table (k-mer, level[, sd]).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Bundled fixture: fig3, tau2 or fig2.
    #[arg(long)]
    pub fixture: Option<String>,
    #[arg(long)]
    pub tau: Option<usize>,
    #[arg(long)]
    pub jmin: Option<f64>,
    /// uniform or parry.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Duration set such as 1..5 or {2,3}; repeat or separate with ';' for several.
    #[arg(long)]
    pub lambda: Vec<String>,
    /// Comma-separated noise deviations.
    #[arg(long)]
    pub sigma: Option<String>,
    /// Channel uses (segments) in total.
    #[arg(long)]
    pub m: Option<usize>,
    /// Block length for rate estimation.
    #[arg(long)]
    pub block: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long = "prune-delta")]
    pub prune_delta: Option<f64>,
    /// Decode with the realized initial state known (default true).
    #[arg(long = "known-s0")]
    pub known_s0: Option<bool>,
}

impl CommonArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut put = |k: &'static str, val: Option<String>| {
            if let Some(val) = val {
                v.push((k, val));
            }
        };
        put("model", self.model.as_ref().map(|p| p.display().to_string()));
        put("fixture", self.fixture.clone());
        put("tau", self.tau.map(|x| x.to_string()));
        put("jmin", self.jmin.map(|x| x.to_string()));
        put("kernel", self.kernel.clone());
        put("lambda", (!self.lambda.is_empty()).then(|| self.lambda.join(";")));
        put("sigma", self.sigma.clone());
        put("m", self.m.map(|x| x.to_string()));
        put("block", self.block.map(|x| x.to_string()));
        put("seed", self.seed.map(|x| x.to_string()));
        put("out", self.out.as_ref().map(|p| p.display().to_string()));
        put("workers", self.workers.map(|x| x.to_string()));
        put("prune_delta", self.prune_delta.map(|x| x.to_string()));
        put("known_s0", self.known_s0.map(|x| x.to_string()));
        v
    }

    /// Defaults, then `base` (e.g. a trace header), then the config file,
    /// then flags.
    pub fn resolve(&self, base: &[(String, String)]) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        for (k, v) in base {
            cfg.set(k, v)?;
        }
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for (k, v) in self.overrides() {
            cfg.set(k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Exit code for an error: 2 configuration, 3 data, 4 infeasible instance.
pub fn exit_code(err: &NncError) -> i32 {
    match err {
        NncError::Config(_) => 2,
        NncError::Infeasible(_) | NncError::InstanceTooLarge { .. } => 4,
        _ => 3,
    }
}

pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Graph(a) => with_workers(a.resolve(&[])?, cmd_graph),
        Command::Simulate(a) => with_workers(a.resolve(&[])?, cmd_simulate),
        Command::Detect(d) => {
            let text = read_text(&d.trace)?;
            let trace = TraceFile::parse(&text).map_err(|e| relabel(e, &d.trace))?;
            let base: Vec<(String, String)> = trace
                .header
                .iter()
                .filter(|(k, _)| config::KEYS.contains(&k.as_str()))
                .cloned()
                .collect();
            let cfg = d.common.resolve(&base)?;
            with_workers(cfg, |c| cmd_detect(c, &trace, d.mode))
        }
        Command::Rate(a) => with_workers(a.resolve(&[])?, cmd_rate),
        Command::Sweep(a) => with_workers(a.resolve(&[])?, cmd_sweep),
        Command::OracleCheck(o) => {
            let trace = match &o.trace {
                Some(p) => Some(TraceFile::parse(&read_text(p)?).map_err(|e| relabel(e, p))?),
                None => None,
            };
            let base: Vec<(String, String)> = trace
                .iter()
                .flat_map(|t| t.header.iter())
                .filter(|(k, _)| config::KEYS.contains(&k.as_str()))
                .cloned()
                .collect();
            let cfg = o.common.resolve(&base)?;
            with_workers(cfg, |c| cmd_oracle_check(c, trace.as_ref()))
        }
    }
}

fn with_workers(cfg: ExperimentConfig, f: impl FnOnce(&ExperimentConfig) -> Result<()> + Send) -> Result<()> {
    match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| NncError::Config(format!("cannot start {n} workers: {e}")))?
            .install(|| f(&cfg)),
        None => f(&cfg),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| NncError::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })
}

fn relabel(err: NncError, path: &Path) -> NncError {
    match err {
        NncError::Parse { line, msg, .. } => NncError::Parse { path: path.to_path_buf(), line, msg },
        other => other,
    }
}

fn create(cfg: &ExperimentConfig, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(name);
    let file = File::create(&path)?;
    Ok((path, BufWriter::new(file)))
}

/// The k-mer mapping named by the config (model file or bundled fixture).
pub fn load_mapping(cfg: &ExperimentConfig) -> Result<(String, ChannelMapping)> {
    let (label, mapping) = match (&cfg.model, &cfg.fixture) {
        (Some(path), _) => (format!("model:{}", path.display()), read_kmer_model(path)?),
        (None, Some(id)) => (
            format!("fixture:{id}"),
            fixtures::mapping_by_id(id)
                .ok_or_else(|| NncError::Config(format!("unknown fixture '{id}' (expected fig3, tau2 or fig2)")))?,
        ),
        (None, None) => ("fixture:fig3".to_string(), fixtures::fig3_mapping()),
    };
    if let Some(tau) = cfg.tau {
        if tau != mapping.tau() {
            return Err(NncError::Config(format!("tau {tau} does not match the model's tau {}", mapping.tau())));
        }
    }
    Ok((label, mapping))
}

/// Result of the graph pipeline: shift graph, reduction, components and the
/// chosen maximum-entropy component.
#[derive(Debug, Clone)]
pub struct GraphSelection {
    pub graph: StateGraph,
    pub reduced: StateGraph,
    pub components: Vec<StateGraph>,
    /// Perron entropy per component; `None` for edgeless components.
    pub entropies: Vec<Option<f64>>,
    pub chosen: usize,
}

impl GraphSelection {
    pub fn component(&self) -> &StateGraph {
        &self.components[self.chosen]
    }

    pub fn entropy(&self) -> f64 {
        self.entropies[self.chosen].unwrap_or(0.0)
    }
}

/// Builds the shift graph over the mapped k-mers, drops edges with jump
/// below `jmin`, and keeps the strongly connected component of largest
/// Perron entropy. With `require_positive`, a best entropy of zero is an
/// error as well.
pub fn select_component(mapping: &ChannelMapping, jmin: f64, require_positive: bool) -> Result<GraphSelection> {
    let graph = StateGraph::induced(mapping)?;
    let reduced = jump_constrained_reduce(&graph, jmin);
    let components = strongly_connected_components(&reduced);
    let entropies: Vec<Option<f64>> = components
        .iter()
        .map(|c| if c.edge_count() == 0 { None } else { perron_entropy(c).ok() })
        .collect();
    let mut chosen: Option<usize> = None;
    for (i, h) in entropies.iter().enumerate() {
        if let Some(h) = h {
            if chosen.map_or(true, |c| *h > entropies[c].unwrap()) {
                chosen = Some(i);
            }
        }
    }
    let chosen = match chosen {
        Some(c) if !require_positive || entropies[c].unwrap() > 1e-12 => c,
        _ => return Err(NncError::NoPositiveEntropyComponent),
    };
    Ok(GraphSelection { graph, reduced, components, entropies, chosen })
}

pub fn build_source(g: &StateGraph, kernel: Kernel) -> Result<MarkovSource> {
    match kernel {
        Kernel::Uniform => uniform_kernel(g),
        Kernel::Parry => parry_kernel(g),
    }
}

fn warn_collisions(mapping: &ChannelMapping) {
    let collisions = mapping.level_collisions();
    for (a, b) in collisions.iter().take(5) {
        eprintln!("warning: k-mers {a} and {b} share level {}", mapping.level(a).unwrap());
    }
    if collisions.len() > 5 {
        eprintln!("warning: {} more level collisions", collisions.len() - 5);
    }
}

/// The Markov source on the selected component, for commands that run the
/// channel.
fn setup(cfg: &ExperimentConfig, require_positive: bool) -> Result<MarkovSource> {
    let (_, mapping) = load_mapping(cfg)?;
    warn_collisions(&mapping);
    let selection = select_component(&mapping, cfg.jmin, require_positive)?;
    build_source(selection.component(), cfg.kernel)
}

fn single<'a, T>(what: &str, items: &'a [T]) -> Result<&'a T> {
    match items {
        [x] => Ok(x),
        _ => Err(NncError::Config(format!("this command takes exactly one {what}"))),
    }
}

fn detector(cfg: &ExperimentConfig) -> DetectorOptions {
    DetectorOptions { prune_delta: cfg.prune_delta }
}

pub fn cmd_graph(cfg: &ExperimentConfig) -> Result<()> {
    let (label, mapping) = load_mapping(cfg)?;
    warn_collisions(&mapping);
    if !mapping.is_complete() {
        eprintln!(
            "note: model maps {} of {} k-mers; using the induced subgraph",
            mapping.len(),
            1usize << (2 * mapping.tau())
        );
    }
    let sel = select_component(&mapping, cfg.jmin, true)?;

    let (_, mut w) = create(cfg, "graph_edges.csv")?;
    write_edge_csv(&sel.reduced, &mut w)?;
    w.flush()?;
    let (_, mut w) = create(cfg, "components.csv")?;
    writeln!(w, "component,nodes,edges,entropy_bits,chosen,kmers")?;
    for (i, (c, h)) in sel.components.iter().zip(&sel.entropies).enumerate() {
        let kmers: Vec<String> = c.kmers().iter().map(|k| k.to_string()).collect();
        let h = h.map_or(String::from("undefined"), |h| format!("{h:.6}"));
        writeln!(w, "{i},{},{},{h},{},{}", c.node_count(), c.edge_count(), i == sel.chosen, kmers.join(" "))?;
    }
    w.flush()?;
    let (_, mut w) = create(cfg, "component_edges.csv")?;
    write_edge_csv(sel.component(), &mut w)?;
    w.flush()?;

    let c = sel.component();
    println!("model={label} tau={} jmin={}", mapping.tau(), cfg.jmin);
    println!("reduced_nodes={} reduced_edges={}", sel.reduced.node_count(), sel.reduced.edge_count());
    println!("components={} chosen={}", sel.components.len(), sel.chosen);
    println!("component_nodes={} component_edges={}", c.node_count(), c.edge_count());
    println!("entropy_bits={:.6}", sel.entropy());
    Ok(())
}

pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<()> {
    let src = setup(cfg, false)?;
    let lambda = single("lambda", &cfg.lambda)?;
    let sigma = *single("sigma", &cfg.sigma)?;
    let dur = DurationModel::uniform(&crate::source::parse_support(lambda)?)?;
    let noise = NoiseModel::constant(sigma)?;
    let trace = simulate(&src, &dur, &noise, cfg.m, TraceSeed::new(cfg.seed, 0))?;
    let (path, mut w) = create(cfg, "trace.csv")?;
    write_trace(&trace, src.graph(), &cfg.model_meta(lambda, sigma), &mut w)?;
    w.flush()?;
    println!("wrote {} m={} samples={}", path.display(), trace.m(), trace.total_samples());
    Ok(())
}

pub fn cmd_detect(cfg: &ExperimentConfig, file: &TraceFile, mode: DetectMode) -> Result<()> {
    let src = setup(cfg, false)?;
    let g = src.graph();
    let trace = file.to_trace(g)?;
    let dur = DurationModel::uniform(&crate::source::parse_support(single("lambda", &cfg.lambda)?)?)?;
    let noise = NoiseModel::constant(*single("sigma", &cfg.sigma)?)?;
    trace.validate(g, &dur).map_err(|e| NncError::Parse { path: "<trace>".into(), line: 0, msg: e.to_string() })?;
    let sl = SegmentLikelihood::new(&src, &dur, &noise, &trace.samples);
    let initial = if cfg.known_s0 { point_mass(g.node_count(), trace.s0) } else { src.stationary().to_vec() };
    let opts = detector(cfg);
    let post = forward_backward(&sl, &initial, trace.m(), &opts)?;
    match mode {
        DetectMode::Symbol => {
            let (path, mut w) = create(cfg, "symbols.csv")?;
            write_symbol_report(&post, g, &mut w)?;
            w.flush()?;
            println!("wrote {}", path.display());
        }
        DetectMode::Sequence => {
            let v = viterbi(&sl, &initial, trace.m(), &opts)?;
            let (path, mut w) = create(cfg, "segmentation.csv")?;
            write_segmentation_csv(&v, g, &mut w)?;
            w.flush()?;
            let errors = v.states.iter().zip(&trace.states).filter(|(a, b)| a != b).count();
            println!("wrote {}", path.display());
            println!("log_score={:.10}", v.log_score);
            println!("state_errors={errors} of {}", trace.m());
        }
    }
    println!("log_evidence={:.10}", post.log_evidence());
    Ok(())
}

fn rate_rows(cfg: &ExperimentConfig, pairs: &[(String, f64)]) -> Result<Vec<SweepRow>> {
    if cfg.m < cfg.block || cfg.m % cfg.block != 0 {
        return Err(NncError::Config(format!("m ({}) must be a multiple of block ({})", cfg.m, cfg.block)));
    }
    let src = setup(cfg, true)?;
    let mut mc = MonteCarloConfig::new(cfg.m, cfg.block, cfg.seed);
    mc.detector = detector(cfg);
    mc.known_s0 = cfg.known_s0;
    pairs
        .iter()
        .map(|(lambda, sigma)| {
            let dur = DurationModel::uniform(&crate::source::parse_support(lambda)?)?;
            let noise = NoiseModel::constant(*sigma)?;
            let estimate = monte_carlo_rate(&src, &dur, &noise, &mc)?;
            Ok(SweepRow { sigma: *sigma, lambda_spec: lambda.clone(), estimate, seed: cfg.seed })
        })
        .collect()
}

fn emit_rows(cfg: &ExperimentConfig, name: &str, rows: &[SweepRow]) -> Result<()> {
    let (_, mut w) = create(cfg, name)?;
    write_sweep_csv(rows, &mut w)?;
    w.flush()?;
    write_sweep_csv(rows, std::io::stdout().lock())?;
    Ok(())
}

pub fn cmd_rate(cfg: &ExperimentConfig) -> Result<()> {
    let pair = (single("lambda", &cfg.lambda)?.clone(), *single("sigma", &cfg.sigma)?);
    let rows = rate_rows(cfg, &[pair])?;
    emit_rows(cfg, "rate.csv", &rows)
}

/// Every (Λ, σ) pair, Λ-major. Each pair's blocks run on the worker pool;
/// rows come out in this fixed order.
pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<()> {
    let pairs: Vec<(String, f64)> =
        cfg.lambda.iter().flat_map(|l| cfg.sigma.iter().map(move |s| (l.clone(), *s))).collect();
    let rows = rate_rows(cfg, &pairs)?;
    emit_rows(cfg, "rates.csv", &rows)
}

/// Largest differences between lattice and oracle results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleReport {
    pub paths: usize,
    pub single_diff: f64,
    pub pair_diff: f64,
    pub evidence_rel_diff: f64,
    pub map_matches: bool,
}

pub const ORACLE_TOLERANCE: f64 = 1e-9;

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.single_diff <= ORACLE_TOLERANCE
            && self.pair_diff <= ORACLE_TOLERANCE
            && self.evidence_rel_diff <= ORACLE_TOLERANCE
            && self.map_matches
    }
}

/// Runs forward-backward, Viterbi and the enumeration oracle on one
/// observation and compares them.
pub fn oracle_compare(
    src: &MarkovSource,
    dur: &DurationModel,
    noise: &NoiseModel,
    initial: &[f64],
    m: usize,
    samples: &[f64],
) -> Result<(OracleReport, oracle::PathEnumeration)> {
    let en = oracle::enumerate(src, dur, noise, initial, m, samples)?;
    let sl = SegmentLikelihood::new(src, dur, noise, samples);
    let opts = DetectorOptions::default();
    let post = forward_backward(&sl, initial, m, &opts)?;
    let v = viterbi(&sl, initial, m, &opts)?;
    let mut single_diff: f64 = 0.0;
    for l in 1..=m {
        for (a, b) in post.states_at(l).iter().zip(&en.single[l - 1]) {
            single_diff = single_diff.max((a - b).abs());
        }
    }
    let mut pair_diff: f64 = 0.0;
    for l in 2..=m {
        for (a, b) in post.pairs_at(l).iter().zip(&en.pair[l - 2]) {
            pair_diff = pair_diff.max((a - b).abs());
        }
    }
    let evidence_rel_diff = ((post.log_evidence() - en.log_evidence).exp_m1()).abs();
    let best = en.map_path();
    // equal-score ties may be broken differently
    let map_matches = (v.states == best.states && v.jump_times == best.jump_times())
        || (v.log_score - best.log_joint).abs() <= 1e-9 * best.log_joint.abs().max(1.0);
    let report = OracleReport { paths: en.paths.len(), single_diff, pair_diff, evidence_rel_diff, map_matches };
    Ok((report, en))
}

pub fn cmd_oracle_check(cfg: &ExperimentConfig, file: Option<&TraceFile>) -> Result<()> {
    let src = setup(cfg, false)?;
    let g = src.graph();
    let dur = DurationModel::uniform(&crate::source::parse_support(single("lambda", &cfg.lambda)?)?)?;
    let noise = NoiseModel::constant(*single("sigma", &cfg.sigma)?)?;
    let trace = match file {
        Some(f) => f.to_trace(g)?,
        None => simulate(&src, &dur, &noise, cfg.m, TraceSeed::new(cfg.seed, 0))?,
    };
    let initial = if cfg.known_s0 { point_mass(g.node_count(), trace.s0) } else { src.stationary().to_vec() };
    let (report, en) = oracle_compare(&src, &dur, &noise, &initial, trace.m(), &trace.samples)?;
    let (path, mut w) = create(cfg, "oracle_paths.csv")?;
    en.write_csv(&mut w)?;
    w.flush()?;
    println!("wrote {}", path.display());
    println!("paths={}", report.paths);
    println!("max_single_diff={:.3e}", report.single_diff);
    println!("max_pair_diff={:.3e}", report.pair_diff);
    println!("evidence_rel_diff={:.3e}", report.evidence_rel_diff);
    println!("map_matches={}", report.map_matches);
    if report.passed() {
        println!("oracle-check: pass");
        Ok(())
    } else {
        Err(NncError::ModelMismatch("lattice results disagree with the enumeration oracle".into()))
    }
}

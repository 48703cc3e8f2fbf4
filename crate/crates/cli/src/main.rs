//! Batch front end: dataset simulation, structure search, latent discovery,
//! faithfulness sweeps, tensor-constraint reports, and output evaluation.
//! Every run embeds its resolved configuration (tool version, seed, config
//! hash) in the output header, and identical inputs produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use latentcycle::catalog;
use latentcycle::discovery::{
    discover_block_cycles, discover_cyclic_clusters, evaluate, DiscoveryOptions, DiscoveryResult,
    OracleBackend, SampleBackend,
};
use latentcycle::faithfulness;
use latentcycle::graph::{random_dag, DirectedGraph};
use latentcycle::numeric::fnv1a;
use latentcycle::sem::{CoefficientRegime, Dataset, LinearSem, NoiseSpec, SemJson};
use latentcycle::stats::GinConfig;
use latentcycle::tensor::{odd_dim_axis_sensitivity, tensor_constraint_check};
use latentcycle::vcsgs::{
    edge_estimation, run_vcsgs, FisherZBackend, L1Backend, OracleCi, VcsgsOptions,
};

#[derive(Parser)]
#[command(
    name = "latentcycle",
    version,
    about = "Causal structure discovery with latent variables: simulation, conservative structure search, latent clustering with cycle detection, faithfulness sweeps, and tensor-constraint reports.",
    after_help = "Exit codes: 0 success, 2 validation error, 3 resource guard tripped.\nThe worker count honors --threads, then LATENTCYCLE_THREADS, then the CPU count."
)]
struct CliArgs {
    /// Worker threads for the embarrassingly parallel sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset (and optionally the SEM and graph) from a graph
    /// source and a coefficient/noise regime.
    Simulate(SimulateArgs),
    /// Run the conservative structure search, optionally followed by
    /// histogram edge estimation.
    Vcsgs(VcsgsArgs),
    /// Latent cluster discovery with cycle detection and causal-order
    /// learning.
    Discover(DiscoverArgs),
    /// Faithfulness-violation Monte-Carlo sweeps.
    Faithsim(FaithsimArgs),
    /// Evaluate both sides of the tensor (multi-trek) constraint.
    Tensorcheck(TensorcheckArgs),
    /// Score a discovery output against a ground-truth graph.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct GraphSource {
    /// Graph JSON file.
    #[arg(long, conflicts_with = "catalog")]
    graph: Option<PathBuf>,
    /// Built-in benchmark graph name (see --list-catalog).
    #[arg(long)]
    catalog: Option<String>,
}

impl GraphSource {
    fn load(&self) -> anyhow::Result<DirectedGraph> {
        if let Some(path) = &self.graph {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Ok(serde_json::from_str(&text)?)
        } else if let Some(name) = &self.catalog {
            catalog::by_name(name).ok_or_else(|| {
                anyhow!(
                    "unknown catalog graph {name}; available: {}",
                    catalog::CATALOG_NAMES.join(", ")
                )
            })
        } else {
            bail!("need --graph FILE or --catalog NAME")
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CoeffArg {
    /// Uniform on [-1, 1].
    Uniform1,
    /// Uniform on [-5, -0.5] and [0.5, 5].
    SplitWide,
    /// Uniform on [-1, -0.5] and [0.5, 1].
    SplitUnit,
    /// Every edge coefficient exactly 1.
    Unit,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: GraphSource,
    /// Random DAG over P observed vertices instead of a graph file.
    #[arg(long, value_name = "P", conflicts_with_all = ["graph", "catalog"])]
    random_dag: Option<usize>,
    /// Expected neighborhood size for --random-dag.
    #[arg(long, default_value_t = 2.0)]
    nb: f64,
    /// Full SEM JSON (graph + coefficients + noise); overrides the regime.
    #[arg(long)]
    sem: Option<PathBuf>,
    /// Coefficient regime for random parameterization.
    #[arg(long, value_enum, default_value_t = CoeffArg::SplitUnit)]
    coeff: CoeffArg,
    /// Scale applied to observed-to-latent feedback coefficients.
    #[arg(long, default_value_t = 0.1)]
    feedback_scale: f64,
    /// Noise spec: gaussian:VAR, uniform:LO,HI, or exp:RATE.
    #[arg(long, default_value = "gaussian:1.0")]
    noise: String,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Keep latent columns in the CSV (default: observed only).
    #[arg(long)]
    include_latents: bool,
    /// Also write the resolved SEM as JSON.
    #[arg(long)]
    emit_sem: Option<PathBuf>,
    /// Also write the graph as JSON.
    #[arg(long)]
    emit_graph: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VcsgsMode {
    Gaussian,
    Nonparam,
    Oracle,
}

#[derive(Args)]
struct VcsgsArgs {
    /// Dataset CSV (required for the statistical modes).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = VcsgsMode::Gaussian)]
    mode: VcsgsMode,
    /// Ground-truth graph JSON (oracle mode).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Smoothness constant for the edge-estimation rejection scan.
    #[arg(long, default_value_t = 2.0)]
    tv_l: f64,
    /// Permutations for the nonparametric CI test.
    #[arg(long, default_value_t = 100)]
    n_perm: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Pattern JSON output.
    #[arg(long)]
    out: PathBuf,
    /// Also run edge estimation and write the model JSON here.
    #[arg(long)]
    estimate: Option<PathBuf>,
    /// Vertex cap override for the all-subsets loops.
    #[arg(long, default_value_t = 12)]
    vertex_cap: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum DiscoverMode {
    /// Rank clustering + cycle detection + order learning on data.
    Cgin,
    /// Rank clustering + block-cycle order learning on data.
    Blocks,
    /// Cgin pipeline against the separation oracle of --graph.
    Oracle,
    /// Blocks pipeline against the separation oracle of --graph.
    OracleBlocks,
}

#[derive(Args)]
struct DiscoverArgs {
    /// Dataset CSV (statistical modes).
    #[arg(long)]
    data: Option<PathBuf>,
    /// True graph JSON (oracle modes).
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = DiscoverMode::Cgin)]
    mode: DiscoverMode,
    #[arg(long, default_value_t = 0.01)]
    alpha_rank: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha_kernel: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Cluster/order JSON output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ground-truth graph for metric computation.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Metrics JSON output (requires --truth).
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    max_latents: usize,
    #[arg(long, default_value_t = 16)]
    vertex_cap: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FaithReport {
    Sweep,
    Maxk,
    EdgeProfile,
}

#[derive(Args)]
struct FaithsimArgs {
    /// Node counts, comma separated (sweep) or a single count (others).
    #[arg(long, default_value = "3,5,10")]
    nodes: String,
    /// Expected neighborhood sizes: comma list or an inclusive range a..b.
    #[arg(long, default_value = "2..9")]
    nb: String,
    /// Thresholds for both assumptions, comma separated.
    #[arg(long, default_value = "0.1,0.01,0.001")]
    thresholds: String,
    #[arg(long, default_value_t = 1000)]
    graphs: usize,
    /// Paper-scale run: 10,000 graphs per cell.
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FaithReport::Sweep)]
    report: FaithReport,
    /// Triangle constant for the edge-profile report.
    #[arg(long, default_value_t = 0.1)]
    k: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisOrder {
    S1s2s3,
    S2s3s1,
    S3s1s2,
    All,
}

#[derive(Args)]
struct TensorcheckArgs {
    #[command(flatten)]
    source: GraphSource,
    /// Full SEM JSON; the default parameterization is unit coefficients with
    /// mean-centered exponential(1) noise everywhere.
    #[arg(long)]
    sem: Option<PathBuf>,
    /// Axis sets by label, sides separated with '|': "X5,X6|X3,X4|X1,X2".
    #[arg(long)]
    sets: String,
    /// Which rotation of the axis order to report (order-3 only).
    #[arg(long, value_enum, default_value_t = AxisOrder::S1s2s3)]
    order: AxisOrder,
    /// Maximum side length in the exhaustive k-trek system search.
    #[arg(long, default_value_t = 8)]
    len_cap: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Discovery output JSON.
    #[arg(long)]
    found: PathBuf,
    /// Ground-truth graph JSON.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = CliArgs::parse();
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("LATENTCYCLE_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let guard = e
                .downcast_ref::<latentcycle::Error>()
                .map(|le| le.is_resource_guard())
                .unwrap_or(false);
            if guard {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Simulate(args) => simulate(args),
        Command::Vcsgs(args) => vcsgs(args),
        Command::Discover(args) => discover(args),
        Command::Faithsim(args) => faithsim(args),
        Command::Tensorcheck(args) => tensorcheck(args),
        Command::Evaluate(args) => evaluate_cmd(args),
    }
}

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

fn meta_lines(seed: u64, config: &str) -> Vec<String> {
    vec![
        format!("tool_version={}", env!("CARGO_PKG_VERSION")),
        format!("seed={seed}"),
        format!("config_hash={:016x}", fnv1a(config.as_bytes())),
        format!("config={config}"),
    ]
}

fn with_meta(payload: serde_json::Value, seed: u64, config: &str) -> serde_json::Value {
    serde_json::json!({
        "_meta": {
            "tool_version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "config_hash": format!("{:016x}", fnv1a(config.as_bytes())),
            "config": config,
        },
        "result": payload,
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn parse_noise(spec: &str) -> anyhow::Result<NoiseSpec> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| anyhow!("noise spec {spec:?} must look like gaussian:1.0"))?;
    let noise = match kind {
        "gaussian" => NoiseSpec::Gaussian {
            mean: 0.0,
            var: rest.parse()?,
        },
        "uniform" => {
            let (lo, hi) = rest
                .split_once(',')
                .ok_or_else(|| anyhow!("uniform noise needs lo,hi"))?;
            NoiseSpec::Uniform {
                lo: lo.parse()?,
                hi: hi.parse()?,
            }
        }
        "exp" => NoiseSpec::ShiftedExponential { rate: rest.parse()? },
        other => bail!("unknown noise kind {other}"),
    };
    Ok(noise)
}

fn parse_list(text: &str) -> anyhow::Result<Vec<f64>> {
    if let Some((a, b)) = text.split_once("..") {
        let lo: i64 = a.parse()?;
        let hi: i64 = b.parse()?;
        if hi < lo {
            bail!("empty range {text}");
        }
        Ok((lo..=hi).map(|v| v as f64).collect())
    } else {
        text.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(Into::into))
            .collect()
    }
}

fn unit_sem(graph: DirectedGraph, noise: NoiseSpec) -> anyhow::Result<LinearSem> {
    let p = graph.vertex_count();
    let mut coeff = DMatrix::zeros(p, p);
    for (a, b) in graph.edges() {
        coeff[(a, b)] = 1.0;
    }
    Ok(LinearSem::new(graph, coeff, vec![noise; p])?)
}

fn load_sem(path: &Path) -> anyhow::Result<LinearSem> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let json: SemJson = serde_json::from_str(&text)?;
    Ok(LinearSem::from_json(json)?)
}

fn load_graph(path: &Path) -> anyhow::Result<DirectedGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

fn load_data(path: &Path) -> anyhow::Result<Dataset> {
    let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Dataset::read_csv(file)?)
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let config = format!(
        "simulate n={} noise={} coeff={:?} feedback={} random_dag={:?} nb={} catalog={:?} include_latents={}",
        args.n,
        args.noise,
        args.coeff as u8,
        args.feedback_scale,
        args.random_dag,
        args.nb,
        args.source.catalog,
        args.include_latents,
    );
    let sem = if let Some(path) = &args.sem {
        load_sem(path)?
    } else {
        let graph = if let Some(p) = args.random_dag {
            random_dag(p, args.nb, args.seed)?
        } else {
            args.source.load()?
        };
        let noise = parse_noise(&args.noise)?;
        match args.coeff {
            CoeffArg::Unit => unit_sem(graph, noise)?,
            CoeffArg::Uniform1 => LinearSem::random_scaled(
                graph,
                CoefficientRegime::Uniform1,
                noise,
                args.seed,
                args.feedback_scale,
            )?,
            CoeffArg::SplitWide => LinearSem::random_scaled(
                graph,
                CoefficientRegime::SplitWide,
                noise,
                args.seed,
                args.feedback_scale,
            )?,
            CoeffArg::SplitUnit => LinearSem::random_scaled(
                graph,
                CoefficientRegime::SplitUnit,
                noise,
                args.seed,
                args.feedback_scale,
            )?,
        }
    };
    let data = if args.include_latents {
        sem.sample(args.n, args.seed)?
    } else {
        sem.sample_observed(args.n, args.seed)?
    };
    let mut out = Vec::new();
    data.write_csv(&mut out, &meta_lines(args.seed, &config))?;
    fs::write(&args.out, out).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(path) = &args.emit_sem {
        write_json(path, &serde_json::to_value(sem.to_json())?)?;
    }
    if let Some(path) = &args.emit_graph {
        write_json(path, &serde_json::to_value(sem.graph())?)?;
    }
    println!("wrote {} rows x {} columns to {}", data.n(), data.p(), args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// vcsgs
// ---------------------------------------------------------------------------

fn vcsgs(args: VcsgsArgs) -> anyhow::Result<()> {
    let config = format!(
        "vcsgs alpha={} mode={:?} tv_l={} n_perm={} vertex_cap={}",
        args.alpha, args.mode as u8, args.tv_l, args.n_perm, args.vertex_cap
    );
    let opts = VcsgsOptions {
        vertex_cap: args.vertex_cap,
        ..VcsgsOptions::default()
    };
    let data = args.data.as_deref().map(load_data).transpose()?;
    let pattern = match args.mode {
        VcsgsMode::Gaussian => {
            let data = data
                .as_ref()
                .ok_or_else(|| anyhow!("gaussian mode needs --data"))?;
            run_vcsgs(&FisherZBackend::new(data, args.alpha), &opts)?
        }
        VcsgsMode::Nonparam => {
            let data = data
                .as_ref()
                .ok_or_else(|| anyhow!("nonparam mode needs --data"))?;
            run_vcsgs(
                &L1Backend::new(data, args.alpha, args.n_perm, args.seed),
                &opts,
            )?
        }
        VcsgsMode::Oracle => {
            let truth = args
                .truth
                .as_deref()
                .ok_or_else(|| anyhow!("oracle mode needs --truth"))?;
            let graph = load_graph(truth)?;
            run_vcsgs(&OracleCi::new(&graph), &opts)?
        }
    };
    write_json(
        &args.out,
        &with_meta(serde_json::to_value(&pattern)?, args.seed, &config),
    )?;
    println!(
        "pattern: {} edges, {} marked triples -> {}",
        pattern.edges.len(),
        pattern.triples.len(),
        args.out.display()
    );
    if let Some(est_path) = &args.estimate {
        let data = data
            .as_ref()
            .ok_or_else(|| anyhow!("edge estimation needs --data"))?;
        let model = edge_estimation(data, &pattern, args.tv_l)?;
        write_json(
            est_path,
            &with_meta(serde_json::to_value(&model)?, args.seed, &config),
        )?;
        let known = model.vertices.iter().filter(|v| !matches!(v, latentcycle::vcsgs::VertexEstimate::Unknown)).count();
        println!("estimated {known}/{} conditionals -> {}", model.vertices.len(), est_path.display());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// discover
// ---------------------------------------------------------------------------

fn discover(args: DiscoverArgs) -> anyhow::Result<()> {
    let config = format!(
        "discover mode={:?} alpha_rank={} alpha_kernel={} max_latents={} vertex_cap={}",
        args.mode as u8, args.alpha_rank, args.alpha_kernel, args.max_latents, args.vertex_cap
    );
    let opts = DiscoveryOptions {
        max_latents: args.max_latents,
        vertex_cap: args.vertex_cap,
        round_latents_up: false,
    };
    let result: DiscoveryResult = match args.mode {
        DiscoverMode::Oracle | DiscoverMode::OracleBlocks => {
            let path = args
                .graph
                .as_deref()
                .ok_or_else(|| anyhow!("oracle modes need --graph"))?;
            let graph = load_graph(path)?;
            let backend = OracleBackend::new(&graph)?;
            if matches!(args.mode, DiscoverMode::Oracle) {
                discover_cyclic_clusters(&backend, &opts)?
            } else {
                discover_block_cycles(&backend, &opts)?
            }
        }
        DiscoverMode::Cgin | DiscoverMode::Blocks => {
            let path = args
                .data
                .as_deref()
                .ok_or_else(|| anyhow!("statistical modes need --data"))?;
            let data = load_data(path)?;
            let mut backend = SampleBackend::new(&data, args.seed);
            backend.rank_alpha = args.alpha_rank;
            backend.kernel_alpha = args.alpha_kernel;
            backend.gin_config = GinConfig::default();
            if matches!(args.mode, DiscoverMode::Cgin) {
                discover_cyclic_clusters(&backend, &opts)?
            } else {
                discover_block_cycles(&backend, &opts)?
            }
        }
    };
    let payload = result.to_json_value();
    if let Some(out) = &args.out {
        write_json(out, &with_meta(payload.clone(), args.seed, &config))?;
    }
    println!(
        "found {} clusters ({} cyclic), {} strata",
        result.clusters.len(),
        result.clusters.iter().filter(|c| c.cyclic).count(),
        result.order.strata.len()
    );
    if let Some(metrics_path) = &args.metrics {
        let truth_path = args
            .truth
            .as_deref()
            .ok_or_else(|| anyhow!("--metrics needs --truth"))?;
        let truth = load_graph(truth_path)?;
        let metrics = evaluate(&result, &truth)?;
        write_json(
            metrics_path,
            &with_meta(serde_json::to_value(&metrics)?, args.seed, &config),
        )?;
        println!(
            "metrics: cluster r/p = {:.3}/{:.3}, order r/p = {:.3}/{:.3}, cyclic r/p = {:.3}/{:.3}",
            metrics.cluster_recall,
            metrics.cluster_precision,
            metrics.latent_order_recall,
            metrics.latent_order_precision,
            metrics.cyclic_recall,
            metrics.cyclic_precision
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// faithsim
// ---------------------------------------------------------------------------

fn faithsim(args: FaithsimArgs) -> anyhow::Result<()> {
    let graphs = if args.full { 10_000 } else { args.graphs };
    let nodes: Vec<usize> = parse_list(&args.nodes)?
        .into_iter()
        .map(|v| v as usize)
        .collect();
    let nbs = parse_list(&args.nb)?;
    let thresholds = parse_list(&args.thresholds)?;
    let config = format!(
        "faithsim report={:?} nodes={:?} nb={:?} thresholds={:?} graphs={graphs} k={}",
        args.report as u8, nodes, nbs, thresholds, args.k
    );
    let meta = meta_lines(args.seed, &config);
    let csv = match args.report {
        FaithReport::Sweep => {
            let rows = faithfulness::violation_sweep(&nodes, &nbs, &thresholds, graphs, args.seed)?;
            faithfulness::render_sweep_csv(&rows, &meta)
        }
        FaithReport::Maxk => {
            let p = *nodes
                .first()
                .ok_or_else(|| anyhow!("maxk report needs one node count"))?;
            let rows = faithfulness::max_k_sweep(p, &nbs, graphs, args.seed)?;
            faithfulness::render_max_k_csv(&rows, &meta)
        }
        FaithReport::EdgeProfile => {
            let p = *nodes
                .first()
                .ok_or_else(|| anyhow!("edge-profile report needs one node count"))?;
            let rows =
                faithfulness::edge_strength_violation_profile(p, &nbs, args.k, graphs, args.seed)?;
            faithfulness::render_edge_profile_csv(&rows, &meta)
        }
    };
    fs::write(&args.out, csv).with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {}", args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// tensorcheck
// ---------------------------------------------------------------------------

fn tensorcheck(args: TensorcheckArgs) -> anyhow::Result<()> {
    let config = format!(
        "tensorcheck sets={} order={:?} len_cap={} catalog={:?}",
        args.sets, args.order as u8, args.len_cap, args.source.catalog
    );
    let sem = if let Some(path) = &args.sem {
        load_sem(path)?
    } else {
        unit_sem(args.source.load()?, NoiseSpec::ShiftedExponential { rate: 1.0 })?
    };
    let by_label = |name: &str| -> anyhow::Result<usize> {
        sem.graph()
            .vertex_by_label(name.trim())
            .ok_or_else(|| anyhow!("unknown vertex {name}"))
    };
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for side in args.sets.split('|') {
        let mut ids = Vec::new();
        for name in side.split(',') {
            ids.push(by_label(name)?);
        }
        sets.push(ids);
    }
    if sets.len() < 2 {
        bail!("need at least two axis sets");
    }
    let rotate = |sets: &[Vec<usize>], by: usize| -> Vec<Vec<usize>> {
        (0..sets.len()).map(|i| sets[(i + by) % sets.len()].clone()).collect()
    };
    let lead_sets = match args.order {
        AxisOrder::S1s2s3 | AxisOrder::All => sets.clone(),
        AxisOrder::S2s3s1 => rotate(&sets, 1),
        AxisOrder::S3s1s2 => rotate(&sets, 2),
    };
    let report = tensor_constraint_check(&sem, &lead_sets, args.len_cap)?;
    let mut payload = serde_json::json!({
        "graphical_sided_intersection": report.graphical,
        "numeric_det": report.numeric_det,
        "tolerance": report.tolerance,
        "consistent": report.consistent,
    });
    if matches!(args.order, AxisOrder::All) {
        if sets.len() != 3 {
            bail!("--order all reports rotations for exactly three sets");
        }
        let arr: [Vec<usize>; 3] = [sets[0].clone(), sets[1].clone(), sets[2].clone()];
        let rotations = odd_dim_axis_sensitivity(&sem, &arr)?;
        payload["rotations"] = serde_json::to_value(
            rotations
                .iter()
                .map(|(rot, det)| serde_json::json!({ "axis_order": rot, "det": det }))
                .collect::<Vec<_>>(),
        )?;
    }
    println!(
        "graphical sided intersection: {}; det = {:.6e}; consistent: {}",
        report.graphical, report.numeric_det, report.consistent
    );
    if let Some(out) = &args.out {
        write_json(out, &with_meta(payload, 0, &config))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

fn evaluate_cmd(args: EvaluateArgs) -> anyhow::Result<()> {
    let truth = load_graph(&args.truth)?;
    let text = fs::read_to_string(&args.found)
        .with_context(|| format!("reading {}", args.found.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let payload = value.get("result").unwrap_or(&value);
    let labels: Vec<String> = truth
        .observed_ids()
        .iter()
        .map(|&v| truth.label(v).to_string())
        .collect();
    let found = DiscoveryResult::from_json_value(payload, &labels)?;
    let metrics = evaluate(&found, &truth)?;
    let config = format!("evaluate found={}", args.found.display());
    println!("{}", serde_json::to_string_pretty(&metrics)?);
    if let Some(out) = &args.out {
        write_json(out, &with_meta(serde_json::to_value(&metrics)?, 0, &config))?;
    }
    Ok(())
}

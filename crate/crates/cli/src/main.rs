//! `disparity-lab`: command-line evaluation of group-influence disparity on
//! graphs, under DeGroot averaging and Friedkin-Johnsen dynamics.
//!
//! Three subcommands:
//!
//! * `disparity` — evaluate one graph (JSON report, `schema` 1),
//! * `table1` — one summary row per dataset (CSV or JSON),
//! * `export-chain` — build the disparity-free Metropolis chain and write it
//!   as `i j value` rows or a Graphviz digraph.
//!
//! All randomness is seeded (`--seed`, default 42); reruns with identical
//! inputs produce byte-identical output.

use std::error::Error;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use disparity_core::degroot::{
    disparity_degroot, metropolis_chain, mixing_time, optimal_opinions_degroot,
    optimal_stationary_degroot,
};
use disparity_core::fj::disparity_fj;
use disparity_core::io;
use disparity_core::spectral::{
    fiedler_pair, spectral_partition, stationary_distribution, EigenPair, SpectralConfig,
};
use disparity_core::{
    partition_stats, Directedness, DisparityReport, Model, OpinionVector, Partition,
    WeightedGraph,
};

/// User-supplied opinion vectors may miss unit norm by at most this much
/// before `--renormalize` is required.
const NORM_TOL: f64 = 1e-6;

type CliResult<T> = Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(
    name = "disparity-lab",
    version,
    about = "Measure and export group-influence disparity on graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the disparity of one graph under a chosen opinion model.
    Disparity(DisparityArgs),
    /// Emit one summary row per dataset: sizes, imbalances, mixing bound,
    /// lambda_2, and the balanced-case disparity 1/(1+lambda_2)^2.
    Table1(Table1Args),
    /// Build the Metropolis chain that zeroes DeGroot disparity for the
    /// given opinions and partition, and export it.
    ExportChain(ExportChainArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    /// DeGroot averaging on the degree-normalized random walk.
    Degroot,
    /// Friedkin-Johnsen dynamics with unit anchoring.
    Fj,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
    Dot,
}

#[derive(Args)]
struct DisparityArgs {
    /// Edge-list file: one `u v [w]` line per edge, `#` comments allowed.
    #[arg(long)]
    graph: PathBuf,
    /// Opinion file, one value per line in node order. Defaults to the
    /// model's extremal construction (worst-case profile for DeGroot, the
    /// absolute Fiedler vector for FJ).
    #[arg(long)]
    opinions: Option<PathBuf>,
    /// Partition file, one `A`/`B` token per line in node order. Defaults to
    /// the sign split of the Fiedler vector.
    #[arg(long)]
    partition: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelArg::Fj)]
    model: ModelArg,
    /// Rescale a user-supplied opinion vector to unit norm instead of
    /// rejecting it.
    #[arg(long)]
    renormalize: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
}

#[derive(Args)]
struct Table1Args {
    /// Dataset edge-list files; defaults to the bundled data files.
    paths: Vec<PathBuf>,
    /// Accuracy parameter of the mixing-time bound.
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    /// Seed for the per-dataset uniform opinion draw.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

#[derive(Args)]
struct ExportChainArgs {
    /// Edge-list file: one `u v [w]` line per edge, `#` comments allowed.
    #[arg(long)]
    graph: PathBuf,
    /// Opinion file; defaults to a seeded uniform draw.
    #[arg(long)]
    opinions: Option<PathBuf>,
    /// Partition file; defaults to the sign split of the Fiedler vector.
    #[arg(long)]
    partition: Option<PathBuf>,
    /// Rescale a user-supplied opinion vector to unit norm instead of
    /// rejecting it.
    #[arg(long)]
    renormalize: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `csv` emits `i j value` rows (re-ingestable); `dot` a Graphviz digraph.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Disparity(args) => cmd_disparity(args),
        Command::Table1(args) => cmd_table1(args),
        Command::ExportChain(args) => cmd_export_chain(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

// ---------------------------------------------------------------------------
// Shared input handling
// ---------------------------------------------------------------------------

/// A parsed graph, restricted to its largest connected component when the
/// input was disconnected (every downstream construction needs connectivity).
struct LoadedGraph {
    graph: WeightedGraph,
    /// Node count of the file as given, before any restriction.
    original_n: usize,
    /// `kept[new_id] = old_id` when a restriction happened.
    kept: Option<Vec<usize>>,
    notes: Vec<String>,
}

fn load_graph(path: &Path) -> CliResult<LoadedGraph> {
    let g = io::read_edge_list(path, Directedness::Undirected)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let original_n = g.n();
    if g.is_connected() {
        return Ok(LoadedGraph {
            graph: g,
            original_n,
            kept: None,
            notes: Vec::new(),
        });
    }
    let parts = g.connected_components().len();
    let (lcc, kept) = g.largest_connected_component();
    let note = format!(
        "graph is disconnected ({parts} components); restricted to the largest connected \
         component ({} of {original_n} nodes)",
        lcc.n()
    );
    Ok(LoadedGraph {
        graph: lcc,
        original_n,
        kept: Some(kept),
        notes: vec![note],
    })
}

/// Reads an opinion file against a possibly restricted graph. Vectors sized
/// for the original node set are restricted alongside the graph (and then
/// necessarily rescaled); otherwise the norm must be 1 within [`NORM_TOL`]
/// unless `--renormalize` was passed.
fn resolve_opinions(
    path: &Path,
    loaded: &LoadedGraph,
    renormalize: bool,
    notes: &mut Vec<String>,
) -> CliResult<OpinionVector> {
    let raw = io::read_opinions_raw(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let n = loaded.graph.n();
    let (raw, restricted) = if raw.len() == n {
        (raw, false)
    } else if raw.len() == loaded.original_n && loaded.kept.is_some() {
        let kept = loaded.kept.as_ref().expect("restriction map present");
        notes.push(format!(
            "opinions restricted to the largest connected component and rescaled to unit norm"
        ));
        (DVector::from_fn(n, |i, _| raw[kept[i]]), true)
    } else {
        return Err(format!(
            "{}: expected {n} opinions (or {} before restriction), got {}",
            path.display(),
            loaded.original_n,
            raw.len()
        )
        .into());
    };
    let norm = raw.norm();
    if !restricted && (norm - 1.0).abs() > NORM_TOL {
        if !renormalize {
            return Err(format!(
                "{}: opinion vector has norm {norm:.9}, not 1; pass --renormalize to rescale",
                path.display()
            )
            .into());
        }
        notes.push(format!(
            "opinions rescaled from norm {norm:.9} to unit norm (--renormalize)"
        ));
    }
    Ok(OpinionVector::from_unnormalized(raw)?)
}

/// Reads a partition file against a possibly restricted graph, restricting
/// the membership list alongside the graph when necessary.
fn resolve_partition(path: &Path, loaded: &LoadedGraph, notes: &mut Vec<String>) -> CliResult<Partition> {
    let p = io::read_partition(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let n = loaded.graph.n();
    if p.len() == n {
        return Ok(p);
    }
    if p.len() == loaded.original_n {
        if let Some(kept) = &loaded.kept {
            notes.push("partition restricted to the largest connected component".to_string());
            let indicator: Vec<bool> = kept
                .iter()
                .map(|&old| p.group(old) == disparity_core::Group::A)
                .collect();
            return Ok(Partition::from_indicator(&indicator)?);
        }
    }
    Err(format!(
        "{}: expected {n} group tokens (or {} before restriction), got {}",
        path.display(),
        loaded.original_n,
        p.len()
    )
    .into())
}

fn default_partition(
    g: &WeightedGraph,
    cfg: &SpectralConfig,
    notes: &mut Vec<String>,
) -> CliResult<(Partition, EigenPair)> {
    let (p, pair) = spectral_partition(g, cfg)?;
    notes.push("partition defaulted to the sign split of the Fiedler vector".to_string());
    Ok((p, pair))
}

fn write_output(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// disparity
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct GraphMeta {
    path: String,
    nodes: usize,
    edges: usize,
}

#[derive(Serialize)]
struct RunOutput<'a> {
    schema: u32,
    command: &'a str,
    seed: u64,
    graph: GraphMeta,
    notes: &'a [String],
    report: &'a DisparityReport,
}

fn emit_report(
    command: &str,
    seed: u64,
    graph_path: &Path,
    g: &WeightedGraph,
    notes: &[String],
    report: &DisparityReport,
    out: Option<&Path>,
) -> CliResult<()> {
    let envelope = RunOutput {
        schema: 1,
        command,
        seed,
        graph: GraphMeta {
            path: graph_path.display().to_string(),
            nodes: g.n(),
            edges: g.edge_count(),
        },
        notes,
        report,
    };
    let mut text = serde_json::to_string_pretty(&envelope)?;
    text.push('\n');
    write_output(out, &text)
}

fn cmd_disparity(args: DisparityArgs) -> CliResult<()> {
    if args.format != OutputFormat::Json {
        return Err("the disparity command only emits JSON (--format json)".into());
    }
    let cfg = SpectralConfig::default();
    let mut loaded = load_graph(&args.graph)?;
    let mut notes = std::mem::take(&mut loaded.notes);
    let g = &loaded.graph;

    let mut fiedler: Option<EigenPair> = None;
    let p = match &args.partition {
        Some(path) => resolve_partition(path, &loaded, &mut notes)?,
        None => {
            let (p, pair) = default_partition(g, &cfg, &mut notes)?;
            fiedler = Some(pair);
            p
        }
    };

    let report = match args.model {
        ModelArg::Degroot => {
            let t = g.row_stochastic()?;
            let q = stationary_distribution(&t, &cfg)?;
            let s = match &args.opinions {
                Some(path) => resolve_opinions(path, &loaded, args.renormalize, &mut notes)?,
                None => {
                    notes.push(
                        "opinions defaulted to the worst-case profile for the random-walk \
                         stationary distribution"
                            .to_string(),
                    );
                    optimal_opinions_degroot(&q, &p)?
                }
            };
            let value = disparity_degroot(&q, &s, &p)?;
            DisparityReport::new(Model::Degroot, value)
                .with_opinions(&s)
                .with_partition(&p)
                .with_diagnostic("consensus", q.dot(s.as_vector()))
                .with_diagnostic("influence_gap", q.dot(&s.signed_difference(&p)?))
        }
        ModelArg::Fj => {
            let s = match &args.opinions {
                Some(path) => resolve_opinions(path, &loaded, args.renormalize, &mut notes)?,
                None => {
                    let pair = match fiedler.as_ref() {
                        Some(pair) => pair.clone(),
                        None => fiedler_pair(g, &cfg)?,
                    };
                    notes.push("opinions defaulted to the absolute Fiedler vector".to_string());
                    let s = OpinionVector::new(pair.vector.abs())?;
                    fiedler = Some(pair);
                    s
                }
            };
            let value = disparity_fj(g, &s, &p)?;
            let sentiment_gap = s.signed_difference(&p)?.sum().abs();
            let mut report = DisparityReport::new(Model::FriedkinJohnsen, value)
                .with_opinions(&s)
                .with_partition(&p)
                .with_diagnostic("sentiment_gap", sentiment_gap);
            if let Some(pair) = &fiedler {
                report = report.with_diagnostic("lambda_2", pair.value);
            }
            report
        }
    };
    emit_report(
        "disparity",
        args.seed,
        &args.graph,
        g,
        &notes,
        &report,
        args.out.as_deref(),
    )
}

// ---------------------------------------------------------------------------
// table1
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct TableRow {
    dataset: String,
    n: usize,
    m: usize,
    cluster_imbalance: f64,
    sentiment_imbalance: f64,
    mixing_bound: f64,
    lambda_2: f64,
    disparity: f64,
}

#[derive(Serialize)]
struct TableOutput<'a> {
    schema: u32,
    command: &'a str,
    seed: u64,
    eps: f64,
    notes: &'a [String],
    rows: &'a [TableRow],
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn table1_row(path: &Path, eps: f64, seed: u64, notes: &mut Vec<String>) -> CliResult<TableRow> {
    let name = dataset_name(path);
    let loaded = load_graph(path)?;
    notes.extend(loaded.notes.iter().map(|n| format!("{name}: {n}")));
    let g = &loaded.graph;
    let cfg = SpectralConfig::default();

    let (p, pair) = spectral_partition(g, &cfg)?;
    let lambda_2 = pair.value;
    let disparity = (1.0 + lambda_2).powi(-2);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = OpinionVector::sample_uniform(g.n(), &mut rng)?;
    let stats = partition_stats(&p, &s, None)?;
    let sentiment_imbalance = stats.sentiment_ratio.max(1.0 / stats.sentiment_ratio);

    let t = metropolis_chain(g, &s, &p)?;
    let q = optimal_stationary_degroot(&s, &p)?;
    let mix = mixing_time(&t, &q, &s, eps, 0, &cfg)?;

    Ok(TableRow {
        dataset: name,
        n: g.n(),
        m: g.edge_count(),
        cluster_imbalance: stats.cluster_imbalance,
        sentiment_imbalance,
        mixing_bound: mix.spectral_lower_bound,
        lambda_2,
        disparity,
    })
}

fn default_datasets() -> CliResult<Vec<PathBuf>> {
    let bundled = [Path::new("data/karate.txt"), Path::new("data/lesmis.txt")];
    let mut paths = Vec::new();
    for p in bundled {
        if !p.exists() {
            return Err(format!(
                "bundled dataset {} not found; run from the repository root or pass dataset \
                 paths explicitly",
                p.display()
            )
            .into());
        }
        paths.push(p.to_path_buf());
    }
    let polblogs = Path::new("data/polblogs_lcc.txt");
    if polblogs.exists() {
        paths.push(polblogs.to_path_buf());
    } else {
        eprintln!(
            "note: data/polblogs_lcc.txt not found; run scripts/fetch_polblogs.py to include it"
        );
    }
    Ok(paths)
}

fn cmd_table1(args: Table1Args) -> CliResult<()> {
    if !(args.eps > 0.0 && args.eps < 1.0) {
        return Err(format!("--eps {} outside (0, 1)", args.eps).into());
    }
    let paths = if args.paths.is_empty() {
        default_datasets()?
    } else {
        args.paths.clone()
    };
    let mut notes = Vec::new();
    let mut rows = Vec::new();
    for path in &paths {
        rows.push(table1_row(path, args.eps, args.seed, &mut notes)?);
    }
    let text = match args.format {
        OutputFormat::Csv => {
            for note in &notes {
                eprintln!("note: {note}");
            }
            let mut out = String::from(
                "dataset,n,m,cluster_imbalance,sentiment_imbalance,mixing_bound,lambda_2,disparity\n",
            );
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                    r.dataset,
                    r.n,
                    r.m,
                    r.cluster_imbalance,
                    r.sentiment_imbalance,
                    r.mixing_bound,
                    r.lambda_2,
                    r.disparity
                )
                .expect("string writes are infallible");
            }
            out
        }
        OutputFormat::Json => {
            let envelope = TableOutput {
                schema: 1,
                command: "table1",
                seed: args.seed,
                eps: args.eps,
                notes: &notes,
                rows: &rows,
            };
            let mut text = serde_json::to_string_pretty(&envelope)?;
            text.push('\n');
            text
        }
        OutputFormat::Dot => return Err("table1 emits CSV or JSON, not DOT".into()),
    };
    write_output(args.out.as_deref(), &text)
}

// ---------------------------------------------------------------------------
// export-chain
// ---------------------------------------------------------------------------

fn cmd_export_chain(args: ExportChainArgs) -> CliResult<()> {
    let cfg = SpectralConfig::default();
    let mut loaded = load_graph(&args.graph)?;
    let mut notes = std::mem::take(&mut loaded.notes);
    let g = &loaded.graph;

    let p = match &args.partition {
        Some(path) => resolve_partition(path, &loaded, &mut notes)?,
        None => default_partition(g, &cfg, &mut notes)?.0,
    };
    let s = match &args.opinions {
        Some(path) => resolve_opinions(path, &loaded, args.renormalize, &mut notes)?,
        None => {
            notes.push("opinions defaulted to a seeded uniform draw".to_string());
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            OpinionVector::sample_uniform(g.n(), &mut rng)?
        }
    };
    let t = metropolis_chain(g, &s, &p)?;
    for note in &notes {
        eprintln!("note: {note}");
    }
    let text = match args.format {
        OutputFormat::Csv => io::write_chain(&t),
        OutputFormat::Dot => io::write_chain_dot(&t, g.labels()),
        OutputFormat::Json => return Err("export-chain emits CSV or DOT, not JSON".into()),
    };
    write_output(args.out.as_deref(), &text)
}

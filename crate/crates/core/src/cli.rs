//! Command-line front end.
//!
//! Every JSON artifact carries a schema id, the full run configuration and
//! the SHA-256 of its input, so any output can be traced back to the exact
//! command that produced it.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::finisher::{complete_coloring, FinishConfig};
use crate::generators::GenSpec;
use crate::graph::{load_graph, verify_edge_coloring, Color, ConflictGraph, Graph, GraphFormat};
use crate::nibble::{run_nibble, write_trace, Mode, NibbleConfig};
use crate::oracle::exact_chromatic_number;
use crate::schedule::{integer_target, verify_schedule_properties, Schedule};
use crate::structure::{build_family_x, default_threshold, edge_strangers_codegree_audit, verify_general_conditions, vertex_friends};

pub const SCHEMA_COLOR: &str = "nibble.color.v1";
pub const SCHEMA_ANALYZE: &str = "nibble.analyze.v1";
pub const SCHEMA_SCHEDULE: &str = "nibble.schedule.v1";
pub const SCHEMA_ORACLE: &str = "nibble.oracle.v1";
pub const SCHEMA_GENERATE: &str = "nibble.generate.v1";

/// Conflict graphs up to this size get an exact optimum in color summaries.
pub const ORACLE_SIZE_LIMIT: usize = 40;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "nibble", version, about = "Strong and distance-t edge coloring by the wasteful nibble")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a generated graph as an edge list.
    Generate(GenerateArgs),
    /// Color the edges of a graph so that same-colored edges are at distance >= t.
    Color(ColorArgs),
    /// Report structural conditions of the conflict graph.
    Analyze(AnalyzeArgs),
    /// Compute the parameter trajectory and check its lemmas.
    Schedule(ScheduleArgs),
    /// Exact distance-t chromatic index for small graphs.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Cycle,
    CompleteBipartite,
    C5Blowup,
    RandomRegular,
    Projective,
    HighGirth,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Blow-up factor for c5-blowup.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub a: Option<usize>,
    #[arg(long)]
    pub b: Option<usize>,
    /// Field order for projective.
    #[arg(long)]
    pub q: Option<usize>,
    /// Target girth for high-girth.
    #[arg(long)]
    pub g: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FormatArg {
    EdgeList,
    Dimacs,
}

impl From<FormatArg> for GraphFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::EdgeList => GraphFormat::EdgeList,
            FormatArg::Dimacs => GraphFormat::Dimacs,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeArg {
    Theory,
    Empirical,
}

#[derive(Debug, Args, Serialize)]
pub struct ColorArgs {
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value = "edge-list")]
    pub format: FormatArg,
    #[arg(long, default_value_t = 2)]
    pub t: usize,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value = "empirical")]
    pub mode: ModeArg,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 10)]
    pub retry_budget: usize,
    #[arg(long, default_value_t = 8.0)]
    pub finish_ratio: f64,
    /// Palette size; defaults to floor(L_1).
    #[arg(long)]
    pub k: Option<usize>,
    /// Vertex friendship threshold; defaults to d / ln^40 d.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value = "edge-list")]
    pub format: FormatArg,
    #[arg(long, default_value_t = 2)]
    pub t: usize,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Exponent bounding set multiplicity.
    #[arg(long = "n-exp", default_value_t = 1)]
    pub n_exp: u32,
    #[arg(long)]
    pub theta: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScheduleArgs {
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    pub graph: PathBuf,
    #[arg(long, value_enum, default_value = "edge-list")]
    pub format: FormatArg,
    #[arg(long, default_value_t = 2)]
    pub t: usize,
    #[arg(long, default_value_t = crate::oracle::DEFAULT_NODE_BUDGET)]
    pub budget: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct RunConfig<'a, T: Serialize> {
    pub command: &'static str,
    pub params: &'a T,
    pub version: &'static str,
}

#[derive(Debug)]
pub enum CliError {
    Input(Error),
    Verify(String),
    Internal(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Parse { .. } | Error::SelfLoop { .. } | Error::VertexOutOfRange { .. } | Error::InvalidParameter(_) | Error::NotRegular => {
                CliError::Input(e)
            }
            other => CliError::Internal(other),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Internal(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(Error::Json(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Verify(_) | CliError::Internal(_) => EXIT_VERIFY,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(e) => write!(f, "input error: {e}"),
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
            CliError::Internal(e) => write!(f, "error: {e}"),
        }
    }
}

pub type CliResult<T = ()> = std::result::Result<T, CliError>;

/// Parses arguments, runs the command, and returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

/// Honors `NIBBLE_THREADS` by sizing the global rayon pool.
pub fn configure_threads() {
    if let Some(n) = std::env::var("NIBBLE_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

pub fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Generate(a) => cmd_generate(&a),
        Command::Color(a) => cmd_color(&a).map(|_| ()),
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Schedule(a) => cmd_schedule(&a),
        Command::Oracle(a) => cmd_oracle(&a),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        eprintln!("no --seed given; using seed {s}");
        s
    })
}

fn need(v: Option<usize>, flag: &str, family: Family) -> Result<usize> {
    v.ok_or_else(|| Error::InvalidParameter(format!("--{flag} is required for {family:?}")))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> CliResult {
    match out {
        Some(p) => write_json(p, value),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, value)?;
            writeln!(lock)?;
            Ok(())
        }
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> CliResult {
    let spec = match a.family {
        Family::Cycle => GenSpec::Cycle { n: need(a.n, "n", a.family)? },
        Family::CompleteBipartite => GenSpec::CompleteBipartite {
            a: need(a.a, "a", a.family)?,
            b: need(a.b, "b", a.family)?,
        },
        Family::C5Blowup => GenSpec::C5Blowup { t: need(a.t, "t", a.family)? },
        Family::RandomRegular => GenSpec::RandomRegular {
            n: need(a.n, "n", a.family)?,
            d: need(a.d, "d", a.family)?,
            seed: resolve_seed(a.seed),
        },
        Family::Projective => GenSpec::ProjectiveIncidence { q: need(a.q, "q", a.family)? },
        Family::HighGirth => GenSpec::HighGirthRegular {
            n: need(a.n, "n", a.family)?,
            d: need(a.d, "d", a.family)?,
            g: need(a.g, "g", a.family)?,
            seed: resolve_seed(a.seed),
        },
    };
    let g = spec.generate()?;
    let mut buf = Vec::new();
    writeln!(buf, "# {}", serde_json::to_string(&json!({ "schema": SCHEMA_GENERATE, "spec": spec }))?)?;
    g.write_edge_list(&mut buf)?;
    match &a.out {
        Some(p) => fs::write(p, buf)?,
        None => io::stdout().write_all(&buf)?,
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ColorSummary {
    pub schema: &'static str,
    pub input_sha256: String,
    pub n: usize,
    pub m: usize,
    pub base_max_degree: usize,
    pub conflict_max_degree: usize,
    pub delta: f64,
    pub k_budget: usize,
    pub schedule_closed: bool,
    pub i_star: Option<usize>,
    pub iterations: usize,
    pub halted: Option<String>,
    pub nibble_colored: usize,
    pub property_failures: usize,
    pub finisher: crate::finisher::FinisherKind,
    pub finisher_notes: Vec<String>,
    pub resamplings: usize,
    pub extended: usize,
    pub colors_used: usize,
    pub verified: bool,
    pub violations: usize,
    pub oracle_value: Option<usize>,
    pub oracle_gap: Option<i64>,
}

/// Colors `a.graph`, writing `coloring.txt`, `edges.txt`, `trace.csv` and
/// `summary.json` into `a.out`.
pub fn cmd_color(a: &ColorArgs) -> CliResult<ColorSummary> {
    let bytes = fs::read(&a.graph).map_err(Error::Io)?;
    let g = load_graph(&a.graph, a.format.into())?;
    let seed = resolve_seed(a.seed);
    let (summary, colors, trace) = color_graph(&g, a, seed, sha256_hex(&bytes))?;

    fs::create_dir_all(&a.out)?;
    let coloring: Vec<Option<Color>> = colors.iter().map(|&c| Some(c)).collect();
    let mut f = BufWriter::new(File::create(a.out.join("coloring.txt"))?);
    crate::graph::write_coloring(&coloring, &mut f)?;
    f.flush()?;
    let mut f = BufWriter::new(File::create(a.out.join("edges.txt"))?);
    g.write_edge_table(&mut f)?;
    f.flush()?;
    let mut f = BufWriter::new(File::create(a.out.join("trace.csv"))?);
    write_trace(&trace, &mut f)?;
    f.flush()?;
    let config = RunConfig {
        command: "color",
        params: &json!({
            "graph": a.graph,
            "format": a.format,
            "t": a.t,
            "epsilon": a.epsilon,
            "gamma": a.gamma,
            "mode": a.mode,
            "seed": seed,
            "retry_budget": a.retry_budget,
            "finish_ratio": a.finish_ratio,
            "k_override": a.k,
            "theta": a.theta,
            "out": a.out,
        }),
        version: env!("CARGO_PKG_VERSION"),
    };
    write_json(&a.out.join("summary.json"), &json!({ "config": config, "summary": summary }))?;
    if !summary.verified {
        return Err(CliError::Verify(format!("{} conflicting pairs in the final coloring", summary.violations)));
    }
    Ok(summary)
}

/// The full pipeline on an in-memory graph: conflict graph, schedule at
/// `Delta = 2 d^t`, nibble, finisher and verification.
pub fn color_graph(g: &Graph, a: &ColorArgs, seed: u64, input_sha256: String) -> CliResult<(ColorSummary, Vec<Color>, Vec<crate::nibble::TraceRecord>)> {
    let cg = ConflictGraph::build(g, a.t)?;
    let d = g.max_degree();
    let delta = (2.0 * (d as f64).powi(a.t as i32)).max(3.0);
    let schedule = Schedule::trajectory(delta, a.epsilon, a.gamma)?;
    let k = match a.k {
        Some(k) => k,
        None => integer_target(schedule.l[0]).0.max(1),
    };
    let theta = a.theta.unwrap_or_else(|| default_threshold(d));
    let fx = build_family_x(g, &vertex_friends(g, theta), a.t);
    let mode = match a.mode {
        ModeArg::Theory => Mode::Theory,
        ModeArg::Empirical => Mode::Empirical,
    };
    let run = run_nibble(
        &cg,
        &fx,
        &schedule,
        &NibbleConfig {
            mode,
            retry_budget: a.retry_budget,
            seed,
            k: Some(k),
        },
    )?;
    let done = complete_coloring(
        &cg,
        &run.coloring,
        &run.state,
        &FinishConfig {
            ratio_required: a.finish_ratio,
            resample_cap: None,
            seed: crate::rng::derive_seed(seed, &[u64::MAX]),
        },
    )?;
    let coloring: Vec<Option<Color>> = done.colors.iter().map(|&c| Some(c)).collect();
    let report = verify_edge_coloring(&cg, &coloring, None);
    let oracle_value = (cg.n() <= ORACLE_SIZE_LIMIT)
        .then(|| exact_chromatic_number(cg.graph(), 2_000_000).value)
        .flatten();
    let summary = ColorSummary {
        schema: SCHEMA_COLOR,
        input_sha256,
        n: g.n(),
        m: g.m(),
        base_max_degree: d,
        conflict_max_degree: cg.max_degree(),
        delta,
        k_budget: k,
        schedule_closed: schedule.i_star.is_some(),
        i_star: schedule.i_star,
        iterations: run.iterations,
        halted: run.halted.clone(),
        nibble_colored: run.coloring.colored_count(),
        property_failures: run.failed_reports.len(),
        finisher: done.finisher,
        finisher_notes: done.notes.clone(),
        resamplings: done.resamplings,
        extended: done.extended,
        colors_used: report.colors_used,
        verified: report.valid,
        violations: report.violations.len(),
        oracle_value,
        oracle_gap: oracle_value.map(|v| report.colors_used as i64 - v as i64),
    };
    Ok((summary, done.colors, run.trace))
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> CliResult {
    let bytes = fs::read(&a.graph).map_err(Error::Io)?;
    let g = load_graph(&a.graph, a.format.into())?;
    let cg = ConflictGraph::build(&g, a.t)?;
    let theta = a.theta.unwrap_or_else(|| default_threshold(g.max_degree()));
    let fm = vertex_friends(&g, theta);
    let fx = build_family_x(&g, &fm, a.t);
    let report = verify_general_conditions(&cg, &fx, a.gamma, a.epsilon, a.n_exp)?;
    let audit = edge_strangers_codegree_audit(&cg, &fm);
    let config = RunConfig {
        command: "analyze",
        params: a,
        version: env!("CARGO_PKG_VERSION"),
    };
    emit_json(
        a.out.as_deref(),
        &json!({
            "schema": SCHEMA_ANALYZE,
            "config": config,
            "input_sha256": sha256_hex(&bytes),
            "theta": if theta.is_finite() { json!(theta) } else { json!("inf") },
            "family_sets": fx.sets().len(),
            "max_set_size": fx.sets().iter().map(|s| s.members.len()).max().unwrap_or(0),
            "audit": audit,
            "report": report,
        }),
    )
}

pub fn cmd_schedule(a: &ScheduleArgs) -> CliResult {
    let s = Schedule::trajectory(a.delta, a.epsilon, a.gamma)?;
    let checks = verify_schedule_properties(&s);
    fs::create_dir_all(&a.out)?;
    let mut f = BufWriter::new(File::create(a.out.join("schedule.csv"))?);
    s.write_csv(&mut f)?;
    f.flush()?;
    let config = RunConfig {
        command: "schedule",
        params: a,
        version: env!("CARGO_PKG_VERSION"),
    };
    let params_text = format!("{} {} {}", a.delta, a.epsilon, a.gamma);
    write_json(
        &a.out.join("checks.json"),
        &json!({
            "schema": SCHEMA_SCHEDULE,
            "config": config,
            "input_sha256": sha256_hex(params_text.as_bytes()),
            "closed": s.i_star.is_some(),
            "i_star": s.i_star,
            "length": s.len(),
            "iteration_cap": Schedule::iteration_cap(a.delta),
            "warnings": s.warnings,
            "checks": checks,
        }),
    )?;
    if s.i_star.is_none() {
        return Err(CliError::Verify(format!(
            "schedule did not close within {} iterations (T/L reached {:.4})",
            s.len(),
            s.r.last().copied().unwrap_or(f64::NAN)
        )));
    }
    if !checks.all_hold {
        let failed: Vec<&str> = checks.items.iter().filter(|c| !c.holds).map(|c| c.item.as_str()).collect();
        return Err(CliError::Verify(format!("lemma checks failed: {failed:?}")));
    }
    Ok(())
}

pub fn cmd_oracle(a: &OracleArgs) -> CliResult {
    let bytes = fs::read(&a.graph).map_err(Error::Io)?;
    let g = load_graph(&a.graph, a.format.into())?;
    let cg = ConflictGraph::build(&g, a.t)?;
    let r = exact_chromatic_number(cg.graph(), a.budget);
    fs::create_dir_all(&a.out)?;
    let cert_path = a.out.join("oracle_coloring.txt");
    let cert: Vec<Option<Color>> = r.certificate.iter().map(|&c| Some(c)).collect();
    let mut f = BufWriter::new(File::create(&cert_path)?);
    crate::graph::write_coloring(&cert, &mut f)?;
    f.flush()?;
    let config = RunConfig {
        command: "oracle",
        params: a,
        version: env!("CARGO_PKG_VERSION"),
    };
    let out = json!({
        "schema": SCHEMA_ORACLE,
        "config": config,
        "input_sha256": sha256_hex(&bytes),
        "value": r.value,
        "lower": r.lower,
        "upper": r.upper,
        "certificate_path": cert_path,
        "nodes": r.nodes,
        "millis": r.millis,
    });
    write_json(&a.out.join("oracle.json"), &out)?;
    println!("{}", serde_json::to_string(&out)?);
    Ok(())
}

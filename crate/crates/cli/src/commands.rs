//! `madd` subcommands. Every command prints canonical JSON on stdout and
//! diagnostics on stderr, and maps failures to documented exit codes.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use madpg::analysis::{
    analyze, compute_breakpoint, racing_messages, AnalysisError, AnalysisReport, RaceMode, RaceOracle,
};
use madpg::graph::{build_graph, EventGraph, DEFAULT_EPSILON};
use madpg::ids::{EventRef, MessageId};
use madpg::monitor::{read_trace, write_trace, OverheadModel, Trace, TraceError};
use madpg::replay::{
    explore_all, manipulate_and_replay, record_or_partial, replay, run_to_breakpoint, schedule_path_for,
    ExploreLimits, Manipulation, MatchSchedule, Recording, ReplayError, RunDescriptor, ScheduleFileError,
};
use madpg::runtime::{register_builtin_programs, RunError};

use crate::canonical;
use crate::views::{outputs, ExploreView, HaltedView, OutputView};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DEADLOCK: i32 = 2;
pub const EXIT_MALFORMED: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "madd", version, about = "Record, analyze and replay message-passing programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a built-in program; writes the trace and its match schedule
    Run(RunArgs),
    /// Report communication errors, wildcard receives, timeline repair and arrays
    Analyze(AnalyzeArgs),
    /// Racing messages at a wildcard receive
    Races(RacesArgs),
    /// Minimal consistent cut containing an event, optionally replayed to
    Breakpoint(BreakpointArgs),
    /// Re-execute a match schedule, optionally forcing one receive
    Replay(ReplayArgs),
    /// Enumerate every execution reachable by varying wildcard matches
    Explore(ExploreArgs),
    /// Serve the JSON session API
    Serve(ServeArgs),
    /// List the built-in programs
    Programs,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Built-in program name
    pub program: String,
    /// Number of processes
    #[arg(long)]
    pub np: usize,
    /// Seed of the scheduling policy
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Program input, `key=value` (repeatable)
    #[arg(long = "input", value_name = "KEY=VALUE")]
    pub inputs: Vec<String>,
    /// Clock offset of one process, `rank=ticks` (repeatable)
    #[arg(long = "skew", value_name = "RANK=TICKS", allow_hyphen_values = true)]
    pub skews: Vec<String>,
    /// Monitor overhead per event, in ticks
    #[arg(long, default_value_t = 0)]
    pub overhead: i64,
    /// Record PROC_START/PROC_END events
    #[arg(long)]
    pub lifecycle: bool,
    /// Trace file to write; the schedule goes next to it
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
}

#[derive(Args, Debug)]
pub struct TraceInput {
    /// Trace file
    pub trace: PathBuf,
    /// Match schedule (default: the file next to the trace, if present)
    #[arg(long)]
    pub schedule: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: TraceInput,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// Minimal message latency for timeline repair
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: i64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Hb,
    Exact,
}

#[derive(Args, Debug)]
pub struct RacesArgs {
    #[command(flatten)]
    pub input: TraceInput,
    /// Wildcard receive, `P:K`
    #[arg(long)]
    pub event: EventRef,
    /// Race-set method (default: exact when a schedule is available)
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Args, Debug)]
pub struct BreakpointArgs {
    #[command(flatten)]
    pub input: TraceInput,
    /// Anchor event, `P:K`
    #[arg(long)]
    pub event: EventRef,
    /// Also replay the schedule up to the cut and report the halted state
    #[arg(long)]
    pub halt: bool,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Match schedule file
    pub schedule: PathBuf,
    /// Manipulation, `P:K=SENDER:SEQ`
    #[arg(long)]
    pub force: Option<String>,
    /// Seed of the policy that continues after a manipulation
    #[arg(long, default_value_t = 1)]
    pub suffix_seed: u64,
    /// Write the resulting trace (and its schedule) here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExploreArgs {
    /// Trace whose program, world size and inputs are explored
    pub trace: PathBuf,
    #[arg(long, default_value_t = ExploreLimits::default().max_executions)]
    pub max_executions: usize,
    #[arg(long, default_value_t = ExploreLimits::default().max_depth)]
    pub max_depth: usize,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 7878)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Trace to open as the first session (default: reload MADPG_DATA_DIR)
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

/// A command failure with its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Malformed(String),
    #[error("{0}")]
    Deadlock(String),
    #[error("{0}")]
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Deadlock(_) => EXIT_DEADLOCK,
            CliError::Malformed(_) => EXIT_MALFORMED,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::Io(_) => CliError::Usage(format!("cannot read trace: {e}")),
            TraceError::Format { .. } => CliError::Malformed(format!("malformed trace: {e}")),
        }
    }
}

impl From<ScheduleFileError> for CliError {
    fn from(e: ScheduleFileError) -> Self {
        CliError::Malformed(format!("bad schedule file: {e}"))
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Deadlock { ref blocked } => {
                let ranks: Vec<String> = blocked.iter().map(ToString::to_string).collect();
                CliError::Deadlock(format!(
                    "deadlock: ranks {} are blocked in receives with no deliverable message",
                    ranks.join(", ")
                ))
            }
            RunError::ScheduleInfeasible { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<ReplayError> for CliError {
    fn from(e: ReplayError) -> Self {
        match e {
            ReplayError::Run(r) => r.into(),
            ReplayError::InvalidManipulation { .. } => CliError::Infeasible(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Replay(_) => CliError::Infeasible(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let CliError::Usage(_) = e {
                let _ = writeln!(err, "usage: madd <COMMAND> [OPTIONS]; see `madd --help`");
            }
            e.exit_code()
        }
    }
}

fn print_json<T: Serialize>(out: &mut dyn Write, v: &T) -> Result<(), CliError> {
    writeln!(out, "{}", canonical::to_string_pretty(v)).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Run(a) => cmd_run(a, out, err),
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Races(a) => cmd_races(a, out),
        Command::Breakpoint(a) => cmd_breakpoint(a, out),
        Command::Replay(a) => cmd_replay(a, out),
        Command::Explore(a) => cmd_explore(a, out),
        Command::Serve(a) => crate::service::serve_blocking(a, err),
        Command::Programs => {
            let list: Vec<_> = register_builtin_programs().iter().map(|d| d.info()).collect();
            print_json(out, &list)
        }
    }
}

fn split_pair<'a>(raw: &'a str, what: &str) -> Result<(&'a str, &'a str), CliError> {
    raw.split_once('=')
        .ok_or_else(|| CliError::Usage(format!("{what} `{raw}` is not of the form left=right")))
}

#[derive(Serialize)]
struct RunSummary {
    program: String,
    world_size: usize,
    origin: String,
    events: usize,
    trace: PathBuf,
    schedule: PathBuf,
    outputs: Vec<OutputView>,
}

fn cmd_run(a: RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let mut spec = RunDescriptor::new(&a.program, a.np).lifecycle(a.lifecycle);
    for raw in &a.inputs {
        let (k, v) = split_pair(raw, "input")?;
        spec = spec.input(k, v);
    }
    if a.overhead < 0 {
        return Err(CliError::Usage("--overhead must be >= 0".into()));
    }
    let mut model = OverheadModel::new(a.overhead);
    for raw in &a.skews {
        let (rank, ticks) = split_pair(raw, "skew")?;
        let rank: usize = rank.parse().map_err(|_| CliError::Usage(format!("bad rank in skew `{raw}`")))?;
        let ticks: i64 = ticks.parse().map_err(|_| CliError::Usage(format!("bad offset in skew `{raw}`")))?;
        if rank >= a.np {
            return Err(CliError::Usage(format!("skew for rank {rank} but --np is {}", a.np)));
        }
        model = model.with_offset(rank, ticks);
    }
    spec = spec.overhead(model);
    match record_or_partial(&spec, a.seed) {
        Ok(rec) => {
            let schedule = write_recording(&rec, &a.out)?;
            print_json(
                out,
                &RunSummary {
                    program: a.program,
                    world_size: a.np,
                    origin: rec.schedule.meta.origin.clone(),
                    events: rec.trace.len(),
                    trace: a.out,
                    schedule,
                    outputs: outputs(&rec.outputs),
                },
            )
        }
        Err(failed) => {
            let (e, partial) = *failed;
            if matches!(e, ReplayError::Run(RunError::Deadlock { .. })) {
                write_trace(&partial, &a.out).map_err(|e| CliError::Usage(e.to_string()))?;
                let _ = writeln!(err, "partial trace written to {}", a.out.display());
            }
            Err(e.into())
        }
    }
}

fn write_recording(rec: &Recording, path: &Path) -> Result<PathBuf, CliError> {
    write_trace(&rec.trace, path).map_err(|e| CliError::Usage(e.to_string()))?;
    let schedule = schedule_path_for(path);
    rec.schedule.write(&schedule).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(schedule)
}

struct Loaded {
    graph: EventGraph,
    schedule: Option<MatchSchedule>,
}

fn load(input: &TraceInput) -> Result<Loaded, CliError> {
    let trace: Trace = read_trace(&input.trace)?;
    let graph = build_graph(&trace).map_err(|e| CliError::Malformed(format!("malformed trace: {e}")))?;
    let schedule = match &input.schedule {
        Some(p) => Some(MatchSchedule::read(p)?),
        None => {
            let sibling = schedule_path_for(&input.trace);
            if sibling.exists() {
                Some(MatchSchedule::read(sibling)?)
            } else {
                None
            }
        }
    };
    Ok(Loaded { graph, schedule })
}

fn oracle(schedule: &Option<MatchSchedule>) -> Option<&dyn RaceOracle> {
    schedule.as_ref().map(|s| s as &dyn RaceOracle)
}

fn cmd_analyze(a: AnalyzeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = load(&a.input)?;
    let report = analyze(&loaded.graph, oracle(&loaded.schedule), a.epsilon)?;
    match a.format {
        Format::Json => print_json(out, &report),
        Format::Table => write!(out, "{}", render_table(&report)).map_err(|e| CliError::Usage(e.to_string())),
    }
}

/// Human-readable form of an analysis report.
pub fn render_table(r: &AnalysisReport) -> String {
    let mut s = format!(
        "program {} on {} processes, {} events\n",
        r.program, r.world_size, r.event_count
    );
    s.push_str(&format!("findings: {}\n", r.findings.len()));
    for f in &r.findings {
        let events: Vec<String> = f.events.iter().map(ToString::to_string).collect();
        let kind = serde_json::to_value(f.kind).unwrap();
        s.push_str(&format!(
            "  {:<16} {:<12} {}\n",
            kind.as_str().unwrap_or("?"),
            events.join(","),
            f.detail
        ));
    }
    s.push_str(&format!("wildcard receives: {}\n", r.wildcard_receives.len()));
    for w in &r.wildcard_receives {
        s.push_str(&format!(
            "  {:<8} observed {:<8} candidates {}\n",
            w.event.to_string(),
            w.observed.to_string(),
            w.candidate_count
        ));
    }
    let t = &r.corrected_timeline;
    s.push_str(&format!(
        "timeline: epsilon {}, raw violations {}, corrected violations {}, max repair shift {}, span {}..{}\n",
        t.epsilon, t.raw_violations, t.corrected_violations, t.max_repair_shift, t.corrected_span.0, t.corrected_span.1
    ));
    if r.array_collections.is_empty() {
        s.push_str("arrays: none\n");
    } else {
        s.push_str(&format!("arrays: {}\n", r.array_collections.join(", ")));
    }
    s
}

fn cmd_races(a: RacesArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = load(&a.input)?;
    let mode = match (a.mode, &loaded.schedule) {
        (Some(ModeArg::Hb), _) | (None, None) => RaceMode::HbFilter,
        (Some(ModeArg::Exact), _) | (None, Some(_)) => RaceMode::ExactReplay,
    };
    let report = racing_messages(&loaded.graph, a.event, mode, oracle(&loaded.schedule))?;
    print_json(out, &report)
}

#[derive(Serialize)]
struct BreakpointOutput {
    cut: madpg::analysis::BreakpointCut,
    halted: Option<HaltedView>,
}

fn cmd_breakpoint(a: BreakpointArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = load(&a.input)?;
    let cut = compute_breakpoint(&loaded.graph, a.event)?;
    let halted = if a.halt {
        let schedule = loaded
            .schedule
            .as_ref()
            .ok_or_else(|| CliError::Usage("--halt needs the trace's match schedule".into()))?;
        Some(HaltedView::from(&run_to_breakpoint(schedule, &cut)?))
    } else {
        None
    };
    print_json(out, &BreakpointOutput { cut, halted })
}

/// Parses `P:K=SENDER:SEQ`.
pub fn parse_force(raw: &str) -> Result<Manipulation, CliError> {
    let (at, force) = split_pair(raw, "force")?;
    let at: EventRef = at.parse().map_err(|e| CliError::Usage(format!("bad event in --force: {e}")))?;
    let force: MessageId = force.parse().map_err(|e| CliError::Usage(format!("bad message in --force: {e}")))?;
    Ok(Manipulation { at, force })
}

#[derive(Serialize)]
struct ReplayOutput {
    origin: String,
    events: usize,
    decisions: usize,
    outputs: Vec<OutputView>,
    trace: Option<PathBuf>,
    schedule: Option<PathBuf>,
}

fn cmd_replay(a: ReplayArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let base = MatchSchedule::read(&a.schedule)?;
    let rec = match &a.force {
        Some(raw) => manipulate_and_replay(&base, parse_force(raw)?, a.suffix_seed)?,
        None => replay(&base)?,
    };
    let (trace, schedule) = match &a.out {
        Some(path) => (Some(path.clone()), Some(write_recording(&rec, path)?)),
        None => (None, None),
    };
    print_json(
        out,
        &ReplayOutput {
            origin: rec.schedule.meta.origin.clone(),
            events: rec.trace.len(),
            decisions: rec.schedule.decisions.len(),
            outputs: outputs(&rec.outputs),
            trace,
            schedule,
        },
    )
}

fn cmd_explore(a: ExploreArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let trace = read_trace(&a.trace)?;
    let initial = MatchSchedule {
        meta: RunDescriptor::from_meta(&trace.meta),
        decisions: Vec::new(),
    };
    let limits = ExploreLimits {
        max_executions: a.max_executions,
        max_depth: a.max_depth,
    };
    let set = explore_all(&initial, limits)?;
    print_json(out, &ExploreView::from(&set))
}

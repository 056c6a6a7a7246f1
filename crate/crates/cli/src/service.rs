//! HTTP session service. A session is one trace with its graph, optional
//! match schedule and cached analyses; manipulations create child sessions
//! so earlier executions stay available.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use madpg::analysis::{
    compute_breakpoint, detect_errors, event_info, find_wildcard_receives, racing_messages, AnalysisError,
    BreakpointCut, Finding, InfoRecord, RaceMode, RaceOracle, RaceReport,
};
use madpg::array::{assemble, collection_snapshots, collections, heat_diagram, mapping_view, ArrayError};
use madpg::graph::{build_graph, EventGraph, GraphError};
use madpg::ids::{EventRef, MessageId};
use madpg::monitor::{read_trace, trace_to_string, write_trace, Event, Snapshot, Trace};
use madpg::replay::{
    explore_all, manipulate_and_replay, record, run_to_breakpoint, schedule_path_for, ExecutionSet, ExploreLimits,
    Manipulation, MatchSchedule, ReplayError, RunDescriptor,
};
use madpg::runtime::RunError;

use crate::canonical;
use crate::commands::{CliError, ServeArgs};
use crate::views::{outputs, snapshots_for, EdgesView, ExploreView, HaltedView, OutputView};

/// Environment variable naming the directory where sessions persist.
pub const DATA_DIR_ENV: &str = "MADPG_DATA_DIR";

pub struct Session {
    pub id: String,
    pub graph: EventGraph,
    pub schedule: Option<MatchSchedule>,
    pub parent: Option<String>,
    pub manipulation: Option<Manipulation>,
    pub outputs: Option<Vec<Vec<u8>>>,
    findings: Vec<Finding>,
    races: Mutex<HashMap<(EventRef, RaceMode), RaceReport>>,
    explored: Mutex<Option<Arc<ExecutionSet>>>,
    /// Held for the duration of a replay (manipulate or explore), so at most
    /// one is in flight per session while readers proceed.
    writer: Mutex<()>,
}

impl Session {
    pub fn new(id: String, trace: Trace, schedule: Option<MatchSchedule>) -> Result<Session, ApiError> {
        let graph = build_graph(&trace).map_err(|e| ApiError::malformed(e.to_string()))?;
        let findings = detect_errors(&graph);
        Ok(Session {
            id,
            graph,
            schedule,
            parent: None,
            manipulation: None,
            outputs: None,
            findings,
            races: Mutex::new(HashMap::new()),
            explored: Mutex::new(None),
            writer: Mutex::new(()),
        })
    }

    pub fn trace(&self) -> &Trace {
        &self.graph.trace
    }

    fn oracle(&self) -> Option<&dyn RaceOracle> {
        self.schedule.as_ref().map(|s| s as &dyn RaceOracle)
    }

    fn default_mode(&self) -> RaceMode {
        if self.schedule.is_some() {
            RaceMode::ExactReplay
        } else {
            RaceMode::HbFilter
        }
    }

    fn races(&self, recv: EventRef, mode: RaceMode) -> Result<RaceReport, ApiError> {
        if let Some(r) = self.races.lock().unwrap().get(&(recv, mode)) {
            return Ok(r.clone());
        }
        self.graph.event(recv).map_err(ApiError::from)?;
        let report = racing_messages(&self.graph, recv, mode, self.oracle())?;
        self.races.lock().unwrap().insert((recv, mode), report.clone());
        Ok(report)
    }

    fn summary(&self) -> SessionSummary {
        SessionSummary {
            id: self.id.clone(),
            program: self.trace().meta.program.clone(),
            origin: self.trace().meta.seed_or_schedule_ref.clone(),
            parent: self.parent.clone(),
            manipulation: self.manipulation,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SessionSummary {
    pub id: String,
    pub program: String,
    pub origin: String,
    pub parent: Option<String>,
    pub manipulation: Option<Manipulation>,
}

#[derive(Default)]
struct Registry {
    sessions: HashMap<String, Arc<Session>>,
    history: Vec<String>,
    active: Option<String>,
    next_id: usize,
}

/// Shared service state.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Mutex<Registry>>,
    data_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(data_dir: Option<PathBuf>) -> AppState {
        AppState {
            inner: Arc::new(Mutex::new(Registry::default())),
            data_dir,
        }
    }

    /// Opens a trace file; its sibling schedule is loaded when present.
    pub fn open_trace(&self, path: &Path) -> Result<Arc<Session>, ApiError> {
        let trace = read_trace(path).map_err(|e| ApiError::malformed(e.to_string()))?;
        let sibling = schedule_path_for(path);
        let schedule = if sibling.exists() {
            Some(MatchSchedule::read(&sibling).map_err(|e| ApiError::malformed(e.to_string()))?)
        } else {
            None
        };
        self.insert(|id| Session::new(id, trace, schedule))
    }

    /// Registers a new session, makes it active and persists it.
    pub fn insert(&self, make: impl FnOnce(String) -> Result<Session, ApiError>) -> Result<Arc<Session>, ApiError> {
        let id = {
            let mut reg = self.inner.lock().unwrap();
            let id = format!("s{}", reg.next_id);
            reg.next_id += 1;
            id
        };
        let session = Arc::new(make(id.clone())?);
        self.persist(&session)?;
        let mut reg = self.inner.lock().unwrap();
        reg.sessions.insert(id.clone(), session.clone());
        reg.history.push(id.clone());
        reg.active = Some(id);
        drop(reg);
        self.persist_history()?;
        Ok(session)
    }

    /// The named session, or the active one.
    pub fn session(&self, id: Option<&str>) -> Result<Arc<Session>, ApiError> {
        let reg = self.inner.lock().unwrap();
        let id = match id {
            Some(id) => id.to_string(),
            None => reg
                .active
                .clone()
                .ok_or_else(|| ApiError::not_found("no session is open"))?,
        };
        reg.sessions
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))
    }

    fn persist(&self, s: &Session) -> Result<(), ApiError> {
        let Some(dir) = &self.data_dir else { return Ok(()) };
        let path = dir.join(format!("{}.jsonl", s.id));
        write_trace(s.trace(), &path).map_err(|e| ApiError::internal(e.to_string()))?;
        if let Some(schedule) = &s.schedule {
            schedule
                .write(schedule_path_for(&path))
                .map_err(|e| ApiError::internal(e.to_string()))?;
        }
        Ok(())
    }

    fn persist_history(&self) -> Result<(), ApiError> {
        let Some(dir) = &self.data_dir else { return Ok(()) };
        let reg = self.inner.lock().unwrap();
        let history: Vec<SessionSummary> = reg.history.iter().map(|id| reg.sessions[id].summary()).collect();
        drop(reg);
        std::fs::write(dir.join("history.json"), canonical::to_string_pretty(&history))
            .map_err(|e| ApiError::internal(e.to_string()))
    }

    /// Reopens the sessions listed in the data directory's history, keeping
    /// their ids and lineage.
    pub fn reload(&self) -> Result<usize, ApiError> {
        let Some(dir) = self.data_dir.clone() else { return Ok(0) };
        let Ok(text) = std::fs::read_to_string(dir.join("history.json")) else { return Ok(0) };
        let history: Vec<SessionSummary> =
            serde_json::from_str(&text).map_err(|e| ApiError::malformed(format!("history.json: {e}")))?;
        let mut reg = self.inner.lock().unwrap();
        for entry in &history {
            let path = dir.join(format!("{}.jsonl", entry.id));
            let trace = read_trace(&path).map_err(|e| ApiError::malformed(e.to_string()))?;
            let sched_path = schedule_path_for(&path);
            let schedule = if sched_path.exists() {
                Some(MatchSchedule::read(&sched_path).map_err(|e| ApiError::malformed(e.to_string()))?)
            } else {
                None
            };
            let mut s = Session::new(entry.id.clone(), trace, schedule)?;
            s.parent = entry.parent.clone();
            s.manipulation = entry.manipulation;
            if let Some(n) = entry.id.strip_prefix('s').and_then(|n| n.parse::<usize>().ok()) {
                reg.next_id = reg.next_id.max(n + 1);
            }
            reg.sessions.insert(entry.id.clone(), Arc::new(s));
            reg.history.push(entry.id.clone());
            reg.active = Some(entry.id.clone());
        }
        Ok(history.len())
    }
}

/// Error response: `{"error": kind, "message": ...}` plus the valid
/// candidates when a manipulation is rejected.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: &'static str,
    pub message: String,
    pub candidates: Option<Vec<MessageId>>,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            kind,
            message: message.into(),
            candidates: None,
        }
    }
    fn malformed(m: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "malformed", m)
    }
    fn bad_request(m: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", m)
    }
    fn not_found(m: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", m)
    }
    fn internal(m: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", m)
    }
}

impl From<GraphError> for ApiError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::UnknownEvent(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_event", e.to_string()),
            other => ApiError::malformed(other.to_string()),
        }
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Graph(g) => g.into(),
            AnalysisError::NotWildcard(_) => ApiError::new(StatusCode::BAD_REQUEST, "not_wildcard", e.to_string()),
            AnalysisError::ReplayUnavailable => {
                ApiError::new(StatusCode::CONFLICT, "replay_unavailable", e.to_string())
            }
            AnalysisError::Replay(_) => ApiError::new(StatusCode::CONFLICT, "schedule_infeasible", e.to_string()),
        }
    }
}

impl From<ReplayError> for ApiError {
    fn from(e: ReplayError) -> Self {
        match e {
            ReplayError::InvalidManipulation { ref candidates, .. } => {
                let mut err = ApiError::new(StatusCode::CONFLICT, "invalid_manipulation", e.to_string());
                err.candidates = Some(candidates.clone());
                err
            }
            ReplayError::NotWildcard(_) => ApiError::new(StatusCode::BAD_REQUEST, "not_wildcard", e.to_string()),
            ReplayError::UnknownEvent(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_event", e.to_string()),
            ReplayError::Run(RunError::Deadlock { .. }) => {
                ApiError::new(StatusCode::CONFLICT, "deadlock", e.to_string())
            }
            ReplayError::Run(RunError::UnknownProgram(_)) | ReplayError::Run(RunError::InvalidWorldSize { .. }) => {
                ApiError::new(StatusCode::CONFLICT, "replay_unavailable", e.to_string())
            }
            ReplayError::Run(_) => ApiError::new(StatusCode::CONFLICT, "schedule_infeasible", e.to_string()),
        }
    }
}

impl From<ArrayError> for ApiError {
    fn from(e: ArrayError) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "array", e.to_string())
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    candidates: Option<&'a Vec<MessageId>>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.kind,
            message: &self.message,
            candidates: self.candidates.as_ref(),
        };
        (self.status, json_text(&body)).into_response()
    }
}

fn json_text<T: Serialize>(v: &T) -> ([(header::HeaderName, &'static str); 1], String) {
    ([(header::CONTENT_TYPE, "application/json")], canonical::to_string(v))
}

type ApiResult = Result<Response, ApiError>;

fn ok<T: Serialize>(v: &T) -> ApiResult {
    Ok(json_text(v).into_response())
}

fn parse_event(raw: &str) -> Result<EventRef, ApiError> {
    raw.parse().map_err(|e| ApiError::bad_request(format!("bad event `{raw}`: {e}")))
}

fn parse_message(raw: &str) -> Result<MessageId, ApiError> {
    raw.parse().map_err(|e| ApiError::bad_request(format!("bad message `{raw}`: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/session", get(get_session))
        .route("/api/sessions", get(get_sessions).post(post_sessions))
        .route("/api/events", get(get_events))
        .route("/api/events/{event}", get(get_event))
        .route("/api/graph/edges", get(get_edges))
        .route("/api/findings", get(get_findings))
        .route("/api/races", get(get_races))
        .route("/api/breakpoint", post(post_breakpoint))
        .route("/api/manipulate", post(post_manipulate))
        .route("/api/explore", post(post_explore))
        .route("/api/executions/{index}/trace", get(get_execution_trace))
        .route("/api/array/{collection}/heat", get(get_heat))
        .route("/api/array/{collection}/mapping", get(get_mapping))
        .with_state(state)
}

#[derive(Deserialize)]
struct SessionQuery {
    session: Option<String>,
}

#[derive(Serialize)]
struct SessionView {
    id: String,
    program: String,
    world_size: usize,
    origin: String,
    inputs: BTreeMap<String, String>,
    event_count: usize,
    extents: Vec<usize>,
    has_schedule: bool,
    parent: Option<String>,
    manipulation: Option<Manipulation>,
    outputs: Option<Vec<OutputView>>,
    wildcard_receives: Vec<EventRef>,
    array_collections: Vec<String>,
}

fn session_view(s: &Session) -> SessionView {
    let meta = &s.trace().meta;
    SessionView {
        id: s.id.clone(),
        program: meta.program.clone(),
        world_size: meta.world_size,
        origin: meta.seed_or_schedule_ref.clone(),
        inputs: meta.inputs.clone(),
        event_count: s.trace().len(),
        extents: s.graph.extents(),
        has_schedule: s.schedule.is_some(),
        parent: s.parent.clone(),
        manipulation: s.manipulation,
        outputs: s.outputs.as_deref().map(outputs),
        wildcard_receives: find_wildcard_receives(&s.graph),
        array_collections: collections(s.trace()).into_iter().collect(),
    }
}

async fn get_session(State(st): State<AppState>, Query(q): Query<SessionQuery>) -> ApiResult {
    ok(&session_view(&*st.session(q.session.as_deref())?))
}

#[derive(Serialize)]
struct SessionsView {
    active: Option<String>,
    history: Vec<SessionSummary>,
}

async fn get_sessions(State(st): State<AppState>) -> ApiResult {
    let reg = st.inner.lock().unwrap();
    let view = SessionsView {
        active: reg.active.clone(),
        history: reg.history.iter().map(|id| reg.sessions[id].summary()).collect(),
    };
    drop(reg);
    ok(&view)
}

/// Opens a session by running a built-in program or by reading a trace file.
#[derive(Deserialize)]
struct OpenRequest {
    program: Option<String>,
    np: Option<usize>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    inputs: BTreeMap<String, String>,
    trace: Option<PathBuf>,
}

async fn post_sessions(State(st): State<AppState>, Json(req): Json<OpenRequest>) -> ApiResult {
    let session = blocking(move || match (req.trace, req.program) {
        (Some(path), None) => st.open_trace(&path),
        (None, Some(program)) => {
            let np = req.np.ok_or_else(|| ApiError::bad_request("`np` is required with `program`"))?;
            let mut spec = RunDescriptor::new(&program, np);
            for (k, v) in &req.inputs {
                spec = spec.input(k, v);
            }
            let rec = record(&spec, req.seed)?;
            st.insert(|id| {
                let mut s = Session::new(id, rec.trace, Some(rec.schedule))?;
                s.outputs = Some(rec.outputs);
                Ok(s)
            })
        }
        _ => Err(ApiError::bad_request("give exactly one of `trace` or `program`")),
    })
    .await?;
    ok(&session_view(&session))
}

#[derive(Deserialize)]
struct EventsQuery {
    session: Option<String>,
    process: Option<usize>,
    #[serde(default)]
    from: usize,
    limit: Option<usize>,
}

#[derive(Serialize)]
struct EventsPage<'a> {
    total: usize,
    from: usize,
    events: Vec<&'a Event>,
    snapshots: BTreeMap<String, Snapshot>,
}

pub const DEFAULT_PAGE: usize = 500;

async fn get_events(State(st): State<AppState>, Query(q): Query<EventsQuery>) -> ApiResult {
    let s = st.session(q.session.as_deref())?;
    let all: Vec<&Event> = match q.process {
        Some(p) if p >= s.graph.world_size() => {
            return Err(ApiError::not_found(format!("no process {p} in a world of {}", s.graph.world_size())))
        }
        Some(p) => s.trace().events[p].iter().collect(),
        None => s.graph.topo_order.iter().map(|&r| s.trace().event(r).unwrap()).collect(),
    };
    let limit = q.limit.unwrap_or(DEFAULT_PAGE);
    let events: Vec<&Event> = all.iter().skip(q.from).take(limit).copied().collect();
    let snapshots = snapshots_for(s.trace(), events.iter().copied());
    ok(&EventsPage {
        total: all.len(),
        from: q.from,
        events,
        snapshots,
    })
}

async fn get_event(
    State(st): State<AppState>,
    UrlPath(event): UrlPath<String>,
    Query(q): Query<SessionQuery>,
) -> ApiResult {
    let s = st.session(q.session.as_deref())?;
    let e = parse_event(&event)?;
    let info: InfoRecord = blocking(move || Ok(event_info(&s.graph, e, s.oracle())?)).await?;
    ok(&info)
}

async fn get_edges(State(st): State<AppState>, Query(q): Query<SessionQuery>) -> ApiResult {
    ok(&EdgesView::of(&st.session(q.session.as_deref())?.graph))
}

async fn get_findings(State(st): State<AppState>, Query(q): Query<SessionQuery>) -> ApiResult {
    ok(&st.session(q.session.as_deref())?.findings)
}

#[derive(Deserialize)]
struct RacesQuery {
    session: Option<String>,
    event: String,
    mode: Option<String>,
}

async fn get_races(State(st): State<AppState>, Query(q): Query<RacesQuery>) -> ApiResult {
    let s = st.session(q.session.as_deref())?;
    let recv = parse_event(&q.event)?;
    let mode = match &q.mode {
        Some(m) => m.parse::<RaceMode>().map_err(ApiError::bad_request)?,
        None => s.default_mode(),
    };
    let report = blocking(move || s.races(recv, mode)).await?;
    ok(&report)
}

#[derive(Deserialize)]
struct BreakpointRequest {
    session: Option<String>,
    event: String,
    #[serde(default)]
    halt: bool,
}

#[derive(Serialize)]
struct BreakpointView {
    cut: BreakpointCut,
    halted: Option<HaltedView>,
}

async fn post_breakpoint(State(st): State<AppState>, Json(req): Json<BreakpointRequest>) -> ApiResult {
    let s = st.session(req.session.as_deref())?;
    let anchor = parse_event(&req.event)?;
    let view = blocking(move || {
        let cut = compute_breakpoint(&s.graph, anchor)?;
        let halted = if req.halt {
            let schedule = s.schedule.as_ref().ok_or(AnalysisError::ReplayUnavailable)?;
            Some(HaltedView::from(&run_to_breakpoint(schedule, &cut)?))
        } else {
            None
        };
        Ok(BreakpointView { cut, halted })
    })
    .await?;
    ok(&view)
}

#[derive(Deserialize)]
struct ManipulateRequest {
    session: Option<String>,
    event: String,
    force: String,
    #[serde(default)]
    suffix_seed: u64,
}

async fn post_manipulate(State(st): State<AppState>, Json(req): Json<ManipulateRequest>) -> ApiResult {
    let parent = st.session(req.session.as_deref())?;
    let m = Manipulation {
        at: parse_event(&req.event)?,
        force: parse_message(&req.force)?,
    };
    let child = blocking(move || {
        let _writer = parent.writer.lock().unwrap();
        let schedule = parent.schedule.as_ref().ok_or(AnalysisError::ReplayUnavailable)?;
        let rec = manipulate_and_replay(schedule, m, req.suffix_seed)?;
        st.insert(|id| {
            let mut s = Session::new(id, rec.trace, Some(rec.schedule))?;
            s.parent = Some(parent.id.clone());
            s.manipulation = Some(m);
            s.outputs = Some(rec.outputs);
            Ok(s)
        })
    })
    .await?;
    ok(&session_view(&child))
}

#[derive(Deserialize)]
struct ExploreRequest {
    session: Option<String>,
    max_executions: Option<usize>,
    max_depth: Option<usize>,
}

async fn post_explore(State(st): State<AppState>, Json(req): Json<ExploreRequest>) -> ApiResult {
    let s = st.session(req.session.as_deref())?;
    let defaults = ExploreLimits::default();
    let limits = ExploreLimits {
        max_executions: req.max_executions.unwrap_or(defaults.max_executions),
        max_depth: req.max_depth.unwrap_or(defaults.max_depth),
    };
    let set = blocking(move || {
        let _writer = s.writer.lock().unwrap();
        let initial = MatchSchedule {
            meta: RunDescriptor::from_meta(&s.trace().meta),
            decisions: Vec::new(),
        };
        let set = Arc::new(explore_all(&initial, limits)?);
        *s.explored.lock().unwrap() = Some(set.clone());
        Ok(set)
    })
    .await?;
    ok(&ExploreView::from(set.as_ref()))
}

async fn get_execution_trace(
    State(st): State<AppState>,
    UrlPath(index): UrlPath<usize>,
    Query(q): Query<SessionQuery>,
) -> ApiResult {
    let s = st.session(q.session.as_deref())?;
    let set = s
        .explored
        .lock()
        .unwrap()
        .clone()
        .ok_or_else(|| ApiError::not_found("session has not been explored"))?;
    let ex = set
        .executions
        .get(index)
        .ok_or_else(|| ApiError::not_found(format!("no execution {index}")))?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], trace_to_string(&ex.trace)).into_response())
}

#[derive(Deserialize)]
struct HeatQuery {
    session: Option<String>,
    #[serde(default)]
    point: usize,
}

async fn get_heat(
    State(st): State<AppState>,
    UrlPath(collection): UrlPath<String>,
    Query(q): Query<HeatQuery>,
) -> ApiResult {
    let s = st.session(q.session.as_deref())?;
    let groups = collection_snapshots(s.trace(), &collection);
    if groups.is_empty() {
        return Err(ApiError::not_found(format!("no array collection `{collection}`")));
    }
    let group = groups
        .get(q.point)
        .ok_or_else(|| ApiError::not_found(format!("collection has {} trace points", groups.len())))?;
    let view = assemble(group)?;
    ok(&heat_diagram(&view)?)
}

async fn get_mapping(
    State(st): State<AppState>,
    UrlPath(collection): UrlPath<String>,
    Query(q): Query<SessionQuery>,
) -> ApiResult {
    let s = st.session(q.session.as_deref())?;
    let groups = collection_snapshots(s.trace(), &collection);
    let first = groups
        .first()
        .and_then(|g| g.first())
        .ok_or_else(|| ApiError::not_found(format!("no array collection `{collection}`")))?;
    ok(&mapping_view(&first.info, s.graph.world_size())?)
}

/// Runs the service until the process is stopped.
pub fn serve_blocking(args: ServeArgs, err: &mut dyn Write) -> Result<(), CliError> {
    let data_dir = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from);
    if let Some(dir) = &data_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("{}: {e}", dir.display())))?;
    }
    let state = AppState::new(data_dir);
    match &args.trace {
        Some(path) => {
            state.open_trace(path).map_err(|e| CliError::Malformed(e.message))?;
        }
        None => {
            state.reload().map_err(|e| CliError::Malformed(e.message))?;
        }
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Usage(e.to_string()))?;
    runtime.block_on(async {
        let addr = format!("{}:{}", args.host, args.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::Usage(format!("cannot bind {addr}: {e}")))?;
        let _ = writeln!(err, "listening on http://{addr}");
        axum::serve(listener, router(state))
            .await
            .map_err(|e| CliError::Usage(e.to_string()))
    })
}

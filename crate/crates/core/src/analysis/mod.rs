//! Trace analysis over an [`EventGraph`]: communication-error detection,
//! event details, minimal consistent-cut breakpoints and racing messages at
//! wildcard receives.

mod breakpoint;
mod findings;
mod races;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::collections;
use crate::graph::{EventGraph, GraphError, TimelineSummary, VectorClock};
use crate::ids::{EventRef, MessageId, ProcessId};
use crate::monitor::{EventKind, Snapshot, SourceLoc};

pub use breakpoint::{compute_breakpoint, is_consistent_cut, BreakpointCut};
pub use findings::{detect_errors, Finding, FindingKind};
pub use races::{find_wildcard_receives, racing_messages, RaceMode, RaceOracle, RaceReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("event {0} is not a wildcard receive")]
    NotWildcard(EventRef),
    #[error("exact race analysis needs the run's match schedule")]
    ReplayUnavailable,
    #[error("replay failed: {0}")]
    Replay(String),
}

/// Everything shown in the event-info window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoRecord {
    pub event: EventRef,
    pub kind: EventKind,
    pub ts_enter: i64,
    pub ts_exit: i64,
    pub msg: Option<MessageId>,
    pub peer: Option<ProcessId>,
    pub tag: Option<u32>,
    pub length: Option<u64>,
    pub wildcard: bool,
    /// Racing candidates at a wildcard receive.
    pub candidate_count: Option<usize>,
    /// The event at the other end of the message edge, if any.
    pub partner: Option<EventRef>,
    pub source_loc: Option<SourceLoc>,
    pub vector_clock: VectorClock,
    pub snapshot: Option<Snapshot>,
}

/// Exact race sets use the oracle when one is given, otherwise the
/// happens-before filter.
pub fn event_info(
    g: &EventGraph,
    e: EventRef,
    oracle: Option<&dyn RaceOracle>,
) -> Result<InfoRecord, AnalysisError> {
    let ev = g.event(e)?;
    let candidate_count = if ev.kind == EventKind::Recv && ev.wildcard {
        let mode = if oracle.is_some() { RaceMode::ExactReplay } else { RaceMode::HbFilter };
        Some(racing_messages(g, e, mode, oracle)?.candidates.len())
    } else {
        None
    };
    let partner = match ev.kind {
        EventKind::Recv => g.send_of(e),
        EventKind::Send => g.recvs_of(e).first().copied(),
        _ => None,
    };
    Ok(InfoRecord {
        event: e,
        kind: ev.kind,
        ts_enter: ev.ts_enter,
        ts_exit: ev.ts_exit,
        msg: ev.msg,
        peer: ev.peer,
        tag: ev.tag,
        length: ev.length,
        wildcard: ev.wildcard,
        candidate_count,
        partner,
        source_loc: ev.source_loc.clone(),
        vector_clock: g.clock(e)?.clone(),
        snapshot: g.trace.snapshot_of(ev).cloned(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WildcardSummary {
    pub event: EventRef,
    pub observed: MessageId,
    pub candidate_count: usize,
    pub method: RaceMode,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub program: String,
    pub world_size: usize,
    pub event_count: usize,
    pub findings: Vec<Finding>,
    pub wildcard_receives: Vec<WildcardSummary>,
    pub corrected_timeline: TimelineSummary,
    pub array_collections: Vec<String>,
}

/// The report `analyze` prints. Deterministic for a given trace.
pub fn analyze(
    g: &EventGraph,
    oracle: Option<&dyn RaceOracle>,
    epsilon: i64,
) -> Result<AnalysisReport, AnalysisError> {
    let mode = if oracle.is_some() { RaceMode::ExactReplay } else { RaceMode::HbFilter };
    let wildcard_receives = find_wildcard_receives(g)
        .into_iter()
        .map(|r| {
            let report = racing_messages(g, r, mode, oracle)?;
            Ok(WildcardSummary {
                event: r,
                observed: report.observed,
                candidate_count: report.candidates.len(),
                method: mode,
            })
        })
        .collect::<Result<_, AnalysisError>>()?;
    Ok(AnalysisReport {
        program: g.trace.meta.program.clone(),
        world_size: g.world_size(),
        event_count: g.trace.len(),
        findings: detect_errors(g),
        wildcard_receives,
        corrected_timeline: crate::graph::summarize(g, epsilon),
        array_collections: collections(&g.trace).into_iter().collect(),
    })
}

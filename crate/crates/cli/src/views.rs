//! JSON shapes shared by the command line and the HTTP service.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use madpg::ids::{EventRef, MessageId};
use madpg::monitor::{Snapshot, Trace};
use madpg::replay::{ExecutionSet, ExecutionStatus, HaltedState};
use madpg::runtime::{Decision, RunStatus};

/// A process's output: its text when it is UTF-8, always its length.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OutputView {
    pub bytes: usize,
    pub text: Option<String>,
}

pub fn outputs(raw: &[Vec<u8>]) -> Vec<OutputView> {
    raw.iter()
        .map(|b| OutputView {
            bytes: b.len(),
            text: String::from_utf8(b.clone()).ok(),
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ExecutionView {
    pub index: usize,
    pub fingerprint: String,
    pub status: ExecutionStatus,
    pub decisions: Vec<Decision>,
    pub outputs: Vec<OutputView>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExploreView {
    pub executions: usize,
    pub truncated: bool,
    pub distinct_outputs: BTreeSet<String>,
    pub runs: Vec<ExecutionView>,
}

impl From<&ExecutionSet> for ExploreView {
    fn from(set: &ExecutionSet) -> Self {
        ExploreView {
            executions: set.executions.len(),
            truncated: set.truncated,
            distinct_outputs: set.distinct_outputs.clone(),
            runs: set
                .executions
                .iter()
                .enumerate()
                .map(|(index, e)| ExecutionView {
                    index,
                    fingerprint: e.fingerprint.clone(),
                    status: e.status.clone(),
                    decisions: e.schedule.decisions.clone(),
                    outputs: outputs(&e.outputs),
                })
                .collect(),
        }
    }
}

/// Replay state at a breakpoint, without the replayed events themselves.
#[derive(Clone, Debug, Serialize)]
pub struct HaltedView {
    pub status: RunStatus,
    pub next_event_no: Vec<u64>,
    pub pending: Vec<Vec<MessageId>>,
    /// Snapshots taken up to the halt, keyed by event.
    pub snapshots: BTreeMap<String, Snapshot>,
}

impl From<&HaltedState> for HaltedView {
    fn from(h: &HaltedState) -> Self {
        HaltedView {
            status: h.status,
            next_event_no: h.next_event_no.clone(),
            pending: h.pending.clone(),
            snapshots: h.trace.snapshots.clone(),
        }
    }
}

/// Message edges of a trace graph plus the unmatched receives.
#[derive(Clone, Debug, Serialize)]
pub struct EdgesView {
    pub messages: Vec<EdgeView>,
    pub dangling: Vec<EventRef>,
    /// Events per process; program-order edges are implied.
    pub extents: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeView {
    pub send: EventRef,
    pub recv: EventRef,
}

impl EdgesView {
    pub fn of(g: &madpg::graph::EventGraph) -> Self {
        EdgesView {
            messages: g.message_edges.iter().map(|&(send, recv)| EdgeView { send, recv }).collect(),
            dangling: g.dangling.clone(),
            extents: g.extents(),
        }
    }
}

/// Snapshots referenced by a set of events.
pub fn snapshots_for<'a>(trace: &Trace, events: impl Iterator<Item = &'a madpg::monitor::Event>) -> BTreeMap<String, Snapshot> {
    events
        .filter_map(|e| {
            let id = e.payload_ref.as_ref()?;
            Some((id.clone(), trace.snapshots.get(id)?.clone()))
        })
        .collect()
}

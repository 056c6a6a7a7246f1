//! Event recording: converts runtime callbacks into trace events, applies the
//! overhead and clock-skew model, keeps inspection snapshots and owns the
//! on-disk trace format.

mod trace_io;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::array::ArraySnapshot;
use crate::ids::{EventRef, MessageId, ProcessId};
use crate::runtime::{Monitor, RuntimeEvent};

pub use trace_io::{read_trace, trace_from_str, trace_to_string, write_trace, TraceError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Send,
    Recv,
    VarInspect,
    ArrayTrace,
    QueueInspect,
    ProcStart,
    ProcEnd,
}

impl EventKind {
    /// Communication events are generated without user intervention.
    pub fn is_automatic(self) -> bool {
        matches!(self, EventKind::Send | EventKind::Recv)
    }

    /// Inspection events exist only where the program asked for them.
    pub fn is_inspection(self) -> bool {
        matches!(
            self,
            EventKind::VarInspect | EventKind::ArrayTrace | EventKind::QueueInspect
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceLoc {
    pub file: String,
    pub line: u32,
}

/// One monitored occurrence. Field names are the trace-file schema.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub event_no: u64,
    pub process: ProcessId,
    pub kind: EventKind,
    pub ts_enter: i64,
    pub ts_exit: i64,
    #[serde(default)]
    pub msg: Option<MessageId>,
    #[serde(default)]
    pub peer: Option<ProcessId>,
    #[serde(default)]
    pub tag: Option<u32>,
    #[serde(default)]
    pub length: Option<u64>,
    #[serde(default)]
    pub wildcard: bool,
    #[serde(default)]
    pub payload_ref: Option<String>,
    #[serde(default)]
    pub source_loc: Option<SourceLoc>,
}

impl Event {
    pub fn event_ref(&self) -> EventRef {
        EventRef {
            process: self.process,
            event_no: self.event_no,
        }
    }

    /// A bare event with no communication or payload fields.
    pub fn new(process: usize, event_no: u64, kind: EventKind, ts_enter: i64, ts_exit: i64) -> Event {
        Event {
            event_no,
            process: ProcessId(process),
            kind,
            ts_enter,
            ts_exit,
            msg: None,
            peer: None,
            tag: None,
            length: None,
            wildcard: false,
            payload_ref: None,
            source_loc: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarValue {
    Int(i64),
    Float(f64),
    Bytes(Vec<u8>),
}

impl From<i64> for ScalarValue {
    fn from(v: i64) -> Self {
        ScalarValue::Int(v)
    }
}

impl From<f64> for ScalarValue {
    fn from(v: f64) -> Self {
        ScalarValue::Float(v)
    }
}

impl From<Vec<u8>> for ScalarValue {
    fn from(v: Vec<u8>) -> Self {
        ScalarValue::Bytes(v)
    }
}

impl From<&[u8]> for ScalarValue {
    fn from(v: &[u8]) -> Self {
        ScalarValue::Bytes(v.to_vec())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarSnapshot {
    pub name: String,
    pub value: ScalarValue,
}

/// Messages pending for a process, sorted by `(sender, seq)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueSnapshot {
    pub pending: Vec<MessageId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Snapshot {
    Var(VarSnapshot),
    Array(ArraySnapshot),
    Queue(QueueSnapshot),
}

/// Probe-effect model: a constant per-event monitor cost and a constant
/// clock offset per process.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverheadModel {
    pub per_event_overhead: i64,
    #[serde(default)]
    pub per_process_clock_offset: BTreeMap<ProcessId, i64>,
}

impl OverheadModel {
    pub fn new(per_event_overhead: i64) -> Self {
        OverheadModel {
            per_event_overhead,
            per_process_clock_offset: BTreeMap::new(),
        }
    }

    pub fn with_offset(mut self, process: usize, offset: i64) -> Self {
        self.per_process_clock_offset.insert(ProcessId(process), offset);
        self
    }

    pub fn offset(&self, p: ProcessId) -> i64 {
        self.per_process_clock_offset.get(&p).copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub program: String,
    pub world_size: usize,
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    pub seed_or_schedule_ref: String,
    pub overhead_model: OverheadModel,
    #[serde(default)]
    pub lifecycle_events: bool,
    /// Unix seconds; the only wall-clock field in a trace.
    pub created_at: u64,
}

/// Per-process event lists plus run metadata and inspection snapshots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub meta: TraceMeta,
    pub events: Vec<Vec<Event>>,
    pub snapshots: BTreeMap<String, Snapshot>,
}

impl Trace {
    pub fn new(meta: TraceMeta) -> Trace {
        let world = meta.world_size;
        Trace {
            meta,
            events: vec![Vec::new(); world],
            snapshots: BTreeMap::new(),
        }
    }

    pub fn world_size(&self) -> usize {
        self.meta.world_size
    }

    pub fn event(&self, r: EventRef) -> Option<&Event> {
        self.events
            .get(r.process.0)
            .and_then(|evs| evs.get(usize::try_from(r.event_no).ok()?))
    }

    /// All events in `(process, event_no)` order.
    pub fn iter(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.events.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn snapshot_of(&self, ev: &Event) -> Option<&Snapshot> {
        ev.payload_ref.as_ref().and_then(|id| self.snapshots.get(id))
    }

    /// SEND event of every message id appearing in the trace.
    pub fn sends(&self) -> HashMap<MessageId, EventRef> {
        self.iter()
            .filter(|e| e.kind == EventKind::Send)
            .filter_map(|e| Some((e.msg?, e.event_ref())))
            .collect()
    }

    /// Checks the structural invariants of a runtime-produced trace: dense
    /// numbering, communication fields present, every received message sent
    /// exactly once and every snapshot reference resolvable.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.events.len() != self.meta.world_size {
            return Err(format!(
                "{} process lists for world size {}",
                self.events.len(),
                self.meta.world_size
            ));
        }
        let mut sends: HashMap<MessageId, usize> = HashMap::new();
        for (p, evs) in self.events.iter().enumerate() {
            for (k, e) in evs.iter().enumerate() {
                if e.process.0 != p || e.event_no != k as u64 {
                    return Err(format!("event {} stored at {p}:{k}", e.event_ref()));
                }
                if e.ts_exit < e.ts_enter {
                    return Err(format!("event {} exits before it enters", e.event_ref()));
                }
                if e.kind.is_automatic()
                    && (e.msg.is_none() || e.peer.is_none() || e.tag.is_none() || e.length.is_none())
                {
                    return Err(format!("event {} lacks communication fields", e.event_ref()));
                }
                if e.kind.is_inspection() && self.snapshot_of(e).is_none() {
                    return Err(format!("event {} has no resolvable snapshot", e.event_ref()));
                }
                if e.kind == EventKind::Send {
                    *sends.entry(e.msg.unwrap()).or_default() += 1;
                }
            }
        }
        if let Some((m, _)) = sends.iter().find(|(_, &n)| n > 1) {
            return Err(format!("message {m} sent more than once"));
        }
        for e in self.iter().filter(|e| e.kind == EventKind::Recv) {
            if !sends.contains_key(&e.msg.unwrap()) {
                return Err(format!("event {} receives a message never sent", e.event_ref()));
            }
        }
        Ok(())
    }
}

/// The trace recorder installed into the runtime.
///
/// Timestamps reported for the `k`-th event of process `p` are the
/// overhead-free compute time plus `k * delta` plus the offset of `p`; the
/// overhead `delta` of the event itself is charged between enter and exit.
pub struct Recorder {
    trace: Trace,
}

impl Recorder {
    pub fn new(meta: TraceMeta) -> Recorder {
        Recorder {
            trace: Trace::new(meta),
        }
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    pub fn on_runtime_event(&mut self, raw: RuntimeEvent) -> Event {
        let p = raw.process;
        let k = self.trace.events[p.0].len() as u64;
        debug_assert_eq!(k, raw.event_no, "runtime and monitor numbering diverged");
        let model = &self.trace.meta.overhead_model;
        let delta = model.per_event_overhead;
        let ts_enter = raw.compute_enter + k as i64 * delta + model.offset(p);
        let ts_exit = ts_enter + (raw.compute_exit - raw.compute_enter) + delta;
        let payload_ref = raw.snapshot.map(|snap| {
            let id = EventRef { process: p, event_no: k }.to_string();
            self.trace.snapshots.insert(id.clone(), snap);
            id
        });
        let event = Event {
            event_no: k,
            process: p,
            kind: raw.kind,
            ts_enter,
            ts_exit,
            msg: raw.msg,
            peer: raw.peer,
            tag: raw.tag,
            length: raw.length,
            wildcard: raw.wildcard,
            payload_ref,
            source_loc: raw.source_loc,
        };
        self.trace.events[p.0].push(event.clone());
        event
    }
}

impl Monitor for Recorder {
    fn on_event(&mut self, raw: RuntimeEvent) {
        self.on_runtime_event(raw);
    }
}

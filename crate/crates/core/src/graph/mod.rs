//! Event graph: program-order and message edges over a trace, vector clocks
//! and the happens-before relation.

mod timeline;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{EventRef, MessageId, ProcessId};
use crate::monitor::{Event, EventKind, Trace};

pub use timeline::{remove_overhead, synchronize_clocks, CorrectedTimeline, TimelineSummary, DEFAULT_EPSILON};
pub(crate) use timeline::summarize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown event {0}")]
    UnknownEvent(EventRef),
    #[error("message {0} is sent more than once")]
    DuplicateSend(MessageId),
    #[error("message edges form a cycle through {0:?}")]
    Cyclic(Vec<EventRef>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VectorClock(pub Vec<u64>);

impl VectorClock {
    pub fn zero(n: usize) -> VectorClock {
        VectorClock(vec![0; n])
    }

    /// Componentwise `<=`.
    pub fn le(&self, other: &VectorClock) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn merge(&mut self, other: &VectorClock) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a = (*a).max(*b);
        }
    }
}

/// Causal order of a trace plus the message matching it is based on.
pub(crate) struct CausalOrder {
    pub order: Vec<EventRef>,
    /// recv -> send
    pub matched: HashMap<EventRef, EventRef>,
    pub dangling: Vec<EventRef>,
}

/// Topological order: events are taken process by process as soon as the
/// send a receive matches has been taken.
pub(crate) fn causal_order(trace: &Trace) -> Result<CausalOrder, GraphError> {
    let mut sends: HashMap<MessageId, EventRef> = HashMap::new();
    for e in trace.iter().filter(|e| e.kind == EventKind::Send) {
        if let Some(m) = e.msg {
            if sends.insert(m, e.event_ref()).is_some() {
                return Err(GraphError::DuplicateSend(m));
            }
        }
    }
    let mut matched = HashMap::new();
    let mut dangling = Vec::new();
    for e in trace.iter().filter(|e| e.kind == EventKind::Recv) {
        match e.msg.and_then(|m| sends.get(&m)) {
            Some(&s) => {
                matched.insert(e.event_ref(), s);
            }
            None => dangling.push(e.event_ref()),
        }
    }

    let n = trace.world_size();
    let mut next = vec![0usize; n];
    let mut done: Vec<Vec<bool>> = trace.events.iter().map(|evs| vec![false; evs.len()]).collect();
    let mut order = Vec::with_capacity(trace.len());
    loop {
        let mut progress = false;
        for p in 0..n {
            while let Some(e) = trace.events[p].get(next[p]) {
                let r = e.event_ref();
                if let Some(s) = matched.get(&r) {
                    if !done[s.process.0][s.event_no as usize] {
                        break;
                    }
                }
                done[p][next[p]] = true;
                next[p] += 1;
                order.push(r);
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
    if order.len() != trace.len() {
        let stuck = (0..n)
            .filter(|&p| next[p] < trace.events[p].len())
            .map(|p| EventRef::new(p, next[p] as u64))
            .collect();
        return Err(GraphError::Cyclic(stuck));
    }
    Ok(CausalOrder {
        order,
        matched,
        dangling,
    })
}

/// Events of a trace with program-order edges `(p,k) -> (p,k+1)`, one
/// message edge per matched receive, and a vector clock per event.
#[derive(Clone, Debug)]
pub struct EventGraph {
    pub trace: Trace,
    /// `(send, recv)` pairs in receive order `(process, event_no)`.
    pub message_edges: Vec<(EventRef, EventRef)>,
    /// Receives whose message no send in the trace produced.
    pub dangling: Vec<EventRef>,
    /// A topological order of all events.
    pub topo_order: Vec<EventRef>,
    clocks: Vec<Vec<VectorClock>>,
    send_of: HashMap<EventRef, EventRef>,
    recvs_of: HashMap<EventRef, Vec<EventRef>>,
}

pub fn build_graph(trace: &Trace) -> Result<EventGraph, GraphError> {
    let co = causal_order(trace)?;
    let n = trace.world_size();
    let mut clocks: Vec<Vec<VectorClock>> = trace.events.iter().map(|evs| Vec::with_capacity(evs.len())).collect();
    for r in &co.order {
        let p = r.process.0;
        let mut vc = clocks[p].last().cloned().unwrap_or_else(|| VectorClock::zero(n));
        if let Some(s) = co.matched.get(r) {
            let sender_vc = clocks[s.process.0][s.event_no as usize].clone();
            vc.merge(&sender_vc);
        }
        vc.0[p] = r.event_no + 1;
        clocks[p].push(vc);
    }
    let mut message_edges: Vec<(EventRef, EventRef)> = co.matched.iter().map(|(r, s)| (*s, *r)).collect();
    message_edges.sort_by_key(|(_, r)| *r);
    let mut recvs_of: HashMap<EventRef, Vec<EventRef>> = HashMap::new();
    for (s, r) in &message_edges {
        recvs_of.entry(*s).or_default().push(*r);
    }
    Ok(EventGraph {
        trace: trace.clone(),
        message_edges,
        dangling: co.dangling,
        topo_order: co.order,
        clocks,
        send_of: co.matched,
        recvs_of,
    })
}

impl EventGraph {
    pub fn event(&self, r: EventRef) -> Result<&Event, GraphError> {
        self.trace.event(r).ok_or(GraphError::UnknownEvent(r))
    }

    pub fn world_size(&self) -> usize {
        self.trace.world_size()
    }

    pub fn clock(&self, r: EventRef) -> Result<&VectorClock, GraphError> {
        self.clocks
            .get(r.process.0)
            .and_then(|c| c.get(usize::try_from(r.event_no).ok()?))
            .ok_or(GraphError::UnknownEvent(r))
    }

    /// The SEND matched by a RECV.
    pub fn send_of(&self, recv: EventRef) -> Option<EventRef> {
        self.send_of.get(&recv).copied()
    }

    /// RECVs that took the message of a SEND.
    pub fn recvs_of(&self, send: EventRef) -> &[EventRef] {
        self.recvs_of.get(&send).map(Vec::as_slice).unwrap_or(&[])
    }

    /// `a -> b`: `a != b` and `VC(a) <= VC(b)`.
    pub fn happens_before(&self, a: EventRef, b: EventRef) -> Result<bool, GraphError> {
        let (va, vb) = (self.clock(a)?, self.clock(b)?);
        Ok(a != b && va.le(vb))
    }

    /// Number of events on each process.
    pub fn extents(&self) -> Vec<usize> {
        self.trace.events.iter().map(Vec::len).collect()
    }

    pub fn process_ids(&self) -> impl Iterator<Item = ProcessId> {
        (0..self.world_size()).map(ProcessId)
    }
}

pub fn happens_before(g: &EventGraph, a: EventRef, b: EventRef) -> Result<bool, GraphError> {
    g.happens_before(a, b)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::monitor::{OverheadModel, TraceMeta};

    fn meta(n: usize) -> TraceMeta {
        TraceMeta {
            program: "hand".into(),
            world_size: n,
            inputs: BTreeMap::new(),
            seed_or_schedule_ref: "hand".into(),
            overhead_model: OverheadModel::default(),
            lifecycle_events: false,
            created_at: 0,
        }
    }

    fn comm(p: usize, k: u64, kind: EventKind, m: MessageId, peer: usize) -> Event {
        let mut e = Event::new(p, k, kind, k as i64, k as i64 + 1);
        e.msg = Some(m);
        e.peer = Some(ProcessId(peer));
        e.tag = Some(0);
        e.length = Some(1);
        e
    }

    #[test]
    fn send_recv_clocks() {
        let mut t = Trace::new(meta(2));
        let m = MessageId::new(0, 0);
        t.events[0].push(comm(0, 0, EventKind::Send, m, 1));
        t.events[1].push(comm(1, 0, EventKind::Recv, m, 0));
        let g = build_graph(&t).unwrap();
        assert_eq!(g.clock(EventRef::new(0, 0)).unwrap().0, vec![1, 0]);
        assert_eq!(g.clock(EventRef::new(1, 0)).unwrap().0, vec![1, 1]);
        assert!(g.happens_before(EventRef::new(0, 0), EventRef::new(1, 0)).unwrap());
        assert!(!g.happens_before(EventRef::new(1, 0), EventRef::new(0, 0)).unwrap());
    }

    #[test]
    fn single_process_clocks() {
        let mut t = Trace::new(meta(1));
        for k in 0..3 {
            t.events[0].push(Event::new(0, k, EventKind::ProcStart, 0, 1));
        }
        let g = build_graph(&t).unwrap();
        let clocks: Vec<_> = (0..3).map(|k| g.clock(EventRef::new(0, k)).unwrap().0.clone()).collect();
        assert_eq!(clocks, vec![vec![1], vec![2], vec![3]]);
        assert!(g.happens_before(EventRef::new(0, 0), EventRef::new(0, 2)).unwrap());
        assert!(!g.happens_before(EventRef::new(0, 1), EventRef::new(0, 1)).unwrap());
    }

    #[test]
    fn dangling_receive_still_builds() {
        let mut t = Trace::new(meta(2));
        t.events[1].push(comm(1, 0, EventKind::Recv, MessageId::new(0, 7), 0));
        let g = build_graph(&t).unwrap();
        assert_eq!(g.dangling, vec![EventRef::new(1, 0)]);
        assert!(g.message_edges.is_empty());
        assert_eq!(
            g.happens_before(EventRef::new(1, 0), EventRef::new(4, 0)),
            Err(GraphError::UnknownEvent(EventRef::new(4, 0)))
        );
    }

    #[test]
    fn cyclic_hand_trace_rejected() {
        let mut t = Trace::new(meta(2));
        let (a, b) = (MessageId::new(0, 0), MessageId::new(1, 0));
        t.events[0].push(comm(0, 0, EventKind::Recv, b, 1));
        t.events[0].push(comm(0, 1, EventKind::Send, a, 1));
        t.events[1].push(comm(1, 0, EventKind::Recv, a, 0));
        t.events[1].push(comm(1, 1, EventKind::Send, b, 0));
        assert!(matches!(build_graph(&t), Err(GraphError::Cyclic(_))));
    }
}

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::graph::EventGraph;
use crate::ids::{EventRef, MessageId, ProcessId};
use crate::monitor::EventKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RaceMode {
    HbFilter,
    ExactReplay,
}

impl std::str::FromStr for RaceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hb" | "hb_filter" => Ok(RaceMode::HbFilter),
            "exact" | "exact_replay" => Ok(RaceMode::ExactReplay),
            other => Err(format!("unknown race mode `{other}` (expected hb or exact)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaceReport {
    pub recv: EventRef,
    pub observed: MessageId,
    /// Sorted by (sender, seq); always contains `observed`.
    pub candidates: Vec<MessageId>,
    pub method: RaceMode,
}

impl RaceReport {
    pub fn is_race(&self) -> bool {
        self.candidates.len() >= 2
    }
}

/// Ground-truth candidate sets, computed by constrained replay.
pub trait RaceOracle {
    fn exact_candidates(&self, recv: EventRef) -> Result<Vec<MessageId>, String>;
}

pub fn find_wildcard_receives(g: &EventGraph) -> Vec<EventRef> {
    g.trace
        .iter()
        .filter(|e| e.kind == EventKind::Recv && e.wildcard)
        .map(|e| e.event_ref())
        .collect()
}

/// `HB_FILTER` keeps, per sender, the oldest message to the receiving
/// process not taken by one of its earlier receives, provided its tag
/// matches the observed one and its send is not caused by `recv`. Messages
/// behind an undelivered one on the same channel are shadowed (FIFO).
/// `EXACT_REPLAY` asks the oracle.
pub fn racing_messages(
    g: &EventGraph,
    recv: EventRef,
    mode: RaceMode,
    oracle: Option<&dyn RaceOracle>,
) -> Result<RaceReport, AnalysisError> {
    let e = g.event(recv)?;
    if e.kind != EventKind::Recv || !e.wildcard {
        return Err(AnalysisError::NotWildcard(recv));
    }
    let observed = e.msg.ok_or(AnalysisError::NotWildcard(recv))?;
    let candidates = match mode {
        RaceMode::HbFilter => hb_filter(g, recv, observed, e.tag)?,
        RaceMode::ExactReplay => {
            let oracle = oracle.ok_or(AnalysisError::ReplayUnavailable)?;
            let mut c = oracle.exact_candidates(recv).map_err(AnalysisError::Replay)?;
            c.sort();
            c
        }
    };
    Ok(RaceReport {
        recv,
        observed,
        candidates,
        method: mode,
    })
}

fn hb_filter(
    g: &EventGraph,
    recv: EventRef,
    observed: MessageId,
    tag: Option<u32>,
) -> Result<Vec<MessageId>, AnalysisError> {
    let p = recv.process;
    let consumed: HashSet<MessageId> = g.trace.events[p.0][..recv.event_no as usize]
        .iter()
        .filter(|e| e.kind == EventKind::Recv)
        .filter_map(|e| e.msg)
        .collect();
    // channel q -> p, in send order
    let mut channels: BTreeMap<ProcessId, Vec<EventRef>> = BTreeMap::new();
    for s in g.trace.iter() {
        if s.kind == EventKind::Send && s.peer == Some(p) {
            if let Some(m) = s.msg {
                if !consumed.contains(&m) {
                    channels.entry(m.sender).or_default().push(s.event_ref());
                }
            }
        }
    }
    let mut out = BTreeSet::from([observed]);
    for sends in channels.values() {
        let Some(&head) = sends.first() else { continue };
        let ev = g.event(head)?;
        if ev.tag == tag && !g.happens_before(recv, head)? {
            out.insert(ev.msg.expect("send carries msg"));
        }
    }
    Ok(out.into_iter().collect())
}

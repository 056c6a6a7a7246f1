use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::graph::EventGraph;
use crate::ids::{EventRef, ProcessId};

/// A distributed breakpoint: process `q` stops after event `stop_after[q]`
/// (-1: before its first event).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreakpointCut {
    pub anchor: EventRef,
    pub stop_after: BTreeMap<ProcessId, i64>,
}

impl BreakpointCut {
    pub fn contains(&self, e: EventRef) -> bool {
        self.stop_after
            .get(&e.process)
            .is_some_and(|&last| (e.event_no as i64) <= last)
    }
}

/// The causal past of `anchor`, which is the smallest consistent cut
/// containing it: `stop_after[q] = VC(anchor)[q] - 1`.
pub fn compute_breakpoint(g: &EventGraph, anchor: EventRef) -> Result<BreakpointCut, AnalysisError> {
    let vc = g.clock(anchor)?;
    let stop_after = vc
        .0
        .iter()
        .enumerate()
        .map(|(q, &c)| (ProcessId(q), c as i64 - 1))
        .collect();
    Ok(BreakpointCut { anchor, stop_after })
}

/// No message edge enters the cut from outside, and the anchor is inside.
pub fn is_consistent_cut(g: &EventGraph, cut: &BreakpointCut) -> bool {
    cut.contains(cut.anchor)
        && g
            .message_edges
            .iter()
            .all(|(s, r)| !cut.contains(*r) || cut.contains(*s))
}

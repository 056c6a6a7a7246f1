//! Post-mortem timestamp correction: clock-offset removal, monitor-overhead
//! removal and causality repair.

use serde::{Deserialize, Serialize};

use super::{causal_order, EventGraph};
use crate::ids::EventRef;
use crate::monitor::Trace;

/// Minimal message latency assumed by causality repair.
pub const DEFAULT_EPSILON: i64 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectedTimeline {
    pub epsilon: i64,
    /// `adjusted[p][k] = (ts_enter', ts_exit')`
    pub adjusted: Vec<Vec<(i64, i64)>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineSummary {
    pub epsilon: i64,
    pub raw_violations: usize,
    pub corrected_violations: usize,
    /// Largest forward shift causality repair applied to any event.
    pub max_repair_shift: i64,
    pub corrected_span: (i64, i64),
}

impl CorrectedTimeline {
    /// Timestamps exactly as recorded.
    pub fn raw(trace: &Trace, epsilon: i64) -> CorrectedTimeline {
        CorrectedTimeline {
            epsilon,
            adjusted: trace
                .events
                .iter()
                .map(|evs| evs.iter().map(|e| (e.ts_enter, e.ts_exit)).collect())
                .collect(),
        }
    }

    pub fn get(&self, r: EventRef) -> Option<(i64, i64)> {
        self.adjusted
            .get(r.process.0)
            .and_then(|v| v.get(usize::try_from(r.event_no).ok()?))
            .copied()
    }

    /// Messages whose receive enters earlier than send exit plus epsilon.
    pub fn violations(&self, message_edges: &[(EventRef, EventRef)]) -> Vec<(EventRef, EventRef)> {
        message_edges
            .iter()
            .filter(|(s, r)| match (self.get(*s), self.get(*r)) {
                (Some((_, s_exit)), Some((r_enter, _))) => r_enter < s_exit + self.epsilon,
                _ => false,
            })
            .copied()
            .collect()
    }

    /// Per process: enter <= exit and each event enters no earlier than the
    /// previous one exits.
    pub fn is_monotone(&self) -> bool {
        self.adjusted.iter().all(|evs| {
            evs.iter().all(|(a, b)| a <= b) && evs.windows(2).all(|w| w[0].1 <= w[1].0)
        })
    }

    pub fn span(&self) -> (i64, i64) {
        let all = self.adjusted.iter().flatten();
        let lo = all.clone().map(|t| t.0).min().unwrap_or(0);
        let hi = all.map(|t| t.1).max().unwrap_or(0);
        (lo, hi)
    }
}

/// Single topological pass: a receive entering before `send exit + epsilon`
/// is moved to exactly that time and the rest of its process follows.
fn repair(
    timeline: &CorrectedTimeline,
    order: &[EventRef],
    send_of: impl Fn(EventRef) -> Option<EventRef>,
) -> CorrectedTimeline {
    let mut out = timeline.clone();
    let mut shift = vec![0i64; out.adjusted.len()];
    for &r in order {
        let p = r.process.0;
        let k = r.event_no as usize;
        let (enter, exit) = timeline.adjusted[p][k];
        let (mut enter, mut exit) = (enter + shift[p], exit + shift[p]);
        if let Some(s) = send_of(r) {
            // the send was visited earlier in topological order
            let (_, s_exit) = out.adjusted[s.process.0][s.event_no as usize];
            let earliest = s_exit + timeline.epsilon;
            if enter < earliest {
                let d = earliest - enter;
                shift[p] += d;
                enter += d;
                exit += d;
            }
        }
        out.adjusted[p][k] = (enter, exit);
    }
    out
}

/// Forces `recv.ts_enter' >= send.ts_exit' + epsilon` on every message edge
/// by shifting receiving processes forward.
pub fn synchronize_clocks(timeline: &CorrectedTimeline, g: &EventGraph) -> CorrectedTimeline {
    repair(timeline, &g.topo_order, |r| g.send_of(r))
}

/// Phases one and two: subtract each process's clock offset, then move the
/// `k`-th event of every process back by `k * delta` and shrink it to its
/// intrinsic cost `max(0, exit - enter - delta)`.
fn strip_overhead(trace: &Trace, epsilon: i64) -> CorrectedTimeline {
    let model = &trace.meta.overhead_model;
    let delta = model.per_event_overhead;
    let adjusted = trace
        .events
        .iter()
        .map(|evs| {
            evs.iter()
                .map(|e| {
                    let offset = model.offset(e.process);
                    let enter = e.ts_enter - offset - e.event_no as i64 * delta;
                    let intrinsic = (e.ts_exit - e.ts_enter - delta).max(0);
                    (enter, enter + intrinsic)
                })
                .collect()
        })
        .collect();
    CorrectedTimeline { epsilon, adjusted }
}

/// Offset and overhead removal followed by causality repair over the
/// trace's message matches. Traces whose matches are cyclic skip the repair.
pub fn remove_overhead(trace: &Trace, epsilon: i64) -> CorrectedTimeline {
    let timeline = strip_overhead(trace, epsilon);
    match causal_order(trace) {
        Ok(co) => repair(&timeline, &co.order, |r| co.matched.get(&r).copied()),
        Err(_) => timeline,
    }
}

pub(crate) fn summarize(g: &EventGraph, epsilon: i64) -> TimelineSummary {
    let raw = CorrectedTimeline::raw(&g.trace, epsilon);
    let stripped = strip_overhead(&g.trace, epsilon);
    let corrected = synchronize_clocks(&stripped, g);
    let max_repair_shift = stripped
        .adjusted
        .iter()
        .flatten()
        .zip(corrected.adjusted.iter().flatten())
        .map(|(a, b)| b.0 - a.0)
        .max()
        .unwrap_or(0);
    TimelineSummary {
        epsilon,
        raw_violations: raw.violations(&g.message_edges).len(),
        corrected_violations: corrected.violations(&g.message_edges).len(),
        max_repair_shift,
        corrected_span: corrected.span(),
    }
}

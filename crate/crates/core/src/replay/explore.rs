//! Systematic exploration of receive-match choices.
//!
//! Exploration is stateless: every node of the search is a fresh run that
//! replays a decision list and then proceeds on its own. Non-receive
//! operations run eagerly and receives with an explicit source are matched
//! as soon as possible (their match is unique under FIFO). When only
//! wildcard receives are left the run stops and reports the choices open at
//! that point; each choice becomes a child node. Nodes are identified by
//! the set of decisions made so far, which determines the state up to the
//! interleaving of independent steps.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::engine::traced_run;
use super::scripted::ScriptedScheduler;
use super::{MatchSchedule, ReplayError, RunDescriptor, Tail};
use crate::ids::{EventRef, MessageId, ProcessId};
use crate::monitor::Trace;
use crate::runtime::{Action, Decision, KernelView, ProcView, RunError, RunResult, Scheduler};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExploreLimits {
    pub max_executions: usize,
    /// Maximum number of wildcard choices along one path.
    pub max_depth: usize,
}

impl Default for ExploreLimits {
    fn default() -> Self {
        ExploreLimits {
            max_executions: 1024,
            max_depth: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExecutionStatus {
    Completed,
    Deadlock { blocked: Vec<ProcessId> },
}

#[derive(Clone, Debug)]
pub struct Execution {
    pub schedule: MatchSchedule,
    pub trace: Trace,
    pub outputs: Vec<Vec<u8>>,
    pub fingerprint: String,
    pub status: ExecutionStatus,
}

#[derive(Clone, Debug)]
pub struct ExecutionSet {
    pub executions: Vec<Execution>,
    pub distinct_outputs: BTreeSet<String>,
    pub truncated: bool,
}

/// Hash of the per-rank output hashes.
pub fn output_fingerprint(outputs: &[Vec<u8>]) -> String {
    let mut outer = Sha256::new();
    for out in outputs {
        outer.update(Sha256::digest(out));
    }
    hex::encode(outer.finalize())[..16].to_string()
}

struct Explorer {
    forced: ScriptedScheduler,
    /// Receives of this rank are never matched by the explorer itself.
    exclude: Option<ProcessId>,
    stall: Option<KernelView>,
}

impl Scheduler for Explorer {
    fn next(&mut self, view: &KernelView) -> Action {
        if let Some(p) = view.first_ready() {
            return Action::Step(p);
        }
        match self.forced.scripted_action(view) {
            Ok(Some(action)) => return action,
            Err(e) => return Action::Fail(e),
            Ok(None) => {}
        }
        let explicit = view
            .enabled_receives()
            .find(|(p, _, filter, _)| !filter.is_wildcard() && Some(*p) != self.exclude);
        if let Some((p, _, _, candidates)) = explicit {
            return Action::Deliver(p, candidates[0]);
        }
        self.stall = Some(view.clone());
        Action::Stop
    }
}

struct Node {
    outcome: Result<RunResult, RunError>,
    trace: Trace,
    stall: Option<KernelView>,
}

fn run_node(spec: &RunDescriptor, forced: Vec<Decision>, exclude: Option<ProcessId>) -> Node {
    let mut explorer = Explorer {
        forced: ScriptedScheduler::new(forced, Tail::Stop),
        exclude,
        stall: None,
    };
    let (outcome, trace) = traced_run(spec, "explore", None, &mut explorer);
    let outcome = explorer.forced.settle(outcome);
    Node {
        outcome,
        trace,
        stall: explorer.stall,
    }
}

/// Open wildcard choices at a stall, by rank then (sender, seq).
fn wildcard_choices(view: &KernelView, exclude: Option<ProcessId>) -> Vec<Decision> {
    view.enabled_receives()
        .filter(|(p, _, filter, _)| filter.is_wildcard() && Some(*p) != exclude)
        .flat_map(|(p, k, _, candidates)| {
            candidates.iter().map(move |&msg| Decision {
                process: p,
                recv_event_no: k,
                msg,
            })
        })
        .collect()
}

fn key(decisions: &[Decision]) -> BTreeSet<Decision> {
    decisions.iter().copied().collect()
}

/// Depth-first enumeration of all executions reachable by varying the
/// matches of wildcard receives. Executions are deduplicated by their set
/// of decisions; `initial` only supplies the run descriptor.
pub fn explore_all(initial: &MatchSchedule, limits: ExploreLimits) -> Result<ExecutionSet, ReplayError> {
    let spec = &initial.meta;
    let mut set = ExecutionSet {
        executions: Vec::new(),
        distinct_outputs: BTreeSet::new(),
        truncated: false,
    };
    let mut seen_forced: HashSet<BTreeSet<Decision>> = HashSet::new();
    let mut seen_states: HashSet<BTreeSet<Decision>> = HashSet::new();
    let mut stack: Vec<(Vec<Decision>, usize)> = vec![(Vec::new(), 0)];

    while let Some((forced, depth)) = stack.pop() {
        let node = run_node(spec, forced, None);
        let (result, status) = match node.outcome {
            Ok(r) => (Some(r), None),
            Err(RunError::Deadlock { blocked }) => (None, Some(ExecutionStatus::Deadlock { blocked })),
            Err(e) => return Err(e.into()),
        };
        if let (Some(r), Some(view)) = (&result, &node.stall) {
            if !seen_states.insert(key(&r.decisions)) {
                continue;
            }
            if depth >= limits.max_depth {
                set.truncated = true;
                continue;
            }
            for choice in wildcard_choices(view, None).into_iter().rev() {
                let mut child = r.decisions.clone();
                child.push(choice);
                if seen_forced.insert(key(&child)) {
                    stack.push((child, depth + 1));
                }
            }
            continue;
        }
        // terminal: completed or deadlocked
        let decisions = match &result {
            Some(r) => r.decisions.clone(),
            None => node.trace.iter().filter_map(recv_decision).collect(),
        };
        if !seen_states.insert(key(&decisions)) {
            continue;
        }
        if set.executions.len() == limits.max_executions {
            set.truncated = true;
            break;
        }
        let outputs = result.as_ref().map(RunResult::output_bytes).unwrap_or_else(|| vec![Vec::new(); spec.world_size]);
        let fingerprint = output_fingerprint(&outputs);
        set.distinct_outputs.insert(fingerprint.clone());
        let schedule = MatchSchedule {
            meta: RunDescriptor {
                origin: format!("explore:{}", set.executions.len()),
                ..spec.clone()
            },
            decisions,
        };
        set.executions.push(Execution {
            schedule,
            trace: node.trace,
            outputs,
            fingerprint,
            status: status.unwrap_or(ExecutionStatus::Completed),
        });
    }
    Ok(set)
}

fn recv_decision(e: &crate::monitor::Event) -> Option<Decision> {
    (e.kind == crate::monitor::EventKind::Recv).then(|| Decision {
        process: e.process,
        recv_event_no: e.event_no,
        msg: e.msg.expect("runtime RECV carries msg"),
    })
}

/// Messages deliverable at `recv` once the decisions made before it are
/// replayed, over every way the other processes can continue.
pub fn exact_candidates(schedule: &MatchSchedule, recv: EventRef) -> Result<Vec<MessageId>, ReplayError> {
    let prefix = schedule
        .prefix_before(recv)
        .ok_or(ReplayError::UnknownEvent(recv))?
        .to_vec();
    let p = recv.process;
    let mut found: BTreeSet<MessageId> = BTreeSet::new();
    let mut seen_forced: HashSet<BTreeSet<Decision>> = HashSet::new();
    let mut seen_states: HashSet<BTreeSet<Decision>> = HashSet::new();
    let mut stack = vec![prefix];

    while let Some(forced) = stack.pop() {
        let node = run_node(&schedule.meta, forced, Some(p));
        let result = match node.outcome {
            Ok(r) => r,
            // p never gets a message on this branch
            Err(RunError::Deadlock { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let Some(view) = node.stall else { continue };
        match &view.procs[p.0] {
            ProcView::Recv {
                event_no,
                filter,
                candidates,
            } if *event_no == recv.event_no => {
                if !filter.is_wildcard() {
                    return Err(ReplayError::NotWildcard(recv));
                }
                found.extend(candidates.iter().copied());
            }
            other => {
                return Err(ReplayError::Run(RunError::ScheduleInfeasible {
                    index: 0,
                    reason: format!("replayed prefix does not lead to receive {recv} ({other:?})"),
                }))
            }
        }
        if !seen_states.insert(key(&result.decisions)) {
            continue;
        }
        for choice in wildcard_choices(&view, Some(p)).into_iter().rev() {
            let mut child = result.decisions.clone();
            child.push(choice);
            if seen_forced.insert(key(&child)) {
                stack.push(child);
            }
        }
    }
    Ok(found.into_iter().collect())
}

impl crate::analysis::RaceOracle for MatchSchedule {
    fn exact_candidates(&self, recv: EventRef) -> Result<Vec<MessageId>, String> {
        exact_candidates(self, recv).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_depends_on_rank_boundaries() {
        let a = output_fingerprint(&[b"12".to_vec(), Vec::new()]);
        let b = output_fingerprint(&[b"1".to_vec(), b"2".to_vec()]);
        assert_ne!(a, b);
        assert_eq!(a.len(), 16);
    }
}

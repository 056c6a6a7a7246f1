use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::explore::exact_candidates;
use super::{MatchSchedule, ReplayError, RunDescriptor, ScriptedScheduler, Tail};
use crate::analysis::BreakpointCut;
use crate::ids::{EventRef, MessageId, ProcessId};
use crate::monitor::{Recorder, Trace, TraceMeta};
use crate::runtime::{run_with_scheduler, Decision, LazyScheduler, RunResult, RunStatus, Scheduler};

/// A finished run: its trace, its outputs and the schedule that reproduces it.
#[derive(Clone, Debug)]
pub struct Recording {
    pub trace: Trace,
    pub schedule: MatchSchedule,
    pub outputs: Vec<Vec<u8>>,
}

/// Event manipulation: accept `force` at the wildcard receive `at`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manipulation {
    pub at: EventRef,
    pub force: MessageId,
}

/// Replay state at a breakpoint.
#[derive(Clone, Debug, Serialize)]
pub struct HaltedState {
    pub status: RunStatus,
    pub next_event_no: Vec<u64>,
    /// Undelivered messages per destination, sorted by (sender, seq).
    pub pending: Vec<Vec<MessageId>>,
    /// Events (and their snapshots) executed up to the halt.
    pub trace: Trace,
}

pub(crate) fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub(crate) fn recorder(spec: &RunDescriptor, origin: &str) -> Recorder {
    Recorder::new(TraceMeta {
        program: spec.program.clone(),
        world_size: spec.world_size,
        inputs: spec.inputs.clone(),
        seed_or_schedule_ref: origin.to_string(),
        overhead_model: spec.overhead_model.clone(),
        lifecycle_events: spec.lifecycle_events,
        created_at: now_unix(),
    })
}

/// Runs `spec` under `scheduler` with a trace recorder attached.
pub(crate) fn traced_run(
    spec: &RunDescriptor,
    origin: &str,
    stop_after: Option<Vec<i64>>,
    scheduler: &mut dyn Scheduler,
) -> (Result<RunResult, crate::runtime::RunError>, Trace) {
    let mut rec = recorder(spec, origin);
    let mut config = spec.config();
    config.stop_after = stop_after;
    let outcome = run_with_scheduler(&spec.program, &config, scheduler, &mut rec);
    (outcome, rec.into_trace())
}

fn recording(spec: &RunDescriptor, origin: String, trace: Trace, result: RunResult) -> Recording {
    Recording {
        trace,
        outputs: result.output_bytes(),
        schedule: MatchSchedule {
            meta: RunDescriptor {
                origin,
                ..spec.clone()
            },
            decisions: result.decisions,
        },
    }
}

/// Runs under the seeded policy and captures the match schedule.
pub fn record(spec: &RunDescriptor, seed: u64) -> Result<Recording, ReplayError> {
    record_or_partial(spec, seed).map_err(|failed| failed.0)
}

/// Like [`record`], but a failed run (a deadlock, say) still hands back the
/// events executed before the failure.
pub fn record_or_partial(spec: &RunDescriptor, seed: u64) -> Result<Recording, Box<(ReplayError, Trace)>> {
    let origin = format!("seed:{seed}");
    let (outcome, trace) = traced_run(spec, &origin, None, &mut LazyScheduler::new(seed));
    match outcome {
        Ok(result) => Ok(recording(spec, origin, trace, result)),
        Err(e) => Err(Box::new((e.into(), trace))),
    }
}

fn run_script(
    spec: &RunDescriptor,
    origin: &str,
    decisions: Vec<Decision>,
    tail: Tail,
) -> Result<(RunResult, Trace), ReplayError> {
    let mut sched = ScriptedScheduler::new(decisions, tail);
    let (outcome, trace) = traced_run(spec, origin, None, &mut sched);
    let result = sched.settle(outcome)?;
    sched.check_consumed()?;
    Ok((result, trace))
}

/// Re-executes a schedule. Every receive must be covered by a decision.
pub fn replay(schedule: &MatchSchedule) -> Result<Recording, ReplayError> {
    let origin = schedule.reference();
    let (result, trace) = run_script(&schedule.meta, &origin, schedule.decisions.clone(), Tail::Strict)?;
    Ok(recording(&schedule.meta, schedule.meta.origin.clone(), trace, result))
}

/// Three-phase manipulated replay: the decisions made before `m.at` are
/// replayed, `m.force` is accepted at `m.at`, and the run continues under the
/// seeded policy. The returned schedule replays the new run exactly.
pub fn manipulate_and_replay(
    base: &MatchSchedule,
    m: Manipulation,
    suffix_seed: u64,
) -> Result<Recording, ReplayError> {
    let idx = base.index_of(m.at).ok_or(ReplayError::UnknownEvent(m.at))?;
    let candidates = exact_candidates(base, m.at)?;
    if !candidates.contains(&m.force) {
        return Err(ReplayError::InvalidManipulation {
            at: m.at,
            force: m.force,
            candidates,
        });
    }
    let mut decisions = base.decisions[..idx].to_vec();
    decisions.push(Decision {
        process: m.at.process,
        recv_event_no: m.at.event_no,
        msg: m.force,
    });
    let origin = format!("{} force {}={} then seed:{suffix_seed}", base.reference(), m.at, m.force);
    let (result, trace) = run_script(&base.meta, &origin, decisions, Tail::Seeded(suffix_seed))?;
    Ok(recording(&base.meta, origin, trace, result))
}

/// Replays `schedule` until every process has executed exactly
/// `stop_after[q] + 1` events (or finished).
pub fn run_to_breakpoint(schedule: &MatchSchedule, cut: &BreakpointCut) -> Result<HaltedState, ReplayError> {
    let limits = (0..schedule.meta.world_size)
        .map(|q| cut.stop_after.get(&ProcessId(q)).copied().unwrap_or(-1))
        .collect();
    let mut sched = ScriptedScheduler::new(schedule.decisions.clone(), Tail::Stop);
    let origin = format!("{} halt at {}", schedule.reference(), cut.anchor);
    let (outcome, trace) = traced_run(&schedule.meta, &origin, Some(limits), &mut sched);
    let result = sched.settle(outcome)?;
    Ok(HaltedState {
        status: result.status,
        next_event_no: result.next_event_no,
        pending: result.pending,
        trace,
    })
}

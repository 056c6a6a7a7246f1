//! Deterministic simulated message-passing kernel.
//!
//! Programs are async functions over a [`Ctx`]. Every API call parks the
//! process, and a [`Scheduler`] chooses each step: which parked process runs
//! its next operation and which deliverable message a blocked receive takes.
//! Channels are strict FIFO per (sender, receiver) pair: a receive only sees
//! the oldest undelivered message of each channel.
//!
//! The kernel keeps an overhead-free compute clock per process. Every event
//! costs one tick and a receive cannot start before the matched send exited
//! plus the configured latency. Monitors map these times onto their own
//! clock model.

mod kernel;
mod policy;
mod process;
pub mod programs;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{MessageId, ProcessId, RecvFilter};
use crate::monitor::{EventKind, Snapshot, SourceLoc};
use crate::replay::{MatchSchedule, ScriptedScheduler, Tail};

pub use policy::LazyScheduler;
pub use process::{Ctx, ProcessError, ProcessFuture, ProcessResult};
pub use programs::{find_program, register_builtin_programs, ProgramDescriptor};

/// Data handed to the monitor hook for every event.
#[derive(Clone, Debug, PartialEq)]
pub struct RuntimeEvent {
    pub process: ProcessId,
    pub event_no: u64,
    pub kind: EventKind,
    pub compute_enter: i64,
    pub compute_exit: i64,
    pub msg: Option<MessageId>,
    pub peer: Option<ProcessId>,
    pub tag: Option<u32>,
    pub length: Option<u64>,
    pub wildcard: bool,
    pub source_loc: Option<SourceLoc>,
    pub snapshot: Option<Snapshot>,
}

/// Observer of a run. Must not influence scheduling.
pub trait Monitor {
    fn on_event(&mut self, raw: RuntimeEvent);
}

pub struct NullMonitor;

impl Monitor for NullMonitor {
    fn on_event(&mut self, _raw: RuntimeEvent) {}
}

/// One receive-match decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Decision {
    pub process: ProcessId,
    pub recv_event_no: u64,
    pub msg: MessageId,
}

impl Decision {
    pub fn new(process: usize, recv_event_no: u64, msg: MessageId) -> Decision {
        Decision {
            process: ProcessId(process),
            recv_event_no,
            msg,
        }
    }
}

/// Kind of a non-receive operation a process is parked on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    Start,
    End,
    Send,
    VarTrace,
    ArrayTrace,
    QueueInspect,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProcView {
    /// Parked on an operation that can run right away.
    Ready { event_no: u64, kind: StepKind },
    /// Parked on a receive; `candidates` are the deliverable messages
    /// sorted by (sender, seq), possibly empty.
    Recv {
        event_no: u64,
        filter: RecvFilter,
        candidates: Vec<MessageId>,
    },
    Done,
    /// Reached its event limit.
    Halted,
}

/// What a scheduler sees before each step.
#[derive(Clone, Debug)]
pub struct KernelView {
    pub procs: Vec<ProcView>,
}

impl KernelView {
    /// Lowest rank parked on a non-receive operation.
    pub fn first_ready(&self) -> Option<ProcessId> {
        self.procs
            .iter()
            .position(|v| matches!(v, ProcView::Ready { .. }))
            .map(ProcessId)
    }

    /// Receives with at least one deliverable message, by rank.
    pub fn enabled_receives(&self) -> impl Iterator<Item = (ProcessId, u64, &RecvFilter, &[MessageId])> {
        self.procs.iter().enumerate().filter_map(|(p, v)| match v {
            ProcView::Recv {
                event_no,
                filter,
                candidates,
            } if !candidates.is_empty() => Some((ProcessId(p), *event_no, filter, candidates.as_slice())),
            _ => None,
        })
    }

    pub fn candidates(&self, p: ProcessId, event_no: u64) -> Option<&[MessageId]> {
        match self.procs.get(p.0)? {
            ProcView::Recv {
                event_no: k,
                candidates,
                ..
            } if *k == event_no => Some(candidates),
            _ => None,
        }
    }

    pub fn has_enabled(&self) -> bool {
        self.first_ready().is_some() || self.enabled_receives().next().is_some()
    }
}

#[derive(Debug)]
pub enum Action {
    Step(ProcessId),
    Deliver(ProcessId, MessageId),
    Stop,
    Fail(RunError),
}

pub trait Scheduler {
    /// Called only when at least one action is enabled.
    fn next(&mut self, view: &KernelView) -> Action;
}

impl<S: Scheduler + ?Sized> Scheduler for &mut S {
    fn next(&mut self, view: &KernelView) -> Action {
        (**self).next(view)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub world_size: usize,
    pub inputs: BTreeMap<String, String>,
    /// Record PROC_START/PROC_END events.
    pub lifecycle_events: bool,
    /// Minimal ticks between a send's exit and its receive's entry.
    pub latency: i64,
    /// Per-process index of the last event to execute (-1: none).
    pub stop_after: Option<Vec<i64>>,
}

impl RunConfig {
    pub fn new(world_size: usize) -> RunConfig {
        RunConfig {
            world_size,
            inputs: BTreeMap::new(),
            lifecycle_events: false,
            latency: 1,
            stop_after: None,
        }
    }

    pub fn input(mut self, key: &str, value: impl ToString) -> RunConfig {
        self.inputs.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_inputs(mut self, inputs: BTreeMap<String, String>) -> RunConfig {
        self.inputs = inputs;
        self
    }

    pub fn lifecycle(mut self, on: bool) -> RunConfig {
        self.lifecycle_events = on;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// The scheduler asked to stop.
    Stopped,
    /// Every unfinished process reached its event limit.
    Halted,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub status: RunStatus,
    /// Output of each finished process.
    pub outputs: Vec<Option<Vec<u8>>>,
    /// Every receive match, in the order the kernel made them.
    pub decisions: Vec<Decision>,
    pub next_event_no: Vec<u64>,
    /// Undelivered messages per destination, sorted by (sender, seq).
    pub pending: Vec<Vec<MessageId>>,
}

impl RunResult {
    /// Outputs with unfinished processes mapped to empty buffers.
    pub fn output_bytes(&self) -> Vec<Vec<u8>> {
        self.outputs.iter().map(|o| o.clone().unwrap_or_default()).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("unknown program `{0}`")]
    UnknownProgram(String),
    #[error("program `{program}` does not run on {world_size} processes (allowed: {allowed})")]
    InvalidWorldSize {
        program: String,
        world_size: usize,
        allowed: String,
    },
    #[error("deadlock: ranks {blocked:?} blocked with no deliverable message")]
    Deadlock { blocked: Vec<ProcessId> },
    #[error("schedule infeasible at decision {index}: {reason}")]
    ScheduleInfeasible { index: usize, reason: String },
    #[error("process {rank} failed: {error}")]
    Process { rank: ProcessId, error: ProcessError },
    #[error("scheduler chose a disabled action: {0}")]
    InvalidAction(String),
}

/// How receive matches are chosen for a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SchedulerPolicy {
    Seeded(u64),
    Scripted(MatchSchedule),
}

/// Runs a registered program under a custom scheduler.
pub fn run_with_scheduler(
    program: &str,
    config: &RunConfig,
    scheduler: &mut dyn Scheduler,
    monitor: &mut dyn Monitor,
) -> Result<RunResult, RunError> {
    let desc = find_program(program).ok_or_else(|| RunError::UnknownProgram(program.to_string()))?;
    run_descriptor(desc, config, scheduler, monitor)
}

/// Runs a program that is not in the built-in registry.
pub fn run_descriptor(
    desc: &ProgramDescriptor,
    config: &RunConfig,
    scheduler: &mut dyn Scheduler,
    monitor: &mut dyn Monitor,
) -> Result<RunResult, RunError> {
    desc.check_world_size(config.world_size)?;
    kernel::Kernel::new(desc, config).run(scheduler, monitor)
}

/// Runs a registered program under a seeded or scripted policy. Scripted
/// runs must consume every decision and may not need any other.
pub fn run_program(
    program: &str,
    config: &RunConfig,
    policy: &SchedulerPolicy,
    monitor: &mut dyn Monitor,
) -> Result<RunResult, RunError> {
    match policy {
        SchedulerPolicy::Seeded(seed) => {
            run_with_scheduler(program, config, &mut LazyScheduler::new(*seed), monitor)
        }
        SchedulerPolicy::Scripted(schedule) => {
            let mut sched = ScriptedScheduler::new(schedule.decisions.clone(), Tail::Strict);
            let outcome = run_with_scheduler(program, config, &mut sched, monitor);
            let result = sched.settle(outcome)?;
            sched.check_consumed()?;
            Ok(result)
        }
    }
}

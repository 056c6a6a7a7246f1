//! Record and replay: match schedules, deterministic re-execution, event
//! manipulation at wildcard receives, replay to breakpoint cuts and
//! exhaustive enumeration of reachable executions.

mod engine;
mod explore;
mod schedule;
mod scripted;

use thiserror::Error;

use crate::ids::{EventRef, MessageId};
use crate::runtime::RunError;

pub use engine::{manipulate_and_replay, record, record_or_partial, replay, run_to_breakpoint, HaltedState, Manipulation, Recording};
pub use explore::{
    exact_candidates, explore_all, output_fingerprint, Execution, ExecutionSet, ExecutionStatus, ExploreLimits,
};
pub use schedule::{schedule_path_for, MatchSchedule, RunDescriptor, ScheduleFileError};
pub use scripted::{ScriptedScheduler, Tail};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("message {force} cannot be forced at {at}; candidates are {candidates:?}")]
    InvalidManipulation {
        at: EventRef,
        force: MessageId,
        candidates: Vec<MessageId>,
    },
    #[error("event {0} is not a wildcard receive")]
    NotWildcard(EventRef),
    #[error("no receive decision for event {0}")]
    UnknownEvent(EventRef),
}

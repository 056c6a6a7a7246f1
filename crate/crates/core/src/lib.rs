//! Monitoring and debugging toolkit for message-passing programs.
//!
//! The crate is organised along the pipeline a debugging session follows:
//!
//! * [`runtime`] runs built-in programs as cooperative processes under full
//!   scheduler control (seeded, scripted or custom scheduling).
//! * [`monitor`] turns runtime callbacks into trace events, models the
//!   monitor overhead and clock skew, and reads/writes JSON Lines traces.
//! * [`graph`] builds the event graph with vector clocks and repairs
//!   timestamps post mortem.
//! * [`analysis`] detects communication errors, computes breakpoint cuts and
//!   racing messages at wildcard receives.
//! * [`replay`] records match schedules, replays and manipulates them, halts
//!   at breakpoints and enumerates all reachable executions.
//! * [`array`] assembles distributed-array snapshots into global views.

pub mod analysis;
pub mod array;
pub mod graph;
pub mod ids;
pub mod monitor;
pub mod replay;
pub mod runtime;

pub use ids::{Envelope, EventRef, MessageId, ProcessId, RecvFilter, SourceFilter, TagFilter};

//! The process-facing API.
//!
//! Every call parks the calling process on a pending operation and yields to
//! the kernel. The kernel performs the operation when its scheduler says so,
//! stores the reply and polls the process again.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::future::Future;
use std::panic::Location;
use std::pin::Pin;
use std::rc::Rc;
use std::task::{Context, Poll};

use thiserror::Error;

use crate::array::{local_extent, ArrayInfo, ArrayValues};
use crate::ids::{Envelope, MessageId, ProcessId, RecvFilter};
use crate::monitor::{ScalarValue, SourceLoc};

/// Error raised inside a process; aborts the run.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ProcessError {
    #[error("invalid destination rank {dest} (world size {world_size})")]
    InvalidDest { dest: usize, world_size: usize },
    #[error("array data has {data_len} elements, descriptor implies {expected}")]
    InfoMismatch { data_len: usize, expected: usize },
    #[error("invalid array descriptor: {0}")]
    InvalidInfo(String),
    #[error("bad input `{key}`: {reason}")]
    BadInput { key: String, reason: String },
    #[error("{0}")]
    Program(String),
}

#[derive(Debug)]
pub(crate) enum Op {
    Start,
    End,
    Send { dest: ProcessId, tag: u32, payload: Vec<u8> },
    Recv { filter: RecvFilter },
    VarTrace { name: String, value: ScalarValue },
    ArrayTrace { values: ArrayValues, info: ArrayInfo },
    QueueInspect,
}

#[derive(Debug)]
pub(crate) enum Reply {
    Done,
    Sent(MessageId),
    Received(Envelope),
    Queue(Vec<MessageId>),
}

#[derive(Debug)]
pub(crate) struct Parked {
    pub op: Op,
    pub loc: Option<SourceLoc>,
}

#[derive(Debug, Default)]
pub(crate) struct Slot {
    pub parked: Option<Parked>,
    pub reply: Option<Reply>,
}

pub type ProcessResult = Result<Vec<u8>, ProcessError>;
pub type ProcessFuture = Pin<Box<dyn Future<Output = ProcessResult>>>;

/// Handle a process uses to talk to the kernel.
#[derive(Clone)]
pub struct Ctx {
    rank: ProcessId,
    world_size: usize,
    inputs: Rc<BTreeMap<String, String>>,
    slot: Rc<RefCell<Slot>>,
}

struct Park {
    slot: Rc<RefCell<Slot>>,
    op: Option<Parked>,
}

impl Future for Park {
    type Output = Reply;

    fn poll(mut self: Pin<&mut Self>, _cx: &mut Context<'_>) -> Poll<Reply> {
        if let Some(parked) = self.op.take() {
            self.slot.borrow_mut().parked = Some(parked);
            return Poll::Pending;
        }
        match self.slot.borrow_mut().reply.take() {
            Some(reply) => Poll::Ready(reply),
            None => Poll::Pending,
        }
    }
}

fn loc_of(loc: &'static Location<'static>) -> Option<SourceLoc> {
    Some(SourceLoc {
        file: loc.file().replace('\\', "/"),
        line: loc.line(),
    })
}

impl Ctx {
    pub(crate) fn new(
        rank: ProcessId,
        world_size: usize,
        inputs: Rc<BTreeMap<String, String>>,
        slot: Rc<RefCell<Slot>>,
    ) -> Ctx {
        Ctx {
            rank,
            world_size,
            inputs,
            slot,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank.0
    }

    pub fn world_size(&self) -> usize {
        self.world_size
    }

    pub fn input(&self, key: &str) -> Option<&str> {
        self.inputs.get(key).map(String::as_str)
    }

    /// Parses input `key`, falling back to `default` when absent.
    pub fn input_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ProcessError> {
        match self.input(key) {
            None => Ok(default),
            Some(raw) => raw.parse().map_err(|_| ProcessError::BadInput {
                key: key.to_string(),
                reason: format!("cannot parse `{raw}`"),
            }),
        }
    }

    fn park(&self, op: Op, loc: Option<SourceLoc>) -> Park {
        Park {
            slot: self.slot.clone(),
            op: Some(Parked { op, loc }),
        }
    }

    /// Buffered send; completes without waiting for the receiver.
    #[track_caller]
    pub fn send(
        &self,
        dest: usize,
        tag: u32,
        payload: impl Into<Vec<u8>>,
    ) -> impl Future<Output = Result<MessageId, ProcessError>> + '_ {
        let loc = loc_of(Location::caller());
        let payload = payload.into();
        async move {
            if dest >= self.world_size {
                return Err(ProcessError::InvalidDest {
                    dest,
                    world_size: self.world_size,
                });
            }
            let op = Op::Send {
                dest: ProcessId(dest),
                tag,
                payload,
            };
            match self.park(op, loc).await {
                Reply::Sent(id) => Ok(id),
                other => unreachable!("send answered with {other:?}"),
            }
        }
    }

    /// Blocking receive.
    #[track_caller]
    pub fn recv(&self, filter: RecvFilter) -> impl Future<Output = Envelope> + '_ {
        let loc = loc_of(Location::caller());
        async move {
            match self.park(Op::Recv { filter }, loc).await {
                Reply::Received(env) => env,
                other => unreachable!("recv answered with {other:?}"),
            }
        }
    }

    /// Records a variable-inspection event.
    #[track_caller]
    pub fn var_trace(&self, name: &str, value: impl Into<ScalarValue>) -> impl Future<Output = ()> + '_ {
        let loc = loc_of(Location::caller());
        let op = Op::VarTrace {
            name: name.to_string(),
            value: value.into(),
        };
        async move {
            self.park(op, loc).await;
        }
    }

    /// Records this process's block of a distributed array.
    #[track_caller]
    pub fn array_trace(
        &self,
        values: ArrayValues,
        info: ArrayInfo,
    ) -> impl Future<Output = Result<(), ProcessError>> + '_ {
        let loc = loc_of(Location::caller());
        async move {
            let extent = local_extent(&info).map_err(|e| ProcessError::InvalidInfo(e.to_string()))?;
            if extent.len() != values.len() {
                return Err(ProcessError::InfoMismatch {
                    data_len: values.len(),
                    expected: extent.len(),
                });
            }
            if values.element_type() != info.element_type {
                return Err(ProcessError::InvalidInfo(format!(
                    "buffer holds {:?}, descriptor says {:?}",
                    values.element_type(),
                    info.element_type
                )));
            }
            self.park(Op::ArrayTrace { values, info }, loc).await;
            Ok(())
        }
    }

    /// Records the messages currently pending for this process.
    #[track_caller]
    pub fn queue_inspect(&self) -> impl Future<Output = Vec<MessageId>> + '_ {
        let loc = loc_of(Location::caller());
        async move {
            match self.park(Op::QueueInspect, loc).await {
                Reply::Queue(ids) => ids,
                other => unreachable!("queue inspection answered with {other:?}"),
            }
        }
    }
}

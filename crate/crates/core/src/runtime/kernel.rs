use std::cell::RefCell;
use std::collections::{HashMap, VecDeque};
use std::rc::Rc;
use std::task::{Context, Poll, Waker};

use super::process::{Ctx, Op, Parked, Reply, Slot};
use super::{
    Action, Decision, KernelView, Monitor, ProcView, ProgramDescriptor, RunConfig, RunError,
    RunResult, RunStatus, RuntimeEvent, Scheduler, StepKind,
};
use crate::array::ArraySnapshot;
use crate::ids::{Envelope, EventRef, MessageId, ProcessId};
use crate::monitor::{EventKind, QueueSnapshot, Snapshot, VarSnapshot};
use crate::runtime::ProcessFuture;

struct Proc {
    fut: Option<ProcessFuture>,
    slot: Rc<RefCell<Slot>>,
    parked: Option<Parked>,
    output: Option<Vec<u8>>,
    events: u64,
    clock: i64,
    next_seq: u64,
}

pub(super) struct Kernel {
    procs: Vec<Proc>,
    /// `channels[dest][sender]`
    channels: Vec<Vec<VecDeque<Envelope>>>,
    send_exit: HashMap<MessageId, i64>,
    decisions: Vec<Decision>,
    latency: i64,
    stop_after: Option<Vec<i64>>,
    lifecycle: bool,
}

impl Kernel {
    pub(super) fn new(desc: &ProgramDescriptor, config: &RunConfig) -> Kernel {
        let n = config.world_size;
        let inputs = Rc::new(config.inputs.clone());
        let procs = (0..n)
            .map(|p| {
                let slot = Rc::new(RefCell::new(Slot::default()));
                let ctx = Ctx::new(ProcessId(p), n, inputs.clone(), slot.clone());
                Proc {
                    fut: Some((desc.body)(ctx)),
                    slot,
                    parked: config.lifecycle_events.then_some(Parked {
                        op: Op::Start,
                        loc: None,
                    }),
                    output: None,
                    events: 0,
                    clock: 0,
                    next_seq: 0,
                }
            })
            .collect();
        Kernel {
            procs,
            channels: vec![vec![VecDeque::new(); n]; n],
            send_exit: HashMap::new(),
            decisions: Vec::new(),
            latency: config.latency,
            stop_after: config.stop_after.clone(),
            lifecycle: config.lifecycle_events,
        }
    }

    pub(super) fn run(
        mut self,
        scheduler: &mut dyn Scheduler,
        monitor: &mut dyn Monitor,
    ) -> Result<RunResult, RunError> {
        if !self.lifecycle {
            for p in 0..self.procs.len() {
                self.advance(ProcessId(p))?;
            }
        }
        loop {
            let view = self.view();
            if !view.has_enabled() {
                let blocked: Vec<ProcessId> = view
                    .procs
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| matches!(v, ProcView::Recv { .. }))
                    .map(|(p, _)| ProcessId(p))
                    .collect();
                if !blocked.is_empty() {
                    return Err(RunError::Deadlock { blocked });
                }
                let halted = view.procs.contains(&ProcView::Halted);
                let status = if halted { RunStatus::Halted } else { RunStatus::Completed };
                return Ok(self.finish(status));
            }
            match scheduler.next(&view) {
                Action::Step(p) => self.step(&view, p, monitor)?,
                Action::Deliver(p, m) => self.deliver(&view, p, m, monitor)?,
                Action::Stop => return Ok(self.finish(RunStatus::Stopped)),
                Action::Fail(e) => return Err(e),
            }
        }
    }

    fn finish(self, status: RunStatus) -> RunResult {
        let pending = self
            .channels
            .iter()
            .map(|chans| {
                let mut ids: Vec<MessageId> = chans.iter().flatten().map(|e| e.id).collect();
                ids.sort();
                ids
            })
            .collect();
        RunResult {
            status,
            next_event_no: self.procs.iter().map(|p| p.events).collect(),
            outputs: self.procs.into_iter().map(|p| p.output).collect(),
            decisions: self.decisions,
            pending,
        }
    }

    fn halted(&self, p: usize) -> bool {
        match &self.stop_after {
            Some(limits) => (self.procs[p].events as i64) > limits.get(p).copied().unwrap_or(i64::MAX),
            None => false,
        }
    }

    fn view(&self) -> KernelView {
        let procs = (0..self.procs.len())
            .map(|p| {
                let proc = &self.procs[p];
                let Some(parked) = &proc.parked else {
                    return ProcView::Done;
                };
                if self.halted(p) {
                    return ProcView::Halted;
                }
                let event_no = proc.events;
                let kind = match &parked.op {
                    Op::Recv { filter } => {
                        let candidates = self.channels[p]
                            .iter()
                            .filter_map(|chan| chan.front())
                            .filter(|env| filter.accepts(env))
                            .map(|env| env.id)
                            .collect();
                        return ProcView::Recv {
                            event_no,
                            filter: *filter,
                            candidates,
                        };
                    }
                    Op::Start => StepKind::Start,
                    Op::End => StepKind::End,
                    Op::Send { .. } => StepKind::Send,
                    Op::VarTrace { .. } => StepKind::VarTrace,
                    Op::ArrayTrace { .. } => StepKind::ArrayTrace,
                    Op::QueueInspect => StepKind::QueueInspect,
                };
                ProcView::Ready { event_no, kind }
            })
            .collect();
        KernelView { procs }
    }

    /// Polls `p` until it parks again or finishes.
    fn advance(&mut self, p: ProcessId) -> Result<(), RunError> {
        let proc = &mut self.procs[p.0];
        let Some(fut) = proc.fut.as_mut() else {
            return Ok(());
        };
        let mut cx = Context::from_waker(Waker::noop());
        match fut.as_mut().poll(&mut cx) {
            Poll::Ready(Ok(out)) => {
                proc.fut = None;
                proc.output = Some(out);
                proc.parked = self.lifecycle.then_some(Parked { op: Op::End, loc: None });
            }
            Poll::Ready(Err(error)) => return Err(RunError::Process { rank: p, error }),
            Poll::Pending => {
                let parked = proc.slot.borrow_mut().parked.take();
                assert!(parked.is_some(), "process {p} yielded outside the runtime API");
                proc.parked = parked;
            }
        }
        Ok(())
    }

    fn reply(&mut self, p: ProcessId, reply: Reply) -> Result<(), RunError> {
        self.procs[p.0].slot.borrow_mut().reply = Some(reply);
        self.advance(p)
    }

    fn emit(&mut self, monitor: &mut dyn Monitor, mut raw: RuntimeEvent, earliest: i64) {
        let proc = &mut self.procs[raw.process.0];
        raw.event_no = proc.events;
        raw.compute_enter = proc.clock.max(earliest);
        raw.compute_exit = raw.compute_enter + 1;
        proc.clock = raw.compute_exit;
        proc.events += 1;
        monitor.on_event(raw);
    }

    fn step(&mut self, view: &KernelView, p: ProcessId, monitor: &mut dyn Monitor) -> Result<(), RunError> {
        if !matches!(view.procs.get(p.0), Some(ProcView::Ready { .. })) {
            return Err(RunError::InvalidAction(format!("step of rank {p} which is not ready")));
        }
        let parked = self.procs[p.0].parked.take().expect("ready process is parked");
        let event_no = self.procs[p.0].events;
        let mut raw = blank(p, parked.loc);
        let reply = match parked.op {
            Op::Start => {
                raw.kind = EventKind::ProcStart;
                self.emit(monitor, raw, 0);
                return self.advance(p);
            }
            Op::End => {
                raw.kind = EventKind::ProcEnd;
                self.emit(monitor, raw, 0);
                return Ok(());
            }
            Op::Send { dest, tag, payload } => {
                let proc = &mut self.procs[p.0];
                let id = MessageId { sender: p, seq: proc.next_seq };
                proc.next_seq += 1;
                raw.kind = EventKind::Send;
                raw.msg = Some(id);
                raw.peer = Some(dest);
                raw.tag = Some(tag);
                raw.length = Some(payload.len() as u64);
                self.emit(monitor, raw, 0);
                self.send_exit.insert(id, self.procs[p.0].clock);
                self.channels[dest.0][p.0].push_back(Envelope { id, dest, tag, payload });
                Reply::Sent(id)
            }
            Op::VarTrace { name, value } => {
                raw.kind = EventKind::VarInspect;
                raw.snapshot = Some(Snapshot::Var(VarSnapshot { name, value }));
                self.emit(monitor, raw, 0);
                Reply::Done
            }
            Op::ArrayTrace { values, info } => {
                raw.kind = EventKind::ArrayTrace;
                raw.snapshot = Some(Snapshot::Array(ArraySnapshot {
                    info,
                    local_values: values,
                    at_event: EventRef { process: p, event_no },
                }));
                self.emit(monitor, raw, 0);
                Reply::Done
            }
            Op::QueueInspect => {
                let mut pending: Vec<MessageId> = self.channels[p.0].iter().flatten().map(|e| e.id).collect();
                pending.sort();
                raw.kind = EventKind::QueueInspect;
                raw.snapshot = Some(Snapshot::Queue(QueueSnapshot {
                    pending: pending.clone(),
                }));
                self.emit(monitor, raw, 0);
                Reply::Queue(pending)
            }
            Op::Recv { .. } => unreachable!("receives are not ready steps"),
        };
        self.reply(p, reply)
    }

    fn deliver(
        &mut self,
        view: &KernelView,
        p: ProcessId,
        m: MessageId,
        monitor: &mut dyn Monitor,
    ) -> Result<(), RunError> {
        let event_no = self.procs[p.0].events;
        let offered = view.candidates(p, event_no).is_some_and(|c| c.contains(&m));
        if !offered {
            return Err(RunError::InvalidAction(format!(
                "message {m} is not deliverable to receive {}",
                EventRef { process: p, event_no }
            )));
        }
        let Some(Parked { op: Op::Recv { filter }, loc }) = self.procs[p.0].parked.take() else {
            unreachable!("deliverable receive is parked on a receive");
        };
        let env = self.channels[p.0][m.sender.0]
            .pop_front()
            .expect("candidate is a channel head");
        debug_assert_eq!(env.id, m);
        let mut raw = blank(p, loc);
        raw.kind = EventKind::Recv;
        raw.msg = Some(m);
        raw.peer = Some(m.sender);
        raw.tag = Some(env.tag);
        raw.length = Some(env.length());
        raw.wildcard = filter.is_wildcard();
        let earliest = self.send_exit[&m] + self.latency;
        self.emit(monitor, raw, earliest);
        self.decisions.push(Decision {
            process: p,
            recv_event_no: event_no,
            msg: m,
        });
        self.reply(p, Reply::Received(env))
    }
}

fn blank(process: ProcessId, source_loc: Option<crate::monitor::SourceLoc>) -> RuntimeEvent {
    RuntimeEvent {
        process,
        event_no: 0,
        kind: EventKind::Send,
        compute_enter: 0,
        compute_exit: 0,
        msg: None,
        peer: None,
        tag: None,
        length: None,
        wildcard: false,
        source_loc,
        snapshot: None,
    }
}

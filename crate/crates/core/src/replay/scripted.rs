use crate::ids::EventRef;
use crate::runtime::{
    Action, Decision, KernelView, LazyScheduler, ProcView, RunError, RunResult, RunStatus, Scheduler,
};

/// What a scripted run does once its decisions are used up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    /// Any further receive is an error: replay must be unambiguous.
    Strict,
    /// Stop the run at the first receive without a decision.
    Stop,
    /// Continue under the seeded policy.
    Seeded(u64),
}

/// Replays a decision list.
///
/// Non-receive operations run eagerly, lowest rank first, as in a seeded
/// run. When every live process waits on a receive, the first remaining
/// decision that is deliverable right now is applied. Decisions of
/// processes halted by an event limit are ignored.
pub struct ScriptedScheduler {
    remaining: Vec<(usize, Decision)>,
    total: usize,
    tail: Tail,
    lazy: Option<LazyScheduler>,
}

/// Why decision `d` cannot be applied in the current state.
pub(crate) fn explain(view: &KernelView, d: &Decision) -> String {
    let at = EventRef {
        process: d.process,
        event_no: d.recv_event_no,
    };
    match view.procs.get(d.process.0) {
        None => format!("rank {} does not exist", d.process),
        Some(ProcView::Recv {
            event_no,
            filter,
            candidates,
        }) if *event_no == d.recv_event_no => {
            if !filter.accepts_sender(d.msg.sender) {
                format!("receive {at} does not accept messages from rank {}", d.msg.sender)
            } else {
                let list: Vec<String> = candidates.iter().map(ToString::to_string).collect();
                format!(
                    "message {} is not deliverable at {at} (deliverable: [{}])",
                    d.msg,
                    list.join(", ")
                )
            }
        }
        Some(ProcView::Recv { event_no, .. }) => format!(
            "rank {} waits at receive {}:{event_no}, not at {at}",
            d.process, d.process
        ),
        Some(ProcView::Ready { event_no, .. }) => {
            format!("event {}:{event_no} is not a receive", d.process)
        }
        Some(ProcView::Done) => format!("rank {} finished before {at}", d.process),
        Some(ProcView::Halted) => format!("rank {} is halted before {at}", d.process),
    }
}

impl ScriptedScheduler {
    pub fn new(decisions: Vec<Decision>, tail: Tail) -> ScriptedScheduler {
        let lazy = match tail {
            Tail::Seeded(seed) => Some(LazyScheduler::new(seed)),
            _ => None,
        };
        ScriptedScheduler {
            total: decisions.len(),
            remaining: decisions.into_iter().enumerate().collect(),
            tail,
            lazy,
        }
    }

    pub fn remaining(&self) -> usize {
        self.remaining.len()
    }

    /// Applies the first applicable decision, or explains why the next
    /// relevant one cannot be applied. `Ok(None)` means nothing relevant
    /// is left.
    pub(crate) fn scripted_action(&mut self, view: &KernelView) -> Result<Option<Action>, RunError> {
        let applicable = self.remaining.iter().position(|(_, d)| {
            view.candidates(d.process, d.recv_event_no)
                .is_some_and(|c| c.contains(&d.msg))
        });
        if let Some(i) = applicable {
            let (_, d) = self.remaining.remove(i);
            return Ok(Some(Action::Deliver(d.process, d.msg)));
        }
        let relevant = self
            .remaining
            .iter()
            .find(|(_, d)| !matches!(view.procs.get(d.process.0), Some(ProcView::Halted)));
        match relevant {
            Some((index, d)) => Err(RunError::ScheduleInfeasible {
                index: *index,
                reason: explain(view, d),
            }),
            None => Ok(None),
        }
    }

    /// Post-run check: unused decisions make the schedule infeasible, and a
    /// deadlock while decisions remain is reported against the first one.
    pub fn settle(&self, outcome: Result<RunResult, RunError>) -> Result<RunResult, RunError> {
        let first = self.remaining.first();
        match (outcome, first) {
            (Err(RunError::Deadlock { blocked }), Some((index, d))) => Err(RunError::ScheduleInfeasible {
                index: *index,
                reason: format!(
                    "ranks {blocked:?} blocked; message {} never became deliverable at {}:{}",
                    d.msg, d.process, d.recv_event_no
                ),
            }),
            (Ok(result), Some((index, d))) if result.status == RunStatus::Completed => {
                Err(RunError::ScheduleInfeasible {
                    index: *index,
                    reason: format!("run completed without reaching receive {}:{}", d.process, d.recv_event_no),
                })
            }
            (outcome, _) => outcome,
        }
    }

    pub fn check_consumed(&self) -> Result<(), RunError> {
        match self.remaining.first() {
            None => Ok(()),
            Some((index, d)) => Err(RunError::ScheduleInfeasible {
                index: *index,
                reason: format!("decision for receive {}:{} was never used", d.process, d.recv_event_no),
            }),
        }
    }
}

impl Scheduler for ScriptedScheduler {
    fn next(&mut self, view: &KernelView) -> Action {
        if let Some(p) = view.first_ready() {
            return Action::Step(p);
        }
        match self.scripted_action(view) {
            Ok(Some(action)) => action,
            Err(e) => Action::Fail(e),
            Ok(None) => match self.tail {
                Tail::Stop => Action::Stop,
                Tail::Seeded(_) => self.lazy.as_mut().expect("seeded tail").choose(view),
                Tail::Strict => {
                    let (p, k, _, _) = view.enabled_receives().next().expect("called with an enabled action");
                    Action::Fail(RunError::ScheduleInfeasible {
                        index: self.total,
                        reason: format!("schedule exhausted; receive {p}:{k} has no decision"),
                    })
                }
            },
        }
    }
}

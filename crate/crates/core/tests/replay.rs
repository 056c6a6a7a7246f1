mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use proptest::prelude::*;

use common::*;
use madpg::analysis::{compute_breakpoint, BreakpointCut};
use madpg::graph::build_graph;
use madpg::ids::{EventRef, MessageId, ProcessId};
use madpg::monitor::{trace_to_string, EventKind};
use madpg::replay::{
    explore_all, manipulate_and_replay, record, replay, run_to_breakpoint, schedule_path_for, ExecutionStatus,
    ExploreLimits, Manipulation, MatchSchedule, ReplayError, RunDescriptor,
};
use madpg::runtime::{RunError, RunStatus};

fn lines(t: &madpg::monitor::Trace) -> Vec<String> {
    trace_to_string(t).lines().skip(1).map(String::from).collect()
}

/// A two_senders recording whose rank 0 printed `want`.
fn two_senders_with(want: &[u8]) -> madpg::replay::Recording {
    (1..64)
        .map(|seed| rec("two_senders", 3, seed))
        .find(|r| r.outputs[0] == want)
        .expect("some seed produces the order")
}

#[test]
fn record_captures_one_decision_per_receive() {
    let r = rec("two_senders", 3, 1);
    assert_eq!(r.schedule.decisions.len(), 2);
    assert!(r.schedule.decisions.iter().all(|d| d.process == ProcessId(0)));
    assert_eq!(r.schedule.meta.origin, "seed:1");
}

#[test]
fn poisson_decisions_are_forced() {
    let r = rec("poisson", 2, 5);
    let g = build_graph(&r.trace).unwrap();
    for d in &r.schedule.decisions {
        let e = g.event(EventRef::new(d.process.0, d.recv_event_no)).unwrap();
        assert!(!e.wildcard);
        assert_eq!(e.peer, Some(d.msg.sender));
    }
}

#[test]
fn swapped_message_at_explicit_receive_is_infeasible() {
    let r = rec("pipeline_chain", 4, 1);
    let mut bad = r.schedule.clone();
    bad.decisions[0].msg = MessageId::new(2, 0);
    assert!(matches!(
        replay(&bad),
        Err(ReplayError::Run(RunError::ScheduleInfeasible { index: 0, .. }))
    ));
}

#[test]
fn truncated_schedule_is_infeasible() {
    let r = rec("three_senders", 4, 2);
    let mut short = r.schedule.clone();
    short.decisions.pop();
    assert!(matches!(
        replay(&short),
        Err(ReplayError::Run(RunError::ScheduleInfeasible { .. }))
    ));
}

#[test]
fn schedule_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let r = rec("distance_doubling", 4, 3);
    let trace_path = dir.path().join("t.jsonl");
    let path = schedule_path_for(&trace_path);
    assert_eq!(path, dir.path().join("t.schedule.json"));
    r.schedule.write(&path).unwrap();
    let back = MatchSchedule::read(&path).unwrap();
    assert_eq!(back, r.schedule);
    assert_eq!(lines(&replay(&back).unwrap().trace), lines(&r.trace));
}

#[test]
fn forcing_the_other_sender_swaps_the_output() {
    let base = two_senders_with(b"12");
    let m = Manipulation {
        at: EventRef::new(0, 0),
        force: MessageId::new(2, 0),
    };
    let out = manipulate_and_replay(&base.schedule, m, 9).unwrap();
    assert_eq!(out.outputs[0], b"21");
    // the new schedule reproduces the manipulated run
    let again = replay(&out.schedule).unwrap();
    assert_eq!(lines(&again.trace), lines(&out.trace));
}

#[test]
fn forcing_the_observed_message_keeps_the_prefix() {
    let base = rec("distance_doubling", 4, 2);
    let g = build_graph(&base.trace).unwrap();
    for recv in madpg::analysis::find_wildcard_receives(&g) {
        let observed = g.event(recv).unwrap().msg.unwrap();
        let out = manipulate_and_replay(&base.schedule, Manipulation { at: recv, force: observed }, 1).unwrap();
        let p = recv.process.0;
        let k = recv.event_no as usize;
        assert_eq!(out.trace.events[p][..=k], base.trace.events[p][..=k]);
    }
}

#[test]
fn forcing_a_consumed_message_is_rejected() {
    let base = rec("two_senders", 3, 1);
    let first = base.schedule.decisions[0].msg;
    let err = manipulate_and_replay(
        &base.schedule,
        Manipulation {
            at: EventRef::new(0, 1),
            force: first,
        },
        1,
    )
    .unwrap_err();
    match err {
        ReplayError::InvalidManipulation { candidates, .. } => assert!(!candidates.contains(&first)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn manipulating_an_explicit_receive_is_rejected() {
    let base = rec("pipeline_chain", 3, 1);
    let at = EventRef::new(1, 1);
    let err = manipulate_and_replay(&base.schedule, Manipulation { at, force: MessageId::new(0, 0) }, 1);
    assert_eq!(err.unwrap_err(), ReplayError::NotWildcard(at));
    let missing = EventRef::new(1, 40);
    let err = manipulate_and_replay(&base.schedule, Manipulation { at: missing, force: MessageId::new(0, 0) }, 1);
    assert_eq!(err.unwrap_err(), ReplayError::UnknownEvent(missing));
}

#[test]
fn breakpoint_on_first_receive_of_two_senders() {
    let base = rec("two_senders", 3, 1);
    let cut = BreakpointCut {
        anchor: EventRef::new(0, 0),
        stop_after: BTreeMap::from([(ProcessId(0), 0), (ProcessId(1), -1), (ProcessId(2), -1)]),
    };
    // the cut is not consistent (the received message's send is outside),
    // so the replay cannot honour the recorded match and must say so
    assert!(run_to_breakpoint(&base.schedule, &cut).is_err());

    let g = build_graph(&base.trace).unwrap();
    let cut = compute_breakpoint(&g, EventRef::new(0, 0)).unwrap();
    let halted = run_to_breakpoint(&base.schedule, &cut).unwrap();
    assert_eq!(halted.next_event_no[0], 1);
    let sender = base.schedule.decisions[0].msg.sender.0;
    assert_eq!(halted.next_event_no[sender], 1);
    assert_eq!(halted.next_event_no[3 - sender], 0);
    assert_eq!(halted.status, RunStatus::Halted);
}

#[test]
fn breakpoint_at_full_extent_is_a_full_replay() {
    let base = rec("three_senders", 4, 3);
    let cut = BreakpointCut {
        anchor: EventRef::new(0, 2),
        stop_after: (0..4)
            .map(|q| (ProcessId(q), base.trace.events[q].len() as i64 - 1))
            .collect(),
    };
    let halted = run_to_breakpoint(&base.schedule, &cut).unwrap();
    assert_eq!(lines(&halted.trace), lines(&base.trace));
    assert!(halted.pending.iter().all(Vec::is_empty));
}

#[test]
fn explore_two_senders_finds_both_orders() {
    let base = rec("two_senders", 3, 1);
    let set = explore_all(&base.schedule, ExploreLimits::default()).unwrap();
    let outputs: BTreeSet<_> = set.executions.iter().map(|e| e.outputs[0].clone()).collect();
    assert_eq!(outputs, BTreeSet::from([b"12".to_vec(), b"21".to_vec()]));
    assert!(!set.truncated);
    for ex in &set.executions {
        assert_eq!(replay(&ex.schedule).unwrap().outputs, ex.outputs);
    }
}

#[test]
fn exploration_truncates_at_the_limit() {
    let base = rec("three_senders", 4, 1);
    let limits = ExploreLimits {
        max_executions: 4,
        max_depth: 64,
    };
    let set = explore_all(&base.schedule, limits).unwrap();
    assert_eq!(set.executions.len(), 4);
    assert!(set.truncated);
    let shallow = explore_all(
        &base.schedule,
        ExploreLimits {
            max_executions: 100,
            max_depth: 1,
        },
    )
    .unwrap();
    assert!(shallow.truncated);
}

#[test]
fn exploring_a_deadlocking_program_reports_the_deadlock() {
    let spec = RunDescriptor::new("token_ring", 3).input("broken", 1);
    let base = MatchSchedule {
        meta: spec,
        decisions: Vec::new(),
    };
    let set = explore_all(&base, ExploreLimits::default()).unwrap();
    assert_eq!(set.executions.len(), 1);
    assert_eq!(
        set.executions[0].status,
        ExecutionStatus::Deadlock {
            blocked: vec![ProcessId(0), ProcessId(1), ProcessId(2)]
        }
    );
}

#[test]
fn exploration_matches_brute_force_on_every_program() {
    for (program, np) in program_matrix() {
        let spec = small_inputs(program, np);
        let base = record(&spec, 1).unwrap();
        let set = explore_all(&base.schedule, ExploreLimits::default()).unwrap();
        let en = enumerate_schedules(&spec);
        let explored: BTreeSet<MatchMap> = set
            .executions
            .iter()
            .map(|e| {
                e.schedule
                    .decisions
                    .iter()
                    .map(|d| ((d.process.0, d.recv_event_no), d.msg))
                    .collect()
            })
            .collect();
        assert_eq!(explored, en.terminals, "{program}");
        for ex in &set.executions {
            let key: MatchMap = ex
                .schedule
                .decisions
                .iter()
                .map(|d| ((d.process.0, d.recv_event_no), d.msg))
                .collect();
            assert_eq!(en.outputs.get(&key), Some(&ex.outputs), "{program}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Replaying a recorded schedule reproduces the run exactly.
    #[test]
    fn replay_reproduces_recording(idx in 0usize..7, seed in any::<u64>()) {
        let (program, np) = program_matrix()[idx];
        let r = record(&small_inputs(program, np), seed).unwrap();
        let again = replay(&r.schedule).unwrap();
        prop_assert_eq!(lines(&again.trace), lines(&r.trace));
        prop_assert_eq!(again.outputs, r.outputs);
    }

    /// A halted replay never contains a receive whose send is missing, and
    /// every process stops exactly at its cut position.
    #[test]
    fn halted_states_are_consistent(idx in 0usize..7, seed in 0u64..200, pick in any::<usize>()) {
        let (program, np) = program_matrix()[idx];
        let r = record(&small_inputs(program, np), seed).unwrap();
        let g = build_graph(&r.trace).unwrap();
        let events: Vec<EventRef> = r.trace.iter().map(|e| e.event_ref()).collect();
        let cut = compute_breakpoint(&g, events[pick % events.len()]).unwrap();
        let halted = run_to_breakpoint(&r.schedule, &cut).unwrap();
        let sent: HashSet<MessageId> = halted.trace.iter().filter(|e| e.kind == EventKind::Send).filter_map(|e| e.msg).collect();
        for e in halted.trace.iter().filter(|e| e.kind == EventKind::Recv) {
            prop_assert!(sent.contains(&e.msg.unwrap()));
        }
        for (q, &last) in cut.stop_after.values().enumerate() {
            prop_assert_eq!(halted.next_event_no[q] as i64, last + 1);
        }
    }

    /// Any candidate reported at a wildcard receive can actually be forced.
    #[test]
    fn every_exact_candidate_can_be_forced(seed in 0u64..100, suffix in any::<u64>()) {
        let r = rec("distance_doubling", 4, seed);
        let g = build_graph(&r.trace).unwrap();
        for recv in madpg::analysis::find_wildcard_receives(&g) {
            for m in madpg::replay::exact_candidates(&r.schedule, recv).unwrap() {
                let out = manipulate_and_replay(&r.schedule, Manipulation { at: recv, force: m }, suffix).unwrap();
                let got = out.trace.event(recv).unwrap().msg;
                prop_assert_eq!(got, Some(m));
            }
        }
    }
}

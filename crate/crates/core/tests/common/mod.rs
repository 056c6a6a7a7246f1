//! Independent oracles shared by the integration and acceptance tests. None
//! of them reuse the library's analysis code: schedules are enumerated step
//! by step, happens-before is a transitive closure, cuts are found by
//! exhaustive search and the Poisson reference is a plain sequential loop.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use madpg::ids::{EventRef, MessageId};
use madpg::monitor::{EventKind, Trace};
use madpg::replay::{record, Recording, RunDescriptor};
use madpg::runtime::{
    run_with_scheduler, Action, KernelView, NullMonitor, ProcView, RunConfig, RunError, Scheduler,
};

/// Receive `(process, event_no)` mapped to the message it accepted.
pub type MatchMap = BTreeMap<(usize, u64), MessageId>;

pub fn rec(program: &str, np: usize, seed: u64) -> Recording {
    record(&RunDescriptor::new(program, np), seed).expect("recording succeeds")
}

pub fn small_inputs(program: &str, np: usize) -> RunDescriptor {
    let spec = RunDescriptor::new(program, np);
    match program {
        "poisson" => spec.input("n", 8).input("iters", 5),
        _ => spec,
    }
}

/// Every world size a built-in program accepts in the test matrix.
pub fn program_matrix() -> Vec<(&'static str, usize)> {
    vec![
        ("two_senders", 3),
        ("three_senders", 4),
        ("pipeline_chain", 4),
        ("poisson", 4),
        ("distance_doubling", 4),
        ("token_ring", 4),
        ("array_demo", 4),
    ]
}

// ---------------------------------------------------------------------------
// Brute-force schedule enumeration
// ---------------------------------------------------------------------------

/// All enabled actions in a fixed order: steps by rank, then deliveries by
/// rank and (sender, seq).
fn options(view: &KernelView) -> Vec<Action> {
    let mut out = Vec::new();
    for (p, v) in view.procs.iter().enumerate() {
        if matches!(v, ProcView::Ready { .. }) {
            out.push(Action::Step(madpg::ProcessId(p)));
        }
    }
    for (p, v) in view.procs.iter().enumerate() {
        if let ProcView::Recv { candidates, .. } = v {
            for &m in candidates {
                out.push(Action::Deliver(madpg::ProcessId(p), m));
            }
        }
    }
    out
}

/// Follows a path of option indices and stops at the first unscripted
/// choice, remembering the state reached there.
struct PathScheduler {
    path: Vec<usize>,
    at: usize,
    matches: MatchMap,
    frontier: Option<(String, usize)>,
}

impl Scheduler for PathScheduler {
    fn next(&mut self, view: &KernelView) -> Action {
        let opts = options(view);
        if self.at == self.path.len() {
            let state = format!("{:?}|{:?}", view.procs, self.matches);
            self.frontier = Some((state, opts.len()));
            return Action::Stop;
        }
        let choice = self.path[self.at];
        self.at += 1;
        let action = opts.into_iter().nth(choice).expect("path follows recorded options");
        if let Action::Deliver(p, m) = &action {
            if let ProcView::Recv { event_no, .. } = &view.procs[p.0] {
                self.matches.insert((p.0, *event_no), *m);
            }
        }
        action
    }
}

/// Result of exhaustively enumerating every interleaving of a program.
pub struct Enumeration {
    /// Distinct terminal match maps, including runs that deadlock.
    pub terminals: BTreeSet<MatchMap>,
    pub deadlocked: BTreeSet<MatchMap>,
    pub outputs: BTreeMap<MatchMap, Vec<Vec<u8>>>,
}

/// Enumerates all step-level interleavings of `spec` by re-execution. States
/// are memoized by the kernel view plus the matches made so far, which
/// together determine every process and channel.
pub fn enumerate_schedules(spec: &RunDescriptor) -> Enumeration {
    let config: RunConfig = spec.config();
    let mut memo: HashMap<String, BTreeSet<MatchMap>> = HashMap::new();
    let mut en = Enumeration {
        terminals: BTreeSet::new(),
        deadlocked: BTreeSet::new(),
        outputs: BTreeMap::new(),
    };
    let all = walk(&spec.program, &config, Vec::new(), &mut memo, &mut en);
    en.terminals = all;
    en
}

fn walk(
    program: &str,
    config: &RunConfig,
    path: Vec<usize>,
    memo: &mut HashMap<String, BTreeSet<MatchMap>>,
    en: &mut Enumeration,
) -> BTreeSet<MatchMap> {
    let mut sched = PathScheduler {
        path: path.clone(),
        at: 0,
        matches: BTreeMap::new(),
        frontier: None,
    };
    let outcome = run_with_scheduler(program, config, &mut sched, &mut NullMonitor);
    let Some((state, n)) = sched.frontier.take() else {
        match outcome {
            Ok(r) => {
                en.outputs.insert(sched.matches.clone(), r.output_bytes());
            }
            Err(RunError::Deadlock { .. }) => {
                en.deadlocked.insert(sched.matches.clone());
            }
            Err(e) => panic!("enumeration run failed: {e}"),
        }
        return BTreeSet::from([sched.matches]);
    };
    if let Some(known) = memo.get(&state) {
        return known.clone();
    }
    let mut out = BTreeSet::new();
    for i in 0..n {
        let mut child = path.clone();
        child.push(i);
        out.extend(walk(program, config, child, memo, en));
    }
    memo.insert(state, out.clone());
    out
}

/// Messages accepted at `recv` over every feasible execution that agrees
/// with `prefix` (receive -> message).
pub fn brute_force_candidates(en: &Enumeration, prefix: &MatchMap, recv: EventRef) -> BTreeSet<MessageId> {
    en.terminals
        .iter()
        .filter(|m| prefix.iter().all(|(k, v)| m.get(k) == Some(v)))
        .filter_map(|m| m.get(&(recv.process.0, recv.event_no)).copied())
        .collect()
}

// ---------------------------------------------------------------------------
// Happens-before by transitive closure
// ---------------------------------------------------------------------------

/// `reach[a]` holds every event reachable from `a` over program-order and
/// message edges (messages matched by id).
pub fn closure(trace: &Trace) -> HashMap<EventRef, HashSet<EventRef>> {
    let mut succ: HashMap<EventRef, Vec<EventRef>> = HashMap::new();
    let mut send_by_msg = HashMap::new();
    for e in trace.iter() {
        if e.kind == EventKind::Send {
            send_by_msg.insert(e.msg.unwrap(), e.event_ref());
        }
    }
    for evs in &trace.events {
        for w in evs.windows(2) {
            succ.entry(w[0].event_ref()).or_default().push(w[1].event_ref());
        }
    }
    for e in trace.iter() {
        if e.kind == EventKind::Recv {
            if let Some(s) = e.msg.and_then(|m| send_by_msg.get(&m)) {
                succ.entry(*s).or_default().push(e.event_ref());
            }
        }
    }
    let mut reach = HashMap::new();
    for e in trace.iter() {
        let start = e.event_ref();
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &y in succ.get(&x).map(Vec::as_slice).unwrap_or(&[]) {
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        reach.insert(start, seen);
    }
    reach
}

// ---------------------------------------------------------------------------
// Minimal consistent cut by exhaustive search
// ---------------------------------------------------------------------------

fn consistent(trace: &Trace, cut: &[i64]) -> bool {
    let inside = |r: EventRef| (r.event_no as i64) <= cut[r.process.0];
    let sends: HashMap<MessageId, EventRef> =
        trace.iter().filter(|e| e.kind == EventKind::Send).map(|e| (e.msg.unwrap(), e.event_ref())).collect();
    trace.iter().filter(|e| e.kind == EventKind::Recv).all(|e| {
        !inside(e.event_ref()) || sends.get(&e.msg.unwrap()).is_some_and(|s| inside(*s))
    })
}

/// Enumerates every per-process prefix vector containing `anchor`, keeps
/// the consistent ones and returns the one with the fewest events, after
/// checking that it lies below every other consistent cut.
pub fn minimal_cut(trace: &Trace, anchor: EventRef) -> Vec<i64> {
    let lens: Vec<i64> = trace.events.iter().map(|e| e.len() as i64).collect();
    let mut all = Vec::new();
    let mut cur: Vec<i64> = vec![-1; lens.len()];
    loop {
        if cur[anchor.process.0] >= anchor.event_no as i64 && consistent(trace, &cur) {
            all.push(cur.clone());
        }
        let mut i = 0;
        loop {
            if i == lens.len() {
                let best = all.iter().min_by_key(|c| c.iter().sum::<i64>()).unwrap().clone();
                for c in &all {
                    assert!(best.iter().zip(c).all(|(a, b)| a <= b), "no unique minimal cut");
                }
                return best;
            }
            cur[i] += 1;
            if cur[i] < lens[i] {
                break;
            }
            cur[i] = -1;
            i += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Sequential Poisson reference
// ---------------------------------------------------------------------------

/// Jacobi sweeps for `-Δu = 1` on an `n x n` interior grid, zero boundary.
pub fn jacobi_reference(n: usize, iters: usize) -> Vec<f64> {
    let h = 1.0 / (n as f64 + 1.0);
    let at = |u: &[f64], i: isize, j: isize| -> f64 {
        if i < 0 || j < 0 || i >= n as isize || j >= n as isize {
            0.0
        } else {
            u[i as usize * n + j as usize]
        }
    };
    let mut u = vec![0.0; n * n];
    for _ in 0..iters {
        let mut next = vec![0.0; n * n];
        for i in 0..n as isize {
            for j in 0..n as isize {
                next[i as usize * n + j as usize] =
                    0.25 * (at(&u, i - 1, j) + at(&u, i + 1, j) + at(&u, i, j - 1) + at(&u, i, j + 1) + h * h);
            }
        }
        u = next;
    }
    u
}

pub fn f64s(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

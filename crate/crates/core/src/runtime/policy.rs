use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Action, KernelView, Scheduler};

/// The seeded policy.
///
/// Non-receive operations run eagerly, lowest rank first. Receives are only
/// resolved once every live process is parked on a receive; then the lowest
/// rank with a deliverable message goes. With `k >= 2` candidates (sorted by
/// sender, seq) the index is `next_u64 % k` from a ChaCha8 stream seeded with
/// the run seed; a single candidate consumes no randomness.
pub struct LazyScheduler {
    rng: ChaCha8Rng,
}

impl LazyScheduler {
    pub fn new(seed: u64) -> LazyScheduler {
        LazyScheduler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Picks the receive match the seeded rule makes at a stall.
    pub fn choose(&mut self, view: &KernelView) -> Action {
        match view.enabled_receives().next() {
            Some((p, _, _, candidates)) => {
                let k = candidates.len();
                let i = if k >= 2 { (self.rng.next_u64() % k as u64) as usize } else { 0 };
                Action::Deliver(p, candidates[i])
            }
            None => Action::Stop,
        }
    }
}

impl Scheduler for LazyScheduler {
    fn next(&mut self, view: &KernelView) -> Action {
        match view.first_ready() {
            Some(p) => Action::Step(p),
            None => self.choose(view),
        }
    }
}

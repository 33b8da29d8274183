//! Bandit learners and the contract the evaluators drive them through.

mod fixed;
mod linucb;
mod spec;
mod ucb;

pub use fixed::{FixedPolicy, RandomPolicy};
pub use linucb::LinUcb;
pub use spec::{AlgoSpec, ConfiguredAlgorithm};
pub use ucb::Ucb;

use rand::{Rng as _, RngCore};

/// A stateful contextual bandit learner.
///
/// `choose` never mutates the learner; all randomness it needs (tie-breaks,
/// randomized policies) comes from the generator the caller passes in, which
/// keeps every evaluation reproducible from its seed.
pub trait BanditAlgorithm: Send {
    fn n_actions(&self) -> usize;

    /// Picks an action in `[0, n_actions())` for `context`.
    fn choose(&self, context: &[f64], rng: &mut dyn RngCore) -> usize;

    /// Reveals the reward of `action` in `context`.
    fn learn(&mut self, context: &[f64], action: usize, reward: bool);
}

impl<A: BanditAlgorithm + ?Sized> BanditAlgorithm for Box<A> {
    fn n_actions(&self) -> usize {
        (**self).n_actions()
    }

    fn choose(&self, context: &[f64], rng: &mut dyn RngCore) -> usize {
        (**self).choose(context, rng)
    }

    fn learn(&mut self, context: &[f64], action: usize, reward: bool) {
        (**self).learn(context, action, reward)
    }
}

/// Produces learners in their initial state.
pub trait AlgorithmFactory: Sync {
    fn fresh(&self) -> Box<dyn BanditAlgorithm>;
}

impl<F> AlgorithmFactory for F
where
    F: Fn() -> Box<dyn BanditAlgorithm> + Sync,
{
    fn fresh(&self) -> Box<dyn BanditAlgorithm> {
        self()
    }
}

/// Index of the largest score; exact ties are broken uniformly at random.
/// The generator is only consumed when a tie actually occurs.
pub(crate) fn argmax_random_tie(scores: &[f64], rng: &mut dyn RngCore) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut best_idx = 0;
    let mut ties = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if s > best {
            best = s;
            best_idx = i;
            ties = 1;
        } else if s == best {
            ties += 1;
        }
    }
    if ties <= 1 {
        return best_idx;
    }
    let pick = rng.random_range(0..ties);
    scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == best)
        .nth(pick)
        .map(|(i, _)| i)
        .unwrap_or(best_idx)
}

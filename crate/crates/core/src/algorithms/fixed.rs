use std::fmt;
use std::sync::Arc;

use rand::{Rng as _, RngCore};

use super::BanditAlgorithm;

type Rule = dyn Fn(&[f64]) -> usize + Send + Sync;

/// A static policy: a deterministic map from context to action that never
/// learns.
#[derive(Clone)]
pub struct FixedPolicy {
    k: usize,
    rule: Arc<Rule>,
}

impl FixedPolicy {
    pub fn new<F>(k: usize, rule: F) -> Self
    where
        F: Fn(&[f64]) -> usize + Send + Sync + 'static,
    {
        assert!(k >= 1);
        FixedPolicy {
            k,
            rule: Arc::new(rule),
        }
    }

    /// Always plays `action`.
    pub fn constant(k: usize, action: usize) -> Self {
        assert!(action < k, "action {action} outside [0, {k})");
        FixedPolicy::new(k, move |_| action)
    }
}

impl fmt::Debug for FixedPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FixedPolicy")
            .field("k", &self.k)
            .finish_non_exhaustive()
    }
}

impl BanditAlgorithm for FixedPolicy {
    fn n_actions(&self) -> usize {
        self.k
    }

    fn choose(&self, context: &[f64], _rng: &mut dyn RngCore) -> usize {
        let a = (self.rule)(context);
        assert!(
            a < self.k,
            "fixed policy rule returned action {a} outside [0, {})",
            self.k
        );
        a
    }

    fn learn(&mut self, _context: &[f64], _action: usize, _reward: bool) {}
}

/// Uniformly random action every round; never learns.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    k: usize,
}

impl RandomPolicy {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1);
        RandomPolicy { k }
    }
}

impl BanditAlgorithm for RandomPolicy {
    fn n_actions(&self) -> usize {
        self.k
    }

    fn choose(&self, _context: &[f64], rng: &mut dyn RngCore) -> usize {
        if self.k == 1 {
            return 0;
        }
        rng.random_range(0..self.k)
    }

    fn learn(&mut self, _context: &[f64], _action: usize, _reward: bool) {}
}

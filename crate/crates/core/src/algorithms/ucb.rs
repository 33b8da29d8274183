use rand::{Rng as _, RngCore};

use super::{argmax_random_tie, BanditAlgorithm};

/// UCB1 with a multiplicative exploration coefficient:
/// `score_a = s_a / n_a + alpha * sqrt(2 ln t / n_a)`.
///
/// The context is ignored. Arms that were never pulled are played first.
#[derive(Debug, Clone)]
pub struct Ucb {
    alpha: f64,
    pulls: Vec<u64>,
    rewards: Vec<f64>,
    steps: u64,
}

impl Ucb {
    pub fn new(k: usize, alpha: f64) -> Self {
        assert!(k >= 1, "UCB needs at least one action");
        Ucb {
            alpha,
            pulls: vec![0; k],
            rewards: vec![0.0; k],
            steps: 0,
        }
    }

    pub fn pulls(&self) -> &[u64] {
        &self.pulls
    }

    pub fn reward_sums(&self) -> &[f64] {
        &self.rewards
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Builds a state with given counts, mainly for tests.
    pub fn from_counts(alpha: f64, pulls: Vec<u64>, rewards: Vec<f64>) -> Self {
        assert_eq!(pulls.len(), rewards.len());
        let steps = pulls.iter().sum();
        Ucb {
            alpha,
            pulls,
            rewards,
            steps,
        }
    }

    pub fn scores(&self) -> Vec<f64> {
        let log_t = (self.steps as f64).ln();
        self.pulls
            .iter()
            .zip(&self.rewards)
            .map(|(&n, &s)| {
                let n = n as f64;
                s / n + self.alpha * (2.0 * log_t / n).sqrt()
            })
            .collect()
    }
}

impl BanditAlgorithm for Ucb {
    fn n_actions(&self) -> usize {
        self.pulls.len()
    }

    fn choose(&self, _context: &[f64], rng: &mut dyn RngCore) -> usize {
        let unpulled = self.pulls.iter().filter(|&&n| n == 0).count();
        if unpulled > 0 {
            let pick = rng.random_range(0..unpulled);
            return self
                .pulls
                .iter()
                .enumerate()
                .filter(|(_, &n)| n == 0)
                .nth(pick)
                .map(|(i, _)| i)
                .unwrap_or(0);
        }
        argmax_random_tie(&self.scores(), rng)
    }

    fn learn(&mut self, _context: &[f64], action: usize, reward: bool) {
        self.pulls[action] += 1;
        if reward {
            self.rewards[action] += 1.0;
        }
        self.steps += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_stream;

    #[test]
    fn unpulled_arm_first() {
        let ucb = Ucb::from_counts(1.0, vec![0, 3, 3], vec![0.0, 3.0, 3.0]);
        let mut rng = rng_stream(0, 0);
        for _ in 0..20 {
            assert_eq!(ucb.choose(&[], &mut rng), 0);
        }
    }

    #[test]
    fn higher_mean_wins_with_equal_bonus() {
        let ucb = Ucb::from_counts(1.0, vec![10, 10], vec![9.0, 1.0]);
        assert_eq!(ucb.steps(), 20);
        let bonus = (2.0 * 20f64.ln() / 10.0).sqrt();
        let s = ucb.scores();
        assert!((s[0] - (0.9 + bonus)).abs() < 1e-12);
        assert!((s[1] - (0.1 + bonus)).abs() < 1e-12);
        assert_eq!(ucb.choose(&[], &mut rng_stream(0, 0)), 0);
    }

    #[test]
    fn equal_state_breaks_ties_uniformly() {
        let k = 4;
        let ucb = Ucb::from_counts(1.0, vec![5; k], vec![2.0; k]);
        let mut rng = rng_stream(11, 0);
        let n = 10_000;
        let mut counts = vec![0usize; k];
        for _ in 0..n {
            counts[ucb.choose(&[], &mut rng)] += 1;
        }
        let p = 1.0 / k as f64;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() < 3.0 * sd);
        }
    }

    #[test]
    fn plays_every_arm_in_first_k_rounds() {
        let k = 7;
        let mut ucb = Ucb::new(k, 1.0);
        let mut rng = rng_stream(5, 0);
        for _ in 0..k {
            let a = ucb.choose(&[], &mut rng);
            ucb.learn(&[], a, true);
        }
        assert!(ucb.pulls().iter().all(|&n| n == 1));
        assert_eq!(ucb.steps(), ucb.pulls().iter().sum::<u64>());
    }
}

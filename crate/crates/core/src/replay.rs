//! Rejection-sampling replay of a learner over a uniformly logged dataset.

use rand::seq::{index, SliceRandom};
use rand::RngCore;
use rayon::prelude::*;

use crate::algorithms::{AlgorithmFactory, BanditAlgorithm};
use crate::data::{LoggedDataset, Logging};
use crate::error::{Error, Result};
use crate::rng::{purpose, Seed};
use crate::stats::MeanStd;

#[derive(Debug, Clone, Copy, Default)]
pub struct ReplayOptions {
    /// Replay even when the log is not tagged as uniformly logged.
    pub force: bool,
    /// Keep the indices of accepted records.
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayResult {
    pub g_hat: f64,
    /// Number of accepted records.
    pub accepted: usize,
    /// Number of records scanned.
    pub total: usize,
    /// Sum of accepted rewards.
    pub clicks: u64,
    pub accepted_indices: Option<Vec<usize>>,
}

impl ReplayResult {
    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.total as f64
    }
}

/// Running state of one replay pass. The learner only ever sees the records
/// whose logged action matches its own choice.
pub(crate) struct Replayer<A> {
    pub algo: A,
    pub clicks: u64,
    pub accepted: usize,
    pub scanned: usize,
}

impl<A: BanditAlgorithm> Replayer<A> {
    pub fn new(algo: A) -> Self {
        Replayer {
            algo,
            clicks: 0,
            accepted: 0,
            scanned: 0,
        }
    }

    pub fn offer(
        &mut self,
        context: &[f64],
        action: usize,
        reward: bool,
        rng: &mut dyn RngCore,
    ) -> bool {
        self.scanned += 1;
        if self.algo.choose(context, rng) != action {
            return false;
        }
        self.algo.learn(context, action, reward);
        self.clicks += u64::from(reward);
        self.accepted += 1;
        true
    }

    pub fn estimate(&self) -> Option<f64> {
        (self.accepted > 0).then(|| self.clicks as f64 / self.accepted as f64)
    }
}

pub(crate) fn check_logging(dataset: &LoggedDataset, force: bool) -> Result<()> {
    if dataset.logging() != Logging::Uniform && !force {
        return Err(Error::NonUniformLogging);
    }
    Ok(())
}

/// Replays a fresh learner over `dataset` in record order.
///
/// `rng` only feeds the learner's own randomness (tie-breaks, randomized
/// policies).
pub fn replay_evaluate(
    factory: &dyn AlgorithmFactory,
    dataset: &LoggedDataset,
    rng: &mut dyn RngCore,
    options: ReplayOptions,
) -> Result<ReplayResult> {
    check_logging(dataset, options.force)?;
    replay_with(factory.fresh(), dataset, rng, options.trace).map(|(res, _)| res)
}

/// Replays a given learner and hands it back with the result.
pub fn replay_with<A: BanditAlgorithm>(
    algo: A,
    dataset: &LoggedDataset,
    rng: &mut dyn RngCore,
    trace: bool,
) -> Result<(ReplayResult, A)> {
    let mut replayer = Replayer::new(algo);
    let mut indices = trace.then(Vec::new);
    for (i, r) in dataset.records().iter().enumerate() {
        if replayer.offer(&r.context, r.action, r.reward, rng) {
            if let Some(ix) = indices.as_mut() {
                ix.push(i);
            }
        }
    }
    let g_hat = replayer.estimate().ok_or(Error::NoAcceptedRecords)?;
    let result = ReplayResult {
        g_hat,
        accepted: replayer.accepted,
        total: replayer.scanned,
        clicks: replayer.clicks,
        accepted_indices: indices,
    };
    Ok((result, replayer.algo))
}

/// Mean number of accepted records when replaying `t` uniformly logged
/// records over `k` actions.
pub fn expected_acceptance(t: usize, k: usize) -> f64 {
    assert!(k >= 1);
    t as f64 / k as f64
}

#[derive(Debug, Clone)]
pub struct PermutationTruth {
    pub mean: f64,
    pub std_err: f64,
    /// Estimates of the permutations that accepted at least one record.
    pub estimates: Vec<f64>,
    /// Permutations that accepted nothing.
    pub empty: usize,
}

/// Averages replay estimates over `n_perm` uniformly shuffled copies of
/// `dataset`. Permutation `p` uses the streams of `seed.child(p)`.
pub fn permutation_ground_truth(
    dataset: &LoggedDataset,
    factory: &dyn AlgorithmFactory,
    n_perm: usize,
    seed: Seed,
    options: ReplayOptions,
) -> Result<PermutationTruth> {
    if n_perm == 0 {
        return Err(Error::OutOfRange {
            name: "n_perm",
            msg: "must be at least 1".into(),
        });
    }
    check_logging(dataset, options.force)?;
    let outcomes: Vec<Option<f64>> = (0..n_perm)
        .into_par_iter()
        .map(|p| {
            let s = seed.child(p as u64);
            let shuffled = shuffle(dataset, &mut s.stream(purpose::SHUFFLE));
            let mut rng = s.stream(purpose::POLICY);
            replay_with(factory.fresh(), &shuffled, &mut rng, false)
                .ok()
                .map(|(r, _)| r.g_hat)
        })
        .collect();
    let estimates: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let empty = n_perm - estimates.len();
    if estimates.is_empty() {
        return Err(Error::AllPermutationsEmpty);
    }
    let stats = MeanStd::of(&estimates);
    Ok(PermutationTruth {
        mean: stats.mean,
        std_err: stats.std_err(),
        estimates,
        empty,
    })
}

/// A uniformly shuffled copy of the dataset.
pub fn shuffle(dataset: &LoggedDataset, rng: &mut dyn RngCore) -> LoggedDataset {
    let mut records = dataset.records().to_vec();
    records.shuffle(rng);
    dataset
        .with_records(records)
        .expect("same records, same header")
}

/// `n` records drawn without replacement, in their original order.
pub fn subsample(
    dataset: &LoggedDataset,
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<LoggedDataset> {
    if n == 0 || n > dataset.len() {
        return Err(Error::OutOfRange {
            name: "n",
            msg: format!("{n} not in [1, {}]", dataset.len()),
        });
    }
    let mut picked = index::sample(rng, dataset.len(), n).into_vec();
    picked.sort_unstable();
    let records = picked
        .into_iter()
        .map(|i| dataset.records()[i].clone())
        .collect();
    dataset.with_records(records)
}

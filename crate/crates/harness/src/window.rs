//! Splitting a stream into windows of constant action pool, and the
//! per-window subsampling experiment.

use std::io::Write;

use bred_core::bred::{bred_evaluate, BredConfig};
use bred_core::format::{fmt_f64, PooledDataset};
use bred_core::replay::{permutation_ground_truth, replay_evaluate, subsample, ReplayOptions};
use bred_core::rng::{purpose, Seed};
use bred_core::{AlgoSpec, LoggedDataset, Record};
use log::warn;
use rayon::prelude::*;

use crate::error::Result;

/// A half-open run `[start, end)` of records sharing one action pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub start: usize,
    pub end: usize,
    /// Sorted, deduplicated action ids.
    pub action_pool: Vec<usize>,
}

impl Window {
    /// T_i.
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    /// K_i.
    pub fn pool_size(&self) -> usize {
        self.action_pool.len()
    }
}

fn normalize(pool: &Option<Vec<usize>>, k: usize) -> Vec<usize> {
    match pool {
        Some(ids) => {
            let mut ids = ids.clone();
            ids.sort_unstable();
            ids.dedup();
            ids
        }
        None => (0..k).collect(),
    }
}

/// Maximal runs of records with the same pool. `None` stands for all `k`
/// actions.
pub fn partition_by_action_pool(pools: &[Option<Vec<usize>>], k: usize) -> Vec<Window> {
    let mut windows: Vec<Window> = Vec::new();
    for (i, pool) in pools.iter().enumerate() {
        let pool = normalize(pool, k);
        match windows.last_mut() {
            Some(w) if w.action_pool == pool => w.end = i + 1,
            _ => windows.push(Window {
                start: i,
                end: i + 1,
                action_pool: pool,
            }),
        }
    }
    windows
}

/// The records of `window` with actions renumbered to positions in its pool.
pub fn window_dataset(
    dataset: &LoggedDataset,
    window: &Window,
) -> bred_core::Result<LoggedDataset> {
    let records = dataset.records()[window.start..window.end]
        .iter()
        .map(|r| {
            let local = window
                .action_pool
                .binary_search(&r.action)
                .expect("record action belongs to its pool");
            Record::new(r.context.clone(), local, r.reward)
        })
        .collect();
    LoggedDataset::new(records, dataset.d(), window.pool_size(), dataset.logging())
}

#[derive(Debug, Clone)]
pub struct WindowedConfig {
    pub permutations: usize,
    pub bred: BredConfig,
}

impl Default for WindowedConfig {
    fn default() -> Self {
        WindowedConfig {
            permutations: 100,
            bred: BredConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRow {
    pub window: usize,
    pub t: usize,
    pub k: usize,
    pub truth: f64,
    pub replay: f64,
    pub bred: f64,
    pub bred_lo: Option<f64>,
    pub bred_hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WindowOutcome {
    Done(WindowRow),
    Skipped { window: usize, reason: String },
}

/// For each window: permutation ground truth on the whole window, then replay
/// and BRED on a subsample of `T_i / K_i` records.
pub fn run_windowed_experiment(
    data: &PooledDataset,
    algo: &AlgoSpec,
    config: &WindowedConfig,
    seed: Seed,
) -> Result<Vec<WindowOutcome>> {
    let windows = partition_by_action_pool(&data.pools, data.dataset.k());
    let outcomes = windows
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let out = evaluate_window(data, w, i, algo, config, seed.child(i as u64));
            if let WindowOutcome::Skipped { reason, .. } = &out {
                warn!("window {i} [{}, {}) skipped: {reason}", w.start, w.end);
            }
            out
        })
        .collect();
    Ok(outcomes)
}

fn evaluate_window(
    data: &PooledDataset,
    w: &Window,
    id: usize,
    algo: &AlgoSpec,
    config: &WindowedConfig,
    seed: Seed,
) -> WindowOutcome {
    let skip = |reason: String| WindowOutcome::Skipped { window: id, reason };
    let (t, k) = (w.len(), w.pool_size());
    if t < k {
        return skip(format!("T_i={t} < K_i={k}"));
    }
    let run = || -> std::result::Result<WindowRow, bred_core::Error> {
        let ds = window_dataset(&data.dataset, w)?;
        let factory = algo.configure(k, ds.d())?;
        let options = ReplayOptions {
            force: config.bred.force,
            trace: false,
        };
        let truth =
            permutation_ground_truth(&ds, &factory, config.permutations, seed.child(0), options)?;
        let small = subsample(&ds, t / k, &mut seed.child(1).stream(purpose::RESAMPLE))?;
        let replay = replay_evaluate(
            &factory,
            &small,
            &mut seed.child(2).stream(purpose::POLICY),
            options,
        )?;
        let bred = bred_evaluate(&factory, &small, &config.bred, seed.child(3))?;
        Ok(WindowRow {
            window: id,
            t,
            k,
            truth: truth.mean,
            replay: replay.g_hat,
            bred: bred.g_hat,
            bred_lo: bred.confidence_region.map(|r| r.lo),
            bred_hi: bred.confidence_region.map(|r| r.hi),
        })
    };
    match run() {
        Ok(row) => WindowOutcome::Done(row),
        Err(e) => skip(e.to_string()),
    }
}

pub const WINDOW_HEADER: [&str; 8] = [
    "window",
    "T_i",
    "K_i",
    "truth",
    "replay_est",
    "bred_est",
    "bred_lo",
    "bred_hi",
];

pub fn write_window_csv<W: Write>(outcomes: &[WindowOutcome], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(WINDOW_HEADER)?;
    for o in outcomes {
        if let WindowOutcome::Done(r) = o {
            let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
            out.write_record([
                r.window.to_string(),
                r.t.to_string(),
                r.k.to_string(),
                fmt_f64(r.truth),
                fmt_f64(r.replay),
                fmt_f64(r.bred),
                opt(r.bred_lo),
                opt(r.bred_hi),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

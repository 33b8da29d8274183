//! Estimation-error sweeps over dataset sizes.
//!
//! For every size `T` the ground truth is the CTR of the learner played
//! online against the model for `T` rounds. Every `(T, seed)` cell draws a
//! fresh uniform log of size `T` and evaluates each method on it.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use bred_core::bred::{bred_evaluate, Bandwidth, BredConfig};
use bred_core::format::fmt_f64;
use bred_core::replay::{replay_evaluate, ReplayOptions};
use bred_core::rng::{purpose, Seed};
use bred_core::stats::MeanStd;
use bred_core::synthetic::ground_truth_ctr;
use bred_core::{AlgoSpec, SyntheticModel};
use rayon::prelude::*;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Replay,
    Bred,
    BredNoJitter,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Replay, Method::Bred, Method::BredNoJitter];

    pub fn name(self) -> &'static str {
        match self {
            Method::Replay => "replay",
            Method::Bred => "bred",
            Method::BredNoJitter => "bred_nojitter",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}` (replay, bred, bred_nojitter)"))
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Dataset sizes, strictly increasing.
    pub sizes: Vec<usize>,
    /// Number of independent logs per size.
    pub seeds: usize,
    pub methods: Vec<Method>,
    pub algo: AlgoSpec,
    /// Bootstrap replicates per BRED evaluation.
    pub replicates: usize,
    /// Jitter rule for `bred`; `bred_nojitter` always uses none.
    pub bandwidth: Bandwidth,
    /// Online runs averaged for each ground-truth value.
    pub truth_runs: usize,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(HarnessError::Spec(m.into()));
        if self.sizes.is_empty() || self.sizes[0] == 0 {
            return err("sizes must be non-empty and positive");
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return err("sizes must be strictly increasing");
        }
        if self.seeds == 0 {
            return err("seeds must be at least 1");
        }
        if self.methods.is_empty() {
            return err("at least one method is required");
        }
        if self.replicates == 0 || self.truth_runs == 0 {
            return err("replicates and truth runs must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub t: usize,
    pub seed: usize,
    pub truth: f64,
    /// `None` when the evaluator failed on this cell.
    pub estimate: Option<f64>,
    /// Accepted records (replay) or mean accepted records per replicate (BRED).
    pub accepted: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn abs_error(&self) -> Option<f64> {
        self.estimate.map(|e| (e - self.truth).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: Method,
    pub t: usize,
    pub n: usize,
    pub mean_abs_error: f64,
    pub std_err: f64,
    pub failed: usize,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Ground truth per size, with its standard error.
    pub truths: Vec<(usize, f64, f64)>,
}

impl SweepResult {
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut keys: Vec<(Method, usize)> = self.rows.iter().map(|r| (r.method, r.t)).collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|(method, t)| {
                let cell: Vec<&SweepRow> = self
                    .rows
                    .iter()
                    .filter(|r| r.method == method && r.t == t)
                    .collect();
                let errors: Vec<f64> = cell.iter().filter_map(|r| r.abs_error()).collect();
                let stats = MeanStd::of(&errors);
                AggregateRow {
                    method,
                    t,
                    n: errors.len(),
                    mean_abs_error: stats.mean,
                    std_err: stats.std_err(),
                    failed: cell.len() - errors.len(),
                }
            })
            .collect()
    }

    pub fn aggregate_cell(&self, method: Method, t: usize) -> Option<AggregateRow> {
        self.aggregate()
            .into_iter()
            .find(|a| a.method == method && a.t == t)
    }
}

/// Seeds: truth of size `T` uses `seed.child(0).child(T)`; the log of cell
/// `(T, s)` uses `seed.child(1).child(T).child(s)`; its evaluators use
/// `seed.child(2).child(T).child(s)`, shared by both BRED variants so they
/// differ only in the jitter.
pub fn run_error_sweep(
    model: &SyntheticModel,
    spec: &SweepSpec,
    seed: Seed,
) -> Result<SweepResult> {
    spec.validate()?;
    let factory = spec.algo.configure(model.k(), model.d())?;

    let truths: Vec<(usize, f64, f64)> = spec
        .sizes
        .par_iter()
        .map(|&t| {
            ground_truth_ctr(
                model,
                &factory,
                t,
                spec.truth_runs,
                seed.child(0).child(t as u64),
            )
            .map(|g| (t, g.mean, g.std_err))
        })
        .collect::<bred_core::Result<_>>()?;

    let cells: Vec<(usize, f64, usize, Method)> = truths
        .iter()
        .flat_map(|&(t, truth, _)| {
            (0..spec.seeds).flat_map(move |s| spec.methods.iter().map(move |&m| (t, truth, s, m)))
        })
        .collect();

    let rows = cells
        .par_iter()
        .map(|&(t, truth, s, method)| {
            let log_seed = seed.child(1).child(t as u64).child(s as u64);
            let eval_seed = seed.child(2).child(t as u64).child(s as u64);
            let outcome = model
                .simulate_log(t, &mut log_seed.rng())
                .and_then(|log| evaluate(method, &factory, &log, spec, eval_seed));
            let (estimate, accepted, error) = match outcome {
                Ok((e, a)) => (Some(e), Some(a), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            SweepRow {
                method,
                t,
                seed: s,
                truth,
                estimate,
                accepted,
                error,
            }
        })
        .collect();

    Ok(SweepResult { rows, truths })
}

fn evaluate(
    method: Method,
    factory: &dyn bred_core::AlgorithmFactory,
    log: &bred_core::LoggedDataset,
    spec: &SweepSpec,
    seed: Seed,
) -> bred_core::Result<(f64, f64)> {
    match method {
        Method::Replay => {
            let r = replay_evaluate(
                factory,
                log,
                &mut seed.stream(purpose::POLICY),
                ReplayOptions::default(),
            )?;
            Ok((r.g_hat, r.accepted as f64))
        }
        Method::Bred | Method::BredNoJitter => {
            let bandwidth = if method == Method::Bred {
                spec.bandwidth
            } else {
                Bandwidth::None
            };
            let cfg = BredConfig {
                replicates: spec.replicates,
                bandwidth,
                ..BredConfig::default()
            };
            let report = bred_evaluate(factory, log, &cfg, seed)?;
            let counts = report.accepted_counts();
            let mean_acc = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
            Ok((report.g_hat, mean_acc))
        }
    }
}

pub const LONG_HEADER: [&str; 8] = [
    "method",
    "T",
    "seed",
    "estimate",
    "truth",
    "abs_error",
    "accepted",
    "status",
];
pub const AGG_HEADER: [&str; 6] = ["method", "T", "n", "mean_abs_error", "std_err", "failed"];

pub fn write_long_csv<W: Write>(result: &SweepResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(LONG_HEADER)?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for r in &result.rows {
        out.write_record([
            r.method.name().to_string(),
            r.t.to_string(),
            r.seed.to_string(),
            opt(r.estimate),
            fmt_f64(r.truth),
            opt(r.abs_error()),
            opt(r.accepted),
            if r.error.is_some() {
                "failed".into()
            } else {
                "ok".into()
            },
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(AGG_HEADER)?;
    for a in rows {
        out.write_record([
            a.method.name().to_string(),
            a.t.to_string(),
            a.n.to_string(),
            fmt_f64(a.mean_abs_error),
            fmt_f64(a.std_err),
            a.failed.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

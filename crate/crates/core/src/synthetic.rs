//! Linear click model used as ground truth.
//!
//! Ten actions over 15-dimensional contexts. A context is `x = c + n` where
//! the signal `c` has per-coordinate variance 1 and the nuisance `n` variance
//! 1/2. The click probability of action `i` is `clamp(q_i + w_i . c, 0, 1)`,
//! so learners only see a noisy view of what drives clicks. The first four
//! actions are "universal" (`q_i ~ U(0.4, 0.5)`, `w_i = 0`), the other six
//! "specific" (`q_i ~ U(0.1, 0.2)`, `m` nonzero weights of variance 1/5).
//!
//! All Gaussian parameters above are variances.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::index;
use rand::{Rng as _, RngCore};
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use statrs::distribution::{Continuous, ContinuousCDF, Normal as StatNormal};

use crate::algorithms::AlgorithmFactory;
use crate::data::{LoggedDataset, Logging, Record};
use crate::error::{Error, Result};
use crate::format::PooledDataset;
use crate::rng::{purpose, Seed};
use crate::stats::MeanStd;

pub const N_ACTIONS: usize = 10;
pub const DIM: usize = 15;
pub const UNIVERSAL_COUNT: usize = 4;
pub const SPECIFIC_COUNT: usize = 6;
pub const DEFAULT_RELEVANT_WEIGHTS: usize = 5;

pub const SIGNAL_VARIANCE: f64 = 1.0;
pub const NUISANCE_VARIANCE: f64 = 0.5;
pub const WEIGHT_VARIANCE: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticModel {
    q: Vec<f64>,
    weights: Vec<Vec<f64>>,
    m: usize,
}

impl SyntheticModel {
    /// Draws a model with `m` relevant weights per specific action.
    pub fn generate(rng: &mut dyn RngCore, m: usize) -> Result<Self> {
        if m == 0 || m > DIM {
            return Err(Error::OutOfRange {
                name: "m",
                msg: format!("{m} not in [1, {DIM}]"),
            });
        }
        let weight = Normal::new(0.0, WEIGHT_VARIANCE.sqrt()).unwrap();
        let mut q = Vec::with_capacity(N_ACTIONS);
        let mut weights = Vec::with_capacity(N_ACTIONS);
        for _ in 0..UNIVERSAL_COUNT {
            q.push(rng.random_range(0.4..0.5));
            weights.push(vec![0.0; DIM]);
        }
        for _ in 0..SPECIFIC_COUNT {
            q.push(rng.random_range(0.1..0.2));
            let mut row = vec![0.0; DIM];
            for j in index::sample(rng, DIM, m) {
                // a Normal draw is zero with probability zero, but keep the count exact
                let mut v: f64 = weight.sample(rng);
                while v == 0.0 {
                    v = weight.sample(rng);
                }
                row[j] = v;
            }
            weights.push(row);
        }
        Ok(SyntheticModel { q, weights, m })
    }

    /// Builds a model from explicit parameters (any K, d).
    pub fn from_parts(q: Vec<f64>, weights: Vec<Vec<f64>>, m: usize) -> Result<Self> {
        if q.is_empty() || q.len() != weights.len() {
            return Err(Error::InvalidDataset(
                "q and weight rows must have equal, nonzero length".into(),
            ));
        }
        let d = weights[0].len();
        if weights.iter().any(|w| w.len() != d) {
            return Err(Error::InvalidDataset("weight rows differ in length".into()));
        }
        Ok(SyntheticModel { q, weights, m })
    }

    pub fn k(&self) -> usize {
        self.q.len()
    }

    pub fn d(&self) -> usize {
        self.weights[0].len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn weights(&self, action: usize) -> &[f64] {
        &self.weights[action]
    }

    /// Draws `(x, c)`: the observed context and its signal component.
    pub fn draw_context(&self, rng: &mut dyn RngCore) -> (Vec<f64>, Vec<f64>) {
        let nuisance_sd = NUISANCE_VARIANCE.sqrt();
        let mut x = Vec::with_capacity(self.d());
        let mut c = Vec::with_capacity(self.d());
        for _ in 0..self.d() {
            let cj: f64 = StandardNormal.sample(rng);
            let nj: f64 = StandardNormal.sample(rng);
            c.push(cj * SIGNAL_VARIANCE.sqrt());
            x.push(cj * SIGNAL_VARIANCE.sqrt() + nj * nuisance_sd);
        }
        (x, c)
    }

    /// `clamp(q_a + w_a . c, 0, 1)`; the nuisance part of the context plays no role.
    pub fn click_probability(&self, action: usize, signal: &[f64]) -> f64 {
        let lin: f64 = self.weights[action]
            .iter()
            .zip(signal)
            .map(|(w, c)| w * c)
            .sum();
        (self.q[action] + lin).clamp(0.0, 1.0)
    }

    /// Expected click probability of `action` over the context distribution.
    ///
    /// `w_a . c` is exactly `N(0, |w_a|^2)`, so this is the mean of a normal
    /// clamped to `[0, 1]`, in closed form.
    pub fn expected_click_probability(&self, action: usize) -> f64 {
        let mu = self.q[action];
        let var: f64 = self.weights[action].iter().map(|w| w * w).sum::<f64>() * SIGNAL_VARIANCE;
        clamped_normal_mean(mu, var.sqrt())
    }

    /// Expected per-trial payoff of the uniformly random policy.
    pub fn expected_uniform_ctr(&self) -> f64 {
        (0..self.k())
            .map(|a| self.expected_click_probability(a))
            .sum::<f64>()
            / self.k() as f64
    }

    fn draw_record(&self, action: usize, rng: &mut dyn RngCore) -> Record {
        let (x, c) = self.draw_context(rng);
        let p = self.click_probability(action, &c);
        let reward = rng.random_bool(p);
        Record::new(x, action, reward)
    }

    /// `t` records logged by the uniform policy over all actions.
    pub fn simulate_log(&self, t: usize, rng: &mut dyn RngCore) -> Result<LoggedDataset> {
        if t == 0 {
            return Err(Error::OutOfRange {
                name: "T",
                msg: "must be at least 1".into(),
            });
        }
        let records = (0..t)
            .map(|_| {
                let a = rng.random_range(0..self.k());
                self.draw_record(a, rng)
            })
            .collect();
        LoggedDataset::new(records, self.d(), self.k(), Logging::Uniform)
    }

    /// A stream made of consecutive segments, each logged uniformly over its
    /// own action pool. Records carry their pool annotation.
    pub fn simulate_pooled(
        &self,
        segments: &[(Vec<usize>, usize)],
        rng: &mut dyn RngCore,
    ) -> Result<PooledDataset> {
        let mut records = Vec::new();
        let mut pools = Vec::new();
        for (pool, len) in segments {
            if pool.is_empty() || pool.iter().any(|&a| a >= self.k()) {
                return Err(Error::InvalidDataset(format!("invalid pool {pool:?}")));
            }
            for _ in 0..*len {
                let a = pool[rng.random_range(0..pool.len())];
                records.push(self.draw_record(a, rng));
                pools.push(Some(pool.clone()));
            }
        }
        let dataset = LoggedDataset::new(records, self.d(), self.k(), Logging::Uniform)?;
        Ok(PooledDataset { dataset, pools })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "k={} d={} m={}", self.k(), self.d(), self.m);
        let row = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:.16e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(s, "q {}", row(&self.q));
        for w in &self.weights {
            let _ = writeln!(s, "w {}", row(w));
        }
        s
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let (_, header) = lines
            .next()
            .ok_or_else(|| perr(1, "empty model file".into()))?;
        let header = header?;
        let mut k = None;
        let mut d = None;
        let mut m = None;
        for tok in header.split_whitespace() {
            let (key, v) = tok
                .split_once('=')
                .ok_or_else(|| perr(1, format!("bad token `{tok}`")))?;
            let v: usize = v
                .parse()
                .map_err(|_| perr(1, format!("bad value `{tok}`")))?;
            match key {
                "k" => k = Some(v),
                "d" => d = Some(v),
                "m" => m = Some(v),
                _ => return Err(perr(1, format!("unknown key `{key}`"))),
            }
        }
        let (k, d, m) = match (k, d, m) {
            (Some(k), Some(d), Some(m)) => (k, d, m),
            _ => return Err(perr(1, "header needs k, d and m".into())),
        };
        let mut q = None;
        let mut weights = Vec::new();
        for (i, line) in lines {
            let line = line?;
            let mut toks = line.split_whitespace();
            let tag = match toks.next() {
                Some(t) => t,
                None => continue,
            };
            let vals = toks
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| perr(i + 1, format!("bad float `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            match tag {
                "q" if vals.len() == k => q = Some(vals),
                "w" if vals.len() == d => weights.push(vals),
                _ => {
                    return Err(perr(
                        i + 1,
                        format!("unexpected `{tag}` row with {} values", vals.len()),
                    ))
                }
            }
        }
        let q = q.ok_or_else(|| perr(2, "missing q row".into()))?;
        if weights.len() != k {
            return Err(Error::DimensionMismatch {
                line: None,
                msg: format!("expected {k} weight rows, found {}", weights.len()),
            });
        }
        SyntheticModel::from_parts(q, weights, m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        SyntheticModel::from_reader(BufReader::new(fs::File::open(path)?))
    }
}

/// `E[clamp(mu + sigma Z, 0, 1)]` for standard normal `Z`.
pub fn clamped_normal_mean(mu: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return mu.clamp(0.0, 1.0);
    }
    let z = StatNormal::standard();
    let lo = (0.0 - mu) / sigma;
    let hi = (1.0 - mu) / sigma;
    (1.0 - z.cdf(hi)) + mu * (z.cdf(hi) - z.cdf(lo)) + sigma * (z.pdf(lo) - z.pdf(hi))
}

/// Per-trial payoff of playing a learner directly against the model.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub mean: f64,
    pub std_err: f64,
    pub per_run: Vec<f64>,
}

/// Plays a fresh learner against `model` for `t` rounds, revealing the reward
/// every round, `runs` times on independent streams; returns the mean CTR and
/// its standard error.
pub fn ground_truth_ctr(
    model: &SyntheticModel,
    factory: &dyn AlgorithmFactory,
    t: usize,
    runs: usize,
    seed: Seed,
) -> Result<GroundTruth> {
    if runs == 0 {
        return Err(Error::OutOfRange {
            name: "runs",
            msg: "must be at least 1".into(),
        });
    }
    if t == 0 {
        return Err(Error::OutOfRange {
            name: "T",
            msg: "must be at least 1".into(),
        });
    }
    let per_run: Vec<f64> = (0..runs)
        .into_par_iter()
        .map(|run| play_online(model, factory, t, seed.child(run as u64)))
        .collect();
    let stats = MeanStd::of(&per_run);
    Ok(GroundTruth {
        mean: stats.mean,
        std_err: stats.std_err(),
        per_run,
    })
}

/// One online run; returns the CTR over `t` rounds.
pub fn play_online(
    model: &SyntheticModel,
    factory: &dyn AlgorithmFactory,
    t: usize,
    seed: Seed,
) -> f64 {
    let mut algo = factory.fresh();
    let mut ctx_rng = seed.stream(purpose::CONTEXT);
    let mut reward_rng = seed.stream(purpose::REWARD);
    let mut policy_rng = seed.stream(purpose::POLICY);
    let mut clicks = 0u64;
    for _ in 0..t {
        let (x, c) = model.draw_context(&mut ctx_rng);
        let a = algo.choose(&x, &mut policy_rng);
        let r = reward_rng.random_bool(model.click_probability(a, &c));
        algo.learn(&x, a, r);
        clicks += u64::from(r);
    }
    clicks as f64 / t as f64
}

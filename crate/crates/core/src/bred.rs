//! Bootstrapped replay on expanded data.
//!
//! Each replicate draws `K * T` records with replacement from the log, adds
//! Gaussian jitter to every drawn context, and replays a fresh learner over
//! the result. Since only about one draw in `K` is accepted, the learner sees
//! about `T` interactions, the horizon the estimate is meant for, instead of
//! the `T / K` a plain replay gives it. The spread of the per-replicate
//! estimates yields a bootstrap distribution and a confidence region.

use rand::{Rng as _, RngCore};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::algorithms::AlgorithmFactory;
use crate::data::LoggedDataset;
use crate::error::{Error, Result};
use crate::replay::{check_logging, Replayer};
use crate::rng::{purpose, Seed};
use crate::stats::MeanStd;

/// Jitter bandwidth rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// `50 / sqrt(T)`.
    Auto,
    None,
    Fixed(f64),
}

impl Bandwidth {
    pub fn resolve(self, t: usize) -> f64 {
        match self {
            Bandwidth::Auto => default_bandwidth(t),
            Bandwidth::None => 0.0,
            Bandwidth::Fixed(h) => h,
        }
    }
}

impl std::str::FromStr for Bandwidth {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" => Ok(Bandwidth::Auto),
            "none" => Ok(Bandwidth::None),
            other => match other.parse::<f64>() {
                Ok(h) if h >= 0.0 && h.is_finite() => Ok(Bandwidth::Fixed(h)),
                _ => Err(format!(
                    "jitter must be auto, none or a bandwidth >= 0, got `{other}`"
                )),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BredConfig {
    /// Number of bootstrap replicates, B.
    pub replicates: usize,
    pub bandwidth: Bandwidth,
    /// Expanded size is `expansion_factor * T`; `None` uses the dataset's K.
    pub expansion_factor: Option<usize>,
    /// Confidence level of the reported region.
    pub level: f64,
    pub force: bool,
}

impl Default for BredConfig {
    fn default() -> Self {
        BredConfig {
            replicates: 30,
            bandwidth: Bandwidth::Auto,
            expansion_factor: None,
            level: 0.95,
            force: false,
        }
    }
}

/// `50 / sqrt(T)`.
pub fn default_bandwidth(t: usize) -> f64 {
    50.0 / (t as f64).sqrt()
}

/// `size` records drawn uniformly with replacement.
pub fn bootstrap_resample(
    dataset: &LoggedDataset,
    size: usize,
    rng: &mut dyn RngCore,
) -> Result<LoggedDataset> {
    if size == 0 {
        return Err(Error::OutOfRange {
            name: "size",
            msg: "must be at least 1".into(),
        });
    }
    let t = dataset.len();
    let records = (0..size)
        .map(|_| dataset.records()[rng.random_range(0..t)].clone())
        .collect();
    dataset.with_records(records)
}

/// Adds independent `N(0, h^2)` noise to every coordinate.
pub fn jitter(context: &[f64], h: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    let mut out = vec![0.0; context.len()];
    jitter_into(context, h, rng, &mut out);
    out
}

fn jitter_into(context: &[f64], h: f64, rng: &mut dyn RngCore, out: &mut [f64]) {
    if h == 0.0 {
        out.copy_from_slice(context);
        return;
    }
    for (o, &x) in out.iter_mut().zip(context) {
        let z: f64 = StandardNormal.sample(rng);
        *o = x + h * z;
    }
}

/// Outcome of one bootstrap replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Replicate {
    /// `None` when the replicate accepted nothing.
    pub estimate: Option<f64>,
    pub accepted: usize,
    pub clicks: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceRegion {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

impl ConfidenceRegion {
    pub fn contains(&self, g: f64) -> bool {
        self.lo <= g && g <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Mean of the included replicate estimates.
    pub g_hat: f64,
    /// All replicates in index order, including empty ones.
    pub replicates: Vec<Replicate>,
    /// Size of the original dataset, T.
    pub t: usize,
    /// `sqrt(T)` times the sample standard deviation of the included
    /// estimates, so that the standardized values have unit variance.
    pub sigma_hat: f64,
    pub bandwidth: f64,
    pub confidence_region: Option<ConfidenceRegion>,
    pub excluded_replicates: usize,
    /// True when the spread is zero or fewer than two replicates were
    /// included; no region is reported then.
    pub degenerate: bool,
}

impl EvalReport {
    /// Estimates of the replicates that accepted at least one record.
    pub fn replicate_estimates(&self) -> Vec<f64> {
        self.replicates.iter().filter_map(|r| r.estimate).collect()
    }

    pub fn accepted_counts(&self) -> Vec<usize> {
        self.replicates.iter().map(|r| r.accepted).collect()
    }

    pub fn standardized(&self) -> Result<StandardizedCdf> {
        if self.degenerate {
            return Err(Error::DegenerateDistribution);
        }
        Ok(StandardizedCdf::new(
            &self.replicate_estimates(),
            self.g_hat,
            self.sigma_hat,
            self.t,
        ))
    }

    pub fn confidence_region(&self, level: f64) -> Result<ConfidenceRegion> {
        confidence_region(self, level)
    }
}

/// Empirical distribution of `sqrt(T) (g_b - g_hat) / sigma_hat`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedCdf {
    sorted: Vec<f64>,
}

impl StandardizedCdf {
    pub fn new(estimates: &[f64], g_hat: f64, sigma_hat: f64, t: usize) -> Self {
        let scale = (t as f64).sqrt() / sigma_hat;
        let mut sorted: Vec<f64> = estimates.iter().map(|g| scale * (g - g_hat)).collect();
        sorted.sort_by(f64::total_cmp);
        StandardizedCdf { sorted }
    }

    pub fn values(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of standardized values `<= x`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&z| z <= x) as f64 / self.sorted.len() as f64
    }

    /// Smallest standardized value whose CDF reaches `p`.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        let rank = (p * n as f64).ceil() as usize;
        self.sorted[rank.clamp(1, n) - 1]
    }
}

/// Bootstrap-t region `[g - z_{1-a/2} s / sqrt(T), g - z_{a/2} s / sqrt(T)]`
/// with quantiles of the standardized distribution. Ends are widened to
/// contain `g_hat` when the distribution is strongly skewed.
pub fn confidence_region(report: &EvalReport, level: f64) -> Result<ConfidenceRegion> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::OutOfRange {
            name: "level",
            msg: format!("{level} not in (0, 1)"),
        });
    }
    let cdf = report.standardized()?;
    let alpha = 1.0 - level;
    let scale = report.sigma_hat / (report.t as f64).sqrt();
    let lo = report.g_hat - cdf.quantile(1.0 - alpha / 2.0) * scale;
    let hi = report.g_hat - cdf.quantile(alpha / 2.0) * scale;
    Ok(ConfidenceRegion {
        lo: lo.min(report.g_hat),
        hi: hi.max(report.g_hat),
        level,
    })
}

/// Runs one replicate on the streams of `seed`.
pub fn run_replicate(
    factory: &dyn AlgorithmFactory,
    dataset: &LoggedDataset,
    size: usize,
    h: f64,
    seed: Seed,
) -> Replicate {
    let mut resample_rng = seed.stream(purpose::RESAMPLE);
    let mut jitter_rng = seed.stream(purpose::JITTER);
    let mut policy_rng = seed.stream(purpose::POLICY);
    let records = dataset.records();
    let t = records.len();
    let mut buf = vec![0.0; dataset.d()];
    let mut replayer = Replayer::new(factory.fresh());
    for _ in 0..size {
        let r = &records[resample_rng.random_range(0..t)];
        jitter_into(&r.context, h, &mut jitter_rng, &mut buf);
        replayer.offer(&buf, r.action, r.reward, &mut policy_rng);
    }
    Replicate {
        estimate: replayer.estimate(),
        accepted: replayer.accepted,
        clicks: replayer.clicks,
    }
}

/// Evaluates a learner with `config.replicates` bootstrap replicates.
/// Replicate `b` draws from the streams of `seed.child(b)`.
pub fn bred_evaluate(
    factory: &dyn AlgorithmFactory,
    dataset: &LoggedDataset,
    config: &BredConfig,
    seed: Seed,
) -> Result<EvalReport> {
    check_logging(dataset, config.force)?;
    if config.replicates == 0 {
        return Err(Error::OutOfRange {
            name: "B",
            msg: "must be at least 1".into(),
        });
    }
    let t = dataset.len();
    let size = config.expansion_factor.unwrap_or(dataset.k()) * t;
    if size == 0 {
        return Err(Error::OutOfRange {
            name: "expansion_factor",
            msg: "must be at least 1".into(),
        });
    }
    let h = config.bandwidth.resolve(t);
    let replicates: Vec<Replicate> = (0..config.replicates)
        .into_par_iter()
        .map(|b| run_replicate(factory, dataset, size, h, seed.child(b as u64)))
        .collect();
    summarize(replicates, t, h, config.level)
}

/// Aggregates replicate outcomes into a report.
pub fn summarize(
    replicates: Vec<Replicate>,
    t: usize,
    bandwidth: f64,
    level: f64,
) -> Result<EvalReport> {
    let estimates: Vec<f64> = replicates.iter().filter_map(|r| r.estimate).collect();
    if estimates.is_empty() {
        return Err(Error::AllReplicatesEmpty);
    }
    let stats = MeanStd::of(&estimates);
    let sigma_hat = (t as f64).sqrt() * stats.sd;
    let degenerate = estimates.len() < 2 || sigma_hat == 0.0;
    let mut report = EvalReport {
        g_hat: stats.mean,
        excluded_replicates: replicates.len() - estimates.len(),
        replicates,
        t,
        sigma_hat,
        bandwidth,
        confidence_region: None,
        degenerate,
    };
    if !degenerate {
        report.confidence_region = Some(confidence_region(&report, level)?);
    }
    Ok(report)
}

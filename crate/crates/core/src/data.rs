//! Logged interaction data.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One logged interaction: context, the action the logging policy chose and
/// the observed click.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub context: Vec<f64>,
    pub action: usize,
    pub reward: bool,
}

impl Record {
    pub fn new(context: Vec<f64>, action: usize, reward: bool) -> Self {
        Record {
            context,
            action,
            reward,
        }
    }

    pub fn reward_value(&self) -> f64 {
        if self.reward {
            1.0
        } else {
            0.0
        }
    }

    fn check(&self, d: usize, k: usize) -> std::result::Result<(), String> {
        if self.context.len() != d {
            return Err(format!(
                "context has {} features, expected d={d}",
                self.context.len()
            ));
        }
        if self.action >= k {
            return Err(format!("action {} outside [0, {k})", self.action));
        }
        if let Some(x) = self.context.iter().find(|x| !x.is_finite()) {
            return Err(format!("non-finite feature {x}"));
        }
        Ok(())
    }
}

/// How the records were logged. Replay is only unbiased for uniform logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Logging {
    Uniform,
    Unknown,
}

impl fmt::Display for Logging {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Logging::Uniform => "uniform",
            Logging::Unknown => "unknown",
        })
    }
}

impl FromStr for Logging {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "uniform" => Ok(Logging::Uniform),
            "unknown" => Ok(Logging::Unknown),
            other => Err(format!("unknown logging tag `{other}`")),
        }
    }
}

/// An ordered, non-empty sequence of records with declared dimensions.
///
/// Construction validates every record; the fields are private so a value of
/// this type always satisfies its invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedDataset {
    records: Vec<Record>,
    d: usize,
    k: usize,
    logging: Logging,
}

impl LoggedDataset {
    pub fn new(records: Vec<Record>, d: usize, k: usize, logging: Logging) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDataset("k must be at least 1".into()));
        }
        if records.is_empty() {
            return Err(Error::InvalidDataset("dataset has no records".into()));
        }
        for (i, r) in records.iter().enumerate() {
            r.check(d, k).map_err(|msg| Error::DimensionMismatch {
                line: None,
                msg: format!("record {i}: {msg}"),
            })?;
        }
        Ok(LoggedDataset {
            records,
            d,
            k,
            logging,
        })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn into_records(self) -> Vec<Record> {
        self.records
    }

    /// Context dimension.
    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of actions.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn logging(&self) -> Logging {
        self.logging
    }

    /// Number of records, T.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    /// Always false; kept for the `len`/`is_empty` convention.
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Mean logged reward.
    pub fn ctr(&self) -> f64 {
        self.records.iter().filter(|r| r.reward).count() as f64 / self.len() as f64
    }

    /// Same header, different records (which are validated).
    pub fn with_records(&self, records: Vec<Record>) -> Result<Self> {
        LoggedDataset::new(records, self.d, self.k, self.logging)
    }
}

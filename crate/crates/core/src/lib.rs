//! Offline evaluation of contextual bandit algorithms on uniformly logged
//! data.
//!
//! Two estimators are provided: [`replay::replay_evaluate`], which scans the
//! log once and keeps the records where the learner agrees with the logged
//! action, and [`bred::bred_evaluate`], which replays the learner on jittered
//! bootstrap expansions of the log and also returns a bootstrap distribution
//! and confidence region. [`synthetic`] holds a linear click model with a
//! known ground truth to validate both.

pub mod algorithms;
pub mod bred;
pub mod data;
pub mod error;
pub mod format;
pub mod replay;
pub mod rng;
pub mod stats;
pub mod synthetic;

pub use algorithms::{AlgoSpec, AlgorithmFactory, BanditAlgorithm};
pub use bred::{bred_evaluate, BredConfig, EvalReport};
pub use data::{LoggedDataset, Logging, Record};
pub use error::{Error, Result};
pub use replay::{replay_evaluate, ReplayOptions, ReplayResult};
pub use rng::Seed;
pub use synthetic::SyntheticModel;

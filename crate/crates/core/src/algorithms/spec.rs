use std::fmt;

use super::{AlgorithmFactory, BanditAlgorithm, FixedPolicy, LinUcb, RandomPolicy, Ucb};
use crate::error::{Error, Result};

/// A learner described by name and parameters, as given on the command line:
/// `ucb alpha=1`, `linucb alpha=1 ridge=1`, `constant action=0`, `random`.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgoSpec {
    Ucb { alpha: f64 },
    LinUcb { alpha: f64, ridge: f64 },
    Constant { action: usize },
    Random,
}

impl AlgoSpec {
    /// Parses a name followed by `key=value` parameters.
    pub fn parse<S: AsRef<str>>(name: &str, params: &[S]) -> Result<Self> {
        let mut kv = Vec::new();
        for p in params {
            let p = p.as_ref();
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| Error::InvalidAlgorithm(format!("expected key=value, got `{p}`")))?;
            kv.push((k.to_string(), v.to_string()));
        }
        let mut take = |key: &str| {
            kv.iter()
                .position(|(k, _)| k == key)
                .map(|i| kv.remove(i).1)
        };
        let num = |key: &str, v: Option<String>, default: f64| -> Result<f64> {
            match v {
                None => Ok(default),
                Some(v) => v
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::InvalidAlgorithm(format!("{key}: not a number: `{v}`"))),
            }
        };

        let spec = match name.to_ascii_lowercase().as_str() {
            "ucb" => {
                let alpha = num("alpha", take("alpha"), 1.0)?;
                if alpha <= 0.0 {
                    return Err(Error::InvalidAlgorithm("ucb alpha must be > 0".into()));
                }
                AlgoSpec::Ucb { alpha }
            }
            "linucb" => {
                let alpha = num("alpha", take("alpha"), 1.0)?;
                let ridge = num("ridge", take("ridge"), 1.0)?;
                if alpha < 0.0 || ridge <= 0.0 {
                    return Err(Error::InvalidAlgorithm(
                        "linucb needs alpha >= 0 and ridge > 0".into(),
                    ));
                }
                AlgoSpec::LinUcb { alpha, ridge }
            }
            "constant" | "fixed" => {
                let action = take("action").unwrap_or_else(|| "0".into());
                let action = action
                    .parse()
                    .map_err(|_| Error::InvalidAlgorithm(format!("action: `{action}`")))?;
                AlgoSpec::Constant { action }
            }
            "random" | "uniform" => AlgoSpec::Random,
            other => {
                return Err(Error::InvalidAlgorithm(format!(
                    "unknown algorithm `{other}`"
                )))
            }
        };
        if let Some((k, _)) = kv.first() {
            return Err(Error::InvalidAlgorithm(format!(
                "unknown parameter `{k}` for {name}"
            )));
        }
        Ok(spec)
    }

    /// Parses a whitespace-separated spec such as `"linucb alpha=1"`.
    pub fn parse_str(s: &str) -> Result<Self> {
        let mut toks = s.split_whitespace();
        let name = toks
            .next()
            .ok_or_else(|| Error::InvalidAlgorithm("empty algorithm spec".into()))?;
        let rest: Vec<&str> = toks.collect();
        AlgoSpec::parse(name, &rest)
    }

    /// Builds a learner in its initial state for `k` actions and dimension `d`.
    pub fn build(&self, k: usize, d: usize) -> Result<Box<dyn BanditAlgorithm>> {
        Ok(match *self {
            AlgoSpec::Ucb { alpha } => Box::new(Ucb::new(k, alpha)),
            AlgoSpec::LinUcb { alpha, ridge } => Box::new(LinUcb::new(k, d, alpha, ridge)),
            AlgoSpec::Constant { action } => {
                if action >= k {
                    return Err(Error::InvalidAlgorithm(format!(
                        "action {action} outside [0, {k})"
                    )));
                }
                Box::new(FixedPolicy::constant(k, action))
            }
            AlgoSpec::Random => Box::new(RandomPolicy::new(k)),
        })
    }

    /// A factory bound to the given dimensions.
    pub fn configure(&self, k: usize, d: usize) -> Result<ConfiguredAlgorithm> {
        self.build(k, d)?;
        Ok(ConfiguredAlgorithm {
            spec: self.clone(),
            k,
            d,
        })
    }

    /// True for policies that never learn.
    pub fn is_static(&self) -> bool {
        matches!(self, AlgoSpec::Constant { .. } | AlgoSpec::Random)
    }
}

impl fmt::Display for AlgoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgoSpec::Ucb { alpha } => write!(f, "ucb alpha={alpha}"),
            AlgoSpec::LinUcb { alpha, ridge } => write!(f, "linucb alpha={alpha} ridge={ridge}"),
            AlgoSpec::Constant { action } => write!(f, "constant action={action}"),
            AlgoSpec::Random => f.write_str("random"),
        }
    }
}

/// An [`AlgoSpec`] with validated dimensions.
#[derive(Debug, Clone)]
pub struct ConfiguredAlgorithm {
    spec: AlgoSpec,
    k: usize,
    d: usize,
}

impl ConfiguredAlgorithm {
    pub fn spec(&self) -> &AlgoSpec {
        &self.spec
    }
}

impl AlgorithmFactory for ConfiguredAlgorithm {
    fn fresh(&self) -> Box<dyn BanditAlgorithm> {
        self.spec
            .build(self.k, self.d)
            .expect("validated in configure")
    }
}

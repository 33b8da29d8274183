//! Line-oriented text format for logged datasets.
//!
//! ```text
//! d=2 k=3 logging=uniform
//! 1 0 1.0000000000000000e0 -2.5000000000000000e-1
//! 0 2 3.3333333333333331e-1 0.0000000000000000e0 pool=0,2
//! ```
//!
//! The header declares the context dimension, the number of actions and the
//! logging policy. Each record line is `reward action x_1 .. x_d`, optionally
//! followed by `pool=<ids>` listing the actions that were available. Floats are
//! written with 17 significant digits so a save/load cycle is bit-exact.
//!
//! There is no hard limit on `d` or `k` beyond memory; every record is held in
//! memory, so the practical limit is roughly `T * (8 d + 40)` bytes.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::data::{LoggedDataset, Logging, Record};
use crate::error::{Error, Result};

/// A dataset whose records may carry the set of actions that were available.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledDataset {
    pub dataset: LoggedDataset,
    /// One entry per record; `None` means the full action set.
    pub pools: Vec<Option<Vec<usize>>>,
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<LoggedDataset> {
    Ok(load_pooled(path)?.dataset)
}

pub fn load_pooled(path: impl AsRef<Path>) -> Result<PooledDataset> {
    let file = File::open(path)?;
    read_dataset(BufReader::new(file))
}

pub fn save_dataset(dataset: &LoggedDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(dataset, None, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn save_pooled(data: &PooledDataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dataset(&data.dataset, Some(&data.pools), &mut w)?;
    w.flush()?;
    Ok(())
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_dataset<W: Write>(
    dataset: &LoggedDataset,
    pools: Option<&[Option<Vec<usize>>]>,
    w: &mut W,
) -> Result<()> {
    writeln!(
        w,
        "d={} k={} logging={}",
        dataset.d(),
        dataset.k(),
        dataset.logging()
    )?;
    let mut line = String::new();
    for (i, r) in dataset.records().iter().enumerate() {
        line.clear();
        let _ = write!(line, "{} {}", u8::from(r.reward), r.action);
        for x in &r.context {
            let _ = write!(line, " {x:.16e}");
        }
        if let Some(Some(pool)) = pools.and_then(|p| p.get(i)) {
            let ids: Vec<String> = pool.iter().map(|a| a.to_string()).collect();
            let _ = write!(line, " pool={}", ids.join(","));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

fn parse_header(line: &str, lineno: usize) -> Result<(usize, usize, Logging)> {
    let err = |msg: String| Error::Parse { line: lineno, msg };
    let (mut d, mut k, mut logging) = (None, None, None);
    for tok in line.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value in header, got `{tok}`")))?;
        match key {
            "d" => d = Some(value.parse::<usize>().map_err(|e| err(format!("d: {e}")))?),
            "k" => k = Some(value.parse::<usize>().map_err(|e| err(format!("k: {e}")))?),
            "logging" => logging = Some(value.parse::<Logging>().map_err(err)?),
            other => return Err(err(format!("unknown header key `{other}`"))),
        }
    }
    match (d, k, logging) {
        (Some(d), Some(k), Some(l)) if k >= 1 => Ok((d, k, l)),
        (_, Some(0), _) => Err(err("k must be at least 1".into())),
        _ => Err(err("header must declare d, k and logging".into())),
    }
}

pub fn read_dataset<R: BufRead>(reader: R) -> Result<PooledDataset> {
    let mut header = None;
    let mut records = Vec::new();
    let mut pools = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((d, k, _)) = header else {
            header = Some(parse_header(trimmed, lineno)?);
            continue;
        };
        let (record, pool) = parse_record(trimmed, lineno, d, k)?;
        records.push(record);
        pools.push(pool);
    }

    let (d, k, logging) = header.ok_or(Error::Parse {
        line: 1,
        msg: "missing header".into(),
    })?;
    let dataset = LoggedDataset::new(records, d, k, logging)?;
    Ok(PooledDataset { dataset, pools })
}

fn parse_record(
    line: &str,
    lineno: usize,
    d: usize,
    k: usize,
) -> Result<(Record, Option<Vec<usize>>)> {
    let err = |msg: String| Error::Parse { line: lineno, msg };
    let mut toks: Vec<&str> = line.split_whitespace().collect();

    let mut pool = None;
    if let Some(last) = toks.last() {
        if let Some(ids) = last.strip_prefix("pool=") {
            let ids = ids
                .split(',')
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|e| err(format!("pool id `{s}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            pool = Some(ids);
            toks.pop();
        }
    }

    if toks.len() != d + 2 {
        return Err(err(format!(
            "expected reward, action and {d} features ({} fields), found {}",
            d + 2,
            toks.len()
        )));
    }
    let reward = match toks[0] {
        "0" => false,
        "1" => true,
        other => return Err(err(format!("reward must be 0 or 1, got `{other}`"))),
    };
    let action: usize = toks[1]
        .parse()
        .map_err(|e| err(format!("action `{}`: {e}", toks[1])))?;
    let context = toks[2..]
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| err(format!("feature `{s}`: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;

    let mismatch = |msg: String| Error::DimensionMismatch {
        line: Some(lineno),
        msg,
    };
    if action >= k {
        return Err(mismatch(format!("action {action} outside [0, {k})")));
    }
    if let Some(ids) = &pool {
        if let Some(bad) = ids.iter().find(|&&a| a >= k) {
            return Err(mismatch(format!("pool action {bad} outside [0, {k})")));
        }
        if !ids.contains(&action) {
            return Err(mismatch(format!("action {action} not in its pool")));
        }
    }
    Ok((Record::new(context, action, reward), pool))
}

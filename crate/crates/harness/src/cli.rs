//! The `bred` command line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bred_core::bred::{bred_evaluate, Bandwidth, BredConfig};
use bred_core::format::{self, fmt_f64, save_pooled};
use bred_core::replay::{permutation_ground_truth, replay_evaluate, ReplayOptions};
use bred_core::rng::{purpose, Seed};
use bred_core::synthetic::{ground_truth_ctr, DEFAULT_RELEVANT_WEIGHTS};
use bred_core::{AlgoSpec, SyntheticModel};
use clap::{Args, Parser, Subcommand};
use rand::seq::index;
use thiserror::Error;

use crate::config::expand_config;
use crate::error::HarnessError;
use crate::plot::emit_plot;
use crate::sweep::{run_error_sweep, write_aggregate_csv, write_long_csv, Method, SweepSpec};
use crate::window::{run_windowed_experiment, write_window_csv, WindowOutcome, WindowedConfig};

#[derive(Debug, Parser)]
#[command(
    name = "bred",
    version,
    about = "Offline evaluation of contextual bandits by replay and bootstrapped replay"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic click model and a uniformly logged dataset from it.
    Generate(GenerateArgs),
    /// Replay estimate of a learner on a logged dataset.
    Replay(ReplayArgs),
    /// Bootstrapped replay estimate with a confidence region.
    Bred(BredArgs),
    /// CTR of a learner played online against a model.
    GroundTruth(GroundTruthArgs),
    /// Estimation error of replay and BRED across dataset sizes.
    Sweep(SweepArgs),
    /// Per-window replay vs BRED on a stream with changing action pools.
    Windowed(WindowedArgs),
    /// Render a CSV produced by this tool as an SVG plot.
    Plot(PlotArgs),
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct GenerateArgs {
    /// Where to write the model.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
    /// Reuse an existing model instead of drawing one.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Where to write the logged dataset.
    #[arg(long)]
    pub data_out: PathBuf,
    /// Records to log (per window when --windows > 1).
    #[arg(long = "T", alias = "size", default_value_t = 10_000)]
    pub t: usize,
    /// Relevant weights per specific action.
    #[arg(long, default_value_t = DEFAULT_RELEVANT_WEIGHTS)]
    pub m: usize,
    /// Number of windows with distinct action pools; 1 writes a plain log.
    #[arg(long, default_value_t = 1)]
    pub windows: usize,
    /// Actions available in each window.
    #[arg(long, default_value_t = 5)]
    pub pool_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct ReplayArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Algorithm name followed by key=value parameters.
    #[arg(long, num_args = 1.., required = true, action = clap::ArgAction::Set)]
    pub algo: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Average over this many shuffled copies of the data.
    #[arg(long)]
    pub permutations: Option<usize>,
    /// Write accepted record indices to this file.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Evaluate logs not tagged as uniformly logged.
    #[arg(long)]
    pub force: bool,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct BredArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, num_args = 1.., required = true, action = clap::ArgAction::Set)]
    pub algo: Vec<String>,
    /// Bootstrap replicates.
    #[arg(long = "B", alias = "replicates", default_value_t = 30)]
    pub b: usize,
    /// auto (50/sqrt(T)), none, or a bandwidth.
    #[arg(long, default_value = "auto")]
    pub jitter: Bandwidth,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Expansion factor; defaults to the number of actions.
    #[arg(long)]
    pub expansion: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Per-replicate CSV (b, g_b, T_b).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct GroundTruthArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// One or more algorithms separated by `+`, e.g. `linucb alpha=1 + ucb`.
    #[arg(long, num_args = 1.., required = true, action = clap::ArgAction::Set)]
    pub algo: Vec<String>,
    /// Comma-separated horizons.
    #[arg(long, value_parser = parse_list::<usize>, default_value = "20000")]
    pub sizes: std::vec::Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    /// CSV with columns algo, T, mean, std_err.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    /// Model file; when absent a model is drawn from --model-seed.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub model_seed: u64,
    #[arg(long, default_value_t = DEFAULT_RELEVANT_WEIGHTS)]
    pub m: usize,
    #[arg(long, num_args = 1.., required = true, action = clap::ArgAction::Set)]
    pub algo: Vec<String>,
    #[arg(long, value_parser = parse_list::<usize>, default_value = "1000,2000,5000,10000")]
    pub sizes: std::vec::Vec<usize>,
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    #[arg(long, value_parser = parse_list::<Method>, default_value = "replay,bred,bred_nojitter")]
    pub methods: std::vec::Vec<Method>,
    #[arg(long = "B", alias = "replicates", default_value_t = 30)]
    pub b: usize,
    #[arg(long, default_value = "auto")]
    pub jitter: Bandwidth,
    /// Online runs per ground-truth value.
    #[arg(long, default_value_t = 50)]
    pub runs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Long-format CSV (one row per method, size and seed).
    #[arg(long)]
    pub out: PathBuf,
    /// Aggregated CSV; defaults to <out>_agg.csv.
    #[arg(long)]
    pub agg_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct WindowedArgs {
    /// Dataset with `pool=` annotations.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, num_args = 1.., required = true, action = clap::ArgAction::Set)]
    pub algo: Vec<String>,
    #[arg(long, default_value_t = 100)]
    pub permutations: usize,
    #[arg(long = "B", alias = "replicates", default_value_t = 30)]
    pub b: usize,
    #[arg(long, default_value = "auto")]
    pub jitter: Bandwidth,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
pub struct PlotArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] HarnessError),
}

impl From<bred_core::Error> for CliError {
    fn from(e: bred_core::Error) -> Self {
        match e {
            bred_core::Error::InvalidAlgorithm(_) | bred_core::Error::OutOfRange { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Run(HarnessError::Eval(other)),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(HarnessError::Io(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(HarnessError::Spec(_)) => 2,
            CliError::Run(_) => 1,
        }
    }
}

/// Parses `argv` (including the program name), runs the command, and returns
/// the process exit code. Normal output goes to `out`, diagnostics to `err`.
pub fn main_with_args(argv: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return 2;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    match run(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Prefixes I/O failures with the offending path.
fn with_path<T>(path: &Path, r: bred_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| match e {
        bred_core::Error::Io(io) => bred_core::Error::Io(std::io::Error::new(
            io.kind(),
            format!("{}: {io}", path.display()),
        )),
        other => other,
    })
    .map_err(CliError::from)
}

fn algo_spec(tokens: &[String]) -> Result<AlgoSpec, CliError> {
    let (name, params) = tokens
        .split_first()
        .ok_or_else(|| CliError::Usage("--algo needs a name".into()))?;
    Ok(AlgoSpec::parse(name, params)?)
}

pub fn run(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Generate(a) => generate(a, out),
        Command::Replay(a) => replay(a, out),
        Command::Bred(a) => bred(a, out),
        Command::GroundTruth(a) => ground_truth(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Windowed(a) => windowed(a, out),
        Command::Plot(a) => {
            emit_plot(&a.input, &a.output)?;
            writeln!(out, "wrote {}", a.output.display())?;
            Ok(())
        }
    }
}

fn generate(a: GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.t == 0 {
        return Err(CliError::Usage("--T must be at least 1".into()));
    }
    let seed = Seed::new(a.seed);
    let model = match &a.model {
        Some(p) => with_path(p, SyntheticModel::load(p))?,
        None => SyntheticModel::generate(&mut seed.stream(purpose::MODEL), a.m)?,
    };
    if let Some(p) = &a.model_out {
        model.save(p)?;
    }
    let mut rng = seed.stream(purpose::CONTEXT);
    if a.windows <= 1 {
        let log = model.simulate_log(a.t, &mut rng)?;
        format::save_dataset(&log, &a.data_out)?;
        writeln!(
            out,
            "generated T={} k={} d={} ctr={:.4}",
            log.len(),
            log.k(),
            log.d(),
            log.ctr()
        )?;
        return Ok(());
    }
    if a.pool_size == 0 || a.pool_size > model.k() {
        return Err(CliError::Usage(format!(
            "--pool-size must be in [1, {}]",
            model.k()
        )));
    }
    if a.pool_size == model.k() {
        return Err(CliError::Usage(
            "adjacent windows need distinct pools; use --pool-size < k".into(),
        ));
    }
    let mut pool_rng = seed.stream(purpose::ACTION);
    let mut segments: Vec<(Vec<usize>, usize)> = Vec::with_capacity(a.windows);
    while segments.len() < a.windows {
        let mut pool = index::sample(&mut pool_rng, model.k(), a.pool_size).into_vec();
        pool.sort_unstable();
        if segments.last().is_some_and(|(prev, _)| *prev == pool) {
            continue;
        }
        segments.push((pool, a.t));
    }
    let data = model.simulate_pooled(&segments, &mut rng)?;
    save_pooled(&data, &a.data_out)?;
    writeln!(
        out,
        "generated windows={} T={} k={} d={}",
        a.windows,
        data.dataset.len(),
        model.k(),
        model.d()
    )?;
    Ok(())
}

fn replay(a: ReplayArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = algo_spec(&a.algo)?;
    let data = with_path(&a.data, format::load_dataset(&a.data))?;
    let factory = spec.configure(data.k(), data.d())?;
    let options = ReplayOptions {
        force: a.force,
        trace: a.trace.is_some(),
    };
    let seed = Seed::new(a.seed);
    let res = replay_evaluate(&factory, &data, &mut seed.stream(purpose::POLICY), options)?;
    writeln!(
        out,
        "replay algo=\"{spec}\" T={} accepted={} rate={:.4} expected_rate={:.4} g_hat={:.6}",
        res.total,
        res.accepted,
        res.acceptance_rate(),
        1.0 / data.k() as f64,
        res.g_hat
    )?;
    if let (Some(path), Some(ix)) = (&a.trace, &res.accepted_indices) {
        let mut w = BufWriter::new(File::create(path)?);
        for i in ix {
            writeln!(w, "{i}")?;
        }
        w.flush()?;
    }
    if let Some(p) = a.permutations {
        let truth = with_threads(a.threads, || {
            permutation_ground_truth(&data, &factory, p, seed.child(1), options)
        })??;
        writeln!(
            out,
            "permutations={p} mean={:.6} std_err={:.6} empty={}",
            truth.mean, truth.std_err, truth.empty
        )?;
    }
    Ok(())
}

fn bred(a: BredArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = algo_spec(&a.algo)?;
    if !(a.level > 0.0 && a.level < 1.0) {
        return Err(CliError::Usage("--level must be in (0, 1)".into()));
    }
    let data = with_path(&a.data, format::load_dataset(&a.data))?;
    let factory = spec.configure(data.k(), data.d())?;
    let config = BredConfig {
        replicates: a.b,
        bandwidth: a.jitter,
        expansion_factor: a.expansion,
        level: a.level,
        force: a.force,
    };
    let report = with_threads(a.threads, || {
        bred_evaluate(&factory, &data, &config, Seed::new(a.seed))
    })??;
    let counts = report.accepted_counts();
    let mean_acc = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    let region = match report.confidence_region {
        Some(r) => format!("ci=[{:.6}, {:.6}] level={}", r.lo, r.hi, r.level),
        None => "degenerate=true".to_string(),
    };
    writeln!(
        out,
        "bred algo=\"{spec}\" T={} B={} h={:.6} g_hat={:.6} sigma_hat={:.6} mean_accepted={:.1} excluded={} {region}",
        report.t,
        a.b,
        report.bandwidth,
        report.g_hat,
        report.sigma_hat,
        mean_acc,
        report.excluded_replicates
    )?;
    if let Some(path) = &a.csv {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        w.write_record(["b", "g_b", "T_b"])
            .map_err(HarnessError::from)?;
        for (b, r) in report.replicates.iter().enumerate() {
            w.write_record([
                b.to_string(),
                r.estimate.map(fmt_f64).unwrap_or_default(),
                r.accepted.to_string(),
            ])
            .map_err(HarnessError::from)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn ground_truth(a: GroundTruthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let model = with_path(&a.model, SyntheticModel::load(&a.model))?;
    let specs = a
        .algo
        .split(|t| t == "+")
        .map(algo_spec)
        .collect::<Result<Vec<_>, _>>()?;
    if a.sizes.contains(&0) {
        return Err(CliError::Usage("--sizes must be positive".into()));
    }
    let seed = Seed::new(a.seed);
    let mut rows = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let factory = spec.configure(model.k(), model.d())?;
        for &t in &a.sizes {
            let g = with_threads(a.threads, || {
                ground_truth_ctr(
                    &model,
                    &factory,
                    t,
                    a.runs,
                    seed.child(i as u64).child(t as u64),
                )
            })??;
            writeln!(
                out,
                "ground-truth algo=\"{spec}\" T={t} runs={} mean={:.6} std_err={:.6}",
                a.runs, g.mean, g.std_err
            )?;
            rows.push((spec.to_string(), t, g.mean, g.std_err));
        }
    }
    if let Some(path) = &a.out {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        w.write_record(["algo", "T", "mean", "std_err"])
            .map_err(HarnessError::from)?;
        for (name, t, mean, se) in rows {
            w.write_record([name, t.to_string(), fmt_f64(mean), fmt_f64(se)])
                .map_err(HarnessError::from)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn sweep(a: SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let algo = algo_spec(&a.algo)?;
    let model = match &a.model {
        Some(p) => with_path(p, SyntheticModel::load(p))?,
        None => SyntheticModel::generate(&mut Seed::new(a.model_seed).stream(purpose::MODEL), a.m)?,
    };
    let spec = SweepSpec {
        sizes: a.sizes,
        seeds: a.seeds,
        methods: a.methods,
        algo,
        replicates: a.b,
        bandwidth: a.jitter,
        truth_runs: a.runs,
    };
    let result = with_threads(a.threads, || {
        run_error_sweep(&model, &spec, Seed::new(a.seed))
    })??;
    write_long_csv(&result, BufWriter::new(File::create(&a.out)?))?;
    let agg_path = a.agg_out.unwrap_or_else(|| {
        let stem = a
            .out
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        a.out.with_file_name(format!("{stem}_agg.csv"))
    });
    let agg = result.aggregate();
    write_aggregate_csv(&agg, BufWriter::new(File::create(&agg_path)?))?;
    for row in &agg {
        writeln!(
            out,
            "sweep method={} T={} n={} mean_abs_error={:.6} std_err={:.6} failed={}",
            row.method, row.t, row.n, row.mean_abs_error, row.std_err, row.failed
        )?;
    }
    Ok(())
}

fn windowed(a: WindowedArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let algo = algo_spec(&a.algo)?;
    let data = with_path(&a.data, format::load_pooled(&a.data))?;
    let config = WindowedConfig {
        permutations: a.permutations,
        bred: BredConfig {
            replicates: a.b,
            bandwidth: a.jitter,
            expansion_factor: None,
            level: a.level,
            force: a.force,
        },
    };
    let outcomes = with_threads(a.threads, || {
        run_windowed_experiment(&data, &algo, &config, Seed::new(a.seed))
    })??;
    write_window_csv(&outcomes, BufWriter::new(File::create(&a.out)?))?;
    let done = outcomes
        .iter()
        .filter(|o| matches!(o, WindowOutcome::Done(_)))
        .count();
    writeln!(
        out,
        "windowed windows={} evaluated={done} skipped={}",
        outcomes.len(),
        outcomes.len() - done
    )?;
    for o in &outcomes {
        if let WindowOutcome::Skipped { window, reason } = o {
            writeln!(out, "skipped window={window} reason=\"{reason}\"")?;
        }
    }
    Ok(())
}

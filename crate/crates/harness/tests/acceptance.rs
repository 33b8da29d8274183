//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when any
//! criterion fails.

use std::time::{Duration, Instant};

use bred_core::algorithms::{FixedPolicy, RandomPolicy};
use bred_core::bred::Bandwidth;
use bred_core::format::PooledDataset;
use bred_core::replay::replay_with;
use bred_core::rng::{purpose, Seed};
use bred_core::stats::MeanStd;
use bred_core::synthetic::{ground_truth_ctr, DEFAULT_RELEVANT_WEIGHTS, UNIVERSAL_COUNT};
use bred_core::{
    bred_evaluate, replay_evaluate, AlgoSpec, BredConfig, Error, LoggedDataset, Logging, Record,
    ReplayOptions, SyntheticModel,
};
use bred_harness::cli::main_with_args;
use bred_harness::sweep::{run_error_sweep, Method, SweepResult, SweepSpec};
use bred_harness::window::{run_windowed_experiment, WindowOutcome, WindowedConfig};

const MODEL_SEED: u64 = 1;
const K: usize = 10;

fn model() -> SyntheticModel {
    SyntheticModel::generate(
        &mut Seed::new(MODEL_SEED).stream(purpose::MODEL),
        DEFAULT_RELEVANT_WEIGHTS,
    )
    .unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let m = model();
    let t = 10_000;
    let rates: Vec<f64> = (0..50)
        .map(|s| {
            let seed = Seed::new(100).child(s);
            let log = m
                .simulate_log(t, &mut seed.stream(purpose::CONTEXT))
                .unwrap();
            let (res, _) = replay_with(
                RandomPolicy::new(K),
                &log,
                &mut seed.stream(purpose::POLICY),
                false,
            )
            .unwrap();
            res.accepted as f64 / t as f64
        })
        .collect();
    let stats = MeanStd::of(&rates);
    let (lo, hi) = rates
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &r| (a.min(r), b.max(r)));
    let pass = (0.095..=0.105).contains(&stats.mean) && lo >= 0.07 && hi <= 0.13;
    outcome(
        pass,
        format!("mean T_acc/T={:.4} range=[{lo:.4}, {hi:.4}]", stats.mean),
    )
}

fn criterion_2() -> Outcome {
    let m = model();
    let action = 0;
    assert!(action < UNIVERSAL_COUNT);
    let q = m.q()[action];
    let estimates: Vec<f64> = (0..200)
        .map(|i| {
            let seed = Seed::new(200).child(i);
            let log = m
                .simulate_log(5_000, &mut seed.stream(purpose::CONTEXT))
                .unwrap();
            let algo = FixedPolicy::constant(K, action);
            replay_with(algo, &log, &mut seed.stream(purpose::POLICY), false)
                .unwrap()
                .0
                .g_hat
        })
        .collect();
    let stats = MeanStd::of(&estimates);
    let gap = (stats.mean - q).abs();
    outcome(
        gap < 3.0 * stats.std_err(),
        format!(
            "mean={:.5} q_a={q:.5} |diff|={gap:.5} 3se={:.5}",
            stats.mean,
            3.0 * stats.std_err()
        ),
    )
}

fn criterion_3() -> Outcome {
    let m = model();
    let t = 2_000;
    let b = 200;
    let seed = Seed::new(300);
    let log = m
        .simulate_log(t, &mut seed.stream(purpose::CONTEXT))
        .unwrap();
    let factory = AlgoSpec::Random.configure(K, m.d()).unwrap();
    let config = BredConfig {
        replicates: b,
        ..BredConfig::default()
    };
    let report = bred_evaluate(&factory, &log, &config, seed.child(1)).unwrap();
    let counts: Vec<f64> = report.accepted_counts().iter().map(|&c| c as f64).collect();
    let mean = MeanStd::of(&counts).mean;
    let sigma = (t as f64 * (1.0 - 1.0 / K as f64) / b as f64).sqrt();
    outcome(
        (mean - t as f64).abs() <= 3.0 * sigma,
        format!("mean T^(b)={mean:.2} target={t} 3sigma={:.2}", 3.0 * sigma),
    )
}

fn criterion_4() -> Outcome {
    let m = model();
    let runs = 50;
    let ucb = AlgoSpec::Ucb { alpha: 1.0 }.configure(K, m.d()).unwrap();
    let lin = AlgoSpec::LinUcb {
        alpha: 1.0,
        ridge: 1.0,
    }
    .configure(K, m.d())
    .unwrap();
    let at = |t: usize| {
        let u = ground_truth_ctr(&m, &ucb, t, runs, Seed::new(400).child(t as u64)).unwrap();
        let l = ground_truth_ctr(&m, &lin, t, runs, Seed::new(401).child(t as u64)).unwrap();
        (u.mean, l.mean, 2.0 * u.std_err.hypot(l.std_err))
    };
    let (u1, l1, s1) = at(1_000);
    let (u2, l2, s2) = at(20_000);
    let early = u1 - l1 > s1;
    let late = l2 - u2 > s2;
    outcome(
        early && late,
        format!(
            "T=1000: UCB={u1:.4} LinUCB={l1:.4} 2se={s1:.4} [{}]; T=20000: UCB={u2:.4} LinUCB={l2:.4} 2se={s2:.4} [{}]",
            if early { "ok" } else { "UCB not ahead" },
            if late { "ok" } else { "LinUCB not ahead" }
        ),
    )
}

fn figure_sweep(algo: AlgoSpec) -> SweepResult {
    let spec = SweepSpec {
        sizes: vec![1_000, 2_000, 5_000, 10_000],
        seeds: 20,
        methods: Method::ALL.to_vec(),
        algo,
        replicates: 30,
        bandwidth: Bandwidth::Auto,
        truth_runs: 50,
    };
    run_error_sweep(&model(), &spec, Seed::new(500)).unwrap()
}

fn mae(result: &SweepResult, method: Method, t: usize) -> (f64, f64) {
    let cell = result.aggregate_cell(method, t).unwrap();
    (cell.mean_abs_error, cell.std_err)
}

fn criterion_5() -> Outcome {
    let result = figure_sweep(AlgoSpec::LinUcb {
        alpha: 1.0,
        ridge: 1.0,
    });
    let mut pass = true;
    let mut detail = Vec::new();
    for t in [1_000, 2_000, 5_000, 10_000] {
        let (r, _) = mae(&result, Method::Replay, t);
        let (b, _) = mae(&result, Method::Bred, t);
        let (n, _) = mae(&result, Method::BredNoJitter, t);
        pass &= b < r;
        if t == 1_000 {
            pass &= b <= n;
        }
        detail.push(format!("T={t}: replay={r:.4} bred={b:.4} nojitter={n:.4}"));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_6() -> Outcome {
    let result = figure_sweep(AlgoSpec::Ucb { alpha: 1.0 });
    let mut pass = true;
    let mut detail = Vec::new();
    for t in [1_000, 2_000, 5_000, 10_000] {
        let (b, bs) = mae(&result, Method::Bred, t);
        let (n, ns) = mae(&result, Method::BredNoJitter, t);
        let bound = 2.0 * bs.hypot(ns);
        pass &= (b - n).abs() <= bound;
        detail.push(format!(
            "T={t}: jitter={b:.4} nojitter={n:.4} 2se={bound:.4}"
        ));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_7() -> Outcome {
    let m = model();
    let seed = Seed::new(700);
    let log = m
        .simulate_log(2_000, &mut seed.stream(purpose::CONTEXT))
        .unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for spec in [
        AlgoSpec::LinUcb {
            alpha: 1.0,
            ridge: 1.0,
        },
        AlgoSpec::Ucb { alpha: 1.0 },
        AlgoSpec::Random,
    ] {
        let factory = spec.configure(K, m.d()).unwrap();
        let config = BredConfig {
            replicates: 30,
            ..BredConfig::default()
        };
        let report = bred_evaluate(&factory, &log, &config, seed.child(1)).unwrap();
        let z = report.standardized().unwrap();
        let stats = MeanStd::of(z.values());
        let scale = z.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let ok = stats.mean.abs() <= 1e-12 * scale && (stats.sd - 1.0).abs() <= 1e-12;
        pass &= ok;
        detail.push(format!(
            "{spec}: mean={:.1e} sd-1={:.1e}",
            stats.mean,
            stats.sd - 1.0
        ));
    }
    outcome(pass, detail.join("; "))
}

fn criterion_8() -> Outcome {
    let m = model();
    let truth = m.expected_uniform_ctr();
    let factory = AlgoSpec::Random.configure(K, m.d()).unwrap();
    let runs = 200;
    let config = BredConfig {
        replicates: 50,
        level: 0.95,
        ..BredConfig::default()
    };
    let covered = (0..runs)
        .filter(|&i| {
            let seed = Seed::new(800).child(i);
            let log = m
                .simulate_log(2_000, &mut seed.stream(purpose::CONTEXT))
                .unwrap();
            let report = bred_evaluate(&factory, &log, &config, seed.child(1)).unwrap();
            report.confidence_region.is_some_and(|r| r.contains(truth))
        })
        .count();
    let rate = covered as f64 / runs as f64;
    outcome(
        (0.90..=0.99).contains(&rate),
        format!("coverage={rate:.3} of g={truth:.5}"),
    )
}

fn criterion_9() -> Outcome {
    let never = LoggedDataset::new(
        (0..8).map(|_| Record::new(vec![0.0], 1, true)).collect(),
        1,
        2,
        Logging::Uniform,
    )
    .unwrap();
    let ones = LoggedDataset::new(
        (0..8).map(|_| Record::new(vec![0.0], 0, true)).collect(),
        1,
        2,
        Logging::Uniform,
    )
    .unwrap();
    let constant0 = AlgoSpec::Constant { action: 0 }.configure(2, 1).unwrap();
    let config = BredConfig {
        replicates: 3,
        bandwidth: Bandwidth::None,
        ..BredConfig::default()
    };

    let no_accept = matches!(
        replay_evaluate(
            &constant0,
            &never,
            &mut Seed::new(9).rng(),
            ReplayOptions::default()
        ),
        Err(Error::NoAcceptedRecords)
    );
    let all_empty = matches!(
        bred_evaluate(&constant0, &never, &config, Seed::new(9)),
        Err(Error::AllReplicatesEmpty)
    );
    let degenerate = match bred_evaluate(&constant0, &ones, &config, Seed::new(9)) {
        Ok(r) => {
            r.degenerate
                && r.confidence_region.is_none()
                && r.g_hat == 1.0
                && matches!(r.standardized(), Err(Error::DegenerateDistribution))
        }
        Err(_) => false,
    };

    let m = model();
    let data: PooledDataset = m
        .simulate_pooled(
            &[(vec![0, 1, 2], 60), (vec![3, 4, 5, 6], 3)],
            &mut Seed::new(9).stream(purpose::CONTEXT),
        )
        .unwrap();
    let wconfig = WindowedConfig {
        permutations: 3,
        bred: BredConfig {
            replicates: 3,
            ..BredConfig::default()
        },
    };
    let skipped =
        match run_windowed_experiment(&data, &AlgoSpec::Ucb { alpha: 1.0 }, &wconfig, Seed::new(9))
        {
            Ok(out) => matches!(
                out.as_slice(),
                [
                    WindowOutcome::Done(_),
                    WindowOutcome::Skipped { window: 1, .. }
                ]
            ),
            Err(_) => false,
        };
    outcome(
        no_accept && all_empty && degenerate && skipped,
        format!(
            "NoAcceptedRecords={no_accept} AllReplicatesEmpty={all_empty} DegenerateDistribution={degenerate} window_skip={skipped}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let sweep = |threads: &str| {
        let out = dir.path().join(format!("sweep_{threads}.csv"));
        let agg = dir.path().join(format!("sweep_{threads}_agg.csv"));
        let argv: Vec<String> = [
            "bred",
            "sweep",
            "--model-seed",
            "1",
            "--algo",
            "linucb",
            "alpha=1",
            "--sizes",
            "500,1000",
            "--seeds",
            "4",
            "--B",
            "10",
            "--runs",
            "10",
            "--seed",
            "10",
            "--threads",
            threads,
            "--out",
        ]
        .iter()
        .map(|s| s.to_string())
        .chain([out.to_string_lossy().into_owned()])
        .collect();
        let code = main_with_args(argv, &mut std::io::sink(), &mut std::io::sink());
        assert_eq!(code, 0);
        (std::fs::read(out).unwrap(), std::fs::read(agg).unwrap())
    };
    let one = sweep("1");
    let two = sweep("2");
    let four = sweep("4");
    let pass = one == two && one == four;
    outcome(
        pass,
        format!(
            "long={}B agg={}B identical across 1/2/4 threads: {pass}",
            one.0.len(),
            one.1.len()
        ),
    )
}

fn main() {
    type Check = (&'static str, fn() -> Outcome, Duration);
    let checks: [Check; 10] = [
        ("acceptance-rate law", criterion_1, Duration::from_secs(10)),
        (
            "replay unbiased for a fixed policy",
            criterion_2,
            Duration::from_secs(60),
        ),
        ("E[T^(b)] = T", criterion_3, Duration::from_secs(60)),
        (
            "direct-play crossover UCB/LinUCB",
            criterion_4,
            Duration::from_secs(300),
        ),
        (
            "LinUCB error sweep: BRED beats replay, jitter helps",
            criterion_5,
            Duration::from_secs(900),
        ),
        (
            "UCB error sweep: jitter makes no difference",
            criterion_6,
            Duration::from_secs(600),
        ),
        ("standardization identities", criterion_7, Duration::MAX),
        (
            "confidence-region coverage",
            criterion_8,
            Duration::from_secs(600),
        ),
        ("degenerate and edge cases", criterion_9, Duration::MAX),
        (
            "determinism across thread counts",
            criterion_10,
            Duration::MAX,
        ),
    ];
    let mut failed = 0;
    for (i, (name, check, limit)) in checks.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *limit;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let timing = if in_time {
            String::new()
        } else {
            format!(" [over time limit {}s]", limit.as_secs())
        };
        println!(
            "criterion {:>2} {:<4} {name}: {} ({:.1}s){timing}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

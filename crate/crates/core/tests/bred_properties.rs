use bred_core::algorithms::{AlgoSpec, FixedPolicy};
use bred_core::bred::{
    bootstrap_resample, confidence_region, default_bandwidth, summarize, Bandwidth, Replicate,
};
use bred_core::replay::replay_with;
use bred_core::rng::{purpose, rng_stream, Seed};
use bred_core::stats::MeanStd;
use bred_core::{
    bred_evaluate, replay_evaluate, BredConfig, Error, LoggedDataset, Logging, Record,
    ReplayOptions, SyntheticModel,
};

fn model() -> SyntheticModel {
    SyntheticModel::generate(&mut rng_stream(1, 0), 5).unwrap()
}

fn config(b: usize, bandwidth: Bandwidth) -> BredConfig {
    BredConfig {
        replicates: b,
        bandwidth,
        ..BredConfig::default()
    }
}

#[test]
fn expanded_acceptance_count_has_mean_t() {
    let model = model();
    let log = model.simulate_log(2_000, &mut rng_stream(2, 0)).unwrap();
    let factory = AlgoSpec::Random.configure(log.k(), log.d()).unwrap();
    let report =
        bred_evaluate(&factory, &log, &config(200, Bandwidth::Auto), Seed::new(2)).unwrap();
    let counts: Vec<f64> = report.accepted_counts().iter().map(|&c| c as f64).collect();
    let stats = MeanStd::of(&counts);
    let t = 2_000.0_f64;
    let sigma = (t * (1.0 - 0.1) / 200.0).sqrt();
    assert!(
        (stats.mean - t).abs() < 3.0 * sigma,
        "{} vs {t}",
        stats.mean
    );
}

#[test]
fn unjittered_single_replicate_is_replay_on_the_resample() {
    let log = model().simulate_log(1_500, &mut rng_stream(3, 0)).unwrap();
    for spec in [
        AlgoSpec::Ucb { alpha: 1.0 },
        AlgoSpec::LinUcb {
            alpha: 1.0,
            ridge: 1.0,
        },
    ] {
        let factory = spec.configure(log.k(), log.d()).unwrap();
        let seed = Seed::new(3);
        let report = bred_evaluate(&factory, &log, &config(1, Bandwidth::None), seed).unwrap();
        let s = seed.child(0);
        let resampled =
            bootstrap_resample(&log, log.k() * log.len(), &mut s.stream(purpose::RESAMPLE))
                .unwrap();
        let direct = replay_evaluate(
            &factory,
            &resampled,
            &mut s.stream(purpose::POLICY),
            ReplayOptions::default(),
        )
        .unwrap();
        assert_eq!(report.g_hat, direct.g_hat, "{spec}");
        assert_eq!(report.replicates[0].accepted, direct.accepted);
        assert!(report.degenerate);
    }
}

#[test]
fn all_ones_log_is_degenerate() {
    let records = (0..10).map(|_| Record::new(vec![0.5], 0, true)).collect();
    let log = LoggedDataset::new(records, 1, 2, Logging::Uniform).unwrap();
    let factory = AlgoSpec::Constant { action: 0 }.configure(2, 1).unwrap();
    let report = bred_evaluate(&factory, &log, &config(3, Bandwidth::None), Seed::new(0)).unwrap();
    assert_eq!(report.g_hat, 1.0);
    assert!(report.replicate_estimates().iter().all(|&g| g == 1.0));
    assert_eq!(report.sigma_hat, 0.0);
    assert!(report.degenerate);
    assert!(report.confidence_region.is_none());
    assert!(matches!(
        report.standardized(),
        Err(Error::DegenerateDistribution)
    ));
}

#[test]
fn never_matching_policy_empties_every_replicate() {
    let records = (0..10).map(|_| Record::new(vec![0.5], 1, true)).collect();
    let log = LoggedDataset::new(records, 1, 2, Logging::Uniform).unwrap();
    let factory = AlgoSpec::Constant { action: 0 }.configure(2, 1).unwrap();
    let err = bred_evaluate(&factory, &log, &config(4, Bandwidth::Auto), Seed::new(0)).unwrap_err();
    assert!(matches!(err, Error::AllReplicatesEmpty));
}

#[test]
fn empty_replicates_are_excluded_and_counted() {
    let reps = vec![
        Replicate {
            estimate: Some(0.4),
            accepted: 10,
            clicks: 4,
        },
        Replicate {
            estimate: None,
            accepted: 0,
            clicks: 0,
        },
        Replicate {
            estimate: Some(0.6),
            accepted: 10,
            clicks: 6,
        },
    ];
    let report = summarize(reps, 100, 0.0, 0.95).unwrap();
    assert_eq!(report.excluded_replicates, 1);
    assert!((report.g_hat - 0.5).abs() < 1e-15);
    let r = report.confidence_region.unwrap();
    assert!(r.lo <= 0.5 && 0.5 <= r.hi);
}

#[test]
fn g_hat_is_the_mean_of_included_estimates_and_standardization_is_exact() {
    let log = model().simulate_log(1_000, &mut rng_stream(4, 0)).unwrap();
    let factory = AlgoSpec::LinUcb {
        alpha: 1.0,
        ridge: 1.0,
    }
    .configure(log.k(), log.d())
    .unwrap();
    let report = bred_evaluate(&factory, &log, &config(20, Bandwidth::Auto), Seed::new(4)).unwrap();
    let est = report.replicate_estimates();
    assert_eq!(report.g_hat, est.iter().sum::<f64>() / est.len() as f64);
    assert_eq!(report.bandwidth, default_bandwidth(1_000));
    let z = report.standardized().unwrap();
    let stats = MeanStd::of(z.values());
    assert!(stats.mean.abs() < 1e-12);
    assert!((stats.sd - 1.0).abs() < 1e-12);
}

#[test]
fn regions_nest_and_shrink_with_t() {
    let model = model();
    let factory = AlgoSpec::Ucb { alpha: 1.0 }
        .configure(model.k(), model.d())
        .unwrap();
    let mut widths = Vec::new();
    for (i, t) in [500, 5_000].into_iter().enumerate() {
        let log = model.simulate_log(t, &mut rng_stream(5, i as u64)).unwrap();
        let report =
            bred_evaluate(&factory, &log, &config(40, Bandwidth::Auto), Seed::new(5)).unwrap();
        let wide = confidence_region(&report, 0.95).unwrap();
        let narrow = confidence_region(&report, 0.5).unwrap();
        assert!(wide.lo <= narrow.lo && narrow.hi <= wide.hi);
        assert!(wide.contains(report.g_hat));
        widths.push(wide.width());
    }
    assert!(widths[1] < widths[0], "{widths:?}");
}

#[test]
fn fixed_policy_bred_tracks_the_replay_sampling_mean() {
    let model = model();
    let action = 7;
    let truth = model.expected_click_probability(action);
    let factory = AlgoSpec::Constant { action }
        .configure(model.k(), model.d())
        .unwrap();
    let (mut bred, mut replay) = (Vec::new(), Vec::new());
    for i in 0..40 {
        let s = Seed::new(6).child(i);
        let log = model
            .simulate_log(2_000, &mut s.stream(purpose::CONTEXT))
            .unwrap();
        bred.push(
            bred_evaluate(&factory, &log, &config(50, Bandwidth::Auto), s)
                .unwrap()
                .g_hat,
        );
        let algo = FixedPolicy::constant(model.k(), action);
        replay.push(
            replay_with(algo, &log, &mut s.stream(purpose::POLICY), false)
                .unwrap()
                .0
                .g_hat,
        );
    }
    let (b, r) = (MeanStd::of(&bred), MeanStd::of(&replay));
    let se = b.std_err().hypot(r.std_err());
    assert!((b.mean - r.mean).abs() < 3.0 * se);
    assert!((b.mean - truth).abs() < 3.0 * b.std_err() + 1e-3);
}

#[test]
fn coverage_of_a_static_policy_is_near_nominal() {
    let model = model();
    let truth = model.expected_uniform_ctr();
    let factory = AlgoSpec::Random.configure(model.k(), model.d()).unwrap();
    let runs = 60;
    let covered = (0..runs)
        .filter(|&i| {
            let s = Seed::new(7).child(i);
            let log = model
                .simulate_log(1_000, &mut s.stream(purpose::CONTEXT))
                .unwrap();
            let report = bred_evaluate(&factory, &log, &config(40, Bandwidth::Auto), s).unwrap();
            report.confidence_region.unwrap().contains(truth)
        })
        .count();
    let rate = covered as f64 / runs as f64;
    assert!((0.8..=1.0).contains(&rate), "coverage {rate}");
}

#[test]
fn reports_are_reproducible_and_thread_independent() {
    let log = model().simulate_log(800, &mut rng_stream(8, 0)).unwrap();
    let factory = AlgoSpec::LinUcb {
        alpha: 1.0,
        ridge: 1.0,
    }
    .configure(log.k(), log.d())
    .unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            bred_evaluate(&factory, &log, &config(8, Bandwidth::Auto), Seed::new(8)).unwrap()
        })
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.replicate_estimates(), b.replicate_estimates());
    assert_eq!(a.g_hat.to_bits(), b.g_hat.to_bits());
    assert_eq!(a.confidence_region, b.confidence_region);
}

#[test]
fn non_uniform_logs_need_force() {
    let records = (0..10)
        .map(|i| Record::new(vec![0.5], i % 2, true))
        .collect();
    let log = LoggedDataset::new(records, 1, 2, Logging::Unknown).unwrap();
    let factory = AlgoSpec::Ucb { alpha: 1.0 }.configure(2, 1).unwrap();
    let err = bred_evaluate(&factory, &log, &config(2, Bandwidth::None), Seed::new(0)).unwrap_err();
    assert!(matches!(err, Error::NonUniformLogging));
    let forced = BredConfig {
        force: true,
        ..config(2, Bandwidth::None)
    };
    assert!(bred_evaluate(&factory, &log, &forced, Seed::new(0)).is_ok());
}

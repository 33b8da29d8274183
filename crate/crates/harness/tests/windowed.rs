use bred_core::bred::{Bandwidth, BredConfig};
use bred_core::format::PooledDataset;
use bred_core::rng::{purpose, rng_stream, Seed};
use bred_core::{AlgoSpec, SyntheticModel};
use bred_harness::window::{
    partition_by_action_pool, run_windowed_experiment, WindowOutcome, WindowRow, WindowedConfig,
};

fn model() -> SyntheticModel {
    SyntheticModel::generate(&mut rng_stream(1, 0), 5).unwrap()
}

fn config(permutations: usize) -> WindowedConfig {
    WindowedConfig {
        permutations,
        bred: BredConfig {
            replicates: 30,
            bandwidth: Bandwidth::Auto,
            ..BredConfig::default()
        },
    }
}

fn rows(outcomes: Vec<WindowOutcome>) -> Vec<WindowRow> {
    outcomes
        .into_iter()
        .map(|o| match o {
            WindowOutcome::Done(r) => r,
            other => panic!("unexpected {other:?}"),
        })
        .collect()
}

#[test]
fn bred_is_usually_closer_than_replay_on_a_subsampled_window() {
    let model = model();
    let pool = vec![0, 3, 5, 6, 8];
    let algo = AlgoSpec::Ucb { alpha: 1.0 };
    let reps = 50;
    let mut bred_wins = 0;
    for i in 0..reps {
        let s = Seed::new(21).child(i);
        let data = model
            .simulate_pooled(&[(pool.clone(), 2_000)], &mut s.stream(purpose::CONTEXT))
            .unwrap();
        let row = rows(run_windowed_experiment(&data, &algo, &config(100), s).unwrap()).remove(0);
        assert_eq!((row.t, row.k), (2_000, 5));
        if (row.bred - row.truth).abs() < (row.replay - row.truth).abs() {
            bred_wins += 1;
        }
    }
    let share = bred_wins as f64 / reps as f64;
    assert!(share >= 0.6, "BRED closer in {share} of repetitions");
}

#[test]
fn fixed_policy_estimates_stay_within_three_sigma() {
    let model = model();
    let algo = AlgoSpec::Constant { action: 1 };
    let data = model
        .simulate_pooled(
            &[(vec![2, 4, 7], 3_000), (vec![0, 4], 2_000)],
            &mut rng_stream(22, 0),
        )
        .unwrap();
    for row in rows(run_windowed_experiment(&data, &algo, &config(20), Seed::new(22)).unwrap()) {
        // The subsample keeps about T_i / K_i^2 records of the chosen arm.
        let n = (row.t / row.k) as f64 / row.k as f64;
        let sigma = (row.truth * (1.0 - row.truth) / n).sqrt();
        assert!((row.replay - row.truth).abs() < 3.0 * sigma, "{row:?}");
        assert!((row.bred - row.truth).abs() < 3.0 * sigma, "{row:?}");
    }
}

#[test]
fn short_windows_are_skipped_and_the_rest_evaluated() {
    let model = model();
    let segments = vec![
        (vec![0, 1, 2], 300),
        (vec![3, 4, 5, 6, 7], 4),
        (vec![0, 9], 200),
    ];
    let data = model
        .simulate_pooled(&segments, &mut rng_stream(23, 0))
        .unwrap();
    let windows = partition_by_action_pool(&data.pools, data.dataset.k());
    assert_eq!(
        windows.iter().map(|w| w.len()).sum::<usize>(),
        data.dataset.len()
    );
    let out = run_windowed_experiment(
        &data,
        &AlgoSpec::Ucb { alpha: 1.0 },
        &config(5),
        Seed::new(23),
    )
    .unwrap();
    assert_eq!(out.len(), 3);
    assert!(matches!(out[0], WindowOutcome::Done(_)));
    match &out[1] {
        WindowOutcome::Skipped { window, reason } => {
            assert_eq!(*window, 1);
            assert!(reason.contains("T_i=4 < K_i=5"), "{reason}");
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(out[2], WindowOutcome::Done(_)));
}

#[test]
fn unannotated_stream_is_one_full_pool_window() {
    let model = model();
    let log = model.simulate_log(500, &mut rng_stream(24, 0)).unwrap();
    let data = PooledDataset {
        pools: vec![None; log.len()],
        dataset: log,
    };
    let out =
        rows(run_windowed_experiment(&data, &AlgoSpec::Random, &config(5), Seed::new(24)).unwrap());
    assert_eq!(out.len(), 1);
    assert_eq!((out[0].t, out[0].k), (500, 10));
}

#[test]
fn windowed_runs_are_thread_independent() {
    let model = model();
    let segments = vec![
        (vec![0, 1, 2], 300),
        (vec![3, 4], 300),
        (vec![5, 6, 7, 8], 300),
    ];
    let data = model
        .simulate_pooled(&segments, &mut rng_stream(25, 0))
        .unwrap();
    let algo = AlgoSpec::LinUcb {
        alpha: 1.0,
        ridge: 1.0,
    };
    let run = |n| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap();
        pool.install(|| run_windowed_experiment(&data, &algo, &config(5), Seed::new(25)).unwrap())
    };
    assert_eq!(run(1), run(3));
}

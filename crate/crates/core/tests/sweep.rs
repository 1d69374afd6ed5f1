mod common;

use coopmec_core::montecarlo::{
    aggregate, run_sweep, run_trial, run_unit, sample_channels, trial_rng, ChannelMeans, SweepConfig, TrialOutcome,
    METRICS,
};
use coopmec_core::SolveSettings;

fn small_config(trials: usize) -> SweepConfig {
    // A weak direct link keeps most draws feasible.
    let means = ChannelMeans { pt_pr: 1e-6, ..ChannelMeans::default() };
    SweepConfig {
        nodes: 3,
        alpha_grid: vec![0.0, 0.5, 1.0],
        trials,
        seed: 99,
        channel_means: means,
        placements: vec![50.0],
        energy_levels: vec![0.5, 1.0],
        ..SweepConfig::default()
    }
}

#[test]
fn exponential_draws_have_the_right_law() {
    let mut rng = trial_rng(1, 0);
    let means = ChannelMeans::default();
    let n = 100_000;
    let (mut iot, mut above) = (0.0, 0usize);
    for _ in 0..n {
        let ch = sample_channels(&mut rng, &means, 1).unwrap();
        iot += ch.iot[0];
        if ch.pt_pr > 1e-3 {
            above += 1;
        }
    }
    assert!((iot / n as f64 - 5.0).abs() <= 0.03 * 5.0);
    let p = above as f64 / n as f64;
    assert!((p - (-1.0f64).exp()).abs() <= 0.02, "{p}");
}

#[test]
fn bad_means_are_rejected() {
    let means = ChannelMeans { iot: 0.0, ..ChannelMeans::default() };
    assert!(sample_channels(&mut trial_rng(1, 0), &means, 2).is_err());
}

#[test]
fn single_trial_report_equals_the_direct_solve() {
    let cfg = SweepConfig {
        energy_levels: vec![1.0],
        ..small_config(1)
    };
    let report = run_sweep(&cfg).unwrap();
    assert_eq!(report.cells.len(), 3);
    let ch = sample_channels(&mut trial_rng(99, 0), &cfg.channel_means, 3).unwrap();
    for (cell, &alpha) in report.cells.iter().zip(&cfg.alpha_grid) {
        let inst = cfg.instance(alpha, 50.0, 1.0, ch.clone()).unwrap();
        let TrialOutcome::Solved(m) = run_trial(&inst, &SolveSettings::default()) else {
            panic!("expected a solved trial");
        };
        assert_eq!(cell.n_total, 1);
        assert_eq!(cell.n_feasible, 1);
        for (i, v) in m.values().iter().enumerate() {
            assert_eq!(cell.metrics[i].mean, *v, "{}", METRICS[i]);
            assert_eq!(cell.metrics[i].std, 0.0);
        }
    }
}

#[test]
fn paired_trials_move_with_alpha() {
    let cfg = small_config(4);
    let report = run_sweep(&cfg).unwrap();
    let rows = report.csv_rows();
    assert_eq!(rows.len(), 2 * 3 * METRICS.len());
    for cell in &report.cells {
        assert!((0.0..=1.0).contains(&cell.feasible_fraction()));
    }
    for e in 0..2 {
        for t in 0..4 {
            let idx = e * 4 + t;
            let recs = run_unit(&cfg, idx).unwrap();
            let solved: Vec<_> = recs
                .iter()
                .filter_map(|r| match r.outcome {
                    TrialOutcome::Solved(m) => Some(m),
                    _ => None,
                })
                .collect();
            if solved.len() != recs.len() {
                continue;
            }
            for w in solved.windows(2) {
                assert!(w[1].relay_rate >= w[0].relay_rate * (1.0 - 1e-7));
                assert!(w[1].computation_rate <= w[0].computation_rate * (1.0 + 1e-7));
            }
            for m in &solved {
                assert!(m.utility_gap >= -1e-6 * m.optimal_utility);
                assert!(m.primary_gain >= 1.0 - 1e-9);
            }
        }
    }
}

#[test]
fn aggregation_ignores_unit_order_and_reruns_are_identical() {
    let cfg = small_config(2);
    let units: Vec<_> = (0..cfg.units()).map(|i| (i, run_unit(&cfg, i).unwrap())).collect();
    let forward = aggregate(&cfg, units.clone());
    let backward = aggregate(&cfg, units.into_iter().rev().collect());
    assert_eq!(forward, backward);
    assert_eq!(forward, run_sweep(&cfg).unwrap());
}

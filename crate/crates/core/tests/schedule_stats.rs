//! Statistical behavior of the hash-driven disclosure schedule: uniformity,
//! avalanche on secret changes, and Monte-Carlo agreement with the analytic
//! vote-success probability.

use hideprint_core::protocol::{
    majority_success_prob, mc_vote_success, noise_level_at, simulate_disclosure, DisclosureConfig,
    ModelBank,
};

/// 1% critical value of the chi-square distribution with 5 degrees of
/// freedom; a statistic below it means p > 0.01.
const CHI2_CRIT_DOF5_P01: f64 = 15.086272469388987;

#[test]
fn schedule_is_uniform_over_levels() {
    let secret = b"acceptance-secret";
    let m = 6usize;
    let slots = 60_000u64;
    let mut counts = vec![0u64; m];
    for slot in 0..slots {
        counts[noise_level_at(secret, slot, m).unwrap()] += 1;
    }
    let expected = slots as f64 / m as f64;
    let chi2: f64 = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum();
    assert!(
        chi2 < CHI2_CRIT_DOF5_P01,
        "chi-square {chi2:.2} exceeds the 1% critical value; counts {counts:?}"
    );
}

#[test]
fn changing_one_secret_byte_scrambles_the_schedule() {
    let base = b"the quick brown fox".to_vec();
    let slots = 10_000u64;

    // On a binary schedule, agreement between independent uniform streams
    // sits near one half.
    let mut flipped = base.clone();
    flipped[7] ^= 0x01;
    let agree_binary = (0..slots)
        .filter(|&t| {
            noise_level_at(&base, t, 2).unwrap() == noise_level_at(&flipped, t, 2).unwrap()
        })
        .count() as f64
        / slots as f64;
    assert!(
        (0.4..=0.6).contains(&agree_binary),
        "binary agreement {agree_binary}"
    );

    // With six levels the chance match rate drops to about one sixth.
    let agree_six = (0..slots)
        .filter(|&t| {
            noise_level_at(&base, t, 6).unwrap() == noise_level_at(&flipped, t, 6).unwrap()
        })
        .count() as f64
        / slots as f64;
    assert!(
        (0.13..=0.21).contains(&agree_six),
        "six-level agreement {agree_six}"
    );
}

#[test]
fn monte_carlo_vote_success_matches_the_analytic_value() {
    let iters = 200_000u64;
    for (votes, p) in [(3u64, 0.7), (6, 0.66), (6, 0.96), (9, 0.55)] {
        let analytic = majority_success_prob(votes, p).unwrap();
        let mc = mc_vote_success(votes, p, iters, 1234).unwrap();
        let sigma = (analytic * (1.0 - analytic) / iters as f64).sqrt();
        assert!(
            (mc - analytic).abs() <= 3.0 * sigma.max(1e-6),
            "votes {votes} p {p}: MC {mc} vs analytic {analytic} (sigma {sigma:.6})"
        );
    }
}

#[test]
fn secret_holder_never_trails_the_adversary() {
    let cfg = DisclosureConfig {
        secret: b"slot-secret".to_vec(),
        n_slots: 400,
        votes_per_slot: 5,
        n_levels: 6,
        n_classes: 10,
    };
    // Matched models hold accuracy across levels; the outsider's degrades
    // as the scheduled noise rises.
    let bank = ModelBank {
        legit_accuracy: vec![0.95, 0.94, 0.93, 0.92, 0.91, 0.90],
        adversary_accuracy: vec![0.95, 0.70, 0.45, 0.30, 0.20, 0.12],
    };
    for seed in 0..5u64 {
        let report = simulate_disclosure(&cfg, &bank, seed).unwrap();
        assert!(
            report.legit_rate >= report.adversary_rate,
            "seed {seed}: legit {} < adversary {}",
            report.legit_rate,
            report.adversary_rate
        );
        assert!(report.legit_rate > 0.9);
    }
}

#[test]
fn disclosure_reruns_are_slot_for_slot_identical() {
    let cfg = DisclosureConfig {
        secret: b"replay".to_vec(),
        n_slots: 100,
        votes_per_slot: 3,
        n_levels: 4,
        n_classes: 5,
    };
    let bank = ModelBank {
        legit_accuracy: vec![0.9; 4],
        adversary_accuracy: vec![0.4; 4],
    };
    let a = simulate_disclosure(&cfg, &bank, 7).unwrap();
    let b = simulate_disclosure(&cfg, &bank, 7).unwrap();
    assert_eq!(a.outcomes, b.outcomes);
}

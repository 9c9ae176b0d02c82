//! Acceptance suite: one test per release criterion, each printing a
//! pass line with its headline numbers (visible under `--nocapture`).
//!
//! Tolerances and scales are part of the release contract and are pinned
//! here rather than shared with the unit tests.

use std::time::Instant;

use singlet_core::analysis::{
    check_malus, check_measurement_independence, check_outcome_independence,
    check_setting_independence, check_reproduction, chsh_value, classical_bound_oracle,
    classical_strategy_values, sample_grid, sample_remote_change_grid,
};
use singlet_core::distribution::build_unnormalized_distribution;
use singlet_core::geometry::{dot, planar_direction, random_direction};
use singlet_core::model::{correlator_over, qm_singlet_joint};
use singlet_core::montecarlo::{run_experiment, tally_to_joint};
use singlet_core::protocols::{
    binned_joint_check, locality_audit, locality_audit_signaling, run_conspiracy,
    run_signaling, BitSource, ConspiracyConfig,
};
use singlet_core::rng::{derive_seed, substream};
use singlet_core::{Outcome, Settings, UnitVec3};

use rand::Rng as _;

const SEED: u64 = 0x5eed_ace5;

#[test]
fn criterion_1_exact_reproduction_on_a_20x20_settings_grid() {
    let start = Instant::now();
    let mut rng_a = substream(SEED, 10);
    let mut rng_b = substream(SEED, 11);
    let a_dirs: Vec<UnitVec3> = (0..20).map(|_| random_direction(&mut rng_a)).collect();
    let b_dirs: Vec<UnitVec3> = (0..20).map(|_| random_direction(&mut rng_b)).collect();
    let grid: Vec<Settings> = a_dirs
        .iter()
        .flat_map(|&a| b_dirs.iter().map(move |&b| Settings::new(a, b)))
        .collect();
    assert_eq!(grid.len(), 400);

    let max_deviation = check_reproduction(&grid).expect("non-empty grid");
    let elapsed = start.elapsed();
    assert!(
        max_deviation <= 1e-12,
        "averaged joint deviates from the singlet law by {max_deviation}"
    );
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget is 1 s");
    println!(
        "criterion 1 (exact reproduction, 20x20 grid): pass, max deviation {max_deviation:.3e} in {elapsed:?}"
    );
}

#[test]
fn criterion_2_hypothesis_profile_on_1000_point_grids() {
    let si = check_setting_independence(&sample_remote_change_grid(1000, derive_seed(SEED, 20)))
        .expect("non-empty grid");
    let oi = check_outcome_independence(&sample_grid(1000, derive_seed(SEED, 21)))
        .expect("non-empty grid");
    let malus = check_malus(&sample_grid(1000, derive_seed(SEED, 22))).expect("non-empty grid");
    for report in [&si, &oi, &malus] {
        assert_eq!(report.n_grid, 1000);
        assert!(
            report.max_deviation <= 1e-10,
            "{} deviates by {}",
            report.name,
            report.max_deviation
        );
    }

    // One station axis changes while the other stays: total variation 1/2.
    let s1 = Settings::new(UnitVec3::X, UnitVec3::Y);
    let s2 = Settings::new(UnitVec3::Z, UnitVec3::Y);
    let generic = check_measurement_independence(s1, s2);
    assert_eq!(generic.max_deviation, 0.5);
    // Identical and swapped settings leave the hidden-variable
    // distribution untouched.
    assert_eq!(check_measurement_independence(s1, s1).max_deviation, 0.0);
    let swapped = Settings::new(s1.b, s1.a);
    assert_eq!(check_measurement_independence(s1, swapped).max_deviation, 0.0);

    println!(
        "criterion 2 (hypothesis profile): pass, SI {:.1e} / OI {:.1e} / Malus {:.1e}, MI 1/2 generic and 0 identical/swapped",
        si.max_deviation, oi.max_deviation, malus.max_deviation
    );
}

#[test]
fn criterion_3_chsh_analytic_bound_and_empirical() {
    let start = Instant::now();
    let two_sqrt_2 = 2.0 * std::f64::consts::SQRT_2;
    let at = |deg: f64| planar_direction(deg.to_radians()).expect("finite angle");
    let (a, a_alt, b, b_alt) = (at(0.0), at(90.0), at(45.0), at(135.0));

    let s_analytic = chsh_value(a, a_alt, b, b_alt, |x, y| -dot(x, y));
    assert!(
        (s_analytic - two_sqrt_2).abs() < 1e-9,
        "analytic S = {s_analytic}"
    );

    assert_eq!(classical_bound_oracle(), 2.0);
    for value in classical_strategy_values() {
        assert_eq!(value, 2.0);
    }

    // Empirical S from four independent million-trial experiments.
    let n = 1_000_000u64;
    let e = |x: UnitVec3, y: UnitVec3, k: u64| -> f64 {
        let tally = run_experiment(Settings::new(x, y), n, derive_seed(SEED, 30 + k));
        tally_to_joint(&tally).expect("n > 0").correlator()
    };
    let s_empirical =
        (e(a, b, 0) - e(a, b_alt, 1)).abs() + (e(a_alt, b, 2) + e(a_alt, b_alt, 3)).abs();
    let elapsed = start.elapsed();
    assert!(
        (s_empirical - two_sqrt_2).abs() < 0.01,
        "empirical S = {s_empirical}"
    );
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}, budget is 30 s");
    println!(
        "criterion 3 (CHSH): pass, analytic {s_analytic:.12}, bound 2 from 16 strategies, empirical {s_empirical:.4} in {elapsed:?}"
    );
}

#[test]
fn criterion_4_unnormalized_distribution_quarters_the_correlator() {
    let mut rng = substream(SEED, 40);
    let mut grid: Vec<Settings> = (0..50)
        .map(|_| Settings::new(random_direction(&mut rng), random_direction(&mut rng)))
        .collect();
    for deg in [0.0f64, 30.0, 45.0, 60.0, 90.0, 120.0, 180.0] {
        grid.push(Settings::from_angle(deg.to_radians()).expect("finite angle"));
    }

    let mut max_deviation = 0.0f64;
    for &s in &grid {
        let d = build_unnormalized_distribution(s);
        let expected = -dot(s.a, s.b) / 4.0;
        max_deviation = max_deviation.max((correlator_over(&d, s) - expected).abs());
    }
    assert!(
        max_deviation <= 1e-12,
        "correlator deviates from -a.b/4 by {max_deviation}"
    );
    println!(
        "criterion 4 (unnormalized regression): pass, max |E + a.b/4| = {max_deviation:.3e} over {} settings",
        grid.len()
    );
}

#[test]
fn criterion_5_monte_carlo_convergence_over_100_seeded_runs() {
    let n = 100_000u64;
    let mut rng = substream(SEED, 50);
    let mut converged = 0u32;
    for k in 0..100u64 {
        let s = Settings::new(random_direction(&mut rng), random_direction(&mut rng));
        let tally = run_experiment(s, n, derive_seed(SEED, 500 + k));
        let joint = tally_to_joint(&tally).expect("n > 0");
        // Standard error of each cell under the exact law; never zero for
        // settings drawn off the dot = +-1 poles.
        let ok = Outcome::ALL.iter().all(|&out| {
            let p = qm_singlet_joint(out, s);
            let stderr = (p * (1.0 - p) / n as f64).sqrt();
            (joint.p(out) - p).abs() <= 4.0 * stderr
        });
        converged += u32::from(ok);
    }
    assert!(converged >= 95, "only {converged}/100 runs within 4 stderr");
    println!(
        "criterion 5 (Monte Carlo convergence): pass, {converged}/100 runs within 4 stderr at n = {n}"
    );
}

#[test]
fn criterion_6_signaling_is_deterministic_and_the_sender_role_is_fair() {
    let n = 10_000usize;
    let s = Settings::new(UnitVec3::X, UnitVec3::Y);
    let mut rng = substream(SEED, 60);
    let bits: Vec<bool> = (0..n).map(|_| rng.random::<bool>()).collect();
    let session = run_signaling(&bits, s, derive_seed(SEED, 61)).expect("non-collinear");
    assert_eq!(session.successes, n as u64, "transmission is not deterministic");
    assert_eq!(session.success_rate(), 1.0);

    let fairness_band = 4.0 * (0.25f64 / n as f64).sqrt();
    let sender_a = session.sender_a_fraction();
    assert!(
        (sender_a - 0.5).abs() < fairness_band,
        "sender-A fraction {sender_a} off 1/2 beyond {fairness_band}"
    );
    println!(
        "criterion 6 (signaling): pass, success rate 1.0 over {n} bits, sender-A fraction {sender_a:.4}"
    );
}

#[test]
fn criterion_7_conspiracy_statistics_and_locality_audits() {
    // Faithful million-event run: binned joint matches the law and every
    // hidden pair is anticorrelated bit for bit.
    let cfg = ConspiracyConfig::from_master_seed(SEED, 1_000_000);
    let run = run_conspiracy(&cfg);
    let bins = binned_joint_check(&run.events, 20).expect("non-empty log");
    assert!(bins.len() >= 20, "only {} occupied bins", bins.len());
    for bin in &bins {
        assert!(
            bin.within_four_stderr,
            "bin [{}, {}) deviates by {} over {} events",
            bin.lo, bin.hi, bin.max_deviation, bin.n
        );
    }
    assert!(run.events.iter().all(|e| {
        e.hidden
            .u
            .components()
            .iter()
            .zip(e.hidden.v.components())
            .all(|(uc, vc)| *uc == -vc)
    }));
    let worst_bin = bins.iter().map(|b| b.max_deviation).fold(0.0, f64::max);
    drop(run);

    // Varying the B-side stream seed must not move A's marginal beyond
    // statistical noise.
    let audit_n = 100_000u64;
    let audit_cfg = ConspiracyConfig::from_master_seed(derive_seed(SEED, 70), audit_n);
    let remote: Vec<u64> = (0..10).map(|k| derive_seed(SEED, 700 + k)).collect();
    let audit = locality_audit(&audit_cfg, &remote);
    let noise_band = 4.0 * (0.25f64 / audit_n as f64).sqrt();
    assert!(
        audit.audit_max_shift < noise_band,
        "conspiracy audit shift {} exceeds {noise_band}",
        audit.audit_max_shift
    );

    // The same audit against the signaling realization: B's message policy
    // is written straight into A's outcomes.
    let s = Settings::new(UnitVec3::X, UnitVec3::Y);
    let policies = [
        BitSource::Seeded(derive_seed(SEED, 71)),
        BitSource::Zeros,
        BitSource::Ones,
    ];
    let signaling = locality_audit_signaling(s, 2_000, derive_seed(SEED, 72), &policies)
        .expect("non-empty policies");
    assert!(
        signaling.audit_max_shift > 0.25,
        "signaling audit shift {} is too small to flag",
        signaling.audit_max_shift
    );

    println!(
        "criterion 7 (conspiracy): pass, {} bins within 4 stderr (worst {worst_bin:.4}), audit shift {:.4} < {noise_band:.4} vs signaling {:.3}",
        bins.len(),
        audit.audit_max_shift,
        signaling.audit_max_shift
    );
}

//! Grid checks for certification, twirling and channel invariants that need
//! the numerical searches.

use qldp::channels::{compose, conjugated_channel, depolarizing, random_channel, twirl};
use qldp::pauli::clifford_group;
use qldp::privacy::{certify_qldp, depolarizing_privacy_profile, PrivacyBudget};
use qldp::qops::{max_abs_diff, random_density, random_unitary};
use qldp::search::SearchConfig;
use qldp::shadows::{private_shadow_p_hat, shadow_composite_channel};
use qldp::stats::stream_rng;

fn search(restarts: usize) -> SearchConfig {
    SearchConfig::default().with_restarts(restarts)
}

#[test]
fn certification_matches_profile_on_grid() {
    for d in [2usize, 3, 4, 8] {
        for eps in [0.1, 0.5, 1.0, 2.0] {
            for p in [0.2, 0.6] {
                let b = PrivacyBudget::new(eps, 0.0).unwrap();
                let r = certify_qldp(&depolarizing(d, p).unwrap(), &b, &search(32)).unwrap();
                let want = depolarizing_privacy_profile(d, p, b.gamma()).unwrap();
                assert!((r.sup_estimate - want).abs() < 1e-6, "d={d} eps={eps} p={p}: {} vs {want}", r.sup_estimate);
            }
        }
    }
}

#[test]
fn certification_monotone_in_epsilon_and_p() {
    let ch = depolarizing(3, 0.4).unwrap();
    let mut last = f64::INFINITY;
    for eps in [0.0, 0.2, 0.5, 1.0] {
        let s = certify_qldp(&ch, &PrivacyBudget::new(eps, 0.0).unwrap(), &search(16)).unwrap().sup_estimate;
        assert!(s <= last + 1e-9);
        last = s;
    }
    let b = PrivacyBudget::new(0.3, 0.0).unwrap();
    let mut last = f64::INFINITY;
    for p in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let s = certify_qldp(&depolarizing(3, p).unwrap(), &b, &search(16)).unwrap().sup_estimate;
        assert!(s <= last + 1e-9);
        last = s;
    }
}

#[test]
fn post_processing_does_not_increase_leakage() {
    let b = PrivacyBudget::new(0.5, 0.0).unwrap();
    for seed in 0..6u64 {
        let mut rng = stream_rng(seed, 0);
        let n = random_channel(2, 2, 2, &mut rng);
        let r = random_channel(2, 3, 2, &mut rng);
        let before = certify_qldp(&n, &b, &search(48)).unwrap().sup_estimate;
        let after = certify_qldp(&compose(&r, &n).unwrap(), &b, &search(48)).unwrap().sup_estimate;
        assert!(after <= before + 1e-6, "seed {seed}: {after} > {before}");
    }
}

#[test]
fn unitary_conjugation_preserves_leakage() {
    let mut rng = stream_rng(4, 0);
    let b = PrivacyBudget::new(0.7, 0.0).unwrap();
    let ch = depolarizing(3, 0.35).unwrap();
    let base = certify_qldp(&ch, &b, &search(32)).unwrap().sup_estimate;
    for _ in 0..3 {
        let u = random_unitary(3, &mut rng);
        let conj = certify_qldp(&conjugated_channel(&ch, &u).unwrap(), &b, &search(32)).unwrap().sup_estimate;
        assert!((conj - base).abs() < 1e-8);
    }
}

#[test]
fn channels_preserve_states() {
    let mut rng = stream_rng(5, 0);
    let chans = [
        depolarizing(2, 0.3).unwrap(),
        random_channel(2, 2, 3, &mut rng),
        twirl(&random_channel(2, 2, 2, &mut rng), clifford_group(1).unwrap()).unwrap(),
        shadow_composite_channel(1, 0.2).unwrap(),
    ];
    for ch in &chans {
        for _ in 0..100 {
            let rank = 1 + (rand::Rng::random_range(&mut rng, 0..2usize));
            let rho = random_density(2, rank, &mut rng).unwrap();
            ch.apply(&rho).expect("output must be a state");
        }
    }
}

#[test]
fn twirl_is_idempotent() {
    let mut rng = stream_rng(6, 0);
    let g = clifford_group(1).unwrap();
    let once = twirl(&random_channel(2, 2, 2, &mut rng), g).unwrap();
    let twice = twirl(&once, g).unwrap();
    assert!(max_abs_diff(once.superoperator(), twice.superoperator()) < 1e-10);
}

#[test]
fn shadow_composite_is_private() {
    for eps in [0.1, 0.5, 1.0] {
        for delta in [0.0, 0.1] {
            let b = PrivacyBudget::new(eps, delta).unwrap();
            let p_hat = private_shadow_p_hat(2, &b).unwrap();
            let ch = shadow_composite_channel(1, p_hat).unwrap();
            let r = certify_qldp(&ch, &b, &search(32)).unwrap();
            assert!(r.sup_estimate <= delta + 1e-6, "eps={eps} delta={delta}: {}", r.sup_estimate);
        }
    }
}

use dce_core::analytic;
use dce_core::dynamics::{simulate, NumericRun};
use dce_core::tolerances::{
    DEFECT_SCALING, OFF_RESONANCE_GROWTH, ORACLE_REL_TOL, RATIO_TOL, TRUNCATION_DRIFT,
};
use dce_core::{CavityConfig, Truncation};

fn run(cfg: &CavityConfig, k_max: usize) -> NumericRun {
    simulate(cfg, &Truncation::with_modes(k_max)).unwrap()
}

fn right_wall(epsilon: f64, t_final: f64, gamma: f64) -> CavityConfig {
    CavityConfig::new(epsilon, t_final).with_right(1.0, gamma, 0.0)
}

#[test]
fn resonant_pair_matches_secular_beta() {
    let r = run(&right_wall(1e-4, 1000.0, 2.0), 8);
    let beta = &r.pair.beta;
    assert!((beta[[0, 0]].norm() - 0.05).abs() <= 0.02 * 0.05, "{}", beta[[0, 0]]);
    // (1,3) and (3,1) absorb two drive quanta and grow at second order
    let second_order = [(0, 2), (2, 0)];
    for ((n, k), b) in beta.indexed_iter() {
        if (n, k) != (0, 0) && !second_order.contains(&(n, k)) {
            assert!(b.norm() <= 1e-3, "beta[{n},{k}] = {b}");
        }
    }
    assert!(r.defects[0] <= 1e-3);
}

#[test]
fn two_quantum_pair_grows_as_square_of_time() {
    let b13 = |t| run(&right_wall(1e-4, t, 2.0), 8).pair.beta[[0, 2]].norm();
    let ratio = b13(1000.0) / b13(500.0);
    assert!((ratio - 4.0).abs() <= RATIO_TOL * 4.0, "ratio {ratio}");
}

#[test]
fn destructive_pair_cancels() {
    let cfg = CavityConfig::new(1e-4, 1000.0)
        .with_left(1.0, 2.0, 0.0)
        .with_right(1.0, 2.0, 0.0);
    let r = run(&cfg, 8);
    assert!(r.pair.beta[[0, 0]].norm() <= 1e-3, "{}", r.pair.beta[[0, 0]]);
}

#[test]
fn defect_is_second_order_in_epsilon() {
    let d = |eps| run(&right_wall(eps, 100.0, 2.0), 8).defects[0];
    let ratio = d(1e-3) / d(5e-4);
    assert!(
        (DEFECT_SCALING.0..=DEFECT_SCALING.1).contains(&ratio),
        "ratio {ratio}"
    );
}

#[test]
fn resonant_beta_grows_linearly_in_time() {
    let b = |t| run(&right_wall(1e-3, t, 2.0), 8).pair.beta[[0, 0]].norm();
    let ratio = b(100.0) / b(50.0);
    assert!((ratio - 2.0).abs() <= RATIO_TOL * 2.0, "ratio {ratio}");
}

#[test]
fn detuned_drive_does_not_grow() {
    let peak = |t| run(&right_wall(1e-4, t, 2.5), 8).spectrum.peak();
    let ratio = peak(2000.0) / peak(1000.0);
    assert!(ratio < OFF_RESONANCE_GROWTH, "ratio {ratio}");
    assert!(analytic::photon_spectrum(&right_wall(1e-4, 1000.0, 2.5)).no_secular_term);
}

#[test]
fn common_phase_shift_changes_only_non_secular_content() {
    let base = CavityConfig::new(1e-3, 100.0)
        .with_left(1.0, 2.0, 0.3)
        .with_right(1.0, 2.0, 0.0);
    let mut shifted = base;
    shifted.phi_left += 1.0;
    shifted.phi_right += 1.0;
    let (a, b) = (run(&base, 8).spectrum, run(&shifted, 8).spectrum);
    let peak = a.peak();
    for k in 1..=8 {
        assert!((a.n_k(k) - b.n_k(k)).abs() <= ORACLE_REL_TOL * peak, "k = {k}");
    }
    let (a, b) = (analytic::photon_spectrum(&base), analytic::photon_spectrum(&shifted));
    for k in 1..=2 {
        assert!((a.n_k(k) - b.n_k(k)).abs() <= 1e-15 * a.peak());
    }
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let cfg = CavityConfig::new(1e-3, 40.0)
        .with_left(0.5, 3.0, 0.2)
        .with_right(1.0, 2.0, 0.0);
    let (a, b) = (run(&cfg, 6), run(&cfg, 6));
    let bits = |r: &NumericRun| -> Vec<u64> {
        r.pair
            .beta
            .iter()
            .chain(r.pair.alpha.iter())
            .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
            .collect()
    };
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.spectrum, b.spectrum);
}

#[test]
fn low_modes_converge_in_truncation() {
    // same secular parameter as the benchmark, shorter window
    let cfg = right_wall(1e-3, 100.0, 4.0);
    let (small, large) = (run(&cfg, 8).spectrum, run(&cfg, 32).spectrum);
    for k in 1..=3 {
        let drift = (small.n_k(k) - large.n_k(k)).abs() / large.n_k(k);
        assert!(drift < TRUNCATION_DRIFT, "k = {k}: drift {drift}");
    }
}

//! Closed-form first-order resonance results.
//!
//! Only secular terms (those growing linearly in the oscillation time) are
//! kept. They exist only when a drive frequency ratio `gamma` is an integer,
//! and then couple the pairs `n + k = gamma`. Every quantity carries the
//! prefactor `(epsilon * omega_1 * T / 2)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cavity::{CavityConfig, Side};
use crate::error::{Error, Result};
use crate::spectrum::{Engine, Spectrum, ValidityWarning};

/// `|gamma - round(gamma)|` below which a frequency ratio counts as resonant.
pub const INTEGER_TOLERANCE: f64 = 1e-9;

/// Above this `epsilon * omega_1 * T` the first-order result is flagged.
pub const MAX_SECULAR_PARAMETER: f64 = 0.3;

/// Below this `omega_1 * T` the secular approximation is flagged.
pub const MIN_DURATION: f64 = 20.0;

/// `Some(round(gamma))` when `gamma` is an integer within [`INTEGER_TOLERANCE`].
pub fn resonant_ratio(gamma: f64) -> Option<u64> {
    let rounded = gamma.round();
    if rounded >= 1.0 && (gamma - rounded).abs() <= INTEGER_TOLERANCE {
        Some(rounded as u64)
    } else {
        None
    }
}

fn parity_sign(m: u64) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `epsilon * omega_1 * T / 2`.
fn prefactor(cfg: &CavityConfig) -> f64 {
    0.5 * cfg.secular_parameter()
}

/// Whether wall `side` drives the pair `(n, k)` secularly.
fn drives_pair(cfg: &CavityConfig, side: Side, n: usize, k: usize) -> Option<u64> {
    resonant_ratio(cfg.gamma(side)).filter(|&g| (n + k) as u64 == g)
}

/// Warnings for configurations outside the regime where the secular,
/// first-order result is trustworthy.
pub fn validity_warnings(cfg: &CavityConfig) -> Vec<ValidityWarning> {
    let mut warnings = Vec::new();
    let secular = cfg.secular_parameter();
    if secular > MAX_SECULAR_PARAMETER {
        warnings.push(ValidityWarning::LargeSecularParameter(secular));
    }
    let duration = cfg.omega1() * cfg.t_final;
    if duration < MIN_DURATION {
        warnings.push(ValidityWarning::ShortDuration(duration));
    }
    warnings
}

/// True when no moving wall has an integer frequency ratio.
pub fn has_no_secular_term(cfg: &CavityConfig) -> bool {
    Side::BOTH
        .iter()
        .all(|&s| cfg.amplitude(s) == 0.0 || resonant_ratio(cfg.gamma(s)).is_none())
}

/// First-order secular Bogoliubov coefficient of one `(n, k)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticBeta {
    pub n: usize,
    pub k: usize,
    pub value: Complex64,
    /// False when no wall is resonant with the pair; `value` is then exactly zero.
    pub secular: bool,
}

pub fn analytic_beta(n: usize, k: usize, cfg: &CavityConfig) -> AnalyticBeta {
    assert!(n >= 1 && k >= 1, "mode indices are 1-based");
    let mut value = Complex64::new(0.0, 0.0);
    let mut secular = false;
    let root = ((k * n) as f64).sqrt();
    if let Some(g) = drives_pair(cfg, Side::Right, n, k) {
        value += Complex64::from_polar(parity_sign(g) * cfg.a_right, cfg.phi_right);
        secular = true;
    }
    if drives_pair(cfg, Side::Left, n, k).is_some() {
        value -= Complex64::from_polar(cfg.a_left, cfg.phi_left);
        secular = true;
    }
    AnalyticBeta {
        n,
        k,
        value: value * (prefactor(cfg) * root),
        secular,
    }
}

/// `beta_nk` to first order in epsilon, keeping only secular terms.
pub fn beta_first_order(n: usize, k: usize, cfg: &CavityConfig) -> Complex64 {
    analytic_beta(n, k, cfg).value
}

/// Photons created in mode `k` out of the initial mode `n`, written as the
/// single-wall yields plus their interference term.
pub fn photon_number_pair(n: usize, k: usize, cfg: &CavityConfig) -> f64 {
    assert!(n >= 1 && k >= 1, "mode indices are 1-based");
    let c2 = prefactor(cfg).powi(2);
    let single = |side: Side| {
        if drives_pair(cfg, side, n, k).is_some() {
            c2 * (k * n) as f64 * cfg.amplitude(side).powi(2)
        } else {
            0.0
        }
    };
    let n_left = single(Side::Left);
    let n_right = single(Side::Right);
    let cross = match resonant_ratio(cfg.gamma_right) {
        Some(g) if n_left > 0.0 && n_right > 0.0 => {
            2.0 * parity_sign(g) * n_left.sqrt() * n_right.sqrt() * cfg.phase_delta().cos()
        }
        _ => 0.0,
    };
    (n_left + n_right - cross).max(0.0)
}

/// `N_k^A = (epsilon omega_1 T / 2)^2 k (gamma_A - k) a_A^2` for a resonant
/// wall, zero otherwise.
pub fn single_wall_number(k: usize, cfg: &CavityConfig, side: Side) -> f64 {
    match resonant_ratio(cfg.gamma(side)) {
        Some(g) if (k as u64) < g => {
            prefactor(cfg).powi(2) * (k as f64) * (g - k as u64) as f64 * cfg.amplitude(side).powi(2)
        }
        _ => 0.0,
    }
}

/// Total photons per final mode, summed over initial modes.
///
/// Lists modes `1..=ceil(max gamma)`; every mode at or above the largest
/// resonant ratio is zero.
pub fn photon_spectrum(cfg: &CavityConfig) -> Spectrum {
    let modes = cfg.max_gamma().ceil().max(1.0) as usize;
    let c2 = prefactor(cfg).powi(2);
    let equal = match (resonant_ratio(cfg.gamma_left), resonant_ratio(cfg.gamma_right)) {
        (Some(l), Some(r)) if l == r => Some(r),
        _ => None,
    };
    let values = (1..=modes)
        .map(|k| {
            let mut n = single_wall_number(k, cfg, Side::Right) + single_wall_number(k, cfg, Side::Left);
            if let Some(g) = equal {
                if (k as u64) < g {
                    let kf = k as f64;
                    n -= parity_sign(g)
                        * 2.0
                        * c2
                        * kf
                        * (g as f64 - kf)
                        * cfg.a_right
                        * cfg.a_left
                        * cfg.phase_delta().cos();
                }
            }
            n.max(0.0)
        })
        .collect();
    let mut spectrum = Spectrum::new(values, Engine::Analytic, *cfg);
    spectrum.no_secular_term = has_no_secular_term(cfg);
    spectrum.warnings = validity_warnings(cfg);
    spectrum
}

/// Coefficient of `cos(phi_left - phi_right)` in `N_k`, normalized by the
/// incoherent sum `N_k^L + N_k^R`. Requires equal integer frequency ratios.
pub fn interference_visibility(cfg: &CavityConfig) -> Result<f64> {
    let g = match (resonant_ratio(cfg.gamma_left), resonant_ratio(cfg.gamma_right)) {
        (Some(l), Some(r)) if l == r => r,
        (Some(_), Some(_)) => {
            return Err(Error::Visibility(format!(
                "gamma_left = {} and gamma_right = {} differ",
                cfg.gamma_left, cfg.gamma_right
            )))
        }
        _ => {
            return Err(Error::Visibility(
                "frequency ratios are not integers".to_string(),
            ))
        }
    };
    let incoherent = cfg.a_left.powi(2) + cfg.a_right.powi(2);
    if incoherent == 0.0 {
        return Ok(0.0);
    }
    Ok(-parity_sign(g) * 2.0 * cfg.a_left * cfg.a_right / incoherent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn single_right(gamma: f64, epsilon: f64, t: f64) -> CavityConfig {
        CavityConfig::new(epsilon, t).with_right(1.0, gamma, 0.0).with_left(0.0, gamma, 0.0)
    }

    fn two_walls(gamma_l: f64, gamma_r: f64, delta: f64) -> CavityConfig {
        CavityConfig::new(1e-4, 1000.0)
            .with_left(1.0, gamma_l, delta)
            .with_right(1.0, gamma_r, 0.0)
    }

    #[test]
    fn beta_examples() {
        let cfg = CavityConfig::new(1e-3, 100.0).with_right(1.0, 2.0, 0.0);
        assert_relative_eq!(beta_first_order(1, 1, &cfg).re, 0.05, max_relative = 1e-14);
        assert_eq!(beta_first_order(1, 1, &cfg).im, 0.0);
        assert_eq!(beta_first_order(1, 2, &cfg), Complex64::new(0.0, 0.0));

        let cfg = CavityConfig::new(1e-3, 100.0)
            .with_left(1.0, 3.0, PI)
            .with_right(1.0, 3.0, 0.0);
        assert!(beta_first_order(2, 1, &cfg).norm() < 1e-17);
    }

    #[test]
    fn non_integer_ratio_has_no_secular_term() {
        let cfg = single_right(2.5, 1e-4, 1000.0);
        let b = analytic_beta(1, 1, &cfg);
        assert!(!b.secular);
        assert_eq!(b.value, Complex64::new(0.0, 0.0));
        let s = photon_spectrum(&cfg);
        assert!(s.no_secular_term);
        assert!(s.values.iter().all(|&(_, n)| n == 0.0));
        assert_eq!(resonant_ratio(2.0 + 5e-10), Some(2));
        assert_eq!(resonant_ratio(2.0 + 5e-9), None);
    }

    #[test]
    fn pair_examples() {
        let cfg = CavityConfig::new(1e-3, 100.0).with_right(1.0, 2.0, 0.0);
        assert_relative_eq!(photon_number_pair(1, 1, &cfg), 2.5e-3, max_relative = 1e-14);
        let cfg = CavityConfig::new(1e-3, 100.0)
            .with_left(1.0, 2.0, 0.0)
            .with_right(1.0, 2.0, 0.0);
        assert_eq!(photon_number_pair(1, 1, &cfg), 0.0);
        let still = CavityConfig::new(1e-3, 100.0).with_right(0.0, 2.0, 0.0);
        assert_eq!(photon_number_pair(1, 1, &still), 0.0);
    }

    #[test]
    fn spectrum_examples() {
        let cfg = single_right(4.0, 1e-4, 1000.0);
        let s = photon_spectrum(&cfg);
        assert_eq!(s.provenance, Engine::Analytic);
        assert_relative_eq!(s.n_k(1), 7.5e-3, max_relative = 1e-14);
        assert_relative_eq!(s.n_k(2), 1.0e-2, max_relative = 1e-14);
        assert_relative_eq!(s.n_k(3), 7.5e-3, max_relative = 1e-14);
        assert_eq!(s.n_k(4), 0.0);

        let s = photon_spectrum(&two_walls(2.0, 2.0, PI));
        assert_relative_eq!(s.n_k(1), 0.01, max_relative = 1e-14);

        for delta in [0.0, 0.4, PI / 2.0, 2.5] {
            let both = photon_spectrum(&two_walls(2.0, 4.0, delta));
            let cfg = two_walls(2.0, 4.0, delta);
            for k in 1..=4 {
                let sum = single_wall_number(k, &cfg, Side::Left) + single_wall_number(k, &cfg, Side::Right);
                assert_relative_eq!(both.n_k(k), sum, max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn spectrum_is_sum_of_pairs() {
        for (gl, gr, d) in [(2.0, 2.0, 0.3), (3.0, 3.0, 1.9), (2.0, 5.0, 0.7), (6.0, 6.0, PI)] {
            let cfg = CavityConfig::new(2e-4, 700.0)
                .with_left(0.8, gl, d)
                .with_right(1.3, gr, 0.0);
            let s = photon_spectrum(&cfg);
            for k in 1..=8 {
                let sum: f64 = (1..=8).map(|n| photon_number_pair(n, k, &cfg)).sum();
                assert!((s.n_k(k) - sum).abs() <= 1e-15 + 1e-12 * sum, "k={k}");
            }
        }
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(interference_visibility(&two_walls(2.0, 2.0, 0.0)).unwrap(), -1.0);
        assert_eq!(interference_visibility(&two_walls(3.0, 3.0, 0.0)).unwrap(), 1.0);
        let single = CavityConfig::new(1e-4, 1000.0)
            .with_left(0.0, 2.0, 0.0)
            .with_right(1.0, 2.0, 0.0);
        assert_eq!(interference_visibility(&single).unwrap(), 0.0);
        assert!(interference_visibility(&two_walls(2.0, 4.0, 0.0)).is_err());
    }

    #[test]
    fn warnings_outside_regime() {
        assert!(photon_spectrum(&single_right(2.0, 1e-4, 1000.0)).warnings.is_empty());
        let w = photon_spectrum(&single_right(2.0, 1e-3, 1000.0)).warnings;
        assert!(matches!(w[..], [ValidityWarning::LargeSecularParameter(_)]));
        let w = photon_spectrum(&single_right(2.0, 1e-4, 10.0)).warnings;
        assert!(matches!(w[..], [ValidityWarning::ShortDuration(_)]));
    }

    fn config_strategy() -> impl Strategy<Value = CavityConfig> {
        (
            1e-5f64..1e-3,
            10.0f64..2000.0,
            0.0f64..2.0,
            0.0f64..2.0,
            1u32..8,
            1u32..8,
            -7.0f64..7.0,
            -7.0f64..7.0,
            0.5f64..4.0,
        )
            .prop_map(|(eps, t, al, ar, gl, gr, pl, pr, lambda)| CavityConfig {
                lambda,
                ..CavityConfig::new(eps, t)
                    .with_left(al, gl as f64, pl)
                    .with_right(ar, gr as f64, pr)
            })
    }

    proptest! {
        #[test]
        fn pair_matches_beta_modulus(cfg in config_strategy()) {
            for n in 1..=32 {
                for k in 1..=32 {
                    let pair = photon_number_pair(n, k, &cfg);
                    let beta = beta_first_order(n, k, &cfg).norm_sqr();
                    let scale = prefactor(&cfg).powi(2) * (k * n) as f64 * 16.0;
                    prop_assert!((pair - beta).abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE));
                    prop_assert_eq!(pair, photon_number_pair(k, n, &cfg));
                }
            }
        }

        #[test]
        fn spectrum_depends_only_on_phase_difference(cfg in config_strategy(), shift in -10.0f64..10.0) {
            let shifted = CavityConfig { phi_left: cfg.phi_left + shift, phi_right: cfg.phi_right + shift, ..cfg };
            let a = photon_spectrum(&cfg);
            let b = photon_spectrum(&shifted);
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x.1 - y.1).abs() <= 1e-12 * a.peak().max(f64::MIN_POSITIVE));
            }
            let wrapped = CavityConfig { phi_left: cfg.phi_left + 2.0 * PI, ..cfg };
            let c = photon_spectrum(&wrapped);
            for (x, y) in a.values.iter().zip(&c.values) {
                prop_assert!((x.1 - y.1).abs() <= 1e-12 * a.peak().max(f64::MIN_POSITIVE));
            }
        }

        #[test]
        fn spectrum_scales_with_epsilon_times_duration(cfg in config_strategy()) {
            let rescaled = CavityConfig { epsilon: 2.0 * cfg.epsilon, t_final: 0.5 * cfg.t_final, ..cfg };
            let a = photon_spectrum(&cfg);
            let b = photon_spectrum(&rescaled);
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x.1 - y.1).abs() <= 1e-14 * a.peak());
            }
            for &(_, n) in &a.values {
                prop_assert!(n >= 0.0);
            }
        }

        #[test]
        fn single_frequency_spectrum_is_symmetric_parabola(g in 2u64..12, a in 0.1f64..2.0) {
            let cfg = CavityConfig::new(1e-4, 1000.0).with_right(a, g as f64, 0.0);
            let s = photon_spectrum(&cfg);
            for k in 1..g as usize {
                prop_assert!((s.n_k(k) - s.n_k(g as usize - k)).abs() <= 1e-15 * s.peak());
            }
            let peak = s.argmax().unwrap() as u64;
            prop_assert!(peak == g / 2 || peak == g.div_ceil(2));
            for k in g as usize..=s.len() {
                prop_assert_eq!(s.n_k(k), 0.0);
            }
        }

        #[test]
        fn unequal_frequencies_do_not_interfere(gl in 1u64..8, dg in 1u64..6, d1 in -4.0f64..4.0, d2 in -4.0f64..4.0) {
            let gr = gl + dg;
            let base = CavityConfig::new(1e-4, 1000.0)
                .with_left(0.9, gl as f64, d1)
                .with_right(1.1, gr as f64, 0.0);
            let other = CavityConfig { phi_left: d2, ..base };
            let a = photon_spectrum(&base);
            let b = photon_spectrum(&other);
            prop_assert_eq!(&a.values, &b.values);
            for &(k, n) in &a.values {
                let sum = single_wall_number(k, &base, Side::Left) + single_wall_number(k, &base, Side::Right);
                prop_assert!((n - sum).abs() <= 1e-15 * a.peak().max(f64::MIN_POSITIVE));
            }
        }
    }
}

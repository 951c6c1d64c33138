//! Calibration constants shared by reports, the CLI and the acceptance suite.

use serde::{Deserialize, Serialize};

/// Numeric vs analytic photon numbers, relative, where the analytic value is non-zero.
pub const ORACLE_REL_TOL: f64 = 0.05;

/// Destructive-interference residual as a fraction of the constructive peak.
pub const DESTRUCTIVE_RESIDUAL: f64 = 1e-2;

/// Non-resonant modes relative to the spectrum peak.
pub const SPECTRUM_LEAKAGE: f64 = 1e-2;

/// Guards empty modes in relative deviations.
pub const ADDITIVITY_FLOOR: f64 = 1e-12;

/// Relative deviation from single-wall additivity at unequal frequencies.
pub const ADDITIVITY_TOL: f64 = 0.05;

/// Relative residual of a least-squares interference fringe fit.
pub const FRINGE_RESIDUAL: f64 = 0.05;

/// Relative spread of `N_k` over a phase scan when no interference is expected.
pub const PHASE_FLATNESS: f64 = 0.02;

/// Ratio tolerance for fringe contrast, secular doubling and spectrum symmetry.
pub const RATIO_TOL: f64 = 0.05;

/// Upper bound on `max_k N_k(2T) / max_k N_k(T)` off resonance.
pub const OFF_RESONANCE_GROWTH: f64 = 1.5;

/// Normalization defect of the first initial mode in the benchmark regime.
pub const NORMALIZATION_DEFECT: f64 = 1e-3;

/// Allowed range of `d_1(eps) / d_1(eps / 2)`.
pub const DEFECT_SCALING: (f64, f64) = (3.0, 5.0);

/// Relative drift of the low modes between truncations `K = 8` and `K = 32`.
pub const TRUNCATION_DRIFT: f64 = 0.01;

/// Snapshot embedded in report metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub oracle_rel_tol: f64,
    pub destructive_residual: f64,
    pub spectrum_leakage: f64,
    pub additivity_floor: f64,
    pub additivity_tol: f64,
    pub fringe_residual: f64,
    pub phase_flatness: f64,
    pub ratio_tol: f64,
    pub off_resonance_growth: f64,
    pub normalization_defect: f64,
    pub defect_scaling: (f64, f64),
    pub truncation_drift: f64,
}

impl Tolerances {
    pub const CURRENT: Tolerances = Tolerances {
        oracle_rel_tol: ORACLE_REL_TOL,
        destructive_residual: DESTRUCTIVE_RESIDUAL,
        spectrum_leakage: SPECTRUM_LEAKAGE,
        additivity_floor: ADDITIVITY_FLOOR,
        additivity_tol: ADDITIVITY_TOL,
        fringe_residual: FRINGE_RESIDUAL,
        phase_flatness: PHASE_FLATNESS,
        ratio_tol: RATIO_TOL,
        off_resonance_growth: OFF_RESONANCE_GROWTH,
        normalization_defect: NORMALIZATION_DEFECT,
        defect_scaling: DEFECT_SCALING,
        truncation_drift: TRUNCATION_DRIFT,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances::CURRENT
    }
}

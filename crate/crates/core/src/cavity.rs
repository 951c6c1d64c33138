//! Physical parameters of a two-wall vibrating cavity, the static mode
//! spectrum, wall trajectories and the first-order coupling matrices.
//!
//! The 2K-dimensional quadrature state is laid out interleaved as
//! `(1-, 1+, 2-, 2+, ...)`; [`slot`] maps `(k, sigma)` to that index.

use std::f64::consts::PI;

use ndarray::{s, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on `epsilon * max(a_left, a_right)`.
pub const SMALL_MOTION_BOUND: f64 = 0.1;

/// Smallest accepted `steps_per_fastest_period`.
pub const MIN_STEPS_PER_PERIOD: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];
}

/// Sign label of a quadrature variable `X_{k,sigma}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sigma {
    Minus,
    Plus,
}

impl Sigma {
    pub const BOTH: [Sigma; 2] = [Sigma::Minus, Sigma::Plus];

    pub fn sign(self) -> f64 {
        match self {
            Sigma::Minus => -1.0,
            Sigma::Plus => 1.0,
        }
    }

    pub fn flip(self) -> Sigma {
        match self {
            Sigma::Minus => Sigma::Plus,
            Sigma::Plus => Sigma::Minus,
        }
    }
}

/// Index of `X_{k,sigma}` in the interleaved state vector. `k` is 1-based.
#[inline]
pub fn slot(k: usize, sigma: Sigma) -> usize {
    debug_assert!(k >= 1);
    2 * (k - 1)
        + match sigma {
            Sigma::Minus => 0,
            Sigma::Plus => 1,
        }
}

/// Physical parameters of one run.
///
/// Wall `A` oscillates as `epsilon * a_A * sin(gamma_A * omega_1 * t + phi_A)`
/// for `0 <= t <= t_final` and is static otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub a_left: f64,
    pub a_right: f64,
    pub gamma_left: f64,
    pub gamma_right: f64,
    pub phi_left: f64,
    pub phi_right: f64,
    pub t_final: f64,
}

impl CavityConfig {
    /// Static cavity of length pi (so `omega_1 = 1`) with both walls at rest
    /// and unit frequency ratios. Use the `with_*` helpers to drive the walls.
    pub fn new(epsilon: f64, t_final: f64) -> Self {
        CavityConfig {
            lambda: PI,
            epsilon,
            a_left: 0.0,
            a_right: 0.0,
            gamma_left: 1.0,
            gamma_right: 1.0,
            phi_left: 0.0,
            phi_right: 0.0,
            t_final,
        }
    }

    pub fn with_left(mut self, amplitude: f64, gamma: f64, phase: f64) -> Self {
        self.a_left = amplitude;
        self.gamma_left = gamma;
        self.phi_left = phase;
        self
    }

    pub fn with_right(mut self, amplitude: f64, gamma: f64, phase: f64) -> Self {
        self.a_right = amplitude;
        self.gamma_right = gamma;
        self.phi_right = phase;
        self
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, key: &'static str, constraint: &'static str, value: f64) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Invalid {
                    key,
                    constraint,
                    value,
                })
            }
        }
        let finite = [
            ("lambda", self.lambda),
            ("epsilon", self.epsilon),
            ("a_left", self.a_left),
            ("a_right", self.a_right),
            ("gamma_left", self.gamma_left),
            ("gamma_right", self.gamma_right),
            ("phi_left", self.phi_left),
            ("phi_right", self.phi_right),
            ("t_final", self.t_final),
        ];
        for (key, value) in finite {
            check(value.is_finite(), key, "finite", value)?;
        }
        check(self.lambda > 0.0, "lambda", "> 0", self.lambda)?;
        check(self.epsilon >= 0.0, "epsilon", ">= 0", self.epsilon)?;
        check(self.t_final > 0.0, "t_final", "> 0", self.t_final)?;
        check(self.a_left >= 0.0, "a_left", ">= 0", self.a_left)?;
        check(self.a_right >= 0.0, "a_right", ">= 0", self.a_right)?;
        check(self.gamma_left > 0.0, "gamma_left", "> 0", self.gamma_left)?;
        check(self.gamma_right > 0.0, "gamma_right", "> 0", self.gamma_right)?;
        let product = self.epsilon * self.a_left.max(self.a_right);
        if product >= SMALL_MOTION_BOUND {
            return Err(Error::SmallMotion {
                product,
                bound: SMALL_MOTION_BOUND,
            });
        }
        Ok(())
    }

    /// Fundamental frequency `omega_1 = pi / lambda`.
    pub fn omega1(&self) -> f64 {
        PI / self.lambda
    }

    pub fn amplitude(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.a_left,
            Side::Right => self.a_right,
        }
    }

    pub fn gamma(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.gamma_left,
            Side::Right => self.gamma_right,
        }
    }

    pub fn phase(&self, side: Side) -> f64 {
        match side {
            Side::Left => self.phi_left,
            Side::Right => self.phi_right,
        }
    }

    /// Angular drive frequency `Omega_A = gamma_A * omega_1`.
    pub fn drive_frequency(&self, side: Side) -> f64 {
        self.gamma(side) * self.omega1()
    }

    /// Phase difference `phi_left - phi_right`.
    pub fn phase_delta(&self) -> f64 {
        self.phi_left - self.phi_right
    }

    /// The dimensionless combination `epsilon * omega_1 * T` that sets the
    /// secular photon yield.
    pub fn secular_parameter(&self) -> f64 {
        self.epsilon * self.omega1() * self.t_final
    }

    pub fn max_gamma(&self) -> f64 {
        self.gamma_left.max(self.gamma_right)
    }

    /// Same configuration with one wall held at rest.
    pub fn single_wall(&self, side: Side) -> Self {
        let mut cfg = *self;
        match side {
            Side::Left => cfg.a_right = 0.0,
            Side::Right => cfg.a_left = 0.0,
        }
        cfg
    }
}

/// Numerical controls for the coupled-mode integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truncation {
    pub k_max: usize,
    pub steps_per_fastest_period: usize,
    pub rel_tolerance: f64,
}

impl Truncation {
    pub const DEFAULT_STEPS_PER_PERIOD: usize = 16;
    pub const DEFAULT_REL_TOLERANCE: f64 = 1e-6;

    /// `k_max = max(16, 4 * ceil(max gamma))` with the default resolution.
    pub fn default_for(cfg: &CavityConfig) -> Self {
        Truncation {
            k_max: 16.max(4 * required_modes(cfg)),
            steps_per_fastest_period: Self::DEFAULT_STEPS_PER_PERIOD,
            rel_tolerance: Self::DEFAULT_REL_TOLERANCE,
        }
    }

    pub fn with_modes(k_max: usize) -> Self {
        Truncation {
            k_max,
            steps_per_fastest_period: Self::DEFAULT_STEPS_PER_PERIOD,
            rel_tolerance: Self::DEFAULT_REL_TOLERANCE,
        }
    }

    /// Checks the truncation on its own and against the drive frequencies of `cfg`.
    pub fn validate(&self, cfg: &CavityConfig) -> Result<()> {
        if self.k_max < 1 {
            return Err(Error::Invalid {
                key: "k_max",
                constraint: ">= 1",
                value: self.k_max as f64,
            });
        }
        if self.steps_per_fastest_period < MIN_STEPS_PER_PERIOD {
            return Err(Error::Invalid {
                key: "steps_per_fastest_period",
                constraint: ">= 16",
                value: self.steps_per_fastest_period as f64,
            });
        }
        if !(self.rel_tolerance > 0.0 && self.rel_tolerance.is_finite()) {
            return Err(Error::Invalid {
                key: "rel_tolerance",
                constraint: "> 0",
                value: self.rel_tolerance,
            });
        }
        let required = required_modes(cfg);
        if self.k_max < required {
            return Err(Error::Truncation {
                k_max: self.k_max,
                required,
            });
        }
        Ok(())
    }
}

/// `ceil(max(gamma_left, gamma_right))`, the smallest mode count that keeps
/// every resonant partner mode.
pub fn required_modes(cfg: &CavityConfig) -> usize {
    cfg.max_gamma().ceil().max(1.0) as usize
}

/// Static-cavity mode frequencies and the instantaneous sine profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeBasis {
    pub lambda: f64,
    pub k_max: usize,
}

impl ModeBasis {
    pub fn new(lambda: f64, k_max: usize) -> Self {
        ModeBasis { lambda, k_max }
    }

    pub fn omega(&self, k: usize) -> f64 {
        k as f64 * PI / self.lambda
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (1..=self.k_max).map(|k| self.omega(k)).collect()
    }

    /// `sqrt(2/(R-L)) sin(k pi (x-L)/(R-L))` for walls at `left` and `right`.
    pub fn profile(&self, k: usize, x: f64, left: f64, right: f64) -> f64 {
        let width = right - left;
        (2.0 / width).sqrt() * (k as f64 * PI * (x - left) / width).sin()
    }

    /// Instantaneous profile with the walls at their positions at time `t`.
    pub fn profile_at(&self, k: usize, x: f64, t: f64, cfg: &CavityConfig) -> f64 {
        self.profile(
            k,
            x,
            wall_position(Side::Left, t, cfg),
            wall_position(Side::Right, t, cfg),
        )
    }
}

/// `omega_k = k pi / lambda`.
pub fn mode_frequency(k: usize, cfg: &CavityConfig) -> Result<f64> {
    if k == 0 {
        return Err(Error::ModeIndex(k));
    }
    Ok(ModeBasis::new(cfg.lambda, k).omega(k))
}

/// Coupling coefficient `g^A_{jk}`: `2jk/(k^2-j^2)` on the left wall, with an
/// extra `(-1)^(j+k)` on the right wall. Zero on the diagonal.
///
/// Panics if `j` or `k` is zero.
pub fn coupling_g(side: Side, j: usize, k: usize) -> f64 {
    assert!(j >= 1 && k >= 1, "mode indices are 1-based");
    if j == k {
        return 0.0;
    }
    let (jf, kf) = (j as f64, k as f64);
    let left = 2.0 * jf * kf / ((kf - jf) * (kf + jf));
    match side {
        Side::Left => left,
        Side::Right if (j + k) % 2 == 0 => left,
        Side::Right => -left,
    }
}

/// Dense `K x K` tables of `g^L_{jk}` and `g^R_{jk}`, stored 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTables {
    pub g_left: Array2<f64>,
    pub g_right: Array2<f64>,
}

impl CouplingTables {
    pub fn new(k_max: usize) -> Self {
        let g_left = Array2::from_shape_fn((k_max, k_max), |(j, k)| {
            coupling_g(Side::Left, j + 1, k + 1)
        });
        let g_right = Array2::from_shape_fn((k_max, k_max), |(j, k)| {
            coupling_g(Side::Right, j + 1, k + 1)
        });
        CouplingTables { g_left, g_right }
    }

    pub fn k_max(&self) -> usize {
        self.g_left.nrows()
    }

    /// Leading `k_max x k_max` block.
    pub fn truncated(&self, k_max: usize) -> Self {
        CouplingTables {
            g_left: self.g_left.slice(s![..k_max, ..k_max]).to_owned(),
            g_right: self.g_right.slice(s![..k_max, ..k_max]).to_owned(),
        }
    }

    /// `g^A_{jk}` with 1-based indices.
    pub fn get(&self, side: Side, j: usize, k: usize) -> f64 {
        match side {
            Side::Left => self.g_left[[j - 1, k - 1]],
            Side::Right => self.g_right[[j - 1, k - 1]],
        }
    }
}

/// Wall position at time `t`. Outside `[0, t_final]` the walls sit at their
/// static positions `0` and `lambda`.
pub fn wall_position(side: Side, t: f64, cfg: &CavityConfig) -> f64 {
    let moving = (0.0..=cfg.t_final).contains(&t);
    let displacement = if moving {
        cfg.epsilon * cfg.amplitude(side) * (cfg.drive_frequency(side) * t + cfg.phase(side)).sin()
    } else {
        0.0
    };
    match side {
        Side::Left => cfg.lambda * displacement,
        Side::Right => cfg.lambda * (1.0 + displacement),
    }
}

/// Free generator: `diag(i sigma omega_k)` in the interleaved layout.
pub fn free_matrix(cfg: &CavityConfig, trunc: &Truncation) -> Array2<Complex64> {
    let basis = ModeBasis::new(cfg.lambda, trunc.k_max);
    let dim = 2 * trunc.k_max;
    let mut v0 = Array2::zeros((dim, dim));
    for k in 1..=trunc.k_max {
        for sigma in Sigma::BOTH {
            let i = slot(k, sigma);
            v0[[i, i]] = Complex64::new(0.0, sigma.sign() * basis.omega(k));
        }
    }
    v0
}

/// Sign of the exponent in `e^{s i Omega t}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Harmonic {
    Negative,
    Positive,
}

impl Harmonic {
    pub const BOTH: [Harmonic; 2] = [Harmonic::Negative, Harmonic::Positive];

    pub fn sign(self) -> f64 {
        match self {
            Harmonic::Negative => -1.0,
            Harmonic::Positive => 1.0,
        }
    }
}

/// One matrix element of `v^{A s}_{k sigma, j sigma'}`, including the
/// `e^{i s phi_A}` factor and the wall amplitude.
pub fn coupling_element(
    cfg: &CavityConfig,
    tables: &CouplingTables,
    side: Side,
    s: Harmonic,
    (k, sigma): (usize, Sigma),
    (j, sigma_p): (usize, Sigma),
) -> Complex64 {
    let s = s.sign();
    let gamma = cfg.gamma(side);
    let (kf, jf) = (k as f64, j as f64);
    let mut bracket = gamma
        * tables.get(side, k, j)
        * (jf / kf).sqrt()
        * (0.5 * sigma_p.sign() + s * gamma / (4.0 * jf));
    if k == j {
        bracket -= s * 0.5 * kf;
    }
    Complex64::from_polar(sigma.sign() * cfg.amplitude(side) * bracket, s * cfg.phase(side))
}

/// The four constant matrices `v^{A s}` from which the perturbation
/// generator is assembled at any time.
#[derive(Debug, Clone)]
pub struct PerturbationTerms {
    omega1: f64,
    drive: [f64; 2],
    t_final: f64,
    // indexed [side][harmonic]: Left=0, Right=1; Negative=0, Positive=1
    terms: [[Array2<Complex64>; 2]; 2],
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Left => 0,
        Side::Right => 1,
    }
}

fn harmonic_index(s: Harmonic) -> usize {
    match s {
        Harmonic::Negative => 0,
        Harmonic::Positive => 1,
    }
}

impl PerturbationTerms {
    pub fn new(cfg: &CavityConfig, tables: &CouplingTables) -> Self {
        let k_max = tables.k_max();
        let dim = 2 * k_max;
        let build = |side: Side, s: Harmonic| {
            let mut v = Array2::zeros((dim, dim));
            for k in 1..=k_max {
                for sigma in Sigma::BOTH {
                    for j in 1..=k_max {
                        for sigma_p in Sigma::BOTH {
                            v[[slot(k, sigma), slot(j, sigma_p)]] =
                                coupling_element(cfg, tables, side, s, (k, sigma), (j, sigma_p));
                        }
                    }
                }
            }
            v
        };
        let terms = [Side::Left, Side::Right]
            .map(|side| [Harmonic::Negative, Harmonic::Positive].map(|s| build(side, s)));
        PerturbationTerms {
            omega1: cfg.omega1(),
            drive: [cfg.drive_frequency(Side::Left), cfg.drive_frequency(Side::Right)],
            t_final: cfg.t_final,
            terms,
        }
    }

    pub fn k_max(&self) -> usize {
        self.terms[0][0].nrows() / 2
    }

    pub fn term(&self, side: Side, s: Harmonic) -> &Array2<Complex64> {
        &self.terms[side_index(side)][harmonic_index(s)]
    }

    /// Scalar weights multiplying each `v^{A s}` at time `t`:
    /// `+omega_1 e^{s i Omega_R t}` on the right, `-omega_1 e^{s i Omega_L t}` on the left.
    /// All weights vanish outside the motion window.
    pub fn weights(&self, t: f64) -> [[Complex64; 2]; 2] {
        if !(0.0..=self.t_final).contains(&t) {
            return [[Complex64::new(0.0, 0.0); 2]; 2];
        }
        self.drive_weights(t)
    }

    /// [`Self::weights`] without the motion window, for integrators that
    /// already restrict themselves to `[0, t_final]`.
    pub fn drive_weights(&self, t: f64) -> [[Complex64; 2]; 2] {
        let weight = |side: Side, s: Harmonic| {
            let sign = match side {
                Side::Left => -1.0,
                Side::Right => 1.0,
            };
            Complex64::from_polar(sign * self.omega1, s.sign() * self.drive[side_index(side)] * t)
        };
        [Side::Left, Side::Right].map(|side| [Harmonic::Negative, Harmonic::Positive].map(|s| weight(side, s)))
    }

    /// `V^(1)(t)`.
    pub fn at(&self, t: f64) -> Array2<Complex64> {
        let weights = self.weights(t);
        let dim = 2 * self.k_max();
        let mut v1 = Array2::zeros((dim, dim));
        for (side_terms, side_weights) in self.terms.iter().zip(weights.iter()) {
            for (term, &w) in side_terms.iter().zip(side_weights.iter()) {
                v1.scaled_add(w, term);
            }
        }
        v1
    }
}

/// `V^(1)(t)` for the first `trunc.k_max` modes. Zero outside `[0, t_final]`.
pub fn perturbation_matrix(
    t: f64,
    cfg: &CavityConfig,
    trunc: &Truncation,
    tables: &CouplingTables,
) -> Array2<Complex64> {
    assert!(
        tables.k_max() >= trunc.k_max,
        "coupling tables smaller than the truncation"
    );
    if tables.k_max() == trunc.k_max {
        PerturbationTerms::new(cfg, tables).at(t)
    } else {
        PerturbationTerms::new(cfg, &tables.truncated(trunc.k_max)).at(t)
    }
}

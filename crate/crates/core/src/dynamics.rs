//! Numerical integration of the truncated coupled-mode system and
//! extraction of Bogoliubov coefficients after the walls stop.
//!
//! The system `dX/dt = (V0 + eps V1(t)) X` is integrated in the frame that
//! co-rotates with the free evolution, `Y = exp(-V0 t) X`, where the
//! generator is `O(eps)`. The change of variables is exact.
//!
//! Only the columns started from `X_{n,-}` are integrated. The generator
//! comes from a real second-order equation, so the column started from
//! `X_{n,+}` is the conjugate of the `X_{n,-}` column with `-` and `+`
//! swapped.

use std::cell::RefCell;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2};
use num_complex::Complex64;


use crate::cavity::{
    slot, CavityConfig, CouplingTables, Harmonic, ModeBasis, PerturbationTerms, Side, Sigma,
    Truncation,
};
use crate::error::{Error, Result};
use crate::integrator::{integrate_with_halving, IntegrationReport, LinearRhs};
use crate::spectrum::{Engine, Spectrum};

/// Step halvings attempted beyond the first error estimate.
pub const MAX_REFINEMENTS: usize = 4;

/// Generator of the co-rotating frame.
///
/// Every row `(k, sigma)` of `V1` equals `sigma` times a common row, so the
/// product is formed from a `K x 2K` reduced matrix. In the co-rotating
/// frame row `(k, -)` of the result is `-e^{2 i omega_k t}` times row `(k, +)`.
struct CoRotatingRhs {
    k_max: usize,
    epsilon: f64,
    omegas: Vec<f64>,
    terms: PerturbationTerms,
    // rows (k, +) of each v^{A s}, indexed [side][harmonic]
    reduced: [[Array2<Complex64>; 2]; 2],
    // (side, harmonic) pairs with a non-zero reduced matrix
    active: Vec<(usize, usize)>,
    cache: RefCell<GeneratorCache>,
}

/// Rotated reduced generator at the most recently requested time. RK4 asks
/// for each stage time twice in a row, and step ends coincide with the
/// next step's start.
struct GeneratorCache {
    t: f64,
    // [[Re G, -Im G], [Im G, Re G]]
    block: Array2<f64>,
    // -e^{2 i omega_k t}
    minus_row_factor: Vec<Complex64>,
    product: Array2<f64>,
}

impl CoRotatingRhs {
    fn new(cfg: &CavityConfig, trunc: &Truncation) -> Self {
        let k_max = trunc.k_max;
        let tables = CouplingTables::new(k_max);
        let terms = PerturbationTerms::new(cfg, &tables);
        let reduce = |side: Side, s: Harmonic| {
            let full = terms.term(side, s);
            Array2::from_shape_fn((k_max, 2 * k_max), |(k, col)| {
                full[[slot(k + 1, Sigma::Plus), col]]
            })
        };
        let reduced = [Side::Left, Side::Right]
            .map(|side| [Harmonic::Negative, Harmonic::Positive].map(|s| reduce(side, s)));
        let active = (0..2)
            .flat_map(|side| (0..2).map(move |s| (side, s)))
            .filter(|&(side, s)| reduced[side][s].iter().any(|z| z.norm_sqr() > 0.0))
            .collect();
        CoRotatingRhs {
            k_max,
            epsilon: cfg.epsilon,
            omegas: ModeBasis::new(cfg.lambda, k_max).frequencies(),
            terms,
            reduced,
            active,
            cache: RefCell::new(GeneratorCache {
                t: f64::NAN,
                block: Array2::zeros((2 * k_max, 4 * k_max)),
                minus_row_factor: vec![Complex64::new(0.0, 0.0); k_max],
                product: Array2::zeros((0, 0)),
            }),
        }
    }

    /// `e^{i omega_k t}` for every mode.
    fn rotations(&self, t: f64) -> Vec<Complex64> {
        self.omegas
            .iter()
            .map(|&w| Complex64::from_polar(1.0, w * t))
            .collect()
    }

    fn refresh(&self, cache: &mut GeneratorCache, t: f64) {
        let weights = self.terms.drive_weights(t);
        let mut active = [(Complex64::new(0.0, 0.0), &[][..]); 4];
        let mut n_active = 0;
        for (side, harmonic) in self.active.iter().copied() {
            let term = &self.reduced[side][harmonic];
            active[n_active] = (weights[side][harmonic] * self.epsilon, term.as_slice().unwrap());
            n_active += 1;
        }
        let active = &active[..n_active];
        let rot = self.rotations(t);
        let (k_max, width) = (self.k_max, 2 * self.k_max);
        let block = cache.block.as_slice_mut().unwrap();
        let (re_rows, im_rows) = block.split_at_mut(k_max * 2 * width);
        for k in 0..k_max {
            let row_phase = rot[k].conj();
            let re_row = &mut re_rows[k * 2 * width..(k + 1) * 2 * width];
            let im_row = &mut im_rows[k * 2 * width..(k + 1) * 2 * width];
            for (j, r) in rot.iter().enumerate() {
                for (col, phase) in [
                    (slot(j + 1, Sigma::Minus), row_phase * r.conj()),
                    (slot(j + 1, Sigma::Plus), row_phase * r),
                ] {
                    let idx = k * width + col;
                    let sum: Complex64 = active.iter().map(|(w, term)| w * term[idx]).sum();
                    let z = sum * phase;
                    re_row[col] = z.re;
                    re_row[width + col] = -z.im;
                    im_row[col] = z.im;
                    im_row[width + col] = z.re;
                }
            }
            cache.minus_row_factor[k] = -(rot[k] * rot[k]);
        }
        cache.t = t;
    }
}

/// `[Re X; Im X]` for a complex matrix.
fn stack(x: ArrayView2<Complex64>) -> Array2<f64> {
    let rows = x.nrows();
    Array2::from_shape_fn((2 * rows, x.ncols()), |(r, c)| {
        if r < rows {
            x[[r, c]].re
        } else {
            x[[r - rows, c]].im
        }
    })
}

fn unstack(y: &Array2<f64>) -> Array2<Complex64> {
    let rows = y.nrows() / 2;
    Array2::from_shape_fn((rows, y.ncols()), |(r, c)| {
        Complex64::new(y[[r, c]], y[[rows + r, c]])
    })
}

// The state is stacked as `[Re Y; Im Y]`.
impl LinearRhs<f64> for CoRotatingRhs {
    fn apply(&self, t: f64, y: &Array2<f64>, out: &mut Array2<f64>) {
        let mut cache = self.cache.borrow_mut();
        if cache.t != t {
            self.refresh(&mut cache, t);
        }
        let cache = &mut *cache;
        let cols = y.ncols();
        let (k_max, width) = (self.k_max, 2 * self.k_max);
        if cache.product.ncols() != cols {
            cache.product = Array2::zeros((width, cols));
        }
        general_mat_mul(1.0, &cache.block, y, 0.0, &mut cache.product);

        for k in 0..k_max {
            let plus = slot(k + 1, Sigma::Plus);
            let minus = slot(k + 1, Sigma::Minus);
            let f = cache.minus_row_factor[k];
            let p_re = cache.product.row(k);
            let p_im = cache.product.row(k_max + k);
            let (p_re, p_im) = (p_re.as_slice().unwrap(), p_im.as_slice().unwrap());
            out.row_mut(plus).as_slice_mut().unwrap().copy_from_slice(p_re);
            out.row_mut(width + plus).as_slice_mut().unwrap().copy_from_slice(p_im);
            for ((o, &a), &b) in out.row_mut(minus).iter_mut().zip(p_re).zip(p_im) {
                *o = f.re * a - f.im * b;
            }
            for ((o, &a), &b) in out.row_mut(width + minus).iter_mut().zip(p_re).zip(p_im) {
                *o = f.re * b + f.im * a;
            }
        }
    }
}

/// State-transition matrix over the oscillation window.
#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    /// `2K x 2K`, interleaved `(k, sigma)` layout: `X(T) = phi_t X(0)`.
    pub phi_t: Array2<Complex64>,
    pub t_final: f64,
    pub trunc: Truncation,
    pub cfg: CavityConfig,
    pub diagnostics: IntegrationReport,
}

fn nominal_steps(cfg: &CavityConfig, trunc: &Truncation) -> usize {
    let fastest = ModeBasis::new(cfg.lambda, trunc.k_max).omega(trunc.k_max);
    let period = 2.0 * std::f64::consts::PI / fastest;
    let h = period / trunc.steps_per_fastest_period as f64;
    ((cfg.t_final / h).ceil() as usize).max(1)
}

fn validated(cfg: &CavityConfig, trunc: &Truncation) -> Result<()> {
    cfg.validate()?;
    trunc.validate(cfg)
}

/// Evolves arbitrary initial states (columns of `initial`, `2K` rows) from
/// `t = 0` to `t = T` and returns the lab-frame states at `T`.
pub fn evolve_states(
    cfg: &CavityConfig,
    trunc: &Truncation,
    initial: ArrayView2<Complex64>,
) -> Result<(Array2<Complex64>, IntegrationReport)> {
    validated(cfg, trunc)?;
    if initial.nrows() != 2 * trunc.k_max {
        return Err(Error::Precondition(format!(
            "initial states have {} rows, expected {}",
            initial.nrows(),
            2 * trunc.k_max
        )));
    }
    let rhs = CoRotatingRhs::new(cfg, trunc);
    let (stacked, report) = integrate_with_halving(
        &rhs,
        &stack(initial),
        0.0,
        cfg.t_final,
        nominal_steps(cfg, trunc),
        trunc.rel_tolerance,
        MAX_REFINEMENTS,
    )?;
    let mut y = unstack(&stacked);
    for (k, r) in rhs.rotations(cfg.t_final).iter().enumerate() {
        y.row_mut(slot(k + 1, Sigma::Minus)).mapv_inplace(|z| z * r.conj());
        y.row_mut(slot(k + 1, Sigma::Plus)).mapv_inplace(|z| z * r);
    }
    Ok((y, report))
}

/// Fundamental matrix of the truncated system from `t = 0` to `t = T`.
pub fn evolve_fundamental(cfg: &CavityConfig, trunc: &Truncation) -> Result<FundamentalSolution> {
    let k_max = trunc.k_max;
    let mut initial = Array2::<Complex64>::zeros((2 * k_max, k_max));
    for n in 1..=k_max {
        initial[[slot(n, Sigma::Minus), n - 1]] = Complex64::new(1.0, 0.0);
    }
    let (minus_columns, diagnostics) = evolve_states(cfg, trunc, initial.view())?;

    let mut phi_t = Array2::<Complex64>::zeros((2 * k_max, 2 * k_max));
    for n in 1..=k_max {
        let src = minus_columns.column(n - 1);
        for k in 1..=k_max {
            for sigma in Sigma::BOTH {
                let z = src[slot(k, sigma)];
                phi_t[[slot(k, sigma), slot(n, Sigma::Minus)]] = z;
                phi_t[[slot(k, sigma.flip()), slot(n, Sigma::Plus)]] = z.conj();
            }
        }
    }
    Ok(FundamentalSolution {
        phi_t,
        t_final: cfg.t_final,
        trunc: *trunc,
        cfg: *cfg,
        diagnostics,
    })
}

impl FundamentalSolution {
    /// Applies the transition matrix to an initial state.
    pub fn propagate(&self, x0: &Array1<Complex64>) -> Array1<Complex64> {
        self.phi_t.dot(x0)
    }
}

/// Bogoliubov coefficients, `alpha[[n-1, k-1]]` and `beta[[n-1, k-1]]`.
#[derive(Debug, Clone)]
pub struct BogoliubovPair {
    pub alpha: Array2<Complex64>,
    pub beta: Array2<Complex64>,
    pub cfg: CavityConfig,
    pub trunc: Truncation,
    pub diagnostics: IntegrationReport,
}

/// Reads off the coefficients of `e^{-i omega_k t}` and `e^{+i omega_k t}`
/// for each initial mode `n` started in `X_{n,-}`.
pub fn extract_bogoliubov(sol: &FundamentalSolution) -> BogoliubovPair {
    let k_max = sol.trunc.k_max;
    let basis = ModeBasis::new(sol.cfg.lambda, k_max);
    let mut alpha = Array2::zeros((k_max, k_max));
    let mut beta = Array2::zeros((k_max, k_max));
    for k in 1..=k_max {
        let rot = Complex64::from_polar(1.0, basis.omega(k) * sol.t_final);
        for n in 1..=k_max {
            let col = slot(n, Sigma::Minus);
            alpha[[n - 1, k - 1]] = rot * sol.phi_t[[slot(k, Sigma::Minus), col]];
            beta[[n - 1, k - 1]] = rot.conj() * sol.phi_t[[slot(k, Sigma::Plus), col]];
        }
    }
    BogoliubovPair {
        alpha,
        beta,
        cfg: sol.cfg,
        trunc: sol.trunc,
        diagnostics: sol.diagnostics,
    }
}

/// `N_k = sum_n |beta_nk|^2` over every retained initial mode.
pub fn numeric_spectrum(pair: &BogoliubovPair) -> Spectrum {
    let values = pair
        .beta
        .columns()
        .into_iter()
        .map(|col| col.iter().map(|b| b.norm_sqr()).sum())
        .collect();
    Spectrum::new(values, Engine::Numeric, pair.cfg)
}

/// `|sum_k (|alpha_nk|^2 - |beta_nk|^2) - 1|` for each initial mode `n`.
pub fn normalization_defect(pair: &BogoliubovPair) -> Vec<f64> {
    pair.alpha
        .rows()
        .into_iter()
        .zip(pair.beta.rows())
        .map(|(a, b)| {
            let norm: f64 = a
                .iter()
                .zip(b.iter())
                .map(|(a, b)| a.norm_sqr() - b.norm_sqr())
                .sum();
            (norm - 1.0).abs()
        })
        .collect()
}

/// Everything produced by one numerical run.
#[derive(Debug, Clone)]
pub struct NumericRun {
    pub pair: BogoliubovPair,
    pub spectrum: Spectrum,
    pub defects: Vec<f64>,
}

impl NumericRun {
    pub fn diagnostics(&self) -> &IntegrationReport {
        &self.pair.diagnostics
    }
}

/// Integrates, extracts the Bogoliubov coefficients and the photon spectrum.
pub fn simulate(cfg: &CavityConfig, trunc: &Truncation) -> Result<NumericRun> {
    let sol = evolve_fundamental(cfg, trunc)?;
    let pair = extract_bogoliubov(&sol);
    let spectrum = numeric_spectrum(&pair);
    let defects = normalization_defect(&pair);
    Ok(NumericRun {
        pair,
        spectrum,
        defects,
    })
}

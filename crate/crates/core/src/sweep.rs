//! Parameter scans and engine cross-checks.
//!
//! Grid points run in parallel; results are gathered in grid order so the
//! rows never depend on scheduling.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{self, resonant_ratio};
use crate::cavity::{required_modes, CavityConfig, Side, Truncation};
use crate::dynamics::{simulate, NumericRun};
use crate::error::{Error, Result};
use crate::integrator::IntegrationReport;
use crate::spectrum::{Engine, Spectrum};
use crate::tolerances::{Tolerances, ADDITIVITY_FLOOR, DESTRUCTIVE_RESIDUAL, ORACLE_REL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    PhaseDelta,
    GammaRight,
    Epsilon,
    TFinal,
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::PhaseDelta => "phase_delta",
            ScanAxis::GammaRight => "gamma_right",
            ScanAxis::Epsilon => "epsilon",
            ScanAxis::TFinal => "t_final",
        }
    }

    /// `base` with the axis value substituted. A phase difference is
    /// applied as `phi_left = value`, `phi_right = 0`.
    pub fn apply(self, base: &CavityConfig, value: f64) -> CavityConfig {
        let mut cfg = *base;
        match self {
            ScanAxis::PhaseDelta => {
                cfg.phi_left = value;
                cfg.phi_right = 0.0;
            }
            ScanAxis::GammaRight => cfg.gamma_right = value,
            ScanAxis::Epsilon => cfg.epsilon = value,
            ScanAxis::TFinal => cfg.t_final = value,
        }
        cfg
    }
}

impl std::str::FromStr for ScanAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        [
            ScanAxis::PhaseDelta,
            ScanAxis::GammaRight,
            ScanAxis::Epsilon,
            ScanAxis::TFinal,
        ]
        .into_iter()
        .find(|a| a.name() == s)
        .ok_or_else(|| format!("unknown scan axis '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub base: CavityConfig,
    pub trunc: Truncation,
    pub axis: ScanAxis,
    pub grid: Vec<f64>,
    pub engines: Vec<Engine>,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Scan("grid is empty".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::Scan("grid values must be finite".into()));
        }
        if self.grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Scan("grid must be strictly increasing".into()));
        }
        if self.engines.is_empty() {
            return Err(Error::Scan("no engine requested".into()));
        }
        Ok(())
    }
}

/// `N` equally spaced phase differences `j * 2 pi / N`, `j = 0..N`.
pub fn phase_grid(points: usize) -> Vec<f64> {
    (0..points).map(|j| j as f64 * 2.0 * PI / points as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub axis_value: f64,
    pub engine: Engine,
    pub k: usize,
    pub n_k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedPoint {
    pub axis_value: f64,
    pub engine: Engine,
    pub error: String,
}

/// Integrator diagnostics of one numeric grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub axis_value: f64,
    pub integration: IntegrationReport,
    pub max_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub axis: ScanAxis,
    pub base: CavityConfig,
    pub trunc: Truncation,
    pub tolerances: Tolerances,
    /// Sorted by `(axis_value, engine, k)`.
    pub rows: Vec<ScanRow>,
    pub failures: Vec<FailedPoint>,
    pub diagnostics: Vec<PointDiagnostics>,
}

impl ScanResult {
    /// `N_k` along the grid for one engine and mode.
    pub fn series(&self, engine: Engine, k: usize) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.engine == engine && r.k == k)
            .map(|r| (r.axis_value, r.n_k))
            .collect()
    }
}

fn analytic_padded(cfg: &CavityConfig, k_max: usize) -> Result<Spectrum> {
    cfg.validate()?;
    Ok(analytic::photon_spectrum(cfg).padded(k_max))
}

/// Max normalization defect over initial modes.
fn max_defect(run: &NumericRun) -> f64 {
    run.defects.iter().copied().fold(0.0, f64::max)
}

/// Runs every grid point with every requested engine.
pub fn scan(spec: &ScanSpec) -> Result<ScanResult> {
    spec.validate()?;
    let mut engines = spec.engines.clone();
    engines.sort();
    engines.dedup();
    let jobs: Vec<(f64, Engine)> = spec
        .grid
        .iter()
        .flat_map(|&v| engines.iter().map(move |&e| (v, e)))
        .collect();
    let outcomes: Vec<Result<(Spectrum, Option<PointDiagnostics>)>> = jobs
        .par_iter()
        .map(|&(value, engine)| {
            let cfg = spec.axis.apply(&spec.base, value);
            match engine {
                Engine::Analytic => Ok((analytic_padded(&cfg, spec.trunc.k_max)?, None)),
                Engine::Numeric => {
                    let run = simulate(&cfg, &spec.trunc)?;
                    let diag = PointDiagnostics {
                        axis_value: value,
                        integration: *run.diagnostics(),
                        max_defect: max_defect(&run),
                    };
                    Ok((run.spectrum, Some(diag)))
                }
            }
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut diagnostics = Vec::new();
    for (&(axis_value, engine), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok((spectrum, diag)) => {
                rows.extend(spectrum.values.iter().map(|&(k, n_k)| ScanRow {
                    axis_value,
                    engine,
                    k,
                    n_k,
                }));
                diagnostics.extend(diag);
            }
            Err(e) => failures.push(FailedPoint {
                axis_value,
                engine,
                error: e.to_string(),
            }),
        }
    }
    Ok(ScanResult {
        axis: spec.axis,
        base: spec.base,
        trunc: spec.trunc,
        tolerances: Tolerances::CURRENT,
        rows,
        failures,
        diagnostics,
    })
}

/// Scan over `phi_left - phi_right`.
pub fn phase_scan(spec: &ScanSpec) -> Result<ScanResult> {
    if spec.axis != ScanAxis::PhaseDelta {
        return Err(Error::Scan(format!(
            "phase scan needs axis phase_delta, got {}",
            spec.axis.name()
        )));
    }
    scan(spec)
}

/// Least-squares fit of `N(dphi) = A [1 - (-1)^gamma cos dphi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub amplitude: f64,
    /// `||N - fit|| / ||N||`.
    pub residual: f64,
}

pub fn fit_fringe(points: &[(f64, f64)], gamma: u64) -> FringeFit {
    let parity = if gamma % 2 == 0 { 1.0 } else { -1.0 };
    let shape = |dphi: f64| 1.0 - parity * dphi.cos();
    let num: f64 = points.iter().map(|&(x, n)| n * shape(x)).sum();
    let den: f64 = points.iter().map(|&(x, _)| shape(x).powi(2)).sum();
    let amplitude = if den > 0.0 { num / den } else { 0.0 };
    let misfit: f64 = points
        .iter()
        .map(|&(x, n)| (n - amplitude * shape(x)).powi(2))
        .sum();
    let norm: f64 = points.iter().map(|&(_, n)| n * n).sum();
    let residual = if norm > 0.0 { (misfit / norm).sqrt() } else { 0.0 };
    FringeFit {
        amplitude,
        residual,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditivityReport {
    /// `max_k |N_both - N_L - N_R| / max(N_both, floor)`.
    pub deviation: f64,
    pub per_mode: Vec<f64>,
    pub both: Spectrum,
    pub left: Spectrum,
    pub right: Spectrum,
    /// Peak mode of the left-only and right-only spectra.
    pub peaks: (Option<usize>, Option<usize>),
    pub floor: f64,
}

/// Compares the two-wall numeric spectrum with the sum of single-wall runs.
pub fn additivity_check(cfg: &CavityConfig, trunc: &Truncation) -> Result<AdditivityReport> {
    match (resonant_ratio(cfg.gamma_left), resonant_ratio(cfg.gamma_right)) {
        (Some(l), Some(r)) if l != r => {}
        _ => {
            return Err(Error::Precondition(format!(
                "additivity needs distinct integer frequency ratios (gamma_left = {}, gamma_right = {})",
                cfg.gamma_left, cfg.gamma_right
            )))
        }
    }
    let configs = [*cfg, cfg.single_wall(Side::Left), cfg.single_wall(Side::Right)];
    let runs: Vec<Spectrum> = configs
        .par_iter()
        .map(|c| simulate(c, trunc).map(|r| r.spectrum))
        .collect::<Result<_>>()?;
    let [both, left, right]: [Spectrum; 3] = runs.try_into().expect("three runs");
    let per_mode: Vec<f64> = (1..=trunc.k_max)
        .map(|k| {
            let b = both.n_k(k);
            (b - left.n_k(k) - right.n_k(k)).abs() / b.max(ADDITIVITY_FLOOR)
        })
        .collect();
    Ok(AdditivityReport {
        deviation: per_mode.iter().copied().fold(0.0, f64::max),
        per_mode,
        peaks: (left.argmax(), right.argmax()),
        both,
        left,
        right,
        floor: ADDITIVITY_FLOOR,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceStatus {
    Ok,
    /// `k_max` cannot hold the resonant partner modes; not run.
    InsufficientModes,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k_max: usize,
    pub steps_per_fastest_period: usize,
    pub status: ConvergenceStatus,
    /// `max_k |N_k - N_k(previous row)| / max_k N_k` over the modes both rows hold.
    pub drift: Option<f64>,
    pub max_defect: Option<f64>,
    pub runtime_seconds: Option<f64>,
    pub integration: Option<IntegrationReport>,
    pub spectrum: Option<Spectrum>,
    pub message: Option<String>,
}

/// Runs every `(k_max, steps)` pair in order, each compared to the previous successful row.
pub fn convergence_report(
    cfg: &CavityConfig,
    k_max_list: &[usize],
    steps_list: &[usize],
    rel_tolerance: f64,
) -> Result<Vec<ConvergenceRow>> {
    if k_max_list.is_empty() || steps_list.is_empty() {
        return Err(Error::Precondition("convergence lists must be nonempty".into()));
    }
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut previous: Option<Spectrum> = None;
    for &k_max in k_max_list {
        for &steps in steps_list {
            let trunc = Truncation {
                k_max,
                steps_per_fastest_period: steps,
                rel_tolerance,
            };
            let mut row = ConvergenceRow {
                k_max,
                steps_per_fastest_period: steps,
                status: ConvergenceStatus::Ok,
                drift: None,
                max_defect: None,
                runtime_seconds: None,
                integration: None,
                spectrum: None,
                message: None,
            };
            if k_max < required_modes(cfg) {
                row.status = ConvergenceStatus::InsufficientModes;
                row.message = Some(format!("needs k_max >= {}", required_modes(cfg)));
                rows.push(row);
                continue;
            }
            let start = Instant::now();
            match simulate(cfg, &trunc) {
                Ok(run) => {
                    row.runtime_seconds = Some(start.elapsed().as_secs_f64());
                    row.max_defect = Some(max_defect(&run));
                    row.integration = Some(*run.diagnostics());
                    if let Some(prev) = &previous {
                        let modes = prev.len().min(run.spectrum.len());
                        let scale = run.spectrum.peak().max(ADDITIVITY_FLOOR);
                        let change = (1..=modes)
                            .map(|k| (run.spectrum.n_k(k) - prev.n_k(k)).abs())
                            .fold(0.0, f64::max);
                        row.drift = Some(change / scale);
                    }
                    previous = Some(run.spectrum.clone());
                    row.spectrum = Some(run.spectrum);
                }
                Err(e) => {
                    row.status = ConvergenceStatus::Failed;
                    row.message = Some(e.to_string());
                }
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Relative,
    Absolute,
}

impl ErrorKind {
    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Relative => "relative",
            ErrorKind::Absolute => "absolute",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub k: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub error: f64,
    pub kind: ErrorKind,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub pass: bool,
    /// `max_k (sqrt(N_k^L) + sqrt(N_k^R))^2` from the single-wall formulas.
    pub constructive_peak: f64,
    pub integration: IntegrationReport,
    pub defects: Vec<f64>,
    pub analytic_warnings: Vec<String>,
    pub no_secular_term: bool,
}

/// Largest photon number the two walls could produce in phase.
pub fn constructive_peak(cfg: &CavityConfig, k_max: usize) -> f64 {
    (1..=k_max)
        .map(|k| {
            let l = analytic::single_wall_number(k, cfg, Side::Left);
            let r = analytic::single_wall_number(k, cfg, Side::Right);
            l + r + 2.0 * (l * r).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Relative error where the analytic `N_k` is positive, absolute error
/// against a fraction of the constructive peak elsewhere.
pub fn compare_engines(cfg: &CavityConfig, trunc: &Truncation) -> Result<ComparisonReport> {
    let run = simulate(cfg, trunc)?;
    Ok(compare_run(cfg, trunc, &run))
}

/// [`compare_engines`] against an existing numeric run of `cfg`.
pub fn compare_run(cfg: &CavityConfig, trunc: &Truncation, run: &NumericRun) -> ComparisonReport {
    let analytic = analytic::photon_spectrum(cfg);
    let peak = constructive_peak(cfg, trunc.k_max);
    let absolute_tol = DESTRUCTIVE_RESIDUAL * peak;
    let rows: Vec<ComparisonRow> = (1..=trunc.k_max)
        .map(|k| {
            let a = analytic.n_k(k);
            let n = run.spectrum.n_k(k);
            let (error, kind, tolerance) = if a > 0.0 {
                ((n - a).abs() / a, ErrorKind::Relative, ORACLE_REL_TOL)
            } else {
                ((n - a).abs(), ErrorKind::Absolute, absolute_tol)
            };
            ComparisonRow {
                k,
                analytic: a,
                numeric: n,
                error,
                kind,
                tolerance,
                pass: error <= tolerance,
            }
        })
        .collect();
    ComparisonReport {
        pass: rows.iter().all(|r| r.pass),
        rows,
        constructive_peak: peak,
        integration: *run.diagnostics(),
        defects: run.defects.clone(),
        analytic_warnings: analytic.warnings.iter().map(|w| w.to_string()).collect(),
        no_secular_term: analytic.no_secular_term,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn equal_walls(gamma: f64) -> CavityConfig {
        CavityConfig::new(1e-3, 100.0)
            .with_left(1.0, gamma, 0.0)
            .with_right(1.0, gamma, 0.0)
    }

    fn analytic_spec(base: CavityConfig, grid: Vec<f64>) -> ScanSpec {
        ScanSpec {
            base,
            trunc: Truncation::with_modes(4),
            axis: ScanAxis::PhaseDelta,
            grid,
            engines: vec![Engine::Analytic],
        }
    }

    #[test]
    fn even_fringe_rises_towards_pi() {
        let result = phase_scan(&analytic_spec(equal_walls(2.0), vec![0.0, PI / 2.0, PI])).unwrap();
        let n1: Vec<f64> = result.series(Engine::Analytic, 1).iter().map(|p| p.1).collect();
        assert_eq!(n1[0], 0.0);
        assert_relative_eq!(n1[2] / n1[1], 2.0, max_relative = 1e-12);
    }

    #[test]
    fn odd_fringe_falls_towards_pi() {
        let result = phase_scan(&analytic_spec(equal_walls(3.0), vec![0.0, PI / 2.0, PI])).unwrap();
        for k in 1..=2 {
            let n: Vec<f64> = result.series(Engine::Analytic, k).iter().map(|p| p.1).collect();
            assert_relative_eq!(n[0] / n[1], 2.0, max_relative = 1e-12);
            assert!(n[2] <= 1e-18);
        }
    }

    #[test]
    fn unequal_frequencies_are_flat_in_phase() {
        let base = CavityConfig::new(1e-3, 100.0)
            .with_left(1.0, 2.0, 0.0)
            .with_right(1.0, 4.0, 0.0);
        let result = phase_scan(&analytic_spec(base, phase_grid(7))).unwrap();
        for k in 1..=4 {
            let series = result.series(Engine::Analytic, k);
            assert!(series.iter().all(|p| p.1 == series[0].1));
        }
    }

    #[test]
    fn rows_are_sorted_and_padded() {
        let mut spec = analytic_spec(equal_walls(2.0), phase_grid(4));
        spec.engines = vec![Engine::Analytic, Engine::Analytic];
        let result = scan(&spec).unwrap();
        assert_eq!(result.rows.len(), 4 * 4);
        let keys: Vec<(f64, usize)> = result.rows.iter().map(|r| (r.axis_value, r.k)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(keys, sorted);
    }

    #[test]
    fn invalid_specs_and_points() {
        let mut spec = analytic_spec(equal_walls(2.0), vec![1.0, 1.0]);
        assert!(matches!(scan(&spec), Err(Error::Scan(_))));
        spec.grid = vec![];
        assert!(matches!(scan(&spec), Err(Error::Scan(_))));
        spec.grid = vec![0.0];
        spec.engines.clear();
        assert!(matches!(scan(&spec), Err(Error::Scan(_))));

        // the second point breaks the small-motion bound and is recorded, not fatal
        let spec = ScanSpec {
            axis: ScanAxis::Epsilon,
            grid: vec![1e-3, 0.5],
            ..analytic_spec(equal_walls(2.0), vec![])
        };
        let result = scan(&spec).unwrap();
        assert_eq!(result.failures.len(), 1);
        assert_eq!(result.failures[0].axis_value, 0.5);
        assert_eq!(result.rows.len(), 4);
        assert!(phase_scan(&spec).is_err());
    }

    #[test]
    fn fringe_fit_recovers_exact_shapes() {
        let even: Vec<(f64, f64)> = phase_grid(8).iter().map(|&x| (x, 3.0 * (1.0 - x.cos()))).collect();
        let fit = fit_fringe(&even, 2);
        assert_relative_eq!(fit.amplitude, 3.0, max_relative = 1e-12);
        assert!(fit.residual < 1e-12);
        let flat: Vec<(f64, f64)> = phase_grid(8).iter().map(|&x| (x, 1.0)).collect();
        assert!(fit_fringe(&flat, 3).residual > 0.5);
    }

    #[test]
    fn additivity_requires_distinct_integers() {
        let cfg = equal_walls(2.0);
        assert!(matches!(
            additivity_check(&cfg, &Truncation::with_modes(4)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn additivity_is_exact_without_left_wall() {
        let cfg = CavityConfig::new(1e-3, 30.0)
            .with_left(0.0, 2.0, 0.0)
            .with_right(1.0, 3.0, 0.0);
        let report = additivity_check(&cfg, &Truncation::with_modes(4)).unwrap();
        assert_eq!(report.deviation, 0.0);
        assert_eq!(report.peaks.0, Some(1));
    }

    #[test]
    fn convergence_flags_small_truncation_and_zero_coupling() {
        let cfg = CavityConfig::new(0.0, 20.0).with_right(1.0, 4.0, 0.0);
        let rows = convergence_report(&cfg, &[2, 4, 6], &[16], 1e-6).unwrap();
        assert_eq!(rows[0].status, ConvergenceStatus::InsufficientModes);
        assert!(rows[0].spectrum.is_none());
        for row in &rows[1..] {
            assert_eq!(row.status, ConvergenceStatus::Ok);
            assert_eq!(row.spectrum.as_ref().unwrap().total(), 0.0);
        }
        assert_eq!(rows[2].drift, Some(0.0));
        assert!(convergence_report(&cfg, &[], &[16], 1e-6).is_err());
    }

    #[test]
    fn compare_engines_at_rest_is_trivially_exact() {
        let cfg = CavityConfig::new(0.0, 50.0).with_right(1.0, 2.0, 0.0);
        let report = compare_engines(&cfg, &Truncation::with_modes(4)).unwrap();
        assert!(report.pass);
        assert!(report.rows.iter().all(|r| r.analytic == 0.0 && r.numeric == 0.0));
    }
}

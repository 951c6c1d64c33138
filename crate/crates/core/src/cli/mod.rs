//! Command-line front end: `dce <command> [--config file] [overrides]`.
//!
//! Exit codes: 0 success, 1 tolerance or validation failure, 2 usage or
//! configuration error.

pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::analytic;
use crate::cavity::{slot, CavityConfig, ModeBasis, Side, Sigma, Truncation};
use crate::dynamics::{evolve_fundamental, simulate};
use crate::error::Error;
use crate::spectrum::Engine;
use crate::sweep::{self, ScanAxis, ScanResult, ScanSpec};
use crate::tolerances::{Tolerances, ADDITIVITY_TOL, NORMALIZATION_DEFECT};

pub use config::{parse_config, ConfigError, RawConfig};
pub use output::{Cell, Format, Report};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Time span of the free-evolution check in `validate`.
pub const FREE_CHECK_SPAN: f64 = 100.0;

#[derive(Debug, Parser)]
#[command(name = "dce", version, about = "Photon production between two oscillating cavity walls")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML or JSON document with flat keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format; inferred from the --out extension when absent
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// No diagnostics on stderr
    #[arg(long)]
    pub quiet: bool,
    #[command(flatten)]
    pub overrides: RawConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineChoice {
    Analytic,
    Numeric,
    Both,
}

impl EngineChoice {
    pub fn engines(self) -> Vec<Engine> {
        match self {
            EngineChoice::Analytic => vec![Engine::Analytic],
            EngineChoice::Numeric => vec![Engine::Numeric],
            EngineChoice::Both => vec![Engine::Analytic, Engine::Numeric],
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Photon number per mode
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value = "both")]
        engine: EngineChoice,
    },
    /// Scan phi_left - phi_right over j * 2 pi / points
    PhaseScan {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 16)]
        points: usize,
        #[arg(long, value_enum, default_value = "numeric")]
        engine: EngineChoice,
    },
    /// Scan gamma_right over --grid, or --from..=--to in --points steps
    FreqScan {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Vec<f64>,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, value_enum, default_value = "numeric")]
        engine: EngineChoice,
    },
    /// Two-wall spectrum against the sum of single-wall spectra
    Additivity {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Spectra across truncations and step resolutions
    Convergence {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [8, 16, 32])]
        k_list: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [16, 32])]
        steps_list: Vec<usize>,
    },
    /// Analytic against numeric spectrum, per mode
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Self-checks on a configuration
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Command {
    Spectrum { engines: Vec<Engine> },
    PhaseScan { points: usize, engines: Vec<Engine> },
    FreqScan { grid: Vec<f64>, engines: Vec<Engine> },
    Additivity,
    Convergence { k_list: Vec<usize>, steps_list: Vec<usize> },
    Compare,
    Validate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum { .. } => "spectrum",
            Command::PhaseScan { .. } => "phase-scan",
            Command::FreqScan { .. } => "freq-scan",
            Command::Additivity => "additivity",
            Command::Convergence { .. } => "convergence",
            Command::Compare => "compare",
            Command::Validate => "validate",
        }
    }
}

/// Everything needed to execute one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: CavityConfig,
    pub trunc: Truncation,
    pub command: Command,
    pub output_path: Option<PathBuf>,
    pub output_format: Format,
    pub quiet: bool,
}

/// Failure before any computation, reported with exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum UsageError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Arguments(String),
}

fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![from],
        _ => (0..points)
            .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

fn read_raw(common: &CommonArgs) -> Result<RawConfig, ConfigError> {
    let file = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.display().to_string(),
                source,
            })?;
            config::parse_raw(&text)?
        }
        None => RawConfig::default(),
    };
    Ok(file.overlay(&common.overrides))
}

impl RunManifest {
    pub fn from_args(args: CommandArgs) -> Result<RunManifest, UsageError> {
        let (common, command) = match args {
            CommandArgs::Spectrum { common, engine } => (
                common,
                Command::Spectrum {
                    engines: engine.engines(),
                },
            ),
            CommandArgs::PhaseScan {
                common,
                points,
                engine,
            } => {
                if points == 0 {
                    return Err(UsageError::Arguments("--points must be >= 1".into()));
                }
                (
                    common,
                    Command::PhaseScan {
                        points,
                        engines: engine.engines(),
                    },
                )
            }
            CommandArgs::FreqScan {
                common,
                grid,
                from,
                to,
                points,
                engine,
            } => {
                let grid = match (grid.is_empty(), from, to, points) {
                    (false, None, None, None) => grid,
                    (true, Some(a), Some(b), Some(n)) if n >= 1 => linspace(a, b, n),
                    _ => {
                        return Err(UsageError::Arguments(
                            "freq-scan needs either --grid or all of --from, --to, --points".into(),
                        ))
                    }
                };
                (
                    common,
                    Command::FreqScan {
                        grid,
                        engines: engine.engines(),
                    },
                )
            }
            CommandArgs::Additivity { common } => (common, Command::Additivity),
            CommandArgs::Convergence {
                common,
                k_list,
                steps_list,
            } => (common, Command::Convergence { k_list, steps_list }),
            CommandArgs::Compare { common } => (common, Command::Compare),
            CommandArgs::Validate { common } => (common, Command::Validate),
        };
        let mut raw = read_raw(&common)?;
        if let Command::FreqScan { grid, .. } = &command {
            // the truncation has to hold the fastest drive of the whole scan
            let top = grid.iter().copied().fold(f64::NAN, f64::max);
            if raw.k_max.is_none() && top.is_finite() {
                let mut probe = raw;
                probe.gamma_right = Some(top.max(raw.gamma_right.unwrap_or(top)));
                if let Ok((cfg, _)) = probe.resolve() {
                    raw.k_max = Some(Truncation::default_for(&cfg).k_max);
                }
            }
        }
        let (config, trunc) = raw.resolve()?;
        Ok(RunManifest {
            config,
            trunc,
            output_format: Format::resolve(common.format, common.out.as_deref()),
            output_path: common.out,
            quiet: common.quiet,
            command,
        })
    }
}

/// A report and whether its checks passed.
struct Outcome {
    report: Report,
    passed: bool,
    summary: String,
}

fn base_report(manifest: &RunManifest, columns: &[&'static str]) -> Report {
    let mut report = Report::new(columns);
    report.meta("command", &manifest.command);
    report.meta("config", manifest.config);
    report.meta("truncation", manifest.trunc);
    report.meta("tolerances", Tolerances::CURRENT);
    report.meta("version", concat!("dce-core ", env!("CARGO_PKG_VERSION")));
    report
}

fn spectrum_command(manifest: &RunManifest, engines: &[Engine]) -> Result<Outcome, Error> {
    let (cfg, trunc) = (&manifest.config, &manifest.trunc);
    let mut report = base_report(manifest, &["k", "engine", "N_k"]);
    let mut columns = Vec::new();
    for &engine in engines {
        let spectrum = match engine {
            Engine::Analytic => {
                let s = analytic::photon_spectrum(cfg).padded(trunc.k_max);
                report.meta("analytic_warnings", s.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>());
                report.meta("no_secular_term", s.no_secular_term);
                s
            }
            Engine::Numeric => {
                let run = simulate(cfg, trunc)?;
                report.meta("integration", run.diagnostics());
                report.meta("normalization_defects", &run.defects);
                run.spectrum
            }
        };
        columns.push((engine, spectrum));
    }
    for k in 1..=trunc.k_max {
        for (engine, spectrum) in &columns {
            report.push(vec![k.into(), engine.name().into(), spectrum.n_k(k).into()]);
        }
    }
    let summary = columns
        .iter()
        .map(|(e, s)| format!("{e}: total {:.6e}, peak at k = {:?}", s.total(), s.argmax()))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Outcome {
        report,
        passed: true,
        summary,
    })
}

fn scan_report(manifest: &RunManifest, result: &ScanResult) -> Outcome {
    let mut report = base_report(manifest, &["axis_value", "engine", "k", "N_k"]);
    report.meta("axis", result.axis);
    report.meta("failed_points", &result.failures);
    report.meta("integration", &result.diagnostics);
    for row in &result.rows {
        report.push(vec![
            row.axis_value.into(),
            row.engine.name().into(),
            row.k.into(),
            row.n_k.into(),
        ]);
    }
    let summary = format!(
        "{} rows, {} failed points",
        result.rows.len(),
        result.failures.len()
    );
    Outcome {
        report,
        passed: true,
        summary,
    }
}

fn scan_command(manifest: &RunManifest, axis: ScanAxis, grid: Vec<f64>, engines: &[Engine]) -> Result<Outcome, Error> {
    let spec = ScanSpec {
        base: manifest.config,
        trunc: manifest.trunc,
        axis,
        grid,
        engines: engines.to_vec(),
    };
    let result = match axis {
        ScanAxis::PhaseDelta => sweep::phase_scan(&spec)?,
        _ => sweep::scan(&spec)?,
    };
    Ok(scan_report(manifest, &result))
}

fn additivity_command(manifest: &RunManifest) -> Result<Outcome, Error> {
    let result = sweep::additivity_check(&manifest.config, &manifest.trunc)?;
    let mut report = base_report(
        manifest,
        &["k", "N_k_both", "N_k_left", "N_k_right", "deviation"],
    );
    report.meta("deviation", result.deviation);
    report.meta("floor", result.floor);
    report.meta("peaks", result.peaks);
    report.meta("within_tolerance", result.deviation <= ADDITIVITY_TOL);
    for (i, dev) in result.per_mode.iter().enumerate() {
        let k = i + 1;
        report.push(vec![
            k.into(),
            result.both.n_k(k).into(),
            result.left.n_k(k).into(),
            result.right.n_k(k).into(),
            (*dev).into(),
        ]);
    }
    Ok(Outcome {
        report,
        passed: true,
        summary: format!(
            "max deviation {:.3e}, single-wall peaks at {:?}",
            result.deviation, result.peaks
        ),
    })
}

fn convergence_command(manifest: &RunManifest, k_list: &[usize], steps_list: &[usize]) -> Result<Outcome, Error> {
    let rows = sweep::convergence_report(&manifest.config, k_list, steps_list, manifest.trunc.rel_tolerance)?;
    let mut report = base_report(
        manifest,
        &[
            "k_max",
            "steps_per_fastest_period",
            "status",
            "steps",
            "error_estimate",
            "drift",
            "max_defect",
            "runtime_seconds",
        ],
    );
    let status = |s: sweep::ConvergenceStatus| match s {
        sweep::ConvergenceStatus::Ok => "ok",
        sweep::ConvergenceStatus::InsufficientModes => "insufficient_modes",
        sweep::ConvergenceStatus::Failed => "failed",
    };
    for row in &rows {
        report.push(vec![
            row.k_max.into(),
            row.steps_per_fastest_period.into(),
            status(row.status).into(),
            row.integration.map(|r| r.steps).into(),
            row.integration.map(|r| r.error_estimate).into(),
            row.drift.into(),
            row.max_defect.into(),
            row.runtime_seconds.into(),
        ]);
    }
    let messages: Vec<String> = rows.iter().filter_map(|r| r.message.clone()).collect();
    report.meta("messages", &messages);
    Ok(Outcome {
        report,
        passed: true,
        summary: format!("{} rows", rows.len()),
    })
}

fn comparison_rows(report: &mut Report, comparison: &sweep::ComparisonReport) {
    for row in &comparison.rows {
        report.push(vec![
            row.k.into(),
            row.analytic.into(),
            row.numeric.into(),
            row.error.into(),
            row.kind.name().into(),
            row.tolerance.into(),
            row.pass.into(),
        ]);
    }
}

fn compare_command(manifest: &RunManifest) -> Result<Outcome, Error> {
    let comparison = sweep::compare_engines(&manifest.config, &manifest.trunc)?;
    let mut report = base_report(
        manifest,
        &["k", "analytic", "numeric", "error", "kind", "tolerance", "pass"],
    );
    report.meta("pass", comparison.pass);
    report.meta("constructive_peak", comparison.constructive_peak);
    report.meta("integration", comparison.integration);
    report.meta("normalization_defects", &comparison.defects);
    report.meta("analytic_warnings", &comparison.analytic_warnings);
    report.meta("no_secular_term", comparison.no_secular_term);
    comparison_rows(&mut report, &comparison);
    let failing: Vec<usize> = comparison.rows.iter().filter(|r| !r.pass).map(|r| r.k).collect();
    Ok(Outcome {
        report,
        passed: comparison.pass,
        summary: if comparison.pass {
            "engines agree".to_string()
        } else {
            format!("engines disagree at k = {failing:?}")
        },
    })
}

/// Regime where the closed-form spectrum is expected to match the numerics.
pub fn oracle_regime(cfg: &CavityConfig, trunc: &Truncation) -> bool {
    let driven_resonance = Side::BOTH
        .iter()
        .any(|&s| cfg.amplitude(s) > 0.0 && analytic::resonant_ratio(cfg.gamma(s)).is_some());
    driven_resonance
        && cfg.omega1() * cfg.t_final >= 500.0
        && cfg.secular_parameter() <= 0.1
        && trunc.k_max as f64 >= 4.0 * cfg.max_gamma()
}

struct Check {
    name: &'static str,
    status: &'static str,
    value: Option<f64>,
    tolerance: Option<f64>,
    detail: String,
}

impl Check {
    fn judged(name: &'static str, value: f64, tolerance: f64, detail: String) -> Check {
        Check {
            name,
            status: if value <= tolerance { "pass" } else { "fail" },
            value: Some(value),
            tolerance: Some(tolerance),
            detail,
        }
    }

    fn skipped(name: &'static str, detail: &str) -> Check {
        Check {
            name,
            status: "skipped",
            value: None,
            tolerance: None,
            detail: detail.to_string(),
        }
    }
}

fn free_evolution_deviation(cfg: &CavityConfig, trunc: &Truncation) -> Result<f64, Error> {
    let mut free = *cfg;
    free.epsilon = 0.0;
    free.t_final = cfg.t_final.min(FREE_CHECK_SPAN);
    let sol = evolve_fundamental(&free, trunc)?;
    let basis = ModeBasis::new(free.lambda, trunc.k_max);
    let mut expected = Array2::<Complex64>::zeros(sol.phi_t.raw_dim());
    for k in 1..=trunc.k_max {
        for sigma in Sigma::BOTH {
            expected[[slot(k, sigma), slot(k, sigma)]] =
                Complex64::from_polar(1.0, sigma.sign() * basis.omega(k) * free.t_final);
        }
    }
    Ok(sol
        .phi_t
        .iter()
        .zip(expected.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

fn validate_command(manifest: &RunManifest) -> Result<Outcome, Error> {
    let (cfg, trunc) = (&manifest.config, &manifest.trunc);
    let mut checks = vec![Check {
        name: "config",
        status: "pass",
        value: None,
        tolerance: None,
        detail: "all invariants hold".into(),
    }];

    let free = free_evolution_deviation(cfg, trunc)?;
    checks.push(Check::judged(
        "free_evolution",
        free,
        10.0 * trunc.rel_tolerance,
        format!("max |phi_T - diag(e^(i sigma omega_k T))| at epsilon = 0 over T = {}", cfg.t_final.min(FREE_CHECK_SPAN)),
    ));

    let run = simulate(cfg, trunc)?;
    let diag = run.diagnostics();
    checks.push(Check::judged(
        "integration_error",
        diag.error_estimate,
        trunc.rel_tolerance,
        format!("{} steps, {} refinements", diag.steps, diag.refinements),
    ));
    let smallest = run.spectrum.values.iter().map(|&(_, n)| n).fold(f64::INFINITY, f64::min);
    checks.push(Check {
        name: "nonnegative_spectrum",
        status: if smallest >= 0.0 { "pass" } else { "fail" },
        value: Some(smallest),
        tolerance: None,
        detail: "smallest N_k".into(),
    });

    let small_coupling = cfg.secular_parameter() <= 0.1;
    if small_coupling {
        checks.push(Check::judged(
            "normalization_defect",
            run.defects[0],
            NORMALIZATION_DEFECT,
            "d_1 = |sum_k (|alpha_1k|^2 - |beta_1k|^2) - 1|".into(),
        ));
    } else {
        checks.push(Check::skipped("normalization_defect", "epsilon * omega_1 * T > 0.1"));
    }

    if cfg.epsilon == 0.0 || oracle_regime(cfg, trunc) {
        let comparison = sweep::compare_run(cfg, trunc, &run);
        let worst = comparison
            .rows
            .iter()
            .map(|r| match (r.error, r.tolerance) {
                (e, _) if e == 0.0 => 0.0,
                (_, t) if t == 0.0 => f64::INFINITY,
                (e, t) => e / t,
            })
            .fold(0.0, f64::max);
        checks.push(Check {
            name: "engine_agreement",
            status: if comparison.pass { "pass" } else { "fail" },
            value: Some(worst),
            tolerance: Some(1.0),
            detail: "largest per-mode error as a fraction of its tolerance".into(),
        });
    } else {
        checks.push(Check::skipped(
            "engine_agreement",
            "outside the regime omega_1 T >= 500, epsilon omega_1 T <= 0.1, k_max >= 4 max(gamma) with a driven integer gamma",
        ));
    }

    let mut report = base_report(manifest, &["check", "status", "value", "tolerance", "detail"]);
    let passed = checks.iter().all(|c| c.status != "fail");
    report.meta("pass", passed);
    report.meta("integration", diag);
    for c in &checks {
        report.push(vec![
            c.name.into(),
            c.status.into(),
            c.value.into(),
            c.tolerance.into(),
            c.detail.as_str().into(),
        ]);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| c.status == "fail").map(|c| c.name).collect();
    Ok(Outcome {
        report,
        passed,
        summary: if passed {
            "all checks pass".to_string()
        } else {
            format!("failed checks: {}", failed.join(", "))
        },
    })
}

fn execute(manifest: &RunManifest) -> Result<Outcome, Error> {
    match &manifest.command {
        Command::Spectrum { engines } => spectrum_command(manifest, engines),
        Command::PhaseScan { points, engines } => {
            scan_command(manifest, ScanAxis::PhaseDelta, sweep::phase_grid(*points), engines)
        }
        Command::FreqScan { grid, engines } => {
            scan_command(manifest, ScanAxis::GammaRight, grid.clone(), engines)
        }
        Command::Additivity => additivity_command(manifest),
        Command::Convergence { k_list, steps_list } => {
            convergence_command(manifest, k_list, steps_list)
        }
        Command::Compare => compare_command(manifest),
        Command::Validate => validate_command(manifest),
    }
}

fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Integration { .. } => EXIT_FAILURE,
        _ => EXIT_USAGE,
    }
}

/// Executes a manifest, writes its output and returns the exit code.
pub fn run(manifest: &RunManifest) -> i32 {
    let outcome = match execute(manifest) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("dce {}: {e}", manifest.command.name());
            return error_exit_code(&e);
        }
    };
    let mut report = outcome.report;
    report.meta("output_format", manifest.output_format.name());
    let text = report.render(manifest.output_format);
    match &manifest.output_path {
        Some(path) => {
            if let Err(e) = output::write_atomic(path, &text) {
                eprintln!("dce: cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
        }
        None => print!("{text}"),
    }
    if !manifest.quiet {
        eprintln!("dce {}: {}", manifest.command.name(), outcome.summary);
    }
    if outcome.passed {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match RunManifest::from_args(cli.command) {
        Ok(manifest) => run(&manifest),
        Err(e) => {
            eprintln!("dce: {e}");
            EXIT_USAGE
        }
    }
}

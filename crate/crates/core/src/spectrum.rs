use serde::{Deserialize, Serialize};

use crate::cavity::CavityConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Analytic,
    Numeric,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Numeric => "numeric",
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(Engine::Analytic),
            "numeric" => Ok(Engine::Numeric),
            other => Err(format!("unknown engine '{other}' (expected analytic or numeric)")),
        }
    }
}

/// Regime warnings attached to first-order closed-form results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ValidityWarning {
    /// `epsilon * omega_1 * T` is too large for first-order perturbation theory.
    LargeSecularParameter(f64),
    /// `omega_1 * T` is too short for the secular terms to dominate.
    ShortDuration(f64),
}

impl std::fmt::Display for ValidityWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValidityWarning::LargeSecularParameter(x) => {
                write!(f, "epsilon*omega_1*T = {x} exceeds the first-order regime")
            }
            ValidityWarning::ShortDuration(x) => {
                write!(f, "omega_1*T = {x} is too short for the secular approximation")
            }
        }
    }
}

/// Photon numbers per final mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// `(k, N_k)` in increasing `k`, starting at 1.
    pub values: Vec<(usize, f64)>,
    pub provenance: Engine,
    pub config_snapshot: CavityConfig,
    /// Set by the analytic engine when neither wall drives a resonance.
    pub no_secular_term: bool,
    pub warnings: Vec<ValidityWarning>,
}

impl Spectrum {
    pub fn new(values: Vec<f64>, provenance: Engine, config: CavityConfig) -> Self {
        Spectrum {
            values: values.into_iter().enumerate().map(|(i, n)| (i + 1, n)).collect(),
            provenance,
            config_snapshot: config,
            no_secular_term: false,
            warnings: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `N_k`, or zero for modes the spectrum does not list.
    pub fn n_k(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.values.get(k - 1).map_or(0.0, |&(_, n)| n)
    }

    pub fn total(&self) -> f64 {
        self.values.iter().map(|&(_, n)| n).sum()
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().map(|&(_, n)| n).fold(0.0, f64::max)
    }

    /// Mode with the largest photon number; the lowest such `k` on ties.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for &(k, n) in &self.values {
            if best.is_none_or(|(_, b)| n > b) {
                best = Some((k, n));
            }
        }
        best.map(|(k, _)| k)
    }

    /// Extends with zeros (or truncates) to exactly `k_max` modes.
    pub fn padded(mut self, k_max: usize) -> Self {
        self.values.truncate(k_max);
        let start = self.values.len();
        self.values.extend((start + 1..=k_max).map(|k| (k, 0.0)));
        self
    }
}

//! Flat-key run configuration documents (TOML or JSON).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cavity::{CavityConfig, Truncation};
use crate::error::Error;

/// Every key of the schema, all optional until [`RawConfig::resolve`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a_left: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a_right: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_left: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma_right: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi_left: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub phi_right: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub steps_per_fastest_period: Option<usize>,
    #[arg(long)]
    pub rel_tolerance: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("missing required key '{0}'")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(#[from] Error),
}

impl RawConfig {
    /// Values set in `other` replace ours.
    pub fn overlay(self, other: &RawConfig) -> RawConfig {
        RawConfig {
            lambda: other.lambda.or(self.lambda),
            epsilon: other.epsilon.or(self.epsilon),
            a_left: other.a_left.or(self.a_left),
            a_right: other.a_right.or(self.a_right),
            gamma_left: other.gamma_left.or(self.gamma_left),
            gamma_right: other.gamma_right.or(self.gamma_right),
            phi_left: other.phi_left.or(self.phi_left),
            phi_right: other.phi_right.or(self.phi_right),
            t_final: other.t_final.or(self.t_final),
            k_max: other.k_max.or(self.k_max),
            steps_per_fastest_period: other.steps_per_fastest_period.or(self.steps_per_fastest_period),
            rel_tolerance: other.rel_tolerance.or(self.rel_tolerance),
        }
    }

    /// Applies defaults and checks every invariant.
    ///
    /// Values that are present are checked before missing keys are reported.
    /// A missing frequency ratio copies the other wall's.
    pub fn resolve(&self) -> Result<(CavityConfig, Truncation), ConfigError> {
        // an invalid ratio is reported under its own key, never copied
        let usable = |g: Option<f64>| g.filter(|g| *g > 0.0);
        let cfg = CavityConfig {
            lambda: self.lambda.unwrap_or(PI),
            epsilon: self.epsilon.unwrap_or(0.0),
            a_left: self.a_left.unwrap_or(0.0),
            a_right: self.a_right.unwrap_or(0.0),
            gamma_left: self.gamma_left.or(usable(self.gamma_right)).unwrap_or(1.0),
            gamma_right: self.gamma_right.or(usable(self.gamma_left)).unwrap_or(1.0),
            phi_left: self.phi_left.unwrap_or(0.0),
            phi_right: self.phi_right.unwrap_or(0.0),
            t_final: self.t_final.unwrap_or(1.0),
        };
        cfg.validate()?;
        if self.epsilon.is_none() {
            return Err(ConfigError::Missing("epsilon"));
        }
        if self.t_final.is_none() {
            return Err(ConfigError::Missing("t_final"));
        }
        if self.gamma_right.or(self.gamma_left).is_none() {
            return Err(ConfigError::Missing("gamma_right"));
        }
        let defaults = Truncation::default_for(&cfg);
        let trunc = Truncation {
            k_max: self.k_max.unwrap_or(defaults.k_max),
            steps_per_fastest_period: self
                .steps_per_fastest_period
                .unwrap_or(defaults.steps_per_fastest_period),
            rel_tolerance: self.rel_tolerance.unwrap_or(defaults.rel_tolerance),
        };
        trunc.validate(&cfg)?;
        Ok((cfg, trunc))
    }

    /// The document that reproduces `cfg` and `trunc` exactly.
    pub fn from_resolved(cfg: &CavityConfig, trunc: &Truncation) -> RawConfig {
        RawConfig {
            lambda: Some(cfg.lambda),
            epsilon: Some(cfg.epsilon),
            a_left: Some(cfg.a_left),
            a_right: Some(cfg.a_right),
            gamma_left: Some(cfg.gamma_left),
            gamma_right: Some(cfg.gamma_right),
            phi_left: Some(cfg.phi_left),
            phi_right: Some(cfg.phi_right),
            t_final: Some(cfg.t_final),
            k_max: Some(trunc.k_max),
            steps_per_fastest_period: Some(trunc.steps_per_fastest_period),
            rel_tolerance: Some(trunc.rel_tolerance),
        }
    }
}

/// Reads a flat-key document. JSON when it starts with `{`, TOML otherwise.
pub fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<(CavityConfig, Truncation), ConfigError> {
    parse_raw(text)?.resolve()
}

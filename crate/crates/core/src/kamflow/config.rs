use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opalgebra::{LocalOperator, Space};

use super::schedule::{validate_rates, DecaySchedule};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMode {
    /// Conjugate with dense matrix exponentials.
    #[default]
    Dense,
    /// Sum the nested-commutator expansion of the conjugation in the sector algebra.
    Series,
}

impl FromStr for FlowMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" => Ok(FlowMode::Dense),
            "series" => Ok(FlowMode::Series),
            other => Err(Error::schema("mode", format!("expected `dense` or `series`, got `{other}`"))),
        }
    }
}

impl fmt::Display for FlowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowMode::Dense => "dense",
            FlowMode::Series => "series",
        })
    }
}

#[derive(Clone, Debug)]
pub struct FlowConfig {
    /// `H'`; its space fixes the volume, the site spaces and `H0`.
    pub perturbation: LocalOperator,
    pub kappa: f64,
    pub kappa_prime: f64,
    pub vtol: f64,
    /// Maximal number of conjugation steps.
    pub nmax: usize,
    pub mode: FlowMode,
    /// Truncation order of the commutator series.
    pub kmax: usize,
    /// Admissibility threshold for the smallness parameter; exceeding it only warns.
    pub epsilon_threshold: f64,
}

pub const DEFAULT_VTOL: f64 = 1e-12;
pub const DEFAULT_NMAX: usize = 30;
pub const DEFAULT_KMAX: usize = 20;
pub const DEFAULT_EPSILON_THRESHOLD: f64 = 1e-2;

impl FlowConfig {
    pub fn new(perturbation: LocalOperator, kappa: f64, kappa_prime: f64) -> Result<Self> {
        let cfg = FlowConfig {
            perturbation,
            kappa,
            kappa_prime,
            vtol: DEFAULT_VTOL,
            nmax: DEFAULT_NMAX,
            mode: FlowMode::Dense,
            kmax: DEFAULT_KMAX,
            epsilon_threshold: DEFAULT_EPSILON_THRESHOLD,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_mode(mut self, mode: FlowMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_vtol(mut self, vtol: f64) -> Self {
        self.vtol = vtol;
        self
    }

    pub fn with_nmax(mut self, nmax: usize) -> Self {
        self.nmax = nmax;
        self
    }

    pub fn space(&self) -> &Arc<Space> {
        self.perturbation.space()
    }

    pub fn schedule(&self) -> DecaySchedule {
        DecaySchedule { kappa: self.kappa, kappa_prime: self.kappa_prime }
    }

    pub fn validate(&self) -> Result<()> {
        validate_rates(self.kappa, self.kappa_prime)?;
        if !(self.vtol > 0.0) {
            return Err(Error::schema("vtol", "must be positive"));
        }
        if self.nmax == 0 {
            return Err(Error::schema("nmax", "must be at least 1"));
        }
        if self.kmax == 0 {
            return Err(Error::schema("kmax", "must be at least 1"));
        }
        if !(self.epsilon_threshold > 0.0) {
            return Err(Error::schema("epsilon_threshold", "must be positive"));
        }
        Ok(())
    }
}

/// `|H'|_{kappa'} |H0|_{kappa'} / (g^2 (kappa' - kappa)^2)`.
pub fn check_condition(h_prime: &LocalOperator, kappa: f64, kappa_prime: f64) -> Result<f64> {
    let space = h_prime.space();
    let g = space.gap();
    let h0 = space.h0().norm(kappa_prime)?;
    Ok(epsilon_value(h_prime.norm(kappa_prime)?, h0, g, kappa, kappa_prime))
}

pub fn epsilon_value(h_prime_norm: f64, h0_norm: f64, g: f64, kappa: f64, kappa_prime: f64) -> f64 {
    h_prime_norm * h0_norm / (g * g * (kappa_prime - kappa).powi(2))
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `kappa_n = kappa + (kappa' - kappa) / n`, decreasing from `kappa_1 = kappa'` towards `kappa`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySchedule {
    pub kappa: f64,
    pub kappa_prime: f64,
}

impl DecaySchedule {
    pub fn new(kappa: f64, kappa_prime: f64) -> Result<Self> {
        validate_rates(kappa, kappa_prime)?;
        Ok(DecaySchedule { kappa, kappa_prime })
    }

    /// Panics for `n = 0`.
    pub fn kappa_n(&self, n: usize) -> f64 {
        assert!(n >= 1, "schedule starts at n = 1");
        self.kappa + (self.kappa_prime - self.kappa) / n as f64
    }

    /// `kappa_{n-1} - kappa_n`, undefined for `n = 1`.
    pub fn delta(&self, n: usize) -> Option<f64> {
        (n >= 2).then(|| (self.kappa_prime - self.kappa) / ((n - 1) * n) as f64)
    }
}

/// `(kappa_n, delta kappa_n)`.
pub fn schedule(kappa: f64, kappa_prime: f64, n: usize) -> (f64, Option<f64>) {
    let s = DecaySchedule { kappa, kappa_prime };
    (s.kappa_n(n), s.delta(n))
}

pub(crate) fn validate_rates(kappa: f64, kappa_prime: f64) -> Result<()> {
    if !kappa.is_finite() || kappa < std::f64::consts::LN_2 - 1e-12 {
        return Err(Error::schema("kappa", "must be at least log 2"));
    }
    if !kappa_prime.is_finite() || kappa_prime <= kappa {
        return Err(Error::schema("kappa_prime", "must exceed kappa"));
    }
    if kappa_prime - kappa > 1.0 + 1e-12 {
        return Err(Error::schema("kappa_prime", "must not exceed kappa + 1"));
    }
    Ok(())
}

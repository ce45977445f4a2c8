use serde::{Deserialize, Serialize};

use crate::dense;
use crate::error::{Error, Result};

use super::operator::LocalOperator;

/// Decay rate and optional anchor site of a weighted norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub mu: f64,
    pub anchor: Option<usize>,
    /// Omit the scalar contribution.
    #[serde(default)]
    pub primed: bool,
}

impl NormSpec {
    pub fn new(mu: f64) -> Self {
        NormSpec { mu, anchor: None, primed: false }
    }

    pub fn primed(mu: f64) -> Self {
        NormSpec { mu, anchor: None, primed: true }
    }

    pub fn anchored(mu: f64, x: usize) -> Self {
        NormSpec { mu, anchor: Some(x), primed: false }
    }
}

impl LocalOperator {
    pub fn mu_norm(&self, spec: &NormSpec) -> Result<f64> {
        if !(spec.mu >= 0.0) {
            return Err(Error::schema("mu", "must be non-negative"));
        }
        let space = self.space();
        let volume = space.volume();
        match spec.anchor {
            Some(x) => {
                if x >= space.num_sites() {
                    return Err(Error::SupportNotContained { support: vec![x], target: space.all_sites().to_vec() });
                }
                let mut total = if spec.primed { 0.0 } else { self.scalar().norm() };
                for (sector, core) in self.blocks() {
                    let w = volume.weight_anchored(sector.support(), x)?;
                    total += (spec.mu * w as f64).exp() * dense::op_norm(core);
                }
                Ok(total)
            }
            None => {
                let mut per_site = vec![0.0; space.num_sites()];
                for (sector, core) in self.blocks() {
                    let s = sector.support();
                    let term = (spec.mu * volume.weight(s)? as f64).exp() * dense::op_norm(core);
                    for x in s.iter() {
                        per_site[x] += term;
                    }
                }
                let sup = per_site.into_iter().fold(0.0, f64::max);
                let scalar = if spec.primed { 0.0 } else { self.scalar().norm() / space.num_sites() as f64 };
                Ok(scalar + sup)
            }
        }
    }

    /// `|O|_mu`.
    pub fn norm(&self, mu: f64) -> Result<f64> {
        self.mu_norm(&NormSpec::new(mu))
    }

    /// `|O|'_mu`, without the scalar term.
    pub fn norm_prime(&self, mu: f64) -> Result<f64> {
        self.mu_norm(&NormSpec::primed(mu))
    }

    /// `|O|_{mu,x}`.
    pub fn norm_anchored(&self, mu: f64, x: usize) -> Result<f64> {
        self.mu_norm(&NormSpec::anchored(mu, x))
    }
}

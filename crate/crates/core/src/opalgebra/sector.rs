use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::SiteSet;

/// Sites carrying raising, lowering and neutral single-site factors.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SectorIndex {
    pub plus: SiteSet,
    pub minus: SiteSet,
    pub neutral: SiteSet,
}

/// Role of one site inside a sector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Identity,
    Plus,
    Minus,
    Neutral,
}

impl SectorIndex {
    /// Panics if the three sets overlap; use [`SectorIndex::try_new`] for untrusted input.
    pub fn new(plus: SiteSet, minus: SiteSet, neutral: SiteSet) -> Self {
        Self::try_new(plus, minus, neutral).expect("sector sets must be disjoint")
    }

    pub fn try_new(plus: SiteSet, minus: SiteSet, neutral: SiteSet) -> Result<Self> {
        if !plus.is_disjoint(minus) || !plus.is_disjoint(neutral) || !minus.is_disjoint(neutral) {
            return Err(Error::DimensionMismatch(format!(
                "sector sets overlap: plus {plus:?}, minus {minus:?}, neutral {neutral:?}"
            )));
        }
        Ok(SectorIndex { plus, minus, neutral })
    }

    pub fn plus(s: SiteSet) -> Self {
        Self::new(s, SiteSet::EMPTY, SiteSet::EMPTY)
    }

    pub fn minus(s: SiteSet) -> Self {
        Self::new(SiteSet::EMPTY, s, SiteSet::EMPTY)
    }

    pub fn neutral(s: SiteSet) -> Self {
        Self::new(SiteSet::EMPTY, SiteSet::EMPTY, s)
    }

    pub fn support(&self) -> SiteSet {
        self.plus.union(self.minus).union(self.neutral)
    }

    /// Sites indexing the rows of the stored core.
    pub fn row_sites(&self) -> SiteSet {
        self.plus.union(self.neutral)
    }

    /// Sites indexing the columns of the stored core.
    pub fn col_sites(&self) -> SiteSet {
        self.minus.union(self.neutral)
    }

    pub fn role(&self, x: usize) -> Role {
        if self.plus.contains(x) {
            Role::Plus
        } else if self.minus.contains(x) {
            Role::Minus
        } else if self.neutral.contains(x) {
            Role::Neutral
        } else {
            Role::Identity
        }
    }

    pub fn is_pure_plus(&self) -> bool {
        !self.plus.is_empty() && self.minus.is_empty() && self.neutral.is_empty()
    }

    pub fn is_pure_minus(&self) -> bool {
        !self.minus.is_empty() && self.plus.is_empty() && self.neutral.is_empty()
    }

    pub fn adjoint(&self) -> Self {
        SectorIndex { plus: self.minus, minus: self.plus, neutral: self.neutral }
    }
}

impl fmt::Debug for SectorIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(+{:?}, -{:?}, n{:?})", self.plus, self.minus, self.neutral)
    }
}

use std::sync::Arc;

use crate::dense::{self, CMatrix, I};
use crate::error::Result;
use crate::opalgebra::{LocalOperator, Space};

/// `U = e^{-iA_1} e^{-iA_2} ... e^{-iA_N}`, so that `U^{-1} H U` is the dressed operator.
#[derive(Clone, Debug)]
pub struct DressingTransform {
    space: Arc<Space>,
    generators: Vec<LocalOperator>,
    self_adjoint: bool,
}

impl DressingTransform {
    pub fn new(space: &Arc<Space>, generators: Vec<LocalOperator>, self_adjoint: bool) -> Self {
        DressingTransform { space: space.clone(), generators, self_adjoint }
    }

    pub fn identity(space: &Arc<Space>) -> Self {
        Self::new(space, Vec::new(), true)
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn generators(&self) -> &[LocalOperator] {
        &self.generators
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn self_adjoint(&self) -> bool {
        self.self_adjoint
    }

    /// Transform built from the first `k` generators.
    pub fn truncated(&self, k: usize) -> Self {
        Self::new(&self.space, self.generators[..k.min(self.len())].to_vec(), self.self_adjoint)
    }

    /// `U` in the adapted frame.
    pub fn dense_adapted(&self) -> CMatrix {
        let n = self.space.full_dim();
        self.generators.iter().fold(dense::identity(n), |u, a| u * dense::expm(&(a.dense_adapted() * -I)))
    }

    /// `U^{-1}` in the adapted frame.
    pub fn inverse_dense_adapted(&self) -> CMatrix {
        let n = self.space.full_dim();
        self.generators.iter().fold(dense::identity(n), |u, a| dense::expm(&(a.dense_adapted() * I)) * u)
    }

    /// `U` in the computational basis.
    pub fn dense(&self) -> CMatrix {
        self.space.from_adapted(self.space.all_sites(), &self.dense_adapted())
    }

    /// `U^{-1}` in the computational basis.
    pub fn inverse_dense(&self) -> CMatrix {
        self.space.from_adapted(self.space.all_sites(), &self.inverse_dense_adapted())
    }

    /// `U^{-1} O U` when `inverse` is set, otherwise `U O U^{-1}`.
    pub fn apply(&self, o: &LocalOperator, inverse: bool) -> Result<LocalOperator> {
        if self.is_empty() {
            return Ok(o.clone());
        }
        let u = self.dense_adapted();
        let ui = self.inverse_dense_adapted();
        let od = o.dense_adapted();
        let m = if inverse { &ui * od * &u } else { &u * od * &ui };
        LocalOperator::decompose_adapted(&self.space, self.space.all_sites(), &m)
    }
}

/// `U^{-1} O U` when `inverse` is set, otherwise `U O U^{-1}`.
pub fn apply_dressing(u: &DressingTransform, o: &LocalOperator, inverse: bool) -> Result<LocalOperator> {
    u.apply(o, inverse)
}

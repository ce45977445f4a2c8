use crate::dense::{self, CMatrix, CVector};
use crate::error::{Error, Result};
use crate::opalgebra::SiteSpace;

use super::natural::{identity_natural, lindblad_superoperator};
use super::stationary::stationary_state_direct;

/// Tolerance on the symmetry of `l_x` in the weighted inner product and on `l_x(1) = 0`.
pub const GENERATOR_TOLERANCE: f64 = 1e-10;

/// Single-site observable space with the weighted inner product `<A,B> = Tr(rho A* B)`.
#[derive(Clone, Debug)]
pub struct WeightedSite {
    dim: usize,
    classical: bool,
    /// `rho_x`, or `diag(nu_x)`.
    weight: CMatrix,
    /// `l_x` on the natural basis.
    generator: CMatrix,
    gram: CMatrix,
    /// Orthonormal basis starting with `1`, as columns of natural coefficients.
    basis: CMatrix,
    /// `l_x` in the orthonormal basis.
    coords: CMatrix,
}

impl WeightedSite {
    /// Classical jump process with rate matrix `rates` (rows sum to zero). The reference
    /// measure defaults to the stationary distribution of `rates`.
    pub fn classical(rates: CMatrix, nu: Option<Vec<f64>>) -> Result<Self> {
        let dim = square(&rates, "rates")?;
        let nu = match nu {
            Some(nu) => nu,
            None => stationary_state_direct(&rates, &[dim], true)?.diagonal().iter().map(|z| z.re).collect(),
        };
        if nu.len() != dim {
            return Err(Error::DimensionMismatch(format!("measure has {} entries, expected {dim}", nu.len())));
        }
        let total: f64 = nu.iter().sum();
        if nu.iter().any(|&p| !(p > 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSiteSpace("reference measure must be strictly positive and sum to 1".into()));
        }
        let weight = CMatrix::from_diagonal(&CVector::from_iterator(dim, nu.iter().map(|&p| dense::r(p))));
        let gram = weight.clone();
        Self::build(dim, true, weight, rates, gram)
    }

    /// Quantum site with generator `generator` on the natural basis of `d x d` observables.
    /// The reference state defaults to the stationary state of `generator`.
    pub fn quantum(rho: Option<CMatrix>, generator: CMatrix) -> Result<Self> {
        let n = square(&generator, "generator")?;
        let dim = (n as f64).sqrt().round() as usize;
        if dim * dim != n {
            return Err(Error::DimensionMismatch(format!("generator dimension {n} is not a square")));
        }
        let rho = match rho {
            Some(rho) => rho,
            None => stationary_state_direct(&generator, &[dim], false)?,
        };
        if rho.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch(format!("state is {:?}, expected {dim}x{dim}", rho.shape())));
        }
        if !dense::is_hermitian(&rho, 1e-12) || (rho.trace().re - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSiteSpace("state must be Hermitian with unit trace".into()));
        }
        if dense::hermitian_eigen(&rho).0[0] <= 0.0 {
            return Err(Error::InvalidSiteSpace("state must be positive definite".into()));
        }
        // <E_ij, E_kl> = delta_ik rho_lj
        let gram = CMatrix::from_fn(n, n, |a, b| {
            let (i, j, k, l) = (a / dim, a % dim, b / dim, b % dim);
            if i == k {
                rho[(l, j)]
            } else {
                dense::ZERO
            }
        });
        Self::build(dim, false, rho, generator, gram)
    }

    /// Quantum site with a Lindblad generator, see [`lindblad_superoperator`].
    pub fn lindblad(rho: Option<CMatrix>, h: &CMatrix, jumps: &[(f64, CMatrix)]) -> Result<Self> {
        let dim = square(h, "hamiltonian")?;
        Self::quantum(rho, lindblad_superoperator(&[dim], h, jumps))
    }

    fn build(dim: usize, classical: bool, weight: CMatrix, generator: CMatrix, gram: CMatrix) -> Result<Self> {
        let one = identity_natural(&[dim], classical);
        let residual = (&generator * &one).norm();
        if residual > GENERATOR_TOLERANCE * dense::op_norm(&generator).max(1.0) {
            return Err(Error::IdentityNotAnnihilated(residual));
        }
        let basis = orthonormal_basis(&gram, &one);
        let coords = basis.adjoint() * &gram * &generator * &basis;
        Ok(WeightedSite { dim, classical, weight, generator, gram, basis, coords })
    }

    /// Hilbert space dimension, or number of states.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the observable space.
    pub fn observable_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_classical(&self) -> bool {
        self.classical
    }

    pub fn weight(&self) -> &CMatrix {
        &self.weight
    }

    pub fn generator(&self) -> &CMatrix {
        &self.generator
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Inverse of [`Self::basis`], i.e. natural coefficients to orthonormal coordinates.
    pub fn basis_inverse(&self) -> CMatrix {
        self.basis.adjoint() * &self.gram
    }

    /// `l_x` in orthonormal coordinates.
    pub fn coordinates(&self) -> &CMatrix {
        &self.coords
    }

    /// Smallest eigenvalue of the reference state; `1/c` in the norm comparison.
    pub fn min_weight(&self) -> f64 {
        dense::hermitian_eigen(&self.weight).0[0]
    }

    /// `-l_x` in orthonormal coordinates, with ground vector `1`.
    pub fn site_space(&self, index: usize) -> Result<SiteSpace> {
        let asymmetry = (&self.coords - self.coords.adjoint()).norm();
        if asymmetry > GENERATOR_TOLERANCE * self.coords.norm().max(1.0) {
            return Err(Error::NotSelfAdjointGenerator { site: index, asymmetry });
        }
        let h = -dense::hermitian_part(&self.coords);
        let mut e0 = CVector::zeros(h.nrows());
        e0[0] = dense::ONE;
        SiteSpace::with_ground(h, e0)
    }
}

fn square(m: &CMatrix, what: &str) -> Result<usize> {
    if !m.is_square() || m.nrows() < 2 {
        return Err(Error::DimensionMismatch(format!("{what} must be square with dimension >= 2")));
    }
    Ok(m.nrows())
}

/// Gram-Schmidt in the inner product `u* G v`, starting from `first` and completing with
/// natural unit vectors.
fn orthonormal_basis(gram: &CMatrix, first: &CVector) -> CMatrix {
    let n = gram.nrows();
    let ip = |u: &CVector, v: &CVector| (u.adjoint() * gram * v)[(0, 0)];
    let mut out: Vec<CVector> = Vec::with_capacity(n);
    let candidates = std::iter::once(first.clone()).chain((0..n).map(|k| {
        let mut e = CVector::zeros(n);
        e[k] = dense::ONE;
        e
    }));
    for cand in candidates {
        if out.len() == n {
            break;
        }
        let mut v = cand;
        // two passes keep the basis orthonormal to rounding
        for _ in 0..2 {
            for b in &out {
                let p = ip(b, &v);
                v -= b * p;
            }
        }
        let norm = ip(&v, &v).re.sqrt();
        if norm > 1e-8 {
            out.push(v / dense::r(norm));
        }
    }
    CMatrix::from_columns(&out)
}

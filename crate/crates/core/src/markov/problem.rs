use std::sync::Arc;

use crate::dense::{self, CMatrix};
use crate::error::{Error, Result};
use crate::kamflow::{FlowConfig, FlowMode, DEFAULT_NMAX, DEFAULT_VTOL};
use crate::lattice::{SiteSet, Volume};
use crate::opalgebra::{LocalOperator, Space};

use super::natural::{embed, identity_natural, lindblad_superoperator};
use super::site::{WeightedSite, GENERATOR_TOLERANCE};

/// One term of the perturbation `L'`, acting on the natural observable basis of `sites`.
#[derive(Clone, Debug)]
pub struct MarkovTerm {
    /// Strictly ascending site indices; the generator is ordered accordingly.
    pub sites: Vec<usize>,
    pub generator: CMatrix,
}

impl MarkovTerm {
    /// Rate table (classical) or natural superoperator (quantum) on `sites`.
    pub fn new(sites: Vec<usize>, generator: CMatrix) -> Result<Self> {
        if sites.is_empty() || sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::schema("sites", "must be nonempty and strictly ascending"));
        }
        Ok(MarkovTerm { sites, generator })
    }

    /// Lindblad term with Hilbert dimensions `dims` on `sites`.
    pub fn lindblad(sites: Vec<usize>, dims: &[usize], h: &CMatrix, jumps: &[(f64, CMatrix)]) -> Result<Self> {
        Self::new(sites, lindblad_superoperator(dims, h, jumps))
    }
}

/// `L = sum_x l_x + L'` on a finite volume.
#[derive(Clone, Debug)]
pub struct MarkovProblem {
    volume: Volume,
    sites: Vec<WeightedSite>,
    terms: Vec<MarkovTerm>,
    pub kappa: f64,
    pub kappa_prime: f64,
    pub vtol: f64,
    pub nmax: usize,
    pub mode: FlowMode,
}

impl MarkovProblem {
    /// A single site is broadcast over the volume.
    pub fn new(
        volume: Volume,
        mut sites: Vec<WeightedSite>,
        terms: Vec<MarkovTerm>,
        kappa: f64,
        kappa_prime: f64,
    ) -> Result<Self> {
        let n = volume.num_sites();
        if sites.len() == 1 && n > 1 {
            sites = vec![sites[0].clone(); n];
        }
        if sites.len() != n {
            return Err(Error::DimensionMismatch(format!("{} sites for a volume of {n}", sites.len())));
        }
        let classical = sites[0].is_classical();
        if sites.iter().any(|s| s.is_classical() != classical) {
            return Err(Error::schema("sites", "classical and quantum sites cannot be mixed"));
        }
        let problem = MarkovProblem {
            volume,
            sites,
            terms,
            kappa,
            kappa_prime,
            vtol: DEFAULT_VTOL,
            nmax: DEFAULT_NMAX,
            mode: FlowMode::Dense,
        };
        for term in &problem.terms {
            problem.check_term(term)?;
        }
        Ok(problem)
    }

    fn check_term(&self, term: &MarkovTerm) -> Result<()> {
        if let Some(&x) = term.sites.iter().find(|&&x| x >= self.volume.num_sites()) {
            return Err(Error::InvalidVolume(format!("term site {x} outside volume")));
        }
        let n: usize = term.sites.iter().map(|&x| self.sites[x].observable_dim()).product();
        if term.generator.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "term on {:?} is {:?}, expected {n}x{n}",
                term.sites,
                term.generator.shape()
            )));
        }
        let dims: Vec<usize> = term.sites.iter().map(|&x| self.sites[x].dim()).collect();
        let one = identity_natural(&dims, self.is_classical());
        let residual = (&term.generator * one).norm();
        if residual > GENERATOR_TOLERANCE * dense::op_norm(&term.generator).max(1.0) {
            return Err(Error::IdentityNotAnnihilated(residual));
        }
        Ok(())
    }

    pub fn volume(&self) -> &Volume {
        &self.volume
    }

    pub fn sites(&self) -> &[WeightedSite] {
        &self.sites
    }

    pub fn terms(&self) -> &[MarkovTerm] {
        &self.terms
    }

    pub fn is_classical(&self) -> bool {
        self.sites[0].is_classical()
    }

    /// Hilbert dimensions (quantum) or numbers of states (classical).
    pub fn dims(&self) -> Vec<usize> {
        self.sites.iter().map(WeightedSite::dim).collect()
    }

    pub fn observable_dims(&self) -> Vec<usize> {
        self.sites.iter().map(WeightedSite::observable_dim).collect()
    }

    fn kron_over(&self, sites: &[usize], f: impl Fn(&WeightedSite) -> CMatrix) -> CMatrix {
        sites.iter().fold(dense::identity(1), |acc, &x| dense::kron(&acc, &f(&self.sites[x])))
    }

    /// Orthonormal product basis of the full observable space, in natural coefficients.
    pub fn basis(&self) -> CMatrix {
        self.kron_over(&(0..self.sites.len()).collect::<Vec<_>>(), |s| s.basis().clone())
    }

    pub fn basis_inverse(&self) -> CMatrix {
        self.kron_over(&(0..self.sites.len()).collect::<Vec<_>>(), WeightedSite::basis_inverse)
    }

    /// The full reference state `⊗ rho_x` (diagonal for classical problems).
    pub fn reference_state(&self) -> CMatrix {
        self.kron_over(&(0..self.sites.len()).collect::<Vec<_>>(), |s| s.weight().clone())
    }

    /// `L` on the full natural basis.
    pub fn generator_natural(&self) -> CMatrix {
        let dims = self.observable_dims();
        let mut total = CMatrix::zeros(dims.iter().product(), dims.iter().product());
        for (x, s) in self.sites.iter().enumerate() {
            total += embed(&dims, &[x], s.generator());
        }
        for t in &self.terms {
            total += embed(&dims, &t.sites, &t.generator);
        }
        total
    }

    /// Orthonormal coordinates of `-L'`, the perturbation handed to the flow.
    pub fn perturbation(&self, space: &Arc<Space>) -> Result<LocalOperator> {
        let mut out = LocalOperator::zero(space);
        for t in &self.terms {
            let b = self.kron_over(&t.sites, |s| s.basis().clone());
            let bi = self.kron_over(&t.sites, WeightedSite::basis_inverse);
            let coords = -(bi * &t.generator * b);
            let support: SiteSet = t.sites.iter().copied().collect();
            out = &out + &LocalOperator::decompose(space, support, &coords)?;
        }
        Ok(out)
    }

    /// The flow problem for `-L = -L_0 - L'` in orthonormal coordinates, where `-L_0` plays
    /// the unperturbed Hamiltonian and the constant observable `1` the reference state.
    pub fn embed_weighted(&self) -> Result<FlowConfig> {
        let spaces = self.sites.iter().enumerate().map(|(x, s)| s.site_space(x)).collect::<Result<Vec<_>>>()?;
        let space = Space::new(self.volume.clone(), spaces)?;
        let h_prime = self.perturbation(&space)?;
        Ok(FlowConfig::new(h_prime, self.kappa, self.kappa_prime)?
            .with_vtol(self.vtol)
            .with_nmax(self.nmax)
            .with_mode(self.mode))
    }
}

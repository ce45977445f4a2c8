use std::sync::Arc;

use num_complex::Complex64;

use crate::dense::{self, CMatrix, CVector, ONE, ZERO};
use crate::error::{Error, Result};
use crate::lattice::{SiteSet, Volume};

use super::operator::LocalOperator;
use super::sector::SectorIndex;

/// Blocks whose operator norm falls below this are dropped.
pub const DEFAULT_DROP_THRESHOLD: f64 = 1e-14;

/// Single-site space together with its unperturbed generator.
///
/// `frame` is unitary with first column equal to the ground vector. All
/// sector blocks are stored with respect to this frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SiteSpace {
    h: CMatrix,
    frame: CMatrix,
    frame_is_identity: bool,
    gap: f64,
}

impl SiteSpace {
    /// Infers the ground vector from the kernel of `h`.
    pub fn new(h: CMatrix) -> Result<Self> {
        let dim = check_shape(&h)?;
        let scale = dense::op_norm(&h).max(1.0);
        let omega = if dense::is_hermitian(&h, 1e-12 * scale) {
            let (vals, vecs) = dense::hermitian_eigen(&h);
            let k = (0..dim)
                .min_by(|&a, &b| vals[a].abs().total_cmp(&vals[b].abs()))
                .unwrap();
            if vals[k].abs() > 1e-10 * scale {
                return Err(Error::InvalidSiteSpace(format!(
                    "ground energy must be zero, closest eigenvalue is {:.3e}",
                    vals[k]
                )));
            }
            vecs.column(k).into_owned()
        } else {
            let (v, s0, _) = dense::null_vector(&h);
            if s0 > 1e-10 * scale {
                return Err(Error::InvalidSiteSpace(format!(
                    "h has no kernel (smallest singular value {s0:.3e})"
                )));
            }
            v
        };
        Self::with_ground(h, omega)
    }

    /// Uses `omega` as the ground vector; it must be a right and left null vector of `h`.
    pub fn with_ground(h: CMatrix, omega: CVector) -> Result<Self> {
        let dim = check_shape(&h)?;
        if omega.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "ground vector has length {}, expected {dim}",
                omega.len()
            )));
        }
        let scale = dense::op_norm(&h).max(1.0);
        let omega = canonical_phase(&omega.normalize());
        let right = (&h * &omega).norm();
        let left = (omega.adjoint() * &h).norm();
        if right > 1e-10 * scale || left > 1e-10 * scale {
            return Err(Error::InvalidSiteSpace(format!(
                "ground vector is not annihilated from both sides (residuals {right:.3e}, {left:.3e})"
            )));
        }
        let mut frame = complete_frame(&omega);
        // diagonalize the excited block when that is possible unitarily
        let excited = frame.columns(1, dim - 1).into_owned();
        let restricted = excited.adjoint() * &h * &excited;
        let off = off_diagonal_norm(&restricted);
        if off > 0.0 && dense::is_hermitian(&restricted, 1e-12 * scale) {
            let (_, vecs) = dense::hermitian_eigen(&restricted);
            let rotated = &excited * vecs;
            frame.columns_mut(1, dim - 1).copy_from(&rotated);
        }
        let frame_is_identity = frame == dense::identity(dim);
        let h_adapted = if frame_is_identity { h.clone() } else { frame.adjoint() * &h * &frame };
        let block = h_adapted.view((1, 1), (dim - 1, dim - 1)).into_owned();
        let gap = dense::eigenvalues(&block).iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if gap <= 1e-12 * scale {
            return Err(Error::GapClosed(format!(
                "zero is not a simple isolated eigenvalue of the single-site generator (gap {gap:.3e})"
            )));
        }
        Ok(SiteSpace { h, frame, frame_is_identity, gap })
    }

    /// `diag(0, g)` with ground vector `e0`.
    pub fn qubit(g: f64) -> Self {
        Self::diagonal(&[0.0, g]).expect("valid qubit")
    }

    /// `diag(0, e1, e2, ...)` with ground vector `e0`.
    pub fn diagonal(energies: &[f64]) -> Result<Self> {
        let diag: Vec<Complex64> = energies.iter().map(|&e| dense::r(e)).collect();
        let h = CMatrix::from_diagonal(&CVector::from_vec(diag));
        let mut omega = CVector::zeros(energies.len());
        if !energies.is_empty() {
            omega[0] = ONE;
        }
        Self::with_ground(h, omega)
    }

    /// Lowers the recorded gap, e.g. to a uniform bound shared by all sites.
    pub fn with_gap(mut self, g: f64) -> Result<Self> {
        if !(g > 0.0) || g > self.gap * (1.0 + 1e-12) {
            return Err(Error::InvalidSiteSpace(format!(
                "declared gap {g} must lie in (0, {}]",
                self.gap
            )));
        }
        self.gap = g;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn ground(&self) -> CVector {
        self.frame.column(0).into_owned()
    }

    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    pub fn frame_is_identity(&self) -> bool {
        self.frame_is_identity
    }

    pub fn projector(&self) -> CMatrix {
        let o = self.ground();
        &o * o.adjoint()
    }

    pub fn complement(&self) -> CMatrix {
        dense::identity(self.dim()) - self.projector()
    }

    pub fn to_adapted(&self, m: &CMatrix) -> CMatrix {
        if self.frame_is_identity {
            m.clone()
        } else {
            self.frame.adjoint() * m * &self.frame
        }
    }

    pub fn from_adapted(&self, m: &CMatrix) -> CMatrix {
        if self.frame_is_identity {
            m.clone()
        } else {
            &self.frame * m * self.frame.adjoint()
        }
    }

    /// Splits a single-site matrix into scalar, raising, lowering and neutral parts.
    pub fn site_split(&self, m: &CMatrix) -> SiteSplit {
        let p = self.projector();
        let q = self.complement();
        let o = self.ground();
        let c = (o.adjoint() * m * &o)[(0, 0)];
        SiteSplit {
            c,
            plus: &q * m * &p,
            minus: &p * m * &q,
            neutral: &q * m * &q - &q * c,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SiteSplit {
    pub c: Complex64,
    pub plus: CMatrix,
    pub minus: CMatrix,
    pub neutral: CMatrix,
}

fn check_shape(h: &CMatrix) -> Result<usize> {
    if !h.is_square() || h.nrows() < 2 {
        return Err(Error::InvalidSiteSpace(format!(
            "single-site matrix must be square with dimension >= 2, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidSiteSpace("single-site matrix has non-finite entries".into()));
    }
    Ok(h.nrows())
}

fn canonical_phase(v: &CVector) -> CVector {
    let k = (0..v.len()).max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap();
    let phase = v[k] / v[k].norm();
    let mut out = v.map(|z| z / phase);
    out[k] = dense::r(out[k].norm());
    out
}

/// Gram-Schmidt of the standard basis against `omega`; exact when `omega = e0`.
fn complete_frame(omega: &CVector) -> CMatrix {
    let dim = omega.len();
    let mut cols: Vec<CVector> = vec![omega.clone()];
    for k in 0..dim {
        if cols.len() == dim {
            break;
        }
        let mut e = CVector::zeros(dim);
        e[k] = ONE;
        for q in &cols {
            let overlap = q.dotc(&e);
            if overlap != ZERO {
                e -= q * overlap;
            }
        }
        let n = e.norm();
        if n > 1e-8 {
            e /= dense::r(n);
            cols.push(e);
        }
    }
    CMatrix::from_columns(&cols)
}

fn off_diagonal_norm(m: &CMatrix) -> f64 {
    let mut s = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                s += m[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// A volume with a site space attached to every site.
#[derive(Clone, Debug)]
pub struct Space {
    volume: Volume,
    sites: Vec<SiteSpace>,
    drop_threshold: f64,
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        self.volume == other.volume
            && self.sites == other.sites
            && self.drop_threshold == other.drop_threshold
    }
}

impl Space {
    /// A single site space is broadcast to every site.
    pub fn new(volume: Volume, mut sites: Vec<SiteSpace>) -> Result<Arc<Self>> {
        let n = volume.num_sites();
        if sites.len() == 1 && n > 1 {
            sites = vec![sites[0].clone(); n];
        }
        if sites.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} site spaces for a volume of {n} sites",
                sites.len()
            )));
        }
        Ok(Arc::new(Space { volume, sites, drop_threshold: DEFAULT_DROP_THRESHOLD }))
    }

    pub fn uniform(volume: Volume, site: SiteSpace) -> Arc<Self> {
        let n = volume.num_sites();
        Arc::new(Space { volume, sites: vec![site; n], drop_threshold: DEFAULT_DROP_THRESHOLD })
    }

    /// Chain of `n` qubits `diag(0, g)`.
    pub fn qubit_chain(n: usize, g: f64) -> Result<Arc<Self>> {
        Ok(Self::uniform(Volume::chain(n)?, SiteSpace::qubit(g)))
    }

    pub fn with_drop_threshold(self: &Arc<Self>, threshold: f64) -> Arc<Self> {
        let mut s = (**self).clone();
        s.drop_threshold = threshold;
        Arc::new(s)
    }

    pub fn volume(&self) -> &Volume {
        &self.volume
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn site(&self, x: usize) -> &SiteSpace {
        &self.sites[x]
    }

    pub fn sites(&self) -> &[SiteSpace] {
        &self.sites
    }

    pub fn dim(&self, x: usize) -> usize {
        self.sites[x].dim()
    }

    pub fn drop_threshold(&self) -> f64 {
        self.drop_threshold
    }

    pub fn all_sites(&self) -> SiteSet {
        self.volume.all_sites()
    }

    /// Product dimension over `s`.
    pub fn dim_of(&self, s: SiteSet) -> usize {
        s.iter().map(|x| self.dim(x)).product()
    }

    pub fn full_dim(&self) -> usize {
        self.dim_of(self.all_sites())
    }

    /// Smallest single-site gap.
    pub fn gap(&self) -> f64 {
        self.sites.iter().map(SiteSpace::gap).fold(f64::INFINITY, f64::min)
    }

    pub fn frames_are_identity(&self) -> bool {
        self.sites.iter().all(SiteSpace::frame_is_identity)
    }

    /// Kronecker product of the site frames over `s`, lowest site most significant.
    pub fn frame(&self, s: SiteSet) -> CMatrix {
        s.iter().fold(dense::identity(1), |acc, x| dense::kron(&acc, self.sites[x].frame()))
    }

    pub fn to_adapted(&self, s: SiteSet, m: &CMatrix) -> CMatrix {
        if s.iter().all(|x| self.sites[x].frame_is_identity()) {
            return m.clone();
        }
        let w = self.frame(s);
        w.adjoint() * m * w
    }

    pub fn from_adapted(&self, s: SiteSet, m: &CMatrix) -> CMatrix {
        if s.iter().all(|x| self.sites[x].frame_is_identity()) {
            return m.clone();
        }
        let w = self.frame(s);
        &w * m * w.adjoint()
    }

    /// Reference product state on `s` in the computational basis.
    pub fn ground(&self, s: SiteSet) -> CVector {
        let mut v = CMatrix::from_element(1, 1, ONE);
        for x in s.iter() {
            let g = self.sites[x].ground();
            v = dense::kron(&v, &CMatrix::from_column_slice(g.len(), 1, g.as_slice()));
        }
        v.column(0).into_owned()
    }

    /// `H0 = sum_x h_x` as a sector-decomposed operator.
    pub fn h0(self: &Arc<Self>) -> LocalOperator {
        let mut op = LocalOperator::zero(self);
        for x in 0..self.num_sites() {
            let site = &self.sites[x];
            let d = site.dim();
            let ha = site.to_adapted(site.h());
            let sx = SiteSet::singleton(x);
            let core = ha.view((1, 1), (d - 1, d - 1)).into_owned();
            op.insert_block(SectorIndex::new(SiteSet::EMPTY, SiteSet::EMPTY, sx), core);
        }
        op
    }
}

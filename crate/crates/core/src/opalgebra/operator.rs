use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::dense::{self, CMatrix, ZERO};
use crate::error::{Error, Result};
use crate::lattice::SiteSet;

use super::sector::SectorIndex;
use super::site::Space;

/// Sector-decomposed operator `c * 1 + sum_S O_S`.
///
/// Each block is stored as its core: the sub-matrix with rows indexed by the
/// excited levels of `plus ∪ neutral` and columns by the excited levels of
/// `minus ∪ neutral`, in the adapted frame. The full block on the support is
/// the core embedded through the corresponding matrix units.
#[derive(Clone, Debug)]
pub struct LocalOperator {
    space: Arc<Space>,
    scalar: Complex64,
    blocks: BTreeMap<SectorIndex, CMatrix>,
    dropped: f64,
}

/// Output of [`LocalOperator::classify`].
#[derive(Clone, Debug)]
pub struct Classified {
    pub d: Complex64,
    pub f: LocalOperator,
    pub v_plus: LocalOperator,
    pub v_minus: LocalOperator,
}

impl Classified {
    pub fn v(&self) -> LocalOperator {
        &self.v_plus + &self.v_minus
    }
}

impl PartialEq for LocalOperator {
    fn eq(&self, other: &Self) -> bool {
        self.same_space(other) && self.scalar == other.scalar && self.blocks == other.blocks
    }
}

pub(crate) struct Strides {
    pub sites: Vec<usize>,
    pub dims: Vec<usize>,
    pub strides: Vec<usize>,
    pub total: usize,
}

impl Strides {
    pub fn new(space: &Space, t: SiteSet) -> Self {
        let sites = t.to_vec();
        let dims: Vec<usize> = sites.iter().map(|&x| space.dim(x)).collect();
        let mut strides = vec![1; sites.len()];
        for k in (0..sites.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let total = dims.iter().product();
        Strides { sites, dims, strides, total }
    }

    fn position(&self, x: usize) -> usize {
        self.sites.binary_search(&x).expect("site in support")
    }
}

/// Shape of the stored core of `sector`.
pub fn core_shape(space: &Space, sector: &SectorIndex) -> (usize, usize) {
    let rows = sector.row_sites().iter().map(|x| space.dim(x) - 1).product();
    let cols = sector.col_sites().iter().map(|x| space.dim(x) - 1).product();
    (rows, cols)
}

/// Per-site matrix unit `(site, row level, col level)` of a core entry, ascending in site.
pub(crate) fn entry_units(
    space: &Space,
    sector: &SectorIndex,
    i: usize,
    j: usize,
    out: &mut Vec<(usize, usize, usize)>,
) {
    out.clear();
    let support = sector.support().to_vec();
    let mut rdig = vec![0usize; support.len()];
    let mut cdig = vec![0usize; support.len()];
    let (mut i, mut j) = (i, j);
    for (k, &x) in support.iter().enumerate().rev() {
        let radix = space.dim(x) - 1;
        if sector.row_sites().contains(x) {
            rdig[k] = i % radix + 1;
            i /= radix;
        }
        if sector.col_sites().contains(x) {
            cdig[k] = j % radix + 1;
            j /= radix;
        }
    }
    for (k, &x) in support.iter().enumerate() {
        out.push((x, rdig[k], cdig[k]));
    }
}

/// Sector and core position of a product of matrix units with no `(0, 0)` factors.
pub(crate) fn units_to_entry(space: &Space, units: &[(usize, usize, usize)]) -> (SectorIndex, usize, usize) {
    let (mut plus, mut minus, mut neutral) = (SiteSet::EMPTY, SiteSet::EMPTY, SiteSet::EMPTY);
    let (mut i, mut j) = (0usize, 0usize);
    for &(x, a, b) in units {
        let radix = space.dim(x) - 1;
        match (a, b) {
            (0, 0) => unreachable!("identity factor in unit list"),
            (a, 0) => {
                plus.insert(x);
                i = i * radix + (a - 1);
            }
            (0, b) => {
                minus.insert(x);
                j = j * radix + (b - 1);
            }
            (a, b) => {
                neutral.insert(x);
                i = i * radix + (a - 1);
                j = j * radix + (b - 1);
            }
        }
    }
    (SectorIndex { plus, minus, neutral }, i, j)
}

impl LocalOperator {
    pub fn zero(space: &Arc<Space>) -> Self {
        LocalOperator { space: space.clone(), scalar: ZERO, blocks: BTreeMap::new(), dropped: 0.0 }
    }

    pub fn scalar_op(space: &Arc<Space>, c: Complex64) -> Self {
        let mut op = Self::zero(space);
        op.scalar = c;
        op
    }

    pub fn identity(space: &Arc<Space>) -> Self {
        Self::scalar_op(space, dense::ONE)
    }

    /// Single sector with the given core (adapted frame).
    pub fn from_core(space: &Arc<Space>, sector: SectorIndex, core: CMatrix) -> Result<Self> {
        let shape = core_shape(space, &sector);
        if !space.volume().contains(sector.support()) {
            return Err(Error::SupportNotContained {
                support: sector.support().to_vec(),
                target: space.all_sites().to_vec(),
            });
        }
        if core.shape() != shape {
            return Err(Error::DimensionMismatch(format!(
                "core for {sector:?} must be {}x{}, got {}x{}",
                shape.0,
                shape.1,
                core.nrows(),
                core.ncols()
            )));
        }
        let mut op = Self::zero(space);
        op.insert_block(sector, core);
        op.prune();
        Ok(op)
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn scalar(&self) -> Complex64 {
        self.scalar
    }

    pub fn set_scalar(&mut self, c: Complex64) {
        self.scalar = c;
    }

    pub fn blocks(&self) -> &BTreeMap<SectorIndex, CMatrix> {
        &self.blocks
    }

    pub fn core(&self, sector: &SectorIndex) -> Option<&CMatrix> {
        self.blocks.get(sector)
    }

    pub fn num_sectors(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_zero(&self) -> bool {
        self.scalar == ZERO && self.blocks.is_empty()
    }

    /// Norm mass removed by the drop threshold so far.
    pub fn dropped(&self) -> f64 {
        self.dropped
    }

    pub fn add_dropped(&mut self, amount: f64) {
        self.dropped += amount;
    }

    /// Union of all sector supports.
    pub fn support(&self) -> SiteSet {
        self.blocks.keys().fold(SiteSet::EMPTY, |acc, s| acc.union(s.support()))
    }

    pub fn same_space(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.space, &other.space) || *self.space == *other.space
    }

    fn assert_same_space(&self, other: &Self) {
        assert!(self.same_space(other), "operators live on different spaces");
    }

    /// Adds `core` into the block of `sector` without pruning.
    pub(crate) fn insert_block(&mut self, sector: SectorIndex, core: CMatrix) {
        if sector.support().is_empty() {
            self.scalar += core[(0, 0)];
            return;
        }
        match self.blocks.entry(sector) {
            Entry::Vacant(e) => {
                e.insert(core);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += core;
            }
        }
    }

    /// Deletes blocks with operator norm below the drop threshold.
    pub fn prune(&mut self) {
        let threshold = self.space.drop_threshold();
        let mut dropped = 0.0;
        self.blocks.retain(|_, core| {
            let n = dense::op_norm(core);
            if n < threshold {
                dropped += n;
                false
            } else {
                true
            }
        });
        self.dropped += dropped;
    }

    /// Decomposes a matrix on the product space of `t`, computational basis.
    pub fn decompose(space: &Arc<Space>, t: SiteSet, m: &CMatrix) -> Result<Self> {
        Self::check_support(space, t)?;
        Self::decompose_adapted(space, t, &space.to_adapted(t, m))
    }

    /// Decomposes a matrix on the product space of `t`, adapted frame.
    pub fn decompose_adapted(space: &Arc<Space>, t: SiteSet, m: &CMatrix) -> Result<Self> {
        let mut op = Self::decompose_adapted_unpruned(space, t, m)?;
        op.prune();
        Ok(op)
    }

    /// As [`LocalOperator::decompose_adapted`] but keeps blocks below the drop threshold,
    /// so that near-cancelling sums can be pruned only once.
    pub fn decompose_adapted_unpruned(space: &Arc<Space>, t: SiteSet, m: &CMatrix) -> Result<Self> {
        Self::check_support(space, t)?;
        let st = Strides::new(space, t);
        let n = st.total;
        if m.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "matrix on {t:?} must be {n}x{n}, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let mut w = m.clone();
        // subtract the ground coefficient from the excited diagonal, site by site
        for k in 0..st.sites.len() {
            let (stride, d) = (st.strides[k], st.dims[k]);
            for r in 0..n {
                let a = (r / stride) % d;
                if a == 0 {
                    continue;
                }
                let r0 = r - a * stride;
                for c in 0..n {
                    if (c / stride) % d == a {
                        let v = w[(r0, c - a * stride)];
                        w[(r, c)] -= v;
                    }
                }
            }
        }
        let mut op = Self::zero(space);
        let mut cache: BTreeMap<SectorIndex, CMatrix> = BTreeMap::new();
        let mut units = Vec::with_capacity(st.sites.len());
        for c in 0..n {
            for r in 0..n {
                let v = w[(r, c)];
                if v == ZERO {
                    continue;
                }
                units.clear();
                for k in 0..st.sites.len() {
                    let a = (r / st.strides[k]) % st.dims[k];
                    let b = (c / st.strides[k]) % st.dims[k];
                    if a != 0 || b != 0 {
                        units.push((st.sites[k], a, b));
                    }
                }
                if units.is_empty() {
                    op.scalar += v;
                    continue;
                }
                let (sector, i, j) = units_to_entry(space, &units);
                let core = cache.entry(sector).or_insert_with(|| {
                    let (rows, cols) = core_shape(space, &sector);
                    CMatrix::zeros(rows, cols)
                });
                core[(i, j)] += v;
            }
        }
        op.blocks = cache;
        Ok(op)
    }

    fn check_support(space: &Space, t: SiteSet) -> Result<()> {
        if !space.volume().contains(t) {
            return Err(Error::SupportNotContained {
                support: t.to_vec(),
                target: space.all_sites().to_vec(),
            });
        }
        Ok(())
    }

    /// Dense matrix on the product space of `t`, adapted frame.
    pub fn assemble_adapted(&self, t: SiteSet) -> Result<CMatrix> {
        let support = self.support();
        if !support.is_subset(t) || !self.space.volume().contains(t) {
            return Err(Error::SupportNotContained { support: support.to_vec(), target: t.to_vec() });
        }
        let st = Strides::new(&self.space, t);
        let n = st.total;
        let mut out = CMatrix::identity(n, n) * self.scalar;
        let mut units = Vec::new();
        for (sector, core) in &self.blocks {
            let offsets = identity_offsets(&st, t.difference(sector.support()));
            for j in 0..core.ncols() {
                for i in 0..core.nrows() {
                    let v = core[(i, j)];
                    if v == ZERO {
                        continue;
                    }
                    entry_units(&self.space, sector, i, j, &mut units);
                    let (mut r0, mut c0) = (0, 0);
                    for &(x, a, b) in &units {
                        let s = st.strides[st.position(x)];
                        r0 += a * s;
                        c0 += b * s;
                    }
                    for &off in &offsets {
                        out[(r0 + off, c0 + off)] += v;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Dense matrix on the product space of `t`, computational basis.
    pub fn assemble(&self, t: SiteSet) -> Result<CMatrix> {
        Ok(self.space.from_adapted(t, &self.assemble_adapted(t)?))
    }

    /// Dense matrix on the full volume, computational basis.
    pub fn dense(&self) -> CMatrix {
        self.assemble(self.space.all_sites()).expect("full volume contains every support")
    }

    /// Dense matrix on the full volume, adapted frame.
    pub fn dense_adapted(&self) -> CMatrix {
        self.assemble_adapted(self.space.all_sites()).expect("full volume contains every support")
    }

    /// Full block of one sector on its own support, computational basis.
    pub fn block(&self, sector: &SectorIndex) -> Option<CMatrix> {
        let core = self.blocks.get(sector)?;
        let mut single = Self::zero(&self.space);
        single.blocks.insert(*sector, core.clone());
        single.assemble(sector.support()).ok()
    }

    /// Splits into scalar, frustration-free and non-diagonal parts.
    pub fn classify(&self) -> Classified {
        let mut f = Self::zero(&self.space);
        let mut v_plus = Self::zero(&self.space);
        let mut v_minus = Self::zero(&self.space);
        for (sector, core) in &self.blocks {
            let target = if sector.is_pure_plus() {
                &mut v_plus
            } else if sector.is_pure_minus() {
                &mut v_minus
            } else {
                &mut f
            };
            target.blocks.insert(*sector, core.clone());
        }
        Classified { d: self.scalar, f, v_plus, v_minus }
    }

    /// Keeps only the sectors accepted by `keep`; the scalar is dropped.
    pub fn filter(&self, keep: impl Fn(&SectorIndex) -> bool) -> Self {
        let mut out = Self::zero(&self.space);
        out.blocks = self.blocks.iter().filter(|(s, _)| keep(s)).map(|(s, c)| (*s, c.clone())).collect();
        out
    }

    /// Pure raising part.
    pub fn v_plus(&self) -> Self {
        self.filter(SectorIndex::is_pure_plus)
    }

    /// Pure lowering part.
    pub fn v_minus(&self) -> Self {
        self.filter(SectorIndex::is_pure_minus)
    }

    pub fn v_part(&self) -> Self {
        self.filter(|s| s.is_pure_plus() || s.is_pure_minus())
    }

    pub fn f_part(&self) -> Self {
        self.filter(|s| !s.is_pure_plus() && !s.is_pure_minus())
    }

    pub fn is_frustration_free(&self) -> bool {
        self.scalar == ZERO && self.blocks.keys().all(|s| !s.is_pure_plus() && !s.is_pure_minus())
    }

    pub fn is_non_diagonal(&self) -> bool {
        self.scalar == ZERO && self.blocks.keys().all(|s| s.is_pure_plus() || s.is_pure_minus())
    }

    pub fn adjoint(&self) -> Self {
        LocalOperator {
            space: self.space.clone(),
            scalar: self.scalar.conj(),
            blocks: self.blocks.iter().map(|(s, c)| (s.adjoint(), c.adjoint())).collect(),
            dropped: self.dropped,
        }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        if z == ZERO {
            return Self::zero(&self.space);
        }
        LocalOperator {
            space: self.space.clone(),
            scalar: self.scalar * z,
            blocks: self.blocks.iter().map(|(s, c)| (*s, c * z)).collect(),
            dropped: self.dropped * z.norm(),
        }
    }

    /// `self + z * other`, pruned.
    pub fn axpy(&self, z: Complex64, other: &Self) -> Self {
        self.assert_same_space(other);
        let mut out = self.clone();
        out.scalar += z * other.scalar;
        for (s, c) in &other.blocks {
            out.insert_block(*s, c * z);
        }
        out.dropped += z.norm() * other.dropped;
        out.prune();
        out
    }

    /// Largest entry-wise difference of the dense forms, adapted frame.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = self - other;
        let mut m = d.scalar.norm();
        for core in d.blocks.values() {
            for z in core.iter() {
                m = m.max(z.norm());
            }
        }
        m
    }
}

/// Offsets contributed by every level assignment on the identity sites `j`.
fn identity_offsets(st: &Strides, j: SiteSet) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for x in j.iter() {
        let k = st.position(x);
        let mut next = Vec::with_capacity(offsets.len() * st.dims[k]);
        for &o in &offsets {
            for a in 0..st.dims[k] {
                next.push(o + a * st.strides[k]);
            }
        }
        offsets = next;
    }
    offsets
}

impl Add for &LocalOperator {
    type Output = LocalOperator;
    fn add(self, rhs: &LocalOperator) -> LocalOperator {
        self.axpy(dense::ONE, rhs)
    }
}

impl Sub for &LocalOperator {
    type Output = LocalOperator;
    fn sub(self, rhs: &LocalOperator) -> LocalOperator {
        self.axpy(-dense::ONE, rhs)
    }
}

impl Neg for &LocalOperator {
    type Output = LocalOperator;
    fn neg(self) -> LocalOperator {
        self.scale(-dense::ONE)
    }
}

impl Mul<Complex64> for &LocalOperator {
    type Output = LocalOperator;
    fn mul(self, z: Complex64) -> LocalOperator {
        self.scale(z)
    }
}

impl Mul<f64> for &LocalOperator {
    type Output = LocalOperator;
    fn mul(self, z: f64) -> LocalOperator {
        self.scale(dense::r(z))
    }
}

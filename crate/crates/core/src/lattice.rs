//! Finite boxes in `Z^ν` with open boundaries, site sets, and the Steiner-type
//! weight `w(S) = |S| + |S|_c` that drives every locality norm.
//!
//! `|S|_c` is the minimal size of a nearest-neighbour connected set containing
//! `S`. Clamping coordinates into the bounding box of `S` maps connected sets
//! onto connected sets without growing them, so the search is restricted to that
//! box and solved exactly with Dreyfus–Wagner dynamic programming.

use std::collections::HashMap;
use std::fmt;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest volume representable by the bitmask-backed [`SiteSet`].
pub const MAX_SITES: usize = 64;

/// Default cap on `|S|` for the exact Steiner computation.
pub const DEFAULT_STEINER_LIMIT: usize = 10;

/// A duplicate-free set of site indices, iterated in ascending order.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct SiteSet(u64);

impl SiteSet {
    pub const EMPTY: SiteSet = SiteSet(0);

    pub fn from_bits(bits: u64) -> Self {
        SiteSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(x: usize) -> Self {
        assert!(x < MAX_SITES, "site index {x} out of range");
        SiteSet(1 << x)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, x: usize) -> bool {
        x < MAX_SITES && self.0 & (1 << x) != 0
    }

    pub fn insert(&mut self, x: usize) {
        assert!(x < MAX_SITES, "site index {x} out of range");
        self.0 |= 1 << x;
    }

    pub fn union(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 | other.0)
    }

    pub fn intersection(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 & other.0)
    }

    pub fn difference(self, other: SiteSet) -> SiteSet {
        SiteSet(self.0 & !other.0)
    }

    pub fn is_disjoint(self, other: SiteSet) -> bool {
        self.0 & other.0 == 0
    }

    pub fn is_subset(self, other: SiteSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let x = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(x)
            }
        })
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Position of `x` among the members of the set (rank in ascending order).
    pub fn rank(self, x: usize) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        Some((self.0 & ((1u64 << x) - 1)).count_ones() as usize)
    }
}

impl FromIterator<usize> for SiteSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = SiteSet::EMPTY;
        for x in iter {
            s.insert(x);
        }
        s
    }
}

impl From<Vec<usize>> for SiteSet {
    fn from(v: Vec<usize>) -> Self {
        v.into_iter().collect()
    }
}

impl From<SiteSet> for Vec<usize> {
    fn from(s: SiteSet) -> Self {
        s.to_vec()
    }
}

impl fmt::Debug for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A finite box `Λ ⊂ Z^ν` with row-major site indexing (last axis fastest).
#[derive(Serialize, Deserialize)]
pub struct Volume {
    extents: Vec<usize>,
    #[serde(default = "default_limit")]
    steiner_limit: usize,
    #[serde(skip)]
    cache: RwLock<HashMap<SiteSet, usize>>,
}

fn default_limit() -> usize {
    DEFAULT_STEINER_LIMIT
}

impl Clone for Volume {
    fn clone(&self) -> Self {
        Volume {
            extents: self.extents.clone(),
            steiner_limit: self.steiner_limit,
            cache: RwLock::new(self.cache.read().expect("weight cache poisoned").clone()),
        }
    }
}

impl fmt::Debug for Volume {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Volume").field("extents", &self.extents).finish()
    }
}

impl PartialEq for Volume {
    fn eq(&self, other: &Self) -> bool {
        self.extents == other.extents
    }
}

impl Volume {
    pub fn new(extents: Vec<usize>) -> Result<Self> {
        if extents.is_empty() {
            return Err(Error::InvalidVolume("dimension must be at least 1".into()));
        }
        if extents.iter().any(|&e| e == 0) {
            return Err(Error::InvalidVolume(format!("extents must be positive, got {extents:?}")));
        }
        let n: usize = extents.iter().product();
        if n > MAX_SITES {
            return Err(Error::InvalidVolume(format!("{n} sites exceed the supported maximum of {MAX_SITES}")));
        }
        Ok(Volume { extents, steiner_limit: DEFAULT_STEINER_LIMIT, cache: RwLock::new(HashMap::new()) })
    }

    /// A one-dimensional chain of `n` sites.
    pub fn chain(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn with_steiner_limit(mut self, limit: usize) -> Self {
        self.steiner_limit = limit;
        self.cache.write().expect("weight cache poisoned").clear();
        self
    }

    pub fn steiner_limit(&self) -> usize {
        self.steiner_limit
    }

    pub fn dimension(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn num_sites(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn all_sites(&self) -> SiteSet {
        let n = self.num_sites();
        if n == MAX_SITES {
            SiteSet(u64::MAX)
        } else {
            SiteSet((1u64 << n) - 1)
        }
    }

    pub fn contains(&self, s: SiteSet) -> bool {
        s.is_subset(self.all_sites())
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut c = vec![0; self.extents.len()];
        let mut rest = site;
        for (axis, &e) in self.extents.iter().enumerate().rev() {
            c[axis] = rest % e;
            rest /= e;
        }
        c
    }

    pub fn index(&self, coords: &[usize]) -> Option<usize> {
        if coords.len() != self.extents.len() {
            return None;
        }
        let mut idx = 0;
        for (&c, &e) in coords.iter().zip(&self.extents) {
            if c >= e {
                return None;
            }
            idx = idx * e + c;
        }
        Some(idx)
    }

    /// Graph distance on the open box, i.e. the Manhattan distance.
    pub fn distance(&self, x: usize, y: usize) -> usize {
        self.coords(x).iter().zip(self.coords(y)).map(|(&a, b)| a.abs_diff(b)).sum()
    }

    /// `|S|_c`: minimal cardinality of a connected set containing `s`.
    pub fn connected_closure_size(&self, s: SiteSet) -> Result<usize> {
        if !self.contains(s) {
            return Err(Error::InvalidVolume(format!("site set {s:?} not inside volume {:?}", self.extents)));
        }
        if s.len() <= 1 {
            return Ok(s.len());
        }
        if let Some(&v) = self.cache.read().expect("weight cache poisoned").get(&s) {
            return Ok(v);
        }
        let v = self.steiner(s)?;
        self.cache.write().expect("weight cache poisoned").insert(s, v);
        Ok(v)
    }

    /// `w(S) = |S| + |S|_c`.
    pub fn weight(&self, s: SiteSet) -> Result<usize> {
        Ok(s.len() + self.connected_closure_size(s)?)
    }

    /// `w_x(S) = w(S ∪ {x})`.
    pub fn weight_anchored(&self, s: SiteSet, x: usize) -> Result<usize> {
        if x >= self.num_sites() {
            return Err(Error::InvalidVolume(format!("anchor site {x} outside volume")));
        }
        self.weight(s.union(SiteSet::singleton(x)))
    }

    fn steiner(&self, s: SiteSet) -> Result<usize> {
        let terminals: Vec<Vec<usize>> = s.iter().map(|x| self.coords(x)).collect();
        let nu = self.extents.len();
        let lo: Vec<usize> = (0..nu).map(|a| terminals.iter().map(|c| c[a]).min().unwrap()).collect();
        let hi: Vec<usize> = (0..nu).map(|a| terminals.iter().map(|c| c[a]).max().unwrap()).collect();

        // A box that is degenerate along all but one axis is a segment.
        let spread: Vec<usize> = (0..nu).map(|a| hi[a] - lo[a]).collect();
        if spread.iter().filter(|&&d| d > 0).count() <= 1 {
            return Ok(spread.iter().sum::<usize>() + 1);
        }

        if s.len() > self.steiner_limit {
            return Err(Error::SteinerLimitExceeded { size: s.len(), limit: self.steiner_limit });
        }
        Ok(dreyfus_wagner(&lo, &hi, &terminals))
    }
}

/// Minimum number of nodes of a connected subgraph of the grid box `[lo, hi]`
/// spanning all `terminals`.
fn dreyfus_wagner(lo: &[usize], hi: &[usize], terminals: &[Vec<usize>]) -> usize {
    let side: Vec<usize> = lo.iter().zip(hi).map(|(&l, &h)| h - l + 1).collect();
    let n: usize = side.iter().product();
    let cells: Vec<Vec<usize>> = (0..n)
        .map(|mut i| {
            let mut c = vec![0; side.len()];
            for a in (0..side.len()).rev() {
                c[a] = i % side[a] + lo[a];
                i /= side[a];
            }
            c
        })
        .collect();
    let dist = |a: &[usize], b: &[usize]| -> usize { a.iter().zip(b).map(|(&p, &q)| p.abs_diff(q)).sum() };
    let k = terminals.len();
    let full = (1usize << k) - 1;
    const INF: usize = usize::MAX / 4;
    let mut dp = vec![vec![INF; n]; 1 << k];
    for (t, term) in terminals.iter().enumerate() {
        for (v, c) in cells.iter().enumerate() {
            dp[1 << t][v] = dist(term, c);
        }
    }
    for mask in 1..=full {
        if mask.count_ones() < 2 {
            continue;
        }
        for v in 0..n {
            let mut best = INF;
            let mut sub = (mask - 1) & mask;
            while sub > 0 {
                best = best.min(dp[sub][v] + dp[mask ^ sub][v]);
                sub = (sub - 1) & mask;
            }
            dp[mask][v] = best;
        }
        // Relax along shortest paths; the grid metric is Manhattan inside the box.
        let snapshot = dp[mask].clone();
        for v in 0..n {
            let mut best = snapshot[v];
            for u in 0..n {
                let c = snapshot[u] + dist(&cells[u], &cells[v]);
                if c < best {
                    best = c;
                }
            }
            dp[mask][v] = best;
        }
    }
    let edges = (0..n).map(|v| dp[full][v]).min().unwrap();
    edges + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> SiteSet {
        v.iter().copied().collect()
    }

    #[test]
    fn closure_examples() {
        let vol = Volume::new(vec![3, 3]).unwrap();
        assert_eq!(vol.connected_closure_size(SiteSet::EMPTY).unwrap(), 0);
        let origin = vol.index(&[0, 0]).unwrap();
        let two = vol.index(&[2, 0]).unwrap();
        assert_eq!(vol.connected_closure_size(set(&[origin])).unwrap(), 1);
        assert_eq!(vol.connected_closure_size(set(&[origin, two])).unwrap(), 3);
    }

    #[test]
    fn weight_examples() {
        let vol = Volume::new(vec![3, 3]).unwrap();
        let origin = vol.index(&[0, 0]).unwrap();
        let two = vol.index(&[2, 0]).unwrap();
        assert_eq!(vol.weight(SiteSet::EMPTY).unwrap(), 0);
        assert_eq!(vol.weight(set(&[4])).unwrap(), 2);
        assert_eq!(vol.weight(set(&[origin, two])).unwrap(), 5);
        assert_eq!(vol.weight_anchored(SiteSet::EMPTY, 4).unwrap(), 2);
        assert_eq!(vol.weight_anchored(set(&[4]), 4).unwrap(), 2);
        assert_eq!(vol.weight_anchored(set(&[origin]), two).unwrap(), 5);
    }

    #[test]
    fn corners_of_square_need_a_steiner_path() {
        let vol = Volume::new(vec![3, 3]).unwrap();
        let corners = set(&[vol.index(&[0, 0]).unwrap(), vol.index(&[0, 2]).unwrap(), vol.index(&[2, 0]).unwrap(), vol.index(&[2, 2]).unwrap()]);
        // an H or a cross through the centre: 7 sites
        assert_eq!(vol.connected_closure_size(corners).unwrap(), 7);
    }

    #[test]
    fn steiner_limit_is_enforced() {
        let vol = Volume::new(vec![4, 4]).unwrap().with_steiner_limit(2);
        let s = set(&[0, 5, 10]);
        assert!(matches!(vol.connected_closure_size(s), Err(Error::SteinerLimitExceeded { size: 3, limit: 2 })));
        // collinear sets bypass the DP
        assert_eq!(vol.connected_closure_size(set(&[0, 1, 3])).unwrap(), 4);
    }

    #[test]
    fn siteset_rank_and_order() {
        let s = set(&[5, 1, 3]);
        assert_eq!(s.to_vec(), vec![1, 3, 5]);
        assert_eq!(s.rank(3), Some(1));
        assert_eq!(s.rank(4), None);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[1,3,5]");
    }
}

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;

use crate::dense::{CMatrix, ZERO};

use super::operator::{core_shape, entry_units, units_to_entry, LocalOperator};
use super::sector::SectorIndex;
use super::site::Space;

type Units = Vec<(usize, usize, usize)>;

/// Nonzero core entries of one operator expanded into matrix units.
fn expand(op: &LocalOperator) -> Vec<(SectorIndex, Complex64, Units)> {
    let space = op.space();
    let mut out = Vec::new();
    let mut buf = Vec::new();
    for (sector, core) in op.blocks() {
        for j in 0..core.ncols() {
            for i in 0..core.nrows() {
                let v = core[(i, j)];
                if v != ZERO {
                    entry_units(space, sector, i, j, &mut buf);
                    out.push((*sector, v, buf.clone()));
                }
            }
        }
    }
    out
}

/// Product of two unit lists; `None` if some site factor vanishes.
/// May contain `(x, 0, 0)` factors, which stand for the ground projector.
fn merge(a: &Units, b: &Units) -> Option<Units> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i].0 < b[j].0);
        let take_b = i >= a.len() || (j < b.len() && b[j].0 < a[i].0);
        if take_a {
            out.push(a[i]);
            i += 1;
        } else if take_b {
            out.push(b[j]);
            j += 1;
        } else {
            let (x, p, q) = a[i];
            let (_, r, s) = b[j];
            if q != r {
                return None;
            }
            out.push((x, p, s));
            i += 1;
            j += 1;
        }
    }
    Some(out)
}

struct Accumulator<'a> {
    space: &'a Space,
    scalar: Complex64,
    blocks: HashMap<SectorIndex, CMatrix>,
}

impl<'a> Accumulator<'a> {
    fn new(space: &'a Space) -> Self {
        Accumulator { space, scalar: ZERO, blocks: HashMap::new() }
    }

    /// Adds `v` times the product of `units`, expanding `E_00 = 1 - sum_k E_kk`.
    fn add(&mut self, v: Complex64, units: &[(usize, usize, usize)]) {
        let ground: Vec<usize> = (0..units.len()).filter(|&k| units[k].1 == 0 && units[k].2 == 0).collect();
        if ground.is_empty() {
            self.add_plain(v, units);
            return;
        }
        // each ground factor is either dropped (identity) or replaced by -E_kk
        let choices: Vec<usize> = ground.iter().map(|&k| self.space.dim(units[k].0)).collect();
        let mut pick = vec![0usize; ground.len()];
        let mut term: Units = Vec::with_capacity(units.len());
        loop {
            term.clear();
            let mut sign = v;
            let mut g = 0;
            for (k, &u) in units.iter().enumerate() {
                if g < ground.len() && ground[g] == k {
                    if pick[g] > 0 {
                        term.push((u.0, pick[g], pick[g]));
                        sign = -sign;
                    }
                    g += 1;
                } else {
                    term.push(u);
                }
            }
            self.add_plain(sign, &term);
            // odometer over the choices
            let mut k = 0;
            while k < pick.len() {
                pick[k] += 1;
                if pick[k] < choices[k] {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
            if k == pick.len() {
                break;
            }
        }
    }

    fn add_plain(&mut self, v: Complex64, units: &[(usize, usize, usize)]) {
        if units.is_empty() {
            self.scalar += v;
            return;
        }
        let (sector, i, j) = units_to_entry(self.space, units);
        let space = self.space;
        let core = self.blocks.entry(sector).or_insert_with(|| {
            let (r, c) = core_shape(space, &sector);
            CMatrix::zeros(r, c)
        });
        core[(i, j)] += v;
    }
}

/// `A B`, optionally skipping sector pairs with disjoint supports.
fn product(a: &LocalOperator, b: &LocalOperator, skip_disjoint: bool) -> LocalOperator {
    assert!(a.same_space(b), "operators live on different spaces");
    let space = a.space().clone();
    let mut acc = Accumulator::new(&space);
    let ea = expand(a);
    let eb = expand(b);
    for (sa, va, ua) in &ea {
        for (sb, vb, ub) in &eb {
            if skip_disjoint && sa.support().is_disjoint(sb.support()) {
                continue;
            }
            if let Some(units) = merge(ua, ub) {
                acc.add(va * vb, &units);
            }
        }
    }
    let mut out = LocalOperator::zero(&space);
    out.set_scalar(acc.scalar);
    let blocks: BTreeMap<_, _> = acc.blocks.into_iter().collect();
    for (s, c) in blocks {
        out.insert_block(s, c);
    }
    out.prune();
    out
}

impl LocalOperator {
    pub fn multiply(&self, other: &LocalOperator) -> LocalOperator {
        let mut out = product(self, other, false);
        let (ca, cb) = (self.scalar(), other.scalar());
        // scalar parts are handled outside the unit expansion
        let mut cross = other.scale(ca).axpy(cb, self);
        cross.set_scalar(cross.scalar() - ca * cb);
        out = &out + &cross;
        out
    }

    /// `[A, B] = AB - BA`; disjoint sector pairs and scalars commute and are skipped.
    pub fn commutator(&self, other: &LocalOperator) -> LocalOperator {
        let ab = product(self, other, true);
        let ba = product(other, self, true);
        &ab - &ba
    }
}

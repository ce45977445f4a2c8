//! Sector-indexed local operators.
//!
//! Every single-site operator splits uniquely as `c 1 + M+ + M- + Mn` with
//! `M+ = Q M P`, `M- = P M Q` and `Mn = Q M Q - c Q`, where `P` projects onto the
//! site's ground vector and `Q = 1 - P`. Tensoring these splits over a support
//! gives the sector decomposition used throughout the crate.

mod json;
mod norm;
mod operator;
mod product;
mod sector;
mod site;

pub use json::{BlockDoc, OperatorDoc};
pub use norm::NormSpec;
pub use operator::{core_shape, Classified, LocalOperator};
pub use sector::{Role, SectorIndex};
pub use site::{SiteSpace, SiteSplit, Space, DEFAULT_DROP_THRESHOLD};

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::dense::{self, c, r, CMatrix, ZERO};
    use crate::lattice::{SiteSet, Volume};

    fn m2(a: [f64; 4]) -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[r(a[0]), r(a[1]), r(a[2]), r(a[3])])
    }

    fn sx() -> CMatrix {
        m2([0.0, 1.0, 1.0, 0.0])
    }

    // basis {down, up}; down is the ground vector
    fn sz() -> CMatrix {
        m2([-1.0, 0.0, 0.0, 1.0])
    }

    fn sp() -> CMatrix {
        m2([0.0, 0.0, 1.0, 0.0])
    }

    fn sm() -> CMatrix {
        m2([0.0, 1.0, 0.0, 0.0])
    }

    fn set(v: &[usize]) -> SiteSet {
        v.iter().copied().collect()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Non-diagonal qutrit with a rotated ground vector.
    fn rotated_qutrit() -> SiteSpace {
        let g = dense::hermitian_part(&CMatrix::from_fn(3, 3, |i, j| c((i + 2 * j) as f64 * 0.1, (i * j) as f64 * 0.2)));
        let q = dense::expm(&(g * c(0.0, 1.0)));
        let d = CMatrix::from_diagonal(&dense::CVector::from_vec(vec![r(0.0), r(1.0), r(1.7)]));
        SiteSpace::new(&q * d * q.adjoint()).unwrap()
    }

    #[test]
    fn site_split_examples() {
        let s = SiteSpace::qubit(1.0);
        let x = s.site_split(&sx());
        assert_eq!(x.c, ZERO);
        assert_eq!(x.plus, sp());
        assert_eq!(x.minus, sm());
        assert_eq!(x.neutral, m2([0.0; 4]));
        let z = s.site_split(&sz());
        assert_eq!(z.c, r(-1.0));
        assert_eq!(z.neutral, m2([0.0, 0.0, 0.0, 2.0]));
        assert_eq!(z.plus, m2([0.0; 4]));
        let one = s.site_split(&dense::identity(2));
        assert_eq!(one.c, r(1.0));
        assert_eq!(one.neutral, m2([0.0; 4]));
    }

    #[test]
    fn site_split_reconstructs_on_rotated_site() {
        let s = rotated_qutrit();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(&mut rng, 3);
        let sp = s.site_split(&m);
        let back = dense::identity(3) * sp.c + &sp.plus + &sp.minus + &sp.neutral;
        assert!(max_diff(&back, &m) < 1e-14);
    }

    #[test]
    fn xx_splits_into_four_sectors() {
        let space = Space::qubit_chain(3, 1.0).unwrap();
        let op = LocalOperator::decompose(&space, set(&[1, 2]), &dense::kron(&sx(), &sx())).unwrap();
        let keys: Vec<_> = op.blocks().keys().copied().collect();
        let e = SiteSet::EMPTY;
        let mut expect = vec![
            SectorIndex::new(set(&[1, 2]), e, e),
            SectorIndex::new(set(&[1]), set(&[2]), e),
            SectorIndex::new(set(&[2]), set(&[1]), e),
            SectorIndex::new(e, set(&[1, 2]), e),
        ];
        expect.sort();
        assert_eq!(keys, expect);
        assert_eq!(op.scalar(), ZERO);
        let b = op.block(&SectorIndex::new(set(&[1]), set(&[2]), e)).unwrap();
        assert_eq!(b, dense::kron(&sp(), &sm()));
    }

    #[test]
    fn identity_is_pure_scalar() {
        let space = Space::qubit_chain(3, 1.0).unwrap();
        let op = LocalOperator::decompose(&space, set(&[0, 2]), &dense::identity(4)).unwrap();
        assert_eq!(op.num_sectors(), 0);
        assert_eq!(op.scalar(), r(1.0));
    }

    #[test]
    fn assemble_examples() {
        let space = Space::qubit_chain(2, 1.0).unwrap();
        let two = LocalOperator::scalar_op(&space, r(2.0));
        assert_eq!(two.assemble(set(&[0, 1])).unwrap(), dense::identity(4) * r(2.0));
        let plus = LocalOperator::from_core(&space, SectorIndex::plus(set(&[0])), CMatrix::from_element(1, 1, r(1.0))).unwrap();
        assert_eq!(plus.assemble(set(&[0, 1])).unwrap(), dense::kron(&sp(), &dense::identity(2)));
        assert!(matches!(
            plus.assemble(set(&[1])),
            Err(crate::error::Error::SupportNotContained { .. })
        ));
    }

    #[test]
    fn random_two_site_round_trip_has_sixteen_terms() {
        let space = Space::qubit_chain(2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_matrix(&mut rng, 4);
        let op = LocalOperator::decompose(&space, set(&[0, 1]), &m).unwrap();
        assert_eq!(op.num_sectors() + 1, 16);
        assert!(max_diff(&op.assemble(set(&[0, 1])).unwrap(), &m) < 1e-13);
    }

    #[test]
    fn norm_examples() {
        let space = Space::qubit_chain(4, 1.0).unwrap();
        let h0 = space.h0();
        for kappa in [0.0, 0.5, std::f64::consts::LN_2] {
            assert_abs_diff_eq!(h0.norm(kappa).unwrap(), (2.0 * kappa).exp(), epsilon = 1e-13);
        }
        assert_eq!(LocalOperator::zero(&space).norm(1.0).unwrap(), 0.0);
        let eps = 0.3;
        let v = LocalOperator::from_core(&space, SectorIndex::plus(set(&[2])), CMatrix::from_element(1, 1, r(eps))).unwrap();
        assert_abs_diff_eq!(v.norm(0.7).unwrap(), eps * 1.4f64.exp(), epsilon = 1e-14);
        let s = LocalOperator::scalar_op(&space, r(2.0));
        assert_abs_diff_eq!(s.norm(1.0).unwrap(), 0.5);
        assert_eq!(s.norm_prime(1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(s.norm_anchored(1.0, 3).unwrap(), 2.0);
        // anchored weight of {2} seen from 0 is |{0,2}| + |{0,1,2}| = 5
        assert_abs_diff_eq!(v.norm_anchored(0.5, 0).unwrap(), eps * 2.5f64.exp(), epsilon = 1e-14);
    }

    #[test]
    fn classify_examples() {
        let space = Space::qubit_chain(2, 1.0).unwrap();
        let x = LocalOperator::decompose(&space, set(&[0]), &sx()).unwrap().classify();
        assert_eq!(x.d, ZERO);
        assert!(x.f.is_zero());
        assert_eq!(x.v_plus.assemble(set(&[0])).unwrap(), sp());
        assert_eq!(x.v_minus.assemble(set(&[0])).unwrap(), sm());
        let z = LocalOperator::decompose(&space, set(&[0]), &sz()).unwrap().classify();
        assert_eq!(z.d, r(-1.0));
        assert_eq!(z.f.assemble(set(&[0])).unwrap(), m2([0.0, 0.0, 0.0, 2.0]));
        assert!(z.v().is_zero());
        let pm = LocalOperator::decompose(&space, set(&[0, 1]), &dense::kron(&sp(), &sm())).unwrap().classify();
        assert!(pm.v().is_zero());
        assert_eq!(pm.f.num_sectors(), 1);
    }

    #[test]
    fn multiply_examples() {
        let space = Space::qubit_chain(2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = LocalOperator::decompose(&space, set(&[0, 1]), &random_matrix(&mut rng, 4)).unwrap();
        let one = LocalOperator::identity(&space);
        assert!(one.multiply(&b).max_abs_diff(&b) < 1e-15);
        let p = LocalOperator::decompose(&space, set(&[1]), &sp()).unwrap();
        assert!(p.multiply(&p).is_zero());
        let a = LocalOperator::decompose(&space, set(&[0, 1]), &random_matrix(&mut rng, 4)).unwrap();
        let oracle = a.dense() * b.dense();
        assert!(max_diff(&a.multiply(&b).dense(), &oracle) < 1e-12);
    }

    #[test]
    fn commutator_and_adjoint_examples() {
        let space = Space::qubit_chain(3, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = LocalOperator::decompose(&space, set(&[0, 1]), &random_matrix(&mut rng, 4)).unwrap();
        assert!(a.commutator(&a).norm(0.0).unwrap() < 1e-14);
        let b = LocalOperator::decompose(&space, set(&[2]), &random_matrix(&mut rng, 2)).unwrap();
        assert!(a.commutator(&b).is_zero());
        let eps = c(0.2, 0.3);
        let v = LocalOperator::from_core(&space, SectorIndex::plus(set(&[1])), CMatrix::from_element(1, 1, eps)).unwrap();
        let w = v.adjoint();
        assert_eq!(w.core(&SectorIndex::minus(set(&[1]))).unwrap()[(0, 0)], eps.conj());
        assert_eq!(w.num_sectors(), 1);
    }

    #[test]
    fn h0_matches_dense_sum() {
        let space = Space::new(Volume::chain(3).unwrap(), vec![rotated_qutrit()]).unwrap();
        let h0 = space.h0();
        let mut dense_h0 = CMatrix::zeros(27, 27);
        for x in 0..3 {
            let mut term = dense::identity(1);
            for y in 0..3 {
                term = dense::kron(&term, &if x == y { space.site(y).h().clone() } else { dense::identity(3) });
            }
            dense_h0 += term;
        }
        assert!(max_diff(&h0.dense(), &dense_h0) < 1e-12);
        assert!(h0.is_frustration_free());
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let space = Space::new(Volume::chain(2).unwrap(), vec![rotated_qutrit()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut op = LocalOperator::decompose(&space, set(&[0, 1]), &random_matrix(&mut rng, 9)).unwrap();
        op.set_scalar(c(1.0 / 3.0, -std::f64::consts::PI));
        let back = LocalOperator::from_json(&space, &op.to_json()).unwrap();
        assert_eq!(back, op);
        assert_eq!(back.dropped(), op.dropped());
    }

    // --- properties ---

    fn space_for(dims: &[usize]) -> Arc<Space> {
        let sites = dims
            .iter()
            .map(|&d| SiteSpace::diagonal(&(0..d).map(|k| k as f64).collect::<Vec<_>>()).unwrap())
            .collect();
        Space::new(Volume::chain(dims.len()).unwrap(), sites).unwrap()
    }

    /// Sparse random operator: a few random dense terms on random small supports.
    fn random_op(space: &Arc<Space>, rng: &mut ChaCha8Rng, terms: usize) -> LocalOperator {
        let n = space.num_sites();
        let mut op = LocalOperator::zero(space);
        for _ in 0..terms {
            let mut s = SiteSet::EMPTY;
            let size = rng.gen_range(1..=n.min(2));
            while s.len() < size {
                s.insert(rng.gen_range(0..n));
            }
            let m = random_matrix(rng, space.dim_of(s));
            op = &op + &LocalOperator::decompose(space, s, &m).unwrap();
        }
        op
    }

    fn dims_strategy() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(2usize..=3, 1..=3)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn decompose_assemble_round_trip(dims in dims_strategy(), seed in any::<u64>()) {
            let space = space_for(&dims);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let all = space.all_sites();
            let m = random_matrix(&mut rng, space.full_dim());
            let op = LocalOperator::decompose(&space, all, &m).unwrap();
            prop_assert!(max_diff(&op.assemble(all).unwrap(), &m) < 1e-13);
            // idempotent through assemble
            let again = LocalOperator::decompose(&space, all, &op.dense()).unwrap();
            prop_assert!(again.max_abs_diff(&op) < 1e-13);
        }

        #[test]
        fn rotated_frame_round_trip(seed in any::<u64>()) {
            let space = Space::new(Volume::chain(2).unwrap(), vec![rotated_qutrit()]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_matrix(&mut rng, 9);
            let op = LocalOperator::decompose(&space, space.all_sites(), &m).unwrap();
            prop_assert!(max_diff(&op.dense(), &m) < 1e-13);
        }

        #[test]
        fn multiply_matches_dense_product(dims in dims_strategy(), seed in any::<u64>()) {
            let space = space_for(&dims);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut a = random_op(&space, &mut rng, 2);
            a.set_scalar(c(0.5, -0.25));
            let b = random_op(&space, &mut rng, 2);
            let ab = a.multiply(&b);
            prop_assert!(max_diff(&ab.dense(), &(a.dense() * b.dense())) < 1e-12);
            let comm = a.commutator(&b);
            prop_assert!(max_diff(&comm.dense(), &dense::commutator(&a.dense(), &b.dense())) < 1e-12);
        }

        #[test]
        fn blocks_are_sector_pure(dims in dims_strategy(), seed in any::<u64>()) {
            let space = space_for(&dims);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_op(&space, &mut rng, 2);
            let b = random_op(&space, &mut rng, 2);
            for op in [a.multiply(&b), a.commutator(&b)] {
                for sector in op.blocks().keys() {
                    let block = op.block(sector).unwrap();
                    let mut sandwich = block.clone();
                    let mut l = dense::identity(1);
                    let mut rr = dense::identity(1);
                    for x in sector.support().iter() {
                        let s = space.site(x);
                        let (pl, pr) = match sector.role(x) {
                            Role::Plus => (s.complement(), s.projector()),
                            Role::Minus => (s.projector(), s.complement()),
                            _ => (s.complement(), s.complement()),
                        };
                        l = dense::kron(&l, &pl);
                        rr = dense::kron(&rr, &pr);
                    }
                    sandwich = &l * sandwich * &rr;
                    prop_assert!(max_diff(&sandwich, &block) < 1e-13);
                    prop_assert!(op.core(sector).unwrap().shape() == core_shape(&space, sector));
                }
            }
        }

        #[test]
        fn adjoint_is_involutive_and_matches_dense(dims in dims_strategy(), seed in any::<u64>()) {
            let space = space_for(&dims);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut a = random_op(&space, &mut rng, 3);
            a.set_scalar(c(0.1, 0.7));
            prop_assert_eq!(a.adjoint().adjoint(), a.clone());
            prop_assert!(max_diff(&a.adjoint().dense(), &a.dense().adjoint()) < 1e-14);
        }

        #[test]
        fn classify_recombines(dims in dims_strategy(), seed in any::<u64>()) {
            let space = space_for(&dims);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_op(&space, &mut rng, 3);
            let parts = a.classify();
            let mut sum = &(&parts.f + &parts.v_plus) + &parts.v_minus;
            sum.set_scalar(parts.d);
            prop_assert!(sum.max_abs_diff(&a) < 1e-15);
            // frustration-free part annihilates the product reference state from both sides
            let g = space.ground(space.all_sites());
            let f = parts.f.dense();
            prop_assert!((&f * &g).norm() < 1e-13);
            prop_assert!((g.adjoint() * &f).norm() < 1e-13);
        }
    }
}

//! Seeded random instances. Every generator draws only from the supplied RNG.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{self, c, r, CMatrix, CVector};
use crate::lattice::{SiteSet, Volume};
use crate::opalgebra::{LocalOperator, SiteSpace, Space};

use super::report::Descriptor;

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Seed of instance `index` of check number `check` in a suite seeded with `base`.
pub fn instance_seed(base: u64, check: u64, index: u64) -> u64 {
    let mut z = base ^ check.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    dense::hermitian_part(&random_matrix(rng, n))
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    dense::expm(&(random_hermitian(rng, n) * c(0.0, 1.0)))
}

/// Hermitian single-site generator with ground energy 0 and gap `g`, possibly in a rotated basis.
pub fn random_site(rng: &mut ChaCha8Rng, dim: usize, g: f64) -> SiteSpace {
    let mut energies = vec![0.0, g];
    for _ in 2..dim {
        energies.push(g * rng.gen_range(1.0..2.0));
    }
    let diag = CMatrix::from_diagonal(&CVector::from_vec(energies.iter().map(|&e| r(e)).collect()));
    if rng.gen_bool(0.5) {
        SiteSpace::diagonal(&energies).expect("gapped diagonal site")
    } else {
        let q = random_unitary(rng, dim);
        let site = SiteSpace::new(&q * diag * q.adjoint()).expect("gapped rotated site");
        // keep the nominal gap exact despite rounding in the rotation
        let gap = site.gap().min(g);
        site.with_gap(gap).expect("gap within range")
    }
}

/// Chain of 2 to `max_sites` sites or a 2x2 square, local dimension 2 or 3.
pub fn random_space(rng: &mut ChaCha8Rng, max_sites: usize) -> Arc<Space> {
    let volume = if max_sites >= 4 && rng.gen_bool(0.2) {
        Volume::new(vec![2, 2]).expect("square")
    } else {
        Volume::chain(rng.gen_range(2..=max_sites.max(2))).expect("chain")
    };
    let dim = if rng.gen_bool(0.5) { 2 } else { 3 };
    let n = volume.num_sites();
    let sites = (0..n).map(|_| random_site(rng, dim, 1.0)).collect();
    Space::new(volume, sites).expect("consistent space")
}

fn random_support(rng: &mut ChaCha8Rng, n: usize, max_len: usize) -> SiteSet {
    let len = rng.gen_range(1..=max_len.min(n));
    let mut sites: Vec<usize> = (0..n).collect();
    sites.shuffle(rng);
    sites[..len].iter().copied().collect()
}

/// Sum of `terms` random dense terms on random supports of at most three sites.
pub fn random_operator(space: &Arc<Space>, rng: &mut ChaCha8Rng, terms: usize) -> LocalOperator {
    let n = space.num_sites();
    let mut op = LocalOperator::zero(space);
    for _ in 0..terms {
        let s = random_support(rng, n, 3);
        let m = random_matrix(rng, space.dim_of(s));
        op = &op + &LocalOperator::decompose(space, s, &m).expect("support in volume");
    }
    op
}

pub fn random_hermitian_operator(space: &Arc<Space>, rng: &mut ChaCha8Rng, terms: usize) -> LocalOperator {
    let a = random_operator(space, rng, terms);
    (&a + &a.adjoint()).scale(r(0.5))
}

pub fn random_frustration_free(space: &Arc<Space>, rng: &mut ChaCha8Rng, terms: usize) -> LocalOperator {
    random_operator(space, rng, terms).f_part()
}

pub fn random_non_diagonal(space: &Arc<Space>, rng: &mut ChaCha8Rng, terms: usize) -> LocalOperator {
    random_operator(space, rng, terms).v_part()
}

/// Rescales so that `|op|_mu = target`; zero stays zero.
pub fn scale_to(op: &LocalOperator, mu: f64, target: f64) -> LocalOperator {
    let n = op.norm(mu).expect("weights within the Steiner limit");
    if n == 0.0 {
        op.clone()
    } else {
        op.scale(r(target / n))
    }
}

pub fn describe(space: &Space, seed: u64) -> Descriptor {
    Descriptor {
        seed: Some(seed),
        extents: space.volume().extents().to_vec(),
        local_dims: (0..space.num_sites()).map(|x| space.dim(x)).collect(),
        ..Descriptor::default()
    }
}

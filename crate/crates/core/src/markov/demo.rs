//! Small reversible instances used by the tests, the acceptance suite and the command line.

use crate::dense::{self, r, CMatrix, ZERO};
use crate::error::Result;
use crate::lattice::Volume;

use super::natural::embed;
use super::problem::{MarkovProblem, MarkovTerm};
use super::site::WeightedSite;

/// Two-state rate matrix: `0 -> 1` at rate `a`, `1 -> 0` at rate `b`.
pub fn two_state_rates(a: f64, b: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[r(-a), r(a), r(b), r(-b)])
}

/// Rate matrix on two neighbouring two-state sites: the first site flips at rate `eps`
/// while the second is in state 1.
pub fn conditional_flip(eps: f64) -> CMatrix {
    let flip = CMatrix::from_row_slice(2, 2, &[r(-eps), r(eps), r(eps), r(-eps)]);
    let occupied = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, r(1.0)]);
    dense::kron(&flip, &occupied)
}

/// Chain of `n` two-state sites with rates `(a, b)` coupled by [`conditional_flip`].
pub fn classical_chain(n: usize, a: f64, b: f64, eps: f64, kappa: f64, kappa_prime: f64) -> Result<MarkovProblem> {
    let site = WeightedSite::classical(two_state_rates(a, b), None)?;
    let terms = (0..n.saturating_sub(1))
        .map(|i| MarkovTerm::new(vec![i, i + 1], conditional_flip(eps)))
        .collect::<Result<Vec<_>>>()?;
    MarkovProblem::new(Volume::chain(n)?, vec![site], terms, kappa, kappa_prime)
}

/// `|0><1|`.
pub fn lowering() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, r(1.0), ZERO, ZERO])
}

/// Qubit with decay `|1> -> |0>` at rate `down` and excitation at rate `up`; its stationary
/// state is `diag(down, up)/(down + up)` and the generator satisfies detailed balance.
pub fn thermal_qubit(down: f64, up: f64) -> Result<WeightedSite> {
    let jumps = [(down, lowering()), (up, lowering().adjoint())];
    WeightedSite::lindblad(None, &CMatrix::zeros(2, 2), &jumps)
}

/// Exchange jumps `|01> <-> |10>` at rate `eps` on two qubits.
pub fn exchange_term(sites: Vec<usize>, eps: f64) -> Result<MarkovTerm> {
    let lo = lowering();
    let hi = lo.adjoint();
    let jumps = [(eps, dense::kron(&lo, &hi)), (eps, dense::kron(&hi, &lo))];
    MarkovTerm::lindblad(sites, &[2, 2], &CMatrix::zeros(4, 4), &jumps)
}

/// Two thermal qubits coupled by [`exchange_term`].
pub fn qubit_pair(down: f64, up: f64, eps: f64, kappa: f64, kappa_prime: f64) -> Result<MarkovProblem> {
    let site = thermal_qubit(down, up)?;
    MarkovProblem::new(Volume::chain(2)?, vec![site], vec![exchange_term(vec![0, 1], eps)?], kappa, kappa_prime)
}

/// Dense full-volume generator of a product of identical single-site maps, for oracles.
pub fn product_generator(dims: &[usize], single: &CMatrix) -> CMatrix {
    let n: usize = dims.iter().product();
    (0..dims.len()).fold(CMatrix::zeros(n, n), |acc, x| acc + embed(dims, &[x], single))
}

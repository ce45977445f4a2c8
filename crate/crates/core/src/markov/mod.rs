//! Markov generators as flow problems.
//!
//! The observables of a site form a Hilbert space under `<A,B> = Tr(rho A* B)`. When the
//! single-site generator `l` is self-adjoint there, `-l` in an orthonormal basis starting
//! with `1` is a gapped site Hamiltonian whose reference vector is the constant observable,
//! and `-L'` is a perturbation of the sum. The flow then produces the stationary state of
//! `L = sum_x l_x + L'` as `rho' = lambda rho(U^{-1} .)`.
//!
//! Classical jump processes use the same machinery on the functions of the site states,
//! which form the diagonal subspace of the quantum observables.

pub mod demo;
mod natural;
mod problem;
mod site;
mod stationary;

pub use natural::{embed, lindblad_superoperator};
pub use problem::{MarkovProblem, MarkovTerm};
pub use site::{WeightedSite, GENERATOR_TOLERANCE};
pub use stationary::{
    observable_anchored_norm, observable_natural, observable_pushforward, rn_derivative, split_by_support,
    stationary_state_direct, stationary_state_via_flow, term_matrix, trace_distance, Pushforward, RnDerivative,
    StationaryState,
};

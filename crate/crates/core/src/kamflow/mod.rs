//! The conjugation flow `H_{n+1} = e^{iA_n} H_n e^{-iA_n}` that removes the pure
//! raising and lowering sectors order by order.
//!
//! All dense matrices handled here are in the adapted frame of the space, where
//! the reference product state is the first basis vector.

mod config;
mod dressing;
mod generator;
mod resolvent;
mod runner;
mod schedule;
mod step;

pub use config::{
    check_condition, epsilon_value, FlowConfig, FlowMode, DEFAULT_EPSILON_THRESHOLD, DEFAULT_KMAX, DEFAULT_NMAX,
    DEFAULT_VTOL,
};
pub use dressing::{apply_dressing, DressingTransform};
pub use generator::build_generator;
pub use resolvent::{reduced_resolvent, reduced_resolvent_of, resolvent_neumann};
pub use runner::{is_isolated, reference_eigenvalue, run_flow, Checkpoint, DiagnosticsRow, FlowResult, FlowRunner};
pub use schedule::{schedule, DecaySchedule};
pub use step::{flow_step, is_self_adjoint, FlowState};

#[cfg(test)]
mod tests {
    use std::f64::consts::LN_2;
    use std::sync::Arc;

    use approx::assert_abs_diff_eq;

    use super::*;
    use crate::dense::{self, c, r, CMatrix, I, ZERO};
    use crate::error::Error;
    use crate::lattice::SiteSet;
    use crate::opalgebra::{LocalOperator, SectorIndex, Space};

    fn set(v: &[usize]) -> SiteSet {
        v.iter().copied().collect()
    }

    fn sp() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, r(1.0), ZERO])
    }

    fn sx() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, r(1.0), r(1.0), ZERO])
    }

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn op(space: &Arc<Space>, sites: &[usize], m: &CMatrix) -> LocalOperator {
        LocalOperator::decompose(space, set(sites), m).unwrap()
    }

    fn xx_chain(n: usize, eps: f64) -> LocalOperator {
        let space = Space::qubit_chain(n, 1.0).unwrap();
        let xx = dense::kron(&sx(), &sx()) * r(eps);
        (0..n - 1).fold(LocalOperator::zero(&space), |acc, i| &acc + &op(&space, &[i, i + 1], &xx))
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(schedule(1.0, 2.0, 1), (2.0, None));
        assert_eq!(schedule(1.0, 2.0, 2), (1.5, Some(0.5)));
        let s = DecaySchedule::new(LN_2, LN_2 + 0.5).unwrap();
        for n in 1..50 {
            assert!(s.kappa_n(n + 1) < s.kappa_n(n));
            assert_abs_diff_eq!(s.delta(n + 1).unwrap(), 0.5 / (n * (n + 1)) as f64, epsilon = 1e-15);
        }
        assert!((s.kappa_n(1_000_000) - LN_2) < 1e-6);
        assert!(matches!(DecaySchedule::new(1.0, 1.0), Err(Error::Schema { field, .. }) if field == "kappa_prime"));
        assert!(DecaySchedule::new(0.5, 1.0).is_err());
        assert!(DecaySchedule::new(1.0, 2.5).is_err());
    }

    #[test]
    fn condition_examples() {
        let space = Space::qubit_chain(3, 1.0).unwrap();
        assert_eq!(check_condition(&LocalOperator::zero(&space), 1.0, 1.5).unwrap(), 0.0);
        let kp: f64 = 1.5;
        let v = epsilon_value(1e-3, (2.0 * kp).exp(), 1.0, 1.0, kp);
        assert_abs_diff_eq!(v, 4e-3 * (2.0 * kp).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(epsilon_value(1e-3, 5.0, 2.0, 1.0, kp), epsilon_value(1e-3, 5.0, 1.0, 1.0, kp) / 4.0);
        // H0 norm enters as e^{2 kappa'} for unit single-site terms
        let h = &op(&space, &[1], &sp()) * 1e-3;
        assert_abs_diff_eq!(
            check_condition(&h, 1.0, kp).unwrap(),
            1e-3 * (2.0 * kp).exp() * (2.0 * kp).exp() / 0.25,
            epsilon = 1e-12
        );
    }

    #[test]
    fn resolvent_examples() {
        let g = 0.7;
        let space = Space::qubit_chain(1, g).unwrap();
        let rr = reduced_resolvent(&LocalOperator::zero(&space)).unwrap();
        assert_eq!(rr, CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, r(1.0 / g)]));

        let space = Space::qubit_chain(3, 1.0).unwrap();
        let rr = reduced_resolvent(&LocalOperator::zero(&space)).unwrap();
        for idx in 1..8usize {
            assert_abs_diff_eq!(rr[(idx, idx)].re, 1.0 / idx.count_ones() as f64, epsilon = 1e-15);
        }
        let z = op(&space, &[0, 1], &dense::kron(&CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, r(0.2)]), &sx()));
        let f = z.f_part();
        assert!(!f.is_zero());
        let rr = reduced_resolvent(&f).unwrap();
        let k = space.h0().dense_adapted() + f.dense_adapted();
        let mut pbar = dense::identity(8);
        pbar[(0, 0)] = ZERO;
        assert!(max_diff(&(&rr * &k), &pbar) < 1e-12);
        assert!(max_diff(&(&k * &rr), &pbar) < 1e-12);
        assert!(matches!(reduced_resolvent(&op(&space, &[0], &sx())), Err(Error::NotFrustrationFree(_))));
    }

    #[test]
    fn gap_closing_is_reported() {
        let space = Space::qubit_chain(1, 1.0).unwrap();
        let f = LocalOperator::from_core(&space, SectorIndex::neutral(set(&[0])), CMatrix::from_element(1, 1, r(-1.0))).unwrap();
        assert!(matches!(reduced_resolvent(&f), Err(Error::GapClosed(_))));
    }

    #[test]
    fn neumann_examples() {
        let space = Space::qubit_chain(3, 1.0).unwrap();
        let zero = LocalOperator::zero(&space);
        let r0 = reduced_resolvent(&zero).unwrap();
        for k in [0, 3] {
            assert_eq!(resolvent_neumann(&zero, k).unwrap(), r0);
        }
        let f = op(&space, &[1, 2], &dense::kron(&CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, r(0.1)]), &sx())).f_part();
        let n0 = resolvent_neumann(&f, 0).unwrap();
        let n1 = resolvent_neumann(&f, 1).unwrap();
        let bound = dense::op_norm(&(&r0 * f.dense_adapted() * &r0));
        assert!(dense::op_norm(&(&n1 - &n0)) <= bound + 1e-15);
        let exact = reduced_resolvent(&f).unwrap();
        assert!(dense::op_norm(&(resolvent_neumann(&f, 12).unwrap() - exact)) < 1e-8);
    }

    #[test]
    fn generator_examples() {
        let g = 2.0;
        let eps = 0.01;
        let space = Space::qubit_chain(1, g).unwrap();
        let zero = LocalOperator::zero(&space);
        let rr = reduced_resolvent(&zero).unwrap();
        let v = op(&space, &[0], &(sp() * r(eps)));
        let a = build_generator(&v, &rr).unwrap();
        assert!(max_diff(&a.dense(), &(sp() * c(0.0, -eps / g))) < 1e-16);
        let v = op(&space, &[0], &(sx() * r(eps)));
        let a = build_generator(&v, &rr).unwrap();
        let expect = (sp().adjoint() * I - sp() * I) * r(eps / g);
        assert!(max_diff(&a.dense(), &expect) < 1e-16);
        assert!(dense::is_hermitian(&a.dense(), 0.0));
        assert!(build_generator(&zero, &rr).unwrap().is_zero());
        let z = LocalOperator::scalar_op(&space, r(1.0));
        assert!(matches!(build_generator(&z, &rr), Err(Error::NotNonDiagonal(_))));
    }

    #[test]
    fn generator_solves_the_homological_equation() {
        let h = xx_chain(4, 0.05);
        let space = h.space().clone();
        let mut extra = op(&space, &[1, 2], &dense::kron(&sp(), &CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, r(0.03)])));
        extra = &extra + &h;
        let parts = extra.classify();
        let v = parts.v();
        let rr = reduced_resolvent(&parts.f).unwrap();
        let a = build_generator(&v, &rr).unwrap();
        let k = &space.h0() + &parts.f;
        let residual = v.axpy(I, &a.commutator(&k)).v_part();
        assert!(residual.norm_prime(1.0).unwrap() < 1e-9 * v.norm_prime(1.0).unwrap());
    }

    #[test]
    fn single_raising_term_is_removed_in_one_step() {
        let eps = 0.1;
        let space = Space::qubit_chain(1, 1.0).unwrap();
        let h = op(&space, &[0], &(sp() * r(eps)));
        let cfg = FlowConfig::new(h, 1.0, 1.5).unwrap();
        let (next, _) = flow_step(&FlowState::initial(&cfg.perturbation), &cfg).unwrap();
        assert!(next.v.is_zero());
        assert!(next.f.is_zero());
        assert!(next.d.norm() < 1e-16);
        let res = run_flow(&cfg).unwrap();
        assert_eq!(res.transform.len(), 1);
    }

    #[test]
    fn scalar_and_zero_perturbations_converge_immediately() {
        let space = Space::qubit_chain(3, 1.0).unwrap();
        let cst = c(0.3, 0.0);
        let res = run_flow(&FlowConfig::new(LocalOperator::scalar_op(&space, cst), LN_2, LN_2 + 0.5).unwrap()).unwrap();
        assert!(res.converged && res.transform.is_empty());
        assert_eq!(res.d(), cst);
        assert_eq!(res.diagnostics.len(), 1);
        let res = run_flow(&FlowConfig::new(LocalOperator::zero(&space), LN_2, LN_2 + 0.5).unwrap()).unwrap();
        assert!(res.converged && res.state.f.is_zero() && res.d() == ZERO);
        assert_eq!(res.transform.dense(), dense::identity(8));
    }

    #[test]
    fn two_site_step_matches_dense_conjugation() {
        let eps = 1e-2;
        let h = xx_chain(2, eps);
        let cfg = FlowConfig::new(h.clone(), LN_2, LN_2 + 0.5).unwrap();
        let s1 = FlowState::initial(&h);
        let (s2, a) = flow_step(&s1, &cfg).unwrap();
        let hd = s1.hamiltonian().dense_adapted();
        let ad = a.dense_adapted();
        let oracle = dense::expm(&(&ad * I)) * hd * dense::expm(&(&ad * -I));
        assert!(max_diff(&s2.hamiltonian().dense_adapted(), &oracle) < 1e-14);
        let sched = cfg.schedule();
        let v1 = s1.v.norm(sched.kappa_n(2)).unwrap();
        let v2 = s2.v.norm(sched.kappa_n(4)).unwrap();
        assert!(v2 / v1 < 10.0 * eps, "v2/v1 = {}", v2 / v1);
    }

    #[test]
    fn series_mode_agrees_with_dense_mode() {
        let space = Space::qubit_chain(2, 1.0).unwrap();
        let m = dense::kron(&sx(), &sx()) * r(1e-5) + dense::kron(&sp(), &sp()) * c(0.0, 3e-6);
        let h = op(&space, &[0, 1], &m);
        let cfg = FlowConfig::new(h.clone(), LN_2, LN_2 + 1.0).unwrap();
        let s1 = FlowState::initial(&h);
        let (dense_next, _) = flow_step(&s1, &cfg).unwrap();
        let (series_next, _) = flow_step(&s1, &cfg.clone().with_mode(FlowMode::Series)).unwrap();
        assert!(max_diff(&dense_next.hamiltonian().dense(), &series_next.hamiltonian().dense()) < 1e-9);
        let a = run_flow(&cfg).unwrap();
        let b = run_flow(&cfg.clone().with_mode(FlowMode::Series)).unwrap();
        assert!(max_diff(&a.h_final().dense(), &b.h_final().dense()) < 1e-9);
    }

    #[test]
    fn series_mode_rejects_large_generators() {
        let h = xx_chain(4, 1e-3);
        let cfg = FlowConfig::new(h, LN_2, LN_2 + 0.5).unwrap().with_mode(FlowMode::Series);
        assert!(matches!(run_flow(&cfg), Err(Error::GeneratorTooLarge { .. })));
    }

    #[test]
    fn truncated_run_reports_not_converged_and_resumes() {
        let h = xx_chain(3, 1e-2);
        let cfg = FlowConfig::new(h, LN_2, LN_2 + 0.5).unwrap();
        let short = cfg.clone().with_nmax(1);
        assert!(matches!(run_flow(&short), Err(Error::NotConverged { iterations: 1, .. })));
        let mut runner = FlowRunner::new(&short).unwrap();
        runner.run().unwrap();
        let ckpt: Checkpoint = serde_json::from_str(&serde_json::to_string(&runner.checkpoint()).unwrap()).unwrap();
        let mut resumed = FlowRunner::resume(&cfg, &ckpt).unwrap();
        resumed.run().unwrap();
        let full = run_flow(&cfg).unwrap();
        let res = resumed.result().unwrap();
        assert!(res.converged);
        assert_eq!(res.diagnostics, full.diagnostics);
        assert_eq!(res.transform.len(), full.transform.len());
    }

    #[test]
    fn dressing_examples() {
        let h = xx_chain(3, 1e-2);
        let space = h.space().clone();
        let res = run_flow(&FlowConfig::new(h.clone(), LN_2, LN_2 + 0.5).unwrap()).unwrap();
        let one = LocalOperator::identity(&space);
        assert!(res.transform.apply(&one, true).unwrap().max_abs_diff(&one) < 1e-14);
        assert_eq!(DressingTransform::identity(&space).apply(&h, true).unwrap(), h);
        // similarity
        let hf = apply_dressing(&res.transform, &(&space.h0() + &h), true).unwrap();
        assert!(max_diff(&hf.dense(), &res.h_final().dense()) < 1e-12);
        let u = res.transform.dense();
        assert!(max_diff(&(u.adjoint() * &u), &dense::identity(8)) < 1e-12);
    }
}

//! Numerical checks of the flow's structural statements. Each check evaluates the
//! left-hand side with dense linear algebra on the full product space and compares it to
//! the analytic bound, producing a [`CheckReport`].
//!
//! Randomized suites are seeded per instance and evaluated in parallel; the output order
//! does not depend on scheduling.

mod checks;
pub mod random;
mod report;
mod suite;

pub use checks::{
    check_anchored_factor_bound, check_commutator_bound, check_dressing_ground_state, check_exponential_bound,
    check_flow_factors, check_gap, check_generator_bound, check_generator_identity, check_locality,
    check_spectrum_preserved, dense_h0, expand, locality_ratio, spectral_distance, LocalityInstance,
    BOUND_RELATIVE_TOLERANCE, DRESSING_TOLERANCE, GAP_TOLERANCE, IDENTITY_RESIDUAL, SPECTRUM_TOLERANCE,
};
pub use report::{CheckReport, Descriptor};
pub use suite::{all_passed, format_table, run_one, run_suite, summarize, CheckKind, SuiteConfig, SuiteSummary, SUITE_VTOL};

#[cfg(test)]
mod tests {
    use std::f64::consts::LN_2;
    use std::sync::Arc;

    use super::*;
    use crate::dense::{self, c, r, CMatrix, ZERO};
    use crate::error::Error;
    use crate::kamflow::{run_flow, DressingTransform, FlowConfig, FlowRunner};
    use crate::lattice::SiteSet;
    use crate::opalgebra::{LocalOperator, Space};

    fn set(v: &[usize]) -> SiteSet {
        v.iter().copied().collect()
    }

    fn sp() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, r(1.0), ZERO])
    }

    fn sx() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, r(1.0), r(1.0), ZERO])
    }

    fn sz() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[r(1.0), ZERO, ZERO, r(-1.0)])
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
    fn dense_h0_matches_the_sector_form() {
        let mut rng = random::rng_for(3);
        for _ in 0..5 {
            let space = random::random_space(&mut rng, 4);
            let d = dense_h0(&space) - space.h0().dense();
            assert!(dense::op_norm(&d) < 1e-12);
        }
    }

    #[test]
    fn gap_examples() {
        let g = 1.5;
        let space = Space::qubit_chain(3, g).unwrap();
        let rep = check_gap(&LocalOperator::zero(&space), g).unwrap();
        assert!(rep.pass);
        assert!((rep.descriptor.params["rest_min_re"] - g).abs() < 1e-12);

        // (g/2)|1><1| on one site: spectrum {0, 3g/2}
        let single = Space::qubit_chain(1, g).unwrap();
        let up = CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, r(g / 2.0)]);
        let rep = check_gap(&op(&single, &[0], &up), g).unwrap();
        assert!(rep.pass);
        assert!((rep.descriptor.params["rest_min_re"] - 1.5 * g).abs() < 1e-12);

        let v = op(&space, &[0], &sp());
        assert!(matches!(check_gap(&v, g), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn spectrum_examples() {
        let h = (&xx_chain(3, 0.1) + &Space::qubit_chain(3, 1.0).unwrap().h0()).dense();
        let rep = check_spectrum_preserved(&h, &h).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.measured, 0.0);
        let shifted = &h + dense::identity(8) * r(1e-3);
        let rep = check_spectrum_preserved(&h, &shifted).unwrap();
        assert!(!rep.pass);
        assert!((rep.margin + 1e-3).abs() < 1e-12);
        assert!(check_spectrum_preserved(&h, &dense::identity(4)).is_err());
    }

    #[test]
    fn spectral_distance_pairs_multisets() {
        let a = [c(0.0, 1.0), c(0.0, -1.0), r(2.0)];
        let b = [r(2.0), c(0.0, -1.0), c(0.0, 1.0 + 1e-9)];
        assert!((spectral_distance(&a, &b) - 1e-9).abs() < 1e-15);
        let b = [r(2.0), r(2.0), c(0.0, 1.0)];
        assert!(spectral_distance(&a, &b) > 1.0);
    }

    #[test]
    fn generator_bound_examples() {
        let g = 1.0;
        let eps = 0.01;
        let space = Space::qubit_chain(1, g).unwrap();
        let zero = LocalOperator::zero(&space);
        for mu in [0.0, 0.5, 1.2] {
            let v = op(&space, &[0], &(sp() * r(eps)));
            let rep = check_generator_bound(&zero, &v, mu).unwrap();
            let e2mu = (2.0 * mu).exp();
            assert!((rep.measured - eps * e2mu / g).abs() < 1e-15);
            assert!((rep.bound - 32.0 * eps * e2mu / g).abs() < 1e-14);
            assert!(rep.pass);
            let rep = check_generator_bound(&zero, &zero, mu).unwrap();
            assert_eq!(rep.measured, 0.0);
            assert!(rep.pass);
        }
        let big = op(&space, &[0], &CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, r(0.3)]));
        let v = op(&space, &[0], &sp());
        assert!(matches!(check_generator_bound(&big, &v, 0.0), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn generator_identity_holds_on_a_chain() {
        let h = xx_chain(3, 0.05);
        let rep = check_generator_identity(&h.f_part(), &h.v_part(), 0.7).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.measured < 1e-12);
    }

    #[test]
    fn commutator_and_exponential_hypotheses() {
        let space = Space::qubit_chain(2, 1.0).unwrap();
        let a = op(&space, &[0], &sx());
        assert!(matches!(check_commutator_bound(&a, &a, 0.5, 1.0), Err(Error::HypothesisViolated(_))));
        assert!(matches!(check_commutator_bound(&a, &a, 1.0, 1.0), Err(Error::HypothesisViolated(_))));
        let rep = check_commutator_bound(&a, &a, LN_2, LN_2 + 0.5).unwrap();
        assert_eq!(rep.measured, 0.0);
        assert!(matches!(check_exponential_bound(&a, &[a.clone()], LN_2, LN_2 + 0.5), Err(Error::HypothesisViolated(_))));
        let small = a.scale(r(1e-3));
        let b = op(&space, &[0, 1], &dense::kron(&sz(), &sp()));
        let rep = check_exponential_bound(&small, &[b.clone(), a.clone()], LN_2, LN_2 + 0.5).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.measured > 0.0);
        let rep = check_anchored_factor_bound(&small, &b, LN_2, LN_2 + 0.5, 1).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn exponential_series_matches_conjugation_for_constant_b() {
        // sum_k ad_A^k B / k! = e^A B e^{-A} - B
        let space = Space::qubit_chain(2, 1.0).unwrap();
        let a = op(&space, &[0, 1], &(dense::kron(&sx(), &sz()) * c(0.0, 2e-5)));
        let b = op(&space, &[1], &sp());
        let lhs = check_exponential_bound(&a, &[b.clone()], LN_2, LN_2 + 1.0).unwrap();
        let ad = a.dense();
        let conj = dense::expm(&ad) * b.dense() * dense::expm(&(-&ad)) - b.dense();
        let direct = expand(&space, &conj).unwrap().norm(LN_2).unwrap();
        // measured carries the certified tail, capped at a thousandth of the tolerance
        assert!(lhs.measured >= direct * (1.0 - 1e-9));
        assert!(lhs.measured - direct <= 1e-3 * lhs.tolerance + 1e-9 * direct);
    }

    #[test]
    fn dressing_examples() {
        let space = Space::qubit_chain(3, 1.0).unwrap();
        let u = DressingTransform::identity(&space);
        let rep = check_dressing_ground_state(&u, &space.h0()).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.measured, 0.0);

        let h = xx_chain(4, 0.05);
        let space = h.space().clone();
        let cfg = FlowConfig::new(h.clone(), LN_2, LN_2 + 0.5).unwrap();
        let full = run_flow(&cfg).unwrap();
        let rep = check_dressing_ground_state(&full.transform, &(&space.h0() + &h)).unwrap();
        assert!(rep.pass, "{rep:?}");

        let mut runner = FlowRunner::new(&cfg.clone().with_nmax(1)).unwrap();
        runner.run().unwrap();
        let one = runner.result().unwrap();
        let rep = check_dressing_ground_state(&one.transform, &(&space.h0() + &h)).unwrap();
        let deficit = rep.descriptor.params["fidelity_deficit"];
        assert!(deficit > 1e-14 && deficit < 1e-6, "{deficit}");
    }

    #[test]
    fn locality_examples() {
        let mut instances = Vec::new();
        for n in 2..=4 {
            let h = xx_chain(n, 1e-2);
            let space = h.space().clone();
            let res = run_flow(&FlowConfig::new(h, LN_2, LN_2 + 0.5).unwrap()).unwrap();
            let one = LocalOperator::identity(&space);
            let inst = LocalityInstance { transform: res.transform.clone(), x: 0, observables: vec![one] };
            assert!((locality_ratio(&inst, LN_2, LN_2 + 0.5).unwrap() - 1.0).abs() < 1e-12);
            let z = op(&space, &[0], &sz());
            instances.push(LocalityInstance { transform: res.transform.clone(), x: 0, observables: vec![z.clone()] });
            let schedule = crate::kamflow::DecaySchedule::new(LN_2, LN_2 + 0.5).unwrap();
            for rep in check_flow_factors(&res.transform, &z, 0, &schedule).unwrap() {
                assert!(rep.pass, "{rep:?}");
            }
        }
        let rep = check_locality(&instances, LN_2, LN_2 + 0.5, 1e-2).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.descriptor.params.len(), 2 + 3);
    }

    #[test]
    fn suite_passes_and_is_reproducible() {
        let cfg = SuiteConfig { seed: 11, instances: 12, checks: CheckKind::ALL.to_vec(), bound_scale: 1.0 };
        let reports = run_suite(&cfg);
        assert_eq!(reports.len(), 12 * CheckKind::ALL.len());
        for rep in &reports {
            assert!(rep.pass, "{}", rep.to_json_line());
        }
        let summary = summarize(&reports);
        assert_eq!(summary.len(), CheckKind::ALL.len());
        assert!(summary.iter().all(|s| s.total == 12 && s.failed == 0));
        assert!(format_table(&summary).contains("generator_bound"));
        let again = run_suite(&cfg);
        assert_eq!(reports, again);
        let first = &reports[0];
        assert_eq!(run_one(CheckKind::GapStability, first.descriptor.seed.unwrap(), 1.0), *first);
    }

    #[test]
    fn scaled_bounds_force_failures() {
        let cfg = SuiteConfig { seed: 5, instances: 6, checks: vec![CheckKind::GeneratorBound], bound_scale: 1e-6 };
        let reports = run_suite(&cfg);
        assert!(reports.iter().any(|r| r.failed()));
        assert!(reports.iter().filter(|r| r.failed()).all(|r| r.name == "generator_bound"));
    }

    #[test]
    fn reports_round_trip_through_json() {
        let cfg = SuiteConfig { seed: 2, instances: 3, checks: CheckKind::LEMMAS.to_vec(), bound_scale: 1.0 };
        for rep in run_suite(&cfg) {
            let back: CheckReport = serde_json::from_str(&rep.to_json_line()).unwrap();
            assert_eq!(back, rep);
        }
        let skipped = CheckReport::skipped("x", "why", Descriptor::default());
        let back: CheckReport = serde_json::from_str(&skipped.to_json_line()).unwrap();
        assert_eq!(back, skipped);
    }

    #[test]
    fn check_names_parse() {
        for k in CheckKind::ALL {
            assert_eq!(k.name().parse::<CheckKind>().unwrap(), k);
        }
        assert!("lemma_seven".parse::<CheckKind>().is_err());
    }
}

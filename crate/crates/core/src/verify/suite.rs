use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kamflow::{run_flow, FlowConfig};
use crate::opalgebra::LocalOperator;

use super::checks::*;
use super::random::*;
use super::report::CheckReport;

/// The randomized checks, one per statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    GapStability,
    GeneratorIdentity,
    GeneratorBound,
    CommutatorBound,
    ExponentialBound,
    AnchoredFactorBound,
    SpectrumPreserved,
    DressingGroundState,
}

impl CheckKind {
    pub const ALL: [CheckKind; 8] = [
        CheckKind::GapStability,
        CheckKind::GeneratorIdentity,
        CheckKind::GeneratorBound,
        CheckKind::CommutatorBound,
        CheckKind::ExponentialBound,
        CheckKind::AnchoredFactorBound,
        CheckKind::SpectrumPreserved,
        CheckKind::DressingGroundState,
    ];

    /// The six bound and identity checks that are cheap enough for large suites.
    pub const LEMMAS: [CheckKind; 6] = [
        CheckKind::GapStability,
        CheckKind::GeneratorIdentity,
        CheckKind::GeneratorBound,
        CheckKind::CommutatorBound,
        CheckKind::ExponentialBound,
        CheckKind::AnchoredFactorBound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::GapStability => "gap_stability",
            CheckKind::GeneratorIdentity => "generator_identity",
            CheckKind::GeneratorBound => "generator_bound",
            CheckKind::CommutatorBound => "commutator_bound",
            CheckKind::ExponentialBound => "exponential_bound",
            CheckKind::AnchoredFactorBound => "anchored_factor_bound",
            CheckKind::SpectrumPreserved => "spectrum_preserved",
            CheckKind::DressingGroundState => "dressing_ground_state",
        }
    }

    /// The inequality or identity being checked.
    pub fn statement(self) -> &'static str {
        match self {
            CheckKind::GapStability => "spec(H0 + F) \\ {0} has real part > g/2 for |F|_0 < g/2",
            CheckKind::GeneratorIdentity => "V + i V[[A, H0 + F]] = 0",
            CheckKind::GeneratorBound => "|A|_mu <= 8 |V|_mu / (g/4 - |F|_mu)",
            CheckKind::CommutatorBound => "|[A,B]|_mu <= 8 |A|_mu' |B|_mu' / (mu' - mu)",
            CheckKind::ExponentialBound => "|sum_k ad_A^k B^(k)/k!|_mu <= 252 b |A|_mu' / (mu' - mu)",
            CheckKind::AnchoredFactorBound => "|e^{ad_A} B - B|_{mu,x} <= 2 |A|_mu' |B|_{mu',x} / (mu' - mu)",
            CheckKind::SpectrumPreserved => "spec(H_F) = spec(H0 + H')",
            CheckKind::DressingGroundState => "U Omega is the ground state of H0 + H'",
        }
    }

    fn index(self) -> u64 {
        Self::ALL.iter().position(|&k| k == self).expect("listed") as u64
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::schema("check", format!("unknown check `{s}`")))
    }
}

/// A randomized suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Instances per check.
    pub instances: usize,
    pub checks: Vec<CheckKind>,
    /// Multiplies every bound; values below 1 force violations.
    pub bound_scale: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 0, instances: 100, checks: CheckKind::ALL.to_vec(), bound_scale: 1.0 }
    }
}

/// Per-check tally of a suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub check: String,
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
    /// Smallest `bound + tolerance - measured` over non-skipped instances.
    pub worst_margin: f64,
}

fn rescale(report: CheckReport, scale: f64) -> CheckReport {
    if report.skipped || scale == 1.0 {
        return report;
    }
    let bound = report.bound * scale;
    let tolerance = report.tolerance * scale;
    let desc = report.descriptor.param("bound_scale", scale);
    CheckReport::new(&report.name, report.measured, bound, tolerance, desc)
}

/// Convergence tolerance of the randomized flows.
pub const SUITE_VTOL: f64 = 1e-10;

/// Random flow problem; draws the self-adjointness when `self_adjoint` is `None`.
fn flow_instance(rng: &mut ChaCha8Rng, self_adjoint: Option<bool>) -> Result<(FlowConfig, LocalOperator, bool)> {
    let space = random_space(rng, 4);
    let self_adjoint = self_adjoint.unwrap_or_else(|| rng.gen_bool(0.5));
    let kappa = LN_2;
    let kappa_prime = LN_2 + 0.5;
    let raw = if self_adjoint { random_hermitian_operator(&space, rng, 3) } else { random_operator(&space, rng, 3) };
    let target = rng.gen_range(0.005..0.05);
    let hp = scale_to(&raw, kappa_prime, target);
    // rotated frames put the floating-point floor of v_n near 1e-12
    let cfg = FlowConfig::new(hp.clone(), kappa, kappa_prime)?.with_vtol(SUITE_VTOL);
    Ok((cfg, hp, self_adjoint))
}

fn rates(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let mu = LN_2 + rng.gen_range(0.0..1.0);
    let delta = rng.gen_range(0.05..1.0);
    (mu, mu + delta)
}

fn instance(kind: CheckKind, seed: u64) -> Result<CheckReport> {
    let mut rng = rng_for(seed);
    let rng = &mut rng;
    match kind {
        CheckKind::GapStability => {
            let space = random_space(rng, 4);
            let g = space.gap();
            let f = scale_to(&random_frustration_free(&space, rng, 3), 0.0, rng.gen_range(0.0..0.5) * g);
            check_gap(&f, g)
        }
        CheckKind::GeneratorIdentity => {
            let space = random_space(rng, 4);
            let g = space.gap();
            let f = scale_to(&random_frustration_free(&space, rng, 3), 0.0, rng.gen_range(0.0..0.45) * g);
            let v = scale_to(&random_non_diagonal(&space, rng, 3), 0.0, rng.gen_range(0.01..1.0));
            check_generator_identity(&f, &v, rng.gen_range(0.0..2.0))
        }
        CheckKind::GeneratorBound => {
            let space = random_space(rng, 4);
            let g = space.gap();
            let mu = rng.gen_range(0.0..1.5);
            let f = scale_to(&random_frustration_free(&space, rng, 3), mu, rng.gen_range(0.0..0.25) * g);
            let v = scale_to(&random_non_diagonal(&space, rng, 3), mu, rng.gen_range(0.01..1.0));
            check_generator_bound(&f, &v, mu)
        }
        CheckKind::CommutatorBound => {
            let space = random_space(rng, 4);
            let (mu, mu_prime) = rates(rng);
            let a = random_operator(&space, rng, 2);
            let b = random_operator(&space, rng, 2);
            check_commutator_bound(&a, &b, mu, mu_prime)
        }
        CheckKind::ExponentialBound => {
            let space = random_space(rng, 4);
            let (mu, mu_prime) = rates(rng);
            let a = scale_to(&random_operator(&space, rng, 2), mu_prime, rng.gen_range(0.0..1.0) * (mu_prime - mu) / 6.0);
            let bs = [random_operator(&space, rng, 2), random_operator(&space, rng, 2)];
            check_exponential_bound(&a, &bs, mu, mu_prime)
        }
        CheckKind::AnchoredFactorBound => {
            let space = random_space(rng, 4);
            let (mu, mu_prime) = rates(rng);
            let a = scale_to(&random_operator(&space, rng, 2), mu_prime, rng.gen_range(0.0..1.0) * (mu_prime - mu) / 2.0);
            let b = random_operator(&space, rng, 2);
            let x = rng.gen_range(0..space.num_sites());
            check_anchored_factor_bound(&a, &b, mu, mu_prime, x)
        }
        CheckKind::SpectrumPreserved => {
            let (cfg, hp, self_adjoint) = flow_instance(rng, None)?;
            let space = cfg.space().clone();
            let result = run_flow(&cfg)?;
            let h = (&space.h0() + &hp).dense();
            let report = check_spectrum_preserved(&h, &result.h_final().dense())?;
            Ok(CheckReport {
                descriptor: report
                    .descriptor
                    .clone()
                    .param("self_adjoint", f64::from(u8::from(self_adjoint)))
                    .param("steps", result.transform.len() as f64),
                ..report
            })
        }
        CheckKind::DressingGroundState => {
            let (cfg, hp, _) = flow_instance(rng, Some(true))?;
            let space = cfg.space().clone();
            let result = run_flow(&cfg)?;
            check_dressing_ground_state(&result.transform, &(&space.h0() + &hp))
        }
    }
}

/// Runs one randomized instance. Instances violating the hypotheses of the checked
/// statement are reported as skipped; flows that fail to converge are reported as failures.
pub fn run_one(kind: CheckKind, seed: u64, bound_scale: f64) -> CheckReport {
    let mut rng = rng_for(seed);
    let space = random_space(&mut rng, 4);
    let desc = describe(&space, seed);
    let report = match instance(kind, seed) {
        Ok(report) => report,
        Err(Error::HypothesisViolated(why)) => CheckReport::skipped(kind.name(), why, desc.clone()),
        Err(e) => CheckReport::new(kind.name(), 1.0, 0.0, 0.0, desc.clone().note(e.to_string())),
    };
    let mut report = rescale(report, bound_scale);
    report.name = kind.name().to_string();
    let d = &mut report.descriptor;
    d.seed = Some(seed);
    if d.extents.is_empty() {
        d.extents = desc.extents;
        d.local_dims = desc.local_dims;
    }
    report
}

/// All instances of a suite, ordered by check then instance index regardless of scheduling.
pub fn run_suite(cfg: &SuiteConfig) -> Vec<CheckReport> {
    let jobs: Vec<(CheckKind, u64)> = cfg
        .checks
        .iter()
        .flat_map(|&k| (0..cfg.instances as u64).map(move |i| (k, instance_seed(cfg.seed, k.index(), i))))
        .collect();
    jobs.par_iter().map(|&(k, seed)| run_one(k, seed, cfg.bound_scale)).collect()
}

pub fn summarize(reports: &[CheckReport]) -> Vec<SuiteSummary> {
    let mut by_name: BTreeMap<&str, SuiteSummary> = BTreeMap::new();
    let mut order = Vec::new();
    for rep in reports {
        let entry = by_name.entry(&rep.name).or_insert_with(|| {
            order.push(rep.name.clone());
            SuiteSummary {
                check: rep.name.clone(),
                total: 0,
                passed: 0,
                failed: 0,
                skipped: 0,
                worst_margin: f64::MAX,
            }
        });
        entry.total += 1;
        if rep.skipped {
            entry.skipped += 1;
        } else if rep.pass {
            entry.passed += 1;
        } else {
            entry.failed += 1;
        }
        if !rep.skipped {
            entry.worst_margin = entry.worst_margin.min(rep.margin + rep.tolerance);
        }
    }
    order.into_iter().map(|n| by_name.remove(n.as_str()).expect("present")).collect()
}

/// Plain-text table of a summary.
pub fn format_table(summary: &[SuiteSummary]) -> String {
    let mut out = format!(
        "{:<24} {:>7} {:>7} {:>7} {:>7} {:>14}\n",
        "check", "total", "passed", "failed", "skipped", "worst_margin"
    );
    for s in summary {
        let margin = if s.worst_margin == f64::MAX { "-".to_string() } else { format!("{:.6e}", s.worst_margin) };
        out.push_str(&format!(
            "{:<24} {:>7} {:>7} {:>7} {:>7} {:>14}\n",
            s.check, s.total, s.passed, s.failed, s.skipped, margin
        ));
    }
    out
}

/// Whether no report failed.
pub fn all_passed(reports: &[CheckReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

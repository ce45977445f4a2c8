//! Individual checks. Left-hand sides are evaluated with dense linear algebra on the
//! full product space; sector decompositions enter only to evaluate the norms.

use std::f64::consts::LN_2;
use std::sync::Arc;

use num_complex::Complex64;

use crate::dense::{self, CMatrix, I};
use crate::error::{Error, Result};
use crate::kamflow::{build_generator, reduced_resolvent, DecaySchedule, DressingTransform};
use crate::opalgebra::{LocalOperator, Space};

use super::report::{CheckReport, Descriptor};

pub const GAP_TOLERANCE: f64 = 1e-9;
pub const SPECTRUM_TOLERANCE: f64 = 1e-8;
pub const IDENTITY_RESIDUAL: f64 = 1e-9;
pub const DRESSING_TOLERANCE: f64 = 1e-8;
/// Relative slack on the analytic bounds, covering rounding in the norm evaluation.
pub const BOUND_RELATIVE_TOLERANCE: f64 = 1e-9;

fn hypothesis(msg: impl Into<String>) -> Error {
    Error::HypothesisViolated(msg.into())
}

fn base_descriptor(space: &Space) -> Descriptor {
    Descriptor {
        extents: space.volume().extents().to_vec(),
        local_dims: (0..space.num_sites()).map(|x| space.dim(x)).collect(),
        ..Descriptor::default()
    }
}

/// `H0 = sum_x h_x` as a dense matrix in the computational basis, first site most significant.
pub fn dense_h0(space: &Space) -> CMatrix {
    let n = space.num_sites();
    let mut total = CMatrix::zeros(space.full_dim(), space.full_dim());
    for x in 0..n {
        let mut term = dense::identity(1);
        for y in 0..n {
            let factor = if y == x { space.site(y).h().clone() } else { dense::identity(space.dim(y)) };
            term = dense::kron(&term, &factor);
        }
        total += term;
    }
    total
}

/// Full-volume dense matrix (computational basis) as a local operator, without pruning.
pub fn expand(space: &Arc<Space>, m: &CMatrix) -> Result<LocalOperator> {
    let all = space.all_sites();
    LocalOperator::decompose_adapted_unpruned(space, all, &space.to_adapted(all, m))
}

fn spectrum(m: &CMatrix) -> Vec<Complex64> {
    if dense::is_hermitian(m, 1e-12 * m.norm().max(1.0)) {
        dense::hermitian_eigen(&dense::hermitian_part(m)).0.into_iter().map(dense::r).collect()
    } else {
        dense::eigenvalues(m)
    }
}

/// Simple zero eigenvalue of `H0 + F` with the rest of the spectrum at real part above `g/2`.
///
/// `measured = g/2 - min Re(rest)` against bound 0. A zero eigenvalue that is not simple
/// is reported as `measured = g`.
pub fn check_gap(f: &LocalOperator, g: f64) -> Result<CheckReport> {
    let space = f.space();
    let f0 = f.norm(0.0)?;
    let desc = base_descriptor(space).param("g", g).param("f_norm_0", f0);
    if !f.is_frustration_free() {
        return Err(hypothesis("F is not frustration-free"));
    }
    // the boundary case |F|_0 = g/2 is admitted
    if f0 > g / 2.0 * (1.0 + 1e-12) {
        return Err(hypothesis(format!("|F|_0 = {f0:e} exceeds g/2 = {:e}", g / 2.0)));
    }
    let h = dense_h0(space) + f.dense();
    let eigs = spectrum(&h);
    let zeros = eigs.iter().filter(|z| z.norm() < GAP_TOLERANCE).count();
    let i0 = (0..eigs.len()).min_by(|&a, &b| eigs[a].norm().total_cmp(&eigs[b].norm())).expect("nonempty");
    let rest_min =
        eigs.iter().enumerate().filter(|&(i, _)| i != i0).map(|(_, z)| z.re).fold(f64::INFINITY, f64::min);
    let rest_min = if rest_min.is_finite() { rest_min } else { g };
    let measured = g / 2.0 - rest_min;
    let desc = desc.param("rest_min_re", rest_min).param("zero_count", zeros as f64);
    if zeros != 1 {
        let desc = desc.note(format!("eigenvalue 0 has multiplicity {zeros}"));
        return Ok(CheckReport::new("gap_stability", measured.max(g), 0.0, GAP_TOLERANCE, desc));
    }
    Ok(CheckReport::new("gap_stability", measured, 0.0, GAP_TOLERANCE, desc))
}

/// Multiset distance between two spectra by greedy nearest-neighbour pairing in
/// lexicographic order.
pub fn spectral_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut a = a.to_vec();
    dense::sort_lex(&mut a);
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for z in &a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("equal lengths");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

/// Eigenvalues of `h` and `hf` agree as multisets.
pub fn check_spectrum_preserved(h: &CMatrix, hf: &CMatrix) -> Result<CheckReport> {
    if h.shape() != hf.shape() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", h.shape(), hf.shape())));
    }
    let measured = spectral_distance(&spectrum(h), &spectrum(hf));
    let desc = Descriptor::default().param("dim", h.nrows() as f64);
    Ok(CheckReport::new("spectrum_preserved", measured, 0.0, SPECTRUM_TOLERANCE, desc))
}

/// `|A|_mu <= 8 |V|_mu / (g/4 - |F|_mu)` for the generator built from `F` and `V`.
pub fn check_generator_bound(f: &LocalOperator, v: &LocalOperator, mu: f64) -> Result<CheckReport> {
    let space = f.space();
    let g = space.gap();
    let f_mu = f.norm(mu)?;
    let v_mu = v.norm(mu)?;
    if mu < 0.0 {
        return Err(hypothesis("mu must be non-negative"));
    }
    if !f.is_frustration_free() {
        return Err(hypothesis("F is not frustration-free"));
    }
    if !v.is_non_diagonal() {
        return Err(hypothesis("V is not non-diagonal"));
    }
    if f_mu >= g / 4.0 {
        return Err(hypothesis(format!("|F|_mu = {f_mu:e} is not below g/4")));
    }
    let a = build_generator(v, &reduced_resolvent(f)?)?;
    let measured = a.norm(mu)?;
    let bound = 8.0 * v_mu / (g / 4.0 - f_mu);
    let desc = base_descriptor(space).param("mu", mu).param("g", g).param("f_norm", f_mu).param("v_norm", v_mu);
    Ok(CheckReport::new("generator_bound", measured, bound, BOUND_RELATIVE_TOLERANCE * bound, desc))
}

/// `V + i V[[A, H0 + F]] = 0`, measured relative to `|V|_mu`.
pub fn check_generator_identity(f: &LocalOperator, v: &LocalOperator, mu: f64) -> Result<CheckReport> {
    let space = f.space();
    let g = space.gap();
    let f0 = f.norm(0.0)?;
    if !f.is_frustration_free() {
        return Err(hypothesis("F is not frustration-free"));
    }
    if !v.is_non_diagonal() {
        return Err(hypothesis("V is not non-diagonal"));
    }
    if f0 >= g / 2.0 {
        return Err(hypothesis(format!("|F|_0 = {f0:e} is not below g/2")));
    }
    let a = build_generator(v, &reduced_resolvent(f)?)?;
    let k = dense_h0(space) + f.dense();
    let ad = a.dense();
    let c = (&ad * &k - &k * &ad) * I;
    let residual = (v + &expand(space, &c)?.v_part()).norm(mu)?;
    let v_mu = v.norm(mu)?;
    let measured = if v_mu > 0.0 { residual / v_mu } else { residual };
    let desc = base_descriptor(space).param("mu", mu).param("f_norm_0", f0).param("v_norm", v_mu);
    Ok(CheckReport::new("generator_identity", measured, IDENTITY_RESIDUAL, 0.0, desc))
}

fn check_rates(mu: f64, mu_prime: f64) -> Result<()> {
    if mu < LN_2 - 1e-12 {
        return Err(hypothesis(format!("mu = {mu} is below log 2")));
    }
    if mu_prime <= mu {
        return Err(hypothesis("mu' must exceed mu"));
    }
    Ok(())
}

/// `|[A, B]|_mu <= 8 |A|_mu' |B|_mu' / (mu' - mu)`.
pub fn check_commutator_bound(a: &LocalOperator, b: &LocalOperator, mu: f64, mu_prime: f64) -> Result<CheckReport> {
    check_rates(mu, mu_prime)?;
    let space = a.space();
    let a_norm = a.norm(mu_prime)?;
    let b_norm = b.norm(mu_prime)?;
    let comm = dense::commutator(&a.dense(), &b.dense());
    let measured = expand(space, &comm)?.norm(mu)?;
    let bound = 8.0 * a_norm * b_norm / (mu_prime - mu);
    let desc = base_descriptor(space).param("mu", mu).param("mu_prime", mu_prime).param("a_norm", a_norm).param(
        "b_norm", b_norm,
    );
    Ok(CheckReport::new("commutator_bound", measured, bound, BOUND_RELATIVE_TOLERANCE * bound, desc))
}

/// Upper bound on `|X|_mu` for a full-volume matrix from its operator norm: every core entry
/// is a signed sum of at most `2^|Λ|` matrix elements, each core has at most `N^2` entries,
/// at most `4^|Λ|` sectors meet a site and every weight is at most `2|Λ|`.
fn op_to_mu_factor(space: &Space, mu: f64) -> f64 {
    let n = space.num_sites() as f64;
    let dim = space.full_dim() as f64;
    1.0 + 4f64.powf(n) * dim * 2f64.powf(n) * (2.0 * mu * n).exp()
}

/// `|sum_k ad_A^k B^(k) / k!|_mu <= 252 b |A|_mu' / (mu' - mu)` with `B^(k) = bs[(k-1) % len]`.
///
/// The series is summed densely; its tail beyond the last evaluated order is bounded in
/// operator norm and added to the measured value through a crude norm conversion.
pub fn check_exponential_bound(
    a: &LocalOperator,
    bs: &[LocalOperator],
    mu: f64,
    mu_prime: f64,
) -> Result<CheckReport> {
    check_rates(mu, mu_prime)?;
    if mu_prime - mu > 1.0 + 1e-12 {
        return Err(hypothesis("mu' - mu exceeds 1"));
    }
    assert!(!bs.is_empty(), "at least one B is required");
    let space = a.space();
    let a_norm = a.norm(mu_prime)?;
    if a_norm > (mu_prime - mu) / 6.0 {
        return Err(hypothesis(format!("|A|_mu' = {a_norm:e} exceeds (mu' - mu)/6")));
    }
    let mut b = 0.0f64;
    for x in bs {
        b = b.max(x.norm(mu_prime)?);
    }
    let bound = 252.0 * b * a_norm / (mu_prime - mu);

    let ad = a.dense();
    let a_op = dense::op_norm(&ad);
    let bd: Vec<CMatrix> = bs.iter().map(LocalOperator::dense).collect();
    let b_op = bd.iter().map(dense::op_norm).fold(0.0, f64::max);
    let factor = op_to_mu_factor(space, mu);
    let dim = space.full_dim();
    let mut sum = CMatrix::zeros(dim, dim);
    let mut tail = f64::INFINITY;
    let mut k = 0usize;
    // each B^(k) gets its own chain of commutators
    while k < 400 {
        k += 1;
        let mut term = bd[(k - 1) % bd.len()].clone();
        for _ in 0..k {
            term = dense::commutator(&ad, &term);
        }
        let fact: f64 = (1..=k).map(|j| j as f64).product();
        sum += term / dense::r(fact);
        // sum_{j>k} (2|A|)^j b / j! <= t_{k+1} / (1 - 2|A|/(k+2))
        let ratio = 2.0 * a_op / (k as f64 + 2.0);
        let next = (2.0 * a_op).powi(k as i32 + 1) * b_op / (fact * (k as f64 + 1.0));
        tail = if ratio < 1.0 { next / (1.0 - ratio) } else { f64::INFINITY };
        if tail * factor <= 1e-3 * BOUND_RELATIVE_TOLERANCE * bound.max(f64::MIN_POSITIVE) || tail == 0.0 {
            break;
        }
    }
    let measured = expand(space, &sum)?.norm(mu)? + tail * factor;
    let desc = base_descriptor(space)
        .param("mu", mu)
        .param("mu_prime", mu_prime)
        .param("a_norm", a_norm)
        .param("b", b)
        .param("orders", k as f64);
    let measured = if measured.is_finite() { measured } else { f64::MAX };
    Ok(CheckReport::new("exponential_bound", measured, bound, BOUND_RELATIVE_TOLERANCE * bound, desc))
}

/// `|e^{A} B e^{-A} - B|_{mu,x} <= 2 |A|_mu' |B|_{mu',x} / (mu' - mu)`.
pub fn check_anchored_factor_bound(
    a: &LocalOperator,
    b: &LocalOperator,
    mu: f64,
    mu_prime: f64,
    x: usize,
) -> Result<CheckReport> {
    check_rates(mu, mu_prime)?;
    let space = a.space();
    let a_norm = a.norm(mu_prime)?;
    if a_norm > (mu_prime - mu) / 2.0 {
        return Err(hypothesis(format!("|A|_mu' = {a_norm:e} exceeds (mu' - mu)/2")));
    }
    let b_norm = b.norm_anchored(mu_prime, x)?;
    let ad = a.dense();
    let bd = b.dense();
    let conj = dense::expm(&ad) * &bd * dense::expm(&(-&ad)) - &bd;
    let measured = expand(space, &conj)?.norm_anchored(mu, x)?;
    let bound = 2.0 * a_norm * b_norm / (mu_prime - mu);
    let desc = base_descriptor(space)
        .param("mu", mu)
        .param("mu_prime", mu_prime)
        .param("x", x as f64)
        .param("a_norm", a_norm)
        .param("b_norm_x", b_norm);
    Ok(CheckReport::new("anchored_factor_bound", measured, bound, BOUND_RELATIVE_TOLERANCE * bound, desc))
}

/// The factor-by-factor form of the locality estimate along a flow: for every generator
/// `A_k`, conjugation by `e^{iA_k}` of `B = U_{k-1}^{-1} O U_{k-1}` is checked with
/// `mu' = kappa_{2k}` and `mu = kappa_{2k+2}`. Factors violating the hypothesis are skipped.
pub fn check_flow_factors(
    u: &DressingTransform,
    o: &LocalOperator,
    x: usize,
    schedule: &DecaySchedule,
) -> Result<Vec<CheckReport>> {
    let mut reports = Vec::new();
    let mut b = o.clone();
    for (i, a) in u.generators().iter().enumerate() {
        let k = i + 1;
        let ia = a.scale(I);
        let (mu_prime, mu) = (schedule.kappa_n(2 * k), schedule.kappa_n(2 * k + 2));
        let report = match check_anchored_factor_bound(&ia, &b, mu, mu_prime, x) {
            Ok(r) => r,
            Err(Error::HypothesisViolated(why)) => CheckReport::skipped(
                "anchored_factor_bound",
                why,
                base_descriptor(u.space()).param("factor", k as f64),
            ),
            Err(e) => return Err(e),
        };
        reports.push(CheckReport { descriptor: report.descriptor.param("factor", k as f64), ..report });
        b = u.truncated(k).apply(o, true)?;
    }
    Ok(reports)
}

/// `U Omega` is the ground state of the self-adjoint `h` and `U` is unitary.
///
/// `measured = max(1 - |<v0, U Omega>|, |U* U - 1|)`.
pub fn check_dressing_ground_state(u: &DressingTransform, h: &LocalOperator) -> Result<CheckReport> {
    let space = u.space();
    let hd = h.dense();
    let scale = hd.norm().max(1.0);
    if !u.self_adjoint() || !dense::is_hermitian(&hd, 1e-12 * scale) {
        return Err(hypothesis("the flow is not self-adjoint"));
    }
    let (vals, vecs) = dense::hermitian_eigen(&dense::hermitian_part(&hd));
    let v0 = vecs.column(0);
    let um = u.dense();
    let dressed = &um * space.ground(space.all_sites());
    let fidelity = v0.dotc(&dressed).norm();
    let unitarity = dense::op_norm(&(um.adjoint() * &um - dense::identity(um.nrows())));
    let measured = (1.0 - fidelity).max(unitarity);
    let mut desc = base_descriptor(space)
        .param("fidelity_deficit", 1.0 - fidelity)
        .param("unitarity_residual", unitarity)
        .param("generators", u.len() as f64);
    if vals.len() > 1 {
        let split = vals[1] - vals[0];
        desc = desc.param("ground_splitting", split);
        if split < 1e-8 {
            desc = desc.note("ground state is degenerate");
        }
    }
    Ok(CheckReport::new("dressing_ground_state", measured, 0.0, DRESSING_TOLERANCE, desc))
}

/// One volume of a locality scan.
#[derive(Clone, Debug)]
pub struct LocalityInstance {
    pub transform: DressingTransform,
    pub x: usize,
    /// Observables anchored at `x`.
    pub observables: Vec<LocalOperator>,
}

/// `max_O |U^{-1} O U|_{kappa,x} / |O|_{kappa',x}` for one volume.
pub fn locality_ratio(inst: &LocalityInstance, kappa: f64, kappa_prime: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for o in &inst.observables {
        let denom = o.norm_anchored(kappa_prime, inst.x)?;
        if denom == 0.0 {
            continue;
        }
        let dressed = inst.transform.apply(o, true)?;
        worst = worst.max(dressed.norm_anchored(kappa, inst.x)? / denom);
    }
    Ok(worst)
}

/// Volume independence of the locality ratio: beyond the two smallest volumes each ratio
/// may exceed its predecessor by at most the relative tolerance `rel_tol`.
pub fn check_locality(
    instances: &[LocalityInstance],
    kappa: f64,
    kappa_prime: f64,
    rel_tol: f64,
) -> Result<CheckReport> {
    let mut rows: Vec<(usize, f64)> = Vec::with_capacity(instances.len());
    for inst in instances {
        rows.push((inst.transform.space().num_sites(), locality_ratio(inst, kappa, kappa_prime)?));
    }
    rows.sort_by_key(|r| r.0);
    let mut measured: f64 = 0.0;
    for w in rows.windows(2).skip(1) {
        if w[0].1 > 0.0 {
            measured = measured.max(w[1].1 / w[0].1 - 1.0);
        }
    }
    let mut desc = Descriptor::default().param("kappa", kappa).param("kappa_prime", kappa_prime);
    for (n, ratio) in &rows {
        desc = desc.param(&format!("ratio_{n:02}"), *ratio);
    }
    Ok(CheckReport::new("locality", measured, rel_tol, 0.0, desc))
}

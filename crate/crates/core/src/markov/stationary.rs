use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::dense::{self, CMatrix, CVector};
use crate::error::{Error, Result};
use crate::kamflow::{run_flow, FlowResult};
use crate::lattice::SiteSet;
use crate::opalgebra::LocalOperator;

use super::natural::{digits, from_natural, left_multiplication, to_natural};
use super::problem::MarkovProblem;

/// Stationary state obtained from the flow.
#[derive(Clone, Debug)]
pub struct StationaryState {
    /// `rho'(A) = lambda rho(U^{-1} A)`, fixed by `rho'(1) = 1`.
    pub lambda: Complex64,
    /// `rho'` as a linear functional on the natural basis.
    pub functional: CVector,
    /// Density matrix of `rho'`; diagonal with the distribution for classical problems.
    pub density: CMatrix,
    /// The constant of the flow; zero up to rounding because `L(1) = 0`.
    pub d: Complex64,
    /// `|U(1) - U_00 1|`.
    pub identity_residual: f64,
    /// `sup_A |rho((L_0 + F) A)| / |A|`, evaluated densely from `U^{-1} L U`.
    pub annihilation_residual: f64,
    pub flow: FlowResult,
}

/// Runs the flow for `-L` and reads off the stationary state.
pub fn stationary_state_via_flow(problem: &MarkovProblem) -> Result<StationaryState> {
    let cfg = problem.embed_weighted()?;
    let flow = run_flow(&cfg)?;
    let u = flow.transform.dense();
    let ui = flow.transform.inverse_dense();
    let lambda = dense::ONE / ui[(0, 0)];
    let coords = ui.row(0).transpose() * lambda;
    let functional = (coords.transpose() * problem.basis_inverse()).transpose();
    let density = functional_to_density(problem, &functional);

    let u1 = u.column(0);
    let mut unit = CVector::zeros(u1.len());
    unit[0] = u1[0];
    let identity_residual = (u1 - unit).norm();
    let space = cfg.space();
    let l_coords = -(&space.h0() + &cfg.perturbation).dense();
    let conj = &ui * l_coords * &u;
    let annihilation_residual = conj.row(0).norm();
    Ok(StationaryState { lambda, functional, density, d: flow.d(), identity_residual, annihilation_residual, flow })
}

fn functional_to_density(problem: &MarkovProblem, phi: &CVector) -> CMatrix {
    if problem.is_classical() {
        CMatrix::from_diagonal(phi)
    } else {
        // Tr(rho' E_IJ) = rho'_JI
        from_natural(&problem.dims(), phi).transpose()
    }
}

/// Stationary state from the left kernel of the dense generator `l` on the natural basis
/// of sites with dimensions `dims`. Oracle only.
pub fn stationary_state_direct(l: &CMatrix, dims: &[usize], classical: bool) -> Result<CMatrix> {
    let (v, s0, s1) = dense::null_vector(&l.transpose());
    let scale = dense::op_norm(l).max(1.0);
    if s0 > 1e-9 * scale {
        return Err(Error::DegenerateKernel(format!("no stationary state (smallest singular value {s0:.3e})")));
    }
    if s1 < 1e-9 * scale {
        return Err(Error::DegenerateKernel(format!("kernel is not simple (second singular value {s1:.3e})")));
    }
    if classical {
        let total: Complex64 = v.iter().sum();
        Ok(CMatrix::from_diagonal(&(v / total)))
    } else {
        let rho = from_natural(dims, &v).transpose();
        let rho = &rho / rho.trace();
        Ok(dense::hermitian_part(&rho))
    }
}

/// `|a - b|_1 / 2`; the total variation distance for diagonal arguments.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    0.5 * dense::trace_norm(&(a - b))
}

/// `f = (U^{-1})* 1`, adjoint taken in the weighted inner product.
#[derive(Clone, Debug)]
pub struct RnDerivative {
    /// Values `f(sigma)` on configurations.
    pub values: CVector,
    /// Orthonormal coordinates of `f`.
    pub coords: CVector,
    /// `lambda conj(f) = nu'/nu` pointwise.
    pub ratio: CVector,
    /// Whether `Re f > 0` everywhere; reported, not required.
    pub positive: bool,
}

pub fn rn_derivative(problem: &MarkovProblem, st: &StationaryState) -> Result<RnDerivative> {
    if !problem.is_classical() {
        return Err(Error::schema("sites", "the density derivative is defined for classical problems"));
    }
    let ui = st.flow.transform.inverse_dense();
    let coords = ui.row(0).adjoint();
    let values = problem.basis() * &coords;
    let ratio = values.map(|z| st.lambda * z.conj());
    let positive = values.iter().all(|z| z.re > 0.0);
    Ok(RnDerivative { values, coords, ratio, positive })
}

/// `A' = U^{-1} L_A U 1` for an observable `A`.
#[derive(Clone, Debug)]
pub struct Pushforward {
    /// Orthonormal coordinates of `A'`.
    pub coords: CVector,
    /// `A'` split by support, each in the product basis of the excited observables.
    pub terms: BTreeMap<SiteSet, CVector>,
    /// `rho(A')`, equal to `rho'(A)`.
    pub value: Complex64,
    /// `|U^{-1} L_A U|_{kappa,x} / |L_A|_{kappa',x}`.
    pub anchored_ratio: f64,
}

/// Pushes the observable `a` (a joint matrix, or a diagonal for classical problems) through
/// the flow, measuring the anchored norms at site `x`.
pub fn observable_pushforward(problem: &MarkovProblem, st: &StationaryState, a: &CMatrix, x: usize) -> Result<Pushforward> {
    let l_nat = if problem.is_classical() {
        CMatrix::from_diagonal(&a.diagonal())
    } else {
        left_multiplication(&problem.dims(), a)
    };
    let l_coords = problem.basis_inverse() * l_nat * problem.basis();
    let u = &st.flow.transform;
    let ud = u.dense();
    let coords = u.inverse_dense() * &l_coords * ud.column(0);
    let value = coords[0];
    let terms = split_by_support(problem, &coords);

    let space = u.space();
    let la = LocalOperator::decompose(space, space.all_sites(), &l_coords)?;
    let denom = la.norm_anchored(problem.kappa_prime, x)?;
    let numer = u.apply(&la, true)?.norm_anchored(problem.kappa, x)?;
    let anchored_ratio = if denom > 0.0 { numer / denom } else { 0.0 };
    Ok(Pushforward { coords, terms, value, anchored_ratio })
}

/// Product-basis coordinates grouped by the sites carrying a non-identity factor.
pub fn split_by_support(problem: &MarkovProblem, coords: &CVector) -> BTreeMap<SiteSet, CVector> {
    let radices = problem.observable_dims();
    let mut groups: BTreeMap<SiteSet, Vec<(usize, Complex64)>> = BTreeMap::new();
    for (k, &z) in coords.iter().enumerate() {
        let ds = digits(k, &radices);
        let support: SiteSet = ds.iter().enumerate().filter(|(_, &d)| d != 0).map(|(x, _)| x).collect();
        // excited digits run over 1..D^2, stored shifted by one
        let local: Vec<usize> = support.iter().map(|x| ds[x] - 1).collect();
        let local_radices: Vec<usize> = support.iter().map(|x| radices[x] - 1).collect();
        groups.entry(support).or_default().push((super::natural::undigits(&local, &local_radices), z));
    }
    groups
        .into_iter()
        .map(|(s, entries)| {
            let n: usize = s.iter().map(|x| radices[x] - 1).product();
            let mut v = CVector::zeros(n);
            for (i, z) in entries {
                v[i] = z;
            }
            (s, v)
        })
        .collect()
}

/// The term of `coords` on `support`, as a joint matrix over the whole volume (diagonal for
/// classical problems).
pub fn term_matrix(problem: &MarkovProblem, coords: &CVector, support: SiteSet) -> CMatrix {
    let radices = problem.observable_dims();
    let restricted = CVector::from_iterator(
        coords.len(),
        coords.iter().enumerate().map(|(k, &z)| {
            let ds = digits(k, &radices);
            let on: SiteSet = ds.iter().enumerate().filter(|(_, &d)| d != 0).map(|(x, _)| x).collect();
            if on == support {
                z
            } else {
                dense::ZERO
            }
        }),
    );
    let natural = problem.basis() * restricted;
    if problem.is_classical() {
        CMatrix::from_diagonal(&natural)
    } else {
        from_natural(&problem.dims(), &natural)
    }
}

/// `sum_S e^{mu w_x(S)} |A_S|` over the support decomposition, with `|A_{∅}|` unweighted.
pub fn observable_anchored_norm(problem: &MarkovProblem, coords: &CVector, mu: f64, x: usize) -> Result<f64> {
    let mut total = 0.0;
    for (s, v) in split_by_support(problem, coords) {
        let w = if s.is_empty() { 0.0 } else { problem.volume().weight_anchored(s, x)? as f64 };
        total += (mu * w).exp() * v.norm();
    }
    Ok(total)
}

/// Natural coefficients of a joint observable.
pub fn observable_natural(problem: &MarkovProblem, a: &CMatrix) -> CVector {
    if problem.is_classical() {
        a.diagonal()
    } else {
        to_natural(&problem.dims(), a)
    }
}

use crate::dense::{CMatrix, ZERO};
use crate::error::{Error, Result};
use crate::opalgebra::LocalOperator;

/// Reduced resolvent of `H0 + F` at zero, adapted frame on the full volume.
///
/// Satisfies `R (H0 + F) = (H0 + F) R = 1 - |Ω><Ω|`, with `Ω` the first basis vector.
pub fn reduced_resolvent(f: &LocalOperator) -> Result<CMatrix> {
    if !f.is_frustration_free() {
        return Err(Error::NotFrustrationFree(
            "the resolvent input has a scalar or a pure raising/lowering sector".into(),
        ));
    }
    let k = f.space().h0().dense_adapted() + f.dense_adapted();
    reduced_resolvent_of(&k)
}

/// Reduced resolvent of a dense matrix whose first row and column vanish.
pub fn reduced_resolvent_of(k: &CMatrix) -> Result<CMatrix> {
    let n = k.nrows();
    let mut r = CMatrix::zeros(n, n);
    if n <= 1 {
        return Ok(r);
    }
    let block = k.view((1, 1), (n - 1, n - 1)).into_owned();
    let lu = block.clone().full_piv_lu();
    let inv = lu.try_inverse().ok_or_else(|| {
        Error::GapClosed("H0 + F is singular on the complement of the reference state".into())
    })?;
    let residual = (&inv * &block - CMatrix::identity(n - 1, n - 1)).norm();
    if !residual.is_finite() || residual > 1e-8 {
        return Err(Error::GapClosed(format!(
            "H0 + F is numerically singular on the complement of the reference state (inversion residual {residual:.3e})"
        )));
    }
    r.view_mut((1, 1), (n - 1, n - 1)).copy_from(&inv);
    Ok(r)
}

/// Partial sum `sum_{m=0}^{order} R0 (-F R0)^m` with `R0` the reduced resolvent of `H0`.
pub fn resolvent_neumann(f: &LocalOperator, order: usize) -> Result<CMatrix> {
    if !f.is_frustration_free() {
        return Err(Error::NotFrustrationFree(
            "the resolvent input has a scalar or a pure raising/lowering sector".into(),
        ));
    }
    let r0 = reduced_resolvent_of(&f.space().h0().dense_adapted())?;
    let fd = f.dense_adapted();
    let step = -(&fd * &r0);
    let mut term = r0.clone();
    let mut sum = r0.clone();
    for _ in 0..order {
        term = &term * &step;
        sum += &term;
    }
    debug_assert!(sum[(0, 0)] == ZERO);
    Ok(sum)
}

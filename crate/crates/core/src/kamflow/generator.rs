use crate::dense::{CMatrix, I};
use crate::error::{Error, Result};
use crate::opalgebra::LocalOperator;

/// `A = i V-[V R] - i V+[R V]`, with `R` the reduced resolvent in the adapted frame.
pub fn build_generator(v: &LocalOperator, r: &CMatrix) -> Result<LocalOperator> {
    if !v.is_non_diagonal() {
        return Err(Error::NotNonDiagonal(
            "the generator input has a scalar or a mixed/neutral sector".into(),
        ));
    }
    let space = v.space();
    if v.is_zero() {
        return Ok(LocalOperator::zero(space));
    }
    let all = space.all_sites();
    let vd = v.dense_adapted();
    let vr = LocalOperator::decompose_adapted_unpruned(space, all, &(&vd * r))?.v_minus();
    let rv = LocalOperator::decompose_adapted_unpruned(space, all, &(r * &vd))?.v_plus();
    let mut a = vr.scale(I).axpy(-I, &rv);
    a.prune();
    Ok(a)
}

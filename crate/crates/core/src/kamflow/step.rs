use std::sync::Arc;

use num_complex::Complex64;

use crate::dense::{self, CMatrix, I};
use crate::error::{Error, Result};
use crate::opalgebra::{LocalOperator, Space};

use super::config::{FlowConfig, FlowMode};
use super::generator::build_generator;
use super::resolvent::reduced_resolvent_of;

/// `H_n = H0 + d_n + F_n + V_n` together with the remainder `E_n` that produced it.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub n: usize,
    pub d: Complex64,
    pub f: LocalOperator,
    pub v: LocalOperator,
    /// `E_n`; absent for `n = 1`.
    pub e: Option<LocalOperator>,
    /// Accumulated norm removed by the drop threshold.
    pub dropped: f64,
}

impl FlowState {
    pub fn initial(h_prime: &LocalOperator) -> Self {
        let parts = h_prime.classify();
        FlowState { n: 1, d: parts.d, v: parts.v(), f: parts.f, e: None, dropped: h_prime.dropped() }
    }

    pub fn space(&self) -> &Arc<Space> {
        self.f.space()
    }

    /// `H_n - H0`.
    pub fn perturbation(&self) -> LocalOperator {
        let mut p = &self.f + &self.v;
        p.set_scalar(self.d);
        p
    }

    /// `H_n`.
    pub fn hamiltonian(&self) -> LocalOperator {
        &self.space().h0() + &self.perturbation()
    }
}

/// Quantities shared by all steps of one flow.
#[derive(Clone, Debug)]
pub(crate) struct FlowContext {
    pub cfg: FlowConfig,
    pub h0: LocalOperator,
    pub h0_dense: CMatrix,
    pub self_adjoint: bool,
}

impl FlowContext {
    pub fn new(cfg: &FlowConfig) -> Result<Self> {
        cfg.validate()?;
        let space = cfg.space();
        let h0 = space.h0();
        let h0_dense = h0.dense_adapted();
        let self_adjoint = is_self_adjoint(&h0, &cfg.perturbation);
        Ok(FlowContext { cfg: cfg.clone(), h0, h0_dense, self_adjoint })
    }
}

/// Whether `H0 + H'` is Hermitian.
pub fn is_self_adjoint(h0: &LocalOperator, h_prime: &LocalOperator) -> bool {
    let h = (h0 + h_prime).dense_adapted();
    let scale = h.norm().max(1.0);
    dense::is_hermitian(&h, 1e-13 * scale)
}

/// One conjugation `H_{n+1} = e^{iA_n} H_n e^{-iA_n}`; returns the new state and `A_n`.
pub fn flow_step(state: &FlowState, cfg: &FlowConfig) -> Result<(FlowState, LocalOperator)> {
    step(&FlowContext::new(cfg)?, state)
}

pub(crate) fn step(ctx: &FlowContext, state: &FlowState) -> Result<(FlowState, LocalOperator)> {
    let space = state.space().clone();
    let all = space.all_sites();
    let fd = state.f.dense_adapted();
    let k = &ctx.h0_dense + &fd;
    let r = reduced_resolvent_of(&k)?;
    let mut a = build_generator(&state.v, &r)?;
    if ctx.self_adjoint {
        a = (&a + &a.adjoint()).scale(dense::r(0.5));
    }
    let (delta, e) = match ctx.cfg.mode {
        FlowMode::Dense => {
            let ad = a.dense_adapted();
            let h = &k + state.v.dense_adapted() + CMatrix::identity(k.nrows(), k.ncols()) * state.d;
            // e^{iA} H e^{-iA} - H = e^{iA} [H, e^{-iA} - 1], accurate relative to A
            let m = dense::expm_minus_one(&(&ad * (-I)));
            let p = dense::expm(&(&ad * I));
            let delta = p * (&h * &m - &m * &h);
            let c = (&ad * &k - &k * &ad) * I;
            let e = &delta - c;
            (
                LocalOperator::decompose_adapted_unpruned(&space, all, &delta)?,
                LocalOperator::decompose_adapted(&space, all, &e)?,
            )
        }
        FlowMode::Series => series_remainder(ctx, state, &a)?,
    };
    let dparts = delta.classify();
    let f = state.f.axpy(dense::ONE, &dparts.f);
    let v = match ctx.cfg.mode {
        FlowMode::Dense => state.v.axpy(dense::ONE, &dparts.v()),
        FlowMode::Series => dparts.v(),
    };
    let v_before = if ctx.cfg.mode == FlowMode::Dense { state.v.dropped() } else { 0.0 };
    let dropped = state.dropped + (f.dropped() - state.f.dropped()) + (v.dropped() - v_before) + a.dropped();
    let next = FlowState { n: state.n + 1, d: state.d + dparts.d, f, v, e: Some(e), dropped };
    Ok((next, a))
}

/// Series form: returns `(C + E, E)` with `C = i[A, H0 + F]`, where `V_{n+1}` is read off `C + E`
/// after the cancellation of `V_n` against `V[C]`.
fn series_remainder(ctx: &FlowContext, state: &FlowState, a: &LocalOperator) -> Result<(LocalOperator, LocalOperator)> {
    let sched = ctx.cfg.schedule();
    let n = state.n;
    let norm = a.norm(sched.kappa_n(2 * n + 1))?;
    let limit = sched.delta(2 * n + 2).expect("n >= 1") / 6.0;
    if norm > limit {
        return Err(Error::GeneratorTooLarge { norm, limit });
    }
    let k = &ctx.h0 + &state.f;
    let ad = |x: &LocalOperator| a.commutator(x).scale(I);
    let c = ad(&k);
    let mut xc = c.clone();
    let mut xv = state.v.clone();
    let mut e = LocalOperator::zero(state.space());
    let mut fact = 1.0;
    for j in 1..=ctx.cfg.kmax {
        fact *= j as f64;
        xc = ad(&xc);
        xv = ad(&xv);
        let term = xc.scale(dense::r(1.0 / (fact * (j + 1) as f64))).axpy(dense::r(1.0 / fact), &xv);
        e = &e + &term;
        if term.is_zero() || term.norm(0.0)? <= 1e-17 * e.norm(0.0)? {
            break;
        }
    }
    // V_n + V[C] vanishes identically; only V[E] survives
    let mut delta = c.filter(|s| !s.is_pure_plus() && !s.is_pure_minus());
    delta.set_scalar(c.scalar());
    Ok((&delta + &e, e))
}

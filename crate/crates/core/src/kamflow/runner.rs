use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{self, c};
use crate::error::{Error, Result};
use crate::opalgebra::{LocalOperator, OperatorDoc};

use super::config::{check_condition, FlowConfig};
use super::dressing::DressingTransform;
use super::step::{step, FlowContext, FlowState};

/// One line of the per-iteration diagnostics. Norms at step `n` use `kappa_{2n}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub n: usize,
    pub kappa_2n: f64,
    /// `|H'|_{kappa'}` for `n = 1`, `|E_n|` afterwards.
    pub e_n: f64,
    pub f_n: f64,
    pub v_n: f64,
    /// Zero on the final row, where no generator is applied.
    pub a_n: f64,
    /// `d_n / |Λ|`.
    pub d_re: f64,
    pub d_im: f64,
    pub drop_budget: f64,
}

impl DiagnosticsRow {
    pub const CSV_HEADER: &'static str = "n,kappa_2n,e_n,f_n,v_n,a_n,d_re,d_im,drop_budget";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.n, self.kappa_2n, self.e_n, self.f_n, self.v_n, self.a_n, self.d_re, self.d_im, self.drop_budget
        )
    }
}

/// Outcome of a flow run.
#[derive(Clone, Debug)]
pub struct FlowResult {
    pub transform: DressingTransform,
    pub state: FlowState,
    pub diagnostics: Vec<DiagnosticsRow>,
    pub converged: bool,
    pub epsilon_value: f64,
    /// `sum_n |A_n|_kappa`.
    pub sum_a_kappa: f64,
}

impl FlowResult {
    /// `H_F = H0 + d + F + V`, with `V` below tolerance on convergence.
    pub fn h_final(&self) -> LocalOperator {
        self.state.hamiltonian()
    }

    pub fn d(&self) -> Complex64 {
        self.state.d
    }
}

/// Step-by-step driver of the flow, resumable from a [`Checkpoint`].
#[derive(Clone, Debug)]
pub struct FlowRunner {
    ctx: FlowContext,
    state: FlowState,
    generators: Vec<LocalOperator>,
    rows: Vec<DiagnosticsRow>,
    epsilon_value: f64,
    converged: bool,
    finished: bool,
}

impl FlowRunner {
    pub fn new(cfg: &FlowConfig) -> Result<Self> {
        let ctx = FlowContext::new(cfg)?;
        let epsilon_value = check_condition(&cfg.perturbation, cfg.kappa, cfg.kappa_prime)?;
        if epsilon_value > cfg.epsilon_threshold {
            log::warn!(
                "smallness parameter {epsilon_value:.3e} exceeds the admissibility threshold {:.3e}; the flow may still converge",
                cfg.epsilon_threshold
            );
        }
        Ok(FlowRunner {
            state: FlowState::initial(&cfg.perturbation),
            ctx,
            generators: Vec::new(),
            rows: Vec::new(),
            epsilon_value,
            converged: false,
            finished: false,
        })
    }

    pub fn config(&self) -> &FlowConfig {
        &self.ctx.cfg
    }

    pub fn state(&self) -> &FlowState {
        &self.state
    }

    pub fn rows(&self) -> &[DiagnosticsRow] {
        &self.rows
    }

    pub fn generators(&self) -> &[LocalOperator] {
        &self.generators
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn self_adjoint(&self) -> bool {
        self.ctx.self_adjoint
    }

    pub fn epsilon_value(&self) -> f64 {
        self.epsilon_value
    }

    /// Evaluates the diagnostics of the current state and, unless the run ends here,
    /// performs one step. Returns whether a step was taken.
    pub fn advance(&mut self) -> Result<bool> {
        if self.finished {
            return Ok(false);
        }
        let cfg = &self.ctx.cfg;
        let sched = cfg.schedule();
        let n = self.state.n;
        let mu = sched.kappa_n(2 * n);
        let e_n = match &self.state.e {
            None => cfg.perturbation.norm(cfg.kappa_prime)?,
            Some(e) => e.norm(mu)?,
        };
        let f_n = self.state.f.norm(mu)?;
        let v_n = self.state.v.norm(mu)?;
        let volume = self.state.space().num_sites() as f64;
        let mut row = DiagnosticsRow {
            n,
            kappa_2n: mu,
            e_n,
            f_n,
            v_n,
            a_n: 0.0,
            d_re: self.state.d.re / volume,
            d_im: self.state.d.im / volume,
            drop_budget: self.state.dropped,
        };
        if v_n < cfg.vtol {
            self.rows.push(row);
            self.converged = true;
            self.finished = true;
            return Ok(false);
        }
        if self.generators.len() >= cfg.nmax {
            self.rows.push(row);
            self.finished = true;
            return Ok(false);
        }
        let g = self.state.space().gap();
        let f0 = self.state.f.norm(0.0)?;
        if f0 >= g / 4.0 {
            log::warn!("step {n}: |F_n|_0 = {f0:.3e} is not below g/4 = {:.3e}", g / 4.0);
        }
        let (next, a) = step(&self.ctx, &self.state)?;
        row.a_n = a.norm(mu)?;
        self.rows.push(row);
        self.generators.push(a);
        self.state = next;
        Ok(true)
    }

    /// Runs until convergence or until `nmax` steps have been taken.
    pub fn run(&mut self) -> Result<()> {
        while self.advance()? {}
        Ok(())
    }

    pub fn result(&self) -> Result<FlowResult> {
        let kappa = self.ctx.cfg.kappa;
        let mut sum_a_kappa = 0.0;
        for a in &self.generators {
            sum_a_kappa += a.norm(kappa)?;
        }
        Ok(FlowResult {
            transform: DressingTransform::new(self.state.space(), self.generators.clone(), self.ctx.self_adjoint),
            state: self.state.clone(),
            diagnostics: self.rows.clone(),
            converged: self.converged,
            epsilon_value: self.epsilon_value,
            sum_a_kappa,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            n: self.state.n,
            d: [self.state.d.re, self.state.d.im],
            f: self.state.f.to_doc(),
            v: self.state.v.to_doc(),
            e: self.state.e.as_ref().map(LocalOperator::to_doc),
            dropped: self.state.dropped,
            generators: self.generators.iter().map(LocalOperator::to_doc).collect(),
            rows: self.rows.clone(),
            converged: self.converged,
            finished: self.finished,
        }
    }

    /// Restores a runner; `cfg` must describe the same problem as the checkpointed run.
    pub fn resume(cfg: &FlowConfig, ckpt: &Checkpoint) -> Result<Self> {
        let mut runner = Self::new(cfg)?;
        let space = cfg.space();
        if ckpt.n != ckpt.generators.len() + 1 || ckpt.rows.len() != ckpt.generators.len() + usize::from(ckpt.finished) {
            return Err(Error::schema("checkpoint", "inconsistent step count"));
        }
        runner.state = FlowState {
            n: ckpt.n,
            d: c(ckpt.d[0], ckpt.d[1]),
            f: LocalOperator::from_doc(space, &ckpt.f)?,
            v: LocalOperator::from_doc(space, &ckpt.v)?,
            e: ckpt.e.as_ref().map(|d| LocalOperator::from_doc(space, d)).transpose()?,
            dropped: ckpt.dropped,
        };
        runner.generators =
            ckpt.generators.iter().map(|d| LocalOperator::from_doc(space, d)).collect::<Result<_>>()?;
        runner.rows = ckpt.rows.clone();
        runner.converged = ckpt.converged;
        runner.finished = ckpt.finished;
        // a finished run may be continued with a larger step budget
        if runner.finished && !runner.converged && runner.generators.len() < cfg.nmax {
            runner.rows.pop();
            runner.finished = false;
        }
        Ok(runner)
    }
}

/// Serializable snapshot of a [`FlowRunner`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: usize,
    pub d: [f64; 2],
    pub f: OperatorDoc,
    pub v: OperatorDoc,
    pub e: Option<OperatorDoc>,
    pub dropped: f64,
    pub generators: Vec<OperatorDoc>,
    pub rows: Vec<DiagnosticsRow>,
    pub converged: bool,
    pub finished: bool,
}

/// Runs the flow to convergence.
pub fn run_flow(cfg: &FlowConfig) -> Result<FlowResult> {
    let mut runner = FlowRunner::new(cfg)?;
    runner.run()?;
    let result = runner.result()?;
    if !result.converged {
        let residual = result.diagnostics.last().map_or(f64::NAN, |r| r.v_n);
        return Err(Error::NotConverged { iterations: result.transform.len(), residual });
    }
    Ok(result)
}

/// Eigenvalue of `H_F` carried by the reference state, i.e. its ground-ground entry.
pub fn reference_eigenvalue(result: &FlowResult) -> Complex64 {
    result.h_final().dense_adapted()[(0, 0)]
}

/// Whether the disk of radius `radius` around `d` contains exactly one eigenvalue of `h`.
pub fn is_isolated(h: &crate::dense::CMatrix, d: Complex64, radius: f64) -> bool {
    dense::eigenvalues(h).iter().filter(|z| (**z - d).norm() < radius).count() == 1
}

//! C ABI for kamflow.
//!
//! Handles are opaque and owned by the caller, who releases them with the matching
//! `kf_*_free`. Every fallible call returns a [`KfStatus`]; on failure the message is
//! available from [`kf_last_error_message`] on the same thread until the next failing call.
//! Strings returned by the library are released with [`kf_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use kamflow::cli::{parse_config, parse_config_str, Overrides, RunConfig};
use kamflow::dense::CMatrix;
use kamflow::kamflow::{DiagnosticsRow, FlowMode, FlowResult, FlowRunner};
use kamflow::markov::{stationary_state_direct, stationary_state_via_flow, trace_distance};
use kamflow::verify::{run_one, CheckKind};
use kamflow::Error;

/// Outcome of a library call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Lattice = 5,
    GapClosed = 6,
    SectorStructure = 7,
    GeneratorTooLarge = 8,
    NotConverged = 9,
    NotSelfAdjointGenerator = 10,
    IdentityNotAnnihilated = 11,
    DegenerateKernel = 12,
    HypothesisViolated = 13,
    BufferTooSmall = 14,
    Panic = 15,
}

/// Flow mode selector for [`kf_config_set_mode`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KfMode {
    Dense = 0,
    Series = 1,
}

/// Parsed and validated run configuration.
pub struct KfConfig {
    inner: RunConfig,
}

/// Finished flow run.
pub struct KfFlow {
    result: FlowResult,
    self_adjoint: bool,
    num_sites: usize,
}

/// Stationary state of a Markov configuration.
pub struct KfStationary {
    lambda: [f64; 2],
    density: CMatrix,
    distance: f64,
    d: [f64; 2],
    converged: bool,
}

/// One row of the flow diagnostics; see the diagnostics CSV columns.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KfDiagnosticsRow {
    pub n: usize,
    pub kappa_2n: f64,
    pub e_n: f64,
    pub f_n: f64,
    pub v_n: f64,
    pub a_n: f64,
    /// `d_n / |Λ|`.
    pub d_re: f64,
    pub d_im: f64,
    pub drop_budget: f64,
}

impl From<&DiagnosticsRow> for KfDiagnosticsRow {
    fn from(r: &DiagnosticsRow) -> Self {
        KfDiagnosticsRow {
            n: r.n,
            kappa_2n: r.kappa_2n,
            e_n: r.e_n,
            f_n: r.f_n,
            v_n: r.v_n,
            a_n: r.a_n,
            d_re: r.d_re,
            d_im: r.d_im,
            drop_budget: r.drop_budget,
        }
    }
}

/// Numbers of one randomized check.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KfCheckReport {
    pub pass: bool,
    pub skipped: bool,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    pub tolerance: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: KfStatus,
    message: String,
}

impl Failure {
    fn new(status: KfStatus, message: impl Into<String>) -> Self {
        Failure { status, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Schema { .. } | Error::Json { .. } => KfStatus::Config,
            Error::Io(_) => KfStatus::Io,
            Error::SteinerLimitExceeded { .. }
            | Error::InvalidVolume(_)
            | Error::InvalidSiteSpace(_)
            | Error::SupportNotContained { .. }
            | Error::DimensionMismatch(_) => KfStatus::Lattice,
            Error::GapClosed(_) => KfStatus::GapClosed,
            Error::NotFrustrationFree(_) | Error::NotNonDiagonal(_) => KfStatus::SectorStructure,
            Error::GeneratorTooLarge { .. } => KfStatus::GeneratorTooLarge,
            Error::NotConverged { .. } => KfStatus::NotConverged,
            Error::NotSelfAdjointGenerator { .. } => KfStatus::NotSelfAdjointGenerator,
            Error::IdentityNotAnnihilated(_) => KfStatus::IdentityNotAnnihilated,
            Error::DegenerateKernel(_) => KfStatus::DegenerateKernel,
            Error::HypothesisViolated(_) => KfStatus::HypothesisViolated,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> KfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KfStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            KfStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::new(KfStatus::NullPointer, format!("`{what}` is null"))
}

/// # Safety
/// `p` is null or points to a nul-terminated string.
unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(KfStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))
}

/// # Safety
/// `p` is null or points to a live `T` created by this library.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `out` is null or writable.
unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("interior nul removed").into_raw()
}

/// Copies `m` row-major as interleaved `(re, im)` pairs into `buf`, which holds `len` doubles.
///
/// # Safety
/// `buf` is null or valid for `len` writes.
unsafe fn copy_matrix(m: &CMatrix, buf: *mut f64, len: usize) -> Result<(), Failure> {
    let need = 2 * m.nrows() * m.ncols();
    if buf.is_null() {
        return Err(null("buf"));
    }
    if len < need {
        return Err(Failure::new(KfStatus::BufferTooSmall, format!("need {need} doubles, got {len}")));
    }
    let out = std::slice::from_raw_parts_mut(buf, need);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let k = 2 * (i * m.ncols() + j);
            out[k] = z.re;
            out[k + 1] = z.im;
        }
    }
    Ok(())
}

/// Message of the last failing call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn kf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn kf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library; null is ignored.
///
/// # Safety
/// `s` is null or was returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a JSON configuration document.
///
/// # Safety
/// `json` is a nul-terminated string and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_config_parse(json: *const c_char, out: *mut *mut KfConfig) -> KfStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let inner = parse_config_str(text)?;
        write_out(out, Box::into_raw(Box::new(KfConfig { inner })), "out")
    })
}

/// Reads and parses a JSON configuration file.
///
/// # Safety
/// `path` is a nul-terminated string and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_config_load(path: *const c_char, out: *mut *mut KfConfig) -> KfStatus {
    guard(|| {
        let path = read_str(path, "path")?;
        let inner = parse_config(Path::new(path))?;
        write_out(out, Box::into_raw(Box::new(KfConfig { inner })), "out")
    })
}

/// # Safety
/// `cfg` is null or a live configuration.
#[no_mangle]
pub unsafe extern "C" fn kf_config_free(cfg: *mut KfConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn override_config(cfg: *mut KfConfig, o: Overrides) -> KfStatus {
    guard(|| {
        let cfg = cfg.as_mut().ok_or_else(|| null("cfg"))?;
        let mut next = cfg.inner.clone();
        next.apply(&o)?;
        cfg.inner = next;
        Ok(())
    })
}

/// Sets the random seed used by verification runs.
///
/// # Safety
/// `cfg` is a live configuration.
#[no_mangle]
pub unsafe extern "C" fn kf_config_set_seed(cfg: *mut KfConfig, seed: u64) -> KfStatus {
    override_config(cfg, Overrides { seed: Some(seed), ..Default::default() })
}

/// # Safety
/// `cfg` is a live configuration.
#[no_mangle]
pub unsafe extern "C" fn kf_config_set_mode(cfg: *mut KfConfig, mode: KfMode) -> KfStatus {
    let mode = match mode {
        KfMode::Dense => FlowMode::Dense,
        KfMode::Series => FlowMode::Series,
    };
    override_config(cfg, Overrides { mode: Some(mode), ..Default::default() })
}

/// # Safety
/// `cfg` is a live configuration.
#[no_mangle]
pub unsafe extern "C" fn kf_config_set_vtol(cfg: *mut KfConfig, vtol: f64) -> KfStatus {
    override_config(cfg, Overrides { vtol: Some(vtol), ..Default::default() })
}

/// # Safety
/// `cfg` is a live configuration.
#[no_mangle]
pub unsafe extern "C" fn kf_config_set_nmax(cfg: *mut KfConfig, nmax: usize) -> KfStatus {
    override_config(cfg, Overrides { nmax: Some(nmax), ..Default::default() })
}

/// Runs the flow of a `flow` configuration. A run that stops at `nmax` without converging
/// still succeeds; query [`kf_flow_converged`].
///
/// # Safety
/// `cfg` is a live configuration and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_flow_run(cfg: *const KfConfig, out: *mut *mut KfFlow) -> KfStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        let flow_cfg = cfg.inner.flow_config()?;
        let mut runner = FlowRunner::new(&flow_cfg)?;
        runner.run()?;
        let flow = KfFlow {
            result: runner.result()?,
            self_adjoint: runner.self_adjoint(),
            num_sites: flow_cfg.space().num_sites(),
        };
        write_out(out, Box::into_raw(Box::new(flow)), "out")
    })
}

/// # Safety
/// `flow` is null or a live flow.
#[no_mangle]
pub unsafe extern "C" fn kf_flow_free(flow: *mut KfFlow) {
    if !flow.is_null() {
        drop(Box::from_raw(flow));
    }
}

/// # Safety
/// `flow` is a live flow.
#[no_mangle]
pub unsafe extern "C" fn kf_flow_converged(flow: *const KfFlow) -> bool {
    flow.as_ref().is_some_and(|f| f.result.converged)
}

/// # Safety
/// `flow` is a live flow.
#[no_mangle]
pub unsafe extern "C" fn kf_flow_self_adjoint(flow: *const KfFlow) -> bool {
    flow.as_ref().is_some_and(|f| f.self_adjoint)
}

/// Number of conjugation steps applied.
///
/// # Safety
/// `flow` is a live flow.
#[no_mangle]
pub unsafe extern "C" fn kf_flow_steps(flow: *const KfFlow) -> usize {
    flow.as_ref().map_or(0, |f| f.result.transform.len())
}

/// Scalar summaries of a flow: the constant `d`, `d/|Λ|`, `sum_n |A_n|_kappa` and the
/// smallness parameter. Any output pointer may be null.
///
/// # Safety
/// `flow` is a live flow; non-null outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn kf_flow_summary(
    flow: *const KfFlow,
    d_re: *mut f64,
    d_im: *mut f64,
    d_per_site_re: *mut f64,
    sum_a_kappa: *mut f64,
    epsilon_value: *mut f64,
) -> KfStatus {
    guard(|| {
        let flow = handle(flow, "flow")?;
        let d = flow.result.d();
        for (p, v) in [
            (d_re, d.re),
            (d_im, d.im),
            (d_per_site_re, d.re / flow.num_sites as f64),
            (sum_a_kappa, flow.result.sum_a_kappa),
            (epsilon_value, flow.result.epsilon_value),
        ] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

/// Number of diagnostics rows, one per iteration including the final one.
///
/// # Safety
/// `flow` is a live flow.
#[no_mangle]
pub unsafe extern "C" fn kf_flow_num_rows(flow: *const KfFlow) -> usize {
    flow.as_ref().map_or(0, |f| f.result.diagnostics.len())
}

/// # Safety
/// `flow` is a live flow and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_flow_row(flow: *const KfFlow, index: usize, out: *mut KfDiagnosticsRow) -> KfStatus {
    guard(|| {
        let flow = handle(flow, "flow")?;
        let row = flow.result.diagnostics.get(index).ok_or_else(|| {
            Failure::new(KfStatus::InvalidArgument, format!("row {index} out of range"))
        })?;
        write_out(out, row.into(), "out")
    })
}

/// Diagnostics as CSV text with header; release with [`kf_string_free`].
///
/// # Safety
/// `flow` is a live flow and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_flow_diagnostics_csv(flow: *const KfFlow, out: *mut *mut c_char) -> KfStatus {
    guard(|| {
        let flow = handle(flow, "flow")?;
        let mut text = String::from(DiagnosticsRow::CSV_HEADER);
        text.push('\n');
        for r in &flow.result.diagnostics {
            text.push_str(&r.to_csv());
            text.push('\n');
        }
        write_out(out, into_c_string(text), "out")
    })
}

/// Dimension of the full Hilbert space of a flow.
///
/// # Safety
/// `flow` is a live flow.
#[no_mangle]
pub unsafe extern "C" fn kf_flow_dim(flow: *const KfFlow) -> usize {
    flow.as_ref().map_or(0, |f| f.result.transform.space().full_dim())
}

/// Copies the dense final operator `H_F` into `buf` (row-major `(re, im)` pairs, `2 dim^2`
/// doubles).
///
/// # Safety
/// `flow` is a live flow and `buf` is valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn kf_flow_final_operator(flow: *const KfFlow, buf: *mut f64, len: usize) -> KfStatus {
    guard(|| {
        let flow = handle(flow, "flow")?;
        copy_matrix(&flow.result.h_final().dense(), buf, len)
    })
}

/// Runs one randomized check by name (e.g. `"generator_bound"`) from `seed`. `json_out`
/// may be null; otherwise it receives the JSON report, released with [`kf_string_free`].
///
/// # Safety
/// `check` is a nul-terminated string, `out` is writable, `json_out` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn kf_verify_one(
    check: *const c_char,
    seed: u64,
    bound_scale: f64,
    out: *mut KfCheckReport,
    json_out: *mut *mut c_char,
) -> KfStatus {
    guard(|| {
        let kind: CheckKind = read_str(check, "check")?
            .parse()
            .map_err(|e: Error| Failure::new(KfStatus::InvalidArgument, e.to_string()))?;
        if !(bound_scale > 0.0) {
            return Err(Failure::new(KfStatus::InvalidArgument, "bound_scale must be positive"));
        }
        let report = run_one(kind, seed, bound_scale);
        let numbers = KfCheckReport {
            pass: report.pass,
            skipped: report.skipped,
            measured: report.measured,
            bound: report.bound,
            margin: report.margin,
            tolerance: report.tolerance,
        };
        write_out(out, numbers, "out")?;
        if !json_out.is_null() {
            json_out.write(into_c_string(report.to_json_line()));
        }
        Ok(())
    })
}

/// Solves a `markov` configuration through the flow, comparing against a direct kernel solve.
///
/// # Safety
/// `cfg` is a live configuration and `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn kf_markov_run(cfg: *const KfConfig, out: *mut *mut KfStationary) -> KfStatus {
    guard(|| {
        let cfg = handle(cfg, "cfg")?;
        let problem = cfg.inner.markov_problem()?;
        let st = stationary_state_via_flow(&problem)?;
        let direct = stationary_state_direct(&problem.generator_natural(), &problem.dims(), problem.is_classical())?;
        let stationary = KfStationary {
            lambda: [st.lambda.re, st.lambda.im],
            distance: trace_distance(&st.density, &direct),
            d: [st.d.re, st.d.im],
            converged: st.flow.converged,
            density: st.density,
        };
        write_out(out, Box::into_raw(Box::new(stationary)), "out")
    })
}

/// # Safety
/// `st` is null or a live stationary state.
#[no_mangle]
pub unsafe extern "C" fn kf_stationary_free(st: *mut KfStationary) {
    if !st.is_null() {
        drop(Box::from_raw(st));
    }
}

/// `lambda`, the constant `d`, and the trace distance to the direct solve. Any output
/// pointer may be null.
///
/// # Safety
/// `st` is a live stationary state; non-null outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn kf_stationary_summary(
    st: *const KfStationary,
    lambda_re: *mut f64,
    lambda_im: *mut f64,
    d_abs: *mut f64,
    distance: *mut f64,
    converged: *mut bool,
) -> KfStatus {
    guard(|| {
        let st = handle(st, "st")?;
        for (p, v) in [
            (lambda_re, st.lambda[0]),
            (lambda_im, st.lambda[1]),
            (d_abs, st.d[0].hypot(st.d[1])),
            (distance, st.distance),
        ] {
            if !p.is_null() {
                p.write(v);
            }
        }
        if !converged.is_null() {
            converged.write(st.converged);
        }
        Ok(())
    })
}

/// Side length of the stationary density matrix.
///
/// # Safety
/// `st` is a live stationary state.
#[no_mangle]
pub unsafe extern "C" fn kf_stationary_dim(st: *const KfStationary) -> usize {
    st.as_ref().map_or(0, |s| s.density.nrows())
}

/// Copies the density matrix (diagonal for classical problems) into `buf` as row-major
/// `(re, im)` pairs.
///
/// # Safety
/// `st` is a live stationary state and `buf` is valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn kf_stationary_density(st: *const KfStationary, buf: *mut f64, len: usize) -> KfStatus {
    guard(|| copy_matrix(&handle(st, "st")?.density, buf, len))
}

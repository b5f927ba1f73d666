//! C ABI over the mi-splitkit solvers.
//!
//! Problems and results are opaque handles created and freed through this
//! interface. Every entry point returns an [`MiStatus`]; on anything other
//! than `MI_STATUS_OK` the message is available from
//! [`mi_last_error_message`] on the same thread.

use mi_splitkit::cli::{self, Algo, Outcome, SolverArgs};
use mi_splitkit::oplib::ProxEntry;
use mi_splitkit::operator::PointOperator;
use mi_splitkit::problems::{builtin, Instance};
use mi_splitkit::{Error, PointMap, RealVector, ResolventMap};
use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Status codes. The solver outcomes share their values with the CLI exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MiStatus {
    Ok = 0,
    /// Budget, nonconvergence, line-search stall or stagnation.
    Failed = 2,
    Diverged = 3,
    /// Unknown problem, malformed problem JSON or invalid solver parameters.
    ConfigError = 4,
    /// Null pointer, bad length or non-UTF-8 string.
    InvalidArgument = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MiAlgo {
    /// Perturbation outer loop; works for merely monotone problems.
    Pde = 0,
    /// Requires a strong monotonicity modulus `mu > 0`.
    PdeStrong = 1,
    Fbs = 2,
    Frbs = 3,
}

/// Solver parameters. Start from [`mi_params_default`] and override fields.
///
/// Non-positive values of `gamma0`, `delta`, `nu`, `xi`, `rho0`, `tau0`,
/// `zeta` and `sigma` select the library default. `kappa < 0` selects the
/// largest admissible constant, `mu <= 0` uses the problem's modulus, and a
/// zero `max_iters` / `max_f_evals` leaves the default cap in place.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct MiSolverParams {
    pub algo: MiAlgo,
    pub eps: f64,
    pub gamma0: f64,
    pub delta: f64,
    pub nu: f64,
    pub xi: f64,
    pub kappa: f64,
    pub mu: f64,
    pub rho0: f64,
    pub tau0: f64,
    pub zeta: f64,
    pub sigma: f64,
    /// Fixed step for `fbs` / `frbs`; must be positive there.
    pub step: f64,
    pub max_iters: u64,
    pub max_f_evals: u64,
}

/// Opaque problem handle.
pub struct MiProblem {
    inst: Instance,
}

/// Opaque result handle.
pub struct MiResult {
    outcome: Outcome,
    status: MiStatus,
    trace: CString,
}

/// Writes `F(x)` into `out`; both arrays have length `dim`. Return 0 on
/// success and anything else when `x` is outside the domain.
pub type MiOperatorFn =
    Option<unsafe extern "C" fn(user: *mut c_void, x: *const f64, out: *mut f64, dim: usize) -> c_int>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(err: &Error) -> MiStatus {
    match cli::exit_code(err) {
        cli::EXIT_DIVERGED => MiStatus::Diverged,
        cli::EXIT_CONFIG => MiStatus::ConfigError,
        _ => MiStatus::Failed,
    }
}

struct Invalid(String);

enum Fail {
    Arg(Invalid),
    Solver(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Solver(e)
    }
}

impl From<Invalid> for Fail {
    fn from(e: Invalid) -> Self {
        Fail::Arg(e)
    }
}

/// Runs `body` behind `catch_unwind` and turns failures into a status.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> MiStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            MiStatus::Ok
        }
        Ok(Err(Fail::Arg(Invalid(msg)))) => {
            set_last_error(msg);
            MiStatus::InvalidArgument
        }
        Ok(Err(Fail::Solver(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            MiStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, what: &str) -> Result<(), Invalid> {
    if p.is_null() {
        Err(Invalid(format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Invalid> {
    non_null(s, what)?;
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Invalid> {
    non_null(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

fn publish<T>(value: T, out: *mut *mut T) {
    // SAFETY: callers check `out` before building `value`.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn mi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a handle for a built-in problem such as `"cubic_a1"`.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mi_problem_builtin(name: *const c_char, out: *mut *mut MiProblem) -> MiStatus {
    guard(|| {
        non_null(out, "out")?;
        let name = read_str(name, "name")?;
        let name = name.strip_prefix("builtin:").unwrap_or(name);
        publish(MiProblem { inst: builtin(name)? }, out);
        Ok(())
    })
}

/// Creates a handle from the JSON problem format accepted by the CLI.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mi_problem_from_json(json: *const c_char, out: *mut *mut MiProblem) -> MiStatus {
    guard(|| {
        non_null(out, "out")?;
        let text = read_str(json, "json")?;
        publish(MiProblem { inst: cli::problem_file::parse(text, "problem")? }, out);
        Ok(())
    })
}

struct CallbackOperator {
    dim: usize,
    eval: unsafe extern "C" fn(*mut c_void, *const f64, *mut f64, usize) -> c_int,
    user: *mut c_void,
}

// SAFETY: the caller of `mi_problem_from_callback` promises that `eval` may
// be invoked with `user` from whichever thread runs the solve.
unsafe impl Send for CallbackOperator {}
unsafe impl Sync for CallbackOperator {}

impl PointOperator for CallbackOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) -> mi_splitkit::Result<()> {
        // SAFETY: both slices have length `dim`, as the callback contract states.
        let rc = unsafe { (self.eval)(self.user, x.as_ptr(), out.as_mut_ptr(), self.dim) };
        if rc == 0 {
            Ok(())
        } else {
            Err(Error::Domain { point: x.to_vec() })
        }
    }
}

/// Creates a problem `0 ∈ F(x) + N_C(x)` with `F` supplied by a callback and
/// `C = {lo ≤ x ≤ hi}`. Pass null for both bounds to take `C = ℝⁿ`; infinite
/// entries are allowed. `mu` is the strong monotonicity modulus (0 if none).
///
/// # Safety
/// `x0` (and `lo`, `hi` when non-null) must point to `dim` doubles. `eval`
/// must stay callable with `user` until the problem is freed.
#[no_mangle]
pub unsafe extern "C" fn mi_problem_from_callback(
    dim: usize,
    eval: MiOperatorFn,
    user: *mut c_void,
    lo: *const f64,
    hi: *const f64,
    mu: f64,
    x0: *const f64,
    out: *mut *mut MiProblem,
) -> MiStatus {
    guard(|| {
        non_null(out, "out")?;
        let eval = eval.ok_or_else(|| Invalid("eval is null".into()))?;
        if dim == 0 {
            return Err(Error::EmptyVector.into());
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu must be nonnegative, got {mu}")).into());
        }
        let x0 = RealVector::new(read_slice(x0, dim, "x0")?.to_vec())?;
        let entry = match (lo.is_null(), hi.is_null()) {
            (true, true) => ProxEntry::Zero,
            (false, false) => ProxEntry::boxed(
                read_slice(lo, dim, "lo")?.to_vec(),
                read_slice(hi, dim, "hi")?.to_vec(),
            )?,
            _ => return Err(Invalid("lo and hi must both be null or both be set".into()).into()),
        };
        let inst = Instance {
            name: "callback".into(),
            f: PointMap::new(CallbackOperator { dim, eval, user }),
            b: ResolventMap::new(entry),
            mu,
            x0,
            x_star: None,
            oracle: "none".into(),
            layout: None,
            potential: None,
        };
        publish(MiProblem { inst }, out);
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mi_problem_free(problem: *mut MiProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Dimension of the problem, 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mi_problem_dim(problem: *const MiProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.inst.dim())
}

#[no_mangle]
pub extern "C" fn mi_params_default(algo: MiAlgo) -> MiSolverParams {
    MiSolverParams {
        algo,
        eps: 1e-6,
        gamma0: 0.0,
        delta: 0.0,
        nu: 0.0,
        xi: 0.0,
        kappa: -1.0,
        mu: 0.0,
        rho0: 0.0,
        tau0: 0.0,
        zeta: 0.0,
        sigma: 0.0,
        step: 0.0,
        max_iters: 0,
        max_f_evals: 0,
    }
}

fn positive(v: f64) -> Option<f64> {
    (v > 0.0).then_some(v)
}

fn solver_args(p: &MiSolverParams, name: &str) -> SolverArgs {
    SolverArgs {
        problem: name.to_string(),
        algo: match p.algo {
            MiAlgo::Pde => Algo::Pde,
            MiAlgo::PdeStrong => Algo::PdeStrong,
            MiAlgo::Fbs => Algo::Fbs,
            MiAlgo::Frbs => Algo::Frbs,
        },
        eps: p.eps,
        gamma0: positive(p.gamma0),
        delta: positive(p.delta),
        nu: positive(p.nu),
        xi: positive(p.xi),
        kappa: (p.kappa >= 0.0).then_some(p.kappa),
        mu: positive(p.mu),
        rho0: positive(p.rho0),
        tau0: positive(p.tau0),
        zeta: positive(p.zeta),
        sigma: positive(p.sigma),
        step: positive(p.step),
        seed: None,
        max_iters: (p.max_iters > 0).then_some(p.max_iters as usize),
        max_f_evals: (p.max_f_evals > 0).then_some(p.max_f_evals),
    }
}

/// Solves `problem`. A result handle is produced whenever the parameters are
/// valid, including runs that fail to converge; the return value then
/// matches [`mi_result_status`]. Configuration errors produce no handle.
///
/// # Safety
/// `problem` must be a live handle, `params` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mi_solve(
    problem: *const MiProblem,
    params: *const MiSolverParams,
    out: *mut *mut MiResult,
) -> MiStatus {
    let mut solver_status = MiStatus::Ok;
    let status = guard(|| {
        non_null(out, "out")?;
        non_null(problem, "problem")?;
        non_null(params, "params")?;
        let inst = &(*problem).inst;
        let args = solver_args(&*params, &inst.name);
        let outcome = cli::execute(inst, &args)?;
        if let Some(e) = &outcome.error {
            solver_status = status_of(e);
            set_last_error(e.to_string());
        }
        let trace = CString::new(cli::trace_csv(&outcome)).expect("csv has no NUL bytes");
        publish(MiResult { outcome, status: solver_status, trace }, out);
        Ok(())
    });
    if status == MiStatus::Ok && solver_status != MiStatus::Ok {
        // `guard` cleared the message on its way out; restore it.
        let msg = (*out).as_ref().and_then(|r| r.outcome.error.as_ref()).map(ToString::to_string);
        set_last_error(msg.unwrap_or_default());
        return solver_status;
    }
    status
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mi_result_free(result: *mut MiResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mi_result_status(result: *const MiResult) -> MiStatus {
    result.as_ref().map_or(MiStatus::InvalidArgument, |r| r.status)
}

/// Residual `‖v‖` of the final (or best) certificate; NaN when there is none.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mi_result_residual(result: *const MiResult) -> f64 {
    result
        .as_ref()
        .and_then(|r| r.outcome.cert.as_ref())
        .map_or(f64::NAN, |c| c.residual)
}

/// Length of the certificate vectors, 0 when there is no certificate.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mi_result_dim(result: *const MiResult) -> usize {
    result
        .as_ref()
        .and_then(|r| r.outcome.cert.as_ref())
        .map_or(0, |c| c.x.len())
}

unsafe fn copy_cert(
    result: *const MiResult,
    buf: *mut f64,
    len: usize,
    pick: fn(&mi_splitkit::Certificate) -> &RealVector,
) -> MiStatus {
    guard(|| {
        non_null(result, "result")?;
        non_null(buf, "buf")?;
        let cert = (*result)
            .outcome
            .cert
            .as_ref()
            .ok_or_else(|| Invalid("result carries no certificate".into()))?;
        let v = pick(cert).as_slice();
        if len < v.len() {
            return Err(Invalid(format!("buffer holds {len} values, need {}", v.len())).into());
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        Ok(())
    })
}

/// Copies the certificate point `x` into `buf` (at least [`mi_result_dim`] values).
///
/// # Safety
/// `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mi_result_x(result: *const MiResult, buf: *mut f64, len: usize) -> MiStatus {
    copy_cert(result, buf, len, |c| &c.x)
}

/// Copies the certificate vector `v ∈ (F+B)(x)` into `buf`.
///
/// # Safety
/// `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mi_result_v(result: *const MiResult, buf: *mut f64, len: usize) -> MiStatus {
    copy_cert(result, buf, len, |c| &c.v)
}

/// Accepted steps, or outer iterations for `pde`.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mi_result_iterations(result: *const MiResult) -> u64 {
    result.as_ref().map_or(0, |r| r.outcome.iterations as u64)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mi_result_f_evals(result: *const MiResult) -> u64 {
    result.as_ref().map_or(0, |r| r.outcome.counts.f_evals)
}

/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mi_result_resolvent_evals(result: *const MiResult) -> u64 {
    result.as_ref().map_or(0, |r| r.outcome.counts.resolvent_evals)
}

/// Trace in the CLI's CSV format. Owned by the result handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mi_result_trace_csv(result: *const MiResult) -> *const c_char {
    result.as_ref().map_or(ptr::null(), |r| r.trace.as_ptr())
}

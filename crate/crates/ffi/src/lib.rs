//! C ABI over the `nonloc` core.
//!
//! Every function returns a [`NonlocStatus`]; on failure the message is kept
//! per thread and read back with [`nonloc_last_error_message`]. Arrays cross
//! the boundary as values on the closed-domain nodes, left to right.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use nonloc::config::RunConfig;
use nonloc::geometry::{build_grid, Domain};
use nonloc::kernel::KernelSpec;
use nonloc::nonlocal_op::{ApplyPlan, GridFunction, NonlocalOperator};
use nonloc::solver::{self, PicardConfig};
use nonloc::Error;

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NonlocStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Domain = 4,
    Consistency = 5,
    Singular = 6,
    DegenerateFit = 7,
    Io = 8,
    NotConverged = 9,
    Panic = 10,
}

/// Opaque discretized operator on a grid of a 1-D domain.
pub struct NonlocPlan {
    plan: ApplyPlan,
    closure: Vec<usize>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(NonlocStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config(_) => NonlocStatus::Config,
            Error::Domain(_) => NonlocStatus::Domain,
            Error::Consistency(_) => NonlocStatus::Consistency,
            Error::Singular(_) => NonlocStatus::Singular,
            Error::DegenerateFit(_) => NonlocStatus::DegenerateFit,
            Error::Io(_) => NonlocStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(NonlocStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NonlocStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            NonlocStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            NonlocStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(
            NonlocStatus::NullPointer,
            format!("`{name}` is null"),
        ))
    } else {
        Ok(())
    }
}

unsafe fn plan_ref<'a>(plan: *const NonlocPlan) -> Result<&'a NonlocPlan, Failure> {
    non_null(plan, "plan")?;
    Ok(&*plan)
}

unsafe fn input<'a>(
    p: *const f64,
    len: usize,
    plan: &NonlocPlan,
    name: &str,
) -> Result<&'a [f64], Failure> {
    non_null(p, name)?;
    if len != plan.closure.len() {
        return Err(invalid(format!(
            "`{name}` has {len} values, the plan has {} nodes",
            plan.closure.len()
        )));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(
    p: *mut f64,
    len: usize,
    plan: &NonlocPlan,
    name: &str,
) -> Result<&'a mut [f64], Failure> {
    non_null(p, name)?;
    if len != plan.closure.len() {
        return Err(invalid(format!(
            "`{name}` has room for {len} values, the plan has {} nodes",
            plan.closure.len()
        )));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

impl NonlocPlan {
    fn build(spec: KernelSpec, domain: &Domain, h: f64, truncation: f64) -> Result<Self, Failure> {
        let grid = Arc::new(build_grid(domain, h, truncation)?);
        let closure = grid.closure_nodes();
        Ok(Self {
            plan: ApplyPlan::natural(spec, grid)?,
            closure,
        })
    }

    fn lift(&self, values: &[f64]) -> GridFunction {
        let mut u = GridFunction::zeros(self.plan.grid());
        for (&i, &v) in self.closure.iter().zip(values) {
            u.values_mut()[i] = v;
        }
        u
    }

    fn store(&self, u: &GridFunction, out: &mut [f64]) {
        for (o, &i) in out.iter_mut().zip(&self.closure) {
            *o = u.get(i);
        }
    }
}

fn boxed(p: NonlocPlan, out: *mut *mut NonlocPlan) {
    // SAFETY: the caller checked `out` for null
    unsafe { *out = Box::into_raw(Box::new(p)) };
}

/// Message of the last failed call on this thread, empty after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn nonloc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nonloc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds the operator for `K_ε(z) = 1/(ε^{1+2σ} + |z|^{1+2σ})` on `(lower, upper)`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn nonloc_plan_new_zero_order(
    sigma: f64,
    epsilon: f64,
    lower: f64,
    upper: f64,
    h_target: f64,
    truncation_radius: f64,
    out: *mut *mut NonlocPlan,
) -> NonlocStatus {
    guard(|| {
        non_null(out, "out")?;
        let spec = KernelSpec::zero_order(sigma, epsilon)?;
        let domain = Domain::new(vec![(lower, upper)])?;
        boxed(
            NonlocPlan::build(spec, &domain, h_target, truncation_radius)?,
            out,
        );
        Ok(())
    })
}

/// Builds the operator described by the kernel, domain and grid blocks of a TOML run config.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nonloc_plan_from_toml(
    config_toml: *const c_char,
    out: *mut *mut NonlocPlan,
) -> NonlocStatus {
    guard(|| {
        non_null(config_toml, "config_toml")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(config_toml)
            .to_str()
            .map_err(|_| invalid("config is not valid UTF-8"))?;
        let cfg = RunConfig::parse(text, &[])?;
        boxed(
            NonlocPlan::build(
                cfg.kernel,
                &cfg.domain,
                cfg.grid.h_target,
                cfg.grid.truncation_radius,
            )?,
            out,
        );
        Ok(())
    })
}

/// Releases a plan; null is ignored.
///
/// # Safety
/// `plan` must come from a constructor above and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nonloc_plan_free(plan: *mut NonlocPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}

/// Number of closed-domain nodes, the length of every array argument.
///
/// # Safety
/// `plan` must be a live handle and `len` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nonloc_plan_len(plan: *const NonlocPlan, len: *mut usize) -> NonlocStatus {
    guard(|| {
        let p = plan_ref(plan)?;
        non_null(len, "len")?;
        *len = p.closure.len();
        Ok(())
    })
}

/// Writes the node coordinates and, optionally, the grid spacing.
///
/// # Safety
/// `x` must have room for `len` values; `h` may be null.
#[no_mangle]
pub unsafe extern "C" fn nonloc_plan_nodes(
    plan: *const NonlocPlan,
    x: *mut f64,
    len: usize,
    h: *mut f64,
) -> NonlocStatus {
    guard(|| {
        let p = plan_ref(plan)?;
        let x = output(x, len, p, "x")?;
        let g = p.plan.grid();
        for (o, &i) in x.iter_mut().zip(&p.closure) {
            *o = g.x(i);
        }
        if !h.is_null() {
            *h = g.h();
        }
        Ok(())
    })
}

/// Smallest exterior kernel mass over the unknowns.
///
/// # Safety
/// `plan` must be a live handle and `nu0` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nonloc_plan_nu0(plan: *const NonlocPlan, nu0: *mut f64) -> NonlocStatus {
    guard(|| {
        let p = plan_ref(plan)?;
        non_null(nu0, "nu0")?;
        *nu0 = p.plan.nu0();
        Ok(())
    })
}

/// Applies the operator to `u` given on the closed domain (zero outside).
///
/// # Safety
/// `u` and `out` must each hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn nonloc_plan_apply(
    plan: *const NonlocPlan,
    u: *const f64,
    len: usize,
    out: *mut f64,
) -> NonlocStatus {
    guard(|| {
        let p = plan_ref(plan)?;
        let u = p.lift(input(u, len, p, "u")?);
        let out = output(out, len, p, "out")?;
        let all = p.plan.apply_all(&u);
        for (o, &i) in out.iter_mut().zip(&p.closure) {
            *o = all[i];
        }
        Ok(())
    })
}

/// Solves `-I[u] = f` with a dense factorization.
///
/// # Safety
/// `f` and `u` must each hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn nonloc_solve_direct(
    plan: *const NonlocPlan,
    f: *const f64,
    len: usize,
    u: *mut f64,
) -> NonlocStatus {
    guard(|| {
        let p = plan_ref(plan)?;
        let f = p.lift(input(f, len, p, "f")?);
        let out = output(u, len, p, "u")?;
        p.store(&solver::solve_direct(&p.plan, &f)?, out);
        Ok(())
    })
}

/// Solves `-I[u] = f` by damped fixed-point iteration with the default step.
/// Returns `NotConverged` with `u` holding the last iterate when `max_iter` runs out.
///
/// # Safety
/// `f` and `u` must each hold `len` values; `iterations` may be null.
#[no_mangle]
pub unsafe extern "C" fn nonloc_solve_picard(
    plan: *const NonlocPlan,
    f: *const f64,
    len: usize,
    tol: f64,
    max_iter: usize,
    u: *mut f64,
    iterations: *mut usize,
) -> NonlocStatus {
    guard(|| {
        let p = plan_ref(plan)?;
        let f = p.lift(input(f, len, p, "f")?);
        let out = output(u, len, p, "u")?;
        let cfg = PicardConfig {
            step: None,
            tol,
            max_iter,
        };
        let (sol, report) = solver::solve_picard(&p.plan, &f, &cfg)?;
        p.store(&sol, out);
        if !iterations.is_null() {
            *iterations = report.iterations;
        }
        if report.converged {
            Ok(())
        } else {
            Err(Failure(
                NonlocStatus::NotConverged,
                format!(
                    "residual {:.3e} after {} iterations",
                    report.final_residual, report.iterations
                ),
            ))
        }
    })
}

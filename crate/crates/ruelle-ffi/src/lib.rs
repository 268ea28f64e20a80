//! C ABI over the core toolkit.
//!
//! Handles returned through out-pointers are owned by the caller and
//! released with the matching `_free` (frees accept null). Every entry
//! point returns a [`RuelleStatus`]; on anything but OK a description is
//! stored per thread and read back with [`ruelle_last_error`]. Panics do
//! not unwind across the boundary: they are caught and reported as the
//! PANIC status.
//!
//! The header `include/ruelle.h` is generated from this file at build
//! time.

use std::any::Any;
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use ruelle::cli::{build_potential, PotentialSpec};
use ruelle::configuration::Configuration;
use ruelle::kernels::{kernel_value, CylinderSet, KernelOptions, Observable, SamplingPlan};
use ruelle::potential::Potential;
use ruelle::space::{StateSpace, Weighting};
use ruelle::transfer::{pressure_trace, rpf_solve, RpfSolution};
use ruelle::RuelleError;

/// Outcome of a call. Anything but OK leaves a message readable through
/// `ruelle_last_error`.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RuelleStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    Utf8 = 2,
    /// The arguments describe something the library refuses: unknown
    /// potential name, symbol out of range, nonpositive tolerance, a
    /// potential incompatible with the space, and so on.
    InvalidArgument = 3,
    /// Exact enumeration would exceed the term cap and sampling was not
    /// requested.
    CapExceeded = 4,
    /// A caller-supplied buffer is shorter than the data it must receive.
    BufferTooSmall = 5,
    /// A panic was caught at the boundary. The process is intact but the
    /// call did nothing.
    Panic = 6,
}

/// Branch weighting of the operator sums.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RuelleWeighting {
    /// Weight each preimage branch by the alphabet weights.
    Probability = 0,
    /// Plain sums over preimages.
    Counting = 1,
}

impl RuelleWeighting {
    fn lift(self) -> Weighting {
        match self {
            RuelleWeighting::Probability => Weighting::Probability,
            RuelleWeighting::Counting => Weighting::Counting,
        }
    }
}

/// Opaque handle: finite alphabet with branch weights.
pub struct RuelleSpace(StateSpace);

/// Opaque handle: a potential, reusable across calls on the space it was
/// built against.
pub struct RuellePotential(Potential);

/// Opaque handle: Perron eigendata of a finite-memory transfer matrix.
pub struct RuelleRpf {
    sol: RpfSolution,
    h_values: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn remember(msg: String) {
    let clean = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = clean);
}

fn fail(status: RuelleStatus, msg: impl Into<String>) -> RuelleStatus {
    remember(msg.into());
    status
}

fn lowered(e: &RuelleError) -> RuelleStatus {
    let status = match e {
        RuelleError::CapExceeded { .. } => RuelleStatus::CapExceeded,
        _ => RuelleStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn panic_text(payload: &(dyn Any + Send)) -> &str {
    if let Some(s) = payload.downcast_ref::<&str>() {
        s
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s
    } else {
        "opaque payload"
    }
}

fn shield(body: impl FnOnce() -> Result<(), RuelleStatus>) -> RuelleStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => RuelleStatus::Ok,
        Ok(Err(status)) => status,
        Err(p) => fail(RuelleStatus::Panic, format!("caught panic: {}", panic_text(&*p))),
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, RuelleStatus> {
    if p.is_null() {
        Err(fail(RuelleStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(&*p)
    }
}

unsafe fn view<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], RuelleStatus> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(fail(RuelleStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, RuelleStatus> {
    if p.is_null() {
        return Err(fail(RuelleStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(RuelleStatus::Utf8, format!("{what} is not valid utf-8")))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), RuelleStatus> {
    if out.is_null() {
        return Err(fail(RuelleStatus::NullPointer, format!("{what} is null")));
    }
    out.write(value);
    Ok(())
}

/// Library version as a static nul-terminated string. Never freed.
#[no_mangle]
pub extern "C" fn ruelle_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent failing call on this thread, empty when
/// nothing failed yet. The pointer stays valid until the next failing
/// call on the same thread; copy it out if it must outlive that.
#[no_mangle]
pub extern "C" fn ruelle_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds a finite alphabet. `labels` holds `n_labels` nul-terminated
/// strings; numeric labels (like "-1") denote their own coordinate value.
/// `weights` is either null (uniform) or `n_labels` strictly positive
/// entries, normalized internally.
///
/// # Safety
/// `labels` must point to `n_labels` valid C strings, `weights` to
/// `n_labels` doubles when non-null, and `out` must be writable. The
/// returned handle is released with `ruelle_space_free`.
#[no_mangle]
pub unsafe extern "C" fn ruelle_space_new_finite(
    labels: *const *const c_char,
    n_labels: usize,
    weights: *const f64,
    out: *mut *mut RuelleSpace,
) -> RuelleStatus {
    shield(|| {
        let raw = view(labels, n_labels, "labels")?;
        let mut names = Vec::with_capacity(raw.len());
        for (i, &p) in raw.iter().enumerate() {
            names.push(text(p, &format!("labels[{i}]"))?);
        }
        let weights = if weights.is_null() {
            None
        } else {
            Some(view(weights, n_labels, "weights")?)
        };
        let space = StateSpace::make_finite_alphabet(&names, weights).map_err(|e| lowered(&e))?;
        put(out, Box::into_raw(Box::new(RuelleSpace(space))), "out")
    })
}

/// Number of symbols in the alphabet.
///
/// # Safety
/// `space` must be a live handle from `ruelle_space_new_finite` and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ruelle_space_symbol_count(
    space: *const RuelleSpace,
    out: *mut usize,
) -> RuelleStatus {
    shield(|| {
        let space = deref(space, "space")?;
        put(out, space.0.n(), "out")
    })
}

/// Releases a space handle. Null is a no-op.
///
/// # Safety
/// `space` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ruelle_space_free(space: *mut RuelleSpace) {
    if !space.is_null() {
        drop(Box::from_raw(space));
    }
}

/// Builds a potential by registry name ("constant", "single_site",
/// "ising", "finite_range", "long_range", "double_hofbauer"). Scalar
/// parameters arrive as parallel `param_names` / `param_values` arrays;
/// `finite_range` additionally takes its coefficient `table`
/// (lexicographic over the window), which must be null for every other
/// name. The potential is validated against `space` before it is handed
/// out.
///
/// # Safety
/// `name` and the `n_params` entries of `param_names` must be valid C
/// strings, `param_values` must hold `n_params` doubles, `table` must be
/// null or hold `table_len` doubles, and `out` must be writable. The
/// returned handle is released with `ruelle_potential_free`.
#[no_mangle]
pub unsafe extern "C" fn ruelle_potential_new(
    space: *const RuelleSpace,
    name: *const c_char,
    param_names: *const *const c_char,
    param_values: *const f64,
    n_params: usize,
    table: *const f64,
    table_len: usize,
    out: *mut *mut RuellePotential,
) -> RuelleStatus {
    shield(|| {
        let space = deref(space, "space")?;
        let name = text(name, "name")?.to_string();
        let keys = view(param_names, n_params, "param_names")?;
        let values = view(param_values, n_params, "param_values")?;
        let mut params = BTreeMap::new();
        for (i, (&k, &v)) in keys.iter().zip(values).enumerate() {
            params.insert(text(k, &format!("param_names[{i}]"))?.to_string(), v);
        }
        let table = if table.is_null() {
            None
        } else {
            Some(view(table, table_len, "table")?.to_vec())
        };
        let spec = PotentialSpec { name, params, table };
        let f = build_potential(&spec, &space.0).map_err(|e| lowered(&e))?;
        put(out, Box::into_raw(Box::new(RuellePotential(f))), "out")
    })
}

/// Releases a potential handle. Null is a no-op.
///
/// # Safety
/// `potential` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ruelle_potential_free(potential: *mut RuellePotential) {
    if !potential.is_null() {
        drop(Box::from_raw(potential));
    }
}

/// Finite-depth pressure estimates `p_n` for n = 1..=n_max at the base
/// point written as `base_prefix` followed by the constant symbol
/// `base_pad`. The operator uses the potential truncated to memory `m + 1`
/// with tail symbol `trunc_pad`. `entries` receives `n_max` values (its
/// capacity `entries_len` must be at least `n_max`); `final_estimate` may
/// be null when only the trace is wanted.
///
/// # Safety
/// Handles must be live, `base_prefix` must hold `prefix_len` entries,
/// and `entries` must have room for `entries_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ruelle_pressure_trace(
    space: *const RuelleSpace,
    potential: *const RuellePotential,
    weighting: RuelleWeighting,
    base_prefix: *const usize,
    prefix_len: usize,
    base_pad: usize,
    n_max: usize,
    m: usize,
    trunc_pad: usize,
    entries: *mut f64,
    entries_len: usize,
    final_estimate: *mut f64,
) -> RuelleStatus {
    shield(|| {
        let space = deref(space, "space")?;
        let f = deref(potential, "potential")?;
        if entries.is_null() {
            return Err(fail(RuelleStatus::NullPointer, "entries is null"));
        }
        if entries_len < n_max {
            return Err(fail(
                RuelleStatus::BufferTooSmall,
                format!("entries holds {entries_len} slots, trace needs {n_max}"),
            ));
        }
        let base = Configuration::from_prefix(view(base_prefix, prefix_len, "base_prefix")?.to_vec(), base_pad);
        let trace = pressure_trace(&space.0, weighting.lift(), &f.0, n_max, &base, m, trunc_pad)
            .map_err(|e| lowered(&e))?;
        for (i, &(_, p)) in trace.entries.iter().enumerate() {
            entries.add(i).write(p);
        }
        if !final_estimate.is_null() {
            final_estimate.write(trace.final_estimate);
        }
        Ok(())
    })
}

/// Solves for the Perron eigendata of the transfer matrix. With `m` = 0
/// the potential must already have finite memory; with `m` > 0 it is
/// first truncated to memory `m` with tail symbol `trunc_pad`. Tolerance
/// must be positive; `max_iter` caps the power iteration. Non-convergence
/// is not an error: the handle carries a flag for it.
///
/// # Safety
/// Handles must be live and `out` writable. The returned handle is
/// released with `ruelle_rpf_free`.
#[no_mangle]
pub unsafe extern "C" fn ruelle_rpf_solve(
    space: *const RuelleSpace,
    potential: *const RuellePotential,
    weighting: RuelleWeighting,
    m: usize,
    trunc_pad: usize,
    tol: f64,
    max_iter: usize,
    out: *mut *mut RuelleRpf,
) -> RuelleStatus {
    shield(|| {
        let space = deref(space, "space")?;
        let f = deref(potential, "potential")?;
        let f_eff = if m == 0 {
            f.0.clone()
        } else {
            f.0.truncate_local(&space.0, m, trunc_pad).map_err(|e| lowered(&e))?
        };
        let sol = rpf_solve(&space.0, weighting.lift(), &f_eff, tol, max_iter)
            .map_err(|e| lowered(&e))?;
        let lin = sol.h.to_linear().map_err(|e| lowered(&e))?;
        let h_values: Vec<f64> = (0..lin.len()).map(|i| lin.value(i)).collect();
        put(out, Box::into_raw(Box::new(RuelleRpf { sol, h_values })), "out")
    })
}

/// Perron eigenvalue.
///
/// # Safety
/// `rpf` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ruelle_rpf_lambda(rpf: *const RuelleRpf, out: *mut f64) -> RuelleStatus {
    shield(|| {
        let r = deref(rpf, "rpf")?;
        put(out, r.sol.lambda, "out")
    })
}

/// log of the Perron eigenvalue (the finite-memory pressure).
///
/// # Safety
/// `rpf` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ruelle_rpf_log_lambda(
    rpf: *const RuelleRpf,
    out: *mut f64,
) -> RuelleStatus {
    shield(|| {
        let r = deref(rpf, "rpf")?;
        put(out, r.sol.log_lambda, "out")
    })
}

/// Whether the power iteration met its tolerance within `max_iter`.
///
/// # Safety
/// `rpf` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ruelle_rpf_converged(
    rpf: *const RuelleRpf,
    out: *mut bool,
) -> RuelleStatus {
    shield(|| {
        let r = deref(rpf, "rpf")?;
        put(out, r.sol.converged, "out")
    })
}

/// Number of grid words the eigenvectors live on (alphabet size to the
/// power of the effective memory).
///
/// # Safety
/// `rpf` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ruelle_rpf_grid_len(
    rpf: *const RuelleRpf,
    out: *mut usize,
) -> RuelleStatus {
    shield(|| {
        let r = deref(rpf, "rpf")?;
        put(out, r.sol.nu.len(), "out")
    })
}

/// Copies the right eigenfunction h over the grid words in lexicographic
/// order, normalized so that sum(nu * h) = 1.
///
/// # Safety
/// `rpf` must be a live handle and `buf` must have room for `len`
/// doubles; `len` must be at least the grid length.
#[no_mangle]
pub unsafe extern "C" fn ruelle_rpf_copy_h(
    rpf: *const RuelleRpf,
    buf: *mut f64,
    len: usize,
) -> RuelleStatus {
    shield(|| copy_out(deref(rpf, "rpf")?.h_values.as_slice(), buf, len))
}

/// Copies the left eigenvector nu (a probability vector over the grid
/// words in lexicographic order).
///
/// # Safety
/// `rpf` must be a live handle and `buf` must have room for `len`
/// doubles; `len` must be at least the grid length.
#[no_mangle]
pub unsafe extern "C" fn ruelle_rpf_copy_nu(
    rpf: *const RuelleRpf,
    buf: *mut f64,
    len: usize,
) -> RuelleStatus {
    shield(|| copy_out(deref(rpf, "rpf")?.sol.nu.as_slice(), buf, len))
}

unsafe fn copy_out(data: &[f64], buf: *mut f64, len: usize) -> Result<(), RuelleStatus> {
    if buf.is_null() {
        return Err(fail(RuelleStatus::NullPointer, "buf is null"));
    }
    if len < data.len() {
        return Err(fail(
            RuelleStatus::BufferTooSmall,
            format!("buffer holds {len} slots, eigenvector needs {}", data.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
    Ok(())
}

/// Releases an eigendata handle. Null is a no-op.
///
/// # Safety
/// `rpf` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn ruelle_rpf_free(rpf: *mut RuelleRpf) {
    if !rpf.is_null() {
        drop(Box::from_raw(rpf));
    }
}

/// Conditional-expectation kernel `K_n` of a cylinder indicator at the
/// boundary written as `prefix` then the constant symbol `pad`. The
/// indicator fixes `symbols[i]` at coordinate `coords[i]` (1-based,
/// strictly increasing). `cap` bounds exact enumeration (0 picks the
/// library default); when `use_sampling` is set the value is estimated by
/// seeded stratified sampling with `samples` draws (0 picks the default)
/// and `stderr_out`, when non-null, receives the delta-method standard
/// error (NaN for exact evaluation).
///
/// # Safety
/// Handles must be live; `coords` and `symbols` must hold `n_constraints`
/// entries, `prefix` must hold `prefix_len` entries, and `value_out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn ruelle_kernel_indicator(
    space: *const RuelleSpace,
    potential: *const RuellePotential,
    weighting: RuelleWeighting,
    n: usize,
    coords: *const usize,
    symbols: *const usize,
    n_constraints: usize,
    prefix: *const usize,
    prefix_len: usize,
    pad: usize,
    cap: usize,
    use_sampling: bool,
    seed: u64,
    samples: usize,
    value_out: *mut f64,
    stderr_out: *mut f64,
) -> RuelleStatus {
    shield(|| {
        let space = deref(space, "space")?;
        let f = deref(potential, "potential")?;
        let coords = view(coords, n_constraints, "coords")?;
        let symbols = view(symbols, n_constraints, "symbols")?;
        let constraints: Vec<(usize, usize)> =
            coords.iter().copied().zip(symbols.iter().copied()).collect();
        let set = CylinderSet::new(constraints).map_err(|e| lowered(&e))?;
        let x = Configuration::from_prefix(view(prefix, prefix_len, "prefix")?.to_vec(), pad);
        let mut opts = KernelOptions::default();
        if cap > 0 {
            opts.cap = cap;
        }
        if use_sampling {
            let samples = if samples == 0 { 1 << 16 } else { samples };
            opts.sampling = Some(SamplingPlan { seed, samples });
            opts.force_sampling = true;
        }
        let kv = kernel_value(
            &space.0,
            weighting.lift(),
            &f.0,
            n,
            &Observable::Indicator(set),
            &x,
            &opts,
        )
        .map_err(|e| lowered(&e))?;
        put(value_out, kv.value, "value_out")?;
        if !stderr_out.is_null() {
            stderr_out.write(kv.stderr.unwrap_or(f64::NAN));
        }
        Ok(())
    })
}

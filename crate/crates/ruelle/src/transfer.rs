//! The Ruelle operator on memory-m function grids: single application,
//! log-domain iteration, pressure traces, and Perron eigendata for
//! finite-memory potentials.
//!
//! Evaluating f(a.x) on a memory-m grid reads at most m+1 coordinates and
//! then the pad, so every grid operation here is the exact operator of the
//! pad-truncated potential f_{m+1}. The truncation gap is attached to
//! pressure results so the Lipschitz bound |p(f) - p(g)| <= ||f - g||_inf
//! can be applied by the caller.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::configuration::{word_count, BufView, Configuration, CoordView};
use crate::error::{Result, RuelleError};
use crate::potential::Potential;
use crate::space::{StateSpace, Weighting};
use crate::util::log_add_exp;

/// Grid size at which apply/matvec switch to per-slot parallelism. Each
/// output slot sums in fixed symbol order, so thread count never changes
/// results.
const PAR_GRID_MIN: usize = 4096;

/// Longest explicit word buffer a grid evaluation can need (m+1 with
/// N^m below the enumeration cap keeps m far smaller than this).
const MAX_WINDOW: usize = 64;

/// Dense real values over the N^m words of the first m coordinates,
/// lexicographic with the first coordinate most significant. `scale` is
/// the log-domain marker: when present the function is
/// `exp(values[w] + scale)`.
#[derive(Clone, Debug)]
pub struct CylinderFunction {
    memory: usize,
    n_symbols: usize,
    values: Vec<f64>,
    scale: Option<f64>,
}

impl CylinderFunction {
    pub fn from_values(space: &StateSpace, memory: usize, values: Vec<f64>) -> Result<CylinderFunction> {
        let want = grid_len(space.n(), memory)?;
        if values.len() != want {
            return Err(RuelleError::domain(format!(
                "grid of memory {memory} over {} symbols needs {want} values, got {}",
                space.n(),
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(RuelleError::domain("cylinder function values contain NaN".to_string()));
        }
        Ok(CylinderFunction { memory, n_symbols: space.n(), values, scale: None })
    }

    /// Log-domain grid: the represented function is `exp(logs + offset)`.
    pub fn from_log_values(
        space: &StateSpace,
        memory: usize,
        logs: Vec<f64>,
        offset: f64,
    ) -> Result<CylinderFunction> {
        let want = grid_len(space.n(), memory)?;
        if logs.len() != want {
            return Err(RuelleError::domain(format!(
                "grid of memory {memory} over {} symbols needs {want} values, got {}",
                space.n(),
                logs.len()
            )));
        }
        if logs.iter().any(|v| !v.is_finite()) || !offset.is_finite() {
            return Err(RuelleError::domain(
                "log-domain cylinder function requires finite log values".to_string(),
            ));
        }
        Ok(CylinderFunction { memory, n_symbols: space.n(), values: logs, scale: Some(offset) })
    }

    pub fn constant(space: &StateSpace, memory: usize, v: f64) -> Result<CylinderFunction> {
        let len = grid_len(space.n(), memory)?;
        CylinderFunction::from_values(space, memory, vec![v; len])
    }

    pub fn ones(space: &StateSpace, memory: usize) -> Result<CylinderFunction> {
        CylinderFunction::constant(space, memory, 1.0)
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_log_domain(&self) -> bool {
        self.scale.is_some()
    }

    pub fn scale(&self) -> Option<f64> {
        self.scale
    }

    /// Raw stored array (log-domain values when `is_log_domain`).
    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    /// Function value at the word with lexicographic index `idx`.
    pub fn value(&self, idx: usize) -> f64 {
        match self.scale {
            Some(c) => (self.values[idx] + c).exp(),
            None => self.values[idx],
        }
    }

    /// log of the function value at `idx` (well-defined for positive
    /// linear-domain values; -inf on zeros).
    pub fn log_value(&self, idx: usize) -> f64 {
        match self.scale {
            Some(c) => self.values[idx] + c,
            None => self.values[idx].ln(),
        }
    }

    /// Value at the word formed by the first `memory` coordinates of `v`.
    pub fn eval_view(&self, v: &dyn CoordView) -> f64 {
        let mut idx = 0usize;
        for k in 1..=self.memory {
            idx = idx * self.n_symbols + v.coord(k);
        }
        self.value(idx)
    }

    /// Replicates onto the finer memory-`k` grid (values depend only on
    /// the first `memory` coordinates either way).
    pub fn extended(&self, space: &StateSpace, k: usize) -> Result<CylinderFunction> {
        if k < self.memory {
            return Err(RuelleError::domain(format!(
                "cannot extend a memory-{} grid down to memory {k}",
                self.memory
            )));
        }
        let len = grid_len(space.n(), k)?;
        let block = len / self.values.len();
        let mut values = Vec::with_capacity(len);
        for v in &self.values {
            values.extend(std::iter::repeat(*v).take(block));
        }
        Ok(CylinderFunction { memory: k, n_symbols: self.n_symbols, values, scale: self.scale })
    }

    /// Converts to linear domain; errors when exponentiation would not be
    /// finite.
    pub fn to_linear(&self) -> Result<CylinderFunction> {
        match self.scale {
            None => Ok(self.clone()),
            Some(c) => {
                let mut values = Vec::with_capacity(self.values.len());
                for v in &self.values {
                    let w = (v + c).exp();
                    if !w.is_finite() {
                        return Err(RuelleError::domain(format!(
                            "log value {} exceeds the linear-domain range",
                            v + c
                        )));
                    }
                    values.push(w);
                }
                Ok(CylinderFunction {
                    memory: self.memory,
                    n_symbols: self.n_symbols,
                    values,
                    scale: None,
                })
            }
        }
    }

    pub fn sup_abs(&self) -> f64 {
        match self.scale {
            Some(c) => self.values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v + c)).exp(),
            None => self.values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

pub(crate) fn grid_len(n_symbols: usize, memory: usize) -> Result<usize> {
    word_count(n_symbols, memory)
        .filter(|&c| c <= crate::configuration::DEFAULT_ENUMERATION_CAP)
        .ok_or(RuelleError::CapExceeded {
            n_symbols,
            n: memory,
            cap: crate::configuration::DEFAULT_ENUMERATION_CAP,
        })
}

fn check_compatible(space: &StateSpace, f: &Potential, phi: &CylinderFunction, pad: usize) -> Result<()> {
    f.validate_for(space)?;
    space.check_index(pad)?;
    if phi.n_symbols != space.n() {
        return Err(RuelleError::SpaceMismatch { left: phi.n_symbols, right: space.n() });
    }
    if phi.memory + 1 > MAX_WINDOW {
        return Err(RuelleError::domain(format!(
            "grid memory {} exceeds the evaluation window",
            phi.memory
        )));
    }
    Ok(())
}

/// One application of the operator on the memory-m grid:
/// `out(x) = sum_a w_a exp(f(a.x_pad)) phi(a.x)`, where `x_pad` extends the
/// grid word by the pad point. Log-domain input produces log-domain output
/// (log-sum-exp in fixed symbol order); linear stays linear.
pub fn apply(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    phi: &CylinderFunction,
    pad: usize,
) -> Result<CylinderFunction> {
    check_compatible(space, f, phi, pad)?;
    let mut out = vec![0.0; phi.values.len()];
    if phi.is_log_domain() {
        apply_log_step(space, weighting, f, phi.memory, pad, &phi.values, &mut out);
        Ok(CylinderFunction {
            memory: phi.memory,
            n_symbols: phi.n_symbols,
            values: out,
            scale: phi.scale,
        })
    } else {
        if phi.values.iter().any(|v| !v.is_finite()) {
            return Err(RuelleError::domain(
                "linear-domain apply requires finite values; use the log domain".to_string(),
            ));
        }
        apply_linear_step(space, weighting, f, phi.memory, pad, &phi.values, &mut out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(RuelleError::domain(
                "linear-domain apply overflowed; use the log domain".to_string(),
            ));
        }
        Ok(CylinderFunction {
            memory: phi.memory,
            n_symbols: phi.n_symbols,
            values: out,
            scale: None,
        })
    }
}

/// Decodes `idx` into word coordinates `buf[1..=m]` (buf[0] is left for the
/// prepended symbol).
#[inline]
fn decode_into(n: usize, m: usize, mut idx: usize, buf: &mut [usize]) {
    for k in (1..=m).rev() {
        buf[k] = idx % n;
        idx /= n;
    }
}

fn apply_log_step(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    m: usize,
    pad: usize,
    vals: &[f64],
    out: &mut [f64],
) {
    let n = space.n();
    let stride = vals.len() / n.max(1);
    let slot = |ix: usize| -> f64 {
        let mut buf = [0usize; MAX_WINDOW];
        decode_into(n, m, ix, &mut buf);
        let mut acc = f64::NEG_INFINITY;
        for a in 0..n {
            buf[0] = a;
            let fv = f.eval_view(space, &BufView { buf: &buf[..=m], pad });
            let child = if m == 0 { 0 } else { a * stride + ix / n };
            acc = log_add_exp(acc, weighting.log_branch_weight(space, a) + fv + vals[child]);
        }
        acc
    };
    if vals.len() >= PAR_GRID_MIN {
        out.par_iter_mut().enumerate().for_each(|(ix, o)| *o = slot(ix));
    } else {
        for (ix, o) in out.iter_mut().enumerate() {
            *o = slot(ix);
        }
    }
}

fn apply_linear_step(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    m: usize,
    pad: usize,
    vals: &[f64],
    out: &mut [f64],
) {
    let n = space.n();
    let stride = vals.len() / n.max(1);
    let slot = |ix: usize| -> f64 {
        let mut buf = [0usize; MAX_WINDOW];
        decode_into(n, m, ix, &mut buf);
        let mut acc = 0.0;
        for a in 0..n {
            buf[0] = a;
            let fv = f.eval_view(space, &BufView { buf: &buf[..=m], pad });
            let child = if m == 0 { 0 } else { a * stride + ix / n };
            acc += weighting.branch_weight(space, a) * fv.exp() * vals[child];
        }
        acc
    };
    if vals.len() >= PAR_GRID_MIN {
        out.par_iter_mut().enumerate().for_each(|(ix, o)| *o = slot(ix));
    } else {
        for (ix, o) in out.iter_mut().enumerate() {
            *o = slot(ix);
        }
    }
}

/// n-fold application to the constant function 1 on the memory-m grid, in
/// log domain with per-step max-subtraction. Returns the final grid (whose
/// scale is the sum of the normalizers) together with the normalizer
/// sequence, so absolute values reconstruct as `values + sum(normalizers)`.
pub fn iterate_log(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    n: usize,
    m: usize,
    pad: usize,
) -> Result<(CylinderFunction, Vec<f64>)> {
    if n == 0 {
        return Err(RuelleError::domain("iterate_log requires n >= 1".to_string()));
    }
    let len = grid_len(space.n(), m)?;
    let probe = CylinderFunction { memory: m, n_symbols: space.n(), values: vec![0.0; len], scale: Some(0.0) };
    check_compatible(space, f, &probe, pad)?;
    let mut vals = probe.values;
    let mut next = vec![0.0; len];
    let mut normalizers = Vec::with_capacity(n);
    let mut scale = 0.0;
    for _ in 0..n {
        apply_log_step(space, weighting, f, m, pad, &vals, &mut next);
        let step_max = next.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
        for v in next.iter_mut() {
            *v -= step_max;
        }
        std::mem::swap(&mut vals, &mut next);
        normalizers.push(step_max);
        scale += step_max;
    }
    let grid = CylinderFunction { memory: m, n_symbols: space.n(), values: vals, scale: Some(scale) };
    Ok((grid, normalizers))
}

/// Finite-n pressure trace `p_n = (1/n) log L_f^n(1)(sigma^n x)` on the
/// memory-m grid.
#[derive(Clone, Debug)]
pub struct PressureTrace {
    pub base_point: Configuration,
    /// (n, p_n) for n = 1..=n_max.
    pub entries: Vec<(usize, f64)>,
    /// p at n_max.
    pub final_estimate: f64,
    /// |p_{n_max} - p_{n_max - 1}|.
    pub cauchy_gap: f64,
    pub memory: usize,
    /// Pad point used both for the grid evaluation of f and as the implicit
    /// tail of the evaluation word. Independent of the base point's own pad.
    pub truncation_pad: usize,
    /// ||f_{m+1} - f||_inf when the truncation is proper (None when f
    /// already fits the window); pressure inherits this bound Lipschitz-ly.
    pub truncation_bound: Option<f64>,
    pub weighting: Weighting,
}

/// Runs the pressure limit diagnostics at a fixed base point. The grid
/// realizes the operator of the truncated potential f_{m+1} with tail
/// `trunc_pad`; the base point keeps its own tail.
pub fn pressure_trace(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    n_max: usize,
    x: &Configuration,
    m: usize,
    trunc_pad: usize,
) -> Result<PressureTrace> {
    if n_max < 2 {
        return Err(RuelleError::domain("pressure trace requires n_max >= 2".to_string()));
    }
    x.check_space(space)?;
    let len = grid_len(space.n(), m)?;
    let probe = CylinderFunction { memory: m, n_symbols: space.n(), values: vec![0.0; len], scale: Some(0.0) };
    check_compatible(space, f, &probe, trunc_pad)?;
    let n_sym = space.n();
    let mut vals = probe.values;
    let mut next = vec![0.0; len];
    let mut scale = 0.0;
    let mut entries = Vec::with_capacity(n_max);
    for step in 1..=n_max {
        apply_log_step(space, weighting, f, m, trunc_pad, &vals, &mut next);
        let step_max = next.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
        for v in next.iter_mut() {
            *v -= step_max;
        }
        std::mem::swap(&mut vals, &mut next);
        scale += step_max;
        // Grid word of sigma^step x: coordinates step+1 .. step+m.
        let mut idx = 0usize;
        for j in 1..=m {
            idx = idx * n_sym + x.coord(step + j);
        }
        let p = (vals[idx] + scale) / step as f64;
        entries.push((step, p));
    }
    let final_estimate = entries[n_max - 1].1;
    let cauchy_gap = (final_estimate - entries[n_max - 2].1).abs();
    let truncation_bound = if f.memory().within(m + 1) {
        None
    } else {
        f.truncate_local(space, m + 1, trunc_pad)?.truncation_gap()
    };
    Ok(PressureTrace {
        base_point: x.clone(),
        entries,
        final_estimate,
        cauchy_gap,
        memory: m,
        truncation_pad: trunc_pad,
        truncation_bound,
        weighting,
    })
}

/// Perron eigendata of the finite-memory transfer matrix.
#[derive(Clone, Debug)]
pub struct RpfSolution {
    pub lambda: f64,
    pub log_lambda: f64,
    /// Right eigenfunction on the memory-k grid, normalized so that
    /// sum(nu * h) = 1.
    pub h: CylinderFunction,
    /// Left eigenvector over the k-words, normalized to a probability
    /// vector; the marginal of the eigenmeasure on k-cylinders.
    pub nu: Vec<f64>,
    /// ||M h - lambda h||_inf / ||h||_inf.
    pub residual_right: f64,
    /// Same for the adjoint and nu.
    pub residual_left: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Structural warnings (exact zero entries, period-2 oscillation).
    pub flags: Vec<String>,
    pub memory: usize,
    pub weighting: Weighting,
}

/// Coefficient array of the memory-k transfer matrix: `c[y] = w_{y_1} *
/// exp(f(y.pad))` indexed by the k-words y. Row x of the matrix holds
/// `c[y]` at the N children `y = a.x_{1..k-1}` and zero elsewhere.
pub(crate) fn matrix_coefficients(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    k: usize,
) -> Result<Vec<f64>> {
    let size = grid_len(space.n(), k)?;
    let n = space.n();
    let mut c = vec![0.0; size];
    let mut buf = [0usize; MAX_WINDOW];
    if k + 1 > MAX_WINDOW {
        return Err(RuelleError::domain(format!("matrix window {k} too wide", )));
    }
    for (y, cy) in c.iter_mut().enumerate() {
        decode_into(n, k, y, &mut buf);
        // The word occupies buf[1..=k]; evaluation wants it at the front.
        let word = &buf[1..=k];
        let fv = f.eval_view(space, &BufView { buf: word, pad: 0 });
        let v = weighting.branch_weight(space, word[0]) * fv.exp();
        if !v.is_finite() {
            return Err(RuelleError::domain(format!(
                "transfer coefficient overflowed at word index {y}; rescale the potential"
            )));
        }
        *cy = v;
    }
    Ok(c)
}

pub(crate) fn matvec(c: &[f64], n: usize, v: &[f64], out: &mut [f64]) {
    let stride = c.len() / n;
    let slot = |x: usize| -> f64 {
        let base = x / n;
        let mut acc = 0.0;
        for a in 0..n {
            let y = a * stride + base;
            acc += c[y] * v[y];
        }
        acc
    };
    if c.len() >= PAR_GRID_MIN {
        out.par_iter_mut().enumerate().for_each(|(x, o)| *o = slot(x));
    } else {
        for (x, o) in out.iter_mut().enumerate() {
            *o = slot(x);
        }
    }
}

pub(crate) fn matvec_adjoint(c: &[f64], n: usize, u: &[f64], out: &mut [f64]) {
    let stride = c.len() / n;
    let slot = |y: usize| -> f64 {
        let base = (y % stride) * n;
        let mut acc = 0.0;
        for b in 0..n {
            acc += u[base + b];
        }
        c[y] * acc
    };
    if c.len() >= PAR_GRID_MIN {
        out.par_iter_mut().enumerate().for_each(|(y, o)| *o = slot(y));
    } else {
        for (y, o) in out.iter_mut().enumerate() {
            *o = slot(y);
        }
    }
}

/// Dense row-major transfer matrix, exposed for small-scale crosschecks
/// against independent eigensolvers. Size is N^k squared; keep k small.
pub fn dense_matrix(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    k: usize,
) -> Result<(usize, Vec<f64>)> {
    let c = matrix_coefficients(space, weighting, f, k.max(1))?;
    let n = space.n();
    let size = c.len();
    let stride = size / n;
    let mut dense = vec![0.0; size * size];
    for x in 0..size {
        for a in 0..n {
            let y = a * stride + x / n;
            dense[x * size + y] = c[y];
        }
    }
    Ok((size, dense))
}

/// Power iteration for the Perron eigendata of the memory-k transfer
/// matrix. Right and left vectors iterate together from all-ones starts;
/// the loop stops when both sup-norm changes and both eigenvalue Cauchy
/// gaps clear `tol`. Non-convergence returns a flagged partial result, not
/// an error.
pub fn rpf_solve(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    tol: f64,
    max_iter: usize,
) -> Result<RpfSolution> {
    if !(tol > 0.0) {
        return Err(RuelleError::domain(format!("rpf tolerance must be positive, got {tol}")));
    }
    if max_iter == 0 {
        return Err(RuelleError::domain("rpf max_iter must be positive".to_string()));
    }
    f.validate_for(space)?;
    let k = f
        .memory()
        .finite()
        .ok_or_else(|| {
            RuelleError::domain(
                "rpf_solve needs a finite-memory potential; truncate it first".to_string(),
            )
        })?
        .max(1);
    let n = space.n();
    let c = matrix_coefficients(space, weighting, f, k)?;
    let size = c.len();
    let mut flags = Vec::new();
    let zero_entries = c.iter().filter(|v| **v == 0.0).count();
    if zero_entries > 0 {
        flags.push(format!(
            "reducible-structure warning: {zero_entries} of {size} transfer coefficients are exactly zero"
        ));
    }

    let mut v = vec![1.0; size];
    let mut u = vec![1.0; size];
    let mut work = vec![0.0; size];
    let mut lambda = f64::NAN;
    let mut mu = f64::NAN;
    // Last three eigenvalue estimates, for period-2 detection.
    let mut lam_hist = [f64::NAN; 3];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        matvec(&c, n, &v, &mut work);
        let lam_t = work.iter().fold(0.0f64, |a, b| a.max(*b));
        if lam_t <= 0.0 {
            return Err(RuelleError::domain(
                "power iteration collapsed to zero; the transfer matrix annihilates positive vectors".to_string(),
            ));
        }
        let mut dv = 0.0f64;
        for (vi, wi) in v.iter_mut().zip(work.iter()) {
            let nw = wi / lam_t;
            dv = dv.max((nw - *vi).abs());
            *vi = nw;
        }
        matvec_adjoint(&c, n, &u, &mut work);
        let mu_t = work.iter().fold(0.0f64, |a, b| a.max(*b));
        if mu_t <= 0.0 {
            return Err(RuelleError::domain(
                "adjoint iteration collapsed to zero; the transfer matrix annihilates positive vectors".to_string(),
            ));
        }
        let mut du = 0.0f64;
        for (ui, wi) in u.iter_mut().zip(work.iter()) {
            let nw = wi / mu_t;
            du = du.max((nw - *ui).abs());
            *ui = nw;
        }
        let lam_gap = (lam_t - lambda).abs();
        let mu_gap = (mu_t - mu).abs();
        lambda = lam_t;
        mu = mu_t;
        lam_hist = [lam_hist[1], lam_hist[2], lam_t];
        if dv < tol && du < tol && lam_gap < tol && mu_gap < tol {
            converged = true;
            break;
        }
    }
    if !converged {
        let osc = lam_hist.iter().all(|x| x.is_finite())
            && (lam_hist[2] - lam_hist[0]).abs() < 1e-9
            && (lam_hist[2] - lam_hist[1]).abs() > 1e-6;
        if osc {
            flags.push(format!(
                "non-primitive: eigenvalue estimates oscillate with period 2 ({} vs {}); reporting the raw partial state",
                lam_hist[1], lam_hist[2]
            ));
        } else {
            flags.push(format!(
                "not converged after {iterations} iterations; last eigenvalue gap {:.3e}",
                (lam_hist[2] - lam_hist[1]).abs()
            ));
        }
    }

    // nu sums to 1; h is scaled so that sum(nu * h) = 1.
    let usum: f64 = u.iter().sum();
    let nu: Vec<f64> = u.iter().map(|x| x / usum).collect();
    let dot: f64 = nu.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
    if dot <= 0.0 {
        return Err(RuelleError::domain(
            "eigenvector normalization failed: nu-weighted mass of h is not positive".to_string(),
        ));
    }
    let h_vals: Vec<f64> = v.iter().map(|x| x / dot).collect();

    matvec(&c, n, &h_vals, &mut work);
    let h_sup = h_vals.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let residual_right = work
        .iter()
        .zip(h_vals.iter())
        .fold(0.0f64, |m, (w, h)| m.max((w - lambda * h).abs()))
        / h_sup;
    matvec_adjoint(&c, n, &nu, &mut work);
    let nu_sup = nu.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let residual_left = work
        .iter()
        .zip(nu.iter())
        .fold(0.0f64, |m, (w, x)| m.max((w - lambda * x).abs()))
        / nu_sup;

    let h = CylinderFunction { memory: k, n_symbols: n, values: h_vals, scale: None };
    Ok(RpfSolution {
        lambda,
        log_lambda: lambda.ln(),
        h,
        nu,
        residual_right,
        residual_left,
        iterations,
        converged,
        flags,
        memory: k,
        weighting,
    })
}

/// Discrete duality defect `|int L_f(phi) d nu - lambda int phi d nu|` with
/// nu the left eigenvector marginal of `sol`.
pub fn duality_residual(
    space: &StateSpace,
    sol: &RpfSolution,
    f: &Potential,
    phi: &CylinderFunction,
) -> Result<f64> {
    if phi.memory() > sol.memory {
        return Err(RuelleError::domain(format!(
            "duality checks need phi memory <= {}, got {}",
            sol.memory,
            phi.memory()
        )));
    }
    let phi_k = phi.extended(space, sol.memory)?.to_linear()?;
    let l_phi = apply(space, sol.weighting, f, &phi_k, 0)?;
    let mut lhs = 0.0;
    let mut mass = 0.0;
    for (i, nu_i) in sol.nu.iter().enumerate() {
        lhs += nu_i * l_phi.value(i);
        mass += nu_i * phi_k.value(i);
    }
    Ok((lhs - sol.lambda * mass).abs())
}

/// Report of the L1(nu_f) contraction and operator-distance checks.
#[derive(Clone, Debug)]
pub struct NormCheckReport {
    pub lambda: f64,
    /// ||L_f 1||_1 / ||1||_1 in L1(nu_f); equals lambda by duality.
    pub ratio_at_one: f64,
    /// Largest ||L_f phi||_1 / ||phi||_1 over the sample.
    pub max_ratio: f64,
    pub samples: usize,
    /// Exact sup |g - f| over the shared memory window.
    pub sup_diff: f64,
    /// lambda_f * (exp(sup_diff) - 1).
    pub distance_bound: f64,
    /// Largest sampled ||(L_g - L_f) phi||_1 / ||phi||_1.
    pub observed_distance: f64,
    pub pass: bool,
}

/// Checks `||L_f phi||_1 <= lambda ||phi||_1` in L1(nu_f) on seeded random
/// grid functions (equality at phi = 1), and the norm-distance bound
/// `||L_g - L_f|| <= lambda_f (e^{||g-f||_inf} - 1)` in the same norm.
pub fn operator_norm_check(
    space: &StateSpace,
    sol_f: &RpfSolution,
    f: &Potential,
    g: &Potential,
    samples: usize,
    seed: u64,
) -> Result<NormCheckReport> {
    let k = sol_f.memory;
    for (label, p) in [("f", f), ("g", g)] {
        if !p.memory().within(k) {
            return Err(RuelleError::domain(format!(
                "operator norm check needs finite memory <= {k} for {label}"
            )));
        }
    }
    let n = space.n();
    let size = grid_len(n, k)?;
    let l1 = |phi: &CylinderFunction| -> f64 {
        sol_f.nu.iter().enumerate().map(|(i, nu)| nu * phi.value(i).abs()).sum()
    };

    let ones = CylinderFunction::ones(space, k)?;
    let ratio_at_one = l1(&apply(space, sol_f.weighting, f, &ones, 0)?) / l1(&ones);

    let mut buf = [0usize; MAX_WINDOW];
    let mut sup_diff = 0.0f64;
    for w in 0..size {
        decode_into(n, k, w, &mut buf);
        let view = BufView { buf: &buf[1..=k], pad: 0 };
        let d = (f.eval_view(space, &view) - g.eval_view(space, &view)).abs();
        sup_diff = sup_diff.max(d);
    }
    let distance_bound = sol_f.lambda * (sup_diff.exp() - 1.0);

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut max_ratio = ratio_at_one;
    let mut observed_distance = 0.0f64;
    for _ in 0..samples {
        let values: Vec<f64> = (0..size).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let phi = CylinderFunction::from_values(space, k, values)?;
        let norm = l1(&phi);
        if norm == 0.0 {
            continue;
        }
        let lf = apply(space, sol_f.weighting, f, &phi, 0)?;
        let lg = apply(space, sol_f.weighting, g, &phi, 0)?;
        max_ratio = max_ratio.max(l1(&lf) / norm);
        let diff_norm: f64 = sol_f
            .nu
            .iter()
            .enumerate()
            .map(|(i, nu)| nu * (lg.value(i) - lf.value(i)).abs())
            .sum();
        observed_distance = observed_distance.max(diff_norm / norm);
    }
    let slack = 1.0 + 1e-10;
    let pass = max_ratio <= sol_f.lambda * slack + 1e-12
        && observed_distance <= distance_bound * slack + 1e-12;
    Ok(NormCheckReport {
        lambda: sol_f.lambda,
        ratio_at_one,
        max_ratio,
        samples,
        sup_diff,
        distance_bound,
        observed_distance,
        pass,
    })
}

//! Specification kernels `K_n(phi, x) = L_f^n(phi)(sigma^n x) / L_f^n(1)(sigma^n x)`
//! and the diagnostic probes built on them: compatibility (DLR), properness,
//! strong non-nullness, quasilocality, and the uniqueness ratio.
//!
//! Numerator and denominator are accumulated in one enumeration of M^n with
//! a shared max shift, so the ratio never sees the lambda^n growth of either
//! side. For phi = 1 the numerator reuses the denominator terms verbatim,
//! which makes K_n(1, x) = 1 exact in floating point, not just close.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::configuration::{word_count, ChainView, Configuration, CoordView, ShiftView, DEFAULT_ENUMERATION_CAP};
use crate::error::{Result, RuelleError};
use crate::potential::Potential;
use crate::space::{StateSpace, Weighting};
use crate::transfer::CylinderFunction;

/// Term count at which the exact enumeration parallelizes over the symbol
/// adjacent to the boundary. Per-stratum sums are merged in fixed symbol
/// order, so results do not depend on the thread count.
const PAR_TERM_MIN: usize = 1 << 16;

/// Cylinder set given by finitely many coordinate constraints
/// `{omega : omega_i = a for every (i, a)}`.
#[derive(Clone, Debug)]
pub struct CylinderSet {
    constraints: Vec<(usize, usize)>,
}

impl CylinderSet {
    /// Constraints as (coordinate, point index) pairs; coordinates are
    /// 1-based and must be distinct.
    pub fn new(mut constraints: Vec<(usize, usize)>) -> Result<CylinderSet> {
        if constraints.is_empty() {
            return Err(RuelleError::domain("cylinder set needs at least one constraint".to_string()));
        }
        constraints.sort_unstable();
        for pair in constraints.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(RuelleError::domain(format!(
                    "cylinder set constrains coordinate {} twice",
                    pair[0].0
                )));
            }
        }
        if constraints[0].0 == 0 {
            return Err(RuelleError::domain("cylinder coordinates are 1-based".to_string()));
        }
        Ok(CylinderSet { constraints })
    }

    /// Single-coordinate cylinder `{omega_i = a}`.
    pub fn single(i: usize, a: usize) -> Result<CylinderSet> {
        CylinderSet::new(vec![(i, a)])
    }

    pub fn constraints(&self) -> &[(usize, usize)] {
        &self.constraints
    }

    pub fn max_coordinate(&self) -> usize {
        self.constraints.last().map(|c| c.0).unwrap_or(0)
    }

    pub fn min_coordinate(&self) -> usize {
        self.constraints.first().map(|c| c.0).unwrap_or(0)
    }

    pub fn contains(&self, v: &dyn CoordView) -> bool {
        self.constraints.iter().all(|&(i, a)| v.coord(i) == a)
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> =
            self.constraints.iter().map(|(i, a)| format!("{i}:{a}")).collect();
        format!("cylinder{{{}}}", parts.join(","))
    }
}

/// Observable fed to a kernel.
#[derive(Clone, Debug)]
pub enum Observable {
    /// The constant function 1.
    One,
    /// Indicator of a cylinder set.
    Indicator(CylinderSet),
    /// A memory-m grid function of the first m coordinates.
    Grid(CylinderFunction),
    /// `phi(x) = grid(sigma^offset x)`: a grid function read at
    /// coordinates offset+1 .. offset+m.
    ShiftedGrid { offset: usize, grid: CylinderFunction },
}

impl Observable {
    pub fn eval(&self, v: &dyn CoordView) -> f64 {
        match self {
            Observable::One => 1.0,
            Observable::Indicator(set) => {
                if set.contains(v) {
                    1.0
                } else {
                    0.0
                }
            }
            Observable::Grid(grid) => grid.eval_view(v),
            Observable::ShiftedGrid { offset, grid } => {
                grid.eval_view(&ShiftView { inner: v, by: *offset })
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Observable::One => "1".to_string(),
            Observable::Indicator(set) => set.describe(),
            Observable::Grid(grid) => format!("grid(m={})", grid.memory()),
            Observable::ShiftedGrid { offset, grid } => {
                format!("grid(m={}) after shift^{}", grid.memory(), offset)
            }
        }
    }

    /// True when the observable provably ignores coordinates 1..=n.
    fn tail_measurable_beyond(&self, n: usize) -> bool {
        match self {
            Observable::One => true,
            Observable::Indicator(set) => set.min_coordinate() > n,
            Observable::Grid(grid) => grid.memory() == 0,
            Observable::ShiftedGrid { offset, grid } => grid.memory() == 0 || *offset >= n,
        }
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match self {
            Observable::One => Some((1.0, 1.0)),
            Observable::Indicator(_) => Some((0.0, 1.0)),
            _ => None,
        }
    }
}

/// Evaluation policy for kernels.
#[derive(Clone, Copy, Debug)]
pub struct KernelOptions {
    /// Largest exact term count N^n.
    pub cap: usize,
    /// Stratified sampling plan used beyond the cap.
    pub sampling: Option<SamplingPlan>,
    /// Forces the sampler below the cap (crosschecks and benchmarks).
    pub force_sampling: bool,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { cap: DEFAULT_ENUMERATION_CAP, sampling: None, force_sampling: false }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SamplingPlan {
    pub seed: u64,
    pub samples: usize,
}

/// How a kernel value was computed.
#[derive(Clone, Debug)]
pub enum KernelMethod {
    Exact { terms: usize },
    Sampled { seed: u64, samples: usize },
}

/// One evaluated kernel.
#[derive(Clone, Debug)]
pub struct KernelValue {
    pub n: usize,
    pub observable: String,
    pub boundary: Configuration,
    pub value: f64,
    /// log |numerator| and log denominator after removing the shared shift.
    pub log_numerator: f64,
    pub log_denominator: f64,
    pub numerator_negative: bool,
    /// Delta-method standard error when sampled.
    pub stderr: Option<f64>,
    pub method: KernelMethod,
}

struct RawKernel {
    value: f64,
    log_numerator: f64,
    log_denominator: f64,
    numerator_negative: bool,
    stderr: Option<f64>,
    method: KernelMethod,
}

/// `K_n(phi, x)`; the boundary actually entering the sums is `sigma^n x`.
pub fn kernel_value(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    n: usize,
    observable: &Observable,
    x: &Configuration,
    opts: &KernelOptions,
) -> Result<KernelValue> {
    f.validate_for(space)?;
    x.check_space(space)?;
    let raw = kernel_with_boundary(space, weighting, f, n, observable, &ShiftView { inner: x, by: n }, opts)?;
    Ok(KernelValue {
        n,
        observable: observable.describe(),
        boundary: x.clone(),
        value: raw.value,
        log_numerator: raw.log_numerator,
        log_denominator: raw.log_denominator,
        numerator_negative: raw.numerator_negative,
        stderr: raw.stderr,
        method: raw.method,
    })
}

/// Kernel with the boundary given directly as a coordinate view (the
/// probes and the DLR inner table enter here).
fn kernel_with_boundary(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    n: usize,
    observable: &Observable,
    y: &dyn CoordView,
    opts: &KernelOptions,
) -> Result<RawKernel> {
    match word_count(space.n(), n) {
        Some(terms) if terms <= opts.cap && !opts.force_sampling => {
            Ok(kernel_exact(space, weighting, f, n, observable, y, terms))
        }
        _ => match opts.sampling {
            Some(plan) => Ok(kernel_sampled(space, weighting, f, n, observable, y, plan)),
            None => Err(RuelleError::CapExceeded { n_symbols: space.n(), n, cap: opts.cap }),
        },
    }
}

/// Depth-first maximum of the shifted exponents over the stratum with the
/// boundary-adjacent symbol fixed. `partial` carries the Birkhoff sum of
/// the already chosen suffix (with its branch-weight logs).
fn dfs_max(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    y: &dyn CoordView,
    buf: &mut [usize],
    p: usize,
    partial: f64,
) -> f64 {
    if p == 0 {
        return partial;
    }
    let n = buf.len();
    let n_sym = space.n();
    let mut best = f64::NEG_INFINITY;
    for a in 0..n_sym {
        buf[p - 1] = a;
        let inc = {
            let suffix = ChainView { head: &buf[p - 1..n], tail: y };
            f.eval_view(space, &suffix)
        };
        let t = partial + weighting.log_branch_weight(space, a) + inc;
        best = best.max(dfs_max(space, weighting, f, y, buf, p - 1, t));
    }
    best
}

/// Accumulation pass: sums exp(t - shift) and exp(t - shift) * phi(word.y)
/// over the stratum. For `Observable::One` the numerator literally reuses
/// the denominator accumulator.
#[allow(clippy::too_many_arguments)]
fn dfs_accumulate(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    observable: &Observable,
    y: &dyn CoordView,
    buf: &mut [usize],
    p: usize,
    partial: f64,
    shift: f64,
    num: &mut f64,
    den: &mut f64,
) {
    let n = buf.len();
    if p == 0 {
        let term = (partial - shift).exp();
        *den += term;
        if !matches!(observable, Observable::One) {
            let full = ChainView { head: &buf[..n], tail: y };
            *num += term * observable.eval(&full);
        }
        return;
    }
    let n_sym = space.n();
    for a in 0..n_sym {
        buf[p - 1] = a;
        let inc = {
            let suffix = ChainView { head: &buf[p - 1..n], tail: y };
            f.eval_view(space, &suffix)
        };
        let t = partial + weighting.log_branch_weight(space, a) + inc;
        dfs_accumulate(space, weighting, f, observable, y, buf, p - 1, t, shift, num, den);
    }
}

fn kernel_exact(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    n: usize,
    observable: &Observable,
    y: &dyn CoordView,
    terms: usize,
) -> RawKernel {
    let n_sym = space.n();
    let one = matches!(observable, Observable::One);
    let (mut num, mut den, shift);
    if n == 0 {
        shift = 0.0;
        den = 1.0;
        num = if one { den } else { observable.eval(y) };
    } else if terms >= PAR_TERM_MIN && n_sym >= 2 {
        // Stratify on the symbol adjacent to the boundary (position n).
        let strata: Vec<(f64, f64, f64)> = (0..n_sym)
            .into_par_iter()
            .map(|a| {
                let mut buf = vec![0usize; n];
                buf[n - 1] = a;
                let inc = {
                    let suffix = ChainView { head: &buf[n - 1..n], tail: y };
                    f.eval_view(space, &suffix)
                };
                let t = weighting.log_branch_weight(space, a) + inc;
                let m = dfs_max(space, weighting, f, y, &mut buf, n - 1, t);
                (t, m, 0.0)
            })
            .collect();
        shift = strata.iter().fold(f64::NEG_INFINITY, |s, (_, m, _)| s.max(*m));
        let sums: Vec<(f64, f64)> = (0..n_sym)
            .into_par_iter()
            .map(|a| {
                let mut buf = vec![0usize; n];
                buf[n - 1] = a;
                let (mut pn, mut pd) = (0.0, 0.0);
                dfs_accumulate(
                    space, weighting, f, observable, y, &mut buf, n - 1, strata[a].0, shift,
                    &mut pn, &mut pd,
                );
                (pn, pd)
            })
            .collect();
        num = 0.0;
        den = 0.0;
        // Merge strata in symbol order: bit-stable under any thread count.
        for (pn, pd) in &sums {
            num += pn;
            den += pd;
        }
        if one {
            num = den;
        }
    } else {
        let mut buf = vec![0usize; n];
        shift = dfs_max(space, weighting, f, y, &mut buf, n, 0.0);
        num = 0.0;
        den = 0.0;
        dfs_accumulate(space, weighting, f, observable, y, &mut buf, n, 0.0, shift, &mut num, &mut den);
        if one {
            num = den;
        }
    }
    let value = if one { 1.0 } else { num / den };
    RawKernel {
        value,
        log_numerator: shift + num.abs().ln(),
        log_denominator: shift + den.ln(),
        numerator_negative: num < 0.0,
        stderr: None,
        method: KernelMethod::Exact { terms },
    }
}

/// Stratified importance sampling over M^n: the first word coordinate
/// indexes the strata; the rest are drawn from the a priori product
/// (probability weighting) or uniformly (counting), so the weight carried
/// by each draw is exp(S_n f) alone. Standard error by the delta method
/// for the ratio estimator.
fn kernel_sampled(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    n: usize,
    observable: &Observable,
    y: &dyn CoordView,
    plan: SamplingPlan,
) -> RawKernel {
    let n_sym = space.n();
    let one = matches!(observable, Observable::One);
    let per_stratum = (plan.samples / n_sym).max(1);
    // Stratum weight of a_1 = a: its branch weight times the proposal mass
    // of the remaining coordinates (which the importance ratio removes).
    let stratum_log_weight: Vec<f64> = (0..n_sym)
        .map(|a| match weighting {
            Weighting::Probability => space.log_weight(a),
            Weighting::Counting => (n - 1) as f64 * (n_sym as f64).ln(),
        })
        .collect();
    // Under probability weighting, drawing a_j ~ w and weighting by
    // w_{a_j} e^{f} / w_{a_j} leaves exp(S_n f); under counting, uniform
    // draws carry N^{n-1} per stratum, the constant above.
    let cum: Vec<f64> = {
        let mut acc = 0.0;
        space
            .weights()
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect()
    };
    let draw = |rng: &mut ChaCha20Rng| -> usize {
        match weighting {
            Weighting::Probability => {
                let u: f64 = rng.gen();
                cum.iter().position(|c| u < *c).unwrap_or(n_sym - 1)
            }
            Weighting::Counting => rng.gen_range(0..n_sym),
        }
    };

    struct Stratum {
        shift: f64,
        mean_u: f64,
        mean_v: f64,
        var_u: f64,
        var_v: f64,
        cov_uv: f64,
        log_weight: f64,
        m: usize,
    }

    let mut strata = Vec::with_capacity(n_sym);
    let mut buf = vec![0usize; n];
    for a in 0..n_sym {
        let mut rng = ChaCha20Rng::seed_from_u64(plan.seed);
        rng.set_stream(a as u64);
        let mut ts = Vec::with_capacity(per_stratum);
        let mut phis = Vec::with_capacity(per_stratum);
        for _ in 0..per_stratum {
            buf[0] = a;
            for slot in buf.iter_mut().skip(1) {
                *slot = draw(&mut rng);
            }
            // S_n f over the drawn word, suffix sums from the boundary in.
            let mut s = 0.0;
            for p in (1..=n).rev() {
                let suffix = ChainView { head: &buf[p - 1..n], tail: y };
                s += f.eval_view(space, &suffix);
            }
            ts.push(s);
            if !one {
                let full = ChainView { head: &buf[..n], tail: y };
                phis.push(observable.eval(&full));
            }
        }
        let shift = ts.iter().fold(f64::NEG_INFINITY, |m, t| m.max(*t));
        let m = ts.len();
        let mut su = 0.0;
        let mut sv = 0.0;
        for (i, t) in ts.iter().enumerate() {
            let v = (t - shift).exp();
            sv += v;
            if !one {
                su += v * phis[i];
            }
        }
        if one {
            su = sv;
        }
        let mean_u = su / m as f64;
        let mean_v = sv / m as f64;
        let mut var_u = 0.0;
        let mut var_v = 0.0;
        let mut cov = 0.0;
        for (i, t) in ts.iter().enumerate() {
            let v = (t - shift).exp();
            let u = if one { v } else { v * phis[i] };
            var_u += (u - mean_u) * (u - mean_u);
            var_v += (v - mean_v) * (v - mean_v);
            cov += (u - mean_u) * (v - mean_v);
        }
        let denom = (m.max(2) - 1) as f64;
        strata.push(Stratum {
            shift,
            mean_u,
            mean_v,
            var_u: var_u / denom,
            var_v: var_v / denom,
            cov_uv: cov / denom,
            log_weight: stratum_log_weight[a],
            m,
        });
    }

    // Common rescaling across strata.
    let global = strata
        .iter()
        .fold(f64::NEG_INFINITY, |g, s| g.max(s.shift + s.log_weight));
    let mut num = 0.0;
    let mut den = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    let mut cov_ab = 0.0;
    for s in &strata {
        let c = (s.shift + s.log_weight - global).exp();
        num += c * s.mean_u;
        den += c * s.mean_v;
        let c2m = c * c / s.m as f64;
        var_a += c2m * s.var_u;
        var_b += c2m * s.var_v;
        cov_ab += c2m * s.cov_uv;
    }
    let value = if one { 1.0 } else { num / den };
    let stderr = if one {
        0.0
    } else {
        let v = (var_a - 2.0 * value * cov_ab + value * value * var_b).max(0.0);
        v.sqrt() / den
    };
    RawKernel {
        value,
        log_numerator: global + num.abs().ln(),
        log_denominator: global + den.ln(),
        numerator_negative: num < 0.0,
        stderr: Some(stderr),
        method: KernelMethod::Sampled { seed: plan.seed, samples: per_stratum * n_sym },
    }
}

/// Compatibility defect `|K_{n+r}(phi, x) - K_{n+r}(K_n(phi, .), x)|`.
///
/// The inner kernel, as a function of the outer word, depends only on that
/// word's last r symbols (they are all of sigma^n z that varies), so it is
/// tabulated over the N^r suffixes and re-entered as a shifted grid
/// observable. The identity is exact algebra; the residual measures
/// floating-point error only.
pub fn dlr_residual(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    n: usize,
    r: usize,
    observable: &Observable,
    x: &Configuration,
    opts: &KernelOptions,
) -> Result<f64> {
    if n == 0 || r == 0 {
        return Err(RuelleError::domain("dlr residual requires n >= 1 and r >= 1".to_string()));
    }
    f.validate_for(space)?;
    x.check_space(space)?;
    let n_sym = space.n();
    let table_len = word_count(n_sym, r).filter(|&c| c <= opts.cap).ok_or(
        RuelleError::CapExceeded { n_symbols: n_sym, n: r, cap: opts.cap },
    )?;
    let outer_tail = ShiftView { inner: x, by: n + r };
    let mut table = Vec::with_capacity(table_len);
    let mut word = vec![0usize; r];
    for idx in 0..table_len {
        let mut ix = idx;
        for k in (0..r).rev() {
            word[k] = ix % n_sym;
            ix /= n_sym;
        }
        let boundary = ChainView { head: &word, tail: &outer_tail };
        let inner = kernel_with_boundary(space, weighting, f, n, observable, &boundary, opts)?;
        table.push(inner.value);
    }
    let grid = CylinderFunction::from_values(space, r, table)?;
    let lhs = kernel_value(space, weighting, f, n + r, observable, x, opts)?;
    let rhs_obs = Observable::ShiftedGrid { offset: n, grid };
    let rhs = kernel_value(space, weighting, f, n + r, &rhs_obs, x, opts)?;
    Ok((lhs.value - rhs.value).abs())
}

/// Properness defect `|K_n(psi, x) - psi(x)|` for observables that ignore
/// the first n coordinates: every term word agrees with x beyond n, so the
/// conditioning must act as the identity there. Rejects observables whose
/// measurability cannot be established structurally.
pub fn properness_check(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    n: usize,
    observable: &Observable,
    x: &Configuration,
    opts: &KernelOptions,
) -> Result<f64> {
    if !observable.tail_measurable_beyond(n) {
        return Err(RuelleError::NotTailMeasurable { n });
    }
    let k = kernel_value(space, weighting, f, n, observable, x, opts)?;
    let direct = observable.eval(x);
    Ok((k.value - direct).abs())
}

/// One probe measurement.
#[derive(Clone, Debug)]
pub struct ProbeEntry {
    pub index: usize,
    pub value: f64,
    pub stderr: Option<f64>,
}

/// Trace of `inf_x K_i(C_i(a), x)` across i.
#[derive(Clone, Debug)]
pub struct SnnTrace {
    pub symbol: usize,
    pub entries: Vec<ProbeEntry>,
    /// Smallest kernel value seen anywhere in the trace.
    pub inf_estimate: f64,
}

/// Minimum of `K_i(C_i(a), x)` over the boundary set, traced for
/// i = 1..=i_max. A uniformly positive trace supports strong non-nullness;
/// a decaying one is evidence against it (the limit itself stays out of
/// reach of any finite run).
pub fn strong_non_null_probe(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    i_max: usize,
    a: usize,
    boundaries: &[Configuration],
    opts: &KernelOptions,
) -> Result<SnnTrace> {
    space.check_index(a)?;
    if boundaries.is_empty() {
        return Err(RuelleError::domain("strong non-null probe needs at least one boundary".to_string()));
    }
    if i_max == 0 {
        return Err(RuelleError::domain("strong non-null probe requires i_max >= 1".to_string()));
    }
    let mut entries = Vec::with_capacity(i_max);
    let mut inf = f64::INFINITY;
    for i in 1..=i_max {
        let set = CylinderSet::single(i, a)?;
        let obs = Observable::Indicator(set);
        let mut min_v = f64::INFINITY;
        let mut min_err = None;
        for x in boundaries {
            let k = kernel_value(space, weighting, f, i, &obs, x, opts)?;
            if k.value < min_v {
                min_v = k.value;
                min_err = k.stderr;
            }
        }
        inf = inf.min(min_v);
        entries.push(ProbeEntry { index: i, value: min_v, stderr: min_err });
    }
    Ok(SnnTrace { symbol: a, entries, inf_estimate: inf })
}

/// Oscillation of the kernel under tail changes beyond a given depth.
#[derive(Clone, Debug)]
pub struct OscillationTrace {
    pub n: usize,
    pub entries: Vec<ProbeEntry>,
    pub max_oscillation: f64,
}

/// `max |K_n(phi, x) - K_n(phi, x')|` over boundaries x' that copy x up to
/// each depth and then switch to a configured tail. Decay across depths is
/// the quasilocality diagnostic.
pub fn quasilocality_probe(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    n: usize,
    observable: &Observable,
    x: &Configuration,
    depths: &[usize],
    tails: &[Configuration],
    opts: &KernelOptions,
) -> Result<OscillationTrace> {
    x.check_space(space)?;
    if depths.is_empty() || tails.is_empty() {
        return Err(RuelleError::domain(
            "quasilocality probe needs at least one depth and one tail".to_string(),
        ));
    }
    for t in tails {
        t.check_space(space)?;
    }
    let base = kernel_value(space, weighting, f, n, observable, x, opts)?;
    let mut entries = Vec::with_capacity(depths.len());
    let mut max_osc = 0.0f64;
    for &depth in depths {
        let mut osc = 0.0f64;
        let mut err = None;
        for tail in tails {
            // x' agrees with x on coordinates 1..=depth, then follows the tail.
            let mut prefix = Vec::with_capacity(depth + tail.prefix.len());
            for k in 1..=depth {
                prefix.push(x.coord(k));
            }
            prefix.extend_from_slice(&tail.prefix);
            let xp = Configuration::from_prefix(prefix, tail.pad);
            let k = kernel_value(space, weighting, f, n, observable, &xp, opts)?;
            let d = (base.value - k.value).abs();
            if d > osc {
                osc = d;
                err = match (base.stderr, k.stderr) {
                    (Some(a), Some(b)) => Some((a * a + b * b).sqrt()),
                    _ => None,
                };
            }
        }
        max_osc = max_osc.max(osc);
        entries.push(ProbeEntry { index: depth, value: osc, stderr: err });
    }
    Ok(OscillationTrace { n, entries, max_oscillation: max_osc })
}

/// Worst pairwise kernel ratio for a fixed cylinder.
#[derive(Clone, Debug)]
pub struct UniquenessReport {
    /// min over ordered pairs of K_n(F,x)/K_n(F,y); None when every ratio
    /// was undefined.
    pub c_estimate: Option<f64>,
    /// (pair index, reversed order) attaining the minimum.
    pub worst_pair: Option<(usize, bool)>,
    /// Pair indices where a denominator kernel was exactly zero.
    pub undefined_pairs: Vec<usize>,
    /// K_n(F, x) and K_n(F, y) per pair.
    pub kernel_values: Vec<(f64, f64)>,
}

/// Probes the ratio hypothesis `K_n(F, x) >= c K_n(F, y)`: evaluates both
/// orders for every pair, so the estimate is at most 1 whenever defined. A
/// zero denominator is reported as evidence, not an error.
pub fn uniqueness_ratio_probe(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    set: &CylinderSet,
    n: usize,
    pairs: &[(Configuration, Configuration)],
    opts: &KernelOptions,
) -> Result<UniquenessReport> {
    if pairs.is_empty() {
        return Err(RuelleError::domain("uniqueness probe needs at least one boundary pair".to_string()));
    }
    if n < set.max_coordinate() {
        return Err(RuelleError::domain(format!(
            "uniqueness probe needs n >= {} so the cylinder lies inside the enumerated words",
            set.max_coordinate()
        )));
    }
    let obs = Observable::Indicator(set.clone());
    let mut c_estimate: Option<f64> = None;
    let mut worst_pair = None;
    let mut undefined = Vec::new();
    let mut values = Vec::with_capacity(pairs.len());
    for (idx, (x, y)) in pairs.iter().enumerate() {
        let kx = kernel_value(space, weighting, f, n, &obs, x, opts)?.value;
        let ky = kernel_value(space, weighting, f, n, &obs, y, opts)?.value;
        values.push((kx, ky));
        let mut any_zero = false;
        for (num, den, reversed) in [(kx, ky, false), (ky, kx, true)] {
            if den == 0.0 {
                any_zero = true;
                continue;
            }
            let ratio = num / den;
            if c_estimate.map_or(true, |c| ratio < c) {
                c_estimate = Some(ratio);
                worst_pair = Some((idx, reversed));
            }
        }
        if any_zero {
            undefined.push(idx);
        }
    }
    Ok(UniquenessReport { c_estimate, worst_pair, undefined_pairs: undefined, kernel_values: values })
}

//! Potentials on the product space: evaluation, Birkhoff sums, local
//! truncation, and variation diagnostics.
//!
//! A potential is evaluated through [`CoordView`], so the same evaluator
//! serves full configurations, shifted views, and the padded word buffers
//! used by the grid operators. Truncation composes with a repeated pad
//! point: `f_m(x) = f(x_1, .., x_m, pad, pad, ...)`.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::configuration::{BufView, Configuration, CoordView, ShiftView, word_count, word_from_index, DEFAULT_ENUMERATION_CAP};
use crate::error::{Result, RuelleError};
use crate::space::StateSpace;

/// Default certified tolerance for [`zeta`] calls made internally.
pub const ZETA_INTERNAL_TOL: f64 = 1e-14;

/// Length of the precomputed tail table for long-range potentials.
pub(crate) const TAIL_TABLE_LEN: usize = 4096;

/// Riemann zeta for real `s > 1` with a certified absolute error below
/// `tol`.
///
/// Euler-Maclaurin through the first Bernoulli correction:
/// sum_{n<=N} n^-s + (N+1)^(1-s)/(s-1) + (N+1)^-s/2 + s (N+1)^-(s+1)/12,
/// remainder bounded by s(s+1)(s+2) (N+1)^-(s+3)/720. N doubles until the
/// bound clears `tol`; the partial sum runs small-to-large.
pub fn zeta(s: f64, tol: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(RuelleError::domain(format!(
            "zeta requires s > 1 (the series diverges otherwise), got s = {s}"
        )));
    }
    if !(tol > 0.0) {
        return Err(RuelleError::domain(format!("zeta tolerance must be positive, got {tol}")));
    }
    let mut n: usize = 16;
    loop {
        if em_remainder_bound(s, n) < tol {
            let mut sum = 0.0;
            for j in (1..=n).rev() {
                sum += (j as f64).powf(-s);
            }
            return Ok(sum + em_tail(s, n));
        }
        if n >= (1 << 26) {
            return Err(RuelleError::domain(format!(
                "zeta tolerance {tol} unreachable at s = {s} within the cutoff cap"
            )));
        }
        n *= 2;
    }
}

/// Euler-Maclaurin correction for the tail sum_{j>n} j^-s.
fn em_tail(s: f64, n: usize) -> f64 {
    let a = (n + 1) as f64;
    a.powf(1.0 - s) / (s - 1.0) + a.powf(-s) / 2.0 + s * a.powf(-s - 1.0) / 12.0
}

fn em_remainder_bound(s: f64, n: usize) -> f64 {
    let a = (n + 1) as f64;
    s * (s + 1.0) * (s + 2.0) * a.powf(-s - 3.0) / 720.0
}

/// Table of tail sums `alpha[k] = sum_{j>k} j^-gamma` for `k = 0..=len`.
///
/// Built by downward recursion `alpha[k-1] = k^-gamma + alpha[k]` from an
/// Euler-Maclaurin anchor at `len`, so the telescoping identity holds
/// bitwise. Long-range evaluation relies on that: two representations of
/// the same point differ by exactly such a telescoping step.
pub(crate) fn tail_table(gamma: f64, len: usize) -> Vec<f64> {
    let mut alpha = vec![0.0; len + 1];
    alpha[len] = em_tail(gamma, len);
    for k in (1..=len).rev() {
        alpha[k - 1] = (k as f64).powf(-gamma) + alpha[k];
    }
    alpha
}

/// Declared coordinate dependence of a potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Memory {
    /// Depends on at most the first `k` coordinates.
    Finite(usize),
    /// Depends on the whole configuration.
    Infinite,
}

impl Memory {
    pub fn finite(self) -> Option<usize> {
        match self {
            Memory::Finite(k) => Some(k),
            Memory::Infinite => None,
        }
    }

    /// True when the dependence is known to stop at or before `m`.
    pub fn within(self, m: usize) -> bool {
        matches!(self, Memory::Finite(k) if k <= m)
    }
}

impl std::fmt::Display for Memory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Memory::Finite(k) => write!(f, "{k}"),
            Memory::Infinite => write!(f, "infinite"),
        }
    }
}

#[derive(Clone, Debug)]
enum Kind {
    Constant {
        c: f64,
    },
    SingleSite {
        beta: f64,
    },
    /// Nearest-neighbour coupling `beta * s(x_1) * s(x_2)`.
    Ising {
        beta: f64,
    },
    /// Arbitrary table over words of a fixed window length, first
    /// coordinate most significant.
    FiniteRange {
        n_symbols: usize,
        window: usize,
        table: Vec<f64>,
    },
    /// `f(x) = sum_k s(x_k) k^-gamma` on the spin alphabet.
    LongRange {
        gamma: f64,
        alpha: Vec<f64>,
    },
    /// Renewal-type potential on two symbols, cased on the leading run.
    DoubleHofbauer {
        gamma: f64,
        delta: f64,
        log_zeta_gamma: f64,
        log_zeta_delta: f64,
    },
    Truncated {
        inner: Box<Potential>,
        m: usize,
        pad: usize,
    },
}

/// View that replaces every coordinate past `m` with a fixed pad point.
struct TruncView<'a> {
    inner: &'a dyn CoordView,
    m: usize,
    pad: usize,
}

impl CoordView for TruncView<'_> {
    fn coord(&self, k: usize) -> usize {
        if k <= self.m {
            self.inner.coord(k)
        } else {
            self.pad
        }
    }

    // The inner view's own pad may differ from the truncation pad, so the
    // whole window up to m counts as explicit.
    fn explicit_len(&self) -> usize {
        self.m
    }

    fn pad(&self) -> usize {
        self.pad
    }
}

/// A real-valued function of a configuration, tagged with its declared
/// memory and the parameters it was built from.
#[derive(Clone, Debug)]
pub struct Potential {
    name: String,
    kind: Kind,
    memory: Memory,
    params: BTreeMap<String, f64>,
    trunc_gap: Option<f64>,
}

impl Potential {
    pub fn constant(c: f64) -> Potential {
        Potential {
            name: "constant".into(),
            kind: Kind::Constant { c },
            memory: Memory::Finite(0),
            params: BTreeMap::from([("c".into(), c)]),
            trunc_gap: None,
        }
    }

    /// `f(x) = beta * s(x_1)` where `s` is the numeric value of the symbol.
    pub fn single_site(beta: f64) -> Potential {
        Potential {
            name: "single_site".into(),
            kind: Kind::SingleSite { beta },
            memory: Memory::Finite(1),
            params: BTreeMap::from([("beta".into(), beta)]),
            trunc_gap: None,
        }
    }

    /// `f(x) = beta * s(x_1) * s(x_2)`.
    pub fn ising(beta: f64) -> Potential {
        Potential {
            name: "ising".into(),
            kind: Kind::Ising { beta },
            memory: Memory::Finite(2),
            params: BTreeMap::from([("beta".into(), beta)]),
            trunc_gap: None,
        }
    }

    /// Table-backed potential over the first `window` coordinates;
    /// `table[i]` is the value on the word with lexicographic index `i`
    /// (first coordinate most significant).
    pub fn finite_range(n_symbols: usize, window: usize, table: Vec<f64>) -> Result<Potential> {
        let want = word_count(n_symbols, window)
            .ok_or_else(|| RuelleError::domain("finite-range table size overflows usize".to_string()))?;
        if table.len() != want {
            return Err(RuelleError::domain(format!(
                "finite-range table has {} entries, expected {n_symbols}^{window} = {want}",
                table.len()
            )));
        }
        if let Some(bad) = table.iter().find(|v| !v.is_finite()) {
            return Err(RuelleError::domain(format!("finite-range table contains non-finite value {bad}")));
        }
        Ok(Potential {
            name: "finite_range".into(),
            kind: Kind::FiniteRange { n_symbols, window, table },
            memory: Memory::Finite(window),
            params: BTreeMap::from([
                ("n_symbols".into(), n_symbols as f64),
                ("window".into(), window as f64),
            ]),
            trunc_gap: None,
        })
    }

    /// `f(x) = sum_{k>=1} s(x_k) k^-gamma` on the spin alphabet {-1,+1}.
    /// Continuous for gamma > 1 but not Holder.
    pub fn long_range(gamma: f64) -> Result<Potential> {
        if !(gamma > 1.0) {
            return Err(RuelleError::domain(format!(
                "long-range potential requires gamma > 1 for a convergent tail, got {gamma}"
            )));
        }
        Ok(Potential {
            name: "long_range".into(),
            kind: Kind::LongRange { gamma, alpha: tail_table(gamma, TAIL_TABLE_LEN) },
            memory: Memory::Infinite,
            params: BTreeMap::from([("gamma".into(), gamma)]),
            trunc_gap: None,
        })
    }

    /// Renewal-type potential on two symbols. With n the length of the
    /// leading constant run: -gamma*log(n/(n-1)) on runs of symbol 0 with
    /// n >= 2, -log zeta(gamma) on a run of length 1, symmetrically with
    /// delta on runs of symbol 1, and 0 on the two constant configurations.
    ///
    /// The regime of interest has delta < gamma; that ordering is recorded
    /// in the parameters but not enforced.
    pub fn double_hofbauer(gamma: f64, delta: f64) -> Result<Potential> {
        for (label, v) in [("gamma", gamma), ("delta", delta)] {
            if !(v > 1.0) {
                return Err(RuelleError::domain(format!(
                    "double-hofbauer requires {label} > 1 (zeta diverges otherwise), got {v}"
                )));
            }
        }
        let zg = zeta(gamma, ZETA_INTERNAL_TOL)?;
        let zd = zeta(delta, ZETA_INTERNAL_TOL)?;
        Ok(Potential {
            name: "double_hofbauer".into(),
            kind: Kind::DoubleHofbauer {
                gamma,
                delta,
                log_zeta_gamma: zg.ln(),
                log_zeta_delta: zd.ln(),
            },
            memory: Memory::Infinite,
            params: BTreeMap::from([("gamma".into(), gamma), ("delta".into(), delta)]),
            trunc_gap: None,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn memory(&self) -> Memory {
        self.memory
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    /// Sup-norm gap attached by [`Potential::truncate_local`]; `None` on
    /// potentials that are not truncations.
    pub fn truncation_gap(&self) -> Option<f64> {
        self.trunc_gap
    }

    /// Checks the potential is meaningful on `space` (alphabet size,
    /// numeric symbol values where the formula needs them).
    pub fn validate_for(&self, space: &StateSpace) -> Result<()> {
        match &self.kind {
            Kind::Constant { .. } | Kind::SingleSite { .. } | Kind::Ising { .. } => Ok(()),
            Kind::FiniteRange { n_symbols, .. } => {
                if *n_symbols != space.n() {
                    return Err(RuelleError::SpaceMismatch { left: *n_symbols, right: space.n() });
                }
                Ok(())
            }
            Kind::LongRange { .. } => {
                let spins = space.n() == 2
                    && space.coord_value(0).min(space.coord_value(1)) == -1.0
                    && space.coord_value(0).max(space.coord_value(1)) == 1.0;
                if !spins {
                    return Err(RuelleError::domain(
                        "long-range potential expects the spin alphabet with symbol values -1 and +1".to_string(),
                    ));
                }
                Ok(())
            }
            Kind::DoubleHofbauer { .. } => {
                if space.n() != 2 {
                    return Err(RuelleError::SpaceMismatch { left: 2, right: space.n() });
                }
                Ok(())
            }
            Kind::Truncated { inner, pad, .. } => {
                space.check_index(*pad)?;
                inner.validate_for(space)
            }
        }
    }

    /// Evaluates the potential at the point described by `v`. Infallible;
    /// use [`Potential::evaluate`] for the argument-checked entry point.
    pub fn eval_view(&self, space: &StateSpace, v: &dyn CoordView) -> f64 {
        match &self.kind {
            Kind::Constant { c } => *c,
            Kind::SingleSite { beta } => beta * space.coord_value(v.coord(1)),
            Kind::Ising { beta } => beta * space.coord_value(v.coord(1)) * space.coord_value(v.coord(2)),
            Kind::FiniteRange { n_symbols, window, table } => {
                let mut idx = 0usize;
                for k in 1..=*window {
                    idx = idx * n_symbols + v.coord(k);
                }
                table[idx]
            }
            Kind::LongRange { gamma, alpha } => {
                let len = v.explicit_len();
                let mut sum = 0.0;
                for k in 1..=len {
                    sum += space.coord_value(v.coord(k)) * (k as f64).powf(-gamma);
                }
                let tail = if len < alpha.len() { alpha[len] } else { em_tail(*gamma, len) };
                sum + space.coord_value(v.pad()) * tail
            }
            Kind::DoubleHofbauer { gamma, delta, log_zeta_gamma, log_zeta_delta } => {
                let lead = v.coord(1);
                let len = v.explicit_len();
                let mut run = 1usize;
                while run < len && v.coord(run + 1) == lead {
                    run += 1;
                }
                if run == len.max(1) && v.pad() == lead {
                    // Constant configuration (pure run into a matching pad).
                    return 0.0;
                }
                // run < len means coord(run+1) differs; run == len means the
                // pad differs, which is coordinate run+1 as well.
                let (rate, at_one) = if lead == 0 {
                    (gamma, log_zeta_gamma)
                } else {
                    (delta, log_zeta_delta)
                };
                if run == 1 {
                    -at_one
                } else {
                    -rate * ((run as f64) / ((run - 1) as f64)).ln()
                }
            }
            Kind::Truncated { inner, m, pad } => {
                inner.eval_view(space, &TruncView { inner: v, m: *m, pad: *pad })
            }
        }
    }

    /// Argument-checked pointwise evaluation.
    pub fn evaluate(&self, space: &StateSpace, x: &Configuration) -> Result<f64> {
        self.validate_for(space)?;
        x.check_space(space)?;
        Ok(self.eval_view(space, x))
    }

    /// `S_n f(x) = f(x) + f(sigma x) + ... + f(sigma^{n-1} x)`; `S_0 = 0`.
    pub fn birkhoff_sum(&self, space: &StateSpace, x: &Configuration, n: usize) -> Result<f64> {
        self.validate_for(space)?;
        x.check_space(space)?;
        let mut sum = 0.0;
        for j in 0..n {
            sum += self.eval_view(space, &ShiftView { inner: x, by: j });
        }
        Ok(sum)
    }

    /// Uniform bound on |f| over the whole space.
    pub fn sup_norm_bound(&self, space: &StateSpace) -> f64 {
        let smax = (0..space.n()).map(|a| space.coord_value(a).abs()).fold(0.0, f64::max);
        match &self.kind {
            Kind::Constant { c } => c.abs(),
            Kind::SingleSite { beta } => beta.abs() * smax,
            Kind::Ising { beta } => beta.abs() * smax * smax,
            Kind::FiniteRange { table, .. } => table.iter().fold(0.0, |m, v| m.max(v.abs())),
            Kind::LongRange { alpha, .. } => smax * alpha[0],
            Kind::DoubleHofbauer { gamma, delta, log_zeta_gamma, log_zeta_delta } => {
                let two = std::f64::consts::LN_2;
                (gamma * two).max(delta * two).max(log_zeta_gamma.abs()).max(log_zeta_delta.abs())
            }
            Kind::Truncated { inner, .. } => inner.sup_norm_bound(space),
        }
    }

    /// Replaces every coordinate past `m` with the pad point:
    /// `f_m(x) = f(x_1, .., x_m, pad, pad, ...)`. The sup-norm gap
    /// `||f_m - f||_inf` is attached to the result (exact for finite-memory
    /// and long-range inputs, a bound otherwise); read it back with
    /// [`Potential::truncation_gap`]. Truncating below an already finite
    /// memory is the identity.
    pub fn truncate_local(&self, space: &StateSpace, m: usize, pad: usize) -> Result<Potential> {
        self.validate_for(space)?;
        space.check_index(pad)?;
        if self.memory.within(m) {
            let mut out = self.clone();
            out.trunc_gap = Some(0.0);
            return Ok(out);
        }
        let gap = self.truncation_sup_gap(space, m, pad)?;
        let mut params = self.params.clone();
        params.insert("truncation_m".into(), m as f64);
        params.insert("truncation_pad".into(), pad as f64);
        Ok(Potential {
            name: format!("{}_m{}", self.name, m),
            kind: Kind::Truncated { inner: Box::new(self.clone()), m, pad },
            memory: Memory::Finite(m),
            params,
            trunc_gap: Some(gap),
        })
    }

    fn truncation_sup_gap(&self, space: &StateSpace, m: usize, pad: usize) -> Result<f64> {
        match &self.kind {
            Kind::LongRange { gamma, alpha } => {
                // sup over tails of |sum_{k>m} (s(x_k) - s(pad)) k^-gamma|;
                // each term is maximised independently by a constant tail,
                // so the sup is attained.
                let spread = (0..space.n())
                    .map(|a| (space.coord_value(a) - space.coord_value(pad)).abs())
                    .fold(0.0, f64::max);
                let tail = if m < alpha.len() { alpha[m] } else { em_tail(*gamma, m) };
                Ok(spread * tail)
            }
            Kind::DoubleHofbauer { gamma, delta, .. } if m >= 2 => {
                // Classification changes only on leading runs of length >= m,
                // where values lie between 0 and rate*log(m/(m-1)); both ends
                // are attained.
                Ok(gamma.max(*delta) * ((m as f64) / ((m - 1) as f64)).ln())
            }
            Kind::DoubleHofbauer { .. } => Ok(2.0 * self.sup_norm_bound(space)),
            _ => match self.memory {
                // Finite memory k > m: the gap is a max over the k-words.
                Memory::Finite(k) => exact_finite_gap(space, self, k, m, pad),
                Memory::Infinite => Ok(2.0 * self.sup_norm_bound(space)),
            },
        }
    }

    /// Estimates `var_k(f) = sup |f(x) - f(y)|` over pairs agreeing on the
    /// first `k` coordinates. The result is a lower bound of the true sup
    /// unless the potential's declared memory makes it exact.
    pub fn variation_estimate(
        &self,
        space: &StateSpace,
        k: usize,
        method: VariationMethod,
    ) -> Result<VariationEstimate> {
        self.validate_for(space)?;
        if k == 0 {
            return Err(RuelleError::domain("variation estimate requires k >= 1".to_string()));
        }
        if self.memory.within(k) {
            return Ok(VariationEstimate {
                k,
                value: 0.0,
                lower_bound: false,
                method: method.describe(),
                pairs: 0,
            });
        }
        let n = space.n();
        match method {
            VariationMethod::Exhaustive { cap } => {
                let cap = cap.unwrap_or(DEFAULT_ENUMERATION_CAP);
                let prefixes = word_count(n, k).filter(|&c| c <= cap).ok_or(RuelleError::CapExceeded {
                    n_symbols: n,
                    n: k,
                    cap,
                })?;
                // Tail candidates: every word of the missing finite window
                // when the memory is finite (making the sup exact), else
                // constant-symbol windows with every pad choice.
                let tails = self.tail_candidates(space, k, cap)?;
                let exact = self.memory.finite().is_some();
                let mut value = 0.0;
                let mut pairs = 0usize;
                let mut buf = Vec::new();
                for p in 0..prefixes {
                    let prefix = word_from_index(n, k, p);
                    let mut vals = Vec::with_capacity(tails.len());
                    for (tail, tail_pad) in &tails {
                        buf.clear();
                        buf.extend_from_slice(&prefix);
                        buf.extend_from_slice(tail);
                        vals.push(self.eval_view(space, &BufView { buf: &buf, pad: *tail_pad }));
                    }
                    for i in 0..vals.len() {
                        for j in (i + 1)..vals.len() {
                            value = f64::max(value, (vals[i] - vals[j]).abs());
                            pairs += 1;
                        }
                    }
                }
                Ok(VariationEstimate {
                    k,
                    value,
                    lower_bound: !exact,
                    method: method.describe(),
                    pairs,
                })
            }
            VariationMethod::Sampled { seed, trials } => {
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                let mut value = 0.0;
                let depth = 32usize;
                let mut xbuf = vec![0usize; k + depth];
                let mut ybuf = vec![0usize; k + depth];
                for _ in 0..trials {
                    for i in 0..k {
                        let c = rng.gen_range(0..n);
                        xbuf[i] = c;
                        ybuf[i] = c;
                    }
                    for i in k..k + depth {
                        xbuf[i] = rng.gen_range(0..n);
                        ybuf[i] = rng.gen_range(0..n);
                    }
                    let xpad = rng.gen_range(0..n);
                    let ypad = rng.gen_range(0..n);
                    let fx = self.eval_view(space, &BufView { buf: &xbuf, pad: xpad });
                    let fy = self.eval_view(space, &BufView { buf: &ybuf, pad: ypad });
                    value = f64::max(value, (fx - fy).abs());
                }
                Ok(VariationEstimate {
                    k,
                    value,
                    lower_bound: true,
                    method: method.describe(),
                    pairs: trials,
                })
            }
        }
    }

    fn tail_candidates(
        &self,
        space: &StateSpace,
        k: usize,
        cap: usize,
    ) -> Result<Vec<(Vec<usize>, usize)>> {
        let n = space.n();
        match self.memory {
            Memory::Finite(mem) => {
                debug_assert!(mem > k);
                let window = mem - k;
                let count = word_count(n, window).filter(|&c| c <= cap).ok_or(
                    RuelleError::CapExceeded { n_symbols: n, n: window, cap },
                )?;
                Ok((0..count).map(|i| (word_from_index(n, window, i), 0usize)).collect())
            }
            Memory::Infinite => {
                let depth = 32usize;
                let mut out = Vec::with_capacity(n * n);
                for c in 0..n {
                    for pad in 0..n {
                        out.push((vec![c; depth], pad));
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Exact `||f_m - f||_inf` for a potential of finite memory `k`, by
/// enumerating all k-words.
fn exact_finite_gap(space: &StateSpace, f: &Potential, k: usize, m: usize, pad: usize) -> Result<f64> {
    let n = space.n();
    let count = word_count(n, k).filter(|&c| c <= DEFAULT_ENUMERATION_CAP).ok_or(
        RuelleError::CapExceeded { n_symbols: n, n: k, cap: DEFAULT_ENUMERATION_CAP },
    )?;
    let mut gap = 0.0f64;
    for i in 0..count {
        let w = word_from_index(n, k, i);
        let view = BufView { buf: &w, pad };
        let full = f.eval_view(space, &view);
        let cut = f.eval_view(space, &TruncView { inner: &view, m, pad });
        gap = gap.max((full - cut).abs());
    }
    Ok(gap)
}

/// How [`Potential::variation_estimate`] explores pairs.
#[derive(Clone, Copy, Debug)]
pub enum VariationMethod {
    /// Enumerate all shared prefixes against a deterministic tail set.
    Exhaustive { cap: Option<usize> },
    /// Seeded random prefix and tail pairs.
    Sampled { seed: u64, trials: usize },
}

impl VariationMethod {
    fn describe(self) -> String {
        match self {
            VariationMethod::Exhaustive { .. } => "exhaustive".to_string(),
            VariationMethod::Sampled { seed, trials } => format!("sampled(seed={seed},trials={trials})"),
        }
    }
}

/// Estimate of the k-th variation of a potential.
#[derive(Clone, Debug)]
pub struct VariationEstimate {
    pub k: usize,
    pub value: f64,
    /// True when the reported value may undershoot the true sup.
    pub lower_bound: bool,
    pub method: String,
    /// Pairs examined (0 when the declared memory settles the answer).
    pub pairs: usize,
}

//! Higher-level studies assembled from the operator and kernel layers:
//! Bowen-distortion traces, the pressure Lipschitz bound, thermodynamic-limit
//! marginals and phase-gap evidence, the variational entropy functional, the
//! equilibrium-state truncation pipeline, limsup eigenfunctions, and the
//! closed-form eigenpair of the XY-type long-range potential.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::configuration::{word_count, word_from_index, word_index, BufView, Configuration, CoordView, ShiftView};
use crate::error::{Result, RuelleError};
use crate::kernels::CylinderSet;
use crate::potential::{zeta, Potential};
use crate::space::{StateSpace, Weighting};
use crate::transfer::{
    apply, grid_len, matrix_coefficients, matvec_adjoint, pressure_trace, rpf_solve,
    CylinderFunction, RpfSolution,
};

/// Prefix count above which Bowen prefixes are sampled instead of enumerated.
const BOWEN_ENUM_MAX: usize = 16_384;
const BOWEN_SAMPLED_PREFIXES: usize = 256;
/// Growth thresholds of D_{n_max} over D_{n_max/2} for the trend verdict.
const BOWEN_DIVERGE_RATIO: f64 = 1.1;
const BOWEN_BOUNDED_RATIO: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BowenVerdict {
    BoundedTrend,
    DivergingTrend,
    Inconclusive,
}

impl BowenVerdict {
    pub fn name(self) -> &'static str {
        match self {
            BowenVerdict::BoundedTrend => "bounded-trend",
            BowenVerdict::DivergingTrend => "diverging-trend",
            BowenVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Trace of D_n = max |S_n f(w t) - S_n f(w t')| over shared prefixes w and
/// tail pairs, with a trend verdict. The verdict compares the last entry
/// against the midpoint with a fixed growth threshold; it is a heuristic
/// about the trend, never a certification of the limit.
#[derive(Clone, Debug)]
pub struct BowenEstimate {
    pub entries: Vec<(usize, f64)>,
    pub verdict: BowenVerdict,
    /// How prefixes were chosen at the largest n.
    pub prefix_rule: String,
}

/// Default tail set: every pure pad plus seeded random tails of depth 32.
pub fn standard_tail_set(space: &StateSpace, seed: u64, random_tails: usize) -> Vec<Configuration> {
    let n = space.n();
    let mut tails: Vec<Configuration> = (0..n).map(Configuration::pure_pad).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..random_tails {
        let prefix: Vec<usize> = (0..32).map(|_| rng.gen_range(0..n)).collect();
        let pad = rng.gen_range(0..n);
        tails.push(Configuration::from_prefix(prefix, pad));
    }
    tails
}

/// Distortion of Birkhoff sums across tails sharing a prefix of length n,
/// for n running over 1..=16, powers of two, and {n_max/2, n_max}.
pub fn bowen_estimate(
    space: &StateSpace,
    f: &Potential,
    n_max: usize,
    tails: &[Configuration],
    seed: u64,
) -> Result<BowenEstimate> {
    if n_max < 1 {
        return Err(RuelleError::domain("bowen estimate requires n_max >= 1".to_string()));
    }
    if tails.len() < 2 {
        return Err(RuelleError::domain("bowen estimate needs at least two tails".to_string()));
    }
    f.validate_for(space)?;
    for t in tails {
        t.check_space(space)?;
    }
    let n_sym = space.n();
    let mut ns: Vec<usize> = (1..=n_max.min(16)).collect();
    let mut p = 1usize;
    while p <= n_max {
        ns.push(p);
        p = p.saturating_mul(2);
    }
    ns.push(n_max / 2);
    ns.push(n_max);
    ns.retain(|&n| n >= 1 && n <= n_max);
    ns.sort_unstable();
    ns.dedup();

    // Tail Birkhoff sums only ever differ through the shared prefix, so a
    // prefix list plus the tail set spans the pairs.
    let mut entries = Vec::with_capacity(ns.len());
    let mut prefix_rule = String::new();
    for &n in &ns {
        let enumerable = word_count(n_sym, n).filter(|&c| c <= BOWEN_ENUM_MAX);
        let prefixes: Vec<Vec<usize>> = match enumerable {
            Some(count) => {
                prefix_rule = format!("all {count} prefixes");
                (0..count).map(|i| word_from_index(n_sym, n, i)).collect()
            }
            None => {
                prefix_rule = format!(
                    "{} constant prefixes + {BOWEN_SAMPLED_PREFIXES} sampled",
                    n_sym
                );
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                rng.set_stream(n as u64);
                let mut ws: Vec<Vec<usize>> = (0..n_sym).map(|a| vec![a; n]).collect();
                for _ in 0..BOWEN_SAMPLED_PREFIXES {
                    ws.push((0..n).map(|_| rng.gen_range(0..n_sym)).collect());
                }
                ws
            }
        };
        let mut d_n = 0.0f64;
        for w in &prefixes {
            let mut sums = Vec::with_capacity(tails.len());
            for t in tails {
                let mut prefix = w.clone();
                prefix.extend_from_slice(&t.prefix);
                let x = Configuration::from_prefix(prefix, t.pad);
                sums.push(f.birkhoff_sum(space, &x, n)?);
            }
            for i in 0..sums.len() {
                for j in (i + 1)..sums.len() {
                    d_n = d_n.max((sums[i] - sums[j]).abs());
                }
            }
        }
        entries.push((n, d_n));
    }

    let d_full = entries.last().map(|e| e.1).unwrap_or(0.0);
    let d_half = entries
        .iter()
        .find(|e| e.0 == n_max / 2)
        .map(|e| e.1)
        .unwrap_or(d_full);
    let verdict = if d_full < 1e-12 {
        BowenVerdict::BoundedTrend
    } else if n_max < 4 || d_half < 1e-12 {
        BowenVerdict::Inconclusive
    } else if d_full > BOWEN_DIVERGE_RATIO * d_half {
        BowenVerdict::DivergingTrend
    } else if d_full <= BOWEN_BOUNDED_RATIO * d_half {
        BowenVerdict::BoundedTrend
    } else {
        BowenVerdict::Inconclusive
    };
    Ok(BowenEstimate { entries, verdict, prefix_rule })
}

/// Both sides of |p(f) - p(g)| <= ||f - g||_inf at truncation scale n, m.
#[derive(Clone, Debug)]
pub struct LipschitzReport {
    pub pressure_f: f64,
    pub pressure_g: f64,
    pub pressure_gap: f64,
    pub sup_difference: f64,
    pub holds: bool,
    pub n: usize,
    pub memory: usize,
}

/// Largest observed |f - g| over depth-`depth` words crossed with every
/// pure-pad tail, plus seeded random deeper points.
fn sup_difference_estimate(
    space: &StateSpace,
    f: &Potential,
    g: &Potential,
    depth: usize,
    seed: u64,
) -> Result<f64> {
    let n_sym = space.n();
    let mut best = 0.0f64;
    let count = word_count(n_sym, depth)
        .filter(|&c| c <= BOWEN_ENUM_MAX)
        .ok_or(RuelleError::CapExceeded { n_symbols: n_sym, n: depth, cap: BOWEN_ENUM_MAX })?;
    for i in 0..count {
        let w = word_from_index(n_sym, depth, i);
        for pad in 0..n_sym {
            let v = BufView { buf: &w, pad };
            let d = (f.eval_view(space, &v) - g.eval_view(space, &v)).abs();
            best = best.max(d);
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..64 {
        let w: Vec<usize> = (0..depth + 32).map(|_| rng.gen_range(0..n_sym)).collect();
        let pad = rng.gen_range(0..n_sym);
        let v = BufView { buf: &w, pad };
        let d = (f.eval_view(space, &v) - g.eval_view(space, &v)).abs();
        best = best.max(d);
    }
    Ok(best)
}

/// Checks the pressure Lipschitz bound on finite-scale estimates computed
/// at a shared base point and truncation.
pub fn pressure_lipschitz_check(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    g: &Potential,
    n: usize,
    m: usize,
    x: &Configuration,
) -> Result<LipschitzReport> {
    let pf = pressure_trace(space, weighting, f, n, x, m, 0)?;
    let pg = pressure_trace(space, weighting, g, n, x, m, 0)?;
    let depth = f
        .memory()
        .finite()
        .unwrap_or(8)
        .max(g.memory().finite().unwrap_or(8))
        .clamp(1, 12);
    let sup = sup_difference_estimate(space, f, g, depth, 0x5eed)?;
    let gap = (pf.final_estimate - pg.final_estimate).abs();
    // Finite-n estimates carry their own truncation error; allow it in the
    // comparison via the reported Cauchy gaps.
    let slack = pf.cauchy_gap.abs() + pg.cauchy_gap.abs() + 1e-9;
    Ok(LipschitzReport {
        pressure_f: pf.final_estimate,
        pressure_g: pg.final_estimate,
        pressure_gap: gap,
        sup_difference: sup,
        holds: gap <= sup + slack,
        n,
        memory: m,
    })
}

/// A probability vector over the memory-m cylinder words.
#[derive(Clone, Debug)]
pub struct MarginalMeasure {
    memory: usize,
    n_symbols: usize,
    mass: Vec<f64>,
    pub provenance: String,
}

impl MarginalMeasure {
    pub fn new(space: &StateSpace, memory: usize, mass: Vec<f64>, provenance: String) -> Result<MarginalMeasure> {
        let len = grid_len(space.n(), memory)?;
        if mass.len() != len {
            return Err(RuelleError::domain(format!(
                "marginal over memory {memory} needs {len} masses, got {}",
                mass.len()
            )));
        }
        let mut total = 0.0;
        for &v in &mass {
            if !(v >= 0.0) {
                return Err(RuelleError::domain(format!("marginal mass {v} is negative or NaN")));
            }
            total += v;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(RuelleError::domain(format!("marginal masses sum to {total}, not 1")));
        }
        Ok(MarginalMeasure { memory, n_symbols: space.n(), mass, provenance })
    }

    fn from_weights(space: &StateSpace, memory: usize, mut mass: Vec<f64>, provenance: String) -> MarginalMeasure {
        let total: f64 = mass.iter().sum();
        for v in &mut mass {
            *v /= total;
        }
        MarginalMeasure { memory, n_symbols: space.n(), mass, provenance }
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass_of_word(&self, word: &[usize]) -> f64 {
        self.mass[word_index(self.n_symbols, word)]
    }

    /// Probability of a cylinder set whose constraints live within the
    /// marginal window.
    pub fn probability(&self, set: &CylinderSet) -> Result<f64> {
        if set.max_coordinate() > self.memory {
            return Err(RuelleError::domain(format!(
                "cylinder reaches coordinate {} but the marginal stops at {}",
                set.max_coordinate(),
                self.memory
            )));
        }
        let mut total = 0.0;
        for (idx, &v) in self.mass.iter().enumerate() {
            let w = word_from_index(self.n_symbols, self.memory, idx);
            if set.constraints().iter().all(|&(i, a)| w[i - 1] == a) {
                total += v;
            }
        }
        Ok(total)
    }

    /// Sums out the trailing coordinates down to memory m.
    pub fn marginalize(&self, m: usize) -> Result<MarginalMeasure> {
        if m > self.memory {
            return Err(RuelleError::domain(format!(
                "cannot widen a marginal from memory {} to {m}",
                self.memory
            )));
        }
        let block = self.n_symbols.pow((self.memory - m) as u32);
        let len = self.mass.len() / block;
        let mut mass = vec![0.0; len];
        for (w, out) in mass.iter_mut().enumerate() {
            *out = self.mass[w * block..(w + 1) * block].iter().sum();
        }
        Ok(MarginalMeasure {
            memory: m,
            n_symbols: self.n_symbols,
            mass,
            provenance: format!("{} marginalized to {m}", self.provenance),
        })
    }

    /// Total-variation distance after reducing both to the common memory.
    pub fn tv_distance(&self, other: &MarginalMeasure) -> Result<f64> {
        if self.n_symbols != other.n_symbols {
            return Err(RuelleError::domain("marginals live on different alphabets".to_string()));
        }
        let m = self.memory.min(other.memory);
        let a = self.marginalize(m)?;
        let b = other.marginalize(m)?;
        let sum: f64 = a.mass.iter().zip(&b.mass).map(|(x, y)| (x - y).abs()).sum();
        Ok(0.5 * sum)
    }

    /// Expectation of a finite-memory potential (memory <= marginal memory).
    pub fn integrate(&self, space: &StateSpace, g: &Potential) -> Result<f64> {
        if !g.memory().within(self.memory) {
            return Err(RuelleError::domain(format!(
                "cannot integrate {}: memory {} exceeds the marginal window {}",
                g.name(),
                g.memory(),
                self.memory
            )));
        }
        let mut acc = 0.0;
        for (idx, &v) in self.mass.iter().enumerate() {
            let w = word_from_index(self.n_symbols, self.memory, idx);
            acc += v * g.eval_view(space, &BufView { buf: &w, pad: 0 });
        }
        Ok(acc)
    }
}

/// Marginal of the boundary-conditioned measure on m-cylinders after n
/// transfer steps: mass(w) = K_n(indicator of [w], y).
///
/// Finite-memory potentials go through adjoint matrix powers on the
/// memory-max(m,k) grid (exact, linear in n); infinite-memory ones fall
/// back to one enumeration of M^n binned by leading word.
pub fn thermodynamic_marginal(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    n: usize,
    m: usize,
    y: &Configuration,
    cap: usize,
) -> Result<MarginalMeasure> {
    if m < 1 || n < m {
        return Err(RuelleError::domain("thermodynamic marginal requires 1 <= m <= n".to_string()));
    }
    f.validate_for(space)?;
    y.check_space(space)?;
    let provenance = format!(
        "kernel marginal: f={} n={n} m={m} boundary={} weighting={}",
        f.name(),
        y.describe(),
        weighting.name()
    );
    if let Some(k) = f.memory().finite() {
        let g = m.max(k).max(1);
        let len = grid_len(space.n(), g)?;
        if len <= cap {
            let c = matrix_coefficients(space, weighting, f, g)?;
            let mut u = vec![0.0; len];
            let z: Vec<usize> = (1..=g).map(|i| y.coord(n + i)).collect();
            u[word_index(space.n(), &z)] = 1.0;
            let mut next = vec![0.0; len];
            for _ in 0..n {
                matvec_adjoint(&c, space.n(), &u, &mut next);
                std::mem::swap(&mut u, &mut next);
                let total: f64 = u.iter().sum();
                if !(total > 0.0) {
                    return Err(RuelleError::domain(
                        "boundary measure lost all mass; the transfer coefficients are degenerate".to_string(),
                    ));
                }
                for v in u.iter_mut() {
                    *v /= total;
                }
            }
            let full = MarginalMeasure::from_weights(space, g, u, provenance);
            return full.marginalize(m);
        }
    }
    let terms = word_count(space.n(), n)
        .filter(|&c| c <= cap)
        .ok_or(RuelleError::CapExceeded { n_symbols: space.n(), n, cap })?;
    let n_sym = space.n();
    let boundary = ShiftView { inner: y, by: n };
    // Pass 1: shared shift; pass 2: bin exp weights by the first m symbols.
    let mut word = vec![0usize; n];
    let mut shift = f64::NEG_INFINITY;
    for idx in 0..terms {
        let t = weighted_sum(space, weighting, f, &boundary, &mut word, n_sym, idx);
        shift = shift.max(t);
    }
    let block = n_sym.pow((n - m) as u32);
    let mut bins = vec![0.0; grid_len(n_sym, m)?];
    for idx in 0..terms {
        let t = weighted_sum(space, weighting, f, &boundary, &mut word, n_sym, idx);
        bins[idx / block] += (t - shift).exp();
    }
    Ok(MarginalMeasure::from_weights(space, m, bins, provenance))
}

/// Birkhoff sum plus branch-weight logs of the word with the given index
/// prepended to the boundary.
fn weighted_sum(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    boundary: &dyn CoordView,
    word: &mut [usize],
    n_sym: usize,
    idx: usize,
) -> f64 {
    let n = word.len();
    let mut ix = idx;
    for k in (0..n).rev() {
        word[k] = ix % n_sym;
        ix /= n_sym;
    }
    let mut t = 0.0;
    for p in (1..=n).rev() {
        let suffix = crate::configuration::ChainView { head: &word[p - 1..n], tail: boundary };
        t += f.eval_view(space, &suffix) + weighting.log_branch_weight(space, word[p - 1]);
    }
    t
}

/// Total-variation gap between boundary-conditioned marginals across n.
#[derive(Clone, Debug)]
pub struct PhaseGapTrace {
    pub memory: usize,
    pub entries: Vec<(usize, f64)>,
}

/// Evidence probe for non-uniqueness: a gap that does not vanish as n grows
/// is how a phase transition shows up at finite scale. The trace reports
/// the trend; it never certifies the limit.
pub fn phase_gap_probe(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    y1: &Configuration,
    y2: &Configuration,
    n_list: &[usize],
    m: usize,
    cap: usize,
) -> Result<PhaseGapTrace> {
    let mut entries = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let a = thermodynamic_marginal(space, weighting, f, n, m, y1, cap)?;
        let b = thermodynamic_marginal(space, weighting, f, n, m, y2, cap)?;
        entries.push((n, a.tv_distance(&b)?));
    }
    Ok(PhaseGapTrace { memory: m, entries })
}

/// Upper bound of the measure-theoretic entropy through the variational
/// formula h(mu) = inf_g (-int g dmu + log lambda_g).
#[derive(Clone, Debug)]
pub struct EntropyEstimate {
    pub value: f64,
    pub argmin_candidate: String,
    pub candidate_count: usize,
}

/// Evaluates the entropy objective over the candidates plus g = 0, which
/// pins the estimate at or below log lambda_0 (zero for probability
/// weighting, log N for counting).
pub fn entropy_estimate(
    space: &StateSpace,
    weighting: Weighting,
    mu: &MarginalMeasure,
    candidates: &[Potential],
) -> Result<EntropyEstimate> {
    let zero = Potential::constant(0.0);
    let mut best = f64::INFINITY;
    let mut argmin = String::new();
    let mut count = 0;
    for g in std::iter::once(&zero).chain(candidates.iter()) {
        if !g.memory().within(mu.memory()) {
            return Err(RuelleError::domain(format!(
                "entropy candidate {} has memory {} beyond the marginal window {}",
                g.name(),
                g.memory(),
                mu.memory()
            )));
        }
        let sol = rpf_solve(space, weighting, g, 1e-12, 100_000)?;
        let objective = -mu.integrate(space, g)? + sol.log_lambda;
        count += 1;
        if objective < best {
            best = objective;
            argmin = g.name().to_string();
        }
    }
    Ok(EntropyEstimate { value: best, argmin_candidate: argmin, candidate_count: count })
}

/// Default variational candidate family: finite-range potentials with table
/// entries on a coarse grid (memory 2 for binary alphabets, memory 1
/// otherwise), the supplied extras, and nothing else. The entropy routine
/// adds g = 0 by itself. Any finite family yields a valid upper bound;
/// including the potential under study makes the bound sharp at its own
/// equilibrium.
pub fn standard_candidate_family(space: &StateSpace, extras: &[&Potential]) -> Vec<Potential> {
    let n = space.n();
    let window = if n == 2 { 2 } else { 1 };
    let dims = n.pow(window as u32);
    let coeffs: &[f64] = if 5usize.pow(dims as u32) <= 1024 {
        &[-1.0, -0.5, 0.0, 0.5, 1.0]
    } else if 3usize.pow(dims as u32) <= 1024 {
        &[-1.0, 0.0, 1.0]
    } else {
        &[0.0]
    };
    let total = coeffs.len().pow(dims as u32);
    let mut family = Vec::with_capacity(total + extras.len());
    for idx in 0..total {
        let mut table = Vec::with_capacity(dims);
        let mut ix = idx;
        for _ in 0..dims {
            table.push(coeffs[ix % coeffs.len()]);
            ix /= coeffs.len();
        }
        if let Ok(p) = Potential::finite_range(n, window, table) {
            family.push(p);
        }
    }
    for &e in extras {
        family.push(e.clone());
    }
    family
}

/// One truncation stage of the equilibrium pipeline.
#[derive(Clone, Debug)]
pub struct EquilibriumStage {
    pub m: usize,
    pub solution: RpfSolution,
    pub marginal: MarginalMeasure,
    pub entropy: EntropyEstimate,
    pub integral: f64,
    /// |entropy + int f_m dmu - log lambda_m|.
    pub defect: f64,
    pub cylinder_probs: Vec<f64>,
    pub truncation_gap: Option<f64>,
}

/// Truncates f at each memory in the list, solves the eigenproblem, forms
/// the candidate equilibrium marginal mass ~ h * nu, and reports the
/// variational defect plus tracked cylinder probabilities. Weak convergence
/// across m shows up as the cylinder probabilities going Cauchy.
pub fn equilibrium_pipeline(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    memory_list: &[usize],
    report_sets: &[CylinderSet],
    trunc_pad: usize,
) -> Result<Vec<EquilibriumStage>> {
    if memory_list.is_empty() {
        return Err(RuelleError::domain("equilibrium pipeline needs at least one memory".to_string()));
    }
    for w in memory_list.windows(2) {
        if w[1] <= w[0] {
            return Err(RuelleError::domain("memory list must be strictly ascending".to_string()));
        }
    }
    if memory_list[0] < 1 {
        return Err(RuelleError::domain("equilibrium memories start at 1".to_string()));
    }
    let mut stages = Vec::with_capacity(memory_list.len());
    for &m in memory_list {
        let fm = f.truncate_local(space, m, trunc_pad)?;
        let sol = rpf_solve(space, weighting, &fm, 1e-12, 100_000)?;
        let k = sol.memory;
        let h = sol.h.to_linear()?;
        let mass: Vec<f64> = h.raw_values().iter().zip(&sol.nu).map(|(a, b)| a * b).collect();
        let marginal = MarginalMeasure::from_weights(
            space,
            k,
            mass,
            format!("equilibrium of {} (h*nu at memory {k})", fm.name()),
        );
        let family = standard_candidate_family(space, &[&fm]);
        let entropy = entropy_estimate(space, weighting, &marginal, &family)?;
        let integral = marginal.integrate(space, &fm)?;
        let defect = (entropy.value + integral - sol.log_lambda).abs();
        let mut cylinder_probs = Vec::with_capacity(report_sets.len());
        for set in report_sets {
            cylinder_probs.push(marginal.probability(set)?);
        }
        stages.push(EquilibriumStage {
            m,
            solution: sol,
            marginal,
            entropy,
            integral,
            defect,
            cylinder_probs,
            truncation_gap: fm.truncation_gap(),
        });
    }
    Ok(stages)
}

/// Running-max eigenfunction candidate from the iterates L^n 1 / lambda^n.
#[derive(Clone, Debug)]
pub struct LimsupReport {
    pub lambda: f64,
    /// (n, ||L^n 1 / lambda^n||_inf).
    pub sup_trace: Vec<(usize, f64)>,
    /// Pointwise running max after burn-in, normalized to sup 1.
    pub eigenfunction: CylinderFunction,
    /// ||L g - lambda g||_inf / (lambda ||g||_inf) of the candidate.
    pub residual: f64,
    pub burn_in: usize,
}

/// Tracks g_n = L^n(1)/lambda^n on the memory-m grid. A bounded sup trace
/// is the hypothesis under which the running max is a genuine eigenfunction
/// candidate; the final eigen-residual measures how close it got.
pub fn limsup_eigenfunction(
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    n_max: usize,
    m: usize,
    trunc_pad: usize,
    lambda_hint: Option<f64>,
) -> Result<LimsupReport> {
    if n_max < 4 {
        return Err(RuelleError::domain("limsup iteration requires n_max >= 4".to_string()));
    }
    let len = grid_len(space.n(), m)?;
    let log_lambda = match lambda_hint {
        Some(l) => {
            if !(l > 0.0) {
                return Err(RuelleError::domain(format!("lambda hint must be positive, got {l}")));
            }
            l.ln()
        }
        None => {
            if f.memory().within(m) {
                rpf_solve(space, weighting, f, 1e-13, 200_000)?.log_lambda
            } else {
                // Last single-step growth rate of the same iteration.
                let (_, steps) = crate::transfer::iterate_log(space, weighting, f, n_max, m, trunc_pad)?;
                *steps.last().unwrap()
            }
        }
    };
    let mut phi = CylinderFunction::from_log_values(space, m, vec![0.0; len], 0.0)?;
    // offset tracks log ||scaling removed so far|| minus n log lambda.
    let mut offset = 0.0;
    let burn_in = n_max / 4;
    let mut runmax = vec![f64::NEG_INFINITY; len];
    let mut sup_trace = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        phi = apply(space, weighting, f, &phi, trunc_pad)?;
        let step_max = phi
            .raw_values()
            .iter()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let vals: Vec<f64> = phi.raw_values().iter().map(|v| v - step_max).collect();
        phi = CylinderFunction::from_log_values(space, m, vals, 0.0)?;
        offset += step_max - log_lambda;
        sup_trace.push((n, offset.exp()));
        if n > burn_in {
            for (r, v) in runmax.iter_mut().zip(phi.raw_values()) {
                *r = r.max(offset + v);
            }
        }
    }
    let top = runmax.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let g_logs: Vec<f64> = runmax.iter().map(|v| v - top).collect();
    let g = CylinderFunction::from_log_values(space, m, g_logs, 0.0)?.to_linear()?;
    let lg = apply(space, weighting, f, &g, trunc_pad)?;
    let lambda = log_lambda.exp();
    let mut residual = 0.0f64;
    for (a, b) in lg.raw_values().iter().zip(g.raw_values()) {
        residual = residual.max((a - lambda * b).abs());
    }
    residual /= lambda;
    Ok(LimsupReport { lambda, sup_trace, eigenfunction: g, residual, burn_in })
}

/// Closed-form eigenpair check for the XY-type long-range potential.
#[derive(Clone, Debug)]
pub struct XyReport {
    pub gamma: f64,
    pub m: usize,
    pub weighting: Weighting,
    pub alpha: Vec<f64>,
    /// Eigenvalue whose relation closes under the given weighting.
    pub lambda_matched: f64,
    pub lambda_rejected: f64,
    pub matched_convention: String,
    /// Max |log L h - log lambda - log h| over words ending in the pad.
    pub slice_residual_matched: f64,
    pub slice_residual_rejected: f64,
    /// Same max over the full grid; the pad-adjacent truncation term makes
    /// this 2 alpha_m at the opposite corner.
    pub full_residual_matched: f64,
    /// max |log h(w) + log h(-w)|, exactly zero by construction.
    pub symmetry_defect: f64,
}

/// Builds h = exp(sum alpha_k x_k) from the zeta tail sums and verifies
/// L_{f_m} h = lambda h on the slice where the truncation pad agrees with
/// the last grid coordinate. The telescoping alpha_{k-1} = k^{-gamma} +
/// alpha_k makes the slice relation exact; both a priori conventions are
/// evaluated and the one matching the weighting is reported.
pub fn xy_closed_form(weighting: Weighting, gamma: f64, m: usize, wide_gamma: bool) -> Result<XyReport> {
    if !(gamma > 1.5) && !wide_gamma {
        return Err(RuelleError::domain(format!(
            "xy closed form expects gamma > 3/2 (got {gamma}); pass wide_gamma to override"
        )));
    }
    if m < 2 {
        return Err(RuelleError::domain("xy closed form requires m >= 2".to_string()));
    }
    let space = StateSpace::uniform_spins();
    let f = Potential::long_range(gamma)?;
    let fm = f.truncate_local(&space, m, 0)?;
    // Anchor the tail table deep enough that the Euler-Maclaurin remainder
    // at the anchor is far below the residual tolerances; a short table
    // anchored at m would bleed ~1e-7 into every alpha.
    let alpha = crate::potential::tail_table(gamma, crate::potential::TAIL_TABLE_LEN.max(m + 1));
    let len = grid_len(space.n(), m)?;
    let mut logs = vec![0.0; len];
    for (idx, slot) in logs.iter_mut().enumerate() {
        let w = word_from_index(space.n(), m, idx);
        let mut s = 0.0;
        for (k, &a) in w.iter().enumerate() {
            s += alpha[k + 1] * space.coord_value(a);
        }
        *slot = s;
    }
    let mut symmetry_defect = 0.0f64;
    for idx in 0..len {
        let flipped = len - 1 - idx;
        symmetry_defect = symmetry_defect.max((logs[idx] + logs[flipped]).abs());
    }
    let h = CylinderFunction::from_log_values(&space, m, logs.clone(), 0.0)?;
    let lh = apply(&space, weighting, &fm, &h, 0)?;
    let z = zeta(gamma, 1e-14)?;
    let (matched, rejected, convention) = match weighting {
        Weighting::Probability => (z.cosh(), 2.0 * z.cosh(), "cosh(zeta)"),
        Weighting::Counting => (2.0 * z.cosh(), z.cosh(), "2cosh(zeta)"),
    };
    let mut slice_matched = 0.0f64;
    let mut slice_rejected = 0.0f64;
    let mut full_matched = 0.0f64;
    let scale_gap = lh.scale().unwrap_or(0.0) - h.scale().unwrap_or(0.0);
    for idx in 0..len {
        let r = lh.raw_values()[idx] + scale_gap - logs[idx];
        let dm = (r - matched.ln()).abs();
        full_matched = full_matched.max(dm);
        // Words whose last coordinate equals the pad: there the truncation
        // term cancels and the telescoped relation is exact.
        if idx % space.n() == 0 {
            slice_matched = slice_matched.max(dm);
            slice_rejected = slice_rejected.max((r - rejected.ln()).abs());
        }
    }
    Ok(XyReport {
        gamma,
        m,
        weighting,
        alpha: alpha[1..=m].to_vec(),
        lambda_matched: matched,
        lambda_rejected: rejected,
        matched_convention: convention.to_string(),
        slice_residual_matched: slice_matched,
        slice_residual_rejected: slice_rejected,
        full_residual_matched: full_matched,
        symmetry_defect,
    })
}

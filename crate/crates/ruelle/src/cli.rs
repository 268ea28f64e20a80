//! Config-driven runs: strict JSON in, JSON + CSV artifacts out.
//!
//! The numeric payload of a run is a pure function of the config, seed
//! included. Wall time is reported next to the payload, never inside it,
//! so reruns of the same config produce byte-identical payload and CSV
//! bytes. Floats are serialized with 17 significant digits in scientific
//! notation, which round-trips every finite f64; keys are emitted sorted.
//!
//! Output files are named `{command}_{hash}.json` plus per-trace CSVs with
//! the same stem, where `hash` is a prefix of the SHA-256 of the canonical
//! config text. Distinct configs never collide on disk; identical configs
//! overwrite their own artifacts. Trace CSVs are written the moment the
//! trace exists, so a failure later in a multi-stage run leaves the
//! finished stages on disk.

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{
    bowen_estimate, equilibrium_pipeline, standard_tail_set, xy_closed_form, EquilibriumStage,
};
use crate::configuration::Configuration;
use crate::error::{Result, RuelleError};
use crate::kernels::{
    dlr_residual, kernel_value, properness_check, quasilocality_probe, strong_non_null_probe,
    uniqueness_ratio_probe, CylinderSet, KernelMethod, KernelOptions, KernelValue, Observable,
    ProbeEntry, SamplingPlan,
};
use crate::potential::Potential;
use crate::space::{StateSpace, Weighting};
use crate::transfer::{pressure_trace, rpf_solve, CylinderFunction, PressureTrace, RpfSolution};

/// Stamped into every JSON artifact.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

const DEFAULT_TOL: f64 = 1e-12;
const DEFAULT_MAX_ITER: usize = 100_000;
const DEFAULT_SAMPLES: usize = 1 << 16;

// ---------------------------------------------------------------------------
// config schema

/// State space description. `finite` takes labels and optional a priori
/// weights; `circle` discretizes the unit circle uniformly.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Finite {
        labels: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Circle { node_count: usize },
}

impl SpaceSpec {
    pub fn build(&self) -> Result<StateSpace> {
        match self {
            SpaceSpec::Finite { labels, weights } => {
                let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
                StateSpace::make_finite_alphabet(&refs, weights.as_deref())
            }
            SpaceSpec::Circle { node_count } => StateSpace::make_circle(*node_count),
        }
    }
}

/// Potential by registry name plus scalar parameters. `finite_range`
/// additionally takes its coefficient table (lexicographic over the window).
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<f64>>,
}

/// Registry of config-constructible potentials: name and parameter keys.
pub fn potential_registry() -> &'static [(&'static str, &'static [&'static str])] {
    &[
        ("constant", &["c"]),
        ("single_site", &["beta"]),
        ("ising", &["beta"]),
        ("finite_range", &["window"]),
        ("long_range", &["gamma"]),
        ("double_hofbauer", &["gamma", "delta"]),
    ]
}

pub fn build_potential(spec: &PotentialSpec, space: &StateSpace) -> Result<Potential> {
    let names: Vec<&str> = potential_registry().iter().map(|(n, _)| *n).collect();
    let entry = potential_registry()
        .iter()
        .find(|(n, _)| *n == spec.name)
        .ok_or_else(|| {
            RuelleError::config(format!(
                "unknown potential \"{}\"; known names: {}",
                spec.name,
                names.join(", ")
            ))
        })?;
    for key in spec.params.keys() {
        if !entry.1.contains(&key.as_str()) {
            return Err(RuelleError::config(format!(
                "potential \"{}\" does not take parameter \"{key}\"",
                spec.name
            )));
        }
    }
    if spec.table.is_some() && spec.name != "finite_range" {
        return Err(RuelleError::config(format!(
            "coefficient table is only meaningful for \"finite_range\", not \"{}\"",
            spec.name
        )));
    }
    let get = |k: &str| {
        spec.params.get(k).copied().ok_or_else(|| {
            RuelleError::config(format!(
                "potential \"{}\" requires parameter \"{k}\"",
                spec.name
            ))
        })
    };
    let f = match spec.name.as_str() {
        "constant" => Potential::constant(get("c")?),
        "single_site" => Potential::single_site(get("beta")?),
        "ising" => Potential::ising(get("beta")?),
        "finite_range" => {
            let raw = get("window")?;
            if raw.fract() != 0.0 || raw < 1.0 || raw > 32.0 {
                return Err(RuelleError::config(format!(
                    "finite_range window must be an integer in 1..=32, got {raw}"
                )));
            }
            let table = spec.table.clone().ok_or_else(|| {
                RuelleError::config("finite_range requires a coefficient table".to_string())
            })?;
            Potential::finite_range(space.n(), raw as usize, table)?
        }
        "long_range" => Potential::long_range(get("gamma")?)?,
        "double_hofbauer" => Potential::double_hofbauer(get("gamma")?, get("delta")?)?,
        _ => unreachable!(),
    };
    f.validate_for(space)?;
    Ok(f)
}

/// Boundary configuration: explicit prefix, then a constant pad symbol.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySpec {
    #[serde(default)]
    pub prefix: Vec<usize>,
    pub pad: usize,
}

impl BoundarySpec {
    pub fn build(&self, space: &StateSpace) -> Result<Configuration> {
        let c = Configuration::from_prefix(self.prefix.clone(), self.pad);
        c.check_space(space)?;
        Ok(c)
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    One,
    /// Indicator of the cylinder fixing coordinate -> symbol pairs.
    Indicator { constraints: Vec<(usize, usize)> },
    /// Function of the first `memory` coordinates, values in lexicographic
    /// word order.
    Grid { memory: usize, values: Vec<f64> },
    /// Grid function read at coordinates offset+1 .. offset+memory.
    ShiftedGrid { offset: usize, memory: usize, values: Vec<f64> },
}

impl ObservableSpec {
    pub fn build(&self, space: &StateSpace) -> Result<Observable> {
        Ok(match self {
            ObservableSpec::One => Observable::One,
            ObservableSpec::Indicator { constraints } => {
                Observable::Indicator(CylinderSet::new(constraints.clone())?)
            }
            ObservableSpec::Grid { memory, values } => {
                Observable::Grid(CylinderFunction::from_values(space, *memory, values.clone())?)
            }
            ObservableSpec::ShiftedGrid { offset, memory, values } => Observable::ShiftedGrid {
                offset: *offset,
                grid: CylinderFunction::from_values(space, *memory, values.clone())?,
            },
        })
    }
}

/// One run. Unknown keys are rejected by name; optional keys default per
/// command. Every sampled code path requires an explicit `seed`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub state_space: SpaceSpec,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub weighting: Option<String>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_max: Option<usize>,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub r: Option<usize>,
    #[serde(default)]
    pub i_max: Option<usize>,
    #[serde(default)]
    pub symbol: Option<usize>,
    #[serde(default)]
    pub trunc_pad: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub cap: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub sampling: Option<bool>,
    #[serde(default)]
    pub probe: Option<String>,
    #[serde(default)]
    pub boundary: Option<BoundarySpec>,
    #[serde(default)]
    pub boundaries: Option<Vec<BoundarySpec>>,
    #[serde(default)]
    pub tails: Option<Vec<BoundarySpec>>,
    #[serde(default)]
    pub depths: Option<Vec<usize>>,
    #[serde(default)]
    pub memory_list: Option<Vec<usize>>,
    #[serde(default)]
    pub observable: Option<ObservableSpec>,
    #[serde(default)]
    pub cylinder: Option<Vec<(usize, usize)>>,
    #[serde(default)]
    pub report_cylinders: Option<Vec<Vec<(usize, usize)>>>,
    #[serde(default)]
    pub wide_gamma: Option<bool>,
    /// Rayon worker count. Affects wall time only, never numeric output.
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Pressure,
    Rpf,
    Kernel,
    Probe,
    Bowen,
    Hofbauer,
    Equilibrium,
    Xy,
}

impl Command {
    pub fn parse(s: &str) -> Result<Command> {
        Ok(match s {
            "pressure" => Command::Pressure,
            "rpf" => Command::Rpf,
            "kernel" => Command::Kernel,
            "probe" => Command::Probe,
            "bowen" => Command::Bowen,
            "hofbauer" => Command::Hofbauer,
            "equilibrium" => Command::Equilibrium,
            "xy" => Command::Xy,
            other => {
                return Err(RuelleError::config(format!(
                    "unknown command \"{other}\"; known commands: pressure, rpf, kernel, probe, bowen, hofbauer, equilibrium, xy"
                )))
            }
        })
    }
}

fn parse_weighting(s: Option<&str>, default: Weighting) -> Result<Weighting> {
    match s {
        None => Ok(default),
        Some("probability") => Ok(Weighting::Probability),
        Some("counting") => Ok(Weighting::Counting),
        Some(other) => Err(RuelleError::config(format!(
            "unknown weighting \"{other}\"; use \"probability\" or \"counting\""
        ))),
    }
}

// ---------------------------------------------------------------------------
// loading and overrides

/// Parses the config text strictly and runs the semantic checks (space and
/// potential construction, per-command requirements). Returns the typed
/// config together with the raw value that gets echoed into artifacts.
pub fn load_config(text: &str) -> Result<(RunConfig, Value)> {
    let raw: Value = serde_json::from_str(text)?;
    typed_config(&raw).map(|c| (c, raw))
}

fn typed_config(raw: &Value) -> Result<RunConfig> {
    let config: RunConfig = serde_json::from_value(raw.clone())?;
    validate_semantics(&config)?;
    Ok(config)
}

/// Applies `--set key=value` pairs onto the raw config. Only top-level
/// scalar keys may be set; structured values stay file-only so that the
/// echoed config remains reviewable next to its source.
pub fn apply_overrides(raw: &mut Value, sets: &[String]) -> Result<()> {
    let obj = raw
        .as_object_mut()
        .ok_or_else(|| RuelleError::config("config root must be a JSON object".to_string()))?;
    for s in sets {
        let (key, text) = s.split_once('=').ok_or_else(|| {
            RuelleError::config(format!("--set expects key=value, got \"{s}\""))
        })?;
        if let Some(existing) = obj.get(key) {
            if existing.is_object() || existing.is_array() {
                return Err(RuelleError::config(format!(
                    "--set only replaces top-level scalars; \"{key}\" holds a structured value"
                )));
            }
        }
        let parsed: Value =
            serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()));
        if parsed.is_object() || parsed.is_array() {
            return Err(RuelleError::config(format!(
                "--set values must be scalars; \"{key}\" was given a structured value"
            )));
        }
        obj.insert(key.to_string(), parsed);
    }
    Ok(())
}

fn validate_semantics(config: &RunConfig) -> Result<()> {
    let command = Command::parse(&config.command)?;
    let space = config.state_space.build()?;
    let f = build_potential(&config.potential, &space)?;
    let default_weighting = match command {
        Command::Hofbauer => Weighting::Counting,
        _ => Weighting::Probability,
    };
    parse_weighting(config.weighting.as_deref(), default_weighting)?;
    for spec in config
        .boundary
        .iter()
        .chain(config.boundaries.iter().flatten())
        .chain(config.tails.iter().flatten())
    {
        spec.build(&space)?;
    }
    if let Some(obs) = &config.observable {
        obs.build(&space)?;
    }
    if let Some(c) = &config.cylinder {
        CylinderSet::new(c.clone())?;
    }
    for c in config.report_cylinders.iter().flatten() {
        CylinderSet::new(c.clone())?;
    }
    if config.sampling == Some(true) && config.seed.is_none() {
        return Err(RuelleError::MissingSeed);
    }
    match command {
        Command::Kernel => {
            if config.n.is_none() {
                return Err(RuelleError::config("kernel command requires \"n\"".to_string()));
            }
        }
        Command::Probe => {
            let kind = config.probe.as_deref().ok_or_else(|| {
                RuelleError::config(
                    "probe command requires \"probe\": one of snn, quasilocality, dlr, properness, uniqueness"
                        .to_string(),
                )
            })?;
            match kind {
                "snn" => {}
                "quasilocality" => {
                    if config.n.is_none() {
                        return Err(RuelleError::config(
                            "quasilocality probe requires \"n\"".to_string(),
                        ));
                    }
                    if config.observable.is_none() && config.cylinder.is_none() {
                        return Err(RuelleError::config(
                            "quasilocality probe requires \"observable\" or \"cylinder\""
                                .to_string(),
                        ));
                    }
                }
                "dlr" => {
                    if config.n.is_none() || config.r.is_none() {
                        return Err(RuelleError::config(
                            "dlr probe requires \"n\" and \"r\"".to_string(),
                        ));
                    }
                }
                "properness" => {
                    if config.n.is_none() {
                        return Err(RuelleError::config(
                            "properness probe requires \"n\"".to_string(),
                        ));
                    }
                    if config.observable.is_none() {
                        return Err(RuelleError::config(
                            "properness probe requires \"observable\"".to_string(),
                        ));
                    }
                }
                "uniqueness" => {
                    if config.cylinder.is_none() || config.n.is_none() {
                        return Err(RuelleError::config(
                            "uniqueness probe requires \"cylinder\" and \"n\"".to_string(),
                        ));
                    }
                    let count = config.boundaries.as_ref().map_or(0, Vec::len);
                    if count < 2 || count % 2 != 0 {
                        return Err(RuelleError::config(
                            "uniqueness probe requires an even number (>= 2) of \"boundaries\", read pairwise"
                                .to_string(),
                        ));
                    }
                }
                other => {
                    return Err(RuelleError::config(format!(
                        "unknown probe \"{other}\"; known probes: snn, quasilocality, dlr, properness, uniqueness"
                    )))
                }
            }
        }
        Command::Bowen => {
            // Prefix subsampling at large n and the default tail set are
            // both seeded, so the seed is part of the bowen config proper.
            if config.seed.is_none() {
                return Err(RuelleError::MissingSeed);
            }
        }
        Command::Hofbauer => {
            if config.potential.name != "double_hofbauer" {
                return Err(RuelleError::config(format!(
                    "hofbauer command expects the double_hofbauer potential, got \"{}\"",
                    config.potential.name
                )));
            }
        }
        Command::Equilibrium => {
            let list = config.memory_list.as_deref().unwrap_or(&[]);
            if list.is_empty() {
                return Err(RuelleError::config(
                    "equilibrium command requires a non-empty \"memory_list\"".to_string(),
                ));
            }
            for w in list.windows(2) {
                if w[1] <= w[0] {
                    return Err(RuelleError::config(
                        "\"memory_list\" must be strictly increasing".to_string(),
                    ));
                }
            }
        }
        Command::Xy => {
            if config.potential.name != "long_range" {
                return Err(RuelleError::config(format!(
                    "xy command expects the long_range potential, got \"{}\"",
                    config.potential.name
                )));
            }
        }
        Command::Rpf => {
            if f.memory().finite().is_none() && config.m.is_none() {
                return Err(RuelleError::config(
                    "rpf on an infinite-memory potential requires \"m\" for truncation"
                        .to_string(),
                ));
            }
        }
        Command::Pressure => {}
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// serialization

struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    // 17 significant digits round-trips every finite f64; non-finite values
    // have no JSON encoding and degrade to null.
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if value.is_finite() {
            write!(writer, "{:.16e}", value)
        } else {
            writer.write_all(b"null")
        }
    }
}

/// Canonical artifact text: sorted keys, 17-significant-digit floats.
pub fn to_json_string(value: &Value) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SciFormatter);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serializer emits utf-8"))
}

/// The float format used in CSV cells, identical to the JSON one.
pub fn format_sig17(v: f64) -> String {
    if v.is_finite() {
        format!("{:.16e}", v)
    } else {
        v.to_string()
    }
}

fn config_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest[..6].iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// runner

pub struct RunOutcome {
    pub json_path: PathBuf,
    pub csv_paths: Vec<PathBuf>,
    /// One-line human summary for the terminal.
    pub summary: String,
}

struct CsvSink<'a> {
    dir: &'a Path,
    stem: String,
    paths: Vec<PathBuf>,
}

impl CsvSink<'_> {
    /// Writes one whole trace; LF line endings, no quoting, no locale.
    fn write(&mut self, suffix: &str, header: &str, rows: &[Vec<String>]) -> Result<()> {
        let name = if suffix.is_empty() {
            format!("{}.csv", self.stem)
        } else {
            format!("{}_{suffix}.csv", self.stem)
        };
        let path = self.dir.join(name);
        let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        std::fs::write(&path, text)?;
        self.paths.push(path);
        Ok(())
    }
}

/// Executes the (already override-applied) raw config and writes artifacts
/// into `out_dir`. The JSON result carries {command, config, payload,
/// timing, version}; reruns reproduce payload and CSVs byte for byte.
pub fn run(raw: &Value, out_dir: &Path) -> Result<RunOutcome> {
    let config = typed_config(raw)?;
    let canonical = to_json_string(raw)?;
    let stem = format!("{}_{}", config.command, config_hash(&canonical));
    std::fs::create_dir_all(out_dir)?;
    if let Some(w) = config.workers {
        // First initialization wins; a later run in the same process keeps
        // the existing pool. Output never depends on the worker count.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    let started = Instant::now();
    let mut sink = CsvSink { dir: out_dir, stem: stem.clone(), paths: Vec::new() };
    let (payload, summary) = dispatch(&config, &mut sink)?;
    let wall_ms = started.elapsed().as_millis() as u64;
    let result = json!({
        "command": config.command,
        "config": raw,
        "payload": payload,
        "timing": { "wall_ms": wall_ms },
        "version": ARTIFACT_VERSION,
    });
    let mut text = to_json_string(&result)?;
    text.push('\n');
    let json_path = out_dir.join(format!("{stem}.json"));
    std::fs::write(&json_path, text)?;
    Ok(RunOutcome { json_path, csv_paths: sink.paths, summary })
}

struct Prepared {
    space: StateSpace,
    weighting: Weighting,
    f: Potential,
}

fn prepare(config: &RunConfig, command: Command) -> Result<Prepared> {
    let space = config.state_space.build()?;
    let f = build_potential(&config.potential, &space)?;
    let default_weighting = match command {
        Command::Hofbauer => Weighting::Counting,
        _ => Weighting::Probability,
    };
    let weighting = parse_weighting(config.weighting.as_deref(), default_weighting)?;
    Ok(Prepared { space, weighting, f })
}

fn kernel_options(config: &RunConfig) -> Result<KernelOptions> {
    let mut opts = KernelOptions::default();
    if let Some(cap) = config.cap {
        opts.cap = cap;
    }
    if config.sampling == Some(true) {
        let seed = config.seed.ok_or(RuelleError::MissingSeed)?;
        opts.sampling = Some(SamplingPlan {
            seed,
            samples: config.samples.unwrap_or(DEFAULT_SAMPLES),
        });
        opts.force_sampling = true;
    }
    Ok(opts)
}

fn boundary_or_pad(config: &RunConfig, space: &StateSpace, pad: usize) -> Result<Configuration> {
    match &config.boundary {
        Some(spec) => spec.build(space),
        None => Ok(Configuration::pure_pad(pad)),
    }
}

fn observable_from(config: &RunConfig, space: &StateSpace) -> Result<Observable> {
    if let Some(spec) = &config.observable {
        return spec.build(space);
    }
    if let Some(constraints) = &config.cylinder {
        return Ok(Observable::Indicator(CylinderSet::new(constraints.clone())?));
    }
    Ok(Observable::One)
}

/// Trend of a trace judged at a quarter, half and full length; local
/// wiggle between those marks does not flip the label.
fn trend_label(values: &[f64]) -> &'static str {
    if values.len() < 3 {
        return "short";
    }
    let a = values[values.len() / 4];
    let b = values[values.len() / 2];
    let c = values[values.len() - 1];
    let scale = a.abs().max(b.abs()).max(c.abs()).max(1e-300);
    if (a - c).abs() / scale < 1e-12 {
        "flat"
    } else if a > b && b > c {
        "decreasing"
    } else if a < b && b < c {
        "increasing"
    } else {
        "mixed"
    }
}

fn pressure_payload(trace: &PressureTrace) -> Value {
    let entries: Vec<Value> = trace.entries.iter().map(|(n, p)| json!([n, p])).collect();
    json!({
        "base_point": trace.base_point.describe(),
        "entries": entries,
        "final_estimate": trace.final_estimate,
        "cauchy_gap": trace.cauchy_gap,
        "memory": trace.memory,
        "truncation_pad": trace.truncation_pad,
        "truncation_bound": trace.truncation_bound,
        "weighting": trace.weighting.name(),
        "trend_abs": trend_label(&trace.entries.iter().map(|(_, p)| p.abs()).collect::<Vec<_>>()),
    })
}

fn pressure_rows(trace: &PressureTrace) -> Vec<Vec<String>> {
    let mut rows = Vec::with_capacity(trace.entries.len());
    let mut prev: Option<f64> = None;
    for &(n, p) in &trace.entries {
        let gap = prev.map_or(String::new(), |q| format_sig17((p - q).abs()));
        rows.push(vec![n.to_string(), format_sig17(p), gap]);
        prev = Some(p);
    }
    rows
}

fn rpf_payload(sol: &RpfSolution) -> Result<Value> {
    let h = sol.h.to_linear()?;
    Ok(json!({
        "lambda": sol.lambda,
        "log_lambda": sol.log_lambda,
        "residual_right": sol.residual_right,
        "residual_left": sol.residual_left,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "flags": sol.flags,
        "memory": sol.memory,
        "weighting": sol.weighting.name(),
        "h": h.raw_values(),
        "nu": sol.nu,
    }))
}

fn kernel_payload(kv: &KernelValue) -> Value {
    let method = match kv.method {
        KernelMethod::Exact { terms } => json!({ "type": "exact", "terms": terms }),
        KernelMethod::Sampled { seed, samples } => {
            json!({ "type": "sampled", "seed": seed, "samples": samples })
        }
    };
    json!({
        "n": kv.n,
        "observable": kv.observable,
        "boundary": kv.boundary.describe(),
        "value": kv.value,
        "log_numerator": kv.log_numerator,
        "log_denominator": kv.log_denominator,
        "numerator_negative": kv.numerator_negative,
        "stderr": kv.stderr,
        "method": method,
    })
}

fn probe_rows(entries: &[ProbeEntry]) -> Vec<Vec<String>> {
    entries
        .iter()
        .map(|e| {
            vec![
                e.index.to_string(),
                format_sig17(e.value),
                e.stderr.map(format_sig17).unwrap_or_default(),
            ]
        })
        .collect()
}

fn probe_entries_json(entries: &[ProbeEntry]) -> Vec<Value> {
    entries
        .iter()
        .map(|e| json!({ "index": e.index, "value": e.value, "stderr": e.stderr }))
        .collect()
}

const PROBE_CSV_HEADER: &str = "i_or_depth,value,stderr_if_sampled";

fn stage_payload(stage: &EquilibriumStage) -> Result<Value> {
    Ok(json!({
        "m": stage.m,
        "lambda": stage.solution.lambda,
        "log_lambda": stage.solution.log_lambda,
        "converged": stage.solution.converged,
        "iterations": stage.solution.iterations,
        "flags": stage.solution.flags,
        "entropy": {
            "value": stage.entropy.value,
            "argmin_candidate": stage.entropy.argmin_candidate,
            "candidate_count": stage.entropy.candidate_count,
        },
        "integral": stage.integral,
        "defect": stage.defect,
        "cylinder_probs": stage.cylinder_probs,
        "truncation_gap": stage.truncation_gap,
    }))
}

fn dispatch(config: &RunConfig, sink: &mut CsvSink) -> Result<(Value, String)> {
    let command = Command::parse(&config.command)?;
    validate_semantics(config)?;
    let ctx = prepare(config, command)?;
    let space = &ctx.space;
    let weighting = ctx.weighting;
    let f = &ctx.f;
    match command {
        Command::Pressure => {
            let n_max = config.n_max.unwrap_or(32);
            let m = config.m.unwrap_or(8);
            let trunc_pad = config.trunc_pad.unwrap_or(0);
            let x = boundary_or_pad(config, space, 0)?;
            let trace = pressure_trace(space, weighting, f, n_max, &x, m, trunc_pad)?;
            sink.write("", "n,p_n,cauchy_gap", &pressure_rows(&trace))?;
            let summary = format!(
                "pressure: p_{n_max} = {:.12} (gap {:.3e})",
                trace.final_estimate, trace.cauchy_gap
            );
            Ok((pressure_payload(&trace), summary))
        }
        Command::Rpf => {
            let tol = config.tol.unwrap_or(DEFAULT_TOL);
            let max_iter = config.max_iter.unwrap_or(DEFAULT_MAX_ITER);
            let f_eff = match (f.memory().finite(), config.m) {
                (_, Some(m)) => f.truncate_local(space, m, config.trunc_pad.unwrap_or(0))?,
                (Some(_), None) => f.clone(),
                (None, None) => unreachable!("checked in validate_semantics"),
            };
            let sol = rpf_solve(space, weighting, &f_eff, tol, max_iter)?;
            let h = sol.h.to_linear()?;
            let rows: Vec<Vec<String>> = (0..sol.nu.len())
                .map(|i| {
                    vec![i.to_string(), format_sig17(h.value(i)), format_sig17(sol.nu[i])]
                })
                .collect();
            sink.write("", "index,h,nu", &rows)?;
            let summary = format!(
                "rpf: lambda = {:.12}, residuals {:.2e}/{:.2e}, {} iterations",
                sol.lambda, sol.residual_right, sol.residual_left, sol.iterations
            );
            Ok((rpf_payload(&sol)?, summary))
        }
        Command::Kernel => {
            let n = config.n.expect("checked in validate_semantics");
            let obs = observable_from(config, space)?;
            let x = boundary_or_pad(config, space, 0)?;
            let opts = kernel_options(config)?;
            let kv = kernel_value(space, weighting, f, n, &obs, &x, &opts)?;
            let row = vec![vec![
                n.to_string(),
                format_sig17(kv.value),
                kv.stderr.map(format_sig17).unwrap_or_default(),
            ]];
            sink.write("", PROBE_CSV_HEADER, &row)?;
            let summary = match kv.stderr {
                Some(se) => format!("kernel: K_{n} = {:.12} +- {:.2e}", kv.value, se),
                None => format!("kernel: K_{n} = {:.12}", kv.value),
            };
            Ok((kernel_payload(&kv), summary))
        }
        Command::Probe => run_probe(config, space, weighting, f, sink),
        Command::Bowen => {
            let n_max = config.n_max.unwrap_or(32);
            let seed = config.seed.expect("checked in validate_semantics");
            let tails = match &config.tails {
                Some(specs) => specs.iter().map(|s| s.build(space)).collect::<Result<Vec<_>>>()?,
                None => standard_tail_set(space, seed, 8),
            };
            let est = bowen_estimate(space, f, n_max, &tails, seed)?;
            let rows: Vec<Vec<String>> = est
                .entries
                .iter()
                .map(|&(n, d)| vec![n.to_string(), format_sig17(d)])
                .collect();
            sink.write("", "n,d_n", &rows)?;
            let entries: Vec<Value> = est.entries.iter().map(|(n, d)| json!([n, d])).collect();
            let payload = json!({
                "n_max": n_max,
                "tail_count": tails.len(),
                "entries": entries,
                "verdict": est.verdict.name(),
                "prefix_rule": est.prefix_rule,
            });
            let summary = format!("bowen: verdict {} over {} scales", est.verdict.name(), est.entries.len());
            Ok((payload, summary))
        }
        Command::Hofbauer => {
            let n_max = config.n_max.unwrap_or(64);
            let m = config.m.unwrap_or(12);
            let i_max = config.i_max.unwrap_or(20);
            let symbol = config.symbol.unwrap_or(0);
            let trunc_pad = config.trunc_pad.unwrap_or(0);
            // The interesting boundary is the all-ones tail: the symbol-0
            // cylinder is squeezed hardest there.
            let x = boundary_or_pad(config, space, 1)?;
            let trace = pressure_trace(space, weighting, f, n_max, &x, m, trunc_pad)?;
            sink.write("pressure", "n,p_n,cauchy_gap", &pressure_rows(&trace))?;
            let opts = kernel_options(config)?;
            let snn = strong_non_null_probe(space, weighting, f, i_max, symbol, &[x.clone()], &opts)?;
            sink.write("snn", PROBE_CSV_HEADER, &probe_rows(&snn.entries))?;
            let snn_values: Vec<f64> = snn.entries.iter().map(|e| e.value).collect();
            let payload = json!({
                "params": f.params(),
                "weighting": weighting.name(),
                "boundary": x.describe(),
                "pressure": pressure_payload(&trace),
                "snn": {
                    "symbol": symbol,
                    "entries": probe_entries_json(&snn.entries),
                    "inf_estimate": snn.inf_estimate,
                    "trend": trend_label(&snn_values),
                },
            });
            let summary = format!(
                "hofbauer: p_{n_max} = {:.6} ({}), snn inf = {:.6} ({})",
                trace.final_estimate,
                trend_label(&trace.entries.iter().map(|(_, p)| p.abs()).collect::<Vec<_>>()),
                snn.inf_estimate,
                trend_label(&snn_values),
            );
            Ok((payload, summary))
        }
        Command::Equilibrium => {
            let memory_list = config.memory_list.clone().expect("checked in validate_semantics");
            let trunc_pad = config.trunc_pad.unwrap_or(0);
            let sets: Vec<CylinderSet> = match &config.report_cylinders {
                Some(lists) => lists
                    .iter()
                    .map(|c| CylinderSet::new(c.clone()))
                    .collect::<Result<Vec<_>>>()?,
                None => (0..space.n())
                    .map(|a| CylinderSet::single(1, a))
                    .collect::<Result<Vec<_>>>()?,
            };
            // Stages run one memory at a time so finished rows are on disk
            // before a later, larger solve can fail.
            let mut stage_rows: Vec<Vec<String>> = Vec::new();
            let mut prob_rows: Vec<Vec<String>> = Vec::new();
            let mut stages_json: Vec<Value> = Vec::new();
            let mut last: Option<EquilibriumStage> = None;
            for &m in &memory_list {
                let mut stages =
                    equilibrium_pipeline(space, weighting, f, &[m], &sets, trunc_pad)?;
                let stage = stages.pop().expect("single-memory pipeline yields one stage");
                stage_rows.push(vec![
                    m.to_string(),
                    format_sig17(stage.solution.log_lambda),
                    format_sig17(stage.entropy.value),
                    format_sig17(stage.integral),
                    format_sig17(stage.defect),
                ]);
                for (ci, p) in stage.cylinder_probs.iter().enumerate() {
                    prob_rows.push(vec![m.to_string(), ci.to_string(), format_sig17(*p)]);
                }
                sink.write("stages", "m,log_lambda,entropy,integral,defect", &stage_rows)?;
                sink.write("cylinders", "m,cylinder_index,probability", &prob_rows)?;
                stages_json.push(stage_payload(&stage)?);
                last = Some(stage);
            }
            let last = last.expect("memory_list is non-empty");
            let payload = json!({
                "memory_list": memory_list,
                "cylinders": sets.iter().map(|s| s.describe()).collect::<Vec<_>>(),
                "stages": stages_json,
            });
            let summary = format!(
                "equilibrium: {} stages, final log_lambda = {:.12}, defect {:.3e}",
                memory_list.len(),
                last.solution.log_lambda,
                last.defect
            );
            Ok((payload, summary))
        }
        Command::Xy => {
            let gamma = config.potential.params.get("gamma").copied().ok_or_else(|| {
                RuelleError::config("xy command requires long_range with \"gamma\"".to_string())
            })?;
            let m = config.m.unwrap_or(12);
            let report = xy_closed_form(weighting, gamma, m, config.wide_gamma.unwrap_or(false))?;
            let rows: Vec<Vec<String>> = report
                .alpha
                .iter()
                .enumerate()
                .map(|(i, a)| vec![(i + 1).to_string(), format_sig17(*a), String::new()])
                .collect();
            sink.write("alpha", PROBE_CSV_HEADER, &rows)?;
            let payload = json!({
                "gamma": report.gamma,
                "m": report.m,
                "weighting": report.weighting.name(),
                "alpha": report.alpha,
                "lambda_matched": report.lambda_matched,
                "lambda_rejected": report.lambda_rejected,
                "matched_convention": report.matched_convention,
                "slice_residual_matched": report.slice_residual_matched,
                "slice_residual_rejected": report.slice_residual_rejected,
                "full_residual_matched": report.full_residual_matched,
                "symmetry_defect": report.symmetry_defect,
            });
            let summary = format!(
                "xy: convention {} matches, slice residual {:.3e}",
                report.matched_convention, report.slice_residual_matched
            );
            Ok((payload, summary))
        }
    }
}

fn run_probe(
    config: &RunConfig,
    space: &StateSpace,
    weighting: Weighting,
    f: &Potential,
    sink: &mut CsvSink,
) -> Result<(Value, String)> {
    let kind = config.probe.as_deref().expect("checked in validate_semantics");
    let opts = kernel_options(config)?;
    match kind {
        "snn" => {
            let i_max = config.i_max.unwrap_or(20);
            let symbol = config.symbol.unwrap_or(0);
            let boundaries = match &config.boundaries {
                Some(specs) => specs.iter().map(|s| s.build(space)).collect::<Result<Vec<_>>>()?,
                None => (0..space.n()).map(Configuration::pure_pad).collect(),
            };
            let trace = strong_non_null_probe(space, weighting, f, i_max, symbol, &boundaries, &opts)?;
            sink.write("", PROBE_CSV_HEADER, &probe_rows(&trace.entries))?;
            let values: Vec<f64> = trace.entries.iter().map(|e| e.value).collect();
            let payload = json!({
                "probe": "snn",
                "symbol": symbol,
                "i_max": i_max,
                "boundary_count": boundaries.len(),
                "entries": probe_entries_json(&trace.entries),
                "inf_estimate": trace.inf_estimate,
                "trend": trend_label(&values),
            });
            let summary = format!(
                "probe snn: inf = {:.6} over i <= {i_max} ({})",
                trace.inf_estimate,
                trend_label(&values)
            );
            Ok((payload, summary))
        }
        "quasilocality" => {
            let n = config.n.expect("checked in validate_semantics");
            let obs = observable_from(config, space)?;
            let x = boundary_or_pad(config, space, 0)?;
            let depths = config.depths.clone().unwrap_or_else(|| vec![2, 4, 8, 16, 32]);
            let tails = match &config.tails {
                Some(specs) => specs.iter().map(|s| s.build(space)).collect::<Result<Vec<_>>>()?,
                None => (0..space.n()).map(Configuration::pure_pad).collect(),
            };
            let trace = quasilocality_probe(space, weighting, f, n, &obs, &x, &depths, &tails, &opts)?;
            sink.write("", PROBE_CSV_HEADER, &probe_rows(&trace.entries))?;
            let payload = json!({
                "probe": "quasilocality",
                "n": n,
                "observable": obs.describe(),
                "boundary": x.describe(),
                "entries": probe_entries_json(&trace.entries),
                "max_oscillation": trace.max_oscillation,
            });
            let summary = format!(
                "probe quasilocality: max oscillation {:.3e} across {} depths",
                trace.max_oscillation,
                trace.entries.len()
            );
            Ok((payload, summary))
        }
        "dlr" => {
            let n = config.n.expect("checked in validate_semantics");
            let r = config.r.expect("checked in validate_semantics");
            let obs = observable_from(config, space)?;
            let x = boundary_or_pad(config, space, 0)?;
            let residual = dlr_residual(space, weighting, f, n, r, &obs, &x, &opts)?;
            let row = vec![vec![n.to_string(), format_sig17(residual), String::new()]];
            sink.write("", PROBE_CSV_HEADER, &row)?;
            let payload = json!({
                "probe": "dlr",
                "n": n,
                "r": r,
                "observable": obs.describe(),
                "boundary": x.describe(),
                "residual": residual,
            });
            Ok((payload, format!("probe dlr: residual {residual:.3e} at n={n}, r={r}")))
        }
        "properness" => {
            let n = config.n.expect("checked in validate_semantics");
            let obs = observable_from(config, space)?;
            let x = boundary_or_pad(config, space, 0)?;
            let residual = properness_check(space, weighting, f, n, &obs, &x, &opts)?;
            let row = vec![vec![n.to_string(), format_sig17(residual), String::new()]];
            sink.write("", PROBE_CSV_HEADER, &row)?;
            let payload = json!({
                "probe": "properness",
                "n": n,
                "observable": obs.describe(),
                "boundary": x.describe(),
                "residual": residual,
            });
            Ok((payload, format!("probe properness: residual {residual:.3e} at n={n}")))
        }
        "uniqueness" => {
            let n = config.n.expect("checked in validate_semantics");
            let set = CylinderSet::new(config.cylinder.clone().expect("checked"))?;
            let specs = config.boundaries.as_ref().expect("checked in validate_semantics");
            let built: Vec<Configuration> =
                specs.iter().map(|s| s.build(space)).collect::<Result<Vec<_>>>()?;
            let pairs: Vec<(Configuration, Configuration)> = built
                .chunks_exact(2)
                .map(|c| (c[0].clone(), c[1].clone()))
                .collect();
            let report = uniqueness_ratio_probe(space, weighting, f, &set, n, &pairs, &opts)?;
            let kernel_values: Vec<Value> =
                report.kernel_values.iter().map(|(a, b)| json!([a, b])).collect();
            let payload = json!({
                "probe": "uniqueness",
                "n": n,
                "cylinder": set.describe(),
                "c_estimate": report.c_estimate,
                "worst_pair": report.worst_pair.map(|(i, rev)| json!([i, rev])),
                "undefined_pairs": report.undefined_pairs,
                "kernel_values": kernel_values,
            });
            let summary = match report.c_estimate {
                Some(c) => format!("probe uniqueness: c >= {c:.6} over {} pairs", pairs.len()),
                None => "probe uniqueness: all ratios undefined".to_string(),
            };
            Ok((payload, summary))
        }
        _ => unreachable!("checked in validate_semantics"),
    }
}

/// Registry listing for the `list-potentials` subcommand.
pub fn registry_lines() -> Vec<String> {
    potential_registry()
        .iter()
        .map(|(name, params)| {
            let extra = if *name == "finite_range" { "  (plus \"table\")" } else { "" };
            format!("{name}  params: {}{extra}", params.join(", "))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ising_config(extra: &str) -> String {
        format!(
            r#"{{
                "command": "pressure",
                "state_space": {{ "type": "finite", "labels": ["-", "+"] }},
                "potential": {{ "name": "ising", "params": {{ "beta": 1.0 }} }}{extra}
            }}"#
        )
    }

    #[test]
    fn minimal_config_loads() {
        let (config, _) = load_config(&ising_config("")).unwrap();
        assert_eq!(config.command, "pressure");
        assert_eq!(config.potential.name, "ising");
    }

    #[test]
    fn unknown_top_level_key_is_named() {
        let err = load_config(&ising_config(r#", "tolerance": 1e-9"#)).unwrap_err();
        assert!(err.to_string().contains("tolerance"), "{err}");
    }

    #[test]
    fn unknown_potential_is_named() {
        let text = ising_config("").replace("ising", "foo");
        let err = load_config(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("foo") && msg.contains("known names"), "{msg}");
    }

    #[test]
    fn unknown_parameter_is_named() {
        let text = ising_config("").replace(r#""beta": 1.0"#, r#""temp": 1.0"#);
        let err = load_config(&text).unwrap_err();
        assert!(err.to_string().contains("temp"), "{err}");
    }

    #[test]
    fn sampling_without_seed_is_rejected() {
        let err = load_config(&ising_config(r#", "sampling": true, "samples": 1000"#)).unwrap_err();
        assert!(matches!(err, RuelleError::MissingSeed));
        let ok = load_config(&ising_config(
            r#", "sampling": true, "samples": 1000, "seed": 7"#,
        ));
        assert!(ok.is_ok());
    }

    #[test]
    fn override_replaces_scalars_only() {
        let (_, mut raw) = load_config(&ising_config(r#", "n_max": 8"#)).unwrap();
        apply_overrides(&mut raw, &["n_max=16".to_string(), "weighting=counting".to_string()])
            .unwrap();
        assert_eq!(raw["n_max"], json!(16));
        assert_eq!(raw["weighting"], json!("counting"));
        let err = apply_overrides(&mut raw, &["potential={}".to_string()]).unwrap_err();
        assert!(err.to_string().contains("potential"), "{err}");
        let err = apply_overrides(&mut raw, &["n_max".to_string()]).unwrap_err();
        assert!(err.to_string().contains("key=value"), "{err}");
    }

    #[test]
    fn floats_serialize_with_17_digits_and_round_trip() {
        assert_eq!(format_sig17(0.5), "5.0000000000000000e-1");
        for &v in &[std::f64::consts::PI, 1.0 / 3.0, 6.02e23, -1.2345678901234567e-300] {
            let text = format_sig17(v);
            assert_eq!(text.parse::<f64>().unwrap(), v, "{text}");
        }
        let s = to_json_string(&json!({ "b": 0.1, "a": [1, 2.5] })).unwrap();
        assert_eq!(s, r#"{"a":[1,2.5000000000000000e0],"b":1.0000000000000001e-1}"#);
    }

    #[test]
    fn run_writes_pressure_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let text = ising_config(r#", "n_max": 12, "m": 4"#);
        let (_, raw) = load_config(&text).unwrap();
        let outcome = run(&raw, dir.path()).unwrap();
        assert!(outcome.json_path.file_name().unwrap().to_str().unwrap().starts_with("pressure_"));
        let body: Value =
            serde_json::from_str(&std::fs::read_to_string(&outcome.json_path).unwrap()).unwrap();
        assert_eq!(body["command"], json!("pressure"));
        assert_eq!(body["version"], json!(ARTIFACT_VERSION));
        // the artifact must reproduce the library value bit for bit
        let space = StateSpace::make_finite_alphabet(&["-", "+"], None).unwrap();
        let f = Potential::ising(1.0);
        let x = Configuration::pure_pad(0);
        let direct =
            pressure_trace(&space, Weighting::Probability, &f, 12, &x, 4, 0).unwrap();
        let p = body["payload"]["final_estimate"].as_f64().unwrap();
        assert_eq!(p, direct.final_estimate);
        let csv = std::fs::read_to_string(&outcome.csv_paths[0]).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,p_n,cauchy_gap"));
        assert_eq!(lines.count(), 12);
    }

    #[test]
    fn rerun_reproduces_payload_and_csv_bytes() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let text = ising_config(r#", "n_max": 10, "m": 3, "seed": 11"#);
        let (_, raw) = load_config(&text).unwrap();
        let a = run(&raw, dir_a.path()).unwrap();
        let b = run(&raw, dir_b.path()).unwrap();
        let pa: Value = serde_json::from_str(&std::fs::read_to_string(&a.json_path).unwrap()).unwrap();
        let pb: Value = serde_json::from_str(&std::fs::read_to_string(&b.json_path).unwrap()).unwrap();
        assert_eq!(
            to_json_string(&pa["payload"]).unwrap(),
            to_json_string(&pb["payload"]).unwrap()
        );
        assert_eq!(
            std::fs::read(&a.csv_paths[0]).unwrap(),
            std::fs::read(&b.csv_paths[0]).unwrap()
        );
    }

    #[test]
    fn rpf_run_on_zero_potential_gives_unit_lambda() {
        let dir = tempfile::tempdir().unwrap();
        let text = r#"{
            "command": "rpf",
            "state_space": { "type": "finite", "labels": ["0", "1", "2"] },
            "potential": { "name": "constant", "params": { "c": 0.0 } }
        }"#;
        let (_, raw) = load_config(text).unwrap();
        let outcome = run(&raw, dir.path()).unwrap();
        let body: Value =
            serde_json::from_str(&std::fs::read_to_string(&outcome.json_path).unwrap()).unwrap();
        let lambda = body["payload"]["lambda"].as_f64().unwrap();
        assert!((lambda - 1.0).abs() < 1e-12);
        for h in body["payload"]["h"].as_array().unwrap() {
            assert!((h.as_f64().unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rpf_on_infinite_memory_requires_m() {
        let text = r#"{
            "command": "rpf",
            "state_space": { "type": "finite", "labels": ["-1", "+1"] },
            "potential": { "name": "long_range", "params": { "gamma": 2.0 } }
        }"#;
        let err = load_config(text).unwrap_err();
        assert!(err.to_string().contains("\"m\""), "{err}");
        let with_m = text.replace(r#""command": "rpf","#, r#""command": "rpf", "m": 4,"#);
        load_config(&with_m).unwrap();
    }

    #[test]
    fn hofbauer_defaults_to_counting_and_labels_trends() {
        let dir = tempfile::tempdir().unwrap();
        let text = r#"{
            "command": "hofbauer",
            "state_space": { "type": "finite", "labels": ["0", "1"] },
            "potential": { "name": "double_hofbauer", "params": { "gamma": 3.0, "delta": 3.0 } },
            "n_max": 24, "m": 8, "i_max": 8
        }"#;
        let (_, raw) = load_config(text).unwrap();
        let outcome = run(&raw, dir.path()).unwrap();
        let body: Value =
            serde_json::from_str(&std::fs::read_to_string(&outcome.json_path).unwrap()).unwrap();
        assert_eq!(body["payload"]["weighting"], json!("counting"));
        assert_eq!(body["payload"]["pressure"]["trend_abs"], json!("decreasing"));
        assert_eq!(body["payload"]["snn"]["trend"], json!("decreasing"));
        assert_eq!(outcome.csv_paths.len(), 2);
        let snn_csv = std::fs::read_to_string(&outcome.csv_paths[1]).unwrap();
        assert!(snn_csv.starts_with("i_or_depth,value,stderr_if_sampled\n"));
    }

    #[test]
    fn equilibrium_requires_ascending_memory_list() {
        let base = r#"{
            "command": "equilibrium",
            "state_space": { "type": "finite", "labels": ["-", "+"] },
            "potential": { "name": "ising", "params": { "beta": 1.0 } }MEM
        }"#;
        let err = load_config(&base.replace("MEM", "")).unwrap_err();
        assert!(err.to_string().contains("memory_list"), "{err}");
        let err =
            load_config(&base.replace("MEM", r#", "memory_list": [4, 2]"#)).unwrap_err();
        assert!(err.to_string().contains("increasing"), "{err}");
        assert!(load_config(&base.replace("MEM", r#", "memory_list": [2, 4]"#)).is_ok());
    }

    #[test]
    fn probe_config_validation_names_the_gap() {
        let base = r#"{
            "command": "probe",
            "state_space": { "type": "finite", "labels": ["-", "+"] },
            "potential": { "name": "ising", "params": { "beta": 1.0 } }REST
        }"#;
        let err = load_config(&base.replace("REST", "")).unwrap_err();
        assert!(err.to_string().contains("probe"), "{err}");
        let err = load_config(&base.replace("REST", r#", "probe": "dlr", "n": 3"#)).unwrap_err();
        assert!(err.to_string().contains("\"r\""), "{err}");
        let err = load_config(&base.replace("REST", r#", "probe": "warp""#)).unwrap_err();
        assert!(err.to_string().contains("warp"), "{err}");
        assert!(load_config(&base.replace("REST", r#", "probe": "dlr", "n": 3, "r": 2"#)).is_ok());
    }

    #[test]
    fn trend_labels() {
        assert_eq!(trend_label(&[4.0, 3.0, 2.0, 1.0]), "decreasing");
        assert_eq!(trend_label(&[1.0, 2.0, 3.0, 4.0]), "increasing");
        assert_eq!(trend_label(&[1.0, 1.0, 1.0, 1.0]), "flat");
        assert_eq!(trend_label(&[1.0, 9.0, 1.0, 9.0, 1.0]), "mixed");
        assert_eq!(trend_label(&[1.0, 2.0]), "short");
    }
}

//! Experiment recipes, parameter sweeps and CSV output.
//!
//! Grid cells are independent and run on a worker pool when the `parallel`
//! feature is enabled; results are always collected and written in grid order.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::adiabatic::{adiabatic_bound, build_slow_hamiltonian, theta_tilde, AdiabaticError};
use crate::algebra::{
    apply_generators, build_interaction_hamiltonian, cleaning_algorithm, extract_hrwa, AlgebraError, CleanResult,
    Direction, EffectiveHamiltonian,
};
use crate::linalg::{c, cis, Mat2};
use crate::propagate::{
    orbit_distance, propagate, propagate_effective_with, propagate_lab_with, write_trajectory, EffectiveForm, Frame,
    Method, PropagateError, PropagatorConfig, QState,
};
use crate::pulse::{certify_frequencies, parse_config, PulseError, PulseSpec, Scheme, ValidationReport};

/// First line of every CSV written by the harness.
pub const SCHEMA_HEADER: &str = "# chirpsim-schema v1";
/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "CHIRPSIM_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("validation failed:\n{0}")]
    Validation(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Process exit code: 2 for invalid input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) | HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}

impl From<PulseError> for HarnessError {
    fn from(e: PulseError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<PropagateError> for HarnessError {
    fn from(e: PropagateError) -> Self {
        HarnessError::Numerical(e.to_string())
    }
}

impl From<AlgebraError> for HarnessError {
    fn from(e: AlgebraError) -> Self {
        match e {
            AlgebraError::Frequency { .. } => HarnessError::Validation(e.to_string()),
            _ => HarnessError::Numerical(e.to_string()),
        }
    }
}

impl From<AdiabaticError> for HarnessError {
    fn from(e: AdiabaticError) -> Self {
        HarnessError::Numerical(e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Configuration.

/// Evenly spaced (linear or logarithmic) grid axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub log: bool,
}

impl Axis {
    pub fn linear(min: f64, max: f64, n: usize) -> Self {
        Axis { min, max, n, log: false }
    }

    pub fn log(min: f64, max: f64, n: usize) -> Self {
        Axis { min, max, n, log: true }
    }

    pub fn single(v: f64) -> Self {
        Axis { min: v, max: v, n: 1, log: false }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.n <= 1 {
            return vec![self.min];
        }
        (0..self.n)
            .map(|i| {
                let f = i as f64 / (self.n - 1) as f64;
                if self.log {
                    (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp()
                } else {
                    self.min + f * (self.max - self.min)
                }
            })
            .collect()
    }

    fn check(&self, name: &str) -> Result<(), HarnessError> {
        if self.n == 0 || !(self.min <= self.max) || (self.log && self.min <= 0.0) {
            return Err(HarnessError::Config(format!("bad {name} grid {self:?}")));
        }
        Ok(())
    }
}

/// Everything needed to run any experiment, readable from a flat `key=value` file.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub spec: PulseSpec,
    pub n0: u32,
    pub eps1_axis: Axis,
    pub eps2_axis: Axis,
    pub alpha_axis: Axis,
    /// Explicit ε list for scaling, comparison and demo experiments.
    pub eps_list: Vec<f64>,
    pub propagator: PropagatorConfig,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(spec: PulseSpec, n0: u32) -> Self {
        ExperimentConfig {
            eps1_axis: Axis::single(spec.eps1),
            eps2_axis: Axis::single(spec.eps2),
            alpha_axis: Axis::single(spec.alpha),
            spec,
            n0,
            eps_list: Vec::new(),
            propagator: PropagatorConfig::default(),
            workers: None,
            output: None,
        }
    }

    /// Parses a config text; pulse keys are `E, v0, v1, eps1, eps2, alpha, scheme, N0`.
    pub fn from_text(text: &str) -> Result<Self, HarnessError> {
        let kv = parse_config(text)?;
        Self::from_entries(&kv)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn from_entries(kv: &BTreeMap<String, String>) -> Result<Self, HarnessError> {
        const PULSE_KEYS: [&str; 9] = ["E", "v0", "v1", "eps1", "eps2", "alpha", "scheme", "u", "delta"];
        let spec = PulseSpec::from_entries(kv)?;
        let mut cfg = ExperimentConfig::new(spec, 3);
        for (k, v) in kv {
            if PULSE_KEYS.contains(&k.as_str()) {
                continue;
            }
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let bad = || HarnessError::Config(format!("bad value for {key}: {value:?}"));
        let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
        let int = |v: &str| v.trim().parse::<usize>().map_err(|_| bad());
        match key {
            "N0" => self.n0 = int(value)? as u32,
            "E" => self.spec.e = num(value)?,
            "alpha" => self.spec.alpha = num(value)?,
            "eps1" => self.spec.eps1 = num(value)?,
            "eps2" => self.spec.eps2 = num(value)?,
            "v0" | "v1" | "scheme" | "u" | "delta" => {
                let mut kv = parse_config(&self.spec.to_config())?;
                kv.insert(key.into(), value.into());
                if key == "scheme" && value != "custom" {
                    kv.remove("u");
                    kv.remove("delta");
                }
                if kv.get("scheme").map(String::as_str) == Some("custom") && !(kv.contains_key("u") && kv.contains_key("delta")) {
                    // Wait for the remaining custom keys.
                    kv.entry("u".into()).or_insert_with(|| self.spec.u.to_string());
                    kv.entry("delta".into()).or_insert_with(|| self.spec.delta.to_string());
                }
                self.spec = PulseSpec::from_entries(&kv)?;
            }
            "eps1_min" => self.eps1_axis.min = num(value)?,
            "eps1_max" => self.eps1_axis.max = num(value)?,
            "eps1_n" => self.eps1_axis.n = int(value)?,
            "eps1_log" => self.eps1_axis.log = value.trim() == "true",
            "eps2_min" => self.eps2_axis.min = num(value)?,
            "eps2_max" => self.eps2_axis.max = num(value)?,
            "eps2_n" => self.eps2_axis.n = int(value)?,
            "eps2_log" => self.eps2_axis.log = value.trim() == "true",
            "alpha_min" => self.alpha_axis.min = num(value)?,
            "alpha_max" => self.alpha_axis.max = num(value)?,
            "alpha_n" => self.alpha_axis.n = int(value)?,
            "eps_list" => {
                self.eps_list = value.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<_, _>>()?
            }
            "method" => {
                self.propagator.method = match value.trim() {
                    "magnus2" => Method::Magnus2,
                    "magnus4" => Method::Magnus4,
                    _ => return Err(bad()),
                }
            }
            "points_per_period" => {
                let n = int(value)?;
                if n < 20 {
                    return Err(HarnessError::Config("points_per_period must be at least 20".into()));
                }
                self.propagator.points_per_period = n as u32;
            }
            "workers" => self.workers = Some(int(value)?.max(1)),
            "out" => self.output = Some(PathBuf::from(value.trim())),
            _ => return Err(HarnessError::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Worker pool.

/// Worker count: explicit setting, then the environment override, then available parallelism.
pub fn resolve_workers(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse().ok()))
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1)
}

/// Maps `f` over `items`, preserving order, on `workers` threads.
#[cfg(feature = "parallel")]
pub fn par_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
        Err(_) => items.iter().map(f).collect(),
    }
}

/// Sequential fallback when built without the `parallel` feature.
#[cfg(not(feature = "parallel"))]
pub fn par_map<T, R, F>(items: &[T], _workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

// ---------------------------------------------------------------------------
// Single runs.

/// The ε-independent part of a run: generators and effective Hamiltonian for one (α, N0).
#[derive(Debug, Clone)]
pub struct Prepared {
    pub clean: Arc<CleanResult>,
    pub effective: Arc<EffectiveHamiltonian>,
}

pub fn prepare(spec: &PulseSpec, n0: u32) -> Result<Prepared, HarnessError> {
    let clean = cleaning_algorithm(&build_interaction_hamiltonian(spec), spec, n0)?;
    let effective = extract_hrwa(&clean.series, n0);
    Ok(Prepared { clean: Arc::new(clean), effective: Arc::new(effective) })
}

/// One grid point: inputs and endpoint metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub e: f64,
    pub v0: f64,
    pub v1: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub alpha: f64,
    pub n0: u32,
    pub fidelity: f64,
    pub orbit_distance: f64,
    pub rwa_distance: f64,
    pub adiabatic_bound: f64,
    pub dropped_mass: f64,
    pub norm_drift: f64,
    pub status: String,
    pub wall_time: Duration,
}

impl ResultRow {
    fn empty(spec: &PulseSpec, n0: u32) -> Self {
        ResultRow {
            e: spec.e,
            v0: spec.v0,
            v1: spec.v1,
            eps1: spec.eps1,
            eps2: spec.eps2,
            alpha: spec.alpha,
            n0,
            fidelity: f64::NAN,
            orbit_distance: f64::NAN,
            rwa_distance: f64::NAN,
            adiabatic_bound: f64::NAN,
            dropped_mass: f64::NAN,
            norm_drift: f64::NAN,
            status: String::new(),
            wall_time: Duration::ZERO,
        }
    }

    pub fn failed(spec: &PulseSpec, n0: u32, err: &HarnessError) -> Self {
        let mut r = Self::empty(spec, n0);
        r.status = format!("error: {}", err.to_string().replace(['\n', ','], " "));
        r
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn check_valid(spec: &PulseSpec) -> Result<ValidationReport, HarnessError> {
    let report = spec.validate();
    if !report.is_valid() {
        return Err(HarnessError::Validation(report.to_string()));
    }
    let cert = certify_frequencies(&spec.frequencies(), crate::pulse::DEFAULT_WINDOW);
    if !cert.passed() {
        return Err(HarnessError::Validation(format!(
            "frequency certificate failed: min|lambda| = {:.3e}, min|phi| = {:.3e}, omega margin = {:.3e}",
            cert.min_lambda(),
            cert.min_phi(),
            cert.omega_margin
        )));
    }
    Ok(report)
}

/// Lab run, effective run and bound for one spec, reusing a prepared elimination.
pub fn run_prepared(spec: &PulseSpec, prep: &Prepared, n0: u32, cfg: &PropagatorConfig) -> Result<ResultRow, HarnessError> {
    let start = Instant::now();
    check_valid(spec)?;
    let lab = propagate_lab_with(spec, QState::ground(), cfg, Frame::Lab, false, 0)?;
    let clock = spec.clock();
    let psi_rwa0 = QState(apply_generators(QState::ground().0, 0.0, &prep.clean.generators, &clock, Direction::Forward));
    let eff = propagate_effective_with(&prep.effective, spec, psi_rwa0, cfg, EffectiveForm::Slow, 0)?;
    let sh = build_slow_hamiltonian(&prep.effective, spec);
    let bound = adiabatic_bound(&sh, spec)?;
    let mut row = ResultRow::empty(spec, n0);
    row.fidelity = crate::propagate::fidelity(&lab.state);
    row.orbit_distance = orbit_distance(&lab.state);
    row.rwa_distance = orbit_distance(&eff.state);
    row.adiabatic_bound = bound;
    row.dropped_mass = prep.effective.discarded_bound(spec.eps1, spec.eps2);
    row.norm_drift = (lab.state.norm() - 1.0).abs();
    row.status = "ok".into();
    row.wall_time = start.elapsed();
    Ok(row)
}

/// Full pipeline: validate, certify, propagate, eliminate, propagate effective, bound.
pub fn run_single(spec: &PulseSpec, n0: u32, cfg: &PropagatorConfig) -> Result<ResultRow, HarnessError> {
    check_valid(spec)?;
    let prep = prepare(spec, n0)?;
    run_prepared(spec, &prep, n0, cfg)
}

/// Lab-frame endpoint only (no elimination), for scaling studies.
pub fn lab_distance(spec: &PulseSpec, cfg: &PropagatorConfig) -> Result<f64, HarnessError> {
    let lab = propagate_lab_with(spec, QState::ground(), cfg, Frame::Lab, false, 0)?;
    Ok(orbit_distance(&lab.state))
}

// ---------------------------------------------------------------------------
// Sweeps.

fn grid_rows(specs: Vec<PulseSpec>, n0: u32, cfg: &ExperimentConfig) -> Vec<ResultRow> {
    let workers = resolve_workers(cfg.workers);
    // One elimination per distinct α, shared by every cell with that α.
    let mut alphas: Vec<f64> = specs.iter().map(|s| s.alpha).collect();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    let preps: Vec<Result<Prepared, String>> = par_map(&alphas, workers, |&a| {
        let base = specs.iter().find(|s| s.alpha == a).expect("alpha from specs");
        prepare(base, n0).map_err(|e| e.to_string())
    });
    par_map(&specs, workers, |spec| {
        let ix = alphas.iter().position(|&a| a == spec.alpha).expect("alpha indexed");
        let out = match &preps[ix] {
            Ok(p) => run_prepared(spec, p, n0, &cfg.propagator),
            Err(e) => Err(HarnessError::Numerical(e.clone())),
        };
        out.unwrap_or_else(|e| ResultRow::failed(spec, n0, &e))
    })
}

/// Log-spaced (ε1, ε2) grid at fixed α; rows ordered ε1-major.
pub fn sweep2d(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, HarnessError> {
    cfg.eps1_axis.check("eps1")?;
    cfg.eps2_axis.check("eps2")?;
    let mut specs = Vec::new();
    for e1 in cfg.eps1_axis.points() {
        for e2 in cfg.eps2_axis.points() {
            specs.push(cfg.spec.with_eps(e1, e2));
        }
    }
    Ok(grid_rows(specs, cfg.n0, cfg))
}

/// α grid at fixed (ε1, ε2).
pub fn sweep_alpha(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, HarnessError> {
    cfg.alpha_axis.check("alpha")?;
    let specs = cfg.alpha_axis.points().into_iter().map(|a| cfg.spec.with_alpha(a)).collect();
    Ok(grid_rows(specs, cfg.n0, cfg))
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

fn writer<W: Write>(mut out: W, experiment: &str) -> Result<csv::Writer<W>, HarnessError> {
    writeln!(out, "{SCHEMA_HEADER}")?;
    writeln!(out, "# experiment={experiment}")?;
    Ok(csv::Writer::from_writer(out))
}

/// Writes result rows; wall time is left out so that reruns are byte-identical.
pub fn write_rows<W: Write>(out: W, experiment: &str, rows: &[ResultRow]) -> Result<(), HarnessError> {
    let mut w = writer(out, experiment)?;
    w.write_record([
        "E",
        "v0",
        "v1",
        "eps1",
        "eps2",
        "alpha",
        "N0",
        "fidelity",
        "orbit_distance",
        "log10_distance",
        "rwa_distance",
        "adiabatic_bound",
        "dropped_mass",
        "norm_drift",
        "status",
    ])?;
    for r in rows {
        let mut rec: Vec<String> = [r.e, r.v0, r.v1, r.eps1, r.eps2, r.alpha].iter().map(|&v| fmt(v)).collect();
        rec.push(r.n0.to_string());
        rec.extend(
            [r.fidelity, r.orbit_distance, r.orbit_distance.log10(), r.rwa_distance, r.adiabatic_bound, r.dropped_mass, r.norm_drift]
                .iter()
                .map(|&v| fmt(v)),
        );
        rec.push(r.status.clone());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Scaling along ε1 = ε2^{2/N0}.

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub eps1: f64,
    pub eps2: f64,
    pub horizon: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub n0: u32,
    pub rows: Vec<ScalingRow>,
    pub slope: f64,
    pub target: f64,
}

/// Exponent `(2/N0 − 1)/(1 + 2/N0)` of the eps-power scaling law.
pub fn target_slope(n0: u32) -> f64 {
    let r = 2.0 / n0 as f64;
    (r - 1.0) / (1.0 + r)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn scaling_study(cfg: &ExperimentConfig) -> Result<ScalingReport, HarnessError> {
    if cfg.n0 < 3 {
        return Err(HarnessError::Config("scaling study needs N0 >= 3".into()));
    }
    let eps2s = if cfg.eps_list.is_empty() { vec![0.2, 0.1, 0.05, 0.025] } else { cfg.eps_list.clone() };
    let exponent = 2.0 / cfg.n0 as f64;
    let specs: Vec<PulseSpec> = eps2s.iter().map(|&e2| cfg.spec.with_eps(e2.powf(exponent), e2)).collect();
    for s in &specs {
        check_valid(s)?;
    }
    let dists = par_map(&specs, resolve_workers(cfg.workers), |s| lab_distance(s, &cfg.propagator));
    let mut rows = Vec::new();
    for (s, d) in specs.iter().zip(dists) {
        rows.push(ScalingRow { eps1: s.eps1, eps2: s.eps2, horizon: s.horizon(), distance: d? });
    }
    let slope = fit_loglog(&rows.iter().map(|r| r.horizon).collect::<Vec<_>>(), &rows.iter().map(|r| r.distance).collect::<Vec<_>>());
    Ok(ScalingReport { n0: cfg.n0, rows, slope, target: target_slope(cfg.n0) })
}

pub fn write_scaling<W: Write>(out: W, rep: &ScalingReport) -> Result<(), HarnessError> {
    let mut w = writer(out, "scaling")?;
    w.write_record(["eps1", "eps2", "T", "distance"])?;
    for r in &rep.rows {
        w.write_record([r.eps1, r.eps2, r.horizon, r.distance].map(fmt))?;
    }
    let mut inner = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    writeln!(inner, "# slope={} target={} N0={}", fmt(rep.slope), fmt(rep.target), rep.n0)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Real versus complex fields.

/// Which pulse family an ε refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PulseFamily {
    /// `2ε u(εt) cos(2Et + Δ(εt))` against `ε u(εt) e^{i(2Et + Δ(εt))}` on `[0, 1/ε]`.
    SingleScale,
    /// The two-scale pulse with `ε1 = ε` and the spec's `ε2`.
    TwoScale,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub eps: f64,
    pub max_diff: f64,
    pub end_diff: f64,
}

/// Samples used for the max-over-time difference.
const COMPARE_SAMPLES: usize = 4000;

/// Propagates the real and complex fields from `(0, 1)` on a shared grid and compares the states.
pub fn compare_fields(spec: &PulseSpec, family: PulseFamily, eps: f64, cfg: &PropagatorConfig) -> Result<CompareRow, HarnessError> {
    let zeta = spec.e + spec.alpha;
    let (horizon, rate, phase_scale) = match family {
        PulseFamily::SingleScale => (1.0 / eps, eps, 1.0),
        PulseFamily::TwoScale => (1.0 / (eps * spec.eps2), eps * spec.eps2, 1.0 / (eps * spec.eps2)),
    };
    let amp = |t: f64| eps * spec.u.eval_unchecked((rate * t).clamp(0.0, 1.0));
    let phase = |t: f64| 2.0 * spec.e * t + phase_scale * spec.delta.eval_unchecked((rate * t).clamp(0.0, 1.0));
    let real = |t: f64| {
        let w = 2.0 * amp(t) * phase(t).cos();
        Mat2([[c(zeta, 0.0), c(w, 0.0)], [c(w, 0.0), c(-zeta, 0.0)]])
    };
    let complex = |t: f64| {
        let z = cis(-phase(t)) * amp(t);
        Mat2([[c(zeta, 0.0), z], [z.conj(), c(-zeta, 0.0)]])
    };
    let omega = 4.0 * spec.e + spec.delta.derivative().inf_norm() + 2.0 * spec.alpha.abs() + 4.0 * eps * spec.u.inf_norm();
    let a = propagate(real, QState::ground(), 0.0, horizon, omega, cfg, COMPARE_SAMPLES)?;
    let b = propagate(complex, QState::ground(), 0.0, horizon, omega, cfg, COMPARE_SAMPLES)?;
    let max_diff = a.trajectory.iter().zip(&b.trajectory).map(|(x, y)| x.1.distance(&y.1)).fold(0.0, f64::max);
    Ok(CompareRow { eps, max_diff, end_diff: a.state.distance(&b.state) })
}

pub fn compare_real_complex(cfg: &ExperimentConfig, family: PulseFamily) -> Result<Vec<CompareRow>, HarnessError> {
    let eps = if cfg.eps_list.is_empty() { vec![0.2, 0.1, 0.05] } else { cfg.eps_list.clone() };
    let out = par_map(&eps, resolve_workers(cfg.workers), |&e| compare_fields(&cfg.spec, family, e, &cfg.propagator));
    out.into_iter().collect()
}

pub fn write_compare<W: Write>(out: W, rows: &[CompareRow]) -> Result<(), HarnessError> {
    let mut w = writer(out, "compare")?;
    w.write_record(["eps", "max_diff", "end_diff"])?;
    for r in rows {
        w.write_record([r.eps, r.max_diff, r.end_diff].map(fmt))?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// First-order RWA alone.

/// Relation between ε1 and ε2 in the first-order RWA study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `ε1 = ε2²`: the adiabatic error does not vanish.
    Squared,
    /// `ε1 = √ε2`: adiabatic regime `ε2 ≪ ε1`.
    Root,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RwaRow {
    pub eps1: f64,
    pub eps2: f64,
    pub fidelity: f64,
}

/// First-order RWA dynamics `ε1 u A(E1)` at `E = 0`, `α = 0`.
pub fn rwa_only(spec: &PulseSpec, cfg: &PropagatorConfig) -> Result<f64, HarnessError> {
    let eff = EffectiveHamiltonian::first_order(spec);
    let p = propagate_effective_with(&eff, spec, QState::ground(), cfg, EffectiveForm::Slow, 0)?;
    Ok(crate::propagate::fidelity(&p.state))
}

pub fn rwa_only_study(cfg: &ExperimentConfig, regime: Regime) -> Result<Vec<RwaRow>, HarnessError> {
    let eps2s = if cfg.eps_list.is_empty() { vec![0.2, 0.1, 0.05] } else { cfg.eps_list.clone() };
    let base = PulseSpec { e: 0.0, alpha: 0.0, ..cfg.spec.clone() };
    let specs: Vec<PulseSpec> = eps2s
        .iter()
        .map(|&e2| {
            let e1 = match regime {
                Regime::Squared => e2 * e2,
                Regime::Root => e2.sqrt(),
            };
            base.with_eps(e1, e2)
        })
        .collect();
    let fids = par_map(&specs, resolve_workers(cfg.workers), |s| rwa_only(s, &cfg.propagator));
    specs.iter().zip(fids).map(|(s, f)| Ok(RwaRow { eps1: s.eps1, eps2: s.eps2, fidelity: f? })).collect()
}

pub fn write_rwa<W: Write>(out: W, rows: &[RwaRow]) -> Result<(), HarnessError> {
    let mut w = writer(out, "rwa-only")?;
    w.write_record(["eps1", "eps2", "fidelity"])?;
    for r in rows {
        w.write_record([r.eps1, r.eps2, r.fidelity].map(fmt))?;
    }
    w.flush()?;
    Ok(())
}

/// Endpoint gap `|ψ_I(T) − ψ_RWA1(T)|` between the full dynamics and first-order RWA, without validation.
pub fn full_vs_rwa1(spec: &PulseSpec, cfg: &PropagatorConfig) -> Result<f64, HarnessError> {
    let lab = propagate_lab_with(spec, QState::ground(), cfg, Frame::Lab, false, 0)?.state;
    let lab_i = crate::propagate::to_interaction_frame(&lab, spec.horizon(), spec.e, spec.alpha);
    let eff = EffectiveHamiltonian::first_order(spec);
    let rwa = propagate_effective_with(&eff, spec, QState::ground(), cfg, EffectiveForm::Slow, 0)?.state;
    Ok(lab_i.distance(&rwa))
}

// ---------------------------------------------------------------------------
// Adiabatic passage without the RWA.

#[derive(Debug, Clone, PartialEq)]
pub struct DemoRow {
    pub alpha: f64,
    pub eps: f64,
    pub distance: f64,
}

/// The path `(u, v) = (sin πs, Δ′/2)` with `v0 = −1`, `v1 = 1`: a half circle around `(0, α)`.
pub fn demo_path() -> PulseSpec {
    PulseSpec::new(1.0, -1.0, 1.0, 0.5, 0.5, 0.0, Scheme::Sine).expect("valid demo path")
}

/// `i dΨ/dt = ((α − v(εt))σz + u(εt)σx) Ψ` on `[0, 1/ε]` from `(0, 1)`.
pub fn adiabatic_path_distance(path: &PulseSpec, alpha: f64, eps: f64, cfg: &PropagatorConfig) -> Result<f64, HarnessError> {
    let d1 = path.delta.derivative();
    let h = |t: f64| {
        let s = (eps * t).clamp(0.0, 1.0);
        Mat2::from_pauli(0.0, [path.u.eval_unchecked(s), 0.0, alpha - 0.5 * d1.eval_unchecked(s)])
    };
    let omega = 2.0 * (path.u.inf_norm() + alpha.abs() + 0.5 * d1.inf_norm());
    let p = propagate(h, QState::ground(), 0.0, 1.0 / eps, omega, cfg, 0)?;
    Ok(orbit_distance(&p.state))
}

/// Checks that the path leaves and returns to the `u = 0` axis and encloses every α.
pub fn validate_path(path: &PulseSpec, alphas: &[f64]) -> Result<(), HarnessError> {
    let r = path.validate();
    for name in ["u_endpoints", "u_positive", "delta_endpoints"] {
        if !r.get(name).is_some_and(|c| c.passed) {
            return Err(HarnessError::Validation(format!("adiabatic path fails {name}")));
        }
    }
    if let Some(a) = alphas.iter().find(|&&a| !(a > path.v0 && a < path.v1)) {
        return Err(HarnessError::Validation(format!("alpha {a} not enclosed by the path ({}, {})", path.v0, path.v1)));
    }
    Ok(())
}

pub fn adiabatic_demo(path: &PulseSpec, alphas: &[f64], eps: &[f64], cfg: &ExperimentConfig) -> Result<Vec<DemoRow>, HarnessError> {
    validate_path(path, alphas)?;
    let cells: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| eps.iter().map(move |&e| (a, e))).collect();
    let out = par_map(&cells, resolve_workers(cfg.workers), |&(a, e)| adiabatic_path_distance(path, a, e, &cfg.propagator));
    cells.iter().zip(out).map(|(&(alpha, eps), d)| Ok(DemoRow { alpha, eps, distance: d? })).collect()
}

pub fn write_demo<W: Write>(out: W, rows: &[DemoRow]) -> Result<(), HarnessError> {
    let mut w = writer(out, "adiabatic-demo")?;
    w.write_record(["alpha", "eps", "distance"])?;
    for r in rows {
        w.write_record([r.alpha, r.eps, r.distance].map(fmt))?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Trajectories.

/// Sampled fidelity curves for one spec.
#[derive(Debug, Clone)]
pub struct TrajectorySet {
    pub full: Vec<(f64, QState)>,
    pub rwa1: Vec<(f64, QState)>,
    pub aa: Vec<(f64, QState)>,
}

/// Full system, first-order RWA and the instantaneous negative eigenvector of the first-order slow Hamiltonian.
pub fn trajectories(spec: &PulseSpec, samples: usize, cfg: &PropagatorConfig) -> Result<TrajectorySet, HarnessError> {
    let full = propagate_lab_with(spec, QState::ground(), cfg, Frame::Lab, false, samples)?.trajectory;
    let eff = EffectiveHamiltonian::first_order(spec);
    let rwa1 = propagate_effective_with(&eff, spec, QState::ground(), cfg, EffectiveForm::Slow, samples)?.trajectory;
    let slow = spec.eps1 * spec.eps2;
    let aa = (0..=samples)
        .map(|k| {
            let s = k as f64 / samples as f64;
            let th = theta_tilde(spec, s);
            (s / slow, QState([c(-(0.5 * th).sin(), 0.0), c((0.5 * th).cos(), 0.0)]))
        })
        .collect();
    Ok(TrajectorySet { full, rwa1, aa })
}

/// Writes `<stem>_full.csv`, `<stem>_rwa1.csv`, `<stem>_aa.csv` and `<stem>.gp`; returns the paths.
pub fn trajectory_dump(spec: &PulseSpec, samples: usize, cfg: &PropagatorConfig, stem: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let set = trajectories(spec, samples, cfg)?;
    let mut paths = Vec::new();
    let base = stem.to_string_lossy().to_string();
    for (name, traj) in [("full", &set.full), ("rwa1", &set.rwa1), ("aa", &set.aa)] {
        let path = PathBuf::from(format!("{base}_{name}.csv"));
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(f, "{SCHEMA_HEADER}")?;
        writeln!(f, "# experiment=trajectory series={name} eps1={} eps2={} alpha={}", spec.eps1, spec.eps2, spec.alpha)?;
        write_trajectory(&mut f, traj, spec.eps1, spec.eps2)?;
        paths.push(path);
    }
    let gp = PathBuf::from(format!("{base}.gp"));
    std::fs::write(&gp, plot_script(&base, spec))?;
    paths.push(gp);
    Ok(paths)
}

/// gnuplot script overlaying the three fidelity curves against reduced time.
pub fn plot_script(stem: &str, spec: &PulseSpec) -> String {
    let file = |n: &str| {
        let p = format!("{stem}_{n}.csv");
        Path::new(&p).file_name().map(|f| f.to_string_lossy().to_string()).unwrap_or(p)
    };
    format!(
        "# gnuplot script; run from the directory holding the CSV files\n\
         set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set key autotitle columnhead bottom right\n\
         set xlabel 's'\n\
         set ylabel '|psi_1|'\n\
         set yrange [0:1.05]\n\
         set title 'eps1 = {e1}, eps2 = {e2}, alpha = {a}'\n\
         set terminal pngcairo size 900,600\n\
         set output '{png}'\n\
         plot '{full}' using 2:7 with lines lw 1 title 'full system', \\\n\
         \x20    '{rwa}' using 2:7 with lines lw 3 title 'first-order RWA', \\\n\
         \x20    '{aa}' using 2:7 with lines dt 2 lw 2 title 'adiabatic eigenstate'\n",
        e1 = spec.eps1,
        e2 = spec.eps2,
        a = spec.alpha,
        png = Path::new(&format!("{stem}.png")).file_name().map(|f| f.to_string_lossy().to_string()).unwrap_or_default(),
        full = file("full"),
        rwa = file("rwa1"),
        aa = file("aa"),
    )
}

/// Text dump of the cleaned series for one spec.
pub fn eliminate_dump(spec: &PulseSpec, n0: u32) -> Result<String, HarnessError> {
    let prep = prepare(spec, n0)?;
    let mut out = prep.clean.series.dump();
    out.push_str(&format!(
        "# generators={} dropped_mass={}\n",
        prep.clean.generators.len(),
        fmt(prep.clean.series.dropped_mass())
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_points() {
        assert_eq!(Axis::single(0.3).points(), vec![0.3]);
        let p = Axis::log(0.05, 0.4, 4).points();
        assert!((p[1] - 0.1).abs() < 1e-12 && (p[3] - 0.4).abs() < 1e-12);
        assert_eq!(Axis::linear(-0.4, 0.4, 3).points(), vec![-0.4, 0.0, 0.4]);
    }

    #[test]
    fn target_slopes() {
        assert!((target_slope(4) + 1.0 / 3.0).abs() < 1e-15);
        assert!((target_slope(10_000) + 1.0).abs() < 1e-3);
    }

    #[test]
    fn loglog_fit_recovers_power() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.7)).collect();
        assert!((fit_loglog(&xs, &ys) + 0.7).abs() < 1e-12);
    }

    #[test]
    fn config_parsing_and_overrides() {
        let text = "E=1\nv0=-0.5\nv1=0.5\neps1=0.5\neps2=0.1\nalpha=0\nscheme=sine\nN0=2\neps2_n=3\nworkers=2\n";
        let mut cfg = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(cfg.n0, 2);
        assert_eq!(cfg.eps2_axis.n, 3);
        assert_eq!(cfg.workers, Some(2));
        cfg.set("alpha", "0.25").unwrap();
        assert_eq!(cfg.spec.alpha, 0.25);
        assert!(cfg.set("bogus", "1").is_err());
        assert!(cfg.set("points_per_period", "5").is_err());
    }

    #[test]
    fn boundary_alpha_is_rejected() {
        let spec = PulseSpec::reference(0.5, 0.1, 0.5);
        let err = run_single(&spec, 1, &PropagatorConfig::default()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let spec = PulseSpec::reference(0.0, 0.0, 0.0);
        assert_eq!(run_single(&spec, 1, &PropagatorConfig::default()).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn degenerate_path_is_rejected() {
        let mut path = demo_path();
        path.u = crate::slowfn::SlowFn::zero();
        assert!(validate_path(&path, &[0.0]).is_err());
        assert!(validate_path(&demo_path(), &[1.5]).is_err());
        assert!(validate_path(&demo_path(), &[-0.4, 0.0, 0.4]).is_ok());
    }
}

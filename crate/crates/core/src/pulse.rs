//! Chirped pulse schemes, hypothesis validation and characteristic frequencies.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use crate::linalg::{cis, C64};
use crate::slowfn::{SlowFn, SlowFnError};

/// Default index window for frequency certificates.
pub const DEFAULT_WINDOW: i32 = 10;
const GRID: usize = 2000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PulseError {
    #[error("chirp endpoints must satisfy v0 < 0 < v1 (got v0 = {v0}, v1 = {v1})")]
    ChirpSigns { v0: f64, v1: f64 },
    #[error("unknown scheme {0:?} (expected sine, one-minus-cos, hann or custom)")]
    UnknownScheme(String),
    #[error("missing config key {0:?}")]
    MissingKey(&'static str),
    #[error("bad value for {key}: {value:?}")]
    BadValue { key: String, value: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("time {t} outside [0, {horizon}]")]
    Domain { t: f64, horizon: f64 },
    #[error(transparent)]
    SlowFn(#[from] SlowFnError),
}

/// Envelope/chirp family.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    /// `Δ(s) = ((v0−v1)/π) sin(πs) + (v0+v1)s`, `u(s) = sin(πs)`.
    Sine,
    /// Same Δ with `u(s) = 1 − cos(πs)`; this envelope does not vanish at `s = 1`.
    OneMinusCos,
    /// Same Δ with `u(s) = 1 − cos(2πs)`.
    Hann,
    /// User-supplied expressions in `s`.
    Custom { u: String, delta: String },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Sine => "sine",
            Scheme::OneMinusCos => "one-minus-cos",
            Scheme::Hann => "hann",
            Scheme::Custom { .. } => "custom",
        }
    }

    pub fn build(&self, v0: f64, v1: f64) -> Result<(SlowFn, SlowFn), PulseError> {
        let pis = SlowFn::var().scale(PI);
        let (_, delta) = default_scheme(v0, v1)?;
        match self {
            Scheme::Sine => Ok((pis.sin(), delta)),
            Scheme::OneMinusCos => Ok((SlowFn::one().sub(&pis.cos()), delta)),
            Scheme::Hann => Ok((SlowFn::one().sub(&pis.scale(2.0).cos()), delta)),
            Scheme::Custom { u, delta } => Ok((SlowFn::parse(u)?, SlowFn::parse(delta)?)),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The standard pulse pair `(u, Δ)` with envelope `u(s) = sin(πs)`.
pub fn default_scheme(v0: f64, v1: f64) -> Result<(SlowFn, SlowFn), PulseError> {
    if !(v0 < 0.0 && v1 > 0.0) {
        return Err(PulseError::ChirpSigns { v0, v1 });
    }
    let s = SlowFn::var();
    let delta = s.scale(PI).sin().scale((v0 - v1) / PI).add(&s.scale(v0 + v1));
    Ok((s.scale(PI).sin(), delta))
}

/// One experiment: field shape plus the small parameters and the detuning.
#[derive(Debug, Clone)]
pub struct PulseSpec {
    pub e: f64,
    pub v0: f64,
    pub v1: f64,
    pub u: SlowFn,
    pub delta: SlowFn,
    pub eps1: f64,
    pub eps2: f64,
    pub alpha: f64,
    pub scheme: Scheme,
}

impl PulseSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        e: f64,
        v0: f64,
        v1: f64,
        eps1: f64,
        eps2: f64,
        alpha: f64,
        scheme: Scheme,
    ) -> Result<Self, PulseError> {
        let (u, delta) = scheme.build(v0, v1)?;
        Ok(PulseSpec { e, v0, v1, u, delta, eps1, eps2, alpha, scheme })
    }

    /// The configuration used throughout the numerical section: E = 1, v0 = −0.5, v1 = 0.5.
    pub fn reference(eps1: f64, eps2: f64, alpha: f64) -> Self {
        Self::new(1.0, -0.5, 0.5, eps1, eps2, alpha, Scheme::Sine).expect("valid reference spec")
    }

    pub fn with_eps(&self, eps1: f64, eps2: f64) -> Self {
        PulseSpec { eps1, eps2, ..self.clone() }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        PulseSpec { alpha, ..self.clone() }
    }

    /// Final time `1/(ε1 ε2)`.
    pub fn horizon(&self) -> f64 {
        1.0 / (self.eps1 * self.eps2)
    }

    pub fn reduced_time(&self, t: f64) -> f64 {
        (self.eps1 * self.eps2 * t).clamp(0.0, 1.0)
    }

    fn check_time(&self, t: f64) -> Result<f64, PulseError> {
        let horizon = self.horizon();
        if !(t >= -1e-9 * horizon && t <= horizon * (1.0 + 1e-9)) {
            return Err(PulseError::Domain { t, horizon });
        }
        Ok(self.reduced_time(t))
    }

    /// Carrier phase `2Et + Δ(s)/(ε1ε2)`.
    pub fn carrier_phase(&self, t: f64) -> f64 {
        let s = self.reduced_time(t);
        2.0 * self.e * t + self.delta.eval_unchecked(s) / (self.eps1 * self.eps2)
    }

    /// `w(t) = 2ε1 u(s) cos(2Et + Δ(s)/(ε1ε2))`.
    pub fn real_pulse(&self, t: f64) -> Result<f64, PulseError> {
        let s = self.check_time(t)?;
        Ok(2.0 * self.eps1 * self.u.eval_unchecked(s) * self.carrier_phase(t).cos())
    }

    /// `w^R(t) = ε1 u(s) exp(i(2Et + Δ(s)/(ε1ε2)))`, so that `real_pulse = 2 Re w^R`.
    pub fn complex_pulse(&self, t: f64) -> Result<C64, PulseError> {
        let s = self.check_time(t)?;
        Ok(cis(self.carrier_phase(t)) * (self.eps1 * self.u.eval_unchecked(s)))
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    pub fn frequencies(&self) -> FrequencySet {
        FrequencySet::new(self, DEFAULT_WINDOW)
    }

    pub fn clock(&self) -> PhaseClock {
        PhaseClock::new(self)
    }

    /// Flat `key=value` rendering using the documented config keys.
    pub fn to_config(&self) -> String {
        let mut out = format!(
            "E={}\nv0={}\nv1={}\neps1={}\neps2={}\nalpha={}\nscheme={}\n",
            self.e, self.v0, self.v1, self.eps1, self.eps2, self.alpha, self.scheme
        );
        if let Scheme::Custom { u, delta } = &self.scheme {
            out.push_str(&format!("u={u}\ndelta={delta}\n"));
        }
        out
    }

    /// Builds a spec from parsed config entries; unrecognised keys are left to the caller.
    pub fn from_entries(kv: &BTreeMap<String, String>) -> Result<Self, PulseError> {
        let num = |key: &'static str| -> Result<f64, PulseError> {
            let v = kv.get(key).ok_or(PulseError::MissingKey(key))?;
            v.trim().parse().map_err(|_| PulseError::BadValue { key: key.into(), value: v.clone() })
        };
        let scheme = match kv.get("scheme").map(|s| s.trim()).unwrap_or("sine") {
            "sine" => Scheme::Sine,
            "one-minus-cos" => Scheme::OneMinusCos,
            "hann" => Scheme::Hann,
            "custom" => Scheme::Custom {
                u: kv.get("u").ok_or(PulseError::MissingKey("u"))?.clone(),
                delta: kv.get("delta").ok_or(PulseError::MissingKey("delta"))?.clone(),
            },
            other => return Err(PulseError::UnknownScheme(other.into())),
        };
        Self::new(num("E")?, num("v0")?, num("v1")?, num("eps1")?, num("eps2")?, num("alpha")?, scheme)
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, PulseError> {
    let mut out = BTreeMap::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| PulseError::BadValue { key: "line".into(), value: line.into() })?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Validation.

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

/// Checks that only gate the error bound, not the ability to simulate.
const BOUND_ONLY: [&str; 2] = ["energy_condition", "pointwise_condition"];
/// Checks that must hold for any simulation to make sense.
const RUNNABLE: [&str; 5] = ["eps1_range", "eps2_range", "E_positive", "chirp_signs", "E_plus_alpha"];

impl ValidationReport {
    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn passed(&self, name: &str) -> bool {
        self.get(name).is_some_and(|c| c.passed)
    }

    pub fn energy_condition(&self) -> bool {
        self.passed("energy_condition")
    }

    pub fn pointwise_condition(&self) -> bool {
        self.passed("pointwise_condition")
    }

    /// All hypotheses hold and the frequency non-overlap condition is guaranteed,
    /// either globally (`3(E+v0) ≥ E+v1`) or pointwise for this α.
    pub fn is_valid(&self) -> bool {
        self.checks.iter().filter(|c| !BOUND_ONLY.contains(&c.name)).all(|c| c.passed)
            && (self.energy_condition() || self.pointwise_condition())
    }

    /// Parameters admit a simulation, even if the error-bound hypotheses fail.
    pub fn is_runnable(&self) -> bool {
        RUNNABLE.iter().all(|n| self.passed(n))
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{:<20} {:<4} {}", c.name, if c.passed { "ok" } else { "FAIL" }, c.detail)?;
        }
        write!(f, "valid: {}", self.is_valid())
    }
}

pub fn validate(spec: &PulseSpec) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |name, passed, detail: String| checks.push(Check { name, passed, detail });
    let tol = 1e-12;

    push("eps1_range", spec.eps1 > 0.0 && spec.eps1 < 1.0, format!("eps1 = {}", spec.eps1));
    push("eps2_range", spec.eps2 > 0.0 && spec.eps2 < 1.0, format!("eps2 = {}", spec.eps2));
    push("E_positive", spec.e > 0.0, format!("E = {}", spec.e));
    push("chirp_signs", spec.v0 < 0.0 && spec.v1 > 0.0, format!("v0 = {}, v1 = {}", spec.v0, spec.v1));

    let d1 = spec.delta.derivative();
    let d2 = d1.derivative();
    let (u0, u1) = (spec.u.eval_unchecked(0.0), spec.u.eval_unchecked(1.0));
    push("u_endpoints", u0.abs() < tol && u1.abs() < tol, format!("u(0) = {u0:.3e}, u(1) = {u1:.3e}"));
    let (dd0, dd1) = (d1.eval_unchecked(0.0), d1.eval_unchecked(1.0));
    push(
        "delta_endpoints",
        (dd0 - 2.0 * spec.v0).abs() < 1e-10 && (dd1 - 2.0 * spec.v1).abs() < 1e-10,
        format!("Delta'(0) = {dd0}, Delta'(1) = {dd1}"),
    );

    let uvals = spec.u.eval_grid(GRID);
    let umin = uvals[1..GRID].iter().cloned().fold(f64::INFINITY, f64::min);
    push("u_positive", umin > 0.0, format!("min interior u = {umin:.3e}"));
    let d2min = d2.eval_grid(GRID).into_iter().fold(f64::INFINITY, f64::min);
    push("delta_convex", d2min >= -1e-10, format!("min Delta'' = {d2min:.3e}"));

    let lhs = 3.0 * (spec.e + spec.v0);
    let rhs = spec.e + spec.v1;
    push("energy_condition", lhs >= rhs - tol, format!("3(E+v0) = {lhs}, E+v1 = {rhs}"));
    let pw = d1.scale(3.0).add(&SlowFn::constant(4.0 * spec.e - 2.0 * spec.alpha));
    let pwmin = pw.eval_grid(GRID).into_iter().fold(f64::INFINITY, f64::min);
    push("pointwise_condition", pwmin > 0.0, format!("min 4E+3Delta'-2alpha = {pwmin:.4}"));
    push("E_plus_alpha", spec.e + spec.alpha > 0.0, format!("E+alpha = {}", spec.e + spec.alpha));
    push(
        "alpha_interval",
        spec.alpha > spec.v0 && spec.alpha < spec.v1,
        format!("alpha = {} in ({}, {})", spec.alpha, spec.v0, spec.v1),
    );
    ValidationReport { checks }
}

// ---------------------------------------------------------------------------
// Frequencies and phases.

/// Slow frequencies `f1, f2, λ_j, φ_j` expressed in reduced time.
#[derive(Debug, Clone)]
pub struct FrequencySet {
    pub f1: SlowFn,
    pub f2: SlowFn,
    pub window: i32,
    pub lambda: BTreeMap<i32, SlowFn>,
    pub phi: BTreeMap<i32, SlowFn>,
}

impl FrequencySet {
    pub fn new(spec: &PulseSpec, window: i32) -> Self {
        let d1 = spec.delta.derivative();
        let f1 = SlowFn::constant(2.0 * spec.alpha).sub(&d1);
        let f2 = SlowFn::constant(4.0 * spec.e + 2.0 * spec.alpha).add(&d1);
        let mut fs = FrequencySet { f1, f2, window, lambda: BTreeMap::new(), phi: BTreeMap::new() };
        for j in -window..=window {
            let l = fs.lambda_of(j);
            let p = fs.phi_of(j);
            fs.lambda.insert(j, l);
            fs.phi.insert(j, p);
        }
        fs
    }

    /// `λ_j = (j+1) f1 − j f2`.
    pub fn lambda_of(&self, j: i32) -> SlowFn {
        self.f1.scale((j + 1) as f64).sub(&self.f2.scale(j as f64))
    }

    /// `φ_j = j (f1 − f2)`.
    pub fn phi_of(&self, j: i32) -> SlowFn {
        self.f1.sub(&self.f2).scale(j as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub window: i32,
    pub min_abs_lambda: Vec<(i32, f64)>,
    pub min_abs_phi: Vec<(i32, f64)>,
    pub min_abs_f1_minus_f2: f64,
    /// Minimum over `s` of `f2 − 2 f1`; positive iff `2 f1 < f2` everywhere.
    pub omega_margin: f64,
}

impl Certificate {
    pub fn omega_condition(&self) -> bool {
        self.omega_margin > 0.0
    }

    pub fn min_lambda(&self) -> f64 {
        self.min_abs_lambda.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }

    pub fn min_phi(&self) -> f64 {
        self.min_abs_phi.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }

    pub fn passed(&self) -> bool {
        self.omega_condition() && self.min_lambda() > 0.0 && self.min_phi() > 0.0
    }
}

/// Minimum moduli of the frequencies `λ_j, φ_j` for `1 ≤ |j| ≤ window`.
pub fn certify_frequencies(fs: &FrequencySet, window: i32) -> Certificate {
    let idx: Vec<i32> = (-window..=window).filter(|&j| j != 0).collect();
    let min_abs_lambda = idx.iter().map(|&j| (j, fs.lambda_of(j).min_abs())).collect();
    let min_abs_phi = idx.iter().map(|&j| (j, fs.phi_of(j).min_abs())).collect();
    let gap = fs.f1.sub(&fs.f2);
    let margin = fs.f2.sub(&fs.f1.scale(2.0));
    let omega_margin = margin.eval_grid(GRID * 5).into_iter().fold(f64::INFINITY, f64::min);
    Certificate {
        window,
        min_abs_lambda,
        min_abs_phi,
        min_abs_f1_minus_f2: gap.min_abs(),
        omega_margin,
    }
}

/// Fast phases `E1, E2, Λ_p, Φ_p` as functions of lab time.
#[derive(Debug, Clone)]
pub struct PhaseClock {
    pub e: f64,
    pub alpha: f64,
    pub eps1: f64,
    pub eps2: f64,
    delta: SlowFn,
}

impl PhaseClock {
    pub fn new(spec: &PulseSpec) -> Self {
        PhaseClock { e: spec.e, alpha: spec.alpha, eps1: spec.eps1, eps2: spec.eps2, delta: spec.delta.clone() }
    }

    pub fn reduced_time(&self, t: f64) -> f64 {
        (self.eps1 * self.eps2 * t).clamp(0.0, 1.0)
    }

    /// `(E1(t), E2(t))`.
    pub fn e12(&self, t: f64) -> (f64, f64) {
        let d = self.delta.eval_unchecked(self.reduced_time(t)) / (self.eps1 * self.eps2);
        (2.0 * self.alpha * t - d, 4.0 * self.e * t + 2.0 * self.alpha * t + d)
    }

    pub fn big_lambda(&self, p: i32, t: f64) -> f64 {
        let (e1, e2) = self.e12(t);
        e1 + p as f64 * (e1 - e2)
    }

    pub fn big_phi(&self, p: i32, t: f64) -> f64 {
        let (e1, e2) = self.e12(t);
        p as f64 * (e1 - e2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ref_spec(alpha: f64) -> PulseSpec {
        PulseSpec::reference(0.1, 0.1, alpha)
    }

    #[test]
    fn delta_derivative_endpoints() {
        let (_, d) = default_scheme(-0.5, 0.5).unwrap();
        let d1 = d.derivative();
        assert!((d1.eval(0.0).unwrap() + 1.0).abs() < 1e-15);
        assert!((d1.eval(1.0).unwrap() - 1.0).abs() < 1e-15);
        let (_, d) = default_scheme(-0.3, 0.9).unwrap();
        assert!((d.derivative().eval(0.0).unwrap() + 0.6).abs() < 1e-15);
    }

    #[test]
    fn delta_second_derivative_at_half() {
        let (_, d) = default_scheme(-0.5, 0.5).unwrap();
        assert!((d.nth_derivative(2).eval(0.5).unwrap() - PI).abs() < 1e-14);
    }

    #[test]
    fn closed_form_delta() {
        let (_, d) = default_scheme(-0.5, 0.5).unwrap();
        let x: f64 = 0.3;
        assert!((d.eval(x).unwrap() + (PI * x).sin() / PI).abs() < 1e-15);
    }

    #[test]
    fn default_scheme_rejects_bad_signs() {
        assert!(default_scheme(0.1, 0.5).is_err());
        assert!(default_scheme(-0.1, 0.0).is_err());
    }

    #[test]
    fn literal_envelope_values() {
        let (u, _) = Scheme::OneMinusCos.build(-0.5, 0.5).unwrap();
        assert!((u.eval(1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((u.inf_norm() - 2.0).abs() < 1e-12);
        let spec = PulseSpec::new(1.0, -0.5, 0.5, 0.1, 0.1, 0.0, Scheme::OneMinusCos).unwrap();
        assert!(!spec.validate().passed("u_endpoints"));
    }

    #[test]
    fn reference_parameters_sit_on_the_boundary() {
        let r = ref_spec(0.0).validate();
        assert!(r.energy_condition());
        assert!(r.is_valid(), "{r}");
    }

    #[test]
    fn low_energy_fails_energy_condition() {
        let spec = PulseSpec::new(0.75, -0.5, 0.5, 0.5, 0.1, 0.25, Scheme::Sine).unwrap();
        let r = spec.validate();
        assert!(!r.energy_condition());
        assert!(!r.pointwise_condition());
        assert!(!r.is_valid());
        assert!(r.is_runnable());
        let r = spec.with_alpha(-0.25).validate();
        assert!(r.pointwise_condition());
        assert!(r.is_valid());
    }

    #[test]
    fn alpha_on_the_boundary_is_invalid() {
        assert!(!ref_spec(0.5).validate().is_valid());
        assert!(!PulseSpec::reference(0.0, 0.0, 0.0).validate().is_valid());
    }

    #[test]
    fn real_pulse_values() {
        let spec = ref_spec(0.0);
        assert_eq!(spec.real_pulse(0.0).unwrap(), 0.0);
        let t = 0.5 / (spec.eps1 * spec.eps2);
        let want = 0.2 * (100.0 - 100.0 / PI).cos();
        assert!((spec.real_pulse(t).unwrap() - want).abs() < 1e-12);
        assert!(spec.real_pulse(-1.0).is_err());
        assert!(spec.real_pulse(spec.horizon() * 1.01).is_err());
    }

    #[test]
    fn real_is_twice_real_part_of_complex() {
        let spec = PulseSpec::reference(0.3, 0.2, 0.1);
        for k in 0..=200 {
            let t = spec.horizon() * k as f64 / 200.0;
            let w = spec.real_pulse(t).unwrap();
            let z = spec.complex_pulse(t).unwrap();
            assert!((w - 2.0 * z.re).abs() < 1e-12);
            assert!((z.norm() - spec.eps1 * spec.u.eval(spec.reduced_time(t)).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn frequencies_at_origin() {
        let fs = ref_spec(0.0).frequencies();
        assert!((fs.f1.eval(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((fs.f2.eval(0.0).unwrap() - 3.0).abs() < 1e-15);
        assert!(fs.phi[&0].is_zero());
        assert_eq!(fs.lambda.len(), 21);
    }

    #[test]
    fn lambda_indices_match_phases() {
        let spec = ref_spec(0.1);
        let clock = spec.clock();
        let t = 7.3;
        let (e1, e2) = clock.e12(t);
        assert_eq!(clock.big_lambda(0, t), e1);
        assert!((clock.big_lambda(-1, t) - e2).abs() < 1e-12);
        assert_eq!(clock.big_phi(0, t), 0.0);
    }

    #[test]
    fn certificate_for_reference_spec() {
        let fs = ref_spec(0.0).frequencies();
        let cert = certify_frequencies(&fs, 10);
        assert!(cert.passed());
        assert!(cert.min_abs_f1_minus_f2 >= 2.0 - 1e-9);
        assert!(cert.min_abs_phi.iter().all(|&(j, _)| j != 0));
    }

    #[test]
    fn certificate_fails_out_of_range() {
        let spec = PulseSpec::new(0.75, -0.5, 0.5, 1.0, 0.1, 0.25, Scheme::Sine).unwrap();
        assert!(!certify_frequencies(&spec.frequencies(), 10).omega_condition());
    }

    #[test]
    fn lambda_sign_pattern() {
        let fs = ref_spec(0.0).frequencies();
        for j in 1..=10 {
            assert!(fs.lambda_of(j).eval_grid(500).iter().all(|&v| v < 0.0));
            assert!(fs.lambda_of(-j).eval_grid(500).iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn config_roundtrip() {
        let spec = PulseSpec::reference(0.5, 0.1, -0.2);
        let kv = parse_config(&spec.to_config()).unwrap();
        let back = PulseSpec::from_entries(&kv).unwrap();
        assert_eq!(back.to_config(), spec.to_config());
        let custom = "E=1\nv0=-0.5\nv1=0.5\neps1=0.5\neps2=0.1\nalpha=0\nscheme=custom\nu=sin(pi*s)^2\ndelta=s^2 - s\n";
        let spec = PulseSpec::from_entries(&parse_config(custom).unwrap()).unwrap();
        assert!((spec.u.eval(0.5).unwrap() - 1.0).abs() < 1e-15);
    }
}

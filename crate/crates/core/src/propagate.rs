//! Exponential integrators for `i dψ/dt = H(t) ψ` with 2×2 Hermitian `H`, frames and metrics.

use std::f64::consts::PI;
use std::io::Write;

use crate::algebra::{CompiledSeries, EffectiveHamiltonian};
use crate::linalg::{c, cis, expm_pauli, Mat2, C64};
use crate::pulse::{PhaseClock, PulseSpec};
use crate::slowfn::SlowFn;

/// Upper limit on the number of steps of a single propagation.
const MAX_STEPS: u64 = 400_000_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PropagateError {
    #[error("step size underflow: {steps} steps requested over [{t0}, {t1}]")]
    StepUnderflow { steps: f64, t0: f64, t1: f64 },
    #[error("non-Hermitian Hamiltonian sample at t = {t} (defect {defect:.3e})")]
    NonHermitian { t: f64, defect: f64 },
    #[error("invalid interval [{t0}, {t1}]")]
    InvalidInterval { t0: f64, t1: f64 },
}

/// Two-level wave function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QState(pub [C64; 2]);

impl QState {
    /// `(0, 1)`: the initial state of every experiment.
    pub fn ground() -> Self {
        QState([c(0.0, 0.0), c(1.0, 0.0)])
    }

    pub fn excited() -> Self {
        QState([c(1.0, 0.0), c(0.0, 0.0)])
    }

    pub fn norm(&self) -> f64 {
        (self.0[0].norm_sqr() + self.0[1].norm_sqr()).sqrt()
    }

    pub fn distance(&self, o: &QState) -> f64 {
        ((self.0[0] - o.0[0]).norm_sqr() + (self.0[1] - o.0[1]).norm_sqr()).sqrt()
    }

    pub fn scale(&self, z: C64) -> QState {
        QState([self.0[0] * z, self.0[1] * z])
    }

    pub fn apply(&self, m: &Mat2) -> QState {
        QState(m.apply(self.0))
    }
}

/// min over θ of `|ψ − (e^{iθ}, 0)|`.
pub fn orbit_distance(psi: &QState) -> f64 {
    (2.0 * (1.0 - psi.0[0].norm())).max(0.0).sqrt()
}

/// `|ψ1|`.
pub fn fidelity(psi: &QState) -> f64 {
    psi.0[0].norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Exponential midpoint rule (order 2).
    Magnus2,
    /// Two-exponential commutator-free scheme on Gauss nodes (order 4).
    Magnus4,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorConfig {
    pub method: Method,
    pub points_per_period: u32,
    /// Tolerated Hermiticity defect of sampled Hamiltonians.
    pub tolerance: f64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        PropagatorConfig { method: Method::Magnus2, points_per_period: 60, tolerance: 1e-10 }
    }
}

impl PropagatorConfig {
    /// magnus4 at `factor` times the default resolution.
    pub fn reference(factor: u32) -> Self {
        PropagatorConfig { method: Method::Magnus4, points_per_period: 60 * factor, tolerance: 1e-10 }
    }

    pub fn steps_for(&self, t0: f64, t1: f64, omega: f64) -> Result<u64, PropagateError> {
        let n = ((t1 - t0) * omega.max(1e-3) * self.points_per_period as f64 / (2.0 * PI)).ceil().max(1.0);
        if !(n < MAX_STEPS as f64) {
            return Err(PropagateError::StepUnderflow { steps: n, t0, t1 });
        }
        Ok(n as u64)
    }
}

#[derive(Debug, Clone)]
pub struct Propagation {
    pub state: QState,
    pub steps: u64,
    pub trajectory: Vec<(f64, QState)>,
}

fn pauli_of(h: &Mat2, t: f64, tol: f64) -> Result<(f64, [f64; 3]), PropagateError> {
    let defect = h.hermiticity_defect();
    if defect > tol * (1.0 + h.norm()) {
        return Err(PropagateError::NonHermitian { t, defect });
    }
    Ok(h.to_pauli())
}

/// Propagates from `t0` to `t1`; `omega` is the fastest angular frequency of `H`.
/// With `samples > 0`, the trajectory is recorded at `samples + 1` evenly spaced times.
pub fn propagate<H>(
    h: H,
    psi0: QState,
    t0: f64,
    t1: f64,
    omega: f64,
    cfg: &PropagatorConfig,
    samples: usize,
) -> Result<Propagation, PropagateError>
where
    H: Fn(f64) -> Mat2,
{
    if !(t1 >= t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(PropagateError::InvalidInterval { t0, t1 });
    }
    let mut n = cfg.steps_for(t0, t1, omega)?;
    if samples > 0 {
        n = n.div_ceil(samples as u64) * samples as u64;
    }
    let dt = (t1 - t0) / n as f64;
    let every = if samples > 0 { n / samples as u64 } else { u64::MAX };
    let mut psi = psi0.0;
    let mut traj = Vec::new();
    if samples > 0 {
        traj.push((t0, psi0));
    }
    let r3 = 3f64.sqrt();
    let (c1, c2) = (0.5 - r3 / 6.0, 0.5 + r3 / 6.0);
    let (a1, a2) = ((3.0 - 2.0 * r3) / 12.0, (3.0 + 2.0 * r3) / 12.0);
    for k in 0..n {
        let ta = t0 + k as f64 * dt;
        match cfg.method {
            Method::Magnus2 => {
                let tm = ta + 0.5 * dt;
                let (b, a) = pauli_of(&h(tm), tm, cfg.tolerance)?;
                psi = expm_pauli(dt, b, a).apply(psi);
            }
            Method::Magnus4 => {
                let (t1s, t2s) = (ta + c1 * dt, ta + c2 * dt);
                let (b1, x1) = pauli_of(&h(t1s), t1s, cfg.tolerance)?;
                let (b2, x2) = pauli_of(&h(t2s), t2s, cfg.tolerance)?;
                let mix = |p: f64, q: f64| -> (f64, [f64; 3]) {
                    (p * b1 + q * b2, [p * x1[0] + q * x2[0], p * x1[1] + q * x2[1], p * x1[2] + q * x2[2]])
                };
                let (bf, af) = mix(a2, a1);
                let (bs, as_) = mix(a1, a2);
                psi = expm_pauli(dt, bf, af).apply(psi);
                psi = expm_pauli(dt, bs, as_).apply(psi);
            }
        }
        if samples > 0 && (k + 1) % every == 0 {
            traj.push((t0 + (k + 1) as f64 * dt, QState(psi)));
        }
    }
    Ok(Propagation { state: QState(psi), steps: n, trajectory: traj })
}

/// `e^{i(E+α)σz t} ψ`.
pub fn to_interaction_frame(psi: &QState, t: f64, e: f64, alpha: f64) -> QState {
    let ph = (e + alpha) * t;
    QState([psi.0[0] * cis(ph), psi.0[1] * cis(-ph)])
}

pub fn from_interaction_frame(psi: &QState, t: f64, e: f64, alpha: f64) -> QState {
    to_interaction_frame(psi, t, -e, -alpha)
}

/// Which equation a lab-frame run integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// `(E+α)σz + w(t)σx` directly.
    Lab,
    /// The interaction-frame Hamiltonian, rotated back at the end.
    Interaction,
}

/// Fastest angular frequency in a lab-frame run.
pub fn lab_frequency(spec: &PulseSpec) -> f64 {
    let d1 = spec.delta.derivative().inf_norm();
    4.0 * spec.e + d1 + 2.0 * spec.alpha.abs() + 4.0 * spec.eps1 * spec.u.inf_norm()
}

fn lab_hamiltonian(spec: &PulseSpec, complex: bool) -> impl Fn(f64) -> Mat2 + '_ {
    let zeta = spec.e + spec.alpha;
    move |t: f64| {
        let s = spec.reduced_time(t);
        let amp = spec.eps1 * spec.u.eval_unchecked(s);
        let phase = spec.carrier_phase(t);
        let off = if complex { cis(-phase) * amp } else { c(2.0 * amp * phase.cos(), 0.0) };
        Mat2([[c(zeta, 0.0), off], [off.conj(), c(-zeta, 0.0)]])
    }
}

fn interaction_hamiltonian(spec: &PulseSpec, complex: bool) -> impl Fn(f64) -> Mat2 + '_ {
    let clock = spec.clock();
    move |t: f64| {
        let s = spec.reduced_time(t);
        let amp = spec.eps1 * spec.u.eval_unchecked(s);
        let (e1, e2) = clock.e12(t);
        let mut off = cis(e1) * amp;
        if !complex {
            off += cis(e2) * amp;
        }
        Mat2([[c(0.0, 0.0), off], [off.conj(), c(0.0, 0.0)]])
    }
}

fn run_lab(
    spec: &PulseSpec,
    psi0: QState,
    cfg: &PropagatorConfig,
    frame: Frame,
    complex: bool,
    samples: usize,
) -> Result<Propagation, PropagateError> {
    let t1 = spec.horizon();
    let omega = lab_frequency(spec);
    match frame {
        Frame::Lab => propagate(lab_hamiltonian(spec, complex), psi0, 0.0, t1, omega, cfg, samples),
        Frame::Interaction => {
            let mut p = propagate(interaction_hamiltonian(spec, complex), psi0, 0.0, t1, omega, cfg, samples)?;
            p.state = from_interaction_frame(&p.state, t1, spec.e, spec.alpha);
            for (t, s) in &mut p.trajectory {
                *s = from_interaction_frame(s, *t, spec.e, spec.alpha);
            }
            Ok(p)
        }
    }
}

/// Real field: `H = (E+α)σz + w(t)σx` over `[0, 1/(ε1ε2)]`.
pub fn propagate_lab(spec: &PulseSpec, psi0: QState, cfg: &PropagatorConfig) -> Result<QState, PropagateError> {
    Ok(run_lab(spec, psi0, cfg, Frame::Lab, false, 0)?.state)
}

/// Complex field: off-diagonal `conj(w^R)`, `w^R`, so the interaction frame is `ε1 u A(E1)`.
pub fn propagate_lab_complex(spec: &PulseSpec, psi0: QState, cfg: &PropagatorConfig) -> Result<QState, PropagateError> {
    Ok(run_lab(spec, psi0, cfg, Frame::Lab, true, 0)?.state)
}

/// Full control over frame, pulse kind and trajectory sampling.
pub fn propagate_lab_with(
    spec: &PulseSpec,
    psi0: QState,
    cfg: &PropagatorConfig,
    frame: Frame,
    complex: bool,
    samples: usize,
) -> Result<Propagation, PropagateError> {
    run_lab(spec, psi0, cfg, frame, complex, samples)
}

/// Propagates a compiled interaction-frame series (e.g. `H_I` itself).
pub fn propagate_series(
    series: &CompiledSeries,
    spec: &PulseSpec,
    psi0: QState,
    cfg: &PropagatorConfig,
) -> Result<QState, PropagateError> {
    let clock = spec.clock();
    let omega = lab_frequency(spec);
    Ok(propagate(|t| series.evaluate(&clock, t), psi0, 0.0, spec.horizon(), omega, cfg, 0)?.state)
}

/// Integration variable for the effective dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectiveForm {
    /// `H_RWA(t)` in lab time (carries the phase `E1(t)`).
    Time,
    /// `H_slow(s)/(ε1ε2)` in reduced time after the diagonal rotation `U`.
    Slow,
}

/// `(cx, cy, cz)` of the rotated effective Hamiltonian.
pub fn slow_coefficients(eff: &EffectiveHamiltonian, spec: &PulseSpec) -> [SlowFn; 3] {
    let (e1, e2) = (spec.eps1, spec.eps2);
    let cx = EffectiveHamiltonian::weighted(&eff.h1, e1, e2);
    let cy = EffectiveHamiltonian::weighted(&eff.h2, e1, e2);
    let half_f1 = SlowFn::constant(spec.alpha).sub(&spec.delta.derivative().scale(0.5));
    let cz = half_f1.add(&EffectiveHamiltonian::weighted(&eff.h3, e1, e2));
    [cx, cy, cz]
}

/// Diagonal rotation `U(t) = diag(e^{−iE1/2}, e^{iE1/2})` with `U A(E1) U* = σx`.
pub fn slow_rotation(clock: &PhaseClock, t: f64) -> Mat2 {
    let (e1, _) = clock.e12(t);
    Mat2::diag(cis(-0.5 * e1), cis(0.5 * e1))
}

/// Propagates the effective dynamics from `psi0` (given in the transformed variables).
pub fn propagate_effective(
    eff: &EffectiveHamiltonian,
    spec: &PulseSpec,
    psi0: QState,
    cfg: &PropagatorConfig,
    form: EffectiveForm,
) -> Result<QState, PropagateError> {
    Ok(propagate_effective_with(eff, spec, psi0, cfg, form, 0)?.state)
}

pub fn propagate_effective_with(
    eff: &EffectiveHamiltonian,
    spec: &PulseSpec,
    psi0: QState,
    cfg: &PropagatorConfig,
    form: EffectiveForm,
    samples: usize,
) -> Result<Propagation, PropagateError> {
    let [cx, cy, cz] = slow_coefficients(eff, spec);
    let gap_sup = cx.inf_norm() + cy.inf_norm() + cz.inf_norm();
    let clock = spec.clock();
    let slow = spec.eps1 * spec.eps2;
    match form {
        EffectiveForm::Time => {
            let series = eff.to_series().compile(spec.eps1, spec.eps2);
            let f1 = 2.0 * spec.alpha.abs() + spec.delta.derivative().inf_norm();
            let omega = f1 + 2.0 * gap_sup;
            propagate(|t| series.evaluate(&clock, t), psi0, 0.0, spec.horizon(), omega, cfg, samples)
        }
        EffectiveForm::Slow => {
            let tape = crate::slowfn::Tape::compile(&[cx, cy, cz]);
            let u0 = slow_rotation(&clock, 0.0);
            let h = |s: f64| {
                let v = tape.eval(s.clamp(0.0, 1.0));
                Mat2::from_pauli(0.0, [v[0] / slow, v[1] / slow, v[2] / slow])
            };
            let omega = 2.0 * gap_sup / slow;
            let mut p = propagate(h, psi0.apply(&u0), 0.0, 1.0, omega, cfg, samples)?;
            let back = |s: f64, st: &QState| st.apply(&slow_rotation(&clock, s / slow).adjoint());
            p.state = back(1.0, &p.state);
            for (s, st) in &mut p.trajectory {
                *st = back(*s, st);
                *s /= slow;
            }
            Ok(p)
        }
    }
}

/// Writes `t, s, re_psi1, im_psi1, re_psi2, im_psi2, fidelity` rows.
pub fn write_trajectory<W: Write>(out: W, traj: &[(f64, QState)], eps1: f64, eps2: f64) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "s", "re_psi1", "im_psi1", "re_psi2", "im_psi2", "fidelity"])?;
    for (t, psi) in traj {
        let s = eps1 * eps2 * t;
        w.write_record(
            [*t, s, psi.0[0].re, psi.0[0].im, psi.0[1].re, psi.0[1].im, fidelity(psi)].map(|v| format!("{v:.12e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(method: Method) -> PropagatorConfig {
        PropagatorConfig { method, points_per_period: 60, tolerance: 1e-10 }
    }

    #[test]
    fn diagonal_evolution() {
        let e = 0.7;
        let t = 3.3;
        for m in [Method::Magnus2, Method::Magnus4] {
            let p = propagate(|_| Mat2::sigma_z().scale_re(e), QState::ground(), 0.0, t, 2.0 * e, &cfg(m), 0).unwrap();
            assert!(p.state.distance(&QState([c(0.0, 0.0), cis(e * t)])) < 1e-13);
        }
    }

    #[test]
    fn rabi_rotation() {
        let t = 2.1;
        let p = propagate(|_| Mat2::sigma_x(), QState::ground(), 0.0, t, 2.0, &cfg(Method::Magnus4), 0).unwrap();
        let want = QState([c(0.0, -t.sin()), c(t.cos(), 0.0)]);
        assert!(p.state.distance(&want) < 1e-13);
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let psi = QState([c(0.6, 0.0), c(0.0, 0.8)]);
        let p = propagate(|_| Mat2::ZERO, psi, 0.0, 5.0, 1.0, &cfg(Method::Magnus2), 0).unwrap();
        assert_eq!(p.state, psi);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let bad = Mat2([[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]);
        let r = propagate(|_| bad, QState::ground(), 0.0, 1.0, 1.0, &cfg(Method::Magnus2), 0);
        assert!(matches!(r, Err(PropagateError::NonHermitian { .. })));
    }

    #[test]
    fn reversed_interval_is_rejected() {
        let r = propagate(|_| Mat2::ZERO, QState::ground(), 1.0, 0.0, 1.0, &cfg(Method::Magnus2), 0);
        assert!(matches!(r, Err(PropagateError::InvalidInterval { .. })));
    }

    #[test]
    fn trajectory_sampling() {
        let p = propagate(|_| Mat2::sigma_x(), QState::ground(), 0.0, 1.0, 2.0, &cfg(Method::Magnus2), 10).unwrap();
        assert_eq!(p.trajectory.len(), 11);
        assert!((p.trajectory[10].0 - 1.0).abs() < 1e-12);
        assert_eq!(p.trajectory[10].1, p.state);
    }

    #[test]
    fn metric_examples() {
        assert!(orbit_distance(&QState([cis(0.3), c(0.0, 0.0)])) < 1e-8);
        assert_eq!(fidelity(&QState([cis(0.3), c(0.0, 0.0)])), 1.0);
        assert!((orbit_distance(&QState::ground()) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(fidelity(&QState::ground()), 0.0);
        let h = 0.5f64.sqrt();
        let d = orbit_distance(&QState([c(h, 0.0), c(h, 0.0)]));
        assert!((d - (2.0 - 2f64.sqrt()).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn interaction_frame_roundtrip() {
        let psi = QState([c(0.6, 0.1), c(-0.2, 0.77)]);
        assert_eq!(to_interaction_frame(&psi, 0.0, 1.0, 0.2), psi);
        let back = from_interaction_frame(&to_interaction_frame(&psi, 13.7, 1.0, 0.2), 13.7, 1.0, 0.2);
        assert!(back.distance(&psi) < 1e-15);
    }

    #[test]
    fn unperturbed_lab_evolution() {
        let mut spec = PulseSpec::reference(0.5, 0.1, 0.1);
        spec.u = SlowFn::zero();
        let st = propagate_lab(&spec, QState::ground(), &PropagatorConfig::default()).unwrap();
        let t = spec.horizon();
        let want = QState([c(0.0, 0.0), cis((spec.e + spec.alpha) * t)]);
        assert!(st.distance(&want) < 1e-10);
    }
}

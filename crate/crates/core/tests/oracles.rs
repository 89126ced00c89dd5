//! Cross-checks against oracles written independently of the library code.

use chirpsim::adiabatic::{adiabatic_bound, integrate, SlowHamiltonian};
use chirpsim::algebra::{build_interaction_hamiltonian, cleaning_algorithm, extract_hrwa};
use chirpsim::linalg::{c, cis, Mat2, C64};
use chirpsim::propagate::{
    from_interaction_frame, propagate, propagate_effective_with, propagate_lab_with, propagate_series,
    to_interaction_frame, EffectiveForm, Frame, Method, PropagatorConfig, QState,
};
use chirpsim::pulse::{certify_frequencies, DEFAULT_WINDOW};
use chirpsim::{EffectiveHamiltonian, PulseSpec};

/// Classical RK4 on `i ψ̇ = H ψ`, independent of the exponential integrators.
fn rk4<H: Fn(f64) -> Mat2>(h: H, psi0: [C64; 2], t1: f64, n: usize) -> QState {
    let dt = t1 / n as f64;
    let f = |t: f64, v: [C64; 2]| -> [C64; 2] {
        let w = h(t).apply(v);
        [w[0] * c(0.0, -1.0), w[1] * c(0.0, -1.0)]
    };
    let mut v = psi0;
    for k in 0..n {
        let t = k as f64 * dt;
        let add = |a: [C64; 2], b: [C64; 2], s: f64| [a[0] + b[0] * s, a[1] + b[1] * s];
        let k1 = f(t, v);
        let k2 = f(t + dt / 2.0, add(v, k1, dt / 2.0));
        let k3 = f(t + dt / 2.0, add(v, k2, dt / 2.0));
        let k4 = f(t + dt, add(v, k3, dt));
        for i in 0..2 {
            v[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
        }
    }
    QState(v)
}

#[test]
fn constant_field_matches_rabi_formula() {
    // H = xσx + zσz: population of |1⟩ from |2⟩ is x²/Ω² sin²(Ωt).
    let (x, z, t) = (0.7, -0.3, 5.3);
    let om = (x * x + z * z as f64).sqrt();
    let p = propagate(|_| Mat2::from_pauli(0.0, [x, 0.0, z]), QState::ground(), 0.0, t, om, &PropagatorConfig::default(), 0).unwrap();
    let want = x * x / (om * om) * (om * t).sin().powi(2);
    assert!((p.state.0[0].norm_sqr() - want).abs() < 1e-13);
}

#[test]
fn integrators_reach_their_orders() {
    let h = |t: f64| Mat2::from_pauli(0.0, [0.8 * (1.3 * t).cos(), 0.2 * t.sin(), 0.5 + 0.1 * t]);
    let reference = rk4(h, QState::ground().0, 6.0, 200_000);
    let err = |method, ppp| {
        let cfg = PropagatorConfig { method, points_per_period: ppp, ..PropagatorConfig::default() };
        propagate(h, QState::ground(), 0.0, 6.0, 2.0, &cfg, 0).unwrap().state.distance(&reference)
    };
    let r2 = err(Method::Magnus2, 40) / err(Method::Magnus2, 80);
    let r4 = err(Method::Magnus4, 40) / err(Method::Magnus4, 80);
    assert!((r2 - 4.0).abs() < 0.4, "magnus2 ratio {r2}");
    assert!((r4 - 16.0).abs() < 2.0, "magnus4 ratio {r4}");
}

#[test]
fn lab_run_agrees_with_rk4() {
    let spec = PulseSpec::reference(0.4, 0.4, 0.1);
    let lab = propagate_lab_with(&spec, QState::ground(), &PropagatorConfig::reference(4), Frame::Lab, false, 0).unwrap();
    let h = |t: f64| {
        let w = spec.real_pulse(t.min(spec.horizon())).unwrap();
        Mat2::from_pauli(0.0, [w, 0.0, spec.e + spec.alpha])
    };
    let r = rk4(h, QState::ground().0, spec.horizon(), 400_000);
    assert!(lab.state.distance(&r) < 1e-8, "{}", lab.state.distance(&r));
}

#[test]
fn lab_and_interaction_frames_agree() {
    let spec = PulseSpec::reference(0.5, 0.2, -0.2);
    let cfg = PropagatorConfig::reference(2);
    let a = propagate_lab_with(&spec, QState::ground(), &cfg, Frame::Lab, false, 0).unwrap().state;
    let b = propagate_lab_with(&spec, QState::ground(), &cfg, Frame::Interaction, false, 0).unwrap().state;
    assert!(a.distance(&b) < 1e-8, "{}", a.distance(&b));
    let series = build_interaction_hamiltonian(&spec).compile(spec.eps1, spec.eps2);
    let s = propagate_series(&series, &spec, QState::ground(), &cfg).unwrap();
    let back = from_interaction_frame(&s, spec.horizon(), spec.e, spec.alpha);
    assert!(a.distance(&back) < 1e-8);
}

#[test]
fn frame_maps_are_inverse() {
    let psi = QState([c(0.6, 0.1), c(-0.2, 0.77)]);
    let there = to_interaction_frame(&psi, 3.7, 1.0, 0.25);
    assert!(from_interaction_frame(&there, 3.7, 1.0, 0.25).distance(&psi) < 1e-15);
}

#[test]
fn complex_field_is_first_order_rwa() {
    // The complex field has interaction frame exactly ε1 u A(E1).
    let spec = PulseSpec::reference(0.4, 0.2, 0.15);
    let cfg = PropagatorConfig::reference(2);
    let lab = propagate_lab_with(&spec, QState::ground(), &cfg, Frame::Lab, true, 0).unwrap().state;
    let lab_i = to_interaction_frame(&lab, spec.horizon(), spec.e, spec.alpha);
    let eff = EffectiveHamiltonian::first_order(&spec);
    for form in [EffectiveForm::Time, EffectiveForm::Slow] {
        let r = propagate_effective_with(&eff, &spec, QState::ground(), &cfg, form, 0).unwrap().state;
        assert!(lab_i.distance(&r) < 1e-7, "{form:?}: {}", lab_i.distance(&r));
    }
}

#[test]
fn effective_forms_agree() {
    let spec = PulseSpec::reference(0.3, 0.2, 0.1);
    let eff = extract_hrwa(&cleaning_algorithm(&build_interaction_hamiltonian(&spec), &spec, 3).unwrap().series, 3);
    let cfg = PropagatorConfig::reference(2);
    let a = propagate_effective_with(&eff, &spec, QState::ground(), &cfg, EffectiveForm::Time, 0).unwrap().state;
    let b = propagate_effective_with(&eff, &spec, QState::ground(), &cfg, EffectiveForm::Slow, 0).unwrap().state;
    assert!(a.distance(&b) < 1e-8, "{}", a.distance(&b));
}

#[test]
fn higher_order_rwa_tracks_the_full_endpoint() {
    // Endpoint error of the effective dynamics shrinks with N0 at fixed (ε1, ε2).
    let spec = PulseSpec::reference(0.3, 0.05, 0.1);
    let cfg = PropagatorConfig::reference(1);
    let lab = propagate_lab_with(&spec, QState::ground(), &cfg, Frame::Lab, false, 0).unwrap().state;
    let lab_i = to_interaction_frame(&lab, spec.horizon(), spec.e, spec.alpha);
    let mut errs = Vec::new();
    for n0 in 1..=3 {
        let r = cleaning_algorithm(&build_interaction_hamiltonian(&spec), &spec, n0).unwrap();
        let eff = extract_hrwa(&r.series, n0);
        let psi0 = QState(chirpsim::algebra::apply_generators(
            QState::ground().0,
            0.0,
            &r.generators,
            &spec.clock(),
            chirpsim::algebra::Direction::Forward,
        ));
        let end = propagate_effective_with(&eff, &spec, psi0, &cfg, EffectiveForm::Slow, 0).unwrap().state;
        let back = QState(chirpsim::algebra::apply_generators(
            end.0,
            spec.horizon(),
            &r.generators,
            &spec.clock(),
            chirpsim::algebra::Direction::Inverse,
        ));
        errs.push(back.distance(&lab_i));
    }
    assert!(errs[1] < errs[0] && errs[2] < errs[0], "{errs:?}");
}

#[test]
fn certificate_values_by_hand() {
    // λ1 = 2f1 − f2 = 2α − 4E − 3Δ′, Δ′ = −cos πs ∈ [−1, 1].
    for (alpha, want) in [(0.4, 0.2), (0.0, 1.0), (-0.4, 1.8)] {
        let cert = certify_frequencies(&PulseSpec::reference(0.5, 0.1, alpha).frequencies(), DEFAULT_WINDOW);
        assert!((cert.min_lambda() - want).abs() < 1e-9, "alpha {alpha}: {}", cert.min_lambda());
        assert!((cert.min_abs_f1_minus_f2 - 2.0).abs() < 1e-9);
    }
}

#[test]
fn quadrature_known_integrals() {
    let v = integrate(|s| Ok(s.sin()), 0.0, std::f64::consts::PI, 1e-12, 8).unwrap();
    assert!((v - 2.0).abs() < 1e-11);
    let v = integrate(|s| Ok(1.0 / (1.0 + 25.0 * s * s)), -1.0, 1.0, 1e-10, 16).unwrap();
    assert!((v - 0.4 * 5f64.atan()).abs() < 1e-9);
}

#[test]
fn first_order_bound_dominates_measured_error() {
    let spec = PulseSpec::reference(0.4, 0.05, 0.1);
    let sh = SlowHamiltonian::tilde(&spec);
    let eff = EffectiveHamiltonian::first_order(&spec);
    let end = propagate_effective_with(&eff, &spec, QState::ground(), &PropagatorConfig::default(), EffectiveForm::Slow, 0).unwrap();
    let d = chirpsim::orbit_distance(&end.state);
    let b = adiabatic_bound(&sh, &spec).unwrap();
    assert!(d <= b, "{d} > {b}");
}

#[test]
fn complex_pulse_has_unit_phase() {
    let spec = PulseSpec::reference(0.5, 0.1, 0.0);
    let t = 0.37 * spec.horizon();
    let z = spec.complex_pulse(t).unwrap();
    let amp = spec.eps1 * spec.u.eval_unchecked(0.37);
    assert!((z - cis(spec.carrier_phase(t)) * amp).norm() < 1e-12);
}

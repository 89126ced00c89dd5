use chirpsim::adiabatic::{projector, projector_d1, SlowHamiltonian};
use chirpsim::algebra::{combination_matrix, rewrite_product, GTerm, Kind, Product, Trig};
use chirpsim::linalg::{c, cis, expm_pauli, Mat2};
use chirpsim::propagate::{orbit_distance, propagate, Method, PropagatorConfig, QState};
use chirpsim::{PulseSpec, SlowFn};
use proptest::prelude::*;

fn slowfn_tree() -> impl Strategy<Value = SlowFn> {
    let leaf = prop_oneof![(-2.0f64..2.0).prop_map(SlowFn::constant), Just(SlowFn::var())];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|f| f.sin()),
            inner.clone().prop_map(|f| f.cos()),
            (inner.clone(), inner.clone()).prop_map(|(f, g)| f.add(&g)),
            (inner.clone(), inner.clone()).prop_map(|(f, g)| f.mul(&g)),
            (inner, -3.0f64..3.0).prop_map(|(f, k)| f.scale(k)),
        ]
    })
}

fn gterm() -> impl Strategy<Value = GTerm> {
    (0usize..4, -4i32..=4).prop_filter_map("canonical form", |(k, p)| {
        let kind = [Kind::A, Kind::B, Kind::CosZ, Kind::SinZ][k];
        GTerm::canonical(kind, p).map(|(_, g)| g)
    })
}

/// Matrix of a G element from its definition.
fn literal(g: GTerm, e1: f64, d: f64) -> Mat2 {
    let ph = e1 + g.p as f64 * d;
    let q = g.p as f64 * d;
    let zero = c(0.0, 0.0);
    match g.kind {
        Kind::A => Mat2([[zero, cis(ph)], [cis(-ph), zero]]),
        Kind::B => Mat2([[zero, c(0.0, -1.0) * cis(ph)], [c(0.0, 1.0) * cis(-ph), zero]]),
        Kind::CosZ => Mat2::diag(c(q.cos(), 0.0), c(-q.cos(), 0.0)),
        Kind::SinZ => Mat2::diag(c(q.sin(), 0.0), c(-q.sin(), 0.0)),
    }
}

fn central_difference(f: &SlowFn, s: f64) -> f64 {
    let h = 1e-5;
    (f.eval_unchecked(s + h) - f.eval_unchecked(s - h)) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn derivative_matches_finite_differences(f in slowfn_tree(), s in 0.05f64..0.95) {
        let exact = f.derivative().eval_unchecked(s);
        let fd = central_difference(&f, s);
        prop_assert!((exact - fd).abs() <= 1e-5 * (1.0 + exact.abs()), "{f}: {exact} vs {fd}");
    }

    #[test]
    fn product_rule(f in slowfn_tree(), g in slowfn_tree(), s in 0.0f64..1.0) {
        let lhs = f.mul(&g).derivative().eval_unchecked(s);
        let rhs = f.derivative().eval_unchecked(s) * g.eval_unchecked(s) + f.eval_unchecked(s) * g.derivative().eval_unchecked(s);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn division_undoes_multiplication(f in slowfn_tree(), g in slowfn_tree(), s in 0.0f64..1.0) {
        // 2 + sin(g) never vanishes.
        let den = SlowFn::constant(2.0).add(&g.sin());
        let q = f.mul(&den).div(&den).unwrap();
        prop_assert!((q.eval(s).unwrap() - f.eval_unchecked(s)).abs() <= 1e-10 * (1.0 + f.eval_unchecked(s).abs()));
    }

    #[test]
    fn display_parses_back(f in slowfn_tree(), s in 0.0f64..1.0) {
        let g = SlowFn::parse(&f.to_string()).unwrap();
        let (a, b) = (f.eval_unchecked(s), g.eval_unchecked(s));
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()), "{f} -> {g}");
    }

    #[test]
    fn inf_norm_dominates_samples(f in slowfn_tree(), s in 0.0f64..1.0) {
        prop_assert!(f.eval_unchecked(s).abs() <= f.inf_norm() * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn commutator_rewrite_is_sound(x in gterm(), y in gterm(), e1 in -7.0f64..7.0, d in -7.0f64..7.0) {
        let op = Product::Commutator(x, y);
        let rw = rewrite_product(&op).unwrap();
        let (a, b) = (literal(x, e1, d), literal(y, e1, d));
        let want = a.mul(&b).sub(&b.mul(&a)).scale(c(0.0, 1.0));
        prop_assert!(combination_matrix(&rw, e1, d).sub(&want).norm() < 1e-12);
    }

    #[test]
    fn conjugation_rewrite_is_sound(x in gterm(), y in gterm(), e1 in -7.0f64..7.0, d in -7.0f64..7.0) {
        let rw = rewrite_product(&Product::Conjugate(x, y)).unwrap();
        let a = literal(x, e1, d);
        let want = a.mul(&literal(y, e1, d)).mul(&a);
        prop_assert!(combination_matrix(&rw, e1, d).sub(&want).norm() < 1e-12);
    }

    #[test]
    fn trig_rewrite_is_sound(z in gterm(), q in -4i32..=4, sine in any::<bool>(), e1 in -7.0f64..7.0, d in -7.0f64..7.0) {
        let t = if sine { Trig::Sin(q) } else { Trig::Cos(q) };
        let rw = rewrite_product(&Product::TrigMul(t, z)).unwrap();
        let v = if sine { (q as f64 * d).sin() } else { (q as f64 * d).cos() };
        prop_assert!(combination_matrix(&rw, e1, d).sub(&literal(z, e1, d).scale_re(v)).norm() < 1e-12);
    }

    #[test]
    fn real_pulse_is_twice_real_part_of_complex(eps1 in 0.05f64..0.5, eps2 in 0.05f64..0.5, alpha in -0.4f64..0.4, frac in 0.0f64..1.0) {
        let spec = PulseSpec::reference(eps1, eps2, alpha);
        let t = frac * spec.horizon();
        let w = spec.real_pulse(t).unwrap();
        let z = spec.complex_pulse(t).unwrap();
        prop_assert!((w - 2.0 * z.re).abs() < 1e-12);
    }

    #[test]
    fn pauli_exponential_is_unitary(h in 0.0f64..10.0, b in -3.0f64..3.0, x in -3.0f64..3.0, y in -3.0f64..3.0, z in -3.0f64..3.0) {
        let u = expm_pauli(h, b, [x, y, z]);
        prop_assert!(u.mul(&u.adjoint()).sub(&Mat2::identity()).norm() < 1e-12);
    }

    #[test]
    fn orbit_distance_is_bounded(a in -1.0f64..1.0, b in -1.0f64..1.0, cc in -1.0f64..1.0, d in -1.0f64..1.0) {
        let n = (a * a + b * b + cc * cc + d * d).sqrt().max(1e-9);
        let psi = QState([c(a / n, b / n), c(cc / n, d / n)]);
        let dist = orbit_distance(&psi);
        prop_assert!((0.0..=2f64.sqrt() + 1e-12).contains(&dist));
    }

    #[test]
    fn propagation_preserves_norm(x in -2.0f64..2.0, z in -2.0f64..2.0, w in 0.1f64..5.0, m4 in any::<bool>()) {
        let cfg = PropagatorConfig { method: if m4 { Method::Magnus4 } else { Method::Magnus2 }, ..PropagatorConfig::default() };
        let h = |t: f64| Mat2::from_pauli(0.0, [x * (w * t).cos(), 0.0, z]);
        let p = propagate(h, QState::ground(), 0.0, 10.0, w + x.abs() + z.abs(), &cfg, 0).unwrap();
        prop_assert!((p.state.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projector_is_a_rank_one_orthogonal_projection(
        a in -2.0f64..2.0, b in -2.0f64..2.0, k in 0.5f64..3.0, s in 0.0f64..1.0,
    ) {
        let v = SlowFn::var();
        let sh = SlowHamiltonian::new(
            v.scale(k).sin().scale(a).add(&SlowFn::constant(1.0)),
            SlowFn::constant(b),
            v.scale(k).cos().scale(a),
        );
        let p = projector(&sh, s).unwrap();
        prop_assert!(p.mul(&p).sub(&p).norm() < 1e-12);
        prop_assert!(p.sub(&p.adjoint()).norm() < 1e-12);
        prop_assert!((p.trace() - c(1.0, 0.0)).norm() < 1e-12);
        // P projects onto the negative eigenvalue.
        let hp = sh.matrix(s).mul(&p);
        prop_assert!((hp.trace().re + sh.matrix(s).norm()).abs() < 1e-9);
        if s > 1e-3 && s < 1.0 - 1e-3 {
            let h = 1e-6;
            let fd = projector(&sh, s + h).unwrap().sub(&projector(&sh, s - h).unwrap()).scale_re(0.5 / h);
            prop_assert!(fd.sub(&projector_d1(&sh, s).unwrap()).norm() < 1e-5 * (1.0 + fd.norm()));
        }
    }
}

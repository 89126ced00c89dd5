use std::collections::{BTreeMap, HashMap};
use std::sync::OnceLock;

use super::fourier::FOp;
use super::series::{Bideg, CompiledSeries, OpSeries};
use super::{pr, AlgebraError, GTerm, Kind, Trig};
use crate::linalg::{c, Mat2, C64};
use crate::pulse::{FrequencySet, PhaseClock, PulseSpec};
use crate::slowfn::{certify_nonvanishing, sum_balanced, SlowFn, Tape};

/// Safety limit on the number of eliminations in one cleaning run.
const MAX_ELIMINATIONS: usize = 200_000;
/// Coefficients whose sup-norm falls below this after merging are dropped (and tallied).
const PRUNE_TOL: f64 = 1e-13;

/// The near-identity unitary `exp(i (c/f) Pr(Z))` removing `c Z` from a series.
#[derive(Debug, Clone)]
pub struct Generator {
    pub bideg: Bideg,
    /// The slow part of the eliminated coefficient `c = ε1^j ε2^k coef`.
    pub coef: SlowFn,
    pub target: GTerm,
    /// `Pr(Z)` up to the sign stored in `sign`.
    pub rotated: GTerm,
    pub sign: f64,
    /// Phase velocity of the target, `λ_p` or `φ_p`.
    pub freq: SlowFn,
    pub freq_bound: f64,
    /// `sign · coef / freq`.
    pub x: SlowFn,
    tape: OnceLock<Tape>,
}

impl Generator {
    pub fn new(bideg: Bideg, coef: SlowFn, target: GTerm, freq: SlowFn, freq_bound: f64) -> Self {
        let (sign, rotated) = pr(target);
        let x = coef.div_certified(&freq, freq_bound).scale(sign);
        Generator { bideg, coef, target, rotated, sign, freq, freq_bound, x, tape: OnceLock::new() }
    }

    fn eps_factor(&self, clock: &PhaseClock) -> f64 {
        clock.eps1.powi(self.bideg.0 as i32) * clock.eps2.powi(self.bideg.1 as i32)
    }

    /// `W(t)` and `dW/dt`.
    pub fn unitary(&self, clock: &PhaseClock, t: f64) -> (Mat2, Mat2) {
        let tape = self.tape.get_or_init(|| Tape::compile(&[self.x.clone(), self.x.derivative(), self.freq.clone()]));
        let v = tape.eval(clock.reduced_time(t));
        let (x, xp, f) = (v[0], v[1], v[2]);
        let (e1, e2) = clock.e12(t);
        let d = e1 - e2;
        let eps = self.eps_factor(clock);
        let slow = clock.eps1 * clock.eps2;
        let (theta, theta_dot, m, m_dot) = match self.target.kind {
            Kind::A | Kind::B => {
                let m = self.rotated.matrix_at(e1, d);
                // d/dΛ A(Λ) = −B(Λ), d/dΛ B(Λ) = A(Λ)
                let dm = match self.rotated.kind {
                    Kind::A => GTerm::new(Kind::B, self.rotated.p).matrix_at(e1, d).scale_re(-f),
                    _ => GTerm::new(Kind::A, self.rotated.p).matrix_at(e1, d).scale_re(f),
                };
                (eps * x, eps * slow * xp, m, dm)
            }
            Kind::CosZ | Kind::SinZ => {
                let ph = self.rotated.p as f64 * d;
                let (tau, tau_dot) = match self.rotated.kind {
                    Kind::SinZ => (ph.sin(), f * ph.cos()),
                    _ => (ph.cos(), -f * ph.sin()),
                };
                (eps * x * tau, eps * (slow * xp * tau + x * tau_dot), Mat2::sigma_z(), Mat2::ZERO)
            }
        };
        let (st, ct) = theta.sin_cos();
        let i = c(0.0, 1.0);
        let w = Mat2::identity().scale_re(ct).add(&m.scale(i * st));
        let wd = Mat2::identity()
            .scale_re(-st)
            .add(&m.scale(i * ct))
            .scale_re(theta_dot)
            .add(&m_dot.scale(i * st));
        (w, wd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Applies the composed change of variables `W_n ⋯ W_1` (or its inverse) at time `t`.
pub fn apply_generators(psi: [C64; 2], t: f64, gens: &[Generator], clock: &PhaseClock, dir: Direction) -> [C64; 2] {
    match dir {
        Direction::Forward => gens.iter().fold(psi, |v, g| g.unitary(clock, t).0.apply(v)),
        Direction::Inverse => gens.iter().rev().fold(psi, |v, g| g.unitary(clock, t).0.adjoint().apply(v)),
    }
}

/// `i U̇ U* + U H U*` for the composed generator unitary, evaluated literally.
pub fn transformed_hamiltonian(h: &CompiledSeries, gens: &[Generator], clock: &PhaseClock, t: f64) -> Mat2 {
    let i = c(0.0, 1.0);
    gens.iter().fold(h.evaluate(clock, t), |acc, g| {
        let (w, wd) = g.unitary(clock, t);
        let wa = w.adjoint();
        wd.mul(&wa).scale(i).add(&w.mul(&acc).mul(&wa))
    })
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Coefficient of `θ^m` in `½(cos 2θ − 1)` (m even) or `½ sin 2θ` (m odd).
fn conj_coeff(m: u32) -> f64 {
    let n = m / 2;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    0.5 * sign * 2f64.powi(m as i32) / factorial(m)
}

/// Coefficients `a_m` of `y cos 2y − ½ sin 2y` (odd m) and `b_m` of `y sin 2y − sin² y` (even m).
fn self_coeff(m: u32) -> f64 {
    let n = m / 2;
    if m % 2 == 1 {
        let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * 4f64.powi(n as i32) * (1.0 / factorial(2 * n) - 1.0 / factorial(2 * n + 1))
    } else {
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        sign * 2f64.powi(2 * n as i32 - 1) * (1.0 / factorial(2 * n - 1) - 1.0 / factorial(2 * n))
    }
}

fn shift(d: Bideg, m: u32, by: Bideg) -> Bideg {
    (d.0 + m * by.0, d.1 + m * by.1)
}

/// Taylor tail `Σ_{m ≥ m0} (2Y)^m / m!` bounded by `(2Y)^{m0}/m0! · e^{2Y}`.
fn tail(y: f64, m0: u32, shift_factorial: u32) -> f64 {
    (2.0 * y).powi(m0 as i32) / factorial(m0 - shift_factorial) * (2.0 * y).exp()
}

/// El(c, Z): conjugates `h` by the generator and adds the derivative term, truncating at the caps.
pub fn eliminate(h: &OpSeries, g: &Generator) -> Result<OpSeries, AlgebraError> {
    if !g.target.is_oscillating() {
        return Err(AlgebraError::NotOscillating(g.target));
    }
    let mut out = h.clone();
    if out.remove(g.bideg, g.target).is_none() {
        return Err(AlgebraError::TargetNotFound { term: g.target, bideg: g.bideg });
    }
    let diag_gen = g.target.kind.is_diagonal();
    let m_op = if diag_gen { FOp::from_gterm(GTerm::SIGMA_Z) } else { FOp::from_gterm(g.rotated) };
    let tau = if diag_gen {
        Some(FOp::from_trig(match g.rotated.kind {
            Kind::SinZ => Trig::Sin(g.rotated.p),
            _ => Trig::Cos(g.rotated.p),
        }))
    } else {
        None
    };
    let y_norm = g.x.inf_norm();
    let mut xpow: Vec<SlowFn> = vec![SlowFn::one(), g.x.clone()];
    let mut taupow: Vec<FOp> = vec![FOp::identity()];
    let mut pending: BTreeMap<(Bideg, GTerm), Vec<SlowFn>> = BTreeMap::new();

    // Conjugation of every remaining term.
    for (d, term, coef) in h.iter() {
        if d == g.bideg && term == g.target {
            continue;
        }
        let fx = FOp::from_gterm(term);
        let diff = fx.sub(&m_op.mul(&fx).mul(&m_op));
        let comm = FOp::icomm(&m_op, &fx);
        if diff.project()?.is_empty() && comm.project()?.is_empty() {
            continue;
        }
        let mut m = 1u32;
        loop {
            let nd = shift(d, m, g.bideg);
            if !out.within_caps(nd) {
                out.record_drop(nd, coef.inf_norm() * tail(y_norm, m, 0));
                break;
            }
            while xpow.len() <= m as usize {
                let next = xpow.last().unwrap().mul(&g.x);
                xpow.push(next);
            }
            let base = if m.is_multiple_of(2) { &diff } else { &comm };
            let op = match &tau {
                Some(t) => {
                    while taupow.len() <= m as usize {
                        let next = taupow.last().unwrap().mul(t);
                        taupow.push(next);
                    }
                    taupow[m as usize].mul(base)
                }
                None => base.clone(),
            };
            let terms = op.project()?;
            if !terms.is_empty() {
                let scaled = coef.mul(&xpow[m as usize]);
                let cm = conj_coeff(m);
                for (k, t) in terms {
                    pending.entry((nd, t)).or_default().push(scaled.scale(cm * k));
                }
            }
            m += 1;
        }
    }

    // Derivative term −θ̇ Pr(Z): one order higher in both parameters.
    let jd = shift(g.bideg, 1, (1, 1));
    let xd = g.x.derivative();
    if out.within_caps(jd) {
        pending.entry((jd, g.rotated)).or_default().push(xd.neg());
    } else {
        out.record_drop(jd, xd.inf_norm());
    }

    // Target conjugated by its own generator, combined with the derivative of the
    // generator's fast phase: f·a(y)·Z + f·b(y)·σz with y = coef/f.
    if !diag_gen {
        let mut m = 2u32;
        loop {
            let nd = shift((0, 0), m, g.bideg);
            if !out.within_caps(nd) {
                out.record_drop(nd, g.freq.inf_norm() * tail(y_norm, m, 1));
                break;
            }
            while xpow.len() < m as usize {
                let next = xpow.last().unwrap().mul(&g.x);
                xpow.push(next);
            }
            // f·y^m = coef·y^{m−1}, y = sign·x.
            let sgn = if (m - 1).is_multiple_of(2) { 1.0 } else { g.sign };
            let val = g.coef.mul(&xpow[m as usize - 1]).scale(sgn * self_coeff(m));
            let term = if m % 2 == 1 { g.target } else { GTerm::SIGMA_Z };
            pending.entry((nd, term)).or_default().push(val);
            m += 1;
        }
    }

    for ((nd, term), parts) in pending {
        out.insert(nd, term, sum_balanced(&parts));
        if let Some(cf) = out.get(nd, term) {
            if negligible(cf) {
                let n = cf.inf_norm();
                out.remove(nd, term);
                out.record_drop(nd, n);
            }
        }
    }
    Ok(out)
}

/// Cheap screen followed by a sup-norm confirmation.
fn negligible(f: &SlowFn) -> bool {
    const PROBES: [f64; 7] = [0.0, 0.13, 0.29, 0.5, 0.61, 0.83, 1.0];
    PROBES.iter().all(|&s| f.eval_unchecked(s).abs() < PRUNE_TOL) && f.inf_norm() < PRUNE_TOL
}

/// Output of the cleaning algorithm.
#[derive(Debug, Clone)]
pub struct CleanResult {
    pub series: OpSeries,
    pub generators: Vec<Generator>,
    pub n0: u32,
}

/// Removes every oscillating term at bidegrees `(p, q)`, `q ∈ {0, 1}`, `1 ≤ p ≤ N0`,
/// with default caps `(N0 + 1, 2)`.
pub fn cleaning_algorithm(h0: &OpSeries, spec: &PulseSpec, n0: u32) -> Result<CleanResult, AlgebraError> {
    cleaning_algorithm_with_caps(h0, spec, n0, (n0 + 1, 2))
}

pub fn cleaning_algorithm_with_caps(
    h0: &OpSeries,
    spec: &PulseSpec,
    n0: u32,
    caps: Bideg,
) -> Result<CleanResult, AlgebraError> {
    let fs = FrequencySet::new(spec, 0);
    let mut certified: HashMap<(bool, i32), (SlowFn, f64)> = HashMap::new();
    let mut h = h0.clone();
    h.set_caps(caps);
    let mut gens = Vec::new();
    for q in 0..=1u32 {
        for p in 1..=n0 {
            loop {
                let next = h.at((p, q)).find(|(g, _)| g.is_oscillating()).map(|(g, c)| (g, c.clone()));
                let Some((target, coef)) = next else { break };
                let key = (target.kind.is_diagonal(), target.p);
                let (freq, bound) = match certified.get(&key) {
                    Some(v) => v.clone(),
                    None => {
                        let f = if key.0 { fs.phi_of(target.p) } else { fs.lambda_of(target.p) };
                        let b = certify_nonvanishing(&f)
                            .map_err(|source| AlgebraError::Frequency { term: target, source })?;
                        certified.insert(key, (f.clone(), b));
                        (f, b)
                    }
                };
                let g = Generator::new((p, q), coef, target, freq, bound);
                h = eliminate(&h, &g)?;
                gens.push(g);
                if gens.len() > MAX_ELIMINATIONS {
                    return Err(AlgebraError::CapOverflow(MAX_ELIMINATIONS));
                }
            }
        }
    }
    Ok(CleanResult { series: h, generators: gens, n0 })
}

/// The truncated non-oscillating dynamics `Σ ε^{(j,k)} (h1 A(E1) + h2 B(E1) + h3 σz)`.
#[derive(Debug, Clone)]
pub struct EffectiveHamiltonian {
    pub n0: u32,
    pub h1: BTreeMap<Bideg, SlowFn>,
    pub h2: BTreeMap<Bideg, SlowFn>,
    pub h3: BTreeMap<Bideg, SlowFn>,
    /// Sup-norm of everything left out, per ε-monomial (including truncation drops).
    pub discarded: BTreeMap<Bideg, f64>,
}

impl EffectiveHamiltonian {
    /// First-order RWA: `ε1 u A(E1)`.
    pub fn first_order(spec: &PulseSpec) -> Self {
        let mut h1 = BTreeMap::new();
        h1.insert((1, 0), spec.u.clone());
        EffectiveHamiltonian { n0: 1, h1, h2: BTreeMap::new(), h3: BTreeMap::new(), discarded: BTreeMap::new() }
    }

    pub fn to_series(&self) -> OpSeries {
        let mut s = OpSeries::new((u32::MAX, u32::MAX));
        for (map, g) in [(&self.h1, GTerm::new(Kind::A, 0)), (&self.h2, GTerm::new(Kind::B, 0)), (&self.h3, GTerm::SIGMA_Z)] {
            for (&d, f) in map {
                s.insert(d, g, f.clone());
            }
        }
        s
    }

    pub fn discarded_bound(&self, eps1: f64, eps2: f64) -> f64 {
        self.discarded.iter().map(|(&(j, k), m)| eps1.powi(j as i32) * eps2.powi(k as i32) * m).sum()
    }

    /// `Σ ε1^j ε2^k h(s)` for one of the three maps.
    pub fn weighted(map: &BTreeMap<Bideg, SlowFn>, eps1: f64, eps2: f64) -> SlowFn {
        let parts: Vec<SlowFn> =
            map.iter().map(|(&(j, k), f)| f.scale(eps1.powi(j as i32) * eps2.powi(k as i32))).collect();
        sum_balanced(&parts)
    }
}

/// Keeps the non-oscillating terms with `q ≤ 1` and ε1-degree `≤ N0`.
pub fn extract_hrwa(h: &OpSeries, n0: u32) -> EffectiveHamiltonian {
    let mut eff = EffectiveHamiltonian {
        n0,
        h1: BTreeMap::new(),
        h2: BTreeMap::new(),
        h3: BTreeMap::new(),
        discarded: h.dropped().clone(),
    };
    for (d, g, f) in h.iter() {
        let keep = d.1 <= 1 && d.0 <= n0;
        let slot = match (g.kind, g.p) {
            (Kind::A, 0) if keep => Some(&mut eff.h1),
            (Kind::B, 0) if keep => Some(&mut eff.h2),
            (Kind::CosZ, 0) if keep => Some(&mut eff.h3),
            _ => None,
        };
        match slot {
            Some(map) => {
                map.insert(d, f.clone());
            }
            None => *eff.discarded.entry(d).or_default() += f.inf_norm(),
        }
    }
    eff
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_interaction_hamiltonian;

    #[test]
    fn self_coefficients_match_series() {
        // y cos 2y − ½ sin 2y and y sin 2y − sin² y summed against closed forms.
        let y: f64 = 0.3;
        let a: f64 = (1..30).filter(|m| m % 2 == 1).map(|m| self_coeff(m) * y.powi(m as i32)).sum();
        let b: f64 = (1..30).filter(|m| m % 2 == 0).map(|m| self_coeff(m) * y.powi(m as i32)).sum();
        assert!((a - (y * (2.0 * y).cos() - 0.5 * (2.0 * y).sin())).abs() < 1e-14);
        assert!((b - (y * (2.0 * y).sin() - y.sin().powi(2))).abs() < 1e-14);
        assert_eq!(self_coeff(1), 0.0);
        assert!((self_coeff(3) + 4.0 / 3.0).abs() < 1e-15);
        assert!((self_coeff(2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn conjugation_coefficients_match_series() {
        let th: f64 = 0.4;
        let even: f64 = (2..16).step_by(2).map(|m| conj_coeff(m) * th.powi(m as i32)).sum();
        let odd: f64 = (1..16).step_by(2).map(|m| conj_coeff(m) * th.powi(m as i32)).sum();
        assert!((even - 0.5 * ((2.0 * th).cos() - 1.0)).abs() < 1e-14);
        assert!((odd - 0.5 * (2.0 * th).sin()).abs() < 1e-14);
    }

    #[test]
    fn first_order_elimination_keeps_resonant_term() {
        let spec = PulseSpec::reference(0.2, 0.1, 0.0);
        let h = build_interaction_hamiltonian(&spec);
        let r = cleaning_algorithm(&h, &spec, 1).unwrap();
        assert_eq!(r.generators.len(), 1);
        assert_eq!(r.generators[0].target, GTerm::new(Kind::A, -1));
        let lead = r.series.get((1, 0), GTerm::new(Kind::A, 0)).unwrap();
        assert!(lead.ptr_eq(&spec.u));
        assert!(r.series.bidegrees().all(|d| d == (1, 0) || d >= (2, 0)));
        let eff = extract_hrwa(&r.series, 1);
        assert_eq!(eff.h1.len(), 1);
        assert!(eff.h2.is_empty() && eff.h3.is_empty());
    }

    #[test]
    fn pure_target_leaves_only_higher_orders() {
        let spec = PulseSpec::reference(0.2, 0.1, 0.0);
        let fs = spec.frequencies();
        let f = fs.lambda_of(2);
        let b = certify_nonvanishing(&f).unwrap();
        let mut h = OpSeries::new((4, 2));
        let z = GTerm::new(Kind::B, 2);
        h.insert((1, 0), z, spec.u.clone());
        let g = Generator::new((1, 0), spec.u.clone(), z, f, b);
        let out = eliminate(&h, &g).unwrap();
        assert!(out.at((1, 0)).next().is_none());
        assert!(out.bidegrees().all(|d| d >= (2, 0)));
    }

    #[test]
    fn missing_target_is_an_error() {
        let spec = PulseSpec::reference(0.2, 0.1, 0.0);
        let h = build_interaction_hamiltonian(&spec);
        let f = spec.frequencies().lambda_of(3);
        let b = certify_nonvanishing(&f).unwrap();
        let g = Generator::new((1, 0), spec.u.clone(), GTerm::new(Kind::A, 3), f, b);
        assert!(matches!(eliminate(&h, &g), Err(AlgebraError::TargetNotFound { .. })));
    }
}

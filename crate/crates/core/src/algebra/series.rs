use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{GTerm, Kind};
use crate::linalg::Mat2;
use crate::pulse::{PhaseClock, PulseSpec};
use crate::slowfn::{SlowFn, Tape};

/// Powers `(j, k)` of `(ε1, ε2)`.
pub type Bideg = (u32, u32);

/// A Hamiltonian `Σ ε1^j ε2^k c(s) Z` with truncation caps and a tally of discarded mass.
#[derive(Debug, Clone)]
pub struct OpSeries {
    terms: BTreeMap<Bideg, BTreeMap<GTerm, SlowFn>>,
    caps: Bideg,
    dropped: BTreeMap<Bideg, f64>,
}

impl OpSeries {
    pub fn new(caps: Bideg) -> Self {
        OpSeries { terms: BTreeMap::new(), caps, dropped: BTreeMap::new() }
    }

    pub fn caps(&self) -> Bideg {
        self.caps
    }

    pub fn set_caps(&mut self, caps: Bideg) {
        self.caps = caps;
    }

    pub fn within_caps(&self, d: Bideg) -> bool {
        d.0 <= self.caps.0 && d.1 <= self.caps.1
    }

    /// Adds `coef · term` at bidegree `d`, merging with any existing coefficient.
    pub fn insert(&mut self, d: Bideg, term: GTerm, coef: SlowFn) {
        if coef.is_zero() {
            return;
        }
        let slot = self.terms.entry(d).or_default();
        let merged = match slot.remove(&term) {
            Some(old) => old.add(&coef),
            None => coef,
        };
        if !merged.is_zero() {
            slot.insert(term, merged);
        }
        if slot.is_empty() {
            self.terms.remove(&d);
        }
    }

    pub fn get(&self, d: Bideg, term: GTerm) -> Option<&SlowFn> {
        self.terms.get(&d).and_then(|m| m.get(&term))
    }

    pub fn remove(&mut self, d: Bideg, term: GTerm) -> Option<SlowFn> {
        let slot = self.terms.get_mut(&d)?;
        let out = slot.remove(&term);
        if slot.is_empty() {
            self.terms.remove(&d);
        }
        out
    }

    pub fn at(&self, d: Bideg) -> impl Iterator<Item = (GTerm, &SlowFn)> {
        self.terms.get(&d).into_iter().flat_map(|m| m.iter().map(|(g, c)| (*g, c)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Bideg, GTerm, &SlowFn)> {
        self.terms.iter().flat_map(|(d, m)| m.iter().map(move |(g, c)| (*d, *g, c)))
    }

    pub fn bidegrees(&self) -> impl Iterator<Item = Bideg> + '_ {
        self.terms.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.terms.values().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn record_drop(&mut self, d: Bideg, mass: f64) {
        *self.dropped.entry(d).or_default() += mass;
    }

    /// Discarded sup-norm mass per ε-monomial.
    pub fn dropped(&self) -> &BTreeMap<Bideg, f64> {
        &self.dropped
    }

    /// Unweighted sum of discarded masses (a bound valid for any ε1, ε2 ≤ 1).
    pub fn dropped_mass(&self) -> f64 {
        self.dropped.values().sum()
    }

    /// Operator-norm bound on the truncation error at the given small parameters.
    pub fn dropped_bound(&self, eps1: f64, eps2: f64) -> f64 {
        self.dropped.iter().map(|(&(j, k), m)| eps1.powi(j as i32) * eps2.powi(k as i32) * m).sum()
    }

    /// One line per term, `(j,k) kind p : expression`, in canonical order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (d, g, c) in self.iter() {
            let _ = writeln!(out, "({},{}) {} {} : {}", d.0, d.1, g.kind.name(), g.p, c);
        }
        out
    }

    pub fn compile(&self, eps1: f64, eps2: f64) -> CompiledSeries {
        let mut fns = Vec::new();
        let mut entries = Vec::new();
        for (d, g, c) in self.iter() {
            fns.push(c.clone());
            entries.push((eps1.powi(d.0 as i32) * eps2.powi(d.1 as i32), g));
        }
        CompiledSeries { tape: Tape::compile(&fns), entries }
    }
}

/// A series with its coefficients compiled to one tape, for repeated evaluation.
#[derive(Debug, Clone)]
pub struct CompiledSeries {
    tape: Tape,
    entries: Vec<(f64, GTerm)>,
}

impl CompiledSeries {
    pub fn evaluate(&self, clock: &PhaseClock, t: f64) -> Mat2 {
        let (e1, e2) = clock.e12(t);
        let vals = self.tape.eval(clock.reduced_time(t));
        let d = e1 - e2;
        // Accumulate the off-diagonal entry and σz weight directly.
        let mut off = crate::linalg::c(0.0, 0.0);
        let mut z = 0.0;
        for ((w, g), v) in self.entries.iter().zip(vals) {
            let k = w * v;
            let p = g.p as f64;
            match g.kind {
                Kind::A => off += crate::linalg::cis(e1 + p * d) * k,
                Kind::B => off += crate::linalg::cis(e1 + p * d) * crate::linalg::c(0.0, -k),
                Kind::CosZ => z += k * (p * d).cos(),
                Kind::SinZ => z += k * (p * d).sin(),
            }
        }
        Mat2([[crate::linalg::c(z, 0.0), off], [off.conj(), crate::linalg::c(-z, 0.0)]])
    }
}

/// `H_I = ε1 u A(Λ0) + ε1 u A(Λ−1)`.
pub fn build_interaction_hamiltonian(spec: &PulseSpec) -> OpSeries {
    let mut h = OpSeries::new((2, 2));
    h.insert((1, 0), GTerm::new(Kind::A, 0), spec.u.clone());
    h.insert((1, 0), GTerm::new(Kind::A, -1), spec.u.clone());
    h
}

/// Evaluates the series at lab time `t` for the small parameters of `spec`.
pub fn evaluate_series(h: &OpSeries, spec: &PulseSpec, t: f64) -> Mat2 {
    h.compile(spec.eps1, spec.eps2).evaluate(&spec.clock(), t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interaction_hamiltonian_shape() {
        let spec = PulseSpec::reference(0.1, 0.1, 0.0);
        let h = build_interaction_hamiltonian(&spec);
        assert_eq!(h.len(), 2);
        assert_eq!(h.bidegrees().collect::<Vec<_>>(), vec![(1, 0)]);
        assert_eq!(evaluate_series(&h, &spec, 0.0), Mat2::ZERO);
        let m = evaluate_series(&h, &spec, 37.0);
        assert!(m.hermiticity_defect() < 1e-15);
        assert_eq!(m.0[0][0].norm() + m.0[1][1].norm(), 0.0);
    }

    #[test]
    fn sigma_z_evaluates_to_diag() {
        let spec = PulseSpec::reference(0.1, 0.1, 0.0);
        let mut h = OpSeries::new((2, 2));
        h.insert((0, 0), GTerm::SIGMA_Z, SlowFn::one());
        assert_eq!(evaluate_series(&h, &spec, 12.0), Mat2::sigma_z());
    }

    #[test]
    fn a0_term_at_half_time() {
        let spec = PulseSpec::reference(0.1, 0.1, 0.2);
        let mut h = OpSeries::new((2, 2));
        h.insert((0, 0), GTerm::new(Kind::A, 0), spec.u.clone());
        let t = 0.5 / (spec.eps1 * spec.eps2);
        let (e1, _) = spec.clock().e12(t);
        let m = evaluate_series(&h, &spec, t);
        let want = crate::linalg::cis(e1) * spec.u.eval(0.5).unwrap();
        assert!((m.0[0][1] - want).norm() < 1e-12);
        assert!(m.hermiticity_defect() < 1e-15);
    }

    #[test]
    fn merge_and_cancel() {
        let mut h = OpSeries::new((3, 2));
        let g = GTerm::new(Kind::B, 2);
        h.insert((2, 1), g, SlowFn::constant(1.5));
        h.insert((2, 1), g, SlowFn::constant(-1.5));
        assert!(h.is_empty());
        h.insert((2, 1), g, SlowFn::var());
        assert_eq!(h.dump(), "(2,1) B 2 : s\n");
    }

    #[test]
    fn dropped_bound_weights_monomials() {
        let mut h = OpSeries::new((1, 1));
        h.record_drop((2, 1), 3.0);
        h.record_drop((0, 2), 1.0);
        assert_eq!(h.dropped_mass(), 4.0);
        assert!((h.dropped_bound(0.5, 0.1) - (3.0 * 0.25 * 0.1 + 0.01)).abs() < 1e-15);
    }
}

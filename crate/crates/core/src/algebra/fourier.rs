//! Fourier–Pauli representation used to derive the span-G product rules.
//!
//! Every element of G is a finite sum of `coef · e^{i(m E1 + n D)} · P` with
//! `D = E1 − E2` and `P ∈ {I, σz, σ+, σ−}`; in these coordinates products reduce
//! to integer index arithmetic and the 2×2 multiplication table of `I, σz, σ±`.

use std::collections::BTreeMap;

use super::{AlgebraError, GTerm, Kind, Trig};
use crate::linalg::{c, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Basis {
    Id,
    Z,
    Plus,
    Minus,
}

/// Product table of `{I, σz, σ+, σ−}`: `a·b = Σ coef·basis`.
fn basis_mul(a: Basis, b: Basis) -> &'static [(f64, Basis)] {
    use Basis::*;
    match (a, b) {
        (Id, Id) => &[(1.0, Id)],
        (Id, Z) | (Z, Id) => &[(1.0, Z)],
        (Id, Plus) | (Plus, Id) => &[(1.0, Plus)],
        (Id, Minus) | (Minus, Id) => &[(1.0, Minus)],
        (Z, Z) => &[(1.0, Id)],
        (Z, Plus) => &[(1.0, Plus)],
        (Plus, Z) => &[(-1.0, Plus)],
        (Z, Minus) => &[(-1.0, Minus)],
        (Minus, Z) => &[(1.0, Minus)],
        (Plus, Plus) | (Minus, Minus) => &[],
        (Plus, Minus) => &[(0.5, Id), (0.5, Z)],
        (Minus, Plus) => &[(0.5, Id), (-0.5, Z)],
    }
}

/// Key: basis matrix and the lattice exponent `(m, n)` of `e^{i(m E1 + n D)}`.
type Key = (Basis, i32, i32);

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct FOp(BTreeMap<Key, C64>);

impl FOp {
    fn push(&mut self, key: Key, v: C64) {
        let e = self.0.entry(key).or_insert(C64::new(0.0, 0.0));
        *e += v;
        if e.norm() == 0.0 {
            self.0.remove(&key);
        }
    }

    pub(crate) fn identity() -> Self {
        let mut f = FOp::default();
        f.push((Basis::Id, 0, 0), c(1.0, 0.0));
        f
    }

    pub(crate) fn from_gterm(g: GTerm) -> Self {
        let mut f = FOp::default();
        let p = g.p;
        match g.kind {
            // A(Λ) = e^{iΛ}σ+ + e^{−iΛ}σ−, Λ_p = E1 + pD.
            Kind::A => {
                f.push((Basis::Plus, 1, p), c(1.0, 0.0));
                f.push((Basis::Minus, -1, -p), c(1.0, 0.0));
            }
            // B(Λ) = −i e^{iΛ}σ+ + i e^{−iΛ}σ−.
            Kind::B => {
                f.push((Basis::Plus, 1, p), c(0.0, -1.0));
                f.push((Basis::Minus, -1, -p), c(0.0, 1.0));
            }
            Kind::CosZ | Kind::SinZ => {
                let trig = if g.kind == Kind::CosZ { Trig::Cos(p) } else { Trig::Sin(p) };
                for (&(_, m, n), &v) in &Self::from_trig(trig).0 {
                    f.push((Basis::Z, m, n), v);
                }
            }
        }
        f
    }

    /// Scalar trigonometric factor `cos(Φ_q)` or `sin(Φ_q)`, Φ_q = qD.
    pub(crate) fn from_trig(t: Trig) -> Self {
        let mut f = FOp::default();
        match t {
            Trig::Cos(q) => {
                f.push((Basis::Id, 0, q), c(0.5, 0.0));
                f.push((Basis::Id, 0, -q), c(0.5, 0.0));
            }
            Trig::Sin(q) => {
                f.push((Basis::Id, 0, q), c(0.0, -0.5));
                f.push((Basis::Id, 0, -q), c(0.0, 0.5));
            }
        }
        f
    }

    pub(crate) fn mul(&self, o: &FOp) -> FOp {
        let mut out = FOp::default();
        for (&(a, m1, n1), &x) in &self.0 {
            for (&(b, m2, n2), &y) in &o.0 {
                for &(k, basis) in basis_mul(a, b) {
                    out.push((basis, m1 + m2, n1 + n2), x * y * k);
                }
            }
        }
        out
    }

    pub(crate) fn sub(&self, o: &FOp) -> FOp {
        let mut out = self.clone();
        for (&key, &v) in &o.0 {
            out.push(key, -v);
        }
        out
    }

    pub(crate) fn scale(&self, k: C64) -> FOp {
        FOp(self.0.iter().map(|(&key, &v)| (key, v * k)).collect())
    }

    /// `i[a, b]`.
    pub(crate) fn icomm(a: &FOp, b: &FOp) -> FOp {
        a.mul(b).sub(&b.mul(a)).scale(c(0.0, 1.0))
    }

    /// Reads the operator back as a real combination of canonical G terms.
    pub(crate) fn project(&self) -> Result<Vec<(f64, GTerm)>, AlgebraError> {
        let tol = 1e-13;
        let mut out: BTreeMap<GTerm, f64> = BTreeMap::new();
        let get = |k: Key| self.0.get(&k).copied().unwrap_or(C64::new(0.0, 0.0));
        let bad = |what: &str| AlgebraError::Unsupported(format!("{what} in {:?}", self.0));
        for (&(basis, m, n), &v) in &self.0 {
            if v.norm() < tol {
                continue;
            }
            match basis {
                Basis::Id => return Err(bad("identity component")),
                Basis::Plus => {
                    if m != 1 || (get((Basis::Minus, -1, -n)) - v.conj()).norm() > tol {
                        return Err(bad("non-Hermitian raising part"));
                    }
                    // z e^{iΛ}σ+ + h.c. = Re z · A(Λ) − Im z · B(Λ)
                    *out.entry(GTerm::new(Kind::A, n)).or_default() += v.re;
                    *out.entry(GTerm::new(Kind::B, n)).or_default() -= v.im;
                }
                Basis::Minus => {
                    if m != -1 || (get((Basis::Plus, 1, -n)) - v.conj()).norm() > tol {
                        return Err(bad("non-Hermitian lowering part"));
                    }
                }
                Basis::Z => {
                    if m != 0 || (get((Basis::Z, 0, -n)) - v.conj()).norm() > tol {
                        return Err(bad("non-Hermitian diagonal part"));
                    }
                    if n == 0 {
                        *out.entry(GTerm::new(Kind::CosZ, 0)).or_default() += v.re;
                    } else if n > 0 {
                        // w e^{inD} + w̄ e^{−inD} = 2Re w cos(nD) − 2Im w sin(nD)
                        *out.entry(GTerm::new(Kind::CosZ, n)).or_default() += 2.0 * v.re;
                        *out.entry(GTerm::new(Kind::SinZ, n)).or_default() -= 2.0 * v.im;
                    }
                }
            }
        }
        Ok(out.into_iter().filter(|(_, v)| v.abs() > tol).map(|(g, v)| (v, g)).collect())
    }
}

//! The operator family G, its product rules, Hamiltonian series and the
//! elimination/cleaning machinery producing higher-order effective Hamiltonians.

mod clean;
mod fourier;
mod series;

use std::cmp::Ordering;
use std::fmt;

pub use clean::{
    apply_generators, cleaning_algorithm, cleaning_algorithm_with_caps, eliminate, extract_hrwa,
    transformed_hamiltonian, CleanResult, Direction, EffectiveHamiltonian, Generator,
};
pub use series::{build_interaction_hamiltonian, evaluate_series, Bideg, CompiledSeries, OpSeries};

use crate::linalg::{c, cis, Mat2};
use crate::slowfn::SlowFnError;
use fourier::FOp;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlgebraError {
    #[error("unsupported product: {0}")]
    Unsupported(String),
    #[error("frequency of {term} is not certified nonvanishing: {source}")]
    Frequency { term: GTerm, source: SlowFnError },
    #[error("target {term} not present at bidegree {bideg:?}")]
    TargetNotFound { term: GTerm, bideg: Bideg },
    #[error("elimination target {0} is not oscillating")]
    NotOscillating(GTerm),
    #[error("cleaning exceeded {0} eliminations; series caps too large for this order")]
    CapOverflow(usize),
}

/// Kinds of G elements, in canonical elimination order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    A,
    B,
    CosZ,
    SinZ,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::A => "A",
            Kind::B => "B",
            Kind::CosZ => "CosZ",
            Kind::SinZ => "SinZ",
        }
    }

    pub fn is_diagonal(self) -> bool {
        matches!(self, Kind::CosZ | Kind::SinZ)
    }
}

/// `A(Λ_p)`, `B(Λ_p)`, `cos(Φ_p)σz` or `sin(Φ_p)σz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GTerm {
    pub kind: Kind,
    pub p: i32,
}

impl GTerm {
    pub const fn new(kind: Kind, p: i32) -> Self {
        GTerm { kind, p }
    }

    pub const SIGMA_Z: GTerm = GTerm::new(Kind::CosZ, 0);

    /// Canonical form of a possibly non-canonical `(kind, p)`; `None` when the term is identically zero.
    pub fn canonical(kind: Kind, p: i32) -> Option<(f64, GTerm)> {
        match kind {
            Kind::CosZ => Some((1.0, GTerm::new(kind, p.abs()))),
            Kind::SinZ if p == 0 => None,
            Kind::SinZ => Some((p.signum() as f64, GTerm::new(kind, p.abs()))),
            _ => Some((1.0, GTerm::new(kind, p))),
        }
    }

    pub fn is_oscillating(&self) -> bool {
        self.p != 0
    }

    /// The matrix at `E1` and `D = E1 − E2`.
    pub fn matrix_at(&self, e1: f64, d: f64) -> Mat2 {
        let p = self.p as f64;
        match self.kind {
            Kind::A => {
                let z = cis(e1 + p * d);
                Mat2([[c(0.0, 0.0), z], [z.conj(), c(0.0, 0.0)]])
            }
            Kind::B => {
                let z = cis(e1 + p * d) * c(0.0, -1.0);
                Mat2([[c(0.0, 0.0), z], [z.conj(), c(0.0, 0.0)]])
            }
            Kind::CosZ => Mat2::sigma_z().scale_re((p * d).cos()),
            Kind::SinZ => Mat2::sigma_z().scale_re((p * d).sin()),
        }
    }
}

impl Ord for GTerm {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.kind, self.p.unsigned_abs(), self.p < 0).cmp(&(o.kind, o.p.unsigned_abs(), o.p < 0))
    }
}

impl PartialOrd for GTerm {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for GTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind.name(), self.p)
    }
}

/// `Pr`: A→B, B→−A, CosZ→SinZ, SinZ→−CosZ at the same index.
pub fn pr(z: GTerm) -> (f64, GTerm) {
    let (sign, kind) = match z.kind {
        Kind::A => (1.0, Kind::B),
        Kind::B => (-1.0, Kind::A),
        Kind::CosZ => (1.0, Kind::SinZ),
        Kind::SinZ => (-1.0, Kind::CosZ),
    };
    (sign, GTerm::new(kind, z.p))
}

/// Scalar multiplier `cos(Φ_q)` or `sin(Φ_q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Cos(i32),
    Sin(i32),
}

impl Trig {
    pub fn value(&self, d: f64) -> f64 {
        match *self {
            Trig::Cos(q) => (q as f64 * d).cos(),
            Trig::Sin(q) => (q as f64 * d).sin(),
        }
    }
}

/// Products that stay inside Span G.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Product {
    /// `trig · z`
    TrigMul(Trig, GTerm),
    /// `i[x, y]`
    Commutator(GTerm, GTerm),
    /// `x y x`
    Conjugate(GTerm, GTerm),
}

/// One summand of an expanded product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewriteTerm {
    pub coef: f64,
    pub term: GTerm,
}

/// Expands a product of G elements as a real combination of canonical G terms.
pub fn rewrite_product(op: &Product) -> Result<Vec<RewriteTerm>, AlgebraError> {
    let f = match *op {
        Product::TrigMul(t, z) => FOp::from_trig(t).mul(&FOp::from_gterm(z)),
        Product::Commutator(x, y) => FOp::icomm(&FOp::from_gterm(x), &FOp::from_gterm(y)),
        Product::Conjugate(x, y) => {
            let fx = FOp::from_gterm(x);
            fx.mul(&FOp::from_gterm(y)).mul(&fx)
        }
    };
    Ok(f.project()?.into_iter().map(|(coef, term)| RewriteTerm { coef, term }).collect())
}

/// Literal matrix of a product, for checking [`rewrite_product`].
pub fn product_matrix(op: &Product, e1: f64, d: f64) -> Mat2 {
    let m = |g: GTerm| g.matrix_at(e1, d);
    match *op {
        Product::TrigMul(t, z) => m(z).scale_re(t.value(d)),
        Product::Commutator(x, y) => m(x).commutator(&m(y)).scale(c(0.0, 1.0)),
        Product::Conjugate(x, y) => m(x).mul(&m(y)).mul(&m(x)),
    }
}

/// Evaluates a list of rewrite terms at `(E1, D)`.
pub fn combination_matrix(terms: &[RewriteTerm], e1: f64, d: f64) -> Mat2 {
    terms.iter().fold(Mat2::ZERO, |acc, t| acc.add(&t.term.matrix_at(e1, d).scale_re(t.coef)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(kind: Kind, p: i32) -> GTerm {
        GTerm::new(kind, p)
    }

    fn expand(op: Product) -> Vec<(f64, GTerm)> {
        rewrite_product(&op).unwrap().into_iter().map(|t| (t.coef, t.term)).collect()
    }

    #[test]
    fn pr_table() {
        assert_eq!(pr(g(Kind::A, 2)), (1.0, g(Kind::B, 2)));
        assert_eq!(pr(g(Kind::SinZ, 1)), (-1.0, g(Kind::CosZ, 1)));
        for k in [Kind::A, Kind::B, Kind::CosZ, Kind::SinZ] {
            let (s1, z1) = pr(g(k, 3));
            let (s2, z2) = pr(z1);
            assert_eq!((s1 * s2, z2), (-1.0, g(k, 3)));
        }
    }

    #[test]
    fn canonical_folding() {
        assert_eq!(GTerm::canonical(Kind::SinZ, -2), Some((-1.0, g(Kind::SinZ, 2))));
        assert_eq!(GTerm::canonical(Kind::CosZ, -2), Some((1.0, g(Kind::CosZ, 2))));
        assert_eq!(GTerm::canonical(Kind::SinZ, 0), None);
        assert_eq!(GTerm::canonical(Kind::A, -2), Some((1.0, g(Kind::A, -2))));
    }

    #[test]
    fn canonical_order() {
        let mut v = vec![g(Kind::B, 1), g(Kind::A, -1), g(Kind::A, 1), g(Kind::A, 0), g(Kind::CosZ, 1)];
        v.sort();
        assert_eq!(v, vec![g(Kind::A, 0), g(Kind::A, 1), g(Kind::A, -1), g(Kind::B, 1), g(Kind::CosZ, 1)]);
    }

    #[test]
    fn commutator_of_neighbouring_a_terms() {
        assert_eq!(expand(Product::Commutator(g(Kind::A, 1), g(Kind::A, 0))), vec![(-2.0, g(Kind::SinZ, 1))]);
    }

    #[test]
    fn trig_mul_by_phi_zero_is_identity() {
        for z in [g(Kind::A, 3), g(Kind::B, -1), g(Kind::CosZ, 2), g(Kind::SinZ, 1)] {
            assert_eq!(expand(Product::TrigMul(Trig::Cos(0), z)), vec![(1.0, z)]);
        }
    }

    #[test]
    fn double_cos_a_shifts_index() {
        let got = expand(Product::TrigMul(Trig::Cos(2), g(Kind::A, 1)));
        assert_eq!(got, vec![(0.5, g(Kind::A, -1)), (0.5, g(Kind::A, 3))]);
    }

    #[test]
    fn a_conjugation_reflects_phase() {
        assert_eq!(expand(Product::Conjugate(g(Kind::A, 2), g(Kind::A, 1))), vec![(1.0, g(Kind::A, 3))]);
    }

    #[test]
    fn sigma_z_conjugation_negates() {
        assert_eq!(expand(Product::Conjugate(GTerm::SIGMA_Z, g(Kind::A, 4))), vec![(-1.0, g(Kind::A, 4))]);
        assert_eq!(expand(Product::Conjugate(GTerm::SIGMA_Z, g(Kind::B, -1))), vec![(-1.0, g(Kind::B, -1))]);
    }

    #[test]
    fn sin_z_zero_product_vanishes() {
        assert!(expand(Product::Commutator(g(Kind::CosZ, 1), g(Kind::SinZ, 2))).is_empty());
    }

    #[test]
    fn matrices_are_hermitian() {
        for k in [Kind::A, Kind::B, Kind::CosZ, Kind::SinZ] {
            assert_eq!(g(k, -3).matrix_at(0.4, 1.7).hermiticity_defect(), 0.0);
        }
        let a = g(Kind::A, 0).matrix_at(0.4, 1.7);
        assert!(a.mul(&a).sub(&Mat2::identity()).frobenius() < 1e-15);
    }
}

//! Small dense 2×2 complex matrices and Pauli-basis helpers.

use num_complex::Complex64;

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(phase: f64) -> C64 {
    C64::from_polar(1.0, phase)
}

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([[C64::new(0.0, 0.0); 2]; 2]);

    pub fn identity() -> Self {
        Self::diag(C64::new(1.0, 0.0), C64::new(1.0, 0.0))
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Mat2([[a, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), d]])
    }

    pub fn sigma_x() -> Self {
        Self::from_pauli(0.0, [1.0, 0.0, 0.0])
    }

    pub fn sigma_y() -> Self {
        Self::from_pauli(0.0, [0.0, 1.0, 0.0])
    }

    pub fn sigma_z() -> Self {
        Self::from_pauli(0.0, [0.0, 0.0, 1.0])
    }

    /// `b·I + a·σ`.
    pub fn from_pauli(b: f64, a: [f64; 3]) -> Self {
        Mat2([
            [c(b + a[2], 0.0), c(a[0], -a[1])],
            [c(a[0], a[1]), c(b - a[2], 0.0)],
        ])
    }

    /// Hermitian part in the Pauli basis: `(b, [ax, ay, az])`.
    pub fn to_pauli(&self) -> (f64, [f64; 3]) {
        let m = &self.0;
        let b = 0.5 * (m[0][0].re + m[1][1].re);
        let az = 0.5 * (m[0][0].re - m[1][1].re);
        let ax = 0.5 * (m[0][1].re + m[1][0].re);
        let ay = 0.5 * (m[1][0].im - m[0][1].im);
        (b, [ax, ay, az])
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        let mut r = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(r)
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        self.zip(o, |x, y| x + y)
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        self.zip(o, |x, y| x - y)
    }

    pub fn scale(&self, k: C64) -> Mat2 {
        self.map(|x| x * k)
    }

    pub fn scale_re(&self, k: f64) -> Mat2 {
        self.map(|x| x * k)
    }

    pub fn adjoint(&self) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn commutator(&self, o: &Mat2) -> Mat2 {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Spectral (operator 2-) norm.
    pub fn norm(&self) -> f64 {
        // Largest eigenvalue of the Gram matrix M M*, with the discriminant as a sum of squares.
        let [[a, b], [c, d]] = self.0;
        let p = a.norm_sqr() + b.norm_sqr();
        let q = c.norm_sqr() + d.norm_sqr();
        let off = a * c.conj() + b * d.conj();
        let disc = (p - q).hypot(2.0 * off.norm());
        ((p + q + disc) / 2.0).sqrt()
    }

    /// Largest entry-wise deviation from Hermiticity.
    pub fn hermiticity_defect(&self) -> f64 {
        self.sub(&self.adjoint()).0.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    fn map(&self, f: impl Fn(C64) -> C64) -> Mat2 {
        let m = &self.0;
        Mat2([[f(m[0][0]), f(m[0][1])], [f(m[1][0]), f(m[1][1])]])
    }

    fn zip(&self, o: &Mat2, f: impl Fn(C64, C64) -> C64) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [f(a[0][0], b[0][0]), f(a[0][1], b[0][1])],
            [f(a[1][0], b[1][0]), f(a[1][1], b[1][1])],
        ])
    }
}

/// `exp(-i h (b I + a·σ))` in closed form.
pub fn expm_pauli(h: f64, b: f64, a: [f64; 3]) -> Mat2 {
    let r = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    let x = h * r;
    let cosx = x.cos();
    // sin(x)/r * h, continuous at r = 0.
    let sinc = if x.abs() < 1e-8 { h * (1.0 - x * x / 6.0) } else { x.sin() / r };
    let phase = cis(-h * b);
    let m = Mat2([
        [c(cosx, -sinc * a[2]), c(-sinc * a[1], -sinc * a[0])],
        [c(sinc * a[1], -sinc * a[0]), c(cosx, sinc * a[2])],
    ]);
    m.scale(phase)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_roundtrip() {
        let m = Mat2::from_pauli(0.3, [1.0, -2.0, 0.5]);
        let (b, a) = m.to_pauli();
        assert!((b - 0.3).abs() < 1e-15);
        for (x, y) in a.iter().zip([1.0, -2.0, 0.5]) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(m.hermiticity_defect(), 0.0);
    }

    #[test]
    fn sigma_products() {
        let xy = Mat2::sigma_x().mul(&Mat2::sigma_y());
        let iz = Mat2::sigma_z().scale(I);
        assert!(xy.sub(&iz).frobenius() < 1e-15);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = Mat2::diag(c(3.0, 0.0), c(0.0, -4.0));
        assert!((m.norm() - 4.0).abs() < 1e-14);
        let n = Mat2([[c(1.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]]);
        assert!((n.norm() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn exponential_matches_series() {
        let (h, b, a) = (0.7, 0.2, [0.3, -0.4, 1.1]);
        let x = Mat2::from_pauli(b, a).scale(c(0.0, -h));
        // Taylor series to high order.
        let mut term = Mat2::identity();
        let mut sum = Mat2::identity();
        for k in 1..40 {
            term = term.mul(&x).scale_re(1.0 / k as f64);
            sum = sum.add(&term);
        }
        assert!(expm_pauli(h, b, a).sub(&sum).frobenius() < 1e-14);
        assert!(expm_pauli(h, 0.0, [0.0; 3]).sub(&Mat2::identity()).frobenius() < 1e-16);
    }
}

//! Spectral analysis of the slow Hamiltonian `H_slow(s) = cx σx + cy σy + cz σz`.

use std::io::Write;

use crate::algebra::EffectiveHamiltonian;
use crate::linalg::{c, Mat2};
use crate::propagate::slow_coefficients;
use crate::pulse::PulseSpec;
use crate::slowfn::{SlowFn, SlowFnError, Tape};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdiabaticError {
    #[error("spectral gap closes: {0}")]
    Gap(#[from] SlowFnError),
    #[error("gap vanishes at s = {0}")]
    GapAt(f64),
    #[error("adaptive quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    Quadrature { tol: f64, estimate: f64 },
}

/// Bloch coefficients of the slow Hamiltonian, at fixed (ε1, ε2, α).
#[derive(Debug, Clone)]
pub struct SlowHamiltonian {
    pub cx: SlowFn,
    pub cy: SlowFn,
    pub cz: SlowFn,
    tape: Tape,
}

/// Value and first two derivatives of the Bloch data at one reduced time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochJet {
    pub c: [f64; 3],
    pub c1: [f64; 3],
    pub omega: f64,
    pub omega1: f64,
    pub n: [f64; 3],
    pub n1: [f64; 3],
    pub n2: [f64; 3],
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

impl BlochJet {
    /// Operator norm of `P′`.
    pub fn dp_norm(&self) -> f64 {
        0.5 * norm3(self.n1)
    }

    pub fn d2p_norm(&self) -> f64 {
        0.5 * norm3(self.n2)
    }

    /// Operator norm of `H′`.
    pub fn dh_norm(&self) -> f64 {
        norm3(self.c1)
    }

    /// `2|P′|²/ω + |P″|/ω + |P′||H′|/(2ω²)`.
    pub fn integrand(&self) -> f64 {
        let w = self.omega;
        2.0 * self.dp_norm().powi(2) / w + self.d2p_norm() / w + self.dp_norm() * self.dh_norm() / (2.0 * w * w)
    }

    /// Polar angle of the Bloch direction from +z.
    pub fn theta(&self) -> f64 {
        self.n[2].clamp(-1.0, 1.0).acos()
    }
}

impl SlowHamiltonian {
    pub fn new(cx: SlowFn, cy: SlowFn, cz: SlowFn) -> Self {
        let fns: Vec<SlowFn> = [&cx, &cy, &cz]
            .iter()
            .flat_map(|f| [(*f).clone(), f.derivative(), f.nth_derivative(2)])
            .collect();
        let tape = Tape::compile(&fns);
        SlowHamiltonian { cx, cy, cz, tape }
    }

    /// First-order slow Hamiltonian `ε1 u σx + (α − Δ′/2) σz`.
    pub fn tilde(spec: &PulseSpec) -> Self {
        let cz = SlowFn::constant(spec.alpha).sub(&spec.delta.derivative().scale(0.5));
        Self::new(spec.u.scale(spec.eps1), SlowFn::zero(), cz)
    }

    pub fn matrix(&self, s: f64) -> Mat2 {
        let j = self.jet_raw(s);
        Mat2::from_pauli(0.0, j.0)
    }

    fn jet_raw(&self, s: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let v = self.tape.eval(s.clamp(0.0, 1.0));
        ([v[0], v[3], v[6]], [v[1], v[4], v[7]], [v[2], v[5], v[8]])
    }

    /// Bloch direction and its derivatives by the quotient rule.
    pub fn jet(&self, s: f64) -> Result<BlochJet, AdiabaticError> {
        let (cv, c1, c2) = self.jet_raw(s);
        let w = norm3(cv);
        if !(w > 0.0) {
            return Err(AdiabaticError::GapAt(s));
        }
        let n: [f64; 3] = cv.map(|x| x / w);
        let w1 = dot(n, c1);
        let n1: [f64; 3] = std::array::from_fn(|i| (c1[i] - n[i] * w1) / w);
        let w2 = dot(n1, c1) + dot(n, c2);
        let n2: [f64; 3] = std::array::from_fn(|i| (c2[i] - 2.0 * n1[i] * w1 - n[i] * w2) / w);
        Ok(BlochJet { c: cv, c1, omega: w, omega1: w1, n, n1, n2 })
    }
}

pub fn build_slow_hamiltonian(eff: &EffectiveHamiltonian, spec: &PulseSpec) -> SlowHamiltonian {
    let [cx, cy, cz] = slow_coefficients(eff, spec);
    SlowHamiltonian::new(cx, cy, cz)
}

/// `ω(s) = |c(s)|` with a certified positive lower bound.
pub fn gap(sh: &SlowHamiltonian) -> Result<SlowFn, AdiabaticError> {
    let sq = sh.cx.mul(&sh.cx).add(&sh.cy.mul(&sh.cy)).add(&sh.cz.mul(&sh.cz));
    Ok(sq.sqrt()?)
}

fn pmat(n: [f64; 3], scale: f64, with_identity: bool) -> Mat2 {
    Mat2::from_pauli(if with_identity { 0.5 } else { 0.0 }, n.map(|x| scale * x))
}

/// Projector on the negative eigenvalue: `(I − n·σ)/2`.
pub fn projector(sh: &SlowHamiltonian, s: f64) -> Result<Mat2, AdiabaticError> {
    Ok(pmat(sh.jet(s)?.n, -0.5, true))
}

pub fn projector_d1(sh: &SlowHamiltonian, s: f64) -> Result<Mat2, AdiabaticError> {
    Ok(pmat(sh.jet(s)?.n1, -0.5, false))
}

pub fn projector_d2(sh: &SlowHamiltonian, s: f64) -> Result<Mat2, AdiabaticError> {
    Ok(pmat(sh.jet(s)?.n2, -0.5, false))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointProjectors {
    pub p0: Mat2,
    pub p1: Mat2,
    /// `|P(0) − |e2⟩⟨e2||`: alignment with the initial state `(0, 1)`.
    pub dist_initial: f64,
    /// `|P(1) − |e1⟩⟨e1||`: alignment with the target `(1, 0)`.
    pub dist_target: f64,
}

pub fn endpoint_projectors(sh: &SlowHamiltonian) -> Result<EndpointProjectors, AdiabaticError> {
    let p0 = projector(sh, 0.0)?;
    let p1 = projector(sh, 1.0)?;
    let e2 = Mat2::diag(c(0.0, 0.0), c(1.0, 0.0));
    let e1 = Mat2::diag(c(1.0, 0.0), c(0.0, 0.0));
    Ok(EndpointProjectors { p0, p1, dist_initial: p0.sub(&e2).norm(), dist_target: p1.sub(&e1).norm() })
}

/// Adaptive Simpson over `[a, b]`, pre-split into `panels` pieces.
pub fn integrate<F>(f: F, a: f64, b: f64, tol: f64, panels: usize) -> Result<f64, AdiabaticError>
where
    F: Fn(f64) -> Result<f64, AdiabaticError>,
{
    struct Ctx<'a, F> {
        f: &'a F,
        failed: bool,
        worst: f64,
    }
    fn rec<F: Fn(f64) -> Result<f64, AdiabaticError>>(
        cx: &mut Ctx<'_, F>,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, AdiabaticError> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = ((cx.f)(lm)?, (cx.f)(rm)?);
        let h = b - a;
        let left = h / 12.0 * (fa + 4.0 * flm + fm);
        let right = h / 12.0 * (fm + 4.0 * frm + fb);
        let err = left + right - whole;
        if err.abs() <= 15.0 * tol {
            return Ok(left + right + err / 15.0);
        }
        if depth == 0 {
            cx.failed = true;
            cx.worst = cx.worst.max(err.abs());
            return Ok(left + right + err / 15.0);
        }
        Ok(rec(cx, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + rec(cx, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    let mut cx = Ctx { f: &f, failed: false, worst: 0.0 };
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let (f0, fm, f1) = (f(x0)?, f(0.5 * (x0 + x1))?, f(x1)?);
        let whole = h / 6.0 * (f0 + 4.0 * fm + f1);
        total += rec(&mut cx, x0, x1, f0, fm, f1, whole, tol / panels as f64, 40)?;
    }
    if cx.failed {
        return Err(AdiabaticError::Quadrature { tol, estimate: cx.worst });
    }
    Ok(total)
}

/// Absolute tolerance of the bound quadrature.
pub const QUAD_TOL: f64 = 1e-9;
const PANELS: usize = 64;

/// `ε1ε2 [ |P′(1)|/ω(1) + |P′(0)|/ω(0) + ∫ (2|P′|²/ω + |P″|/ω + |P′||H′|/(2ω²)) ds ]`.
pub fn adiabatic_bound(sh: &SlowHamiltonian, spec: &PulseSpec) -> Result<f64, AdiabaticError> {
    let j0 = sh.jet(0.0)?;
    let j1 = sh.jet(1.0)?;
    let boundary = j1.dp_norm() / j1.omega + j0.dp_norm() / j0.omega;
    let integral = integrate(|s| Ok(sh.jet(s)?.integrand()), 0.0, 1.0, QUAD_TOL, PANELS)?;
    Ok(spec.eps1 * spec.eps2 * (boundary + integral))
}

/// The three integrals controlling the adiabatic error, for `H_slow` and its first-order approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub int_dp_sq: f64,
    pub int_d2p: f64,
    pub int_dp_dh_over_w2: f64,
    pub tilde_int_dp_sq: f64,
    pub tilde_int_d2p: f64,
    pub tilde_int_dp_dh_over_w2: f64,
    /// `θ̃` sampled on a grid is nondecreasing.
    pub tilde_theta_monotone: bool,
    pub tilde_theta_start: f64,
    pub tilde_theta_end: f64,
}

fn three_integrals(sh: &SlowHamiltonian) -> Result<[f64; 3], AdiabaticError> {
    let tol = 1e-8;
    Ok([
        integrate(|s| Ok(sh.jet(s)?.dp_norm().powi(2)), 0.0, 1.0, tol, PANELS)?,
        integrate(|s| Ok(sh.jet(s)?.d2p_norm()), 0.0, 1.0, tol, PANELS)?,
        integrate(
            |s| {
                let j = sh.jet(s)?;
                Ok(j.dp_norm() * j.dh_norm() / (j.omega * j.omega))
            },
            0.0,
            1.0,
            tol,
            PANELS,
        )?,
    ])
}

/// `θ̃(s) = arccos((α − Δ′/2)/ω̃)`.
pub fn theta_tilde(spec: &PulseSpec, s: f64) -> f64 {
    let cz = spec.alpha - 0.5 * spec.delta.derivative().eval_unchecked(s);
    let cx = spec.eps1 * spec.u.eval_unchecked(s);
    (cz / cx.hypot(cz)).clamp(-1.0, 1.0).acos()
}

pub fn estimate_suite(sh: &SlowHamiltonian, spec: &PulseSpec) -> Result<EstimateReport, AdiabaticError> {
    let full = three_integrals(sh)?;
    let tilde = three_integrals(&SlowHamiltonian::tilde(spec))?;
    let n = 2000;
    let thetas: Vec<f64> = (0..=n).map(|k| theta_tilde(spec, k as f64 / n as f64)).collect();
    Ok(EstimateReport {
        int_dp_sq: full[0],
        int_d2p: full[1],
        int_dp_dh_over_w2: full[2],
        tilde_int_dp_sq: tilde[0],
        tilde_int_d2p: tilde[1],
        tilde_int_dp_dh_over_w2: tilde[2],
        tilde_theta_monotone: thetas.windows(2).all(|w| w[1] >= w[0] - 1e-12),
        tilde_theta_start: thetas[0],
        tilde_theta_end: thetas[n],
    })
}

/// Writes `s, omega, theta, dP_norm, d2P_norm, integrand` on `n + 1` grid points.
pub fn write_report<W: Write>(out: W, sh: &SlowHamiltonian, n: usize) -> Result<(), Box<dyn std::error::Error>> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["s", "omega", "theta", "dP_norm", "d2P_norm", "integrand"])?;
    for k in 0..=n {
        let s = k as f64 / n as f64;
        let j = sh.jet(s)?;
        w.write_record(
            [s, j.omega, j.theta(), j.dp_norm(), j.d2p_norm(), j.integrand()].map(|v| format!("{v:.10e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Bloch direction of the negative-eigenvalue eigenvector of `ε1 u σx + (α − v) σz` over a `(u, Δ′)` grid.
pub fn write_eigendirections<W: Write>(
    out: W,
    eps1: f64,
    alpha: f64,
    u_range: (f64, f64),
    dd_range: (f64, f64),
    n: usize,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["u", "dDelta", "bx", "bz", "angle"])?;
    for i in 0..=n {
        for k in 0..=n {
            let u = u_range.0 + (u_range.1 - u_range.0) * i as f64 / n as f64;
            let dd = dd_range.0 + (dd_range.1 - dd_range.0) * k as f64 / n as f64;
            let (cx, cz) = (eps1 * u, alpha - 0.5 * dd);
            let r = cx.hypot(cz);
            let (bx, bz) = if r > 0.0 { (-cx / r, -cz / r) } else { (0.0, 0.0) };
            w.write_record([u, dd, bx, bz, bx.atan2(bz)].map(|v| format!("{v:.8e}")))?;
        }
    }
    w.flush()?;
    Ok(())
}

//! Chirped-pulse population transfer in two-level quantum systems.
//!
//! The crate models `i dψ/dt = ((E+α)σz + w(t)σx) ψ` driven by the two-scale
//! chirped pulse `w(t) = 2ε1 u(ε1ε2 t) cos(2Et + Δ(ε1ε2 t)/(ε1ε2))` and provides:
//!
//! - [`slowfn`]: smooth functions of the reduced time with symbolic derivatives;
//! - [`pulse`]: pulse schemes, hypothesis validation and frequency certificates;
//! - [`algebra`]: the operator family G and the elimination algorithm that
//!   builds higher-order rotating-wave Hamiltonians;
//! - [`propagate`]: exponential integrators, frames and metrics;
//! - [`adiabatic`]: spectral projectors of the slow Hamiltonian and the adiabatic error bound;
//! - [`harness`]: experiment recipes, sweeps and CSV output.

pub mod adiabatic;
pub mod algebra;
pub mod harness;
pub mod linalg;
pub mod propagate;
pub mod pulse;
pub mod slowfn;

pub use algebra::{EffectiveHamiltonian, GTerm, Generator, Kind, OpSeries};
pub use propagate::{fidelity, orbit_distance, PropagatorConfig, QState};
pub use pulse::{PulseSpec, Scheme};
pub use slowfn::SlowFn;

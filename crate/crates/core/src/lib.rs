//! Simulation and tomography of a qubit coupled to a quantised harmonic mode.
//!
//! The crate covers the full loop of a trapped-ion phonon experiment:
//!
//! * [`fock`]: truncated Fock-space linear algebra, coherent states, displacement,
//!   partial trace and state metrics.
//! * [`dynamics`]: Jaynes-Cummings and anti-Jaynes-Cummings evolution (unitary and
//!   Lindblad), the collapse/revival signal, the two-branch approximation and the
//!   phase-flip echo.
//! * [`phase_space`]: Husimi Q and Wigner quasiprobabilities on points and grids.
//! * [`detector`]: the counter-diabatic uniform-transfer sweep that turns "is the
//!   mode in vacuum?" into a binary qubit readout, plus seeded shot-noise sampling.
//! * [`reconstruction`]: density-matrix recovery from Q samples by projected
//!   gradient descent onto the set of density matrices.
//! * [`io`]: CSV/JSON formats for samples, grids and matrices.
//!
//! Conventions: ħ = 1, energies and rates in rad/s, times in seconds. The joint
//! basis is qubit-major: `(↓,0), (↓,1), …, (↓,N−1), (↑,0), …, (↑,N−1)`.

pub mod detector;
pub mod dynamics;
mod error;
pub mod fock;
pub mod io;
pub mod phase_space;
pub mod reconstruction;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;

pub type CMatrix = nalgebra::DMatrix<C64>;
pub type CVector = nalgebra::DVector<C64>;

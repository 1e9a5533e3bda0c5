//! Resonances of the half-line discrete Schrödinger operator with a
//! truncated periodic potential, `H = -Δ + V·1_[0,L]` on `ℓ²(ℕ)` with a
//! Dirichlet condition at the origin.
//!
//! The crate is organized bottom-up:
//!
//! * [`floquet`] — transfer matrices, discriminant, band structure,
//!   quasi-momentum and band-edge classification of the periodic operator.
//! * [`spectrum`] — the finite Dirichlet section `H_L`, its eigenvalues and
//!   boundary weights, and the near-edge laws they obey.
//! * [`resonance`] — the resonance equation `S_L(E) + e^{-iθ(E)} = 0`,
//!   closed-form seeds, Newton refinement and argument-principle counting.
//! * [`analysis`] — log-log fits that turn the asymptotic statements into
//!   slope checks.
//!
//! [`poly`], [`tridiag`], [`summation`] and [`winding`] hold the numerical
//! building blocks the modules above share.

pub mod analysis;
pub mod error;
pub mod floquet;
pub mod poly;
pub mod resonance;
pub mod spectrum;
pub mod summation;
pub mod tridiag;
pub mod winding;

pub use error::{Error, Result};
pub use floquet::{BandStructure, EdgeClass, EdgeData, EdgeSide, Matrix2, PeriodicPotential};
pub use resonance::{Resonance, ResonanceBox, SweepConfig};
pub use spectrum::SpectralData;
pub use num_complex::Complex64;

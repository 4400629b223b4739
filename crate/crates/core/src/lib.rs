//! Pseudospectral simulation and verification toolkit for plane-wave
//! stability of the cubic nonlinear Schrödinger equation on a torus.
//!
//! The crate provides:
//!
//! * truncated Fourier fields with alias-free cubic products ([`spectral`]),
//! * a Strang split-step integrator with conservation tracking
//!   ([`integrator`]),
//! * the coordinate reduction around a plane wave: frame shift, zero-mode
//!   elimination and shell-wise symplectic diagonalization ([`reduction`]),
//! * small-divisor scans certifying non-resonance of the shell frequencies
//!   ([`resonance`]),
//! * super-action drift experiments and the unstable-regime negative control
//!   ([`experiments`]),
//! * a self-check suite backing the `verify` command ([`verify`]).
//!
//! All numerics are generic over the scalar type through [`scalar::Real`]
//! (`f32` or `f64`); the aliases below fix `f64`, which every shipped
//! experiment uses.

pub mod error;
pub mod experiments;
pub mod fft;
pub mod field;
pub mod grid;
pub mod integrator;
pub mod reduction;
pub mod resonance;
pub mod scalar;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use field::FourierField;
pub use grid::{GridSpec, Mode};
pub use scalar::Real;

/// Double-precision field, the working type of all shipped experiments.
pub type Field64 = FourierField<f64>;
/// Single-precision field for quick exploratory runs.
pub type Field32 = FourierField<f32>;
pub type PlaneWaveFrame64 = reduction::PlaneWaveFrame<f64>;
pub type DiagonalFrame64 = reduction::DiagonalFrame<f64>;

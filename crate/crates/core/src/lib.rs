//! Vibrational wave packets of a Morse oscillator coupled to a super-Ohmic
//! bosonic bath.
//!
//! The crate builds the bound-state basis of a diatomic Morse potential,
//! prepares SU(1,1) coherent states, integrates the modified-jump-operator
//! master equation for the reduced density matrix, and maps snapshots to the
//! Wigner phase-space distribution so that the decay of sub-Planck
//! interference structures can be measured and fitted.
//!
//! All quantities are in Hartree atomic units (ħ = 1, k_B = 1). Positions are
//! the dimensionless displacement `x = r/r0 - 1`, momenta are conjugate to `x`.

pub mod analysis;
pub mod basis;
pub mod cli;
pub mod coherent;
mod error;
pub mod io;
pub mod open_system;
pub mod special;
pub mod wigner;

pub use basis::{BoundBasis, MorseParams};
pub use coherent::{CoherentSpec, StateVector};
pub use error::{Error, Result};
pub use open_system::{BathSpec, DensityMatrix, JumpOperators, OpenSystem, Temperature};
pub use wigner::{GridSpec, PeakReport, WignerGrid};

//! Numerical laboratory for 2-D vorticity dynamics that conserve energy
//! and moment of inertia.
//!
//! The crate provides:
//! - a spectral field core on a truncated plane with an exact free-space
//!   stream-function solve ([`stream`], [`diagnostics`]);
//! - time integrators for the plain, constrained, Fokker-Planck and
//!   self-similar vorticity equations ([`dynamics`]);
//! - an independent radial solver for the mean-field states and their
//!   thermodynamic structure ([`meanfield`]);
//! - stochastic point-vortex systems with an energy-conserving projection
//!   ([`particles`]);
//! - batch front-end and file formats ([`cli`], [`io`]).

pub mod cli;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod io;
pub mod meanfield;
pub mod particles;
pub mod rng;
pub mod spectral;
pub mod stream;

pub use diagnostics::{diagnostics, fisher_information, mf_residual, multipliers, FlowDiagnostics, Multipliers};
pub use error::{Error, Result};
pub use field::VorticityField;
pub use grid::Grid;
pub use stream::{solve_stream, StreamSolver, StreamVelocity};

//! Activity-maximizing transmission control for the low-prevalence linearized
//! SEIR model.
//!
//! The model is written in velocity coordinates V = E/I, X = log I + γt, where
//! the transmission rate β drives V̇ = β − φ(V). The crate simulates these
//! dynamics, synthesizes the extremal bang-bang policies, checks them against
//! a brute-force enumeration oracle, and extends the analysis to coupled
//! subpopulations and concave utility.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod control;
pub mod dynamics;
pub mod error;
pub mod flow;
pub mod functionals;
mod integrate;
pub mod multipop;
pub mod oracle;
mod roots;
pub mod synth;
pub mod utility;

pub use control::PiecewiseControl;
pub use dynamics::{
    phi, phi_inv, simulate_ei, simulate_phase, EIState, ModelParams, PhaseState, Sample, Trajectory,
};
pub use error::{Error, Result};
pub use functionals::{BoundaryTriple, Walls};
pub use integrate::sample_times;

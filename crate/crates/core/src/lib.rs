//! Simulation laboratory for a measurement-dependent hidden-variable model
//! of the spin singlet.
//!
//! The model attaches two unit vectors `(u, v)` to the particle pair and
//! draws them from a four-atom distribution concentrated on the detector
//! axes, so that the averaged outcome statistics reproduce the singlet
//! joint probability `(1/4)(1 - sigma*tau a.b)` exactly. The crate provides:
//!
//! - exact evaluators for every probability law of the model
//!   ([`model`]) and the atomic hidden-variable distribution with its
//!   marginals and total-variation metrics ([`distribution`]);
//! - a seeded, reproducible Monte Carlo engine ([`montecarlo`]);
//! - executable checkers for the hypotheses behind Bell and Leggett
//!   inequalities, plus a CHSH analyzer with a brute-force classical
//!   oracle ([`analysis`]);
//! - discrete-event simulations of the two causal readings of the model:
//!   superluminal signaling via observable hidden variables, and the
//!   local delayed-shared-randomness realization, with a locality audit
//!   ([`protocols`]).

pub mod analysis;
pub mod distribution;
pub mod geometry;
pub mod model;
pub mod montecarlo;
pub mod protocols;
pub mod rng;

mod error;

pub use error::Error;
pub use geometry::{Settings, UnitVec3};
pub use model::{HiddenPair, JointTable, Outcome, Sign};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

//! Single-qubit state estimation with ancilla-based measurement circuits.
//!
//! The library builds parametrized two- and three-qubit estimation circuits,
//! extracts their Kraus operators and POVM elements, scores measurement
//! settings with the Fisher error parameter and its Haar average (the
//! tomographic transfer function), searches for optimal gate angles with
//! Nelder-Mead, and runs seeded shot-noise tomography experiments with
//! linear-inversion and RrhoR maximum-likelihood estimators.
//!
//! # Conventions
//!
//! * Qubit tensor order is most-significant-first: `(A, S, B)` for the full
//!   three-qubit circuit and `(A, S)` for the simplified one, matching the
//!   top-to-bottom wire order of the circuit diagrams.
//! * Measurement outcomes are bit pairs `(k, l)`; the flat outcome index is
//!   `nu = 2k + l`, i.e. `(0,0), (0,1), (1,0), (1,1)`.
//! * Closed-form POVM expressions use signed outcome labels obtained from the
//!   measured bits via `(-1)^bit`, so bit 0 maps to +1 and bit 1 to -1.
//!   With unsigned labels the four closed-form elements do not sum to the
//!   identity.

// Index loops over fixed 3x3/4x4 kernels read better than iterator chains.
#![allow(clippy::needless_range_loop)]

pub mod bloch;
pub mod circuit;
pub mod error;
pub mod experiment;
pub mod fisher;
pub mod mat;
pub mod optim;
pub mod tomo;

mod seeding;
mod smallmat;

#[cfg(test)]
pub(crate) mod testutil;

pub use bloch::{BlochVec, StateAngles};
pub use circuit::{CircuitLayout, CircuitParams, GateAngles, PovmSet};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, ExperimentRecord, ExperimentResults};
pub use fisher::{FisherMatrix, QuadRule, QuadratureSpec};
pub use mat::ComplexMat;
pub use optim::{NmOptions, NmResult, SicReport};
pub use tomo::{CountVector, MeasurementMatrix, RprOptions};

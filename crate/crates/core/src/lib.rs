//! Simulation and pulse-level compilation for quantum cellular networks in
//! which every cell carries one qubit plus a register of ancilla levels.
//!
//! An ancilla level that is optically excited switches on exactly one
//! operation on the cell's qubit (or, for interaction ports, on a neighbor
//! pair); a cell whose ancilla sits in the ground level is asleep and does
//! not evolve. The crate is organised bottom-up:
//!
//! * [`linalg`]: complex operators, kets, density matrices, tensor products,
//!   unitary evolution and partial traces.
//! * [`cell`]: the cell description, its contracted basis and the three-site
//!   model used to bound the number of ancillas.
//! * [`gates`]: the gate set on contracted cell states and the shelving
//!   measurement protocol.
//! * [`decoherence`]: the dissipative master equation for an amplitude-damped
//!   ancilla and the gated operation procedure built on it.
//! * [`network`]: lattices, frequency reuse, swap-chain routing, compilation
//!   to timed pulse schedules, duty-ratio accounting and schedule simulation.
//!
//! Units: `ħ = 1`; energies are in an arbitrary reference unit and times in
//! its inverse.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cell;
pub mod decoherence;
pub mod error;
pub mod exec;
pub mod gates;
pub mod linalg;
pub mod network;

pub use error::{Error, Result};
pub use exec::ExecMode;
pub use linalg::{ComplexOperator, DensityMatrix, Ket, C64};

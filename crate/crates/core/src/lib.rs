//! Simulation of a hybrid controlled-NOT gate: one three-level qutrit
//! dispersively coupled to `n` cavities holding cat-state qubits.

pub mod config;
pub mod device;
pub mod error;
pub mod evolve;
pub mod experiments;
pub mod fock;
pub mod oracle;

pub use error::{Error, Result};

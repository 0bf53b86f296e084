//! Digital qubit control with single-flux-quantum pulse trains.
//!
//! A transmon with a leakage level is driven by a clocked train of identical
//! picosecond pulses; each clock period ("pixel") either carries one pulse or
//! none, so a gate is a bit string. The crate precompiles the two pixel
//! propagators into a [`model::UnitaryDatabase`], evolves and scores bit
//! strings against a Pauli-Y target ([`sequence`]), optimizes them with a
//! genetic algorithm ([`ga`]), and reproduces the gate-time and clock-jitter
//! studies ([`experiments`]). The `sfqctl` binary exposes all of it.
//!
//! ```
//! use sfq_control::{build_database, ModelParams, TargetGate};
//! use sfq_control::sequence::{evolve, fidelity, initial_sequence};
//!
//! let params = ModelParams::default(); // 5 GHz qubit, -200 MHz anharmonicity
//! let db = build_database(&params, 512)?;
//!
//! // one pulse per qubit precession period: 100 pulses over 20 ns
//! let seed = initial_sequence(&params, 100)?;
//! let error = 1.0 - fidelity(&evolve(&seed, &db)?, &TargetGate::pauli_y(3, 0.0));
//! assert!((1e-3..1e-1).contains(&error)); // decent start, far from 1e-4
//! # Ok::<(), sfq_control::Error>(())
//! ```

pub mod cli;
pub mod error;
pub mod experiments;
pub mod ga;
pub mod model;
pub mod propagator;
pub mod sequence;

pub use error::{Error, Result};
pub use model::{build_database, ModelParams, UnitaryDatabase, DEFAULT_SUBSTEPS};
pub use propagator::ComplexMatrix;
pub use sequence::{PulseSequence, TargetGate};

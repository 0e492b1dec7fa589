//! Desk-scale simulator of ADAPT-VQE with adaptive informationally-complete
//! (IC) POVM measurements: a single stream of IC measurement data is reused to
//! estimate the molecular energy and every operator-pool gradient while the
//! measurement itself is optimised on the fly.
//!
//! Module map:
//! - [`pauli`]: symbolic Pauli-string algebra (symplectic encoding).
//! - [`fermion`]: FCIDUMP ingestion and JW / BK / JKMN qubit mappings.
//! - [`pools`]: fermionic, QEB and qubit-ADAPT operator pools.
//! - [`simulator`]: dense statevector engine and POVM outcome sampling.
//! - [`povm`]: IC POVMs, dual frames, shot-data estimators, POVM optimisation.
//! - [`adapt`]: the adaptive-ansatz driver tying everything together.
//! - [`dense`]: dense-matrix oracles backing exact reference values.

pub mod adapt;
pub mod dense;
pub mod error;
pub mod fermion;
pub mod pauli;
pub mod pools;
pub mod povm;
pub mod simulator;
mod tensor;

pub use error::{Error, Result};
pub use num_complex::Complex64;

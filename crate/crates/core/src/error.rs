use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {0} vs {1}")]
    NQubitsMismatch(usize, usize),

    #[error("FCIDUMP parse error at line {line}: {msg}")]
    Fcidump { line: usize, msg: String },

    #[error("orbital index {index} out of range for {n} spin-orbitals")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("operator is not Hermitian (max imaginary part {0:.3e})")]
    NotHermitian(f64),

    #[error("POVM is not informationally complete (condition number {cond:.3e})")]
    NotInformationallyComplete { cond: f64 },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("shot record was produced by a different POVM (fingerprint mismatch)")]
    StaleShots,

    #[error("reference-state ground space is degenerate with no basis-state representative")]
    DegenerateReference,

    #[error("{0} supports at most {1} qubits, got {2}")]
    TooManyQubits(&'static str, usize, usize),

    #[error("non-finite energy encountered during optimisation")]
    NonFiniteEnergy,

    #[error("shot budget exhausted before the stop rule was satisfied")]
    BudgetExhausted,

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

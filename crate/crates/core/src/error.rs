use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid Pauli letter {letter:?} at position {position}")]
    InvalidLetter { letter: char, position: usize },

    #[error("empty Pauli string")]
    EmptyPauli,

    #[error("qubit count mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("control and target must differ (both {0})")]
    SameControlTarget(usize),

    #[error("qubit count {0} outside supported range 1..={max}", max = crate::statevec::MAX_QUBITS)]
    TooManyQubits(usize),

    #[error("measurement basis {0} contains an identity letter")]
    IdentityInBasis(String),

    #[error("term {0} is not covered by the measurement plan")]
    UncoveredTerm(String),

    #[error("measurement plan rejected: term {0} has zero covering probability")]
    PlanRejected(String),

    #[error("parameter vector has length {got}, ansatz expects {expected}")]
    ParamLength { expected: usize, got: usize },

    #[error("parameter index {index} out of range 1..={num_params}")]
    ParamIndex { index: usize, num_params: usize },

    #[error("M-state requires k <= l, got k={k}, l={l}")]
    OrderedPair { k: usize, l: usize },

    #[error("matrix M is singular under the SVD cutoff")]
    SingularM,

    #[error("no samples requested")]
    EmptySample,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

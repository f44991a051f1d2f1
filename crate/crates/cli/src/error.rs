//! Error classification for exit codes: configuration mistakes (2), data
//! problems (3), and numerical non-convergence (4).

use std::fmt;

use statmem_core::alphabet::AlphabetError;
use statmem_core::inference::InferenceError;
use statmem_core::machine::MachineError;
use statmem_core::perturb::PerturbError;
use statmem_core::quantum::QuantumError;
use statmem_core::words::WordsError;
use statmem_core::zoo::ZooError;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug)]
pub enum CliError {
    /// The run configuration (or the machine definition it names) is wrong.
    Config(String),
    /// Input data cannot support the requested computation.
    Data(String),
    /// An iterative solver failed to converge.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError::Data(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical error: {msg}"),
        }
    }
}

impl From<MachineError> for CliError {
    fn from(e: MachineError) -> Self {
        match e {
            MachineError::NoConvergence(_) => CliError::Numerical(e.to_string()),
            // Everything else means the configured machine definition is bad.
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ZooError> for CliError {
    fn from(e: ZooError) -> Self {
        match e {
            ZooError::Machine(inner) => inner.into(),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<AlphabetError> for CliError {
    fn from(e: AlphabetError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<WordsError> for CliError {
    fn from(e: WordsError) -> Self {
        match e {
            WordsError::BadThreshold(_) => CliError::Config(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<QuantumError> for CliError {
    fn from(e: QuantumError) -> Self {
        match e {
            QuantumError::NoConvergence(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        match e {
            // Refusing an L over the dense-dimension cap is a config matter.
            InferenceError::DimensionTooLarge(_, _) | InferenceError::ZeroLength => {
                CliError::Config(e.to_string())
            }
            InferenceError::Alphabet(inner) => inner.into(),
            InferenceError::Words(inner) => inner.into(),
            InferenceError::Quantum(inner) => inner.into(),
            InferenceError::Machine(inner) => inner.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<PerturbError> for CliError {
    fn from(e: PerturbError) -> Self {
        match e {
            PerturbError::GridTooSmall(_) => CliError::Config(e.to_string()),
            PerturbError::Inference(inner) => inner.into(),
            PerturbError::Quantum(inner) => inner.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error class; the command-line front end maps these to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
    Asr,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed WAV: {0}")]
    MalformedWav(String),
    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("FFT length {0} is not a power of two")]
    NonPowerOfTwo(usize),
    #[error("window/hop pair does not satisfy constant overlap-add (hop {hop}, n_fft {n_fft})")]
    NonColaConfiguration { n_fft: usize, hop: usize },
    #[error("invalid STFT configuration: {0}")]
    InvalidStft(String),
    #[error("noise estimate needs {requested} frames but only {available} are available")]
    TooFewFrames { requested: usize, available: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("smoothing width must be odd and at least 1, got {0}")]
    EvenWidth(usize),
    #[error("invalid frequency range: {0}")]
    InvalidRange(String),
    #[error("power spectrogram contains a negative value")]
    NegativeInput,
    #[error("no transcript for clip {0}")]
    MissingTranscript(String),
    #[error("ASR service error: {0}")]
    AsrService(String),
    #[error("corpus is empty or has no non-empty document")]
    EmptyCorpus,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set contains a single class")]
    SingleClassTrainingSet,
    #[error("input shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error("soft vote over an empty ensemble")]
    EmptyEnsemble,
    #[error("class {label} has {count} examples; at least 2 are required")]
    InsufficientClassExamples { label: String, count: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("ground truth contains a single class")]
    SingleClassTruth,
    #[error("ground truth contains no positive example")]
    NoPositives,
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InvalidConfig(_) | NonPowerOfTwo(_) | NonColaConfiguration { .. } | InvalidStft(_)
            | EvenWidth(_) | InvalidRange(_) => ErrorClass::Config,
            NonFiniteLoss { .. } => ErrorClass::Numeric,
            AsrService(_) => ErrorClass::Asr,
            _ => ErrorClass::Data,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

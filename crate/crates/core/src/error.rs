use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {param} = {value} outside [-3, 3]")]
    OutOfRange { param: &'static str, value: f64 },
    #[error("area function is empty")]
    EmptyAreaFunction,
    #[error("vocal tract is closed (min area {min_area} cm²)")]
    Closure { min_area: f64 },
    #[error("only {found} spectral peaks found below {max_hz} Hz")]
    PeakDeficit { found: usize, max_hz: f64 },
    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("formants must satisfy 0 < f1 < f2 < f3, got ({0}, {1}, {2})")]
    FormantOrder(f64, f64, f64),
    #[error("no valid vertex pair to test cube linearity")]
    Untestable,
    #[error("cube jacobian is rank deficient")]
    DegenerateCube,
    #[error("unknown vowel `{0}`")]
    UnknownVowel(String),
    #[error("ideal-domain sampling for /{vowel}/ exhausted {attempts} attempts")]
    SamplingFailed { vowel: &'static str, attempts: usize },
    #[error("frame {frame}: no inverse solution within tolerance")]
    Unreachable { frame: usize },
    #[error("codebook file: bad magic")]
    BadMagic,
    #[error("codebook file: unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("codebook file: truncated")]
    Truncated,
    #[error("codebook file: checksum mismatch")]
    ChecksumMismatch,
    #[error("codebook file: {0}")]
    Format(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("parse: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

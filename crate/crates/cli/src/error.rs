use std::fmt;

use exactfp::analysis::AnalysisError;
use exactfp::bo::BoError;
use exactfp::data::DataError;
use exactfp::fingerprints::FingerprintError;
use exactfp::gp::GpError;
use exactfp::kernel::KernelError;

/// Fatal command failure, classified for the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flag values or combinations (exit 2).
    Usage(String),
    /// Unreadable, malformed or unusable input, or unwritable output (exit 3).
    Input(String),
    /// Factorization, optimization or acquisition failures (exit 4).
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::SampleTooLarge { .. } | DataError::BadFraction(_) => CliError::Usage(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<FingerprintError> for CliError {
    fn from(e: FingerprintError) -> Self {
        match e {
            FingerprintError::UnknownEncoding(_) | FingerprintError::ZeroDim | FingerprintError::RadiusTooLarge(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::ZeroDim => CliError::Usage(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<GpError> for CliError {
    fn from(e: GpError) -> Self {
        match e {
            GpError::TooFewTargets { .. }
            | GpError::DegenerateTargets
            | GpError::NonFiniteTarget(_)
            | GpError::LengthMismatch { .. } => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<BoError> for CliError {
    fn from(e: BoError) -> Self {
        match e {
            BoError::InvalidConfig(_) | BoError::PoolExhausted => CliError::Usage(e.to_string()),
            BoError::Data(d) => d.into(),
            BoError::Gp(g) => g.into(),
            BoError::DegenerateRange => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

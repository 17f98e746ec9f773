use std::path::PathBuf;

/// Failures of the harness; [`HarnessError::exit_code`] maps them to the
/// command-line exit status.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] stopkey::Error),
    #[error("transcript log: {0}")]
    MalformedLog(String),
    #[error("key material in public payload {payload:?} (record {record})")]
    KeyLeak { record: usize, payload: String },
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// 3 for bad input, 1 for everything else. Bound violations are not
    /// errors; they are reported and exit with 2.
    pub fn exit_code(&self) -> i32 {
        use stopkey::Error as E;
        match self {
            Self::Io { .. } | Self::Input(_) | Self::MalformedLog(_) => 3,
            Self::Core(e) => match e {
                E::EmptyAlphabet
                | E::LabelMismatch { .. }
                | E::DuplicateLabel(_)
                | E::NegativeMass { .. }
                | E::NotNormalized { .. }
                | E::OutsideUnitInterval(_)
                | E::ZeroMass
                | E::UnknownSymbol(_)
                | E::ZeroProbability(_)
                | E::IllFormedLaw(_)
                | E::InvalidHash(_)
                | E::InvalidParameter(_)
                | E::Parse(_)
                | E::NoAgreement
                | E::Unreachable { .. } => 3,
                _ => 1,
            },
            Self::KeyLeak { .. } => 2,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

use std::path::PathBuf;

use wavefocus_core::Error as CoreError;

/// Process exit codes, one per failure class.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const IO: i32 = 3;
    pub const DOMAIN: i32 = 4;
    pub const DENOMINATOR: i32 = 5;
    pub const PERTURBATION: i32 = 6;
    pub const SOLVER: i32 = 7;
    pub const LOCK: i32 = 8;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: malformed input: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("output directory {} is locked by another run", .0.display())]
    Locked(PathBuf),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Io { .. } | CliError::Format { .. } => exit::IO,
            CliError::Locked(_) => exit::LOCK,
            CliError::Core(e) => match e {
                CoreError::Config(_) => exit::CONFIG,
                CoreError::DegenerateDenominator { .. } => exit::DENOMINATOR,
                CoreError::PerturbationExhausted { .. } => exit::PERTURBATION,
                CoreError::SolverDiverged { .. } => exit::SOLVER,
                _ => exit::DOMAIN,
            },
        }
    }

    /// Short machine-readable class name for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Format { .. } => "format",
            CliError::Locked(_) => "lock",
            CliError::Core(e) => match e {
                CoreError::Config(_) => "config",
                CoreError::DegenerateDenominator { .. } => "degenerate_denominator",
                CoreError::PerturbationExhausted { .. } => "perturbation_exhausted",
                CoreError::SolverDiverged { .. } => "solver_diverged",
                CoreError::MomentUnderflow { .. } => "moment_underflow",
                _ => "domain",
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

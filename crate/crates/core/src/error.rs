use std::fmt;

use thiserror::Error;

use crate::mindex::MultiIndex;

pub type Result<T, E = PronyError> = std::result::Result<T, E>;

/// Pipeline stage an error originated from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Input,
    Hankel,
    Construction,
    Reduction,
    Tables,
    Eigen,
    Vandermonde,
    Sparse,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Input => "input",
            Stage::Hankel => "hankel",
            Stage::Construction => "construction",
            Stage::Reduction => "reduction",
            Stage::Tables => "tables",
            Stage::Eigen => "eigen",
            Stage::Vandermonde => "vandermonde",
            Stage::Sparse => "sparse",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum PronyError {
    #[error("integer overflow computing {0}")]
    Overflow(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("leading form of the zero polynomial is undefined")]
    ZeroPolynomial,
    #[error("missing sample at lattice point {0}")]
    MissingSample(MultiIndex),
    #[error("zero measurement matrix: every singular value is below the threshold")]
    ZeroMeasurement,
    #[error("kernel not nested at degree {degree}: containment residual {residual:.3e} (n may be too small or the threshold wrong)")]
    KernelNotNested { degree: usize, residual: f64 },
    #[error("leading forms of degree {degree} are rank deficient")]
    LeadingRankDeficient { degree: usize },
    #[error("n = {n} too small: rank did not stall for k <= n (choose a larger n; a rank stall alone does not certify n)")]
    NTooSmall { n: usize },
    #[error("context too shallow: polynomial degree {degree} exceeds available blocks (max {max})")]
    ContextTooShallow { degree: usize, max: usize },
    #[error("multiplication tables fail to commute: relative commutator {0:.3e}")]
    NonCommuting(f64),
    #[error("defective or clustered spectrum: eigenvector condition {0:.3e}")]
    DefectiveSpectrum(f64),
    #[error("eigensolver did not converge")]
    EigenNoConvergence,
    #[error("frequency at -infinity: zero point coordinate")]
    ZeroCoordinate,
    #[error("Vandermonde rank deficient ({rank} of {points})")]
    VandermondeRankDeficient { rank: usize, points: usize },
    #[error("exponent rounding unreliable: displacement {0:.3}")]
    RoundingUnreliable(f64),
    #[error("duplicate frequencies after normalization")]
    DuplicateFrequencies,
    #[error("[{stage}] {source}")]
    Staged {
        stage: Stage,
        #[source]
        source: Box<PronyError>,
    },
}

impl PronyError {
    pub fn at(self, stage: Stage) -> Self {
        match self {
            staged @ PronyError::Staged { .. } => staged,
            other => PronyError::Staged {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// The error with any stage tag removed.
    pub fn root(&self) -> &PronyError {
        match self {
            PronyError::Staged { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            PronyError::Staged { stage, .. } => Some(*stage),
            _ => None,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self.root() {
            PronyError::NTooSmall { .. } => ErrorClass::NTooSmall,
            PronyError::ZeroMeasurement
            | PronyError::KernelNotNested { .. }
            | PronyError::LeadingRankDeficient { .. }
            | PronyError::ContextTooShallow { .. } => ErrorClass::Rank,
            PronyError::NonCommuting(_)
            | PronyError::DefectiveSpectrum(_)
            | PronyError::EigenNoConvergence
            | PronyError::ZeroCoordinate => ErrorClass::Eigen,
            PronyError::VandermondeRankDeficient { .. } => ErrorClass::Vandermonde,
            PronyError::RoundingUnreliable(_) => ErrorClass::Rounding,
            PronyError::MissingSample(_) => ErrorClass::Coverage,
            _ => ErrorClass::Config,
        }
    }
}

/// Coarse error classes; each maps to a distinct process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Config,
    Coverage,
    NTooSmall,
    Rank,
    Eigen,
    Vandermonde,
    Rounding,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Coverage => 3,
            ErrorClass::NTooSmall => 4,
            ErrorClass::Rank => 5,
            ErrorClass::Eigen => 6,
            ErrorClass::Vandermonde => 7,
            ErrorClass::Rounding => 8,
        }
    }
}

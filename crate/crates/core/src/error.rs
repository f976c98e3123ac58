use thiserror::Error;

/// In-phase or quadrature branch of a QAM symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    I,
    Q,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::I => f.write_str("i"),
            Branch::Q => f.write_str("q"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("distance {index} on the {branch} branch is not strictly positive ({value})")]
    NonPositiveDistance { branch: Branch, index: usize, value: f64 },

    #[error("ordering violated on the {branch} branch: d[{index}] < 2 d[{next}]", next = index + 1)]
    Ordering { branch: Branch, index: usize },

    #[error("distance profile has energy {energy}, expected 1")]
    Energy { energy: f64 },

    #[error("profile carries no bits and cannot be normalized")]
    EmptyProfile,

    #[error("bit length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },

    #[error("composite constellation of user {user} breaks layer ordering on the {branch} branch")]
    CompositeOrdering { user: u8, branch: Branch },

    #[error("mixing weights of user {user} do not satisfy beta0^2 + betau^2 = 1")]
    MixingWeights { user: u8 },

    #[error("branch with {bits} bits is not supported by the closed-form metric (max 3)")]
    UnsupportedBranch { bits: usize },

    #[error("bit index {k} out of range for a branch with {bits} bits")]
    BitIndex { k: usize, bits: usize },

    #[error("|rho| = {rho_abs} is outside [0, 1 - 1e-9)")]
    DegenerateCorrelation { rho_abs: f64 },

    #[error("channel norm for user {user} must be positive")]
    ChannelNorm { user: u8 },

    #[error("channel vectors have mismatched or too small dimension")]
    Dimension,

    #[error("theta0 = {theta0} outside [0, {max}]")]
    BeamAngle { theta0: f64, max: f64 },

    #[error("power amplitudes must be nonnegative with squares summing to 1 (sum = {sum})")]
    Power { sum: f64 },

    #[error("equivalent gain of user {user} is zero")]
    ZeroGain { user: u8 },

    #[error("noise variance must be positive")]
    NoiseVariance,

    #[error("invalid bit assignment: {0}")]
    Assignment(String),

    #[error("invalid mode: {0}")]
    Mode(String),

    #[error("empty grid: {0}")]
    EmptyGrid(&'static str),

    #[error("requested {requested} modes but only {available} frontier points are available")]
    TooManyModes { requested: usize, available: usize },

    #[error("at least two modes are needed to anchor both axes (got {0})")]
    TooFewModes(usize),

    #[error("no rate points to build a region from")]
    NoPoints,
}

impl Error {
    /// True for errors caused by an invalid request rather than a degenerate
    /// numerical scenario.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyGrid(_)
                | Error::Assignment(_)
                | Error::Mode(_)
                | Error::LengthMismatch { .. }
                | Error::TooManyModes { .. }
                | Error::TooFewModes(_)
                | Error::BitIndex { .. }
                | Error::UnsupportedBranch { .. }
                | Error::BeamAngle { .. }
                | Error::Power { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

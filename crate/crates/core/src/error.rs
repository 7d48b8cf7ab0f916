//! Error type shared across the toolkit.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type. Numeric routines report *why* they failed together
/// with the achieved accuracy where that is meaningful, so callers can
/// decide whether a degraded result is still usable.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A model or experiment parameter violated its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A quadrature did not reach the requested tolerance. Carries the
    /// best value found and the achieved absolute error estimate.
    #[error("quadrature did not converge: value={value:.6e}, achieved error={achieved:.3e}, requested={requested:.3e} ({context})")]
    QuadratureNonConvergence {
        value: f64,
        achieved: f64,
        requested: f64,
        context: &'static str,
    },

    /// A series evaluation could not reach the requested tolerance
    /// (asymptotic series truncated at its optimal term).
    #[error("series evaluation stalled: best error {achieved:.3e} > requested {requested:.3e} ({context})")]
    SeriesNonConvergence {
        achieved: f64,
        requested: f64,
        context: &'static str,
    },

    /// An operation was called outside the regime/dimension it supports.
    #[error("operation unsupported here: {0}")]
    Unsupported(String),

    /// No limit theorem is available for the requested parameters
    /// (dimension at or below α/β).
    #[error("no limit theorem available: {0}")]
    NoLimitTheorem(String),

    /// A simulation replica exceeded its event or memory budget.
    #[error("population explosion guard: {events} events, {live} live particles (cap {cap}) in replica {replica}")]
    PopulationExplosion {
        events: u64,
        live: usize,
        cap: u64,
        replica: u64,
    },

    /// A solver invariant (e.g. `0 ≤ v ≤ 1`) was violated beyond slack.
    #[error("solver invariant violated: {0}")]
    InvariantViolation(String),

    /// Experiment configuration failed validation.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Record files from different configurations were mixed.
    #[error("config hash mismatch: expected {expected}, found {found}")]
    ConfigHashMismatch { expected: String, found: String },

    /// Duplicate replica id while aggregating records.
    #[error("duplicate replica id {0} in record set")]
    DuplicateReplica(u64),

    /// Statistical test preconditions not met (sample too small, window
    /// degenerate, too few exceedances, ...).
    #[error("statistic unavailable: {0}")]
    StatisticUnavailable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config parse error: {0}")]
    ConfigParse(String),
}

impl Error {
    /// Shorthand used by parameter validators.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

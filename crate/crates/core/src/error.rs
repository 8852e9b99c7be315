use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("steady state is not unique (Liouvillian kernel is degenerate)")]
    DegenerateSteadyState,

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("no detected photon flux in the steady state")]
    NoDetectedFlux,

    #[error("grid spacing {spacing} ns is coarser than the limit {limit} ns")]
    GridTooCoarse { spacing: f64, limit: f64 },

    #[error("side peaks contain no counts")]
    EmptySidePeaks,

    #[error("at laser frequency {f_ghz} GHz: {source}")]
    AtFrequency {
        f_ghz: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the wave, spectral, Riemann, and simulation routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Evaluation point outside the declared domain of a flux or state map.
    #[error("domain error: {0}")]
    Domain(String),

    /// One or more model invariants are violated; every violation is listed.
    #[error("validation error: {}", .0.join("; "))]
    Validation(Vec<String>),

    /// The Rankine-Hugoniot quadratic has no root on the requested branch.
    #[error("no branch: {0}")]
    NoBranch(String),

    /// A root-finding or ODE solve failed to converge.
    #[error("solve error: {0}")]
    Solve(String),

    /// Endstates do not satisfy the jump condition to tolerance.
    #[error("not a wave: {0}")]
    NotAWave(String),

    /// Endstates violate the ignition-placement requirement.
    #[error("ignition placement error: {0}")]
    IgnitionPlacement(String),

    /// The queried point is not a rest point of the traveling-wave ODE.
    #[error("not a rest point: {0}")]
    NotRestPoint(String),

    /// No connecting orbit exists for the requested wave.
    #[error("no connection: {0}")]
    NoConnection(String),

    /// Operation requires a spatially exponentially decaying profile.
    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    /// Bisection bracket does not straddle a root.
    #[error("bracket error: {0}")]
    Bracket(String),

    /// Sonic endstate: characteristic speed equals the wave speed.
    #[error("sonic endstate: {0}")]
    Sonic(String),

    /// Spectral parameter too close to a square-root branch point.
    #[error("branch point: {0}")]
    BranchPoint(String),

    /// Rescaled Evans solutions left the representable range.
    #[error("integration error: {0}")]
    Integration(String),

    /// Richardson extrapolation did not converge.
    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// The Abel-formula limit did not stabilize on the computed window.
    #[error("plateau error: {0}")]
    Plateau(String),

    /// Large-lambda sign samples disagree.
    #[error("no plateau: {0}")]
    NoPlateau(String),

    /// The Evans function comes too close to zero on the counting contour.
    #[error("contour too close to a zero: {0}")]
    ContourTooClose(String),

    /// Accumulated argument is not an integer multiple of 2 pi.
    #[error("non-integer winding: {0}")]
    NonIntegerWinding(String),

    /// Numeric and closed-form derivative signs disagree; hard failure.
    #[error("inconsistent stability index: {0}")]
    InconsistentIndex(String),

    /// The Riemann problem has no solution in the viscous-profile class.
    #[error("no Riemann solution: {0}")]
    NoSolution(String),

    /// Riemann data outside the supported reactant configuration.
    #[error("unsupported data: {0}")]
    UnsupportedData(String),

    /// Time step exceeds the advective/diffusive stability bound.
    #[error("CFL violation: {0}")]
    CflViolation(String),

    /// A simulation state stopped being finite.
    #[error("non-finite state: {0}")]
    NonFiniteState(String),

    /// Output or manifest I/O failure.
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code classification: 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::Validation(_)
            | Error::UnsupportedData(_)
            | Error::IgnitionPlacement(_)
            | Error::Io(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Endstate algebra (jump conditions, CJ speeds, wave classification, rest
//! points) and the connection problem (shooting, separation function,
//! threshold speeds, profile construction).

mod connection;
mod endstates;

pub use connection::{
    compute_profile, find_weak_detonation_speed, melnikov_derivative_quadrature,
    melnikov_derivative_s, melnikov_partials, melnikov_separation, LPolicy, MelnikovDerivative,
    MelnikovResult, Profile, WeakSpeed,
};
pub use endstates::{
    cj_diagram, cj_speeds, classify_wave, rest_point_analysis, rh_states, CjDiagramRow,
    RestPointAnalysis, RestType, RhBranch, RhRoots, WaveClass, WaveSpec,
};

/// Relative tolerance on the jump-condition residual accepted by
/// classification and carried as a wave invariant.
pub const RH_TOL: f64 = 1e-10;

/// Tolerance below which a wave is treated as sonic (Chapman-Jouget).
pub const CJ_TOL: f64 = 1e-8;

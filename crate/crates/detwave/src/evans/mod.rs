//! Evans function for the linearized operator about a nondegenerate
//! traveling wave, and the derived stability machinery.
//!
//! The eigenvalue problem in phase variables `W = (u, u', z)` is the linear
//! system `W' = A(x; lambda) W`. On `Re lambda >= 0` there is one decaying
//! direction at `+inf` and a two-dimensional decaying-at-`-inf` family; the
//! Evans function is their Wronskian at `x = 0`. The single solution is
//! integrated backward with its asymptotic rate factored out, the pair as a
//! wedge (second exterior power) with the pair-sum rate factored out, so
//! everything tracked stays bounded. Zeros of `D` on the open right
//! half-plane are exactly the unstable eigenvalues.

mod index;
mod modes;
mod system;
mod winding;

pub use index::{dprime_zero_formula, dprime_zero_numeric, sign_at_infinity, stability_index, DPrimeParts, StabilityReport};
pub use modes::{limiting_modes, EndSide, LimitingModes};
pub use system::{EvansEvaluation, EvansSystem, NormalizationRecord};
pub use winding::winding_number;

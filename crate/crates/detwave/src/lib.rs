//! Traveling combustion waves of a scalar reacting-flow model, their
//! spectral stability via the Evans function and the stability index, the
//! associated Riemann-problem catalog, and a direct finite-difference
//! time stepper for cross-validation.
//!
//! Modules mirror the pipeline: [`model`] defines the problem, [`profiles`]
//! solves the endstate algebra and the connection ODEs, [`evans`] builds and
//! interrogates the Evans function, [`riemann`] assembles wave sequences,
//! [`pdesim`] evolves the PDE directly, and [`report`] emits CSV/JSON.

pub mod error;
pub mod evans;
pub mod model;
pub mod ode;
pub mod pdesim;
pub mod profiles;
pub mod report;
pub mod riemann;

pub use error::{Error, Result};
pub use model::{validate_config, FluxSpec, IgnitionSpec, ModelConfig, ValidatedConfig};

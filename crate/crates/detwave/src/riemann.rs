//! Riemann-problem catalog.

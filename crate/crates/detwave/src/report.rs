//! Output emission.

//! Direct finite-difference time stepper.

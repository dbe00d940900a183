pub mod analytic;
pub mod banded;
pub mod checks;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod isotherm;
pub mod mesh;
pub mod minimizer;
pub mod par;
pub mod stepper;
pub mod study;

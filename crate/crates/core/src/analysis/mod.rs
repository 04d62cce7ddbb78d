//! Measurements on discrete solutions: comparison, bounds, moduli, boundary
//! jumps, and convergence toward the fractional limit.

mod checks;
mod convergence;
mod modulus;
mod reference;

pub use checks::{
    boundary_positivity_check, comparison_check, linfty_bound_check, linfty_constant,
    BoundaryReport, ComparisonOutcome, LinftyReport, CERT_TOL,
};
pub use convergence::{
    convergence_study, counterexample_study, fit_rate, CounterexampleReport, CounterexampleRow,
    RateFit,
};
pub use modulus::{
    boundary_jump_fit, equicontinuity_envelope, modulus_of_continuity, Envelope, JumpFit,
    ModulusEstimate, BETA_GRID,
};
pub use reference::{fractional_reference, FractionalReference, ReferenceMode};

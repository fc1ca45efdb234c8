//! Fourth-order nonlinear Schrödinger equations on the torus: spectral
//! fields, conserved functionals, phase functions, the multiplier calculus
//! behind the normal-form reduction, and a pseudospectral solver.

pub mod conserved;
pub mod error;
pub mod multiplier;
pub mod normal_form;
pub mod par;
pub mod phase;
pub mod scalar;
pub mod solver;
pub mod spectral;
pub mod tuple;

pub use conserved::{check_conditions, ConditionFlags, EquationParams};
pub use error::{Error, Result};
pub use phase::PhaseContext;
pub use scalar::{Coef, Rational, Scalar};
pub use spectral::{PhysicalField, SpectralField, C64};
pub use tuple::FrequencyTuple;

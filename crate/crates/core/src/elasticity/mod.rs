//! Elastic moduli, body-force potentials, Lagrangians and the non-existence certificate.

mod certificate;
pub mod lagrangians;
mod moduli;
mod potential;

pub use certificate::{nonexistence_certificate, Certificate, ClauseResult};
pub use moduli::{direction_grid, ElasticModuli, IsotropicModuli, PositivityReport, TOL_EIG};
pub use potential::{
    deficit_sign, scaling_deficit, BodyForcePotential, CouplingPotential, DeficitSign, PotentialKind, RadialTable,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("inadmissible model: {0}")]
    Inadmissible(String),
    #[error("moduli symmetry violated at C[{index:?}] versus C[{partner:?}] (indices i j k l, 0-based)")]
    SymmetryViolation { index: [usize; 4], partner: [usize; 4] },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

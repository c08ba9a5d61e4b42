//! Both sides of the dilation identities on computed fields, refinement studies and reports.

mod dynamics;
mod eval;
mod report;
mod statics;

pub use dynamics::{
    dynamic_identity, record_trajectory, verify_hamiltonian_conformal, verify_morawetz, DynamicFunctionals, Sample,
    Trajectory,
};
pub use eval::{nodal_gradients, Evaluator, Model, PointState};
pub use report::{csv_float, IdentityId, IdentityReport, Refinement, TimeSeries};
pub use statics::{
    static_identity, stored_energy, verify_pohozhaev, verify_pohozhaev_generalized, verify_pohozhaev_isotropic,
};

use crate::domain::DomainError;
use crate::dynamics::DynamicsError;
use crate::statics::StaticsError;
use crate::symbolic::SymbolicError;

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Symbolic(#[from] SymbolicError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Statics(#[from] StaticsError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("free-space window violated: horizon {horizon} exceeds wave-contact time {contact}")]
    Window { horizon: f64, contact: f64 },
}

//! Dirichlet elastodynamics: velocity-Verlet stepping for the potential and the
//! coupled (Hamiltonian) systems, energies and initial data.

mod initial;
mod integrator;

pub use initial::{bump_profile, wave_contact_time, InitialData};
pub use integrator::{DynamicModel, DynamicState, Integrator, DEFAULT_CFL};

use crate::domain::DomainError;
use crate::elasticity::ModelError;
use crate::statics::StaticsError;

#[derive(Debug, thiserror::Error)]
pub enum DynamicsError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("time step {dt} exceeds the CFL bound {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("time step {dt} exceeds the discrete stability limit {limit} of the stiffest cut cell")]
    Unstable { dt: f64, limit: f64 },
    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Statics(#[from] StaticsError),
}

//! Dirichlet elastostatics: cut-cell operator, discrete energy, minimizer and eigenpairs.

mod energy;
mod manufactured;
mod operator;
mod solver;

pub use energy::{stored_energy_gradient, EnergyMatrix};
pub use manufactured::{FnSource, ManufacturedSource, SineProduct, SourceField};
pub use operator::{merge_triplets, ordinals, ElasticOperator, Stencil, StencilTable};
pub use solver::{
    assemble_residual, independent_residual, random_field, smallest_eigenpair, smallest_eigenpair_on, solve_static, telemetry_csv,
    Eigenpair, SolveOptions, StaticProblem, StaticSolution, TelemetryRow,
};

use crate::domain::DomainError;
use crate::elasticity::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum StaticsError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64, solution: Box<StaticSolution> },
    #[error("energy fell below the floor ({energy:e}) after {iterations} iterations")]
    Unbounded { energy: f64, iterations: usize },
    #[error("non-finite iterate after {iterations} iterations")]
    NonFinite { iterations: usize },
    #[error("inverse iteration stagnated at kappa = {kappa} (residual {residual:e})")]
    Stagnation { kappa: f64, residual: f64 },
    #[error("linear solver: {0}")]
    Solver(String),
}

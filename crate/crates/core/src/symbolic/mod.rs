//! Exact differential polynomials, jet-space calculus and Noether identities.

mod atom;
mod expr;
mod generator;
mod jet;
pub mod random;

pub use atom::{modulus_orbit, Atom, Field, Lame, Var};
pub use expr::{rat, CompiledExpr, DiffExpr, Monomial};
pub use generator::{
    apply_prolonged, derive_scaling_identity, noether_residual, prolong, proportionality,
    ProlongedField, ScalingIdentity, VectorFieldGenerator,
};
pub use jet::{dirichlet_contraction, reduce_unit_normal, JetSpace};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymbolicError {
    #[error("derivative of `{0}` exceeds the representable order")]
    OrderExceeded(Atom),
    #[error("Lagrangian contains second-derivative atoms")]
    SecondOrderInput,
    #[error("boundary atom `{0}` has no total derivative")]
    BoundaryAtom(Atom),
    #[error("invalid generator: {0}")]
    InvalidGenerator(String),
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{0}")]
    Precondition(String),
    #[error("parse error: {0}")]
    Parse(String),
}

//! Symbolic derivation and numerical verification of dilation identities for
//! linear elasticity with nonlinear body forces.

pub mod derivation;
pub mod domain;
pub mod dynamics;
pub mod elasticity;
pub mod statics;
pub mod symbolic;
pub mod verify;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

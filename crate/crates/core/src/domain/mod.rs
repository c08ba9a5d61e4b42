//! Domains, uniform grids with cut-cell quadrature, and boundary meshes.

mod boundary;
mod geometry;
mod grid;

pub use boundary::{is_star_shaped, BoundaryInterpolator, BoundaryMesh, Facet, StarShape, TOL_GEO};
pub use geometry::{disk_box_area, DomainSpec};
pub use grid::{gradient_at, pairwise_sum, Grid, GridField, NodeStatus};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DomainError {
    #[error("invalid domain: {0}")]
    Invalid(String),
    #[error("grid has no interior nodes")]
    EmptyInterior,
    #[error("insufficient stencil at node or facet {0}")]
    Stencil(usize),
    #[error("degenerate boundary facet {0}")]
    DegenerateFacet(usize),
}

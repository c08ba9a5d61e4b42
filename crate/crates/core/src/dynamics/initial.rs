use std::sync::Arc;

use crate::domain::{BoundaryMesh, DomainSpec, Grid, GridField};
use crate::statics::smallest_eigenpair_on;

use super::{DynamicModel, DynamicState, DynamicsError};

/// Initial data families, all with zero initial velocity.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    /// `u₀ = α φ`, `v₀ = β φ` for the smallest discrete eigenfield `φ` (unit L² norm).
    Eigenmode { u_amplitude: f64, v_amplitude: f64 },
    /// Compactly supported bump `a (1 − r²/R²)⁶` with `R = 4·width`; `v₀ = u₀`
    /// scaled by `v_scale` for the coupled system.
    Bump { center: Vec<f64>, width: f64, amplitude: Vec<f64>, v_scale: f64 },
}

/// Profile of the bump at distance `r`: about a Gaussian of standard deviation `width`.
pub fn bump_profile(r: f64, width: f64) -> f64 {
    let big_r = 4.0 * width;
    if r >= big_r {
        0.0
    } else {
        (1.0 - (r / big_r).powi(2)).powi(6)
    }
}

impl InitialData {
    pub fn build(&self, grid: Arc<Grid>, model: &DynamicModel) -> Result<DynamicState, DynamicsError> {
        let n = grid.n();
        let (u, partner) = match self {
            InitialData::Eigenmode { u_amplitude, v_amplitude } => {
                let phi = smallest_eigenpair_on(grid.clone(), model.moduli())?.u;
                (scaled(&phi, *u_amplitude), scaled(&phi, *v_amplitude))
            }
            InitialData::Bump { center, width, amplitude, v_scale } => {
                if center.len() != n || amplitude.len() != n {
                    return Err(DynamicsError::Input(format!("bump center and amplitude need {n} components")));
                }
                if !(*width > 0.0) {
                    return Err(DynamicsError::Input(format!("bump width must be positive, got {width}")));
                }
                let u = GridField::from_fn(grid.clone(), n, |x, out| {
                    let r = x.iter().zip(center).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
                    let p = bump_profile(r, *width);
                    for k in 0..n {
                        out[k] = amplitude[k] * p;
                    }
                });
                let v = scaled(&u, *v_scale);
                (u, v)
            }
        };
        let zero = GridField::zeros(grid, n);
        let (v, vt) = if model.is_coupled() { (Some(partner), Some(zero.clone())) } else { (None, None) };
        DynamicState::new(u, zero, v, vt)
    }

    /// Center and radius of the support, when compact.
    pub fn support(&self) -> Option<(Vec<f64>, f64)> {
        match self {
            InitialData::Bump { center, width, .. } => Some((center.clone(), 4.0 * width)),
            InitialData::Eigenmode { .. } => None,
        }
    }
}

fn scaled(f: &GridField, s: f64) -> GridField {
    let mut g = f.clone();
    g.values_mut().iter_mut().for_each(|x| *x *= s);
    g
}

/// Time for a wave of speed `c` to travel from the support ball to the boundary,
/// with the boundary distance taken over the facet centers of the mesh at `h`.
pub fn wave_contact_time(domain: &DomainSpec, h: f64, center: &[f64], radius: f64, c: f64) -> Result<f64, DynamicsError> {
    let mesh = BoundaryMesh::new(domain, h)?;
    let dist = mesh
        .facets()
        .iter()
        .map(|f| f.x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min);
    Ok(((dist - radius) / c).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_is_compact_and_peaked() {
        assert_eq!(bump_profile(0.0, 0.1), 1.0);
        assert_eq!(bump_profile(0.4, 0.1), 0.0);
        assert!(bump_profile(0.1, 0.1) > 0.5);
    }

    #[test]
    fn contact_time_in_a_box() {
        let d = DomainSpec::rectangle(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let t = wave_contact_time(&d, 1.0 / 32.0, &[0.0, 0.0], 0.6, 2f64.sqrt()).unwrap();
        let exact = 1.4 / 2f64.sqrt();
        assert!(t >= exact - 1e-12 && t < exact + 1e-3, "{t}");
    }
}

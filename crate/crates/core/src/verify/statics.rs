use crate::domain::{BoundaryInterpolator, BoundaryMesh, GridField};
use crate::elasticity::lagrangians::{forced_static_lagrangian, static_lagrangian};
use crate::elasticity::ElasticModuli;
use crate::statics::StaticProblem;
use crate::symbolic::{derive_scaling_identity, ScalingIdentity, VectorFieldGenerator};

use super::eval::{nodal_gradients, Evaluator, Model, PointState};
use super::report::{IdentityId, IdentityReport};
use super::VerifyError;

/// Machine derivation of the static dilation identity, with or without a source.
pub fn static_identity(n: usize, forced: bool) -> Result<ScalingIdentity, VerifyError> {
    let v = VectorFieldGenerator::static_dilation(n)?;
    let c = ElasticModuli::general_symbolic;
    let l = if forced { forced_static_lagrangian(n, &c) } else { static_lagrangian(n, &c) };
    Ok(derive_scaling_identity(&v, &l)?)
}

/// Boundary data shared by the static identities: facets with the fitted
/// gradient at each facet.
struct BoundaryGradients {
    mesh: BoundaryMesh,
    grads: Vec<Vec<f64>>,
}

fn boundary_gradients(u: &GridField) -> Result<BoundaryGradients, VerifyError> {
    let grid = u.grid();
    let mesh = BoundaryMesh::new(grid.domain(), grid.h())?;
    let interp = BoundaryInterpolator::new(grid, &mesh)?;
    let n = grid.n();
    let grads = (0..mesh.facets().len())
        .map(|fi| {
            let mut g = vec![0.0; u.comps() * n];
            interp.gradient(u, fi, &mut g);
            g
        })
        .collect();
    Ok(BoundaryGradients { mesh, grads })
}

/// Normal derivative `w^c = ∂_k u^c ν_k`.
fn normal_derivative(g: &[f64], normal: &[f64], comps: usize) -> Vec<f64> {
    let n = normal.len();
    (0..comps).map(|c| (0..n).map(|k| g[c * n + k] * normal[k]).sum()).collect()
}

/// `∫ ½ C ∇u ∇u dx`, the energy scale of a report.
pub fn stored_energy(u: &GridField, c: &ElasticModuli) -> Result<f64, VerifyError> {
    let grid = u.grid();
    let n = grid.n();
    let du = nodal_gradients(u)?;
    let dens: Vec<f64> = (0..grid.len()).map(|m| 0.5 * c.contract(&du[m * n * n..(m + 1) * n * n], &du[m * n * n..(m + 1) * n * n])).collect();
    Ok(grid.volume_integral(&dens))
}

fn sides(id: &ScalingIdentity, p: &StaticProblem, u: &GridField) -> Result<(f64, f64, BoundaryGradients), VerifyError> {
    let grid = u.grid();
    let n = grid.n();
    let model = Model {
        moduli: &p.moduli,
        potential: Some(&p.potential),
        coupling: None,
        source: p.source.as_deref(),
    };
    let mut interior = Evaluator::new(&id.interior, model)?;
    let needs_grad = interior.slots().iter().any(|a| a.is_jet());
    let du = if needs_grad { nodal_gradients(u)? } else { Vec::new() };
    let mut x = vec![0.0; n];
    let weights = grid.weights();
    let dens: Vec<f64> = (0..grid.len())
        .map(|m| {
            if weights[m] == 0.0 {
                return 0.0;
            }
            grid.point_into(m, &mut x);
            let st = PointState {
                x: &x,
                u: u.at(m),
                du: if needs_grad { &du[m * n * n..(m + 1) * n * n] } else { &[] },
                ..Default::default()
            };
            interior.eval(&st)
        })
        .collect();
    let lhs = grid.volume_integral(&dens);

    let bg = boundary_gradients(u)?;
    let mut flux = Evaluator::new(&id.dirichlet_normal_flux(), model)?;
    let zero = vec![0.0; n];
    let vals: Vec<f64> = bg
        .mesh
        .facets()
        .iter()
        .zip(&bg.grads)
        .map(|(f, g)| {
            let w = normal_derivative(g, &f.normal, n);
            let st = PointState { x: &f.x, u: &zero, ut: &zero, normal: &f.normal, wu: &w, ..Default::default() };
            flux.eval(&st)
        })
        .collect();
    let rhs = bg.mesh.integrate(&vals)?;
    Ok((lhs, rhs, bg))
}

/// Both sides of the static Dirichlet identity
/// `∫ [(n−2)/2 u·f(u) − nF(u)] dx = −½ ∫_∂ C ∇u ∇u (x,ν) ds`
/// with the interior density and flux taken from the machine derivation.
pub fn verify_pohozhaev(u: &GridField, p: &StaticProblem) -> Result<IdentityReport, VerifyError> {
    if p.source.is_some() {
        return Err(VerifyError::Input("problem has a source; use verify_pohozhaev_generalized".into()));
    }
    let id = static_identity(p.n(), false)?;
    let (lhs, rhs, _) = sides(&id, p, u)?;
    Ok(IdentityReport::new(IdentityId::Pohozhaev, u.grid().h(), lhs, rhs, stored_energy(u, &p.moduli)?))
}

/// The static identity for `L − g(x)·u`: the interior gains the terms produced
/// by the explicit `x`-dependence of `g`, as derived symbolically.
pub fn verify_pohozhaev_generalized(u: &GridField, p: &StaticProblem) -> Result<IdentityReport, VerifyError> {
    let id = static_identity(p.n(), true)?;
    let (lhs, rhs, _) = sides(&id, p, u)?;
    Ok(IdentityReport::new(IdentityId::PohozhaevGeneralized, u.grid().h(), lhs, rhs, stored_energy(u, &p.moduli)?))
}

/// Isotropic form: the right side is `−½ ∫ [μ|∇u|² + (μ+λ)(div u)²](x,ν) ds`.
/// The printed specialization (with an extra ½ on both terms) is reported alongside.
pub fn verify_pohozhaev_isotropic(u: &GridField, p: &StaticProblem) -> Result<IdentityReport, VerifyError> {
    use num_traits::ToPrimitive;
    let lame = p.moduli.lame().ok_or_else(|| VerifyError::Input("isotropic variant needs Lamé moduli".into()))?;
    if p.source.is_some() {
        return Err(VerifyError::Input("problem has a source; use verify_pohozhaev_generalized".into()));
    }
    let (mu, la) = (lame.mu().to_f64().unwrap_or(f64::NAN), lame.lambda().to_f64().unwrap_or(f64::NAN));
    let id = static_identity(p.n(), false)?;
    let (lhs, _, bg) = sides(&id, p, u)?;
    let n = p.n();
    let mut derived = Vec::new();
    let mut printed = Vec::new();
    for (f, g) in bg.mesh.facets().iter().zip(&bg.grads) {
        let w = normal_derivative(g, &f.normal, n);
        let grad2: f64 = w.iter().map(|v| v * v).sum();
        let div: f64 = (0..n).map(|k| w[k] * f.normal[k]).sum();
        let xn: f64 = (0..n).map(|k| f.x[k] * f.normal[k]).sum();
        derived.push(-0.5 * (mu * grad2 + (mu + la) * div * div) * xn);
        printed.push(-0.5 * (0.5 * mu * grad2 + 0.5 * (mu + la) * div * div) * xn);
    }
    let rhs = bg.mesh.integrate(&derived)?;
    let mut r = IdentityReport::new(IdentityId::PohozhaevIsotropic, u.grid().h(), lhs, rhs, stored_energy(u, &p.moduli)?);
    r.reference_rhs = Some(bg.mesh.integrate(&printed)?);
    r.notes.push("printed specialization carries an extra factor 1/2 inside the bracket".into());
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::elasticity::{BodyForcePotential, IsotropicModuli};

    #[test]
    fn zero_field_has_zero_sides() {
        let c = ElasticModuli::from_lame(&IsotropicModuli::from_f64(1.0, 0.5).unwrap(), 2);
        let p = StaticProblem::new(DomainSpec::ball(1.0, vec![0.0; 2]).unwrap(), c, BodyForcePotential::zero(), 0.125).unwrap();
        let u = GridField::zeros(p.grid().unwrap(), 2);
        let r = verify_pohozhaev(&u, &p).unwrap();
        assert_eq!((r.lhs, r.rhs, r.relative_gap), (0.0, 0.0, 0.0));
    }

    #[test]
    fn interior_density_in_two_dimensions() {
        // n = 2: only −2F survives
        let id = static_identity(2, false).unwrap();
        assert_eq!(id.interior.to_string(), "-2*F");
    }
}

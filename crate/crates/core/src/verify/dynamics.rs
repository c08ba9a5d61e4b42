use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::ToPrimitive;

use crate::domain::{BoundaryInterpolator, BoundaryMesh, Grid};
use crate::dynamics::{DynamicModel, DynamicState, Integrator};
use crate::elasticity::lagrangians::{coupled_lagrangian, dynamic_lagrangian};
use crate::elasticity::ElasticModuli;
use crate::symbolic::{derive_scaling_identity, ScalingIdentity, VectorFieldGenerator};

use super::eval::{nodal_gradients, Evaluator, Model, PointState};
use super::report::{IdentityId, IdentityReport, TimeSeries};
use super::VerifyError;

/// Machine derivation of the dilation identity for a dynamic model.
pub fn dynamic_identity(model: &DynamicModel) -> Result<ScalingIdentity, VerifyError> {
    let n = model.n();
    let c = ElasticModuli::general_symbolic;
    let (v, l) = match model {
        DynamicModel::Potential { .. } => (VectorFieldGenerator::dynamic_dilation(n)?, dynamic_lagrangian(n, &c)),
        DynamicModel::Coupled { a, b, .. } => {
            (VectorFieldGenerator::hamiltonian_dilation(n, a, b)?, coupled_lagrangian(n, &c))
        }
    };
    Ok(derive_scaling_identity(&v, &l)?)
}

fn eval_model(model: &DynamicModel) -> Model<'_> {
    match model {
        DynamicModel::Potential { moduli, potential } => {
            Model { moduli, potential: Some(potential), coupling: None, source: None }
        }
        DynamicModel::Coupled { moduli, coupling, .. } => {
            Model { moduli, potential: None, coupling: Some(coupling), source: None }
        }
    }
}

struct Boundary<'m> {
    flux: Evaluator<'m>,
    mesh: BoundaryMesh,
    interp: BoundaryInterpolator,
}

/// The functional `M = ∫ Pᵗ dx` and both parts of its time derivative,
/// with every density compiled from the machine identity.
pub struct DynamicFunctionals<'m> {
    model: &'m DynamicModel,
    grid: Arc<Grid>,
    density: Evaluator<'m>,
    interior: Evaluator<'m>,
    boundary: Option<Boundary<'m>>,
}

impl<'m> DynamicFunctionals<'m> {
    /// `with_boundary = false` is the free-space mode.
    pub fn new(model: &'m DynamicModel, grid: Arc<Grid>, with_boundary: bool) -> Result<Self, VerifyError> {
        let id = dynamic_identity(model)?;
        let em = eval_model(model);
        let density = Evaluator::new(id.time_density().expect("dynamic identity has a time component"), em)?;
        let interior = Evaluator::new(&id.interior, em)?;
        let boundary = if with_boundary {
            let mesh = BoundaryMesh::new(grid.domain(), grid.h())?;
            let interp = BoundaryInterpolator::new(&grid, &mesh)?;
            Some(Boundary { flux: Evaluator::new(&id.dirichlet_normal_flux(), em)?, mesh, interp })
        } else {
            None
        };
        Ok(DynamicFunctionals { model, grid, density, interior, boundary })
    }

    fn check(&self, s: &DynamicState) -> Result<(), VerifyError> {
        if !Arc::ptr_eq(s.grid(), &self.grid) || s.v.is_some() != self.model.is_coupled() {
            return Err(VerifyError::Input("state does not match the functional's grid or model".into()));
        }
        Ok(())
    }

    fn volume(ev: &mut Evaluator, grid: &Grid, s: &DynamicState) -> Result<f64, VerifyError> {
        let n = grid.n();
        let needs_grad = ev.slots().iter().any(|a| a.is_jet());
        let (du, dv) = if needs_grad {
            (nodal_gradients(&s.u)?, s.v.as_ref().map(nodal_gradients).transpose()?.unwrap_or_default())
        } else {
            (Vec::new(), Vec::new())
        };
        let weights = grid.weights();
        let mut x = vec![0.0; n];
        let nn = n * n;
        let dens: Vec<f64> = (0..grid.len())
            .map(|m| {
                if weights[m] == 0.0 {
                    return 0.0;
                }
                grid.point_into(m, &mut x);
                let du_m = if du.is_empty() { &[][..] } else { &du[m * nn..(m + 1) * nn] };
                let dv_m = if dv.is_empty() { &[][..] } else { &dv[m * nn..(m + 1) * nn] };
                let (vm, vtm) = match (&s.v, &s.vt) {
                    (Some(v), Some(vt)) => (v.at(m), vt.at(m)),
                    _ => (&[][..], &[][..]),
                };
                let st = PointState {
                    x: &x,
                    t: s.t,
                    u: s.u.at(m),
                    ut: s.ut.at(m),
                    du: du_m,
                    v: vm,
                    vt: vtm,
                    dv: dv_m,
                    ..Default::default()
                };
                ev.eval(&st)
            })
            .collect();
        Ok(grid.volume_integral(&dens))
    }

    /// `M(t) = ∫ Pᵗ dx`.
    pub fn functional(&mut self, s: &DynamicState) -> Result<f64, VerifyError> {
        self.check(s)?;
        Self::volume(&mut self.density, &self.grid, s)
    }

    /// `∫ interior dx`.
    pub fn rhs_interior(&mut self, s: &DynamicState) -> Result<f64, VerifyError> {
        self.check(s)?;
        Self::volume(&mut self.interior, &self.grid, s)
    }

    /// `−∫_∂ P·ν ds` under Dirichlet data; zero in free-space mode.
    pub fn rhs_boundary(&mut self, s: &DynamicState) -> Result<f64, VerifyError> {
        self.check(s)?;
        let Some(b) = self.boundary.as_mut() else {
            return Ok(0.0);
        };
        let n = self.grid.n();
        let zero = vec![0.0; n];
        let mut g = vec![0.0; n * n];
        let mut vals = Vec::with_capacity(b.mesh.facets().len());
        for (fi, f) in b.mesh.facets().iter().enumerate() {
            b.interp.gradient(&s.u, fi, &mut g);
            let wu = normal_derivative(&g, &f.normal);
            let wv = match &s.v {
                Some(v) => {
                    b.interp.gradient(v, fi, &mut g);
                    normal_derivative(&g, &f.normal)
                }
                None => Vec::new(),
            };
            let st = PointState {
                x: &f.x,
                t: s.t,
                u: &zero,
                ut: &zero,
                v: &zero,
                vt: &zero,
                normal: &f.normal,
                wu: &wu,
                wv: &wv,
                ..Default::default()
            };
            vals.push(b.flux.eval(&st));
        }
        Ok(-b.mesh.integrate(&vals)?)
    }

    /// Interior integral with the printed coupled density `(n−1)/2 (a u·H_u + b v·H_v)`;
    /// `None` for the potential model, where printed and derived agree.
    pub fn printed_interior(&self, s: &DynamicState) -> Result<Option<f64>, VerifyError> {
        self.check(s)?;
        let DynamicModel::Coupled { coupling, a, b, .. } = self.model else {
            return Ok(None);
        };
        let v = s.v.as_ref().expect("checked");
        let n = self.grid.n();
        let (a, b) = (a.to_f64().unwrap_or(f64::NAN), b.to_f64().unwrap_or(f64::NAN));
        let (mut hu, mut hv) = (vec![0.0; n], vec![0.0; n]);
        let dens: Vec<f64> = (0..self.grid.len())
            .map(|m| {
                let (u, vm) = (s.u.at(m), v.at(m));
                coupling.gradients(u, vm, &mut hu, &mut hv);
                let uh: f64 = (0..n).map(|k| u[k] * hu[k]).sum();
                let vh: f64 = (0..n).map(|k| vm[k] * hv[k]).sum();
                0.5 * (n as f64 - 1.0) * (a * uh + b * vh)
            })
            .collect();
        Ok(Some(self.grid.volume_integral(&dens)))
    }
}

fn normal_derivative(g: &[f64], normal: &[f64]) -> Vec<f64> {
    let n = normal.len();
    (0..g.len() / n).map(|c| (0..n).map(|k| g[c * n + k] * normal[k]).sum()).collect()
}

/// Functional values recorded around one sample time.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub m_prev: f64,
    pub m: f64,
    pub m_next: f64,
    pub rhs_interior: f64,
    pub rhs_boundary: f64,
    pub printed_interior: Option<f64>,
    pub energy: f64,
}

/// Stored functional samples of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub id: IdentityId,
    pub h: f64,
    pub dt: f64,
    /// Last time touched by the run (the final sample plus one step).
    pub end_time: f64,
    /// Wave-contact time of the initial support, for free-space runs.
    pub contact_time: Option<f64>,
    pub samples: Vec<Sample>,
}

/// Run `state` to `horizon` and record `M` at `t ± dt` and the right side at
/// `count` equally spaced sample times `j·horizon/count`, `j = 1..=count`.
pub fn record_trajectory(
    it: &Integrator,
    mut state: DynamicState,
    id: IdentityId,
    horizon: f64,
    count: usize,
    contact_time: Option<f64>,
) -> Result<Trajectory, VerifyError> {
    if !id.is_dynamic() {
        return Err(VerifyError::Input(format!("{id} is not a dynamic identity")));
    }
    if (id == IdentityId::HamiltonianConformal) != it.model().is_coupled() {
        return Err(VerifyError::Input(format!("{id} does not match the model")));
    }
    if state.step != 0 {
        return Err(VerifyError::Input("trajectory must start from step 0".into()));
    }
    let dt = it.dt();
    let total = (horizon / dt).round() as usize;
    if count == 0 || total == 0 || (total as f64 * dt - horizon).abs() > 1e-9 * horizon || !total.is_multiple_of(count) {
        return Err(VerifyError::Input(format!(
            "horizon {horizon} must be a multiple of dt {dt} with a step count divisible by {count}"
        )));
    }
    let stride = total / count;
    if stride < 2 {
        return Err(VerifyError::Input("samples need at least two steps between them".into()));
    }
    let free = id == IdentityId::MorawetzFreespace;
    let mut fx = DynamicFunctionals::new(it.model(), it.grid().clone(), !free)?;
    let mut m_at = BTreeMap::new();
    let mut partial: BTreeMap<usize, Sample> = BTreeMap::new();
    for k in 0..=total + 1 {
        if k > 0 {
            it.step(&mut state)?;
        }
        let near = k >= stride - 1 && (k + 1) % stride <= 2;
        if near {
            m_at.insert(k, fx.functional(&state)?);
        }
        if k >= stride && k % stride == 0 {
            partial.insert(
                k,
                Sample {
                    t: state.t,
                    m_prev: 0.0,
                    m: m_at[&k],
                    m_next: 0.0,
                    rhs_interior: fx.rhs_interior(&state)?,
                    rhs_boundary: fx.rhs_boundary(&state)?,
                    printed_interior: fx.printed_interior(&state)?,
                    energy: it.energy(&state)?,
                },
            );
        }
    }
    let samples = partial
        .into_iter()
        .map(|(k, mut s)| {
            s.m_prev = m_at[&(k - 1)];
            s.m_next = m_at[&(k + 1)];
            s
        })
        .collect();
    Ok(Trajectory {
        id,
        h: it.grid().h(),
        dt,
        end_time: state.t,
        contact_time: if free { contact_time } else { None },
        samples,
    })
}

fn series_report(traj: &Trajectory) -> IdentityReport {
    let mut ts = TimeSeries::default();
    let mut worst = 0;
    let mut scale = 0.0f64;
    for (j, s) in traj.samples.iter().enumerate() {
        let dm = (s.m_next - s.m_prev) / (2.0 * traj.dt);
        let rhs = s.rhs_interior + s.rhs_boundary;
        let gap = dm - rhs;
        ts.t.push(s.t);
        ts.m.push(s.m);
        ts.dm_dt.push(dm);
        ts.rhs_interior.push(s.rhs_interior);
        ts.rhs_boundary.push(s.rhs_boundary);
        ts.gap.push(gap);
        ts.energy.push(s.energy);
        scale = scale.max(dm.abs()).max(rhs.abs()).max(s.energy.abs());
        if gap.abs() > ts.gap[worst].abs() {
            worst = j;
        }
    }
    let (lhs, rhs) = if ts.is_empty() { (0.0, 0.0) } else { (ts.dm_dt[worst], ts.rhs_interior[worst] + ts.rhs_boundary[worst]) };
    let mut r = IdentityReport::new(traj.id, traj.h, lhs, rhs, scale);
    r.dt = Some(traj.dt);
    r.gap = ts.gap.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    r.relative_gap = r.gap / r.scale;
    if let Some(p) = traj.samples.get(worst).and_then(|s| s.printed_interior) {
        r.reference_rhs = Some(p + traj.samples[worst].rhs_boundary);
    }
    r.series = Some(ts);
    r
}

/// Centered `dM/dt` against interior plus boundary parts at every sample;
/// the report carries the largest gap over the window, relative to the window scale.
pub fn verify_morawetz(traj: &Trajectory) -> Result<IdentityReport, VerifyError> {
    match traj.id {
        IdentityId::Morawetz => Ok(series_report(traj)),
        IdentityId::MorawetzFreespace => {
            let contact = traj
                .contact_time
                .ok_or_else(|| VerifyError::Input("free-space mode needs the wave-contact time".into()))?;
            if traj.end_time > contact {
                return Err(VerifyError::Window { horizon: traj.end_time, contact });
            }
            let mut r = series_report(traj);
            r.notes.push(format!("boundary term omitted; run ends at {:.4} before contact at {:.4}", traj.end_time, contact));
            Ok(r)
        }
        other => Err(VerifyError::Input(format!("{other} is not a Morawetz-type trajectory"))),
    }
}

/// As `verify_morawetz` for the coupled system; the printed interior density is
/// reported through `reference_rhs`.
pub fn verify_hamiltonian_conformal(traj: &Trajectory) -> Result<IdentityReport, VerifyError> {
    if traj.id != IdentityId::HamiltonianConformal {
        return Err(VerifyError::Input(format!("{} is not a coupled trajectory", traj.id)));
    }
    let mut r = series_report(traj);
    r.notes.push("derived interior density carries −(n+1)H in addition to the printed one".into());
    Ok(r)
}

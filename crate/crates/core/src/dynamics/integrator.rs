use std::sync::Arc;

use num_rational::BigRational;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{pairwise_sum, Grid, GridField};
use crate::elasticity::{BodyForcePotential, CouplingPotential, ElasticModuli};
use crate::statics::ElasticOperator;

use super::DynamicsError;

pub const DEFAULT_CFL: f64 = 0.5;

/// The two hyperbolic systems: `u_tt = C u_kl + f(u)`, and the coupled pair
/// `u_tt = C u_kl + H_v`, `v_tt = C v_kl + H_u`.
#[derive(Clone, Debug)]
pub enum DynamicModel {
    Potential { moduli: ElasticModuli, potential: BodyForcePotential },
    Coupled { moduli: ElasticModuli, coupling: CouplingPotential, a: BigRational, b: BigRational },
}

impl DynamicModel {
    pub fn potential(moduli: ElasticModuli, potential: BodyForcePotential) -> Result<Self, DynamicsError> {
        let potential = potential.for_dimension(moduli.n())?;
        Ok(DynamicModel::Potential { moduli, potential })
    }

    /// Rejects odd dimensions and weights with `a + b ≠ 2`.
    pub fn coupled(
        moduli: ElasticModuli,
        coupling: CouplingPotential,
        a: BigRational,
        b: BigRational,
    ) -> Result<Self, DynamicsError> {
        let two = BigRational::one() + BigRational::one();
        if &a + &b != two {
            return Err(DynamicsError::Precondition(format!("weights must satisfy a + b = 2, got a = {a}, b = {b}")));
        }
        if !moduli.n().is_multiple_of(2) {
            return Err(DynamicsError::Precondition(format!(
                "the coupled system needs an even spatial dimension, got n = {}",
                moduli.n()
            )));
        }
        Ok(DynamicModel::Coupled { moduli, coupling, a, b })
    }

    pub fn moduli(&self) -> &ElasticModuli {
        match self {
            DynamicModel::Potential { moduli, .. } | DynamicModel::Coupled { moduli, .. } => moduli,
        }
    }

    pub fn n(&self) -> usize {
        self.moduli().n()
    }

    pub fn is_coupled(&self) -> bool {
        matches!(self, DynamicModel::Coupled { .. })
    }
}

/// State of a run. `v`, `vt` are present exactly for the coupled system.
#[derive(Clone, Debug)]
pub struct DynamicState {
    pub t: f64,
    pub step: usize,
    pub u: GridField,
    pub ut: GridField,
    pub v: Option<GridField>,
    pub vt: Option<GridField>,
    /// Accelerations at the current positions, kept between steps.
    acc: Option<(Vec<f64>, Vec<f64>)>,
}

impl DynamicState {
    pub fn new(u: GridField, ut: GridField, v: Option<GridField>, vt: Option<GridField>) -> Result<Self, DynamicsError> {
        let grid = u.grid().clone();
        let same = |f: &GridField| Arc::ptr_eq(f.grid(), &grid) && f.comps() == u.comps();
        if !same(&ut) || v.as_ref().is_some_and(|f| !same(f)) || vt.as_ref().is_some_and(|f| !same(f)) {
            return Err(DynamicsError::Input("state fields must share one grid and component count".into()));
        }
        if v.is_some() != vt.is_some() {
            return Err(DynamicsError::Input("partner field needs both v and v_t".into()));
        }
        let mut s = DynamicState { t: 0.0, step: 0, u, ut, v, vt, acc: None };
        for f in s.fields_mut() {
            f.enforce_dirichlet();
        }
        Ok(s)
    }

    pub fn zeros(grid: Arc<Grid>, coupled: bool) -> Self {
        let n = grid.n();
        let z = GridField::zeros(grid, n);
        let partner = coupled.then(|| z.clone());
        DynamicState { t: 0.0, step: 0, u: z.clone(), ut: z, v: partner.clone(), vt: partner, acc: None }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.u.grid()
    }

    /// Flip every velocity; the stored accelerations stay valid.
    pub fn reverse(&mut self) {
        for f in [Some(&mut self.ut), self.vt.as_mut()].into_iter().flatten() {
            f.values_mut().iter_mut().for_each(|x| *x = -*x);
        }
    }

    fn fields_mut(&mut self) -> impl Iterator<Item = &mut GridField> {
        [Some(&mut self.u), Some(&mut self.ut), self.v.as_mut(), self.vt.as_mut()].into_iter().flatten()
    }

    fn is_finite(&self) -> bool {
        [Some(&self.u), Some(&self.ut), self.v.as_ref(), self.vt.as_ref()]
            .into_iter()
            .flatten()
            .all(|f| f.values().iter().all(|x| x.is_finite()))
    }
}

/// Velocity-Verlet integrator with a fixed step on one grid.
pub struct Integrator {
    model: DynamicModel,
    op: ElasticOperator,
    grid: Arc<Grid>,
    dt: f64,
    cfl_limit: f64,
    stability_limit: f64,
}

impl Integrator {
    /// Checks `dt ≤ cfl·h/c_max` and the discrete limit `dt·√ρ(A) < 2`.
    pub fn new(grid: Arc<Grid>, model: DynamicModel, dt: f64, cfl: f64) -> Result<Self, DynamicsError> {
        if grid.n() != model.n() {
            return Err(DynamicsError::Input(format!("{}-dimensional model on a {}-dimensional grid", model.n(), grid.n())));
        }
        if !(dt > 0.0 && dt.is_finite()) || !(cfl > 0.0 && cfl.is_finite()) {
            return Err(DynamicsError::Input(format!("dt and cfl must be positive, got dt = {dt}, cfl = {cfl}")));
        }
        let c = model.moduli().max_wave_speed();
        let cfl_limit = cfl * grid.h() / c;
        if dt > cfl_limit * (1.0 + 1e-12) {
            return Err(DynamicsError::Cfl { dt, limit: cfl_limit });
        }
        let op = ElasticOperator::new(grid.clone(), model.moduli());
        let rho = spectral_radius(&op, &grid);
        let stability_limit = 2.0 / (1.05 * rho).sqrt();
        if dt >= stability_limit {
            return Err(DynamicsError::Unstable { dt, limit: stability_limit });
        }
        Ok(Integrator { model, op, grid, dt, cfl_limit, stability_limit })
    }

    pub fn with_default_cfl(grid: Arc<Grid>, model: DynamicModel) -> Result<Self, DynamicsError> {
        let dt = DEFAULT_CFL * grid.h() / model.moduli().max_wave_speed();
        Self::new(grid, model, dt, DEFAULT_CFL)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn model(&self) -> &DynamicModel {
        &self.model
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn cfl_limit(&self) -> f64 {
        self.cfl_limit
    }

    pub fn stability_limit(&self) -> f64 {
        self.stability_limit
    }

    fn check(&self, s: &DynamicState) -> Result<(), DynamicsError> {
        if !Arc::ptr_eq(s.grid(), &self.grid) {
            return Err(DynamicsError::Input("state lives on a different grid".into()));
        }
        if s.v.is_some() != self.model.is_coupled() {
            return Err(DynamicsError::Input("partner fields must be present exactly for the coupled system".into()));
        }
        Ok(())
    }

    /// `a = −A u + f(u)` (and the partner rows) on inside nodes, zero elsewhere.
    fn acceleration(&self, s: &DynamicState) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.n();
        let mut au = vec![0.0; s.u.values().len()];
        self.op.apply(s.u.values(), &mut au);
        au.iter_mut().for_each(|x| *x = -*x);
        let mut av = Vec::new();
        match &self.model {
            DynamicModel::Potential { potential, .. } => {
                if !potential.is_zero() {
                    let mut f = vec![0.0; n];
                    for &node in self.grid.inside_nodes() {
                        potential.gradient(s.u.at(node), &mut f);
                        for k in 0..n {
                            au[node * n + k] += f[k];
                        }
                    }
                }
            }
            DynamicModel::Coupled { coupling, .. } => {
                let v = s.v.as_ref().expect("checked by caller");
                av = vec![0.0; v.values().len()];
                self.op.apply(v.values(), &mut av);
                av.iter_mut().for_each(|x| *x = -*x);
                let (mut hu, mut hv) = (vec![0.0; n], vec![0.0; n]);
                for &node in self.grid.inside_nodes() {
                    coupling.gradients(s.u.at(node), v.at(node), &mut hu, &mut hv);
                    for k in 0..n {
                        au[node * n + k] += hv[k];
                        av[node * n + k] += hu[k];
                    }
                }
            }
        }
        (au, av)
    }

    /// One velocity-Verlet step: half kick, drift, half kick.
    pub fn step(&self, s: &mut DynamicState) -> Result<(), DynamicsError> {
        self.check(s)?;
        let dt = self.dt;
        if s.acc.is_none() {
            s.acc = Some(self.acceleration(s));
        }
        let (au, av) = s.acc.take().expect("just filled");
        kick(&mut s.ut, &au, 0.5 * dt);
        drift(&mut s.u, &s.ut, dt);
        if let (Some(v), Some(vt)) = (s.v.as_mut(), s.vt.as_mut()) {
            kick(vt, &av, 0.5 * dt);
            drift(v, vt, dt);
        }
        let (au, av) = self.acceleration(s);
        kick(&mut s.ut, &au, 0.5 * dt);
        if let Some(vt) = s.vt.as_mut() {
            kick(vt, &av, 0.5 * dt);
        }
        s.acc = Some((au, av));
        s.step += 1;
        s.t = s.step as f64 * dt;
        if !s.is_finite() {
            return Err(DynamicsError::NonFinite { step: s.step });
        }
        Ok(())
    }

    pub fn run(&self, s: &mut DynamicState, steps: usize) -> Result<(), DynamicsError> {
        for _ in 0..steps {
            self.step(s)?;
        }
        Ok(())
    }

    /// Discrete energy `Σ hⁿ [½|u_t|² + ½ u·Au − F(u)]`, or
    /// `Σ hⁿ [u_t·v_t + u·Av − H(u,v)]` for the coupled system.
    pub fn energy(&self, s: &DynamicState) -> Result<f64, DynamicsError> {
        self.check(s)?;
        let n = self.grid.n();
        let vol = self.grid.h().powi(n as i32);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut dens = Vec::with_capacity(self.grid.inside_nodes().len());
        match &self.model {
            DynamicModel::Potential { potential, .. } => {
                let mut au = vec![0.0; s.u.values().len()];
                self.op.apply(s.u.values(), &mut au);
                for &node in self.grid.inside_nodes() {
                    let u = s.u.at(node);
                    let e = 0.5 * dot(s.ut.at(node), s.ut.at(node)) + 0.5 * dot(u, &au[node * n..(node + 1) * n])
                        - potential.value(u);
                    dens.push(e * vol);
                }
            }
            DynamicModel::Coupled { coupling, .. } => {
                let (v, vt) = (s.v.as_ref().expect("checked"), s.vt.as_ref().expect("checked"));
                let mut av = vec![0.0; v.values().len()];
                self.op.apply(v.values(), &mut av);
                for &node in self.grid.inside_nodes() {
                    let u = s.u.at(node);
                    let e = dot(s.ut.at(node), vt.at(node)) + dot(u, &av[node * n..(node + 1) * n])
                        - coupling.value(u, v.at(node));
                    dens.push(e * vol);
                }
            }
        }
        Ok(pairwise_sum(&dens))
    }
}

fn kick(vel: &mut GridField, acc: &[f64], tau: f64) {
    vel.values_mut().iter_mut().zip(acc).for_each(|(v, a)| *v += tau * a);
}

fn drift(pos: &mut GridField, vel: &GridField, tau: f64) {
    pos.values_mut().iter_mut().zip(vel.values()).for_each(|(p, v)| *p += tau * v);
}

/// Power-iteration estimate of the spectral radius of `A` on the inside nodes.
fn spectral_radius(op: &ElasticOperator, grid: &Grid) -> f64 {
    let n = grid.n();
    let len = grid.len() * n;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = vec![0.0; len];
    for &node in grid.inside_nodes() {
        for k in 0..n {
            x[node * n + k] = rng.gen_range(-1.0..1.0);
        }
    }
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut y = vec![0.0; len];
    let mut rho = 0.0f64;
    for _ in 0..60 {
        let nx = norm(&x);
        if nx == 0.0 {
            break;
        }
        x.iter_mut().for_each(|a| *a /= nx);
        op.apply(&x, &mut y);
        rho = rho.max(norm(&y));
        std::mem::swap(&mut x, &mut y);
    }
    rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;
    use crate::elasticity::IsotropicModuli;
    use crate::symbolic::rat;

    fn square(h: f64) -> Arc<Grid> {
        Arc::new(Grid::new(DomainSpec::rectangle(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), h).unwrap())
    }

    fn iso(n: usize) -> ElasticModuli {
        ElasticModuli::from_lame(&IsotropicModuli::from_f64(1.0, 0.0).unwrap(), n)
    }

    #[test]
    fn zero_data_stays_zero() {
        let grid = square(1.0 / 16.0);
        let model = DynamicModel::potential(iso(2), BodyForcePotential::zero()).unwrap();
        let it = Integrator::with_default_cfl(grid.clone(), model).unwrap();
        let mut s = DynamicState::zeros(grid, false);
        it.run(&mut s, 20).unwrap();
        assert_eq!(s.u.max_abs(), 0.0);
        assert_eq!(s.ut.max_abs(), 0.0);
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let grid = square(1.0 / 16.0);
        let model = DynamicModel::potential(iso(2), BodyForcePotential::zero()).unwrap();
        let e = Integrator::new(grid, model, 1.0 / 16.0, DEFAULT_CFL).err().unwrap();
        assert!(matches!(e, DynamicsError::Cfl { .. }));
    }

    #[test]
    fn coupled_preconditions() {
        let h = CouplingPotential::bilinear(rat(1, 1));
        assert!(DynamicModel::coupled(iso(2), h.clone(), rat(1, 1), rat(1, 1)).is_ok());
        assert!(DynamicModel::coupled(iso(2), h.clone(), rat(2, 1), rat(1, 1)).is_err());
        assert!(DynamicModel::coupled(iso(3), h, rat(1, 1), rat(1, 1)).is_err());
    }
}

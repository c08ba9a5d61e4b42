use std::sync::Arc;

use elastid::domain::{DomainSpec, Grid, GridField};
use elastid::dynamics::*;
use elastid::elasticity::{BodyForcePotential, CouplingPotential, ElasticModuli, IsotropicModuli};
use elastid::statics::smallest_eigenpair_on;
use elastid::symbolic::rat;
use elastid::verify::*;
use proptest::prelude::*;

fn moduli(mu: f64, lambda: f64) -> ElasticModuli {
    ElasticModuli::from_lame(&IsotropicModuli::from_f64(mu, lambda).unwrap(), 2)
}

fn square_grid(h: f64) -> Arc<Grid> {
    Arc::new(Grid::new(DomainSpec::rectangle(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), h).unwrap())
}

fn quartic(c: (i64, i64)) -> BodyForcePotential {
    BodyForcePotential::power(rat(c.0, c.1), rat(4, 1)).unwrap()
}

fn bump(center: Vec<f64>, width: f64) -> InitialData {
    InitialData::Bump { center, width, amplitude: vec![1.0, -0.5], v_scale: 0.7 }
}

fn max_diff(a: &GridField, b: &GridField) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn eigenmode_oscillates_at_the_discrete_frequency() {
    let grid = square_grid(1.0 / 16.0);
    let c = moduli(1.0, 0.5);
    let model = DynamicModel::potential(c.clone(), BodyForcePotential::zero()).unwrap();
    let eig = smallest_eigenpair_on(grid.clone(), &c).unwrap();
    let omega = eig.kappa.sqrt();
    let h = grid.h();
    let it = Integrator::new(grid.clone(), model.clone(), h / 8.0, 0.5).unwrap();
    let mut s = InitialData::Eigenmode { u_amplitude: 1.0, v_amplitude: 0.0 }.build(grid.clone(), &model).unwrap();
    it.run(&mut s, 64).unwrap();
    let mut expect = eig.u.clone();
    expect.values_mut().iter_mut().for_each(|x| *x *= (omega * s.t).cos());
    assert!(max_diff(&s.u, &expect) < 1e-4 * eig.u.max_abs(), "{}", max_diff(&s.u, &expect));
}

#[test]
fn morawetz_functional_matches_the_eigenmode_closed_form() {
    // u = φ cos ωt, ‖φ‖ = 1, F = 0:  M = t κ/2 + (ω/2) sin ωt cos ωt
    let grid = square_grid(1.0 / 64.0);
    let c = moduli(1.0, 0.0);
    let model = DynamicModel::potential(c.clone(), BodyForcePotential::zero()).unwrap();
    let eig = smallest_eigenpair_on(grid.clone(), &c).unwrap();
    let omega = eig.kappa.sqrt();
    let mut fx = DynamicFunctionals::new(&model, grid.clone(), true).unwrap();
    for t in [0.0, 0.1, 0.25, 0.4] {
        let mut u = eig.u.clone();
        u.values_mut().iter_mut().for_each(|x| *x *= (omega * t).cos());
        let mut ut = eig.u.clone();
        ut.values_mut().iter_mut().for_each(|x| *x *= -omega * (omega * t).sin());
        let mut s = DynamicState::new(u, ut, None, None).unwrap();
        s.t = t;
        let m = fx.functional(&s).unwrap();
        let exact = t * eig.kappa / 2.0 + 0.5 * omega * (omega * t).sin() * (omega * t).cos();
        assert!((m - exact).abs() < 2e-2 * (1.0 + exact.abs()), "t={t} M={m} exact={exact}");
    }
}

#[test]
fn quartic_interior_density() {
    // F = |s|⁴/4 at n = 2: (n−1)/2 u·f − (n+1)F = 2F − 3F = −F
    let grid = square_grid(1.0 / 32.0);
    let model = DynamicModel::potential(moduli(1.0, 0.0), quartic((1, 4))).unwrap();
    let s = bump(vec![0.5, 0.5], 0.08).build(grid.clone(), &model).unwrap();
    let mut fx = DynamicFunctionals::new(&model, grid.clone(), true).unwrap();
    let got = fx.rhs_interior(&s).unwrap();
    let dens: Vec<f64> = (0..grid.len())
        .map(|i| {
            let q: f64 = s.u.at(i).iter().map(|x| x * x).sum();
            -0.25 * q * q
        })
        .collect();
    let want = grid.volume_integral(&dens);
    assert!(want < 0.0);
    assert!((got - want).abs() <= 1e-12 * want.abs(), "{got} vs {want}");
}

#[test]
fn zero_data_gives_a_zero_trajectory() {
    let grid = square_grid(1.0 / 16.0);
    let model = DynamicModel::potential(moduli(1.0, 1.0), quartic((-1, 4))).unwrap();
    let it = Integrator::new(grid.clone(), model, grid.h() / 4.0, 0.5).unwrap();
    let tr = record_trajectory(&it, DynamicState::zeros(grid.clone(), false), IdentityId::Morawetz, 0.25, 4, None).unwrap();
    for s in &tr.samples {
        assert_eq!((s.m, s.rhs_interior, s.rhs_boundary, s.energy), (0.0, 0.0, 0.0, 0.0));
    }
}

#[test]
fn free_space_mode_rejects_horizons_past_contact() {
    let dom = DomainSpec::rectangle(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
    let h = 1.0 / 16.0;
    let grid = Arc::new(Grid::new(dom.clone(), h).unwrap());
    let c = moduli(1.0, 0.0);
    let model = DynamicModel::potential(c.clone(), BodyForcePotential::zero()).unwrap();
    let init = bump(vec![0.0, 0.0], 0.1);
    let (cen, r) = init.support().unwrap();
    let contact = wave_contact_time(&dom, h, &cen, r, c.max_wave_speed()).unwrap();
    let it = Integrator::new(grid.clone(), model.clone(), h / 4.0, 0.5).unwrap();
    let long = record_trajectory(&it, init.build(grid.clone(), &model).unwrap(), IdentityId::MorawetzFreespace, 1.0, 4, Some(contact)).unwrap();
    assert!(matches!(verify_morawetz(&long), Err(VerifyError::Window { .. })));
    let short = record_trajectory(&it, init.build(grid.clone(), &model).unwrap(), IdentityId::MorawetzFreespace, 0.25, 4, Some(contact)).unwrap();
    assert!(verify_morawetz(&short).is_ok());
}

#[test]
fn trajectory_arguments_are_validated() {
    let grid = square_grid(1.0 / 16.0);
    let model = DynamicModel::potential(moduli(1.0, 0.0), BodyForcePotential::zero()).unwrap();
    let it = Integrator::new(grid.clone(), model, grid.h() / 4.0, 0.5).unwrap();
    let z = || DynamicState::zeros(grid.clone(), false);
    assert!(record_trajectory(&it, z(), IdentityId::HamiltonianConformal, 0.25, 4, None).is_err());
    assert!(record_trajectory(&it, z(), IdentityId::Morawetz, 0.25, 3, None).is_err());
    assert!(record_trajectory(&it, z(), IdentityId::Morawetz, 0.25, 16, None).is_err());
    assert!(record_trajectory(&it, z(), IdentityId::Morawetz, 0.2501, 4, None).is_err());
}

#[test]
fn coupled_preconditions() {
    let c = moduli(1.0, 0.0);
    let h = CouplingPotential::bilinear(rat(1, 1));
    assert!(DynamicModel::coupled(c.clone(), h.clone(), rat(1, 1), rat(2, 1)).is_err());
    let c3 = ElasticModuli::from_lame(&IsotropicModuli::from_f64(1.0, 0.0).unwrap(), 3);
    assert!(DynamicModel::coupled(c3, h.clone(), rat(1, 1), rat(1, 1)).is_err());
    assert!(DynamicModel::coupled(c, h, rat(1, 2), rat(3, 2)).is_ok());
}

fn reversal_error(model: DynamicModel, init: &InitialData, steps: usize) -> f64 {
    let grid = square_grid(1.0 / 16.0);
    let it = Integrator::new(grid.clone(), model.clone(), grid.h() / 4.0, 0.5).unwrap();
    let s0 = init.build(grid, &model).unwrap();
    let mut s = s0.clone();
    it.run(&mut s, steps).unwrap();
    s.reverse();
    it.run(&mut s, steps).unwrap();
    s.reverse();
    let mut err = max_diff(&s.u, &s0.u).max(max_diff(&s.ut, &s0.ut));
    if let (Some(v), Some(v0)) = (&s.v, &s0.v) {
        err = err.max(max_diff(v, v0));
    }
    err
}

#[test]
fn coupled_run_reverses() {
    let model = DynamicModel::coupled(moduli(1.0, 0.5), CouplingPotential::bilinear(rat(1, 1)), rat(1, 1), rat(1, 1)).unwrap();
    assert!(reversal_error(model, &bump(vec![0.5, 0.5], 0.08), 200) < 1e-10);
}

/// Largest energy excursion over a linear run to t = 0.5.
fn energy_drift(dt_div: f64) -> f64 {
    let grid = square_grid(1.0 / 32.0);
    let model = DynamicModel::potential(moduli(1.0, 0.5), BodyForcePotential::zero()).unwrap();
    let it = Integrator::new(grid.clone(), model.clone(), grid.h() / dt_div, 0.5).unwrap();
    let mut s = bump(vec![0.45, 0.5], 0.06).build(grid, &model).unwrap();
    let e0 = it.energy(&s).unwrap();
    let steps = (0.5 / it.dt()).round() as usize;
    let mut worst = 0.0f64;
    for _ in 0..steps {
        it.step(&mut s).unwrap();
        worst = worst.max((it.energy(&s).unwrap() - e0).abs());
    }
    worst / e0
}

#[test]
fn energy_drift_is_second_order() {
    let (a, b) = (energy_drift(4.0), energy_drift(8.0));
    let order = (a / b).log2();
    assert!(a < 5e-2 && order > 1.8, "drift {a:e} {b:e} order {order}");
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn nonlinear_runs_reverse(cx in 0.3f64..0.7, cy in 0.3f64..0.7, w in 0.04f64..0.09, steps in 10usize..120) {
        let model = DynamicModel::potential(moduli(1.0, 0.5), quartic((-1, 4))).unwrap();
        prop_assert!(reversal_error(model, &bump(vec![cx, cy], w), steps) < 1e-10);
    }

    #[test]
    fn contact_time_is_nonnegative(cx in -1.5f64..1.5, cy in -1.5f64..1.5, r in 0.0f64..1.0) {
        let dom = DomainSpec::rectangle(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
        let t = wave_contact_time(&dom, 1.0 / 8.0, &[cx, cy], r, 1.0).unwrap();
        let exact = (2.0 - cx.abs().max(cy.abs()) - r).max(0.0);
        prop_assert!(t >= 0.0 && t >= exact - 1e-12 && t <= exact + 1.0 / 16.0);
    }
}

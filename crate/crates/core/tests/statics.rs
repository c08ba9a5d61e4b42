use std::sync::Arc;

use elastid::domain::{DomainSpec, GridField};
use elastid::elasticity::*;
use elastid::statics::*;
use elastid::symbolic::rat;
use elastid::verify::*;
use num_rational::BigRational;
use proptest::prelude::*;

fn iso(mu: f64, lambda: f64, n: usize) -> ElasticModuli {
    ElasticModuli::from_lame(&IsotropicModuli::from_f64(mu, lambda).unwrap(), n)
}

fn unit_square() -> DomainSpec {
    DomainSpec::rectangle(vec![0.0; 2], vec![1.0; 2]).unwrap()
}

fn manufactured(h: f64) -> (StaticProblem, SineProduct) {
    let c = iso(1.0, 0.0, 2);
    let ex = SineProduct::first_component(vec![0.0; 2], vec![1.0; 2]);
    let src = ManufacturedSource::new(ex.clone(), c.clone(), BodyForcePotential::zero());
    (StaticProblem::new(unit_square(), c, BodyForcePotential::zero(), h).unwrap().with_source(Arc::new(src)), ex)
}

fn nodal_error(u: &GridField, ex: &SineProduct) -> f64 {
    let grid = u.grid();
    let mut want = [0.0; 2];
    grid.inside_nodes()
        .iter()
        .map(|&i| {
            ex.value(&grid.point(i), &mut want);
            u.at(i).iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[test]
fn manufactured_solution_converges() {
    let errs: Vec<f64> = [1.0 / 16.0, 1.0 / 32.0]
        .iter()
        .map(|&h| {
            let (p, ex) = manufactured(h);
            let sol = solve_static(&p, &GridField::zeros(p.grid().unwrap(), 2), &SolveOptions::default()).unwrap();
            assert!(sol.converged);
            nodal_error(&sol.u, &ex)
        })
        .collect();
    let order = (errs[0] / errs[1]).log2();
    assert!(errs[1] < 1e-2 && order > 1.5, "{errs:?} order {order}");
}

#[test]
fn solver_residual_agrees_with_independent_check() {
    let (p, _) = manufactured(1.0 / 16.0);
    let sol = solve_static(&p, &GridField::zeros(p.grid().unwrap(), 2), &SolveOptions::default()).unwrap();
    let indep = independent_residual(&p, &sol.u).unwrap();
    assert!((indep - sol.residual_norm).abs() <= 1e-9 * (1.0 + indep), "{indep} vs {}", sol.residual_norm);
}

#[test]
fn pohozhaev_routes_agree_on_the_disk_eigenpair() {
    let c = iso(1.0, 0.5, 2);
    let d = DomainSpec::ball(1.0, vec![0.0; 2]).unwrap();
    let e = smallest_eigenpair(&StaticProblem::new(d.clone(), c.clone(), BodyForcePotential::zero(), 1.0 / 32.0).unwrap()).unwrap();
    assert!(e.residual < 1e-6, "{}", e.residual);
    let q = StaticProblem::new(d, c, BodyForcePotential::quadratic(BigRational::from_float(e.kappa).unwrap()), 1.0 / 32.0).unwrap();
    let general = verify_pohozhaev(&e.u, &q).unwrap();
    let isotropic = verify_pohozhaev_isotropic(&e.u, &q).unwrap();
    assert!(general.relative_gap < 5e-2, "{}", general.relative_gap);
    assert!((general.rhs - isotropic.rhs).abs() < 5e-2 * general.rhs.abs(), "{} vs {}", general.rhs, isotropic.rhs);
}

#[test]
fn superquadratic_power_is_certified_in_three_dimensions() {
    let c = iso(1.0, 0.0, 3);
    let ball = DomainSpec::ball(1.0, vec![0.0; 3]).unwrap();
    let cert = nonexistence_certificate(&BodyForcePotential::power(rat(1, 1), rat(8, 1)).unwrap(), &c, &ball, 7);
    assert!(cert.holds(), "{cert}");
    assert_eq!(cert.clauses.len(), 4);
}

#[test]
fn negative_controls_fail_the_expected_clause() {
    let c = iso(1.0, 0.0, 3);
    let ball = DomainSpec::ball(1.0, vec![0.0; 3]).unwrap();
    let quad = nonexistence_certificate(&BodyForcePotential::power(rat(1, 1), rat(2, 1)).unwrap(), &c, &ball, 7);
    assert!(quad.failed_clause().unwrap().name.starts_with("(ii)"), "{quad}");
    let c2 = iso(1.0, 0.0, 2);
    let annulus = DomainSpec::annulus(0.5, 1.0).unwrap();
    let cert = nonexistence_certificate(&BodyForcePotential::power(rat(1, 1), rat(8, 1)).unwrap(), &c2, &annulus, 7);
    let star = cert.clauses.iter().find(|c| c.name.starts_with("(iv)")).unwrap();
    assert!(!star.holds && star.proven, "{cert}");
}

#[test]
fn zero_data_solves_to_zero() {
    let p = StaticProblem::new(unit_square(), iso(1.0, 1.0, 2), BodyForcePotential::zero(), 1.0 / 16.0).unwrap();
    let sol = solve_static(&p, &GridField::zeros(p.grid().unwrap(), 2), &SolveOptions::default()).unwrap();
    assert_eq!(sol.u.max_abs(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    #[test]
    fn stored_energy_is_a_positive_quadratic_form(seed in any::<u64>(), alpha in -3.0f64..3.0, mu in 0.2f64..2.0, lambda in 0.0f64..2.0) {
        let c = iso(mu, lambda, 2);
        let p = StaticProblem::new(unit_square(), c.clone(), BodyForcePotential::zero(), 1.0 / 12.0).unwrap();
        let u = random_field(p.grid().unwrap(), 2, 1.0, seed);
        let e = stored_energy(&u, &c).unwrap();
        let mut v = u.clone();
        v.values_mut().iter_mut().for_each(|x| *x *= alpha);
        let ev = stored_energy(&v, &c).unwrap();
        prop_assert!(e > 0.0);
        prop_assert!((ev - alpha * alpha * e).abs() <= 1e-10 * e.max(1.0));
    }

    #[test]
    fn residual_is_affine_in_the_field(seed in any::<u64>()) {
        let (p, _) = manufactured(1.0 / 8.0);
        let grid = p.grid().unwrap();
        let r0 = assemble_residual(&p, &GridField::zeros(grid.clone(), 2)).unwrap();
        let u = random_field(grid.clone(), 2, 1e-3, seed);
        let r1 = assemble_residual(&p, &u).unwrap();
        // linear model: residual(u) − residual(0) is odd in u
        let mut w = u.clone();
        w.values_mut().iter_mut().for_each(|x| *x = -*x);
        let r2 = assemble_residual(&p, &w).unwrap();
        for ((a, b), z) in r1.values().iter().zip(r2.values()).zip(r0.values()) {
            prop_assert!((a + b - 2.0 * z).abs() <= 1e-9 * (1.0 + z.abs()));
        }
    }
}

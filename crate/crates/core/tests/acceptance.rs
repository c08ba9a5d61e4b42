//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p elastid --test acceptance -- --nocapture`.
//! Criteria listed in `EXPECTED_FAILING` fail faithfully; the target asserts
//! that exactly those fail.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use elastid::derivation::{derivation_log, DerivationTarget};
use elastid::domain::{DomainSpec, Grid, GridField};
use elastid::dynamics::*;
use elastid::elasticity::lagrangians::{
    coupled_lagrangian, coupled_lagrangian_reference, dynamic_lagrangian, navier_energy, static_lagrangian,
    static_strain_lagrangian,
};
use elastid::elasticity::*;
use elastid::statics::*;
use elastid::symbolic::random::{random_flux, random_generator, random_lagrangian};
use elastid::symbolic::*;
use elastid::verify::*;
use num_rational::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EXPECTED_FAILING: &[&str] = &["AC-2"];

// AC-1
const AC1_PAIRS_PER_DIM: u64 = 100;
const AC1_BUDGET: f64 = 10.0;
// AC-2, AC-3
const AC2_BUDGET: f64 = 5.0;
const AC3_BUDGET: f64 = 5.0;
// AC-4
const AC4_TOL: f64 = 5e-2;
const AC4_MIN_ORDER: f64 = 1.0;
const AC4_BUDGET: f64 = 60.0;
// AC-5
const AC5_TOL: f64 = 1e-2;
const AC5_MIN_ORDER: f64 = 1.5;
const AC5_BUDGET: f64 = 60.0;
// AC-6
const AC6_H: f64 = 1.0 / 16.0;
const AC6_SEEDS: u64 = 5;
const AC6_INIT_AMPLITUDE: f64 = 0.1;
const AC6_ZERO_TOL: f64 = 1e-8;
const AC6_BUDGET: f64 = 120.0;
// AC-7
const AC7_H: f64 = 1.0 / 128.0;
const AC7_TOL: f64 = 1e-2;
const AC7_HORIZON: f64 = 0.75;
const AC7_SAMPLES: usize = 12;
const AC7_BUDGET: f64 = 120.0;
// AC-7, AC-8: dt-order measured by Richardson differences of the gap series
const DT_MIN_ORDER: f64 = 2.0;
const DT_ORDER_SLACK: f64 = 0.1;
// AC-8
const AC8_H: f64 = 1.0 / 64.0;
const AC8_TOL: f64 = 1e-2;
const AC8_HORIZON: f64 = 0.5;
const AC8_SAMPLES: usize = 8;
const AC8_BUDGET: f64 = 120.0;
// AC-9: machine gap at least this factor below the gap with the printed interior
const AC9_SEPARATION: f64 = 10.0;
// AC-10
const AC10_FLUXES: u64 = 100;
const AC10_REVERSAL_TOL: f64 = 1e-10;
const AC10_DRIFT_MIN_ORDER: f64 = 1.8;
const AC10_BUDGET: f64 = 30.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn iso(mu: f64, lambda: f64, n: usize) -> ElasticModuli {
    ElasticModuli::from_lame(&IsotropicModuli::from_f64(mu, lambda).unwrap(), n)
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn ac1() -> Outcome {
    let mut bad = 0;
    for n in [2usize, 3] {
        for seed in 0..AC1_PAIRS_PER_DIM {
            let space = match seed % 3 {
                0 => JetSpace::statics(n),
                1 => JetSpace::dynamics(n),
                _ => JetSpace::coupled(n),
            }
            .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 7 + n as u64);
            let v = random_generator(&space, &mut rng).unwrap();
            let l = random_lagrangian(&space, &mut rng);
            if !noether_residual(&v, &l).unwrap().is_zero() {
                bad += 1;
            }
        }
    }
    let c = ElasticModuli::general_symbolic;
    let mut named = vec![];
    for n in [2, 3] {
        named.push(noether_residual(&VectorFieldGenerator::static_dilation(n).unwrap(), &static_lagrangian(n, &c)).unwrap());
        named.push(noether_residual(&VectorFieldGenerator::dynamic_dilation(n).unwrap(), &dynamic_lagrangian(n, &c)).unwrap());
    }
    let hd = VectorFieldGenerator::hamiltonian_dilation(2, &rat(1, 2), &rat(3, 2)).unwrap();
    named.push(noether_residual(&hd, &coupled_lagrangian(2, &c)).unwrap());
    named.push(noether_residual(&hd, &coupled_lagrangian_reference(2, &c)).unwrap());
    let named_bad = named.iter().filter(|r| !r.is_zero()).count();
    outcome(
        bad == 0 && named_bad == 0,
        format!("{} random pairs, {bad} nonzero; {} proof pairs, {named_bad} nonzero", 2 * AC1_PAIRS_PER_DIM, named.len()),
    )
}

fn dot(n: usize, a: Field, f: impl Fn(u8) -> Atom) -> DiffExpr {
    let mut out = DiffExpr::zero();
    for k in 0..n as u8 {
        out += &DiffExpr::atom(Atom::Dep(a, k)) * &DiffExpr::atom(f(k));
    }
    out
}

fn ac2() -> Outcome {
    let c = ElasticModuli::general_symbolic;
    let f = DiffExpr::atom(Atom::F);
    let mut clauses = vec![];
    for n in [2usize, 3] {
        let uf = dot(n, Field::U, Atom::Fu);
        let ni = n as i64;
        let st = derive_scaling_identity(&VectorFieldGenerator::static_dilation(n).unwrap(), &static_lagrangian(n, &c)).unwrap();
        clauses.push((format!("static n={n}"), st.interior == &uf.scale(&rat(ni - 2, 2)) - &f.scale(&rat(ni, 1))));
        let dy = derive_scaling_identity(&VectorFieldGenerator::dynamic_dilation(n).unwrap(), &dynamic_lagrangian(n, &c)).unwrap();
        clauses.push((format!("dynamic n={n}"), dy.interior == &uf.scale(&rat(ni - 1, 2)) - &f.scale(&rat(ni + 1, 1))));
    }
    for (a, b) in [(rat(1, 1), rat(1, 1)), (rat(1, 2), rat(3, 2))] {
        let n = 2;
        let v = VectorFieldGenerator::hamiltonian_dilation(n, &a, &b).unwrap();
        let id = derive_scaling_identity(&v, &coupled_lagrangian(n, &c)).unwrap();
        let half = rat(1, 2);
        let printed =
            &dot(n, Field::U, Atom::Hu).scale(&(&a * &half)) + &dot(n, Field::V, Atom::Hv).scale(&(&b * &half));
        clauses.push((format!("coupled n=2 a={a} b={b}"), id.interior == printed));
    }
    let failed: Vec<&str> = clauses.iter().filter(|c| !c.1).map(|c| c.0.as_str()).collect();
    let detail = if failed.is_empty() {
        format!("{} clauses exact", clauses.len())
    } else {
        format!(
            "{}/{} clauses exact; mismatch: {} (derived interior carries an extra -(n+1)H)",
            clauses.len() - failed.len(),
            clauses.len(),
            failed.join(", ")
        )
    };
    outcome(failed.is_empty(), detail)
}

fn ac3() -> Outcome {
    let mut bad = vec![];
    for n in [2usize, 3] {
        for (mu, la) in [(1i64, 0i64), (1, 1), (2, -1)] {
            let sp = JetSpace::statics(n).unwrap();
            let navier = &navier_energy(n, &DiffExpr::int(mu), &DiffExpr::int(la)) - &DiffExpr::atom(Atom::F);
            let tensor = |i: usize, j: usize, k: usize, q: usize| {
                let d = |x: usize, y: usize| i64::from(x == y);
                DiffExpr::int(la * d(i, k) * d(j, q) + mu * (d(i, j) * d(k, q) + d(i, q) * d(j, k)))
            };
            if sp.euler_all(&navier).unwrap() != sp.euler_all(&static_strain_lagrangian(n, &tensor)).unwrap() {
                bad.push(format!("n={n} mu={mu} lambda={la}"));
            }
        }
    }
    outcome(bad.is_empty(), format!("6 cases, mismatches: {}", if bad.is_empty() { "none".into() } else { bad.join(", ") }))
}

fn ac4() -> Outcome {
    let c = iso(1.0, 0.5, 2);
    let d = DomainSpec::ball(1.0, vec![0.0; 2]).unwrap();
    let mut reports = vec![];
    for h in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
        let e = smallest_eigenpair(&StaticProblem::new(d.clone(), c.clone(), BodyForcePotential::zero(), h).unwrap()).unwrap();
        let q = StaticProblem::new(d.clone(), c.clone(), BodyForcePotential::quadratic(BigRational::from_float(e.kappa).unwrap()), h)
            .unwrap();
        reports.push(verify_pohozhaev(&e.u, &q).unwrap());
    }
    let r = Refinement::new(reports);
    let gaps: Vec<String> = r.reports.iter().map(|x| format!("{:.2e}", x.relative_gap)).collect();
    let at64 = r.reports[1].relative_gap;
    outcome(
        at64 <= AC4_TOL && r.monotone && r.fitted_order >= AC4_MIN_ORDER,
        format!("gaps [{}] monotone={} order={:.2}", gaps.join(", "), r.monotone, r.fitted_order),
    )
}

fn ac5() -> Outcome {
    let c = iso(1.0, 0.0, 2);
    let d = DomainSpec::rectangle(vec![0.0; 2], vec![1.0; 2]).unwrap();
    let ex = SineProduct::first_component(vec![0.0; 2], vec![1.0; 2]);
    let mut reports = vec![];
    for h in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
        let src = ManufacturedSource::new(ex.clone(), c.clone(), BodyForcePotential::zero());
        let p = StaticProblem::new(d.clone(), c.clone(), BodyForcePotential::zero(), h).unwrap().with_source(Arc::new(src));
        let sol = solve_static(&p, &GridField::zeros(p.grid().unwrap(), 2), &SolveOptions::default()).unwrap();
        reports.push(verify_pohozhaev_generalized(&sol.u, &p).unwrap());
    }
    let r = Refinement::new(reports);
    let gaps: Vec<String> = r.reports.iter().map(|x| format!("{:.2e}", x.relative_gap)).collect();
    let finest = r.reports[2].relative_gap;
    outcome(
        finest <= AC5_TOL && r.fitted_order >= AC5_MIN_ORDER,
        format!("gaps [{}] order={:.2}", gaps.join(", "), r.fitted_order),
    )
}

fn ac6() -> Outcome {
    let c = iso(1.0, 0.0, 3);
    let ball = DomainSpec::ball(1.0, vec![0.0; 3]).unwrap();
    let f8 = BodyForcePotential::power(rat(1, 1), rat(8, 1)).unwrap();
    let cert = nonexistence_certificate(&f8, &c, &ball, 0);
    let p = StaticProblem::new(ball.clone(), c.clone(), f8.clone(), AC6_H).unwrap();
    let grid = p.grid().unwrap();
    let mut worst = 0.0f64;
    let mut all_converged = true;
    for seed in 0..AC6_SEEDS {
        let sol = solve_static(&p, &random_field(grid.clone(), 3, AC6_INIT_AMPLITUDE, seed), &SolveOptions::default()).unwrap();
        all_converged &= sol.converged;
        worst = worst.max(sol.u.max_abs());
    }
    let quad = nonexistence_certificate(&BodyForcePotential::power(rat(1, 1), rat(2, 1)).unwrap(), &c, &ball, 0);
    let quad_ok = quad.failed_clause().is_some_and(|cl| cl.name.starts_with("(ii)"));
    let annulus = DomainSpec::annulus(0.5, 1.0).unwrap();
    let ann = nonexistence_certificate(&f8, &iso(1.0, 0.0, 2), &annulus, 0);
    let ann_ok = ann.clauses.iter().any(|cl| cl.name.starts_with("(iv)") && !cl.holds);
    outcome(
        cert.holds() && all_converged && worst <= AC6_ZERO_TOL && quad_ok && ann_ok,
        format!(
            "certificate {}; {AC6_SEEDS} solves max|u|={worst:.1e}; |s|^2 fails (ii): {quad_ok}; annulus fails (iv): {ann_ok}",
            if cert.holds() { "holds" } else { "fails" }
        ),
    )
}

/// Richardson order of the gap series over dt, dt/2, dt/4 at fixed h.
fn dt_order(reports: &[IdentityReport]) -> f64 {
    let g: Vec<&Vec<f64>> = reports.iter().map(|r| &r.series.as_ref().unwrap().gap).collect();
    let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    (d(g[0], g[1]) / d(g[1], g[2])).log2()
}

fn ac7() -> Outcome {
    let c = iso(1.0, 0.0, 2);
    // f(u) = −|u|²u
    let f = BodyForcePotential::power(rat(-1, 4), rat(4, 1)).unwrap();
    let model = DynamicModel::potential(c.clone(), f).unwrap();
    let dom = DomainSpec::rectangle(vec![-2.0, -2.0], vec![2.0, 2.0]).unwrap();
    let grid = Arc::new(Grid::new(dom.clone(), AC7_H).unwrap());
    let init = InitialData::Bump { center: vec![0.0, 0.0], width: 0.15, amplitude: vec![1.0, 0.5], v_scale: 0.0 };
    let (cen, rad) = init.support().unwrap();
    let contact = wave_contact_time(&dom, AC7_H, &cen, rad, c.max_wave_speed()).unwrap();
    let mut reps = vec![];
    for div in [4.0, 8.0, 16.0] {
        let it = Integrator::new(grid.clone(), model.clone(), AC7_H / div, DEFAULT_CFL).unwrap();
        let tr = record_trajectory(
            &it,
            init.build(grid.clone(), &model).unwrap(),
            IdentityId::MorawetzFreespace,
            AC7_HORIZON,
            AC7_SAMPLES,
            Some(contact),
        )
        .unwrap();
        reps.push(verify_morawetz(&tr).unwrap());
    }
    let order = dt_order(&reps);
    let rel = reps[0].relative_gap;
    outcome(
        rel <= AC7_TOL && order >= DT_MIN_ORDER - DT_ORDER_SLACK,
        format!("rel gap {rel:.2e} at dt=h/4, horizon {AC7_HORIZON} < contact {contact:.3}; dt-order {order:.3}"),
    )
}

struct CoupledRun {
    reports: Vec<IdentityReport>,
    printed_rel: f64,
}

fn coupled_run() -> CoupledRun {
    let c = iso(1.0, 0.0, 2);
    let model = DynamicModel::coupled(c, CouplingPotential::bilinear(rat(1, 1)), rat(1, 1), rat(1, 1)).unwrap();
    let grid = Arc::new(Grid::new(DomainSpec::rectangle(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), AC8_H).unwrap());
    let init = InitialData::Eigenmode { u_amplitude: 1.0, v_amplitude: 0.5 };
    let mut reports = vec![];
    let mut printed_rel = 0.0;
    for div in [4.0, 8.0, 16.0] {
        let dt = AC8_H / div;
        let it = Integrator::new(grid.clone(), model.clone(), dt, DEFAULT_CFL).unwrap();
        let tr = record_trajectory(
            &it,
            init.build(grid.clone(), &model).unwrap(),
            IdentityId::HamiltonianConformal,
            AC8_HORIZON,
            AC8_SAMPLES,
            None,
        )
        .unwrap();
        let r = verify_hamiltonian_conformal(&tr).unwrap();
        if reports.is_empty() {
            let worst = tr
                .samples
                .iter()
                .map(|s| ((s.m_next - s.m_prev) / (2.0 * dt) - s.printed_interior.unwrap() - s.rhs_boundary).abs())
                .fold(0.0, f64::max);
            printed_rel = worst / r.scale;
        }
        reports.push(r);
    }
    CoupledRun { reports, printed_rel }
}

fn ac8(run: &CoupledRun) -> Outcome {
    let c = iso(1.0, 0.0, 2);
    let bil = CouplingPotential::bilinear(rat(1, 1));
    let rejects_ab = DynamicModel::coupled(c.clone(), bil.clone(), rat(1, 1), rat(3, 2)).is_err();
    let rejects_n3 = DynamicModel::coupled(iso(1.0, 0.0, 3), bil, rat(1, 1), rat(1, 1)).is_err()
        && VectorFieldGenerator::hamiltonian_dilation(3, &rat(1, 1), &rat(1, 1)).is_err();
    let order = dt_order(&run.reports);
    let rel = run.reports[0].relative_gap;
    outcome(
        rel <= AC8_TOL && order >= DT_MIN_ORDER - DT_ORDER_SLACK && rejects_ab && rejects_n3,
        format!("rel gap {rel:.2e} at dt=h/4; dt-order {order:.3}; rejects a+b!=2: {rejects_ab}, n=3: {rejects_n3}"),
    )
}

fn ac9(run: &CoupledRun) -> Outcome {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let mut matched = true;
    let mut tables = true;
    for (file, target) in [
        ("derivation_morawetz_n2.txt", DerivationTarget::Morawetz),
        ("derivation_hamiltonian_n2.txt", DerivationTarget::Hamiltonian { a: rat(1, 1), b: rat(1, 1) }),
    ] {
        let log = derivation_log(&target, 2).unwrap();
        matched &= std::fs::read_to_string(dir.join(file)).map(|g| g == log).unwrap_or(false);
        tables &= log.contains("== flux") && log.contains("printed") && log.contains("verdict:");
    }
    let machine = run.reports[0].relative_gap;
    let separated = run.printed_rel >= AC9_SEPARATION * machine;
    outcome(
        matched && tables && separated,
        format!(
            "golden logs match: {matched}; diff tables: {tables}; coupled rel gap machine {machine:.2e} vs printed interior {:.2e}",
            run.printed_rel
        ),
    )
}

fn ac10() -> Outcome {
    let mut nonzero = 0;
    for seed in 0..AC10_FLUXES {
        let n = 2 + (seed % 2) as usize;
        let sp = match seed % 3 {
            0 => JetSpace::statics(n),
            1 => JetSpace::dynamics(n),
            _ => JetSpace::coupled(n),
        }
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let div = sp.divergence(&random_flux(&sp, &mut rng)).unwrap();
        nonzero += sp.euler_all(&div).unwrap().iter().filter(|e| !e.is_zero()).count();
    }

    let c = iso(1.0, 0.5, 2);
    let grid = Arc::new(Grid::new(DomainSpec::rectangle(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap(), 1.0 / 32.0).unwrap());
    let bump = InitialData::Bump { center: vec![0.45, 0.5], width: 0.06, amplitude: vec![1.0, -0.5], v_scale: 0.7 };
    let nonlinear = DynamicModel::potential(c.clone(), BodyForcePotential::power(rat(-1, 4), rat(4, 1)).unwrap()).unwrap();
    let it = Integrator::new(grid.clone(), nonlinear.clone(), grid.h() / 4.0, DEFAULT_CFL).unwrap();
    let s0 = bump.build(grid.clone(), &nonlinear).unwrap();
    let mut s = s0.clone();
    it.run(&mut s, 400).unwrap();
    s.reverse();
    it.run(&mut s, 400).unwrap();
    s.reverse();
    let diff = |a: &GridField, b: &GridField| a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let reversal = diff(&s.u, &s0.u).max(diff(&s.ut, &s0.ut));

    let linear = DynamicModel::potential(c, BodyForcePotential::zero()).unwrap();
    let drift = |div: f64| {
        let it = Integrator::new(grid.clone(), linear.clone(), grid.h() / div, DEFAULT_CFL).unwrap();
        let mut s = bump.build(grid.clone(), &linear).unwrap();
        let e0 = it.energy(&s).unwrap();
        let mut worst = 0.0f64;
        for _ in 0..(0.5 / it.dt()).round() as usize {
            it.step(&mut s).unwrap();
            worst = worst.max((it.energy(&s).unwrap() - e0).abs());
        }
        worst / e0
    };
    let (d1, d2) = (drift(4.0), drift(8.0));
    let order = (d1 / d2).log2();
    outcome(
        nonzero == 0 && reversal <= AC10_REVERSAL_TOL && order >= AC10_DRIFT_MIN_ORDER,
        format!(
            "{AC10_FLUXES} fluxes, {nonzero} nonzero Euler expressions; reversal error {reversal:.1e}; energy drift {d1:.2e} -> {d2:.2e} (order {order:.2})"
        ),
    )
}

#[test]
fn acceptance() {
    println!();
    let mut lines = vec![];
    let mut failing = vec![];
    let mut record = |id: &'static str, budget: f64, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let o = f();
        let elapsed = secs(t0.elapsed());
        let pass = o.pass && elapsed < budget;
        let limit = if budget.is_finite() { format!(" / {budget:.0}s") } else { String::new() };
        let line = format!("{id} {} {} [{elapsed:.1}s{limit}]", if pass { "PASS" } else { "FAIL" }, o.detail);
        println!("{line}");
        lines.push(line);
        if !pass {
            failing.push(id);
        }
    };
    record("AC-1", AC1_BUDGET, &mut ac1);
    record("AC-2", AC2_BUDGET, &mut ac2);
    record("AC-3", AC3_BUDGET, &mut ac3);
    record("AC-4", AC4_BUDGET, &mut ac4);
    record("AC-5", AC5_BUDGET, &mut ac5);
    record("AC-6", AC6_BUDGET, &mut ac6);
    record("AC-7", AC7_BUDGET, &mut ac7);
    let mut run = None;
    record("AC-8", AC8_BUDGET, &mut || {
        let r = coupled_run();
        let o = ac8(&r);
        run = Some(r);
        o
    });
    let run = run.unwrap();
    record("AC-9", f64::INFINITY, &mut || ac9(&run));
    record("AC-10", AC10_BUDGET, &mut ac10);
    assert_eq!(failing, EXPECTED_FAILING, "\n{}", lines.join("\n"));
}

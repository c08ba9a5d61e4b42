use std::fmt::Write as _;
use std::sync::Arc;

use elastid::derivation::{derivation_log, DerivationTarget};
use elastid::domain::{DomainSpec, Grid, GridField};
use elastid::dynamics::{wave_contact_time, DynamicModel, DynamicState, DynamicsError, InitialData, Integrator, DEFAULT_CFL};
use elastid::elasticity::{nonexistence_certificate, BodyForcePotential, ElasticModuli};
use elastid::statics::{
    random_field, smallest_eigenpair, solve_static, ManufacturedSource, SineProduct, SolveOptions, StaticProblem, StaticsError,
};
use elastid::symbolic::random::{random_flux, random_generator, random_lagrangian};
use elastid::symbolic::{noether_residual, JetSpace};
use elastid::verify::{
    record_trajectory, verify_hamiltonian_conformal, verify_morawetz, verify_pohozhaev, verify_pohozhaev_generalized,
    IdentityId, IdentityReport, Refinement, VerifyError,
};
use num_rational::BigRational;
use rand::SeedableRng;

use crate::config::Config;
use crate::model::{self, Initial};
use crate::output::Output;
use crate::CliError;

/// Derivation logs a run depends on, hashed into the manifest.
pub type Derivations = Vec<(String, String)>;

pub fn statics_err(e: StaticsError) -> CliError {
    match e {
        StaticsError::Input(_) | StaticsError::Domain(_) | StaticsError::Model(_) => CliError::Input(e.to_string()),
        _ => CliError::Solver(e.to_string()),
    }
}

pub fn dynamics_err(e: DynamicsError) -> CliError {
    match e {
        DynamicsError::NonFinite { .. } => CliError::Solver(e.to_string()),
        DynamicsError::Statics(s) => statics_err(s),
        _ => CliError::Input(e.to_string()),
    }
}

pub fn verify_err(e: VerifyError) -> CliError {
    match e {
        VerifyError::Statics(s) => statics_err(s),
        VerifyError::Dynamics(d) => dynamics_err(d),
        _ => CliError::Input(e.to_string()),
    }
}

fn target(cfg: &Config, identity: &str, n: usize) -> Result<DerivationTarget, CliError> {
    match identity {
        "pohozhaev" => Ok(DerivationTarget::Pohozhaev),
        "morawetz" => Ok(DerivationTarget::Morawetz),
        "hamiltonian" => {
            let (a, b) = model::weights(cfg, n)?;
            Ok(DerivationTarget::Hamiltonian { a, b })
        }
        other => Err(CliError::Input(format!("unknown identity `{other}`"))),
    }
}

fn log_for(t: &DerivationTarget, n: usize, derivs: &mut Derivations) -> Result<String, CliError> {
    let log = derivation_log(t, n).map_err(|e| CliError::Input(e.to_string()))?;
    derivs.push((format!("{} n={n}", t.name()), log.clone()));
    Ok(log)
}

/// Runs `job` for every mesh width on its own thread; results come back in input order.
fn per_h<T: Send>(hs: &[f64], job: impl Fn(usize, f64) -> Result<T, CliError> + Sync) -> Result<Vec<T>, CliError> {
    let job = &job;
    std::thread::scope(|s| {
        let handles: Vec<_> = hs.iter().enumerate().map(|(i, &h)| s.spawn(move || job(i, h))).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    })
}

pub fn derive(cfg: &Config, out: &mut Output, derivs: &mut Derivations) -> Result<bool, CliError> {
    let n = model::dimension(cfg)?;
    let identity = cfg.str_or("identity", "pohozhaev");
    let t = target(cfg, &identity, n)?;
    let log = log_for(&t, n, derivs)?;
    print!("{log}");
    out.write(&format!("derivation_{}_n{n}.txt", t.name()), &log)?;
    Ok(true)
}

enum StaticMode {
    Eigen,
    Manufactured { exact: SineProduct, potential: BodyForcePotential },
    Solve { potential: BodyForcePotential, amplitude: f64, seed: u64 },
}

fn static_report(mode: &StaticMode, d: &DomainSpec, c: &ElasticModuli, h: f64, opts: &SolveOptions) -> Result<IdentityReport, CliError> {
    let zero = |p: &StaticProblem| -> Result<GridField, CliError> { Ok(GridField::zeros(p.grid().map_err(statics_err)?, c.n())) };
    match mode {
        StaticMode::Eigen => {
            let p = StaticProblem::new(d.clone(), c.clone(), BodyForcePotential::zero(), h).map_err(statics_err)?;
            let e = smallest_eigenpair(&p).map_err(statics_err)?;
            let kappa = BigRational::from_float(e.kappa).ok_or_else(|| CliError::Solver("non-finite eigenvalue".into()))?;
            let q = StaticProblem::new(d.clone(), c.clone(), BodyForcePotential::quadratic(kappa), h).map_err(statics_err)?;
            let mut r = verify_pohozhaev(&e.u, &q).map_err(verify_err)?;
            r.notes.push(format!("smallest eigenvalue {:.12e} (residual {:.1e})", e.kappa, e.residual));
            Ok(r)
        }
        StaticMode::Manufactured { exact, potential } => {
            let src = ManufacturedSource::new(exact.clone(), c.clone(), potential.clone());
            let p = StaticProblem::new(d.clone(), c.clone(), potential.clone(), h).map_err(statics_err)?.with_source(Arc::new(src));
            let sol = solve_static(&p, &zero(&p)?, opts).map_err(statics_err)?;
            verify_pohozhaev_generalized(&sol.u, &p).map_err(verify_err)
        }
        StaticMode::Solve { potential, amplitude, seed } => {
            let p = StaticProblem::new(d.clone(), c.clone(), potential.clone(), h).map_err(statics_err)?;
            let init = random_field(p.grid().map_err(statics_err)?, c.n(), *amplitude, *seed);
            let sol = solve_static(&p, &init, opts).map_err(statics_err)?;
            verify_pohozhaev(&sol.u, &p).map_err(verify_err)
        }
    }
}

pub fn verify_static(cfg: &Config, out: &mut Output, derivs: &mut Derivations) -> Result<bool, CliError> {
    let n = model::dimension(cfg)?;
    let seed = cfg.u64_or("seed", 0)?;
    let d = model::domain(cfg, n)?;
    let c = model::moduli(cfg, n, true, seed)?;
    let hs = model::h_list(cfg, "1/32, 1/64, 1/128")?;
    model::check_star_shape(cfg, &d, hs[0])?;
    let tol = cfg.f64_or("tolerance.relative_gap", 5e-2)?;
    let min_order = cfg.f64_or("tolerance.min_order", 1.0)?;
    let mode = match cfg.str_or("static.mode", "eigen").as_str() {
        "eigen" => StaticMode::Eigen,
        "manufactured" => {
            if d.kind_name() != "rectangle" {
                return Err(CliError::Input("manufactured mode needs a rectangle domain".into()));
            }
            let (lo, hi) = d.bounds();
            let tau = cfg.f64_or("static.tau", 1.0)?;
            StaticMode::Manufactured { exact: SineProduct::first_component(lo, hi).scaled(tau), potential: model::potential(cfg, n)? }
        }
        "solve" => StaticMode::Solve {
            potential: model::potential(cfg, n)?,
            amplitude: cfg.f64_or("static.init_amplitude", 0.1)?,
            seed,
        },
        other => return Err(CliError::Input(format!("unknown static.mode `{other}`"))),
    };
    let opts = SolveOptions {
        max_iter: if cfg.has("static.max_iter") { Some(cfg.usize_or("static.max_iter", 0)?) } else { None },
        ..SolveOptions::default()
    };
    log_for(&DerivationTarget::Pohozhaev, n, derivs)?;

    let reports = per_h(&hs, |_, h| static_report(&mode, &d, &c, h, &opts))?;
    let pass;
    let mut text = String::new();
    let csv;
    if reports.len() >= 2 {
        let r = Refinement::new(reports);
        for rep in &r.reports {
            let _ = writeln!(text, "{rep}\n");
        }
        pass = r.passes(tol, min_order);
        let _ = writeln!(
            text,
            "refinement: fitted order {:.3}, monotone {}, coarsest relative gap {:.3e} (tolerance {tol:e}, min order {min_order})",
            r.fitted_order, r.monotone, r.reports[0].relative_gap
        );
        csv = r.to_csv();
    } else {
        let rep = &reports[0];
        let _ = writeln!(text, "{rep}\n");
        pass = rep.relative_gap <= tol;
        csv = format!("{}\n{}\n", IdentityReport::CSV_HEADER, rep.csv_row());
    }
    let _ = writeln!(text, "verdict: {}", if pass { "PASS" } else { "FAIL" });
    print!("{text}");
    out.write("report.txt", &text)?;
    out.write("refinement.csv", &csv)?;
    Ok(pass)
}

fn richardson(reports: &[IdentityReport]) -> f64 {
    let g: Vec<&Vec<f64>> = reports.iter().map(|r| &r.series.as_ref().expect("dynamic report").gap).collect();
    let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    (d(g[0], g[1]) / d(g[1], g[2])).log2()
}

pub fn verify_dynamic(cfg: &Config, out: &mut Output, derivs: &mut Derivations) -> Result<bool, CliError> {
    let n = model::dimension(cfg)?;
    let seed = cfg.u64_or("seed", 0)?;
    let d = model::domain(cfg, n)?;
    let c = model::moduli(cfg, n, true, seed)?;
    let identity = cfg.str_or("identity", "morawetz");
    let t = target(cfg, &identity, n)?;
    let dyn_model = match &t {
        DerivationTarget::Morawetz => DynamicModel::potential(c.clone(), model::potential(cfg, n)?),
        DerivationTarget::Hamiltonian { a, b } => DynamicModel::coupled(c.clone(), model::coupling(cfg)?, a.clone(), b.clone()),
        DerivationTarget::Pohozhaev => return Err(CliError::Input("verify-dynamic needs identity morawetz or hamiltonian".into())),
    }
    .map_err(dynamics_err)?;
    let free = cfg.bool_or("dynamic.free_space", false)?;
    if free && dyn_model.is_coupled() {
        return Err(CliError::Input("dynamic.free_space applies to the morawetz identity only".into()));
    }
    let id = match (dyn_model.is_coupled(), free) {
        (true, _) => IdentityId::HamiltonianConformal,
        (false, true) => IdentityId::MorawetzFreespace,
        (false, false) => IdentityId::Morawetz,
    };
    let hs = model::h_list(cfg, "1/32")?;
    let ratio = cfg.f64_or("dynamic.dt_ratio", 4.0)?;
    let levels = cfg.usize_or("dynamic.dt_levels", 3)?;
    let horizon = cfg.f64_or("dynamic.horizon", 0.5)?;
    let samples = cfg.usize_or("dynamic.samples", 8)?;
    let cfl = cfg.f64_or("dynamic.cfl", DEFAULT_CFL)?;
    let tol = cfg.f64_or("tolerance.relative_gap", 5e-2)?;
    let dt_order = cfg.f64_or("tolerance.dt_order", 2.0)?;
    let slack = cfg.f64_or("tolerance.order_slack", 0.1)?;
    if levels == 0 || !(ratio > 0.0) || !(horizon > 0.0) {
        return Err(CliError::Input("dynamic.dt_levels, dt_ratio and horizon must be positive".into()));
    }
    let init = model::initial(cfg, n)?;
    let mut contact = vec![None; hs.len()];
    if free {
        let Initial::Core(data @ InitialData::Bump { .. }) = &init else {
            return Err(CliError::Input("free-space runs need compactly supported bump data".into()));
        };
        let (cen, rad) = data.support().expect("bump support");
        for (i, &h) in hs.iter().enumerate() {
            let tc = wave_contact_time(&d, h, &cen, rad, c.max_wave_speed()).map_err(dynamics_err)?;
            let end = horizon + h / ratio;
            if end > tc {
                return Err(CliError::Input(format!("run ends at {end} after the wave-contact time {tc:.4} at h = {h}")));
            }
            contact[i] = Some(tc);
        }
    }
    log_for(&t, n, derivs)?;

    let runs = per_h(&hs, |i, h| {
        let grid = Arc::new(Grid::new(d.clone(), h).map_err(|e| CliError::Input(e.to_string()))?);
        let mut reps = vec![];
        for j in 0..levels {
            let dt = h / (ratio * f64::from(1u32 << j));
            let it = Integrator::new(grid.clone(), dyn_model.clone(), dt, cfl).map_err(dynamics_err)?;
            let state: DynamicState = match &init {
                Initial::Core(data) => data.build(grid.clone(), &dyn_model).map_err(dynamics_err)?,
                Initial::File(path) => model::state_from_file(path, grid.clone(), dyn_model.is_coupled())?,
            };
            let tr = record_trajectory(&it, state, id, horizon, samples, contact[i]).map_err(verify_err)?;
            let rep = if dyn_model.is_coupled() { verify_hamiltonian_conformal(&tr) } else { verify_morawetz(&tr) };
            reps.push(rep.map_err(verify_err)?);
        }
        Ok(reps)
    })?;

    let mut pass = true;
    let mut text = String::new();
    let mut csv = format!("{}\n", IdentityReport::CSV_HEADER);
    for (i, mut reps) in runs.into_iter().enumerate() {
        let order = (reps.len() >= 3).then(|| richardson(&reps[..3]));
        if let Some(o) = order {
            reps.last_mut().expect("levels ≥ 3").order = Some(o);
        }
        let ok = reps[0].relative_gap <= tol && order.is_none_or(|o| o >= dt_order - slack);
        pass &= ok;
        for (j, r) in reps.iter().enumerate() {
            let _ = writeln!(text, "{r}\n");
            csv.push_str(&r.csv_row());
            csv.push('\n');
            out.write(&format!("timeseries_h{i}_dt{j}.csv"), &r.series.as_ref().expect("dynamic report").to_csv())?;
        }
        let _ = writeln!(
            text,
            "h = {}: relative gap {:.3e} at dt = h/{ratio} (tolerance {tol:e}); dt-order {} (min {dt_order} - {slack}): {}\n",
            hs[i],
            reps[0].relative_gap,
            order.map_or("n/a".to_string(), |o| format!("{o:.3}")),
            if ok { "PASS" } else { "FAIL" }
        );
    }
    let _ = writeln!(text, "verdict: {}", if pass { "PASS" } else { "FAIL" });
    print!("{text}");
    out.write("report.txt", &text)?;
    out.write("reports.csv", &csv)?;
    Ok(pass)
}

pub fn certify(cfg: &Config, out: &mut Output, derivs: &mut Derivations) -> Result<bool, CliError> {
    let n = model::dimension(cfg)?;
    let seed = cfg.u64_or("seed", 0)?;
    let d = model::domain(cfg, n)?;
    let c = model::moduli(cfg, n, false, seed)?;
    let f = model::potential(cfg, n)?;
    let solve = cfg.bool_or("certify.solve", false)?;
    log_for(&DerivationTarget::Pohozhaev, n, derivs)?;

    let cert = nonexistence_certificate(&f, &c, &d, seed);
    let mut text = format!("potential {}\n{cert}\n", f.describe());
    for cl in cert.clauses.iter().filter(|c| !c.holds) {
        let _ = writeln!(text, "failed clause: {}", cl.name);
    }
    let mut pass = cert.holds();
    if pass && solve {
        let h = cfg.f64_or("certify.h", 1.0 / 16.0)?;
        let runs = cfg.u64_or("certify.runs", 5)?;
        let amplitude = cfg.f64_or("certify.init_amplitude", 0.1)?;
        let zero_tol = cfg.f64_or("certify.zero_tol", 1e-8)?;
        let p = StaticProblem::new(d, c, f, h).map_err(statics_err)?;
        let grid = p.grid().map_err(statics_err)?;
        let mut worst = 0.0f64;
        for s in seed..seed + runs {
            let sol = solve_static(&p, &random_field(grid.clone(), n, amplitude, s), &SolveOptions::default()).map_err(statics_err)?;
            if !sol.converged {
                return Err(CliError::Solver(format!("seed {s}: no convergence after {} iterations", sol.iterations)));
            }
            let _ = writeln!(text, "solve seed {s}: {} iterations, max|u| = {:.3e}", sol.iterations, sol.u.max_abs());
            worst = worst.max(sol.u.max_abs());
        }
        let collapsed = worst <= zero_tol;
        let _ = writeln!(text, "collapse to zero within {zero_tol:e}: {}", if collapsed { "yes" } else { "no" });
        pass &= collapsed;
    }
    print!("{text}");
    out.write("certificate.txt", &text)?;
    Ok(pass)
}

fn check(text: &mut String, name: &str, ok: bool, detail: String) -> bool {
    let _ = writeln!(text, "{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

pub fn selftest(out: &mut Output) -> Result<bool, CliError> {
    let mut text = String::new();
    let mut all = true;

    let mut bad = 0;
    let mut nonzero = 0;
    for seed in 0..30u64 {
        let n = 2 + (seed % 2) as usize;
        let sp = match seed % 3 {
            0 => JetSpace::statics(n),
            1 => JetSpace::dynamics(n),
            _ => JetSpace::coupled(n),
        }
        .map_err(|e| CliError::Input(e.to_string()))?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let v = random_generator(&sp, &mut rng).map_err(|e| CliError::Input(e.to_string()))?;
        let l = random_lagrangian(&sp, &mut rng);
        bad += usize::from(!noether_residual(&v, &l).map_err(|e| CliError::Input(e.to_string()))?.is_zero());
        let div = sp.divergence(&random_flux(&sp, &mut rng)).map_err(|e| CliError::Input(e.to_string()))?;
        nonzero += sp.euler_all(&div).map_err(|e| CliError::Input(e.to_string()))?.iter().filter(|e| !e.is_zero()).count();
    }
    all &= check(&mut text, "noether residual", bad == 0, format!("30 seeded pairs, {bad} nonzero"));
    all &= check(&mut text, "euler of divergence", nonzero == 0, format!("30 seeded fluxes, {nonzero} nonzero"));

    let c = ElasticModuli::from_lame(
        &elastid::elasticity::IsotropicModuli::new(BigRational::from_integer(1.into()), BigRational::from_integer(1.into()))
            .map_err(|e| CliError::Input(e.to_string()))?,
        2,
    );
    let grid = Arc::new(
        Grid::new(DomainSpec::rectangle(vec![0.0; 2], vec![1.0; 2]).map_err(|e| CliError::Input(e.to_string()))?, 1.0 / 16.0)
            .map_err(|e| CliError::Input(e.to_string()))?,
    );
    let quartic = BodyForcePotential::power(BigRational::new((-1).into(), 4.into()), BigRational::from_integer(4.into()))
        .map_err(|e| CliError::Input(e.to_string()))?;
    let bump = InitialData::Bump { center: vec![0.5, 0.45], width: 0.08, amplitude: vec![1.0, -0.5], v_scale: 1.0 };
    let m = DynamicModel::potential(c.clone(), quartic).map_err(dynamics_err)?;
    let it = Integrator::new(grid.clone(), m.clone(), grid.h() / 4.0, DEFAULT_CFL).map_err(dynamics_err)?;
    let s0 = bump.build(grid.clone(), &m).map_err(dynamics_err)?;
    let mut s = s0.clone();
    it.run(&mut s, 200).map_err(dynamics_err)?;
    s.reverse();
    it.run(&mut s, 200).map_err(dynamics_err)?;
    let err = s.u.values().iter().zip(s0.u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    all &= check(&mut text, "time reversal", err <= 1e-10, format!("error {err:.1e} after 200 steps each way"));

    let linear = DynamicModel::potential(c, BodyForcePotential::zero()).map_err(dynamics_err)?;
    let mut drift = vec![];
    for div in [4.0, 8.0] {
        let it = Integrator::new(grid.clone(), linear.clone(), grid.h() / div, DEFAULT_CFL).map_err(dynamics_err)?;
        let mut s = bump.build(grid.clone(), &linear).map_err(dynamics_err)?;
        let e0 = it.energy(&s).map_err(dynamics_err)?;
        let mut worst = 0.0f64;
        for _ in 0..(0.5 / it.dt()).round() as usize {
            it.step(&mut s).map_err(dynamics_err)?;
            worst = worst.max((it.energy(&s).map_err(dynamics_err)? - e0).abs());
        }
        drift.push(worst / e0);
    }
    let order = (drift[0] / drift[1]).log2();
    all &= check(&mut text, "energy drift", order >= 1.8, format!("{:.2e} -> {:.2e}, order {order:.2}", drift[0], drift[1]));

    let _ = writeln!(text, "selftest: {}", if all { "PASS" } else { "FAIL" });
    print!("{text}");
    out.write("selftest.txt", &text)?;
    Ok(all)
}

use std::fmt::Write as _;
use std::sync::Arc;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::energy::{stored_energy_gradient, EnergyMatrix};
use super::manufactured::SourceField;
use super::operator::{ordinals, ElasticOperator};
use super::StaticsError;
use crate::domain::{pairwise_sum, DomainSpec, Grid, GridField};
use crate::elasticity::{BodyForcePotential, ElasticModuli};

/// Static Dirichlet problem `C^{kl}_{ij} u^j_{kl} + f_i(u) + g_i(x) = 0`.
#[derive(Clone, Debug)]
pub struct StaticProblem {
    pub domain: DomainSpec,
    pub moduli: ElasticModuli,
    pub potential: BodyForcePotential,
    pub source: Option<Arc<dyn SourceField>>,
    pub h: f64,
}

impl StaticProblem {
    pub fn new(domain: DomainSpec, moduli: ElasticModuli, potential: BodyForcePotential, h: f64) -> Result<Self, StaticsError> {
        if domain.n() != moduli.n() {
            return Err(StaticsError::Input(format!("domain has n = {}, moduli n = {}", domain.n(), moduli.n())));
        }
        let potential = potential.for_dimension(moduli.n())?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(StaticsError::Input(format!("grid spacing {h} must be positive")));
        }
        Ok(StaticProblem { domain, moduli, potential, source: None, h })
    }

    pub fn with_source(mut self, g: Arc<dyn SourceField>) -> Self {
        self.source = Some(g);
        self
    }

    pub fn n(&self) -> usize {
        self.moduli.n()
    }

    pub fn grid(&self) -> Result<Arc<Grid>, StaticsError> {
        Ok(Arc::new(Grid::new(self.domain.clone(), self.h)?))
    }

    /// Source sampled at every node (zero without a source).
    pub fn source_values(&self, grid: &Grid) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; grid.len() * n];
        if let Some(g) = &self.source {
            let mut x = vec![0.0; n];
            for &node in grid.inside_nodes() {
                grid.point_into(node, &mut x);
                g.value(&x, &mut out[node * n..(node + 1) * n]);
            }
        }
        out
    }
}

/// Node-wise `C^{kl}_{ij} u^j_{kl} + f_i(u) + g_i` with the cut-cell stencils; zero off the interior.
pub fn assemble_residual(p: &StaticProblem, u: &GridField) -> Result<GridField, StaticsError> {
    let op = ElasticOperator::new(u.grid().clone(), &p.moduli);
    residual_with(&op, p, u)
}

pub(crate) fn residual_with(op: &ElasticOperator, p: &StaticProblem, u: &GridField) -> Result<GridField, StaticsError> {
    let grid = u.grid().clone();
    let n = p.n();
    if u.comps() != n {
        return Err(StaticsError::Input(format!("field has {} components, expected {n}", u.comps())));
    }
    let mut au = vec![0.0; u.values().len()];
    op.apply(u.values(), &mut au);
    let g = p.source_values(&grid);
    let mut f = vec![0.0; n];
    for &node in grid.inside_nodes() {
        p.potential.gradient(u.at(node), &mut f);
        for i in 0..n {
            let r = node * n + i;
            au[r] = -au[r] + f[i] + g[r];
        }
    }
    Ok(GridField::from_values(grid, n, au)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    /// Defaults to `1e-8·max(1, ‖g‖∞)` when `None`.
    pub tol_res: Option<f64>,
    /// Defaults to ten times the number of unknowns when `None`.
    pub max_iter: Option<usize>,
    pub energy_floor: f64,
    pub record_telemetry: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol_res: None, max_iter: None, energy_floor: -1e12, record_telemetry: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TelemetryRow {
    pub iteration: usize,
    pub energy: f64,
    pub residual: f64,
}

pub fn telemetry_csv(rows: &[TelemetryRow]) -> String {
    let mut s = String::from("iteration,energy,residual\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.16e},{:.16e}", r.iteration, r.energy, r.residual);
    }
    s
}

#[derive(Clone, Debug)]
pub struct StaticSolution {
    pub u: GridField,
    /// Max-norm of the discrete Euler–Lagrange residual, recomputed matrix-free after the solve.
    pub residual_norm: f64,
    /// Max-norm of `assemble_residual` (the cut-cell finite-difference stencil).
    pub stencil_residual_norm: f64,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub telemetry: Vec<TelemetryRow>,
}

/// Random Dirichlet field with inside values uniform in `[−amplitude, amplitude]`.
pub fn random_field(grid: Arc<Grid>, comps: usize, amplitude: f64, seed: u64) -> GridField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = GridField::zeros(grid.clone(), comps);
    let v = f.values_mut();
    for &node in grid.inside_nodes() {
        for c in 0..comps {
            v[node * comps + c] = rng.gen_range(-amplitude..=amplitude);
        }
    }
    f
}

struct Discrete<'a> {
    k: EnergyMatrix,
    p: &'a StaticProblem,
    vol: f64,
    n: usize,
    g: Vec<f64>,
}

impl Discrete<'_> {
    fn potential_sum(&self, x: &[f64]) -> f64 {
        let terms: Vec<f64> = x.chunks(self.n).map(|s| self.p.potential.value(s)).collect();
        self.vol * pairwise_sum(&terms)
    }

    /// Energy and gradient: `½ xᵀKx − vol Σ (F(x) + g·x)`.
    fn energy_gradient(&self, x: &[f64], kx: &[f64], grad: &mut [f64]) -> f64 {
        let mut f = vec![0.0; self.n];
        let mut quad = Vec::with_capacity(x.len() / self.n);
        for (o, s) in x.chunks(self.n).enumerate() {
            self.p.potential.gradient(s, &mut f);
            let mut q = 0.0;
            for i in 0..self.n {
                let r = o * self.n + i;
                grad[r] = kx[r] - self.vol * (f[i] + self.g[r]);
                q += 0.5 * x[r] * kx[r] - self.vol * self.g[r] * x[r];
            }
            quad.push(q);
        }
        pairwise_sum(&quad) - self.potential_sum(x)
    }

    fn residual_max(&self, grad: &[f64]) -> f64 {
        grad.iter().fold(0.0f64, |m, v| m.max(v.abs())) / self.vol
    }

    /// `E(x + αd) − E(x)` evaluated from differences.
    fn energy_change(&self, x: &[f64], d: &[f64], alpha: f64, slope: f64, dkd: f64) -> f64 {
        let mut f = vec![0.0; self.n];
        let mut terms = Vec::with_capacity(x.len() / self.n);
        let mut y = vec![0.0; self.n];
        for (s, dd) in x.chunks(self.n).zip(d.chunks(self.n)) {
            for i in 0..self.n {
                y[i] = s[i] + alpha * dd[i];
            }
            self.p.potential.gradient(s, &mut f);
            let lin: f64 = (0..self.n).map(|i| f[i] * dd[i]).sum();
            terms.push(self.p.potential.value(&y) - self.p.potential.value(s) - alpha * lin);
        }
        alpha * slope + 0.5 * alpha * alpha * dkd - self.vol * pairwise_sum(&terms)
    }
}

/// Minimize the discrete energy by preconditioned nonlinear conjugate gradients.
pub fn solve_static(p: &StaticProblem, init: &GridField, opts: &SolveOptions) -> Result<StaticSolution, StaticsError> {
    let grid = init.grid().clone();
    let n = p.n();
    if init.comps() != n || grid.n() != n {
        return Err(StaticsError::Input("initial field does not match the problem dimension".into()));
    }
    let k = EnergyMatrix::new(grid.clone(), &p.moduli);
    let m = k.unknowns();
    let mut g = vec![0.0; m];
    k.gather(&p.source_values(&grid), &mut g);
    let scale = g.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let tol = opts.tol_res.unwrap_or(1e-8 * scale);
    let max_iter = opts.max_iter.unwrap_or(10 * m);
    let sys = Discrete { k, p, vol: grid.h().powi(n as i32), n, g };
    let precond: Vec<f64> = sys.k.diagonal().iter().map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 }).collect();

    let mut x = vec![0.0; m];
    sys.k.gather(init.values(), &mut x);
    let mut kx = vec![0.0; m];
    sys.k.apply(&x, &mut kx);
    let mut grad = vec![0.0; m];
    let mut energy = sys.energy_gradient(&x, &kx, &mut grad);
    let mut z: Vec<f64> = grad.iter().zip(&precond).map(|(a, b)| a * b).collect();
    let mut d: Vec<f64> = z.iter().map(|v| -v).collect();
    let mut zg: f64 = dot(&z, &grad);
    let mut telemetry = Vec::new();
    let mut res = sys.residual_max(&grad);
    let mut iterations = 0;
    let mut kd = vec![0.0; m];
    let mut converged = res <= tol;
    if opts.record_telemetry {
        telemetry.push(TelemetryRow { iteration: 0, energy, residual: res });
    }
    let mut restarted = false;
    while !converged && iterations < max_iter {
        let mut slope = dot(&grad, &d);
        if slope >= 0.0 {
            d.iter_mut().zip(&z).for_each(|(a, b)| *a = -b);
            slope = -zg;
        }
        sys.k.apply(&d, &mut kd);
        let dkd = dot(&d, &kd);
        let mut alpha = if dkd > 0.0 { -slope / dkd } else { 1.0 };
        let mut accepted = None;
        for _ in 0..60 {
            let de = sys.energy_change(&x, &d, alpha, slope, dkd);
            if de.is_finite() && de <= 1e-4 * alpha * slope {
                accepted = Some(de);
                break;
            }
            alpha *= 0.5;
        }
        let Some(de) = accepted else {
            if restarted {
                break;
            }
            restarted = true;
            d.iter_mut().zip(&z).for_each(|(a, b)| *a = -b);
            continue;
        };
        restarted = false;
        iterations += 1;
        for i in 0..m {
            x[i] += alpha * d[i];
            kx[i] += alpha * kd[i];
        }
        let prev_energy = energy;
        let prev_grad = grad.clone();
        let e_new = sys.energy_gradient(&x, &kx, &mut grad);
        energy = prev_energy + de;
        if e_new < opts.energy_floor || energy < opts.energy_floor {
            return Err(StaticsError::Unbounded { energy: e_new, iterations });
        }
        res = sys.residual_max(&grad);
        if opts.record_telemetry {
            telemetry.push(TelemetryRow { iteration: iterations, energy, residual: res });
        }
        if !res.is_finite() {
            return Err(StaticsError::NonFinite { iterations });
        }
        converged = res <= tol;
        let z_new: Vec<f64> = grad.iter().zip(&precond).map(|(a, b)| a * b).collect();
        let zg_new = dot(&z_new, &grad);
        let beta = ((zg_new - dot(&z_new, &prev_grad)) / zg).max(0.0);
        for i in 0..m {
            d[i] = -z_new[i] + beta * d[i];
        }
        z = z_new;
        zg = zg_new;
        if iterations % 50 == 0 {
            // refresh K x against drift
            sys.k.apply(&x, &mut kx);
        }
    }

    let mut full = vec![0.0; grid.len() * n];
    sys.k.scatter(&x, &mut full);
    let u = GridField::from_values(grid.clone(), n, full)?;
    let check = independent_residual(p, &u)?;
    let stencil = assemble_residual(p, &u)?;
    let mut kx_final = vec![0.0; m];
    sys.k.apply(&x, &mut kx_final);
    let mut scratch = vec![0.0; m];
    let energy = sys.energy_gradient(&x, &kx_final, &mut scratch);
    let sol = StaticSolution {
        residual_norm: check,
        stencil_residual_norm: stencil.max_abs(),
        u,
        energy,
        iterations,
        converged: check <= tol,
        telemetry,
    };
    if !sol.converged {
        return Err(StaticsError::NonConvergence { iterations, residual: check, solution: Box::new(sol) });
    }
    Ok(sol)
}

/// Max-norm of the discrete Euler–Lagrange residual from edge and plaquette sums.
pub fn independent_residual(p: &StaticProblem, u: &GridField) -> Result<f64, StaticsError> {
    let grid = u.grid();
    let n = p.n();
    let vol = grid.h().powi(n as i32);
    let ku = stored_energy_gradient(grid, &p.moduli, u.values());
    let g = p.source_values(grid);
    let mut f = vec![0.0; n];
    let mut worst = 0.0f64;
    for &node in grid.inside_nodes() {
        p.potential.gradient(u.at(node), &mut f);
        for i in 0..n {
            let r = node * n + i;
            worst = worst.max((ku[r] / vol - f[i] - g[r]).abs());
        }
    }
    Ok(worst)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub kappa: f64,
    /// Normalized so that the quadrature of `|u|²` is one.
    pub u: GridField,
    /// `‖A u − κ u‖₂ / ‖u‖₂` over the unknowns.
    pub residual: f64,
    pub iterations: usize,
}

fn lu_of(
    entries: &[(usize, usize, f64)],
    size: usize,
    shift: f64,
) -> Result<faer::sparse::linalg::solvers::Lu<usize, f64>, StaticsError> {
    let mut t: Vec<Triplet<usize, usize, f64>> = entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    if shift != 0.0 {
        t.extend((0..size).map(|i| Triplet::new(i, i, -shift)));
    }
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(size, size, &t)
        .map_err(|e| StaticsError::Solver(format!("sparse assembly: {e:?}")))?;
    a.sp_lu().map_err(|e| StaticsError::Solver(format!("sparse LU: {e:?}")))
}

/// Smallest eigenvalue of the cut-cell operator `−C ∂_k∂_l` by inverse iteration,
/// finished with a shifted factorization once the estimate has settled.
pub fn smallest_eigenpair(p: &StaticProblem) -> Result<Eigenpair, StaticsError> {
    if !p.potential.is_zero() || p.source.is_some() {
        return Err(StaticsError::Input("eigenpairs need a zero potential and no source".into()));
    }
    smallest_eigenpair_on(p.grid()?, &p.moduli)
}

/// Smallest eigenpair of the consistent operator on a given grid.
pub fn smallest_eigenpair_on(grid: Arc<Grid>, moduli: &ElasticModuli) -> Result<Eigenpair, StaticsError> {
    let n = moduli.n();
    if grid.n() != n {
        return Err(StaticsError::Input(format!("moduli of dimension {n} on a {}-dimensional grid", grid.n())));
    }
    let op = ElasticOperator::new(grid.clone(), moduli);
    let ord = ordinals(&grid);
    let entries = op.triplets(&ord);
    let size = grid.inside_nodes().len() * n;
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; size];
        for &(r, c, v) in &entries {
            y[r] += v * x[c];
        }
        y
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x0e16);
    let mut x: Vec<f64> = (0..size).map(|_| rng.gen_range(0.5..1.0)).collect();
    normalize(&mut x);
    let mut lu = lu_of(&entries, size, 0.0)?;
    let mut shift = 0.0;
    let mut kappa = f64::NAN;
    let mut residual = f64::INFINITY;
    let mut shifted = false;
    let mut last_change = f64::INFINITY;
    for it in 1..=500 {
        let b = Mat::from_fn(size, 1, |i, _| x[i]);
        let y = lu.solve(&b);
        x = (0..size).map(|i| y[(i, 0)]).collect();
        normalize(&mut x);
        let ax = apply(&x);
        let k_new = dot(&x, &ax);
        residual = ax.iter().zip(&x).map(|(a, b)| (a - k_new * b).powi(2)).sum::<f64>().sqrt();
        if kappa.is_finite() {
            last_change = ((k_new - kappa) / k_new).abs();
        }
        kappa = k_new;
        if residual <= 1e-10 {
            return finish(grid, n, &x, kappa, residual, it);
        }
        if !shifted && last_change < 1e-6 {
            shift = kappa * (1.0 - 1e-7);
            lu = lu_of(&entries, size, shift)?;
            shifted = true;
        }
    }
    let _ = shift;
    Err(StaticsError::Stagnation { kappa, residual })
}

fn normalize(x: &mut [f64]) {
    let s = dot(x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= s);
}

fn finish(grid: Arc<Grid>, n: usize, x: &[f64], kappa: f64, residual: f64, iterations: usize) -> Result<Eigenpair, StaticsError> {
    let mut full = vec![0.0; grid.len() * n];
    for (o, &node) in grid.inside_nodes().iter().enumerate() {
        full[node * n..(node + 1) * n].copy_from_slice(&x[o * n..(o + 1) * n]);
    }
    // sign convention: largest entry positive
    let big = full.iter().cloned().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    if big < 0.0 {
        full.iter_mut().for_each(|v| *v = -*v);
    }
    let dens: Vec<f64> = (0..grid.len()).map(|m| (0..n).map(|c| full[m * n + c].powi(2)).sum()).collect();
    let norm = grid.volume_integral(&dens).sqrt();
    full.iter_mut().for_each(|v| *v /= norm);
    let u = GridField::from_values(grid, n, full)?;
    Ok(Eigenpair { kappa, u, residual, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elasticity::IsotropicModuli;
    use crate::statics::{ManufacturedSource, SineProduct};

    fn iso(n: usize, mu: f64, la: f64) -> ElasticModuli {
        ElasticModuli::from_lame(&IsotropicModuli::from_f64(mu, la).unwrap(), n)
    }

    fn square() -> DomainSpec {
        DomainSpec::rectangle(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn zero_problem_stays_zero() {
        let p = StaticProblem::new(square(), iso(2, 1.0, 0.0), BodyForcePotential::zero(), 1.0 / 8.0).unwrap();
        let grid = p.grid().unwrap();
        let sol = solve_static(&p, &GridField::zeros(grid, 2), &SolveOptions::default()).unwrap();
        assert_eq!(sol.u.max_abs(), 0.0);
        assert_eq!(sol.energy, 0.0);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn manufactured_square_converges_at_second_order() {
        let mut errs = Vec::new();
        for h in [1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0] {
            let c = iso(2, 1.0, 0.0);
            let exact = SineProduct::first_component(vec![0.0; 2], vec![1.0; 2]);
            let src = ManufacturedSource::new(exact.clone(), c.clone(), BodyForcePotential::zero());
            let p = StaticProblem::new(square(), c, BodyForcePotential::zero(), h).unwrap().with_source(Arc::new(src));
            let grid = p.grid().unwrap();
            let sol = solve_static(&p, &GridField::zeros(grid.clone(), 2), &SolveOptions::default()).unwrap();
            let energies: Vec<f64> = sol.telemetry.iter().map(|r| r.energy).collect();
            assert!(energies.windows(2).all(|w| w[1] <= w[0]));
            let mut err = 0.0f64;
            let mut e = [0.0; 2];
            for &node in grid.inside_nodes() {
                exact.value(&grid.point(node), &mut e);
                for c in 0..2 {
                    err = err.max((sol.u.at(node)[c] - e[c]).abs());
                }
            }
            errs.push(err);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.8, "{errs:?}");
        }
    }

    #[test]
    fn laplacian_square_eigenvalue() {
        let mut prev = None;
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let p = StaticProblem::new(square(), ElasticModuli::laplacian(2), BodyForcePotential::zero(), h).unwrap();
            let e = smallest_eigenpair(&p).unwrap();
            assert!(e.residual <= 1e-10);
            let err = (e.kappa - 2.0 * std::f64::consts::PI.powi(2)).abs();
            if let Some(pe) = prev {
                let ratio: f64 = pe / err;
                assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
            }
            prev = Some(err);
        }
    }
}

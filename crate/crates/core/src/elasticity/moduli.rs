use nalgebra::{DMatrix, SymmetricEigen};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelError;
use crate::symbolic::{modulus_orbit, rat, Atom, DiffExpr, Lame};

/// Eigenvalue tolerance for the positivity and rank-one checks.
pub const TOL_EIG: f64 = 1e-12;

/// Lamé pair with `μ > 0` and `μ + λ > 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsotropicModuli {
    mu: BigRational,
    lambda: BigRational,
}

impl IsotropicModuli {
    pub fn new(mu: BigRational, lambda: BigRational) -> Result<Self, ModelError> {
        if !mu.is_positive() {
            return Err(ModelError::Inadmissible(format!("shear modulus must be positive, got {mu}")));
        }
        if !(&mu + &lambda).is_positive() {
            return Err(ModelError::Inadmissible(format!(
                "mu + lambda must be positive, got mu = {mu}, lambda = {lambda}"
            )));
        }
        Ok(IsotropicModuli { mu, lambda })
    }

    /// Exact conversion of binary floating-point values.
    pub fn from_f64(mu: f64, lambda: f64) -> Result<Self, ModelError> {
        let conv = |x: f64| {
            BigRational::from_float(x).ok_or_else(|| ModelError::Inadmissible(format!("non-finite modulus {x}")))
        };
        IsotropicModuli::new(conv(mu)?, conv(lambda)?)
    }

    pub fn mu(&self) -> &BigRational {
        &self.mu
    }

    pub fn lambda(&self) -> &BigRational {
        &self.lambda
    }
}

/// Constant rank-4 moduli `C^{kl}_{ij}` with exact entries and a floating-point view.
#[derive(Clone, Debug, PartialEq)]
pub struct ElasticModuli {
    n: usize,
    exact: Vec<BigRational>,
    values: Vec<f64>,
    lame: Option<IsotropicModuli>,
}

/// Result of a sampled or spectral positivity check.
#[derive(Clone, Debug, PartialEq)]
pub struct PositivityReport {
    pub pass: bool,
    /// Smallest eigenvalue of the induced quadratic form (positivity) or smallest
    /// acoustic-tensor eigenvalue over the direction set (rank-one check).
    pub min_eigenvalue: f64,
    /// Smallest value over the random trials.
    pub min_sample: f64,
}

fn delta(a: usize, b: usize) -> BigRational {
    if a == b {
        BigRational::one()
    } else {
        BigRational::zero()
    }
}

impl ElasticModuli {
    #[inline]
    pub fn index(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * n + j) * n + k) * n + l
    }

    /// Entries from a function of `(i, j, k, l)` giving `C^{kl}_{ij}`. No symmetry is imposed.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> BigRational) -> Self {
        let mut exact = Vec::with_capacity(n.pow(4));
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        exact.push(f(i, j, k, l));
                    }
                }
            }
        }
        let values = exact.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
        ElasticModuli { n, exact, values, lame: None }
    }

    /// Explicit entries in `index` order; the symmetries are checked.
    pub fn explicit(n: usize, entries: Vec<BigRational>) -> Result<Self, ModelError> {
        if entries.len() != n.pow(4) {
            return Err(ModelError::Inadmissible(format!(
                "expected {} moduli entries, got {}",
                n.pow(4),
                entries.len()
            )));
        }
        let c = ElasticModuli::from_fn(n, |i, j, k, l| entries[Self::index(n, i, j, k, l)].clone());
        c.check_symmetries()?;
        Ok(c)
    }

    /// `C = λ δ_ik δ_jl + μ (δ_ij δ_kl + δ_il δ_jk)`.
    pub fn from_lame(iso: &IsotropicModuli, n: usize) -> Self {
        let (mu, la) = (iso.mu.clone(), iso.lambda.clone());
        let mut c = ElasticModuli::from_fn(n, |i, j, k, l| {
            &la * delta(i, k) * delta(j, l) + &mu * (delta(i, j) * delta(k, l) + delta(i, l) * delta(j, k))
        });
        c.lame = Some(iso.clone());
        c
    }

    /// Decoupled tensor `δ_ij δ_kl`, whose operator is the componentwise Laplacian.
    /// It does not have the full moduli symmetry and is meant for scalar spectrum checks.
    pub fn laplacian(n: usize) -> Self {
        ElasticModuli::from_fn(n, |i, j, k, l| delta(i, j) * delta(k, l))
    }

    /// Average of `entries` over each symmetry orbit.
    pub fn symmetrized(n: usize, entries: &[BigRational]) -> Self {
        ElasticModuli::from_fn(n, |i, j, k, l| {
            let orbit = modulus_orbit((i as u8, j as u8, k as u8, l as u8));
            let mut sum = BigRational::zero();
            for &(a, b, c, d) in &orbit {
                sum += &entries[Self::index(n, a as usize, b as usize, c as usize, d as usize)];
            }
            sum / BigRational::from_integer((orbit.len() as i64).into())
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lame(&self) -> Option<&IsotropicModuli> {
        self.lame.as_ref()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.values[Self::index(self.n, i, j, k, l)]
    }

    pub fn exact(&self, i: usize, j: usize, k: usize, l: usize) -> &BigRational {
        &self.exact[Self::index(self.n, i, j, k, l)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn exact_entries(&self) -> &[BigRational] {
        &self.exact
    }

    pub fn scaled(&self, s: &BigRational) -> Self {
        let n = self.n;
        ElasticModuli::from_fn(n, |i, j, k, l| self.exact(i, j, k, l) * s)
    }

    /// Copy with one entry replaced.
    pub fn with_entry(&self, (i, j, k, l): (usize, usize, usize, usize), value: BigRational) -> Self {
        let mut c = self.clone();
        let idx = Self::index(self.n, i, j, k, l);
        c.values[idx] = value.to_f64().unwrap_or(f64::NAN);
        c.exact[idx] = value;
        c.lame = None;
        c
    }

    /// Constant coefficient expression for `C^{kl}_{ij}`.
    pub fn coefficient_expr(&self, i: usize, j: usize, k: usize, l: usize) -> DiffExpr {
        DiffExpr::constant(self.exact(i, j, k, l).clone())
    }

    /// Exact entry-wise check of the moduli symmetries; reports the first violation.
    pub fn check_symmetries(&self) -> Result<(), ModelError> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let c = self.exact(i, j, k, l);
                        for (a, b, cc, d) in [(k, j, i, l), (i, l, k, j), (j, i, l, k)] {
                            if self.exact(a, b, cc, d) != c {
                                return Err(ModelError::SymmetryViolation {
                                    index: [i, j, k, l],
                                    partner: [a, b, cc, d],
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `C^{kl}_{ij} a^i_k b^j_l` with `a[i][k]`, `b[j][l]` flattened row-major.
    pub fn contract(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let aik = a[i * n + k];
                    if aik == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        s += self.get(i, j, k, l) * aik * b[j * n + l];
                    }
                }
            }
        }
        s
    }

    /// Symmetric matrix of `A ↦ C A A` on `n×n` matrices, rows indexed by `(i, k)`.
    pub fn quadratic_form_matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let m = n * n;
        let mut q = DMatrix::zeros(m, m);
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        let v = self.get(i, j, k, l);
                        q[(i * n + k, j * n + l)] += 0.5 * v;
                        q[(j * n + l, i * n + k)] += 0.5 * v;
                    }
                }
            }
        }
        q
    }

    /// Acoustic tensor `A_ij(w) = C^{kl}_{ij} w_k w_l`.
    pub fn acoustic_tensor(&self, w: &[f64]) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| {
            let mut s = 0.0;
            for k in 0..n {
                for l in 0..n {
                    s += 0.5 * (self.get(i, j, k, l) + self.get(j, i, k, l)) * w[k] * w[l];
                }
            }
            s
        })
    }

    /// Non-negativity of `C a a` over all matrices: spectral check plus random trials.
    pub fn check_positivity(&self, trials: usize, seed: u64) -> PositivityReport {
        let eig = SymmetricEigen::new(self.quadratic_form_matrix());
        let min_eigenvalue = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let n = self.n;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut min_sample = f64::INFINITY;
        for _ in 0..trials {
            let a: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm2: f64 = a.iter().map(|x| x * x).sum();
            min_sample = min_sample.min(self.contract(&a, &a) / norm2.max(f64::MIN_POSITIVE));
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        PositivityReport {
            pass: min_eigenvalue >= -TOL_EIG * scale && min_sample >= -TOL_EIG * scale,
            min_eigenvalue,
            min_sample,
        }
    }

    /// Strict positivity of `C v v w w` over rank-one matrices: the smallest
    /// acoustic-tensor eigenvalue over a direction grid, plus random pairs.
    pub fn check_legendre_hadamard(&self, trials: usize, seed: u64) -> PositivityReport {
        let n = self.n;
        let mut min_eigenvalue = f64::INFINITY;
        for w in direction_grid(n) {
            let eig = SymmetricEigen::new(self.acoustic_tensor(&w));
            min_eigenvalue = eig.eigenvalues.iter().cloned().fold(min_eigenvalue, f64::min);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut min_sample = f64::INFINITY;
        for _ in 0..trials {
            let v = random_unit(&mut rng, n);
            let w = random_unit(&mut rng, n);
            let a: Vec<f64> = (0..n * n).map(|p| v[p / n] * w[p % n]).collect();
            min_sample = min_sample.min(self.contract(&a, &a));
        }
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        PositivityReport {
            pass: min_eigenvalue > TOL_EIG * scale && min_sample > TOL_EIG * scale,
            min_eigenvalue,
            min_sample,
        }
    }

    /// Largest wave speed `sqrt(max_w λ_max(A(w)))` over the direction grid.
    pub fn max_wave_speed(&self) -> f64 {
        let mut top = 0.0f64;
        for w in direction_grid(self.n) {
            let eig = SymmetricEigen::new(self.acoustic_tensor(&w));
            top = eig.eigenvalues.iter().cloned().fold(top, f64::max);
        }
        top.sqrt()
    }

    /// Lamé pair as symbolic atoms: `λ δ_ik δ_jl + μ (δ_ij δ_kl + δ_il δ_jk)`.
    pub fn isotropic_symbolic(i: usize, j: usize, k: usize, l: usize) -> DiffExpr {
        let d = |a: usize, b: usize| i64::from(a == b);
        let mut e = DiffExpr::atom(Atom::Lame(Lame::Lambda)).scale(&rat(d(i, k) * d(j, l), 1));
        e += DiffExpr::atom(Atom::Lame(Lame::Mu)).scale(&rat(d(i, j) * d(k, l) + d(i, l) * d(j, k), 1));
        e
    }

    /// General symmetric moduli as symbolic atoms.
    pub fn general_symbolic(i: usize, j: usize, k: usize, l: usize) -> DiffExpr {
        DiffExpr::atom(Atom::modulus(i as u8, j as u8, k as u8, l as u8))
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

/// Unit vectors through the integer points of `[-m, m]^n` on the cube surface.
pub fn direction_grid(n: usize) -> Vec<Vec<f64>> {
    let m: i64 = match n {
        2 => 64,
        3 => 12,
        _ => 5,
    };
    let side = (2 * m + 1) as usize;
    let mut out = Vec::new();
    for code in 0..side.pow(n as u32) {
        let mut c = code;
        let mut p = Vec::with_capacity(n);
        for _ in 0..n {
            p.push((c % side) as i64 - m);
            c /= side;
        }
        if p.iter().map(|x| x.abs()).max() != Some(m) {
            continue;
        }
        let r = (p.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt();
        out.push(p.iter().map(|&x| x as f64 / r).collect());
    }
    out
}

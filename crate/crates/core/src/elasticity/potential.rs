use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::ModelError;
use crate::symbolic::{rat, Atom, DiffExpr, Field, Monomial};

fn f64_of(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Radial table `F(s) = φ(|s|)` with user-supplied slope `φ'`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialTable {
    r: Vec<f64>,
    value: Vec<f64>,
    slope: Vec<f64>,
}

impl RadialTable {
    pub fn new(r: Vec<f64>, value: Vec<f64>, slope: Vec<f64>) -> Result<Self, ModelError> {
        if r.len() < 2 || r.len() != value.len() || r.len() != slope.len() {
            return Err(ModelError::Inadmissible("radial table needs ≥ 2 rows of (r, φ, φ')".into()));
        }
        if r[0] != 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ModelError::Inadmissible("radial table must start at r = 0 and increase".into()));
        }
        if value[0] != 0.0 {
            return Err(ModelError::Inadmissible(format!("table value at r = 0 must vanish, got {}", value[0])));
        }
        if slope[0] != 0.0 {
            return Err(ModelError::Inadmissible("table slope at r = 0 must vanish for a classical gradient".into()));
        }
        Ok(RadialTable { r, value, slope })
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// Cubic Hermite value and derivative; NaN beyond the table.
    fn eval(&self, r: f64) -> (f64, f64) {
        if !(0.0..=self.r_max()).contains(&r) {
            return (f64::NAN, f64::NAN);
        }
        let i = match self.r.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(i) => i.min(self.r.len() - 2),
            Err(i) => i - 1,
        };
        let (r0, r1) = (self.r[i], self.r[i + 1]);
        let h = r1 - r0;
        let t = (r - r0) / h;
        let (y0, y1, m0, m1) = (self.value[i], self.value[i + 1], self.slope[i] * h, self.slope[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * m1;
        let d = ((6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * m0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * m1) / h;
        (v, d)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    Zero,
    /// `κ |s|² / 2`.
    Quadratic { kappa: BigRational },
    /// `c (|s|²)^{p/2}` with `p ≥ 2`.
    Power { c: BigRational, p: BigRational },
    /// `Σ c_α s^α` without constant term.
    Polynomial { terms: Vec<(BigRational, Vec<u32>)> },
    Tabulated(RadialTable),
}

/// Body-force potential `F(s)` with `F(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct BodyForcePotential {
    kind: PotentialKind,
    /// Cached floating-point parameters.
    c: f64,
    p: f64,
    poly: Vec<(f64, Vec<u32>)>,
}

impl BodyForcePotential {
    fn build(kind: PotentialKind) -> Self {
        let (c, p) = match &kind {
            PotentialKind::Quadratic { kappa } => (f64_of(kappa), 2.0),
            PotentialKind::Power { c, p } => (f64_of(c), f64_of(p)),
            _ => (0.0, 0.0),
        };
        let poly = match &kind {
            PotentialKind::Polynomial { terms } => terms.iter().map(|(c, a)| (f64_of(c), a.clone())).collect(),
            _ => Vec::new(),
        };
        BodyForcePotential { kind, c, p, poly }
    }

    pub fn zero() -> Self {
        Self::build(PotentialKind::Zero)
    }

    pub fn quadratic(kappa: BigRational) -> Self {
        Self::build(PotentialKind::Quadratic { kappa })
    }

    pub fn power(c: BigRational, p: BigRational) -> Result<Self, ModelError> {
        if p < rat(2, 1) {
            return Err(ModelError::Inadmissible(format!("power potentials need p ≥ 2, got {p}")));
        }
        Ok(Self::build(PotentialKind::Power { c, p }))
    }

    pub fn polynomial(terms: Vec<(BigRational, Vec<u32>)>) -> Result<Self, ModelError> {
        let len = terms.first().map(|t| t.1.len()).unwrap_or(0);
        if terms.iter().any(|t| t.1.len() != len) {
            return Err(ModelError::Inadmissible("polynomial exponents differ in length".into()));
        }
        let mut merged: Vec<(BigRational, Vec<u32>)> = Vec::new();
        for (c, a) in terms {
            match merged.iter_mut().find(|t| t.1 == a) {
                Some(t) => t.0 += c,
                None => merged.push((c, a)),
            }
        }
        merged.retain(|t| !t.0.is_zero());
        if merged.iter().any(|t| t.1.iter().all(|&e| e == 0)) {
            return Err(ModelError::Inadmissible("polynomial potential must vanish at the origin".into()));
        }
        Ok(Self::build(PotentialKind::Polynomial { terms: merged }))
    }

    pub fn tabulated(table: RadialTable) -> Self {
        Self::build(PotentialKind::Tabulated(table))
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, PotentialKind::Zero)
    }

    fn check_dim(&self, n: usize) -> Result<(), ModelError> {
        if let PotentialKind::Polynomial { terms } = &self.kind {
            if let Some(t) = terms.first() {
                if t.1.len() != n {
                    return Err(ModelError::Inadmissible(format!(
                        "polynomial potential has {} variables, problem has {n}",
                        t.1.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Validate against a spatial dimension.
    pub fn for_dimension(self, n: usize) -> Result<Self, ModelError> {
        self.check_dim(n)?;
        Ok(self)
    }

    pub fn value(&self, s: &[f64]) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Quadratic { .. } => 0.5 * self.c * norm2(s),
            PotentialKind::Power { .. } => self.c * power_half(norm2(s), self.p),
            PotentialKind::Polynomial { .. } => self
                .poly
                .iter()
                .map(|(c, a)| c * s.iter().zip(a).map(|(x, &e)| x.powi(e as i32)).product::<f64>())
                .sum(),
            PotentialKind::Tabulated(t) => t.eval(norm2(s).sqrt()).0,
        }
    }

    /// `f_k = ∂F/∂s^k`.
    pub fn gradient(&self, s: &[f64], out: &mut [f64]) {
        match &self.kind {
            PotentialKind::Zero => out.fill(0.0),
            PotentialKind::Quadratic { .. } => {
                for (o, x) in out.iter_mut().zip(s) {
                    *o = self.c * x;
                }
            }
            PotentialKind::Power { .. } => {
                let g = self.c * self.p * power_half(norm2(s), self.p - 2.0);
                for (o, x) in out.iter_mut().zip(s) {
                    *o = g * x;
                }
            }
            PotentialKind::Polynomial { .. } => {
                out.fill(0.0);
                for (c, a) in &self.poly {
                    for k in 0..s.len() {
                        if a[k] == 0 {
                            continue;
                        }
                        let mut term = c * a[k] as f64;
                        for (m, (&x, &e)) in s.iter().zip(a).enumerate() {
                            let e = if m == k { e - 1 } else { e };
                            term *= x.powi(e as i32);
                        }
                        out[k] += term;
                    }
                }
            }
            PotentialKind::Tabulated(t) => {
                let r = norm2(s).sqrt();
                if r == 0.0 {
                    out.fill(0.0);
                    return;
                }
                let d = t.eval(r).1;
                for (o, x) in out.iter_mut().zip(s) {
                    *o = d * x / r;
                }
            }
        }
    }

    /// Hessian `∂²F/∂s^j∂s^k`, row-major `n×n`.
    pub fn hessian(&self, s: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        let n = s.len();
        out.fill(0.0);
        match &self.kind {
            PotentialKind::Zero => {}
            PotentialKind::Quadratic { .. } => {
                for k in 0..n {
                    out[k * n + k] = self.c;
                }
            }
            PotentialKind::Power { .. } => {
                let r2 = norm2(s);
                let g = self.c * self.p * power_half(r2, self.p - 2.0);
                let g2 = if self.p == 2.0 { 0.0 } else { self.c * self.p * (self.p - 2.0) * power_half(r2, self.p - 4.0) };
                for j in 0..n {
                    for k in 0..n {
                        out[j * n + k] = g2 * s[j] * s[k] + if j == k { g } else { 0.0 };
                    }
                }
            }
            PotentialKind::Polynomial { .. } => {
                for (c, a) in &self.poly {
                    for j in 0..n {
                        for k in 0..n {
                            let mut e = a.clone();
                            let mut coef = *c;
                            for idx in [j, k] {
                                if e[idx] == 0 {
                                    coef = 0.0;
                                    break;
                                }
                                coef *= e[idx] as f64;
                                e[idx] -= 1;
                            }
                            if coef != 0.0 {
                                out[j * n + k] += coef * s.iter().zip(&e).map(|(x, &p)| x.powi(p as i32)).product::<f64>();
                            }
                        }
                    }
                }
            }
            PotentialKind::Tabulated(_) => {
                return Err(ModelError::Unsupported("tabulated potentials carry no second derivatives".into()))
            }
        }
        Ok(())
    }

    /// `F(u)` as an exact polynomial in the components of `u`, when it is one.
    pub fn symbolic(&self, n: usize) -> Option<DiffExpr> {
        let u = |k: usize| DiffExpr::atom(Atom::Dep(Field::U, k as u8));
        let r2 = (0..n).fold(DiffExpr::zero(), |acc, k| acc + u(k).pow(2));
        match &self.kind {
            PotentialKind::Zero => Some(DiffExpr::zero()),
            PotentialKind::Quadratic { kappa } => Some(r2.scale(&(kappa / rat(2, 1)))),
            PotentialKind::Power { c, p } => {
                let half = p / rat(2, 1);
                if !half.is_integer() {
                    return None;
                }
                Some(r2.pow(half.to_integer().to_u32()?).scale(c))
            }
            PotentialKind::Polynomial { terms } => {
                let mut e = DiffExpr::zero();
                for (c, a) in terms {
                    let m = Monomial::from_factors(a.iter().enumerate().map(|(k, &p)| (Atom::Dep(Field::U, k as u8), p)));
                    e.add_term(m, c.clone());
                }
                Some(e)
            }
            PotentialKind::Tabulated(_) => None,
        }
    }

    /// Human-readable description.
    pub fn describe(&self) -> String {
        match &self.kind {
            PotentialKind::Zero => "F = 0".into(),
            PotentialKind::Quadratic { kappa } => format!("F = {kappa}/2 |s|^2"),
            PotentialKind::Power { c, p } => format!("F = {c} |s|^{p}"),
            PotentialKind::Polynomial { terms } => {
                let parts: Vec<String> = terms.iter().map(|(c, a)| format!("{c}*s^{a:?}")).collect();
                format!("F = {}", parts.join(" + "))
            }
            PotentialKind::Tabulated(t) => format!("F tabulated radially on [0, {}]", t.r_max()),
        }
    }
}

fn norm2(s: &[f64]) -> f64 {
    s.iter().map(|x| x * x).sum()
}

/// `(r²)^{q/2}` with `0^0 = 1` and `0^q = 0` for `q > 0`.
fn power_half(r2: f64, q: f64) -> f64 {
    if q == 0.0 {
        1.0
    } else if q.fract() == 0.0 && (q as i64) % 2 == 0 {
        r2.powi((q / 2.0) as i32)
    } else if r2 == 0.0 {
        0.0
    } else {
        r2.powf(q / 2.0)
    }
}

/// `((n−2)/2) s·f(s) − n F(s)`.
pub fn scaling_deficit(f: &BodyForcePotential, s: &[f64], n: usize) -> f64 {
    let mut g = vec![0.0; s.len()];
    f.gradient(s, &mut g);
    let sf: f64 = s.iter().zip(&g).map(|(a, b)| a * b).sum();
    0.5 * (n as f64 - 2.0) * sf - n as f64 * f.value(s)
}

/// Exact verdict on the sign of the scaling deficit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DeficitSign {
    /// Non-negative with equality only at the origin.
    PositiveDefinite,
    /// Non-negative but vanishing somewhere away from the origin.
    Degenerate,
    /// Negative somewhere.
    Negative,
    /// No exact argument available.
    Unknown,
}

/// Exact sign analysis by coefficient inequalities, for power and polynomial kinds.
pub fn deficit_sign(f: &BodyForcePotential, n: usize) -> (DeficitSign, String) {
    let nn = rat(n as i64, 1);
    let two = rat(2, 1);
    match f.kind() {
        PotentialKind::Zero => (DeficitSign::Degenerate, "deficit vanishes identically".into()),
        PotentialKind::Quadratic { kappa } => {
            let k = -kappa.clone();
            sign_of_radial(&k, &two)
        }
        PotentialKind::Power { c, p } => {
            let k = c * ((&nn - &two) * p / &two - &nn);
            sign_of_radial(&k, p)
        }
        PotentialKind::Polynomial { terms } => {
            let mut deficit: Vec<(BigRational, &Vec<u32>)> = Vec::new();
            for (c, a) in terms {
                let deg: u32 = a.iter().sum();
                let d = c * ((&nn - &two) * rat(deg as i64, 1) / &two - &nn);
                if !d.is_zero() {
                    deficit.push((d, a));
                }
            }
            if deficit.is_empty() {
                return (DeficitSign::Degenerate, "deficit vanishes identically".into());
            }
            let all_even_nonneg = deficit.iter().all(|(d, a)| d.is_positive() && a.iter().all(|e| e % 2 == 0));
            let covers = (0..n).all(|k| {
                deficit.iter().any(|(d, a)| d.is_positive() && a[k] > 0 && a.iter().enumerate().all(|(m, &e)| m == k || e == 0))
            });
            if all_even_nonneg && covers {
                return (
                    DeficitSign::PositiveDefinite,
                    "deficit is a positive combination of even monomials containing a pure power of every component".into(),
                );
            }
            if all_even_nonneg {
                return (
                    DeficitSign::Degenerate,
                    "deficit is non-negative but some axis carries no pure power".into(),
                );
            }
            (DeficitSign::Unknown, "coefficient test inconclusive".into())
        }
        PotentialKind::Tabulated(_) => (DeficitSign::Unknown, "tabulated potential: sampled, not proven".into()),
    }
}

fn sign_of_radial(k: &BigRational, p: &BigRational) -> (DeficitSign, String) {
    let text = format!("deficit = {k} |s|^{p}");
    if k.is_positive() {
        (DeficitSign::PositiveDefinite, text)
    } else if k.is_zero() {
        (DeficitSign::Degenerate, text)
    } else {
        (DeficitSign::Negative, text)
    }
}

/// Coupling potential `H(u, v) = Σ_m c_m (u·v)^m`, `m ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingPotential {
    coeffs: Vec<BigRational>,
    values: Vec<f64>,
}

impl CouplingPotential {
    /// `coeffs[m-1]` multiplies `(u·v)^m`.
    pub fn new(coeffs: Vec<BigRational>) -> Self {
        let values = coeffs.iter().map(f64_of).collect();
        CouplingPotential { coeffs, values }
    }

    /// `H = c u·v`.
    pub fn bilinear(c: BigRational) -> Self {
        CouplingPotential::new(vec![c])
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coeffs
    }

    fn profile(&self, w: f64) -> (f64, f64) {
        let mut h = 0.0;
        let mut dh = 0.0;
        let mut pw = 1.0;
        for (m, c) in self.values.iter().enumerate() {
            dh += c * (m as f64 + 1.0) * pw;
            pw *= w;
            h += c * pw;
        }
        (h, dh)
    }

    pub fn value(&self, u: &[f64], v: &[f64]) -> f64 {
        self.profile(dot(u, v)).0
    }

    /// Writes `H_u = h'(u·v) v` and `H_v = h'(u·v) u`.
    pub fn gradients(&self, u: &[f64], v: &[f64], hu: &mut [f64], hv: &mut [f64]) {
        let dh = self.profile(dot(u, v)).1;
        for k in 0..u.len() {
            hu[k] = dh * v[k];
            hv[k] = dh * u[k];
        }
    }

    pub fn symbolic(&self, n: usize) -> DiffExpr {
        let mut w = DiffExpr::zero();
        for k in 0..n as u8 {
            w += &DiffExpr::atom(Atom::Dep(Field::U, k)) * &DiffExpr::atom(Atom::Dep(Field::V, k));
        }
        let mut out = DiffExpr::zero();
        for (m, c) in self.coeffs.iter().enumerate() {
            out += w.pow(m as u32 + 1).scale(c);
        }
        out
    }

    pub fn is_linear_coupling(&self) -> bool {
        self.coeffs.iter().skip(1).all(|c| c.is_zero())
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(m, c)| if m == 0 { format!("{c} (u.v)") } else { format!("{c} (u.v)^{}", m + 1) })
            .collect();
        if parts.is_empty() {
            "H = 0".into()
        } else {
            format!("H = {}", parts.join(" + "))
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &BodyForcePotential, s: &[f64]) {
        let n = s.len();
        let mut g = vec![0.0; n];
        f.gradient(s, &mut g);
        let eps = 1e-6;
        for k in 0..n {
            let mut a = s.to_vec();
            let mut b = s.to_vec();
            a[k] += eps;
            b[k] -= eps;
            let fd = (f.value(&a) - f.value(&b)) / (2.0 * eps);
            assert!((fd - g[k]).abs() < 1e-6 * (1.0 + g[k].abs()), "{k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn gradients_match_differences() {
        let s = [0.3, -0.7, 0.4];
        fd_check(&BodyForcePotential::quadratic(rat(3, 2)), &s);
        fd_check(&BodyForcePotential::power(rat(1, 1), rat(8, 1)).unwrap(), &s);
        fd_check(&BodyForcePotential::power(rat(2, 1), rat(5, 2)).unwrap(), &s);
        fd_check(
            &BodyForcePotential::polynomial(vec![(rat(1, 1), vec![2, 1, 0]), (rat(-3, 4), vec![0, 0, 4])]).unwrap(),
            &s,
        );
        let rs: Vec<f64> = (0..=40).map(|i| i as f64 * 0.05).collect();
        let table = RadialTable::new(rs.clone(), rs.iter().map(|r| r.powi(4)).collect(), rs.iter().map(|r| 4.0 * r.powi(3)).collect()).unwrap();
        fd_check(&BodyForcePotential::tabulated(table), &s);
    }

    #[test]
    fn power_deficit_formula() {
        let f = BodyForcePotential::power(rat(1, 1), rat(6, 1)).unwrap();
        for s in [[0.1, 0.2, -0.3], [1.5, -0.4, 2.0]] {
            assert!(scaling_deficit(&f, &s, 3).abs() < 1e-12);
        }
        assert_eq!(deficit_sign(&f, 3).0, DeficitSign::Degenerate);
        let f8 = BodyForcePotential::power(rat(1, 1), rat(8, 1)).unwrap();
        assert_eq!(deficit_sign(&f8, 3).0, DeficitSign::PositiveDefinite);
        let s = [0.4, -0.2, 0.9];
        let r8 = s.iter().map(|x| x * x).sum::<f64>().powi(4);
        assert!((scaling_deficit(&f8, &s, 3) - r8).abs() < 1e-12);
        let f2 = BodyForcePotential::power(rat(1, 1), rat(2, 1)).unwrap();
        assert_eq!(deficit_sign(&f2, 3).0, DeficitSign::Negative);
        assert!((scaling_deficit(&f2, &s, 3) + 2.0 * s.iter().map(|x| x * x).sum::<f64>()).abs() < 1e-12);
    }

    #[test]
    fn deficit_in_two_dimensions_is_minus_two_f() {
        let f = BodyForcePotential::polynomial(vec![(rat(1, 1), vec![4, 0]), (rat(2, 1), vec![2, 2])]).unwrap();
        let s = [0.7, -1.1];
        assert!((scaling_deficit(&f, &s, 2) + 2.0 * f.value(&s)).abs() < 1e-12);
    }

    #[test]
    fn polynomial_rejects_constant() {
        assert!(BodyForcePotential::polynomial(vec![(rat(1, 1), vec![0, 0])]).is_err());
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let f = BodyForcePotential::power(rat(-1, 4), rat(4, 1)).unwrap();
        let s = [0.3, -0.5];
        let mut hess = [0.0; 4];
        f.hessian(&s, &mut hess).unwrap();
        let eps = 1e-6;
        for k in 0..2 {
            let mut a = s;
            let mut b = s;
            a[k] += eps;
            b[k] -= eps;
            let (mut ga, mut gb) = ([0.0; 2], [0.0; 2]);
            f.gradient(&a, &mut ga);
            f.gradient(&b, &mut gb);
            for j in 0..2 {
                assert!(((ga[j] - gb[j]) / (2.0 * eps) - hess[j * 2 + k]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn coupling_gradients() {
        let h = CouplingPotential::new(vec![rat(1, 1), rat(1, 2)]);
        let (u, v) = ([0.2, -0.3], [0.5, 0.1]);
        let (mut hu, mut hv) = ([0.0; 2], [0.0; 2]);
        h.gradients(&u, &v, &mut hu, &mut hv);
        let w = 0.2 * 0.5 - 0.3 * 0.1;
        assert!((h.value(&u, &v) - (w + 0.5 * w * w)).abs() < 1e-15);
        assert!((hu[0] - (1.0 + w) * v[0]).abs() < 1e-15);
        assert!((hv[1] - (1.0 + w) * u[1]).abs() < 1e-15);
    }
}

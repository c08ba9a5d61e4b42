//! Derivation logs: generator, prolongation, interior density and flux of each
//! dilation identity, with printed and machine coefficients side by side.

use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::elasticity::lagrangians::{
    coupled_lagrangian, coupled_lagrangian_reference, coupled_system, dynamic_lagrangian, dynamic_system,
    gradient_pairing, static_lagrangian, static_system, velocity_pairing,
};
use crate::elasticity::ElasticModuli;
use crate::symbolic::{
    derive_scaling_identity, dirichlet_contraction, prolong, proportionality, rat, reduce_unit_normal, Atom, DiffExpr,
    Field, Monomial, ScalingIdentity, SymbolicError, Var, VectorFieldGenerator,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DerivationTarget {
    Pohozhaev,
    Morawetz,
    Hamiltonian { a: BigRational, b: BigRational },
}

impl DerivationTarget {
    pub fn name(&self) -> &'static str {
        match self {
            DerivationTarget::Pohozhaev => "pohozhaev",
            DerivationTarget::Morawetz => "morawetz",
            DerivationTarget::Hamiltonian { .. } => "hamiltonian",
        }
    }
}

/// Coefficients of two expressions over a catalog of named structures.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    pub title: String,
    pub rows: Vec<(String, BigRational, BigRational)>,
    pub printed_remainder: DiffExpr,
    pub derived_remainder: DiffExpr,
}

impl CoefficientTable {
    pub fn new(title: &str, catalog: &[(String, DiffExpr)], printed: &DiffExpr, derived: &DiffExpr) -> Self {
        let basis: Vec<DiffExpr> = catalog.iter().map(|(_, e)| e.clone()).collect();
        let (cp, rp) = decompose(printed, &basis);
        let (cd, rd) = decompose(derived, &basis);
        let rows = catalog
            .iter()
            .zip(cp.into_iter().zip(cd))
            .filter(|(_, (p, d))| !p.is_zero() || !d.is_zero())
            .map(|((label, _), (p, d))| (label.clone(), p, d))
            .collect();
        CoefficientTable { title: title.into(), rows, printed_remainder: rp, derived_remainder: rd }
    }

    pub fn agrees(&self) -> bool {
        self.rows.iter().all(|(_, p, d)| p == d) && self.printed_remainder == self.derived_remainder
    }

    pub fn render(&self) -> String {
        let w = self.rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(4).max(4);
        let mut s = format!("{}\n", self.title);
        let _ = writeln!(s, "  {:<w$}  {:>8}  {:>8}  status", "term", "printed", "derived");
        for (label, p, d) in &self.rows {
            let status = if p == d { "agree" } else { "differs" };
            let _ = writeln!(s, "  {:<w$}  {:>8}  {:>8}  {status}", label, p.to_string(), d.to_string());
        }
        let _ = writeln!(s, "  remainder (printed): {}", self.printed_remainder);
        let _ = writeln!(s, "  remainder (derived): {}", self.derived_remainder);
        let _ = writeln!(s, "  verdict: {}", if self.agrees() { "agree" } else { "differ" });
        s
    }
}

/// Exact coefficients of `e` over `basis` (dependent members get zero) and the
/// part of `e` outside their span.
pub fn decompose(e: &DiffExpr, basis: &[DiffExpr]) -> (Vec<BigRational>, DiffExpr) {
    let m = basis.len();
    // echelon rows: (pivot monomial, reduced expression, combination of basis members)
    let mut rows: Vec<(Monomial, DiffExpr, Vec<BigRational>)> = Vec::new();
    for (j, b) in basis.iter().enumerate() {
        let mut r = b.clone();
        let mut combo = vec![BigRational::zero(); m];
        combo[j] = BigRational::one();
        for (p, rp, cp) in &rows {
            let k = r.coefficient(p) / rp.coefficient(p);
            if !k.is_zero() {
                r -= rp.scale(&k);
                combo.iter_mut().zip(cp).for_each(|(a, c)| *a -= &k * c);
            }
        }
        let pivot = r.terms().next().map(|(p, _)| p.clone());
        if let Some(pivot) = pivot {
            rows.push((pivot, r, combo));
        }
    }
    let mut rest = e.clone();
    let mut coeffs = vec![BigRational::zero(); m];
    for (p, rp, cp) in &rows {
        let k = rest.coefficient(p) / rp.coefficient(p);
        if !k.is_zero() {
            rest -= rp.scale(&k);
            coeffs.iter_mut().zip(cp).for_each(|(a, c)| *a += &k * c);
        }
    }
    (coeffs, rest)
}

fn c_sym(i: usize, j: usize, k: usize, l: usize) -> DiffExpr {
    ElasticModuli::general_symbolic(i, j, k, l)
}

fn at(a: Atom) -> DiffExpr {
    DiffExpr::atom(a)
}

fn jet(f: Field, i: usize, var: Var) -> DiffExpr {
    at(Atom::Jet1(f, i as u8, var))
}

fn dep(f: Field, i: usize) -> DiffExpr {
    at(Atom::Dep(f, i as u8))
}

fn nu(k: usize) -> DiffExpr {
    at(Atom::Normal(k as u8))
}

fn sum_c(n: usize, f: impl Fn(usize, usize, usize, usize) -> DiffExpr) -> DiffExpr {
    let mut out = DiffExpr::zero();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    out += &c_sym(i, j, k, l) * &f(i, j, k, l);
                }
            }
        }
    }
    out
}

fn x_dot_nu(n: usize) -> DiffExpr {
    let mut out = DiffExpr::zero();
    for k in 0..n {
        out += &at(Atom::Space(k as u8)) * &nu(k);
    }
    out
}

/// `x^m a^i_m` for component `i`.
fn radial(n: usize, f: Field, i: usize) -> DiffExpr {
    let mut out = DiffExpr::zero();
    for m in 0..n {
        out += &at(Atom::Space(m as u8)) * &jet(f, i, Var::X(m as u8));
    }
    out
}

fn dot(n: usize, a: impl Fn(usize) -> DiffExpr, b: impl Fn(usize) -> DiffExpr) -> DiffExpr {
    let mut out = DiffExpr::zero();
    for i in 0..n {
        out += &a(i) * &b(i);
    }
    out
}

fn t() -> DiffExpr {
    at(Atom::Time)
}

fn cg(n: usize, a: Field, b: Field) -> DiffExpr {
    gradient_pairing(n, &c_sym, a, b)
}

/// Catalog of boundary structures for fields `a`, `b` (equal for the potential system).
fn boundary_catalog(n: usize, a: Field, b: Field, pot: Atom) -> Vec<(String, DiffExpr)> {
    let (sa, sb) = (a.symbol(), b.symbol());
    let xn = x_dot_nu(n);
    let mut cat = vec![
        (format!("C(∇{sa},∇{sb}) (x,ν)"), &cg(n, a, b) * &xn),
        (format!("{sa}_t·{sb}_t (x,ν)"), &velocity_pairing(n, a, b) * &xn),
        (format!("{pot} (x,ν)"), &at(pot) * &xn),
        (format!("t C(∇{sa},∇{sb})"), &t() * &cg(n, a, b)),
    ];
    let pairs = if a == b { vec![(a, b)] } else { vec![(a, b), (b, a)] };
    for (p, q) in pairs {
        let (sp, sq) = (p.symbol(), q.symbol());
        cat.push((
            format!("t C^kl_ij {sp}^i_t {sq}^j_l ν_k"),
            &t() * &sum_c(n, |i, j, k, l| &(&jet(p, i, Var::T) * &jet(q, j, Var::X(l as u8))) * &nu(k)),
        ));
        cat.push((
            format!("C^kl_ij {sq}^j_l ν_k x^m {sp}^i_m"),
            sum_c(n, |i, j, k, l| &(&jet(q, j, Var::X(l as u8)) * &nu(k)) * &radial(n, p, i)),
        ));
        cat.push((
            format!("C^kl_ij {sq}^j_l ν_k {sp}^i"),
            sum_c(n, |i, j, k, l| &(&jet(q, j, Var::X(l as u8)) * &nu(k)) * &dep(p, i)),
        ));
    }
    cat
}

fn dirichlet(e: &DiffExpr, n: usize) -> DiffExpr {
    reduce_unit_normal(&dirichlet_contraction(e), n)
}

fn contracted_catalog(cat: &[(String, DiffExpr)], n: usize) -> Vec<(String, DiffExpr)> {
    let mut out: Vec<(String, DiffExpr)> = Vec::new();
    for (label, e) in cat {
        let c = dirichlet(e, n);
        if c.is_zero() || out.iter().any(|(_, d)| proportionality(&c, d).is_some()) {
            continue;
        }
        out.push((format!("[{label}]"), c));
    }
    out
}

fn header(s: &mut String, title: &str) {
    let _ = writeln!(s, "\n== {title}");
}

fn identity_section(s: &mut String, v: &VectorFieldGenerator, l: &DiffExpr, id: &ScalingIdentity) -> Result<(), SymbolicError> {
    header(s, "generator");
    let _ = writeln!(s, "{v}");
    header(s, "first prolongation");
    let _ = writeln!(s, "{}", prolong(v)?);
    header(s, "lagrangian");
    let _ = writeln!(s, "L = {l}");
    header(s, "interior density pr v(L) + L Div xi");
    let _ = writeln!(s, "{}", id.interior);
    header(s, "flux P^a = L xi^a + dL/df_a Q");
    for (var, p) in id.space.vars().into_iter().zip(&id.flux) {
        let _ = writeln!(s, "P^{var} = {p}");
    }
    header(s, "Dirichlet normal flux P.nu");
    let _ = writeln!(s, "{}", id.dirichlet_normal_flux());
    Ok(())
}

fn sign_section(s: &mut String, id: &ScalingIdentity, rows: &[(String, DiffExpr)]) {
    header(s, "sign relation between Euler expressions and the system");
    for (label, row) in rows {
        let found = id.space.deps().iter().zip(&id.euler).find_map(|((f, k), e)| {
            proportionality(e, row).map(|c| format!("E_{}{}(L) = {c} x ({label})", f.symbol(), k + 1))
        });
        let _ = writeln!(s, "{}", found.unwrap_or_else(|| format!("({label}) is not proportional to any Euler expression")));
    }
}

/// Full derivation log for one identity in dimension `n`.
pub fn derivation_log(target: &DerivationTarget, n: usize) -> Result<String, SymbolicError> {
    let mut s = format!("# derivation log: {} identity, n = {n}\n", target.name());
    let half = rat(1, 2);
    let nm1 = rat(n as i64 - 1, 2);
    match target {
        DerivationTarget::Pohozhaev => {
            let v = VectorFieldGenerator::static_dilation(n)?;
            let l = static_lagrangian(n, &c_sym);
            let id = derive_scaling_identity(&v, &l)?;
            identity_section(&mut s, &v, &l, &id)?;
            let rows: Vec<_> = static_system(n, &c_sym, false)
                .into_iter()
                .enumerate()
                .map(|(i, r)| (format!("static row {}", i + 1), r))
                .collect();
            sign_section(&mut s, &id, &rows);
            let u_f = dot(n, |k| dep(Field::U, k), |k| at(Atom::Fu(k as u8)));
            let printed = &u_f.scale(&rat(n as i64 - 2, 2)) - &at(Atom::F).scale(&rat(n as i64, 1));
            let cat = vec![("u·f".to_string(), u_f), ("F".to_string(), at(Atom::F))];
            header(&mut s, "coefficients");
            s.push_str(&CoefficientTable::new("interior density", &cat, &printed, &id.interior).render());
            let bcat = contracted_catalog(&boundary_catalog(n, Field::U, Field::U, Atom::F), n);
            let printed_b = dirichlet(&(&cg(n, Field::U, Field::U) * &x_dot_nu(n)).scale(&rat(-1, 2)), n);
            s.push_str(
                &CoefficientTable::new("boundary integrand under Dirichlet data (right side)", &bcat, &printed_b, &id.dirichlet_normal_flux())
                    .render(),
            );
        }
        DerivationTarget::Morawetz => {
            let v = VectorFieldGenerator::dynamic_dilation(n)?;
            let l = dynamic_lagrangian(n, &c_sym);
            let id = derive_scaling_identity(&v, &l)?;
            identity_section(&mut s, &v, &l, &id)?;
            let rows: Vec<_> = dynamic_system(n, &c_sym)
                .into_iter()
                .enumerate()
                .map(|(i, r)| (format!("dynamic row {}", i + 1), r))
                .collect();
            sign_section(&mut s, &id, &rows);
            header(&mut s, "coefficients");
            let u = Field::U;
            let u_f = dot(n, |k| dep(u, k), |k| at(Atom::Fu(k as u8)));
            let printed_int = &u_f.scale(&nm1) - &at(Atom::F).scale(&rat(n as i64 + 1, 1));
            let cat = vec![("u·f".to_string(), u_f), ("F".to_string(), at(Atom::F))];
            s.push_str(&CoefficientTable::new("interior density", &cat, &printed_int, &id.interior).render());

            let kin = velocity_pairing(n, u, u);
            let energy = &(&cg(n, u, u) + &kin).scale(&half) - &at(Atom::F);
            let ut_xdu = dot(n, |i| jet(u, i, Var::T), |i| radial(n, u, i));
            let u_ut = dot(n, |i| dep(u, i), |i| jet(u, i, Var::T));
            let printed_density = &(&(&t() * &energy) + &ut_xdu) + &u_ut.scale(&nm1);
            let dcat = vec![
                ("t C(∇u,∇u)".to_string(), &t() * &cg(n, u, u)),
                ("t u_t·u_t".to_string(), &t() * &kin),
                ("t F".to_string(), &t() * &at(Atom::F)),
                ("u_t·(x·∇u)".to_string(), ut_xdu),
                ("u·u_t".to_string(), u_ut),
            ];
            let density = id.time_density().expect("dynamic");
            s.push_str(&CoefficientTable::new("time density", &dcat, &printed_density, density).render());

            // right-side boundary integrand: printed as displayed, derived as −P·ν
            let xn = x_dot_nu(n);
            let printed_b = &(&(&cg(n, u, u) + &kin.scale(&half)) * &xn).scale(&half) + &(&t() * &cg(n, u, u));
            let derived_b = -&id.normal_flux();
            let bcat = boundary_catalog(n, u, u, Atom::F);
            s.push_str(&CoefficientTable::new("boundary integrand, right side (derived = −P·ν)", &bcat, &printed_b, &derived_b).render());
            let ccat = contracted_catalog(&bcat, n);
            s.push_str(
                &CoefficientTable::new(
                    "boundary integrand under Dirichlet data",
                    &ccat,
                    &dirichlet(&printed_b, n),
                    &dirichlet(&derived_b, n),
                )
                .render(),
            );
        }
        DerivationTarget::Hamiltonian { a, b } => {
            let v = VectorFieldGenerator::hamiltonian_dilation(n, a, b)?;
            let l = coupled_lagrangian(n, &c_sym);
            let id = derive_scaling_identity(&v, &l)?;
            identity_section(&mut s, &v, &l, &id)?;
            let system = coupled_system(n, &c_sym);
            let rows: Vec<_> = system
                .iter()
                .enumerate()
                .map(|(r, e)| (format!("{}-row {}", if r < n { 'u' } else { 'v' }, r % n + 1), e.clone()))
                .collect();
            sign_section(&mut s, &id, &rows);
            let reference = coupled_lagrangian_reference(n, &c_sym);
            let ref_id = derive_scaling_identity(&v, &reference)?;
            header(&mut s, "printed lagrangian (1/2 on the elastic pairing)");
            let _ = writeln!(s, "L = {reference}");
            sign_section(&mut s, &ref_id, &rows);

            header(&mut s, "coefficients");
            let (u, w) = (Field::U, Field::V);
            let lcat = vec![
                ("C(∇u,∇v)".to_string(), cg(n, u, w)),
                ("u_t·v_t".to_string(), velocity_pairing(n, u, w)),
                ("H".to_string(), at(Atom::H)),
            ];
            s.push_str(&CoefficientTable::new("lagrangian", &lcat, &reference, &l).render());

            let u_hu = dot(n, |k| dep(u, k), |k| at(Atom::Hu(k as u8)));
            let v_hv = dot(n, |k| dep(w, k), |k| at(Atom::Hv(k as u8)));
            let printed_int = &(&u_hu.scale(a) + &v_hv.scale(b)).scale(&nm1);
            let icat = vec![("u·H_u".to_string(), u_hu), ("v·H_v".to_string(), v_hv), ("H".to_string(), at(Atom::H))];
            s.push_str(&CoefficientTable::new("interior density", &icat, printed_int, &id.interior).render());

            let kin = velocity_pairing(n, u, w);
            let energy = &(&cg(n, u, w) + &kin) - &at(Atom::H);
            let u_x = dot(n, |j| radial(n, u, j), |j| jet(w, j, Var::T));
            let v_x = dot(n, |j| radial(n, w, j), |j| jet(u, j, Var::T));
            let u_vt = dot(n, |j| dep(u, j), |j| jet(w, j, Var::T));
            let v_ut = dot(n, |j| dep(w, j), |j| jet(u, j, Var::T));
            let printed_density =
                &(&(&(&t() * &energy) + &u_x) + &v_x) + &(&u_vt.scale(a) + &v_ut.scale(b)).scale(&nm1);
            let dcat = vec![
                ("t C(∇u,∇v)".to_string(), &t() * &cg(n, u, w)),
                ("t u_t·v_t".to_string(), &t() * &kin),
                ("t H".to_string(), &t() * &at(Atom::H)),
                ("(x·∇u)·v_t".to_string(), u_x),
                ("(x·∇v)·u_t".to_string(), v_x),
                ("u·v_t".to_string(), u_vt),
                ("v·u_t".to_string(), v_ut),
            ];
            let density = id.time_density().expect("dynamic");
            s.push_str(&CoefficientTable::new("time density", &dcat, &printed_density, density).render());

            let xn = x_dot_nu(n);
            let cross = sum_c(n, |i, j, k, l| {
                &(&(&jet(u, i, Var::T) * &jet(w, j, Var::X(l as u8))) * &nu(k))
                    + &(&(&jet(w, j, Var::T) * &jet(u, i, Var::X(k as u8))) * &nu(l))
            });
            let printed_b = &(&(&cg(n, u, w) + &kin) * &xn) + &(&t() * &cross);
            let derived_b = -&id.normal_flux();
            let bcat = boundary_catalog(n, u, w, Atom::H);
            s.push_str(&CoefficientTable::new("boundary integrand, right side (derived = −P·ν)", &bcat, &printed_b, &derived_b).render());
            let ccat = contracted_catalog(&bcat, n);
            s.push_str(
                &CoefficientTable::new(
                    "boundary integrand under Dirichlet data",
                    &ccat,
                    &dirichlet(&printed_b, n),
                    &dirichlet(&derived_b, n),
                )
                .render(),
            );
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decompose_recovers_coefficients() {
        let x = at(Atom::Space(0));
        let y = at(Atom::Space(1));
        let basis = vec![&x + &y, x.clone(), &x * &y];
        let e = &(&x.scale(&rat(3, 1)) + &y) + &(&x * &x);
        let (c, rest) = decompose(&e, &basis);
        // x + y and x are independent; 3x + y = (x+y) + 2x
        assert_eq!(c, vec![rat(1, 1), rat(2, 1), rat(0, 1)]);
        assert_eq!(rest, &x * &x);
    }
}

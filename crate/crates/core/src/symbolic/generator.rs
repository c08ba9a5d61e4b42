use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;

use super::atom::{Atom, Field, Var};
use super::expr::{rat, DiffExpr};
use super::jet::{dirichlet_contraction, reduce_unit_normal, JetSpace};
use super::SymbolicError;

/// Infinitesimal generator `ξ^a ∂_a + φ^{f,k} ∂_{f^k}` on a jet space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorFieldGenerator {
    space: JetSpace,
    /// Indexed like `space.vars()`.
    xi: Vec<DiffExpr>,
    /// Indexed like `space.deps()`.
    phi: Vec<DiffExpr>,
}

fn admissible_coefficient(a: &Atom) -> bool {
    matches!(a, Atom::Time | Atom::Space(_) | Atom::Dep(..) | Atom::Modulus(..) | Atom::Lame(_))
}

impl VectorFieldGenerator {
    pub fn new(space: JetSpace, xi: Vec<DiffExpr>, phi: Vec<DiffExpr>) -> Result<Self, SymbolicError> {
        let nv = space.vars().len();
        let nd = space.deps().len();
        if xi.len() != nv {
            return Err(SymbolicError::DimensionMismatch { expected: nv, got: xi.len() });
        }
        if phi.len() != nd {
            return Err(SymbolicError::DimensionMismatch { expected: nd, got: phi.len() });
        }
        for c in xi.iter().chain(&phi) {
            if let Some(bad) = c.atoms().into_iter().find(|a| !admissible_coefficient(a)) {
                return Err(SymbolicError::InvalidGenerator(format!(
                    "coefficient `{c}` depends on `{bad}`"
                )));
            }
        }
        Ok(VectorFieldGenerator { space, xi, phi })
    }

    /// `x_i ∂x_i + ((2-n)/2) u^i ∂u^i`.
    pub fn static_dilation(n: usize) -> Result<Self, SymbolicError> {
        let space = JetSpace::statics(n)?;
        let w = rat(2 - n as i64, 2);
        Self::dilation(space, |_| w.clone())
    }

    /// `t ∂t + x_i ∂x_i + ((1-n)/2) u^i ∂u^i`.
    pub fn dynamic_dilation(n: usize) -> Result<Self, SymbolicError> {
        let space = JetSpace::dynamics(n)?;
        let w = rat(1 - n as i64, 2);
        Self::dilation(space, |_| w.clone())
    }

    /// `t ∂t + x_i ∂x_i + (a(1-n)/2) u^i ∂u^i + (b(1-n)/2) v^i ∂v^i` with `a + b = 2`
    /// in even dimension.
    pub fn hamiltonian_dilation(n: usize, a: &BigRational, b: &BigRational) -> Result<Self, SymbolicError> {
        if a + b != rat(2, 1) {
            return Err(SymbolicError::Precondition(format!(
                "dilation weights must satisfy a + b = 2, got a = {a}, b = {b}"
            )));
        }
        if !n.is_multiple_of(2) {
            return Err(SymbolicError::Precondition(format!(
                "the coupled system needs an even spatial dimension, got {n}"
            )));
        }
        let space = JetSpace::coupled(n)?;
        let base = rat(1 - n as i64, 2);
        let (wa, wb) = (a * &base, b * &base);
        Self::dilation(space, |f| if f == Field::U { wa.clone() } else { wb.clone() })
    }

    fn dilation(space: JetSpace, weight: impl Fn(Field) -> BigRational) -> Result<Self, SymbolicError> {
        let xi = space.vars().into_iter().map(|v| DiffExpr::atom(JetSpace::var_atom(v))).collect();
        let phi = space
            .deps()
            .into_iter()
            .map(|(f, k)| DiffExpr::atom(Atom::Dep(f, k)).scale(&weight(f)))
            .collect();
        VectorFieldGenerator::new(space, xi, phi)
    }

    /// Unit translation along `var`.
    pub fn translation(space: JetSpace, var: Var) -> Result<Self, SymbolicError> {
        let xi = space
            .vars()
            .into_iter()
            .map(|v| if v == var { DiffExpr::one() } else { DiffExpr::zero() })
            .collect();
        let phi = vec![DiffExpr::zero(); space.deps().len()];
        VectorFieldGenerator::new(space, xi, phi)
    }

    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    pub fn xi(&self) -> &[DiffExpr] {
        &self.xi
    }

    pub fn phi(&self) -> &[DiffExpr] {
        &self.phi
    }

    /// Characteristic `Q^{f,k} = φ^{f,k} - Σ_a f^k_a ξ^a`.
    pub fn characteristic(&self) -> Vec<DiffExpr> {
        let vars = self.space.vars();
        self.space
            .deps()
            .into_iter()
            .zip(&self.phi)
            .map(|((f, k), phi)| {
                let mut q = phi.clone();
                for (var, xi) in vars.iter().zip(&self.xi) {
                    q -= &DiffExpr::atom(Atom::Jet1(f, k, *var)) * xi;
                }
                q
            })
            .collect()
    }

    /// Total divergence of the base coefficients, `D_a ξ^a`.
    pub fn divergence_xi(&self) -> Result<DiffExpr, SymbolicError> {
        self.space.divergence(&self.xi)
    }
}

impl fmt::Display for VectorFieldGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (var, xi) in self.space.vars().into_iter().zip(&self.xi) {
            if !xi.is_zero() {
                parts.push(format!("({xi}) d/d{var}"));
            }
        }
        for ((fd, k), phi) in self.space.deps().into_iter().zip(&self.phi) {
            if !phi.is_zero() {
                parts.push(format!("({phi}) d/d{}", Atom::Dep(fd, k)));
            }
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// First prolongation of a generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProlongedField {
    base: VectorFieldGenerator,
    /// `[dep][var]`, indexed like `deps()` and `vars()`.
    phi1: Vec<Vec<DiffExpr>>,
}

impl ProlongedField {
    pub fn base(&self) -> &VectorFieldGenerator {
        &self.base
    }

    /// Coefficient of `∂/∂ f^k_var`.
    pub fn jet_coefficient(&self, field: Field, comp: u8, var: Var) -> Option<&DiffExpr> {
        let space = self.base.space();
        let d = space.deps().iter().position(|&p| p == (field, comp))?;
        let v = space.vars().iter().position(|&p| p == var)?;
        Some(&self.phi1[d][v])
    }

    pub fn table(&self) -> &[Vec<DiffExpr>] {
        &self.phi1
    }
}

impl fmt::Display for ProlongedField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        let space = self.base.space();
        for ((fd, k), row) in space.deps().into_iter().zip(&self.phi1) {
            for (var, c) in space.vars().into_iter().zip(row) {
                if !c.is_zero() {
                    write!(f, " + ({c}) d/d{}", Atom::Jet1(fd, k, var))?;
                }
            }
        }
        Ok(())
    }
}

/// `φ^{f,k}_a = D_a φ^{f,k} - Σ_b (D_a ξ^b) f^k_b`, extended uniformly to time.
pub fn prolong(v: &VectorFieldGenerator) -> Result<ProlongedField, SymbolicError> {
    let space = v.space();
    let vars = space.vars();
    let mut dxi = Vec::with_capacity(vars.len());
    for &a in &vars {
        let row: Vec<DiffExpr> = v
            .xi()
            .iter()
            .map(|xi| space.total_derivative(xi, a))
            .collect::<Result<_, _>>()?;
        dxi.push(row);
    }
    let mut phi1 = Vec::new();
    for ((f, k), phi) in space.deps().into_iter().zip(v.phi()) {
        let mut row = Vec::with_capacity(vars.len());
        for (ai, &a) in vars.iter().enumerate() {
            let mut c = space.total_derivative(phi, a)?;
            for (bi, &b) in vars.iter().enumerate() {
                c -= &dxi[ai][bi] * &DiffExpr::atom(Atom::Jet1(f, k, b));
            }
            row.push(c);
        }
        phi1.push(row);
    }
    Ok(ProlongedField { base: v.clone(), phi1 })
}

/// `pr v (L)` for a first-order Lagrangian.
pub fn apply_prolonged(pv: &ProlongedField, l: &DiffExpr) -> Result<DiffExpr, SymbolicError> {
    if l.any_atom(|a| matches!(a, Atom::Jet2(..))) {
        return Err(SymbolicError::SecondOrderInput);
    }
    let v = pv.base();
    let space = v.space();
    let vars = space.vars();
    let mut out = DiffExpr::zero();
    for (var, xi) in vars.iter().zip(v.xi()) {
        if !xi.is_zero() {
            out += xi * &space.partial(l, &JetSpace::var_atom(*var))?;
        }
    }
    for (di, (f, k)) in space.deps().into_iter().enumerate() {
        let phi = &v.phi()[di];
        if !phi.is_zero() {
            out += phi * &space.partial(l, &Atom::Dep(f, k))?;
        }
        for (vi, var) in vars.iter().enumerate() {
            let c = &pv.phi1[di][vi];
            if !c.is_zero() {
                out += c * &space.partial(l, &Atom::Jet1(f, k, *var))?;
            }
        }
    }
    Ok(out)
}

/// Pieces of the conservation-law form of a generator acting on a Lagrangian:
/// `pr v(L) + L Dξ = Σ E(L)·Q + Div P`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalingIdentity {
    /// `pr v(L) + L D_a ξ^a`.
    pub interior: DiffExpr,
    /// `Q` indexed like `deps()`.
    pub characteristic: Vec<DiffExpr>,
    /// `E(L)` indexed like `deps()`.
    pub euler: Vec<DiffExpr>,
    /// `P^a = L ξ^a + Σ ∂L/∂f^k_a Q^{f,k}`, indexed like `vars()`.
    pub flux: Vec<DiffExpr>,
    pub space: JetSpace,
}

impl ScalingIdentity {
    /// Time component of the flux, when the space has time.
    pub fn time_density(&self) -> Option<&DiffExpr> {
        self.space.has_time().then(|| &self.flux[0])
    }

    /// Spatial flux components.
    pub fn spatial_flux(&self) -> &[DiffExpr] {
        let skip = usize::from(self.space.has_time());
        &self.flux[skip..]
    }

    /// Normal flux `P·ν` before any boundary conditions are imposed.
    pub fn normal_flux(&self) -> DiffExpr {
        let mut out = DiffExpr::zero();
        for (i, p) in self.spatial_flux().iter().enumerate() {
            out += p * &DiffExpr::atom(Atom::Normal(i as u8));
        }
        out
    }

    /// `P·ν` under homogeneous Dirichlet conditions, reduced with `|ν| = 1`.
    pub fn dirichlet_normal_flux(&self) -> DiffExpr {
        reduce_unit_normal(&dirichlet_contraction(&self.normal_flux()), self.space.n())
    }

    /// `Σ E(L)·Q`.
    pub fn euler_pairing(&self) -> DiffExpr {
        let mut out = DiffExpr::zero();
        for (e, q) in self.euler.iter().zip(&self.characteristic) {
            out += e * q;
        }
        out
    }
}

/// Build interior density, characteristic, Euler expressions and flux.
pub fn derive_scaling_identity(v: &VectorFieldGenerator, l: &DiffExpr) -> Result<ScalingIdentity, SymbolicError> {
    let space = v.space().clone();
    let pv = prolong(v)?;
    let interior = apply_prolonged(&pv, l)? + l * &v.divergence_xi()?;
    let characteristic = v.characteristic();
    let euler = space.euler_all(l)?;
    let deps = space.deps();
    let mut flux = Vec::new();
    for (var, xi) in space.vars().into_iter().zip(v.xi()) {
        let mut p = l * xi;
        for ((f, k), q) in deps.iter().zip(&characteristic) {
            let dl = space.partial(l, &Atom::Jet1(*f, *k, var))?;
            if !dl.is_zero() {
                p += &dl * q;
            }
        }
        flux.push(p);
    }
    Ok(ScalingIdentity { interior, characteristic, euler, flux, space })
}

/// `pr v(L) + L Dξ - Σ E(L)·Q - Div P`; identically zero for every first-order `L`.
pub fn noether_residual(v: &VectorFieldGenerator, l: &DiffExpr) -> Result<DiffExpr, SymbolicError> {
    let id = derive_scaling_identity(v, l)?;
    let div = id.space.divergence(&id.flux)?;
    Ok(&(&id.interior - &id.euler_pairing()) - &div)
}

/// Constant multiple `c` such that `e = c·reference`, if one exists.
pub fn proportionality(e: &DiffExpr, reference: &DiffExpr) -> Option<BigRational> {
    if reference.is_zero() {
        return e.is_zero().then(BigRational::zero);
    }
    let (m, c) = reference.terms().next()?;
    let ratio = e.coefficient(m) / c;
    (reference.scale(&ratio) == *e).then_some(ratio)
}

//! Seeded random generators, Lagrangians and fluxes for property checks.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{rat, Atom, DiffExpr, Field, JetSpace, SymbolicError, VectorFieldGenerator};

fn coefficient(rng: &mut impl Rng) -> DiffExpr {
    let mut p: i64 = rng.gen_range(-5..=4);
    if p >= 0 {
        p += 1;
    }
    DiffExpr::rational(p, rng.gen_range(1..=4))
}

/// Sum of `terms` monomials with up to `max_deg` factors drawn from `atoms`.
pub fn random_polynomial(rng: &mut impl Rng, atoms: &[Atom], terms: usize, max_deg: usize) -> DiffExpr {
    let mut out = DiffExpr::zero();
    for _ in 0..terms {
        let mut m = coefficient(rng);
        for _ in 0..rng.gen_range(0..=max_deg) {
            m = &m * &DiffExpr::atom(*atoms.choose(rng).expect("nonempty atom list"));
        }
        out += m;
    }
    out
}

/// Independent and dependent variable atoms of a space.
pub fn base_atoms(space: &JetSpace) -> Vec<Atom> {
    let mut atoms: Vec<Atom> = space.vars().into_iter().map(JetSpace::var_atom).collect();
    atoms.extend(space.deps().into_iter().map(|(f, k)| Atom::Dep(f, k)));
    atoms
}

/// Base atoms, first derivatives and the potential symbols available on the space.
pub fn first_order_atoms(space: &JetSpace) -> Vec<Atom> {
    let mut atoms = base_atoms(space);
    for (f, k) in space.deps() {
        for v in space.vars() {
            atoms.push(Atom::Jet1(f, k, v));
        }
    }
    if space.fields().contains(&Field::V) {
        atoms.push(Atom::H);
    } else {
        atoms.push(Atom::F);
    }
    atoms
}

/// Generator with polynomial coefficients in `(t, x, u)`.
pub fn random_generator(space: &JetSpace, rng: &mut impl Rng) -> Result<VectorFieldGenerator, SymbolicError> {
    let atoms = base_atoms(space);
    let mut draw = || {
        if rng.gen_bool(0.25) {
            DiffExpr::zero()
        } else {
            random_polynomial(rng, &atoms, 2, 2)
        }
    };
    let xi = space.vars().iter().map(|_| draw()).collect();
    let phi = space.deps().iter().map(|_| draw()).collect();
    VectorFieldGenerator::new(space.clone(), xi, phi)
}

/// First-order Lagrangian: random polynomial plus a random quadratic gradient term.
pub fn random_lagrangian(space: &JetSpace, rng: &mut impl Rng) -> DiffExpr {
    let atoms = first_order_atoms(space);
    let mut l = random_polynomial(rng, &atoms, 4, 3);
    let (f, k) = *space.deps().choose(rng).expect("space has fields");
    let v = *space.vars().choose(rng).expect("space has variables");
    l += DiffExpr::atom(Atom::Jet1(f, k, v)).pow(2).scale(&rat(1, 2));
    l
}

/// Zeroth-order flux, one component per independent variable.
pub fn random_flux(space: &JetSpace, rng: &mut impl Rng) -> Vec<DiffExpr> {
    let mut atoms = base_atoms(space);
    atoms.push(if space.fields().contains(&Field::V) { Atom::H } else { Atom::F });
    space.vars().into_iter().map(|_| random_polynomial(rng, &atoms, 3, 3)).collect()
}

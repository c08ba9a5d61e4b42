//! Symbolic Lagrangians and the systems they generate.
//!
//! Moduli enter through a closure returning the coefficient of `C^{kl}_{ij}`
//! for `(i, j, k, l)`, so the same builders serve general symbolic moduli,
//! Lamé atoms and concrete tensors.

use crate::symbolic::{rat, Atom, DiffExpr, Field, JetSpace, Var};

pub type Moduli<'a> = &'a dyn Fn(usize, usize, usize, usize) -> DiffExpr;

fn jet(f: Field, k: usize, var: Var) -> DiffExpr {
    DiffExpr::atom(Atom::Jet1(f, k as u8, var))
}

fn dep(f: Field, k: usize) -> DiffExpr {
    DiffExpr::atom(Atom::Dep(f, k as u8))
}

/// `C^{kl}_{ij} a^i_k b^j_l` for gradients of fields `a` and `b`.
pub fn gradient_pairing(n: usize, c: Moduli, a: Field, b: Field) -> DiffExpr {
    let mut out = DiffExpr::zero();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let cc = c(i, j, k, l);
                    if cc.is_zero() {
                        continue;
                    }
                    out += &(&cc * &jet(a, i, Var::X(k as u8))) * &jet(b, j, Var::X(l as u8));
                }
            }
        }
    }
    out
}

/// `½ C^{kl}_{ij} e^i_k e^j_l` with the symmetric strain `e^i_k = ½(u^i_k + u^k_i)`.
pub fn strain_energy(n: usize, c: Moduli) -> DiffExpr {
    let e = |i: usize, k: usize| (&jet(Field::U, i, Var::X(k as u8)) + &jet(Field::U, k, Var::X(i as u8))).scale(&rat(1, 2));
    let mut out = DiffExpr::zero();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let cc = c(i, j, k, l);
                    if cc.is_zero() {
                        continue;
                    }
                    out += &(&cc * &e(i, k)) * &e(j, l);
                }
            }
        }
    }
    out.scale(&rat(1, 2))
}

/// `½ μ |∇u|² + ½ (μ + λ)(∇·u)²` with Lamé coefficients given as expressions.
pub fn navier_energy(n: usize, mu: &DiffExpr, lambda: &DiffExpr) -> DiffExpr {
    let mut grad2 = DiffExpr::zero();
    let mut div = DiffExpr::zero();
    for i in 0..n {
        for k in 0..n {
            grad2 += jet(Field::U, i, Var::X(k as u8)).pow(2);
        }
        div += jet(Field::U, i, Var::X(i as u8));
    }
    (&(mu * &grad2) + &(&(mu + lambda) * &div.pow(2))).scale(&rat(1, 2))
}

/// `a_t · b_t`.
pub fn velocity_pairing(n: usize, a: Field, b: Field) -> DiffExpr {
    let mut out = DiffExpr::zero();
    for i in 0..n {
        out += &jet(a, i, Var::T) * &jet(b, i, Var::T);
    }
    out
}

/// `½ C u u − F(u)` on the static jet space.
pub fn static_lagrangian(n: usize, c: Moduli) -> DiffExpr {
    &gradient_pairing(n, c, Field::U, Field::U).scale(&rat(1, 2)) - &DiffExpr::atom(Atom::F)
}

/// `½ C e e − F(u)`.
pub fn static_strain_lagrangian(n: usize, c: Moduli) -> DiffExpr {
    &strain_energy(n, c) - &DiffExpr::atom(Atom::F)
}

/// Static Lagrangian with an external source: `½ C u u − F(u) − g(x)·u`.
pub fn forced_static_lagrangian(n: usize, c: Moduli) -> DiffExpr {
    let mut l = static_lagrangian(n, c);
    for k in 0..n {
        l -= &DiffExpr::atom(Atom::Source(k as u8)) * &dep(Field::U, k);
    }
    l
}

/// `½ C u u − ½ |u_t|² − F(u)`.
pub fn dynamic_lagrangian(n: usize, c: Moduli) -> DiffExpr {
    let l = &gradient_pairing(n, c, Field::U, Field::U) - &velocity_pairing(n, Field::U, Field::U);
    &l.scale(&rat(1, 2)) - &DiffExpr::atom(Atom::F)
}

/// Coupled Lagrangian `C u v − u_t·v_t − H(u, v)`, whose Euler expressions
/// give the coupled system with cross-gradient forcing.
pub fn coupled_lagrangian(n: usize, c: Moduli) -> DiffExpr {
    &(&gradient_pairing(n, c, Field::U, Field::V) - &velocity_pairing(n, Field::U, Field::V)) - &DiffExpr::atom(Atom::H)
}

/// The coupled Lagrangian in its reference form `½ C u v − u_t·v_t − H(u, v)`.
pub fn coupled_lagrangian_reference(n: usize, c: Moduli) -> DiffExpr {
    &(&gradient_pairing(n, c, Field::U, Field::V).scale(&rat(1, 2)) - &velocity_pairing(n, Field::U, Field::V))
        - &DiffExpr::atom(Atom::H)
}

fn second(f: Field, j: usize, k: usize, l: usize) -> DiffExpr {
    DiffExpr::atom(Atom::jet2(f, j as u8, Var::X(k as u8), Var::X(l as u8)))
}

/// `C^{kl}_{ij} f^j_{kl}` for row `i`.
pub fn elastic_operator(n: usize, c: Moduli, f: Field, i: usize) -> DiffExpr {
    let mut out = DiffExpr::zero();
    for j in 0..n {
        for k in 0..n {
            for l in 0..n {
                let cc = c(i, j, k, l);
                if !cc.is_zero() {
                    out += &cc * &second(f, j, k, l);
                }
            }
        }
    }
    out
}

/// Rows `C^{kl}_{ij} u^j_{kl} + f_i(u) (+ g_i)`.
pub fn static_system(n: usize, c: Moduli, forced: bool) -> Vec<DiffExpr> {
    (0..n)
        .map(|i| {
            let mut r = &elastic_operator(n, c, Field::U, i) + &DiffExpr::atom(Atom::Fu(i as u8));
            if forced {
                r += DiffExpr::atom(Atom::Source(i as u8));
            }
            r
        })
        .collect()
}

/// Rows `−u^i_tt + C^{kl}_{ij} u^j_{kl} + f_i(u)`.
pub fn dynamic_system(n: usize, c: Moduli) -> Vec<DiffExpr> {
    (0..n)
        .map(|i| {
            let utt = DiffExpr::atom(Atom::jet2(Field::U, i as u8, Var::T, Var::T));
            &(&elastic_operator(n, c, Field::U, i) + &DiffExpr::atom(Atom::Fu(i as u8))) - &utt
        })
        .collect()
}

/// Rows of the coupled system, `u`-rows first:
/// `−u_tt + C u_kl + H_v` and `−v_tt + C v_kl + H_u`.
pub fn coupled_system(n: usize, c: Moduli) -> Vec<DiffExpr> {
    let mut rows = Vec::with_capacity(2 * n);
    for (f, forcing) in [(Field::U, Atom::Hv as fn(u8) -> Atom), (Field::V, Atom::Hu as fn(u8) -> Atom)] {
        for i in 0..n {
            let tt = DiffExpr::atom(Atom::jet2(f, i as u8, Var::T, Var::T));
            rows.push(&(&elastic_operator(n, c, f, i) + &DiffExpr::atom(forcing(i as u8))) - &tt);
        }
    }
    rows
}

/// Jet space matching a Lagrangian family.
pub fn space_for(n: usize, time: bool, coupled: bool) -> JetSpace {
    match (time, coupled) {
        (false, _) => JetSpace::statics(n),
        (true, false) => JetSpace::dynamics(n),
        (true, true) => JetSpace::coupled(n),
    }
    .expect("dimension validated by caller")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elasticity::ElasticModuli;

    #[test]
    fn strain_and_gradient_forms_agree_under_symmetry() {
        for n in 2..=3 {
            let c: Moduli = &ElasticModuli::general_symbolic;
            assert_eq!(strain_energy(n, c), gradient_pairing(n, c, Field::U, Field::U).scale(&rat(1, 2)));
        }
    }

    #[test]
    fn static_euler_is_minus_system() {
        let n = 2;
        let c: Moduli = &ElasticModuli::general_symbolic;
        let space = space_for(n, false, false);
        let l = static_lagrangian(n, c);
        let sys = static_system(n, c, false);
        for i in 0..n {
            assert_eq!(space.euler(&l, Field::U, i as u8).unwrap(), -&sys[i]);
        }
    }

    #[test]
    fn coupled_euler_pairs_with_cross_rows() {
        let n = 2;
        let c: Moduli = &ElasticModuli::general_symbolic;
        let space = space_for(n, true, true);
        let l = coupled_lagrangian(n, c);
        let sys = coupled_system(n, c);
        for i in 0..n {
            assert_eq!(space.euler(&l, Field::V, i as u8).unwrap(), -&sys[i]);
            assert_eq!(space.euler(&l, Field::U, i as u8).unwrap(), -&sys[n + i]);
        }
    }
}

use num_rational::BigRational;
use num_traits::One;

use super::atom::{Atom, Field, Var};
use super::expr::{DiffExpr, Monomial};
use super::SymbolicError;

/// Coordinates of a first-order jet space: independent variables and fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JetSpace {
    n: usize,
    time: bool,
    fields: Vec<Field>,
}

impl JetSpace {
    pub fn new(n: usize, time: bool, fields: Vec<Field>) -> Result<Self, SymbolicError> {
        if !(2..=4).contains(&n) {
            return Err(SymbolicError::Precondition(format!(
                "spatial dimension must be 2, 3 or 4, got {n}"
            )));
        }
        if fields.is_empty() {
            return Err(SymbolicError::Precondition("no dependent fields".into()));
        }
        Ok(JetSpace { n, time, fields })
    }

    /// `x` and `u` only.
    pub fn statics(n: usize) -> Result<Self, SymbolicError> {
        JetSpace::new(n, false, vec![Field::U])
    }

    /// `t`, `x` and `u`.
    pub fn dynamics(n: usize) -> Result<Self, SymbolicError> {
        JetSpace::new(n, true, vec![Field::U])
    }

    /// `t`, `x`, `u` and `v`.
    pub fn coupled(n: usize) -> Result<Self, SymbolicError> {
        JetSpace::new(n, true, vec![Field::U, Field::V])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_time(&self) -> bool {
        self.time
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    /// Independent variables, time first when present.
    pub fn vars(&self) -> Vec<Var> {
        let mut v = Vec::with_capacity(self.n + 1);
        if self.time {
            v.push(Var::T);
        }
        v.extend((0..self.n as u8).map(Var::X));
        v
    }

    pub fn spatial_vars(&self) -> Vec<Var> {
        (0..self.n as u8).map(Var::X).collect()
    }

    /// Dependent variables as (field, component), field-major.
    pub fn deps(&self) -> Vec<(Field, u8)> {
        self.fields
            .iter()
            .flat_map(|&f| (0..self.n as u8).map(move |k| (f, k)))
            .collect()
    }

    pub fn var_atom(var: Var) -> Atom {
        match var {
            Var::T => Atom::Time,
            Var::X(i) => Atom::Space(i),
        }
    }

    fn chain(&self, var: Var, terms: impl Fn(Field, u8) -> Option<Atom>) -> DiffExpr {
        let mut out = DiffExpr::zero();
        for f in [Field::U, Field::V] {
            for k in 0..self.n as u8 {
                if let Some(a) = terms(f, k) {
                    out.add_term(
                        Monomial::from_factors([(a, 1), (Atom::Jet1(f, k, var), 1)]),
                        BigRational::one(),
                    );
                }
            }
        }
        out
    }

    fn atom_total_derivative(&self, atom: &Atom, var: Var) -> Result<DiffExpr, SymbolicError> {
        Ok(match *atom {
            Atom::Modulus(..) | Atom::Lame(_) => DiffExpr::zero(),
            Atom::Time => {
                if var == Var::T {
                    DiffExpr::one()
                } else {
                    DiffExpr::zero()
                }
            }
            Atom::Space(i) => {
                if var == Var::X(i) {
                    DiffExpr::one()
                } else {
                    DiffExpr::zero()
                }
            }
            Atom::Normal(_) | Atom::NormalDeriv(..) => {
                return Err(SymbolicError::BoundaryAtom(*atom))
            }
            Atom::Dep(f, k) => DiffExpr::atom(Atom::Jet1(f, k, var)),
            Atom::Jet1(f, k, a) => DiffExpr::atom(Atom::jet2(f, k, var, a)),
            Atom::Jet2(..) => return Err(SymbolicError::OrderExceeded(*atom)),
            Atom::F => self.chain(var, |f, k| (f == Field::U).then_some(Atom::Fu(k))),
            Atom::Fu(j) => self.chain(var, |f, k| (f == Field::U).then(|| Atom::fuu(j, k))),
            Atom::H => self.chain(var, |f, k| {
                Some(if f == Field::U { Atom::Hu(k) } else { Atom::Hv(k) })
            }),
            Atom::Hu(j) => self.chain(var, |f, k| {
                Some(if f == Field::U { Atom::huu(j, k) } else { Atom::Huv(j, k) })
            }),
            Atom::Hv(j) => self.chain(var, |f, k| {
                Some(if f == Field::U { Atom::Huv(k, j) } else { Atom::hvv(j, k) })
            }),
            Atom::Fuu(..) | Atom::Huu(..) | Atom::Huv(..) | Atom::Hvv(..) => {
                return Err(SymbolicError::OrderExceeded(*atom))
            }
            Atom::Source(k) => match var {
                Var::X(i) => DiffExpr::atom(Atom::SourceX(k, i)),
                Var::T => DiffExpr::zero(),
            },
            Atom::SourceX(k, i) => match var {
                Var::X(j) => DiffExpr::atom(Atom::source_xx(k, i, j)),
                Var::T => DiffExpr::zero(),
            },
            Atom::SourceXX(..) => return Err(SymbolicError::OrderExceeded(*atom)),
        })
    }

    /// Total derivative `D_var e`, expanding potentials by the chain rule.
    pub fn total_derivative(&self, e: &DiffExpr, var: Var) -> Result<DiffExpr, SymbolicError> {
        if let Some(a) = e.atoms().into_iter().find(|a| matches!(a, Atom::Jet2(..))) {
            return Err(SymbolicError::OrderExceeded(a));
        }
        e.derivative_with(|a| self.atom_total_derivative(a, var))
    }

    /// Partial derivative with respect to a jet coordinate, treating every
    /// other coordinate as independent. Potentials depend on the fields.
    pub fn partial(&self, e: &DiffExpr, coord: &Atom) -> Result<DiffExpr, SymbolicError> {
        let coord = *coord;
        e.derivative_with(|a| {
            if *a == coord {
                return Ok(DiffExpr::one());
            }
            let d = match (*a, coord) {
                (Atom::F, Atom::Dep(Field::U, k)) => Atom::Fu(k),
                (Atom::Fu(j), Atom::Dep(Field::U, k)) => Atom::fuu(j, k),
                (Atom::H, Atom::Dep(Field::U, k)) => Atom::Hu(k),
                (Atom::H, Atom::Dep(Field::V, k)) => Atom::Hv(k),
                (Atom::Hu(j), Atom::Dep(Field::U, k)) => Atom::huu(j, k),
                (Atom::Hu(j), Atom::Dep(Field::V, k)) => Atom::Huv(j, k),
                (Atom::Hv(j), Atom::Dep(Field::U, k)) => Atom::Huv(k, j),
                (Atom::Hv(j), Atom::Dep(Field::V, k)) => Atom::hvv(j, k),
                (Atom::Fuu(..), Atom::Dep(Field::U, _))
                | (Atom::Huu(..) | Atom::Huv(..) | Atom::Hvv(..), Atom::Dep(..)) => {
                    return Err(SymbolicError::OrderExceeded(*a))
                }
                (Atom::Source(k), Atom::Space(i)) => Atom::SourceX(k, i),
                (Atom::SourceX(k, i), Atom::Space(j)) => Atom::source_xx(k, i, j),
                (Atom::SourceXX(..), Atom::Space(_)) => {
                    return Err(SymbolicError::OrderExceeded(*a))
                }
                _ => return Ok(DiffExpr::zero()),
            };
            Ok(DiffExpr::atom(d))
        })
    }

    /// Euler operator `E_(field,comp)(L)`.
    pub fn euler(&self, l: &DiffExpr, field: Field, comp: u8) -> Result<DiffExpr, SymbolicError> {
        if l.any_atom(|a| matches!(a, Atom::Jet2(..))) {
            return Err(SymbolicError::SecondOrderInput);
        }
        let mut out = self.partial(l, &Atom::Dep(field, comp))?;
        for var in self.vars() {
            let p = self.partial(l, &Atom::Jet1(field, comp, var))?;
            out -= self.total_derivative(&p, var)?;
        }
        Ok(out)
    }

    /// Euler expressions for every dependent variable, in `deps()` order.
    pub fn euler_all(&self, l: &DiffExpr) -> Result<Vec<DiffExpr>, SymbolicError> {
        self.deps().into_iter().map(|(f, k)| self.euler(l, f, k)).collect()
    }

    /// Total divergence `Σ D_a P^a` with `flux` indexed like `vars()`.
    pub fn divergence(&self, flux: &[DiffExpr]) -> Result<DiffExpr, SymbolicError> {
        let vars = self.vars();
        if flux.len() != vars.len() {
            return Err(SymbolicError::DimensionMismatch {
                expected: vars.len(),
                got: flux.len(),
            });
        }
        let mut out = DiffExpr::zero();
        for (p, var) in flux.iter().zip(vars) {
            out += self.total_derivative(p, var)?;
        }
        Ok(out)
    }
}

/// Restrict a boundary expression to homogeneous Dirichlet data: the fields
/// and their time derivatives vanish, the spatial gradient is normal
/// (`u^k_i = w^k ν_i` with `w^k` the normal derivative), and the potentials
/// vanish with their arguments. Sources are kept.
pub fn dirichlet_contraction(e: &DiffExpr) -> DiffExpr {
    
    e.substitute(|a| match *a {
        Atom::Dep(..) | Atom::Jet1(_, _, Var::T) => Some(DiffExpr::zero()),
        Atom::Jet1(f, k, Var::X(i)) => Some(
            &DiffExpr::atom(Atom::NormalDeriv(f, k)) * &DiffExpr::atom(Atom::Normal(i)),
        ),
        Atom::F | Atom::H => Some(DiffExpr::zero()),
        _ => None,
    })
}

/// Reduce modulo `|ν|² = 1` by eliminating even powers of the last normal component.
pub fn reduce_unit_normal(e: &DiffExpr, n: usize) -> DiffExpr {
    let last = Atom::Normal((n - 1) as u8);
    let mut others = DiffExpr::one();
    for i in 0..n - 1 {
        others -= DiffExpr::atom(Atom::Normal(i as u8)).pow(2);
    }
    let mut out = DiffExpr::zero();
    for (m, c) in e.terms() {
        let p = m.exponent(&last);
        if p < 2 {
            out.add_term(m.clone(), c.clone());
            continue;
        }
        let rest = Monomial::from_factors(
            m.factors()
                .iter()
                .filter(|(a, _)| *a != last)
                .cloned()
                .chain(std::iter::once((last, p % 2))),
        );
        out += &DiffExpr::term(rest, c.clone()) * &others.pow(p / 2);
    }
    out
}

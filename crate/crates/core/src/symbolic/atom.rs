use std::fmt;

/// Dependent field family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Field {
    U,
    V,
}

impl Field {
    pub fn symbol(self) -> char {
        match self {
            Field::U => 'u',
            Field::V => 'v',
        }
    }
}

/// Independent variable. Spatial indices are 0-based internally and printed 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    T,
    X(u8),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => write!(f, "t"),
            Var::X(i) => write!(f, "x{}", i + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lame {
    Mu,
    Lambda,
}

/// A symbol appearing in a differential polynomial.
///
/// Variants whose indices commute (second derivatives, Hessian entries of the
/// potentials, moduli) must be built through the normalizing constructors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// Elastic modulus `C^{kl}_{ij}` stored as the orbit-minimal `(i, j, k, l)`.
    Modulus(u8, u8, u8, u8),
    Lame(Lame),
    Time,
    Space(u8),
    /// Component of the outward unit normal (boundary expressions only).
    Normal(u8),
    Dep(Field, u8),
    Jet1(Field, u8, Var),
    Jet2(Field, u8, Var, Var),
    /// Normal derivative of a component on the boundary.
    NormalDeriv(Field, u8),
    F,
    Fu(u8),
    Fuu(u8, u8),
    H,
    Hu(u8),
    Hv(u8),
    Huu(u8, u8),
    Huv(u8, u8),
    Hvv(u8, u8),
    /// External source component `g_k(x)`.
    Source(u8),
    SourceX(u8, u8),
    SourceXX(u8, u8, u8),
}

fn sorted2<T: Ord>(a: T, b: T) -> (T, T) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Orbit of an index quadruple under the moduli symmetries
/// `C^{kl}_{ij} = C^{il}_{kj} = C^{kj}_{il} = C^{lk}_{ji}`.
pub fn modulus_orbit(idx: (u8, u8, u8, u8)) -> Vec<(u8, u8, u8, u8)> {
    let mut orbit = vec![idx];
    let mut cursor = 0;
    while cursor < orbit.len() {
        let (i, j, k, l) = orbit[cursor];
        for next in [(k, j, i, l), (i, l, k, j), (j, i, l, k)] {
            if !orbit.contains(&next) {
                orbit.push(next);
            }
        }
        cursor += 1;
    }
    orbit
}

impl Atom {
    pub fn modulus(i: u8, j: u8, k: u8, l: u8) -> Atom {
        let (i, j, k, l) = modulus_orbit((i, j, k, l)).into_iter().min().unwrap();
        Atom::Modulus(i, j, k, l)
    }

    pub fn jet2(field: Field, comp: u8, a: Var, b: Var) -> Atom {
        let (a, b) = sorted2(a, b);
        Atom::Jet2(field, comp, a, b)
    }

    pub fn fuu(j: u8, k: u8) -> Atom {
        let (j, k) = sorted2(j, k);
        Atom::Fuu(j, k)
    }

    pub fn huu(j: u8, k: u8) -> Atom {
        let (j, k) = sorted2(j, k);
        Atom::Huu(j, k)
    }

    pub fn hvv(j: u8, k: u8) -> Atom {
        let (j, k) = sorted2(j, k);
        Atom::Hvv(j, k)
    }

    pub fn source_xx(k: u8, i: u8, j: u8) -> Atom {
        let (i, j) = sorted2(i, j);
        Atom::SourceXX(k, i, j)
    }

    /// True for atoms that are constants of every total derivative.
    pub fn is_parameter(&self) -> bool {
        matches!(self, Atom::Modulus(..) | Atom::Lame(_))
    }

    /// True for atoms holding a derivative of a dependent variable.
    pub fn is_jet(&self) -> bool {
        matches!(self, Atom::Jet1(..) | Atom::Jet2(..) | Atom::NormalDeriv(..))
    }

    /// True for the opaque potentials and their formal partials.
    pub fn is_potential(&self) -> bool {
        matches!(
            self,
            Atom::F
                | Atom::Fu(_)
                | Atom::Fuu(..)
                | Atom::H
                | Atom::Hu(_)
                | Atom::Hv(_)
                | Atom::Huu(..)
                | Atom::Huv(..)
                | Atom::Hvv(..)
        )
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, Atom::Normal(_) | Atom::NormalDeriv(..))
    }

    /// Parse one printed atom name.
    pub fn parse(s: &str) -> Option<Atom> {
        fn index(s: &str) -> Option<u8> {
            let v: u8 = s.parse().ok()?;
            v.checked_sub(1)
        }
        fn var(s: &str) -> Option<(Var, &str)> {
            if let Some(rest) = s.strip_prefix('t') {
                return Some((Var::T, rest));
            }
            let rest = s.strip_prefix('x')?;
            let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
            Some((Var::X(index(&rest[..end])?), &rest[end..]))
        }
        fn dep_index(s: &str, prefix: char) -> Option<(u8, &str)> {
            let rest = s.strip_prefix(prefix)?;
            let end = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
            Some((index(&rest[..end])?, &rest[end..]))
        }
        match s {
            "t" => return Some(Atom::Time),
            "mu" => return Some(Atom::Lame(Lame::Mu)),
            "lambda" => return Some(Atom::Lame(Lame::Lambda)),
            "F" => return Some(Atom::F),
            "H" => return Some(Atom::H),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("nu") {
            return Some(Atom::Normal(index(rest)?));
        }
        if let Some(rest) = s.strip_prefix('C') {
            let d: Vec<u8> = rest
                .chars()
                .map(|c| c.to_digit(10).and_then(|v| (v as u8).checked_sub(1)))
                .collect::<Option<_>>()?;
            if d.len() != 4 {
                return None;
            }
            return Some(Atom::modulus(d[0], d[1], d[2], d[3]));
        }
        if let Some(rest) = s.strip_prefix("F_") {
            let (j, rest) = dep_index(rest, 'u')?;
            if rest.is_empty() {
                return Some(Atom::Fu(j));
            }
            let (k, rest) = dep_index(rest, 'u')?;
            return rest.is_empty().then(|| Atom::fuu(j, k));
        }
        if let Some(rest) = s.strip_prefix("H_") {
            let (f1, rest) = if rest.starts_with('u') { (Field::U, rest) } else { (Field::V, rest) };
            let (j, rest) = dep_index(rest, f1.symbol())?;
            if rest.is_empty() {
                return Some(if f1 == Field::U { Atom::Hu(j) } else { Atom::Hv(j) });
            }
            let f2 = if rest.starts_with('u') { Field::U } else { Field::V };
            let (k, rest) = dep_index(rest, f2.symbol())?;
            if !rest.is_empty() {
                return None;
            }
            return match (f1, f2) {
                (Field::U, Field::U) => Some(Atom::huu(j, k)),
                (Field::U, Field::V) => Some(Atom::Huv(j, k)),
                (Field::V, Field::V) => Some(Atom::hvv(j, k)),
                (Field::V, Field::U) => None,
            };
        }
        if let Some((k, rest)) = dep_index(s, 'g') {
            if rest.is_empty() {
                return Some(Atom::Source(k));
            }
            let rest = rest.strip_prefix('_')?;
            let (a, rest) = var(rest)?;
            let Var::X(i) = a else { return None };
            if rest.is_empty() {
                return Some(Atom::SourceX(k, i));
            }
            let (b, rest) = var(rest)?;
            let Var::X(j) = b else { return None };
            return rest.is_empty().then(|| Atom::source_xx(k, i, j));
        }
        if let Some(rest) = s.strip_prefix('x') {
            return Some(Atom::Space(index(rest)?));
        }
        for field in [Field::U, Field::V] {
            if let Some((k, rest)) = dep_index(s, field.symbol()) {
                if rest.is_empty() {
                    return Some(Atom::Dep(field, k));
                }
                let rest = rest.strip_prefix('_')?;
                if rest == "n" {
                    return Some(Atom::NormalDeriv(field, k));
                }
                let (a, rest) = var(rest)?;
                if rest.is_empty() {
                    return Some(Atom::Jet1(field, k, a));
                }
                let (b, rest) = var(rest)?;
                return rest.is_empty().then(|| Atom::jet2(field, k, a, b));
            }
        }
        None
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Atom::Modulus(i, j, k, l) => write!(f, "C{}{}{}{}", i + 1, j + 1, k + 1, l + 1),
            Atom::Lame(Lame::Mu) => write!(f, "mu"),
            Atom::Lame(Lame::Lambda) => write!(f, "lambda"),
            Atom::Time => write!(f, "t"),
            Atom::Space(i) => write!(f, "x{}", i + 1),
            Atom::Normal(i) => write!(f, "nu{}", i + 1),
            Atom::Dep(fd, k) => write!(f, "{}{}", fd.symbol(), k + 1),
            Atom::Jet1(fd, k, a) => write!(f, "{}{}_{}", fd.symbol(), k + 1, a),
            Atom::Jet2(fd, k, a, b) => write!(f, "{}{}_{}{}", fd.symbol(), k + 1, a, b),
            Atom::NormalDeriv(fd, k) => write!(f, "{}{}_n", fd.symbol(), k + 1),
            Atom::F => write!(f, "F"),
            Atom::Fu(k) => write!(f, "F_u{}", k + 1),
            Atom::Fuu(j, k) => write!(f, "F_u{}u{}", j + 1, k + 1),
            Atom::H => write!(f, "H"),
            Atom::Hu(k) => write!(f, "H_u{}", k + 1),
            Atom::Hv(k) => write!(f, "H_v{}", k + 1),
            Atom::Huu(j, k) => write!(f, "H_u{}u{}", j + 1, k + 1),
            Atom::Huv(j, k) => write!(f, "H_u{}v{}", j + 1, k + 1),
            Atom::Hvv(j, k) => write!(f, "H_v{}v{}", j + 1, k + 1),
            Atom::Source(k) => write!(f, "g{}", k + 1),
            Atom::SourceX(k, i) => write!(f, "g{}_x{}", k + 1, i + 1),
            Atom::SourceXX(k, i, j) => write!(f, "g{}_x{}x{}", k + 1, i + 1, j + 1),
        }
    }
}

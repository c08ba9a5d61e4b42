use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::atom::Atom;
use super::SymbolicError;

/// Exact rational from a small numerator and denominator.
pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Product of atom powers, sorted by atom with strictly positive exponents.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<(Atom, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(a: Atom) -> Self {
        Monomial(vec![(a, 1)])
    }

    /// Build from unsorted factors, merging repeats and dropping zero exponents.
    pub fn from_factors<I: IntoIterator<Item = (Atom, u32)>>(factors: I) -> Self {
        let mut map: BTreeMap<Atom, u32> = BTreeMap::new();
        for (a, e) in factors {
            *map.entry(a).or_insert(0) += e;
        }
        Monomial(map.into_iter().filter(|&(_, e)| e > 0).collect())
    }

    pub fn factors(&self) -> &[(Atom, u32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, a: &Atom) -> u32 {
        self.0
            .binary_search_by(|(b, _)| b.cmp(a))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, ea) = self.0[i];
            let (b, eb) = other.0[j];
            match a.cmp(&b) {
                std::cmp::Ordering::Less => {
                    out.push((a, ea));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((b, eb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a, ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Remove one power of the factor at `pos`, returning the reduced monomial and the old exponent.
    fn lower(&self, pos: usize) -> (Monomial, u32) {
        let mut out = self.0.clone();
        let e = out[pos].1;
        if e == 1 {
            out.remove(pos);
        } else {
            out[pos].1 -= 1;
        }
        (Monomial(out), e)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (idx, (a, e)) in self.0.iter().enumerate() {
            if idx > 0 {
                write!(f, "*")?;
            }
            if *e == 1 {
                write!(f, "{a}")?;
            } else {
                write!(f, "{a}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Differential polynomial with exact rational coefficients, always kept in
/// normal form: no zero coefficients, monomials in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct DiffExpr {
    terms: BTreeMap<Monomial, BigRational>,
}

impl DiffExpr {
    pub fn zero() -> Self {
        DiffExpr::default()
    }

    pub fn one() -> Self {
        DiffExpr::constant(BigRational::one())
    }

    pub fn constant(c: BigRational) -> Self {
        let mut e = DiffExpr::zero();
        e.add_term(Monomial::one(), c);
        e
    }

    pub fn int(c: i64) -> Self {
        DiffExpr::constant(BigRational::from_integer(c.into()))
    }

    pub fn rational(num: i64, den: i64) -> Self {
        DiffExpr::constant(rat(num, den))
    }

    pub fn atom(a: Atom) -> Self {
        DiffExpr::term(Monomial::atom(a), BigRational::one())
    }

    pub fn term(m: Monomial, c: BigRational) -> Self {
        let mut e = DiffExpr::zero();
        e.add_term(m, c);
        e
    }

    /// Normalize an arbitrary list of (factors, coefficient) pairs.
    pub fn from_terms<I, F>(terms: I) -> Self
    where
        I: IntoIterator<Item = (F, BigRational)>,
        F: IntoIterator<Item = (Atom, u32)>,
    {
        let mut e = DiffExpr::zero();
        for (factors, c) in terms {
            e.add_term(Monomial::from_factors(factors), c);
        }
        e
    }

    pub fn add_term(&mut self, m: Monomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigRational)> {
        self.terms.iter()
    }

    /// Coefficient of a monomial (zero when absent).
    pub fn coefficient(&self, m: &Monomial) -> BigRational {
        self.terms.get(m).cloned().unwrap_or_else(BigRational::zero)
    }

    /// The constant term when the expression has no atoms.
    pub fn as_constant(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn scale(&self, c: &BigRational) -> DiffExpr {
        if c.is_zero() {
            return DiffExpr::zero();
        }
        DiffExpr {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> DiffExpr {
        let mut out = DiffExpr::one();
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|&(a, _)| a))
            .collect()
    }

    pub fn any_atom(&self, pred: impl Fn(&Atom) -> bool) -> bool {
        self.terms.keys().any(|m| m.0.iter().any(|(a, _)| pred(a)))
    }

    /// Replace atoms by expressions; atoms mapped to `None` are kept.
    pub fn substitute(&self, rule: impl Fn(&Atom) -> Option<DiffExpr>) -> DiffExpr {
        let mut cache: BTreeMap<Atom, Option<DiffExpr>> = BTreeMap::new();
        let mut out = DiffExpr::zero();
        for (m, c) in &self.terms {
            let mut kept = Vec::new();
            let mut product = DiffExpr::constant(c.clone());
            for &(a, e) in &m.0 {
                let rep = cache.entry(a).or_insert_with(|| rule(&a));
                match rep {
                    Some(r) => product = &product * &r.pow(e),
                    None => kept.push((a, e)),
                }
            }
            let keep = DiffExpr::term(Monomial(kept), BigRational::one());
            out += &product * &keep;
        }
        out
    }

    /// Formal partial derivative with respect to `target`, with `atom_rule`
    /// supplying the derivative of each atom that is not `target` itself.
    pub fn derivative_with(
        &self,
        mut atom_rule: impl FnMut(&Atom) -> Result<DiffExpr, SymbolicError>,
    ) -> Result<DiffExpr, SymbolicError> {
        let mut cache: BTreeMap<Atom, DiffExpr> = BTreeMap::new();
        let mut out = DiffExpr::zero();
        for (m, c) in &self.terms {
            for pos in 0..m.0.len() {
                let a = m.0[pos].0;
                if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(a) {
                    let d = atom_rule(&a)?;
                    e.insert(d);
                }
                let d = &cache[&a];
                if d.is_zero() {
                    continue;
                }
                let (rest, e) = m.lower(pos);
                let coef = c * BigRational::from_integer(e.into());
                for (dm, dc) in &d.terms {
                    out.add_term(rest.mul(dm), &coef * dc);
                }
            }
        }
        Ok(out)
    }

    /// Evaluate with floating-point atom values.
    pub fn eval(&self, mut value: impl FnMut(&Atom) -> f64) -> f64 {
        let mut sum = 0.0;
        for (m, c) in &self.terms {
            let mut p = c.to_f64().unwrap_or(f64::NAN);
            for &(a, e) in &m.0 {
                p *= value(&a).powi(e as i32);
            }
            sum += p;
        }
        sum
    }

    /// Evaluate exactly with rational atom values.
    pub fn eval_exact(&self, value: impl Fn(&Atom) -> BigRational) -> BigRational {
        let mut sum = BigRational::zero();
        for (m, c) in &self.terms {
            let mut p = c.clone();
            for &(a, e) in &m.0 {
                p *= num_traits::pow(value(&a), e as usize);
            }
            sum += p;
        }
        sum
    }

    pub fn compile(&self) -> CompiledExpr {
        let slots: Vec<Atom> = self.atoms().into_iter().collect();
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let factors = m
                    .0
                    .iter()
                    .map(|(a, e)| (slots.binary_search(a).unwrap(), *e))
                    .collect();
                (c.to_f64().unwrap_or(f64::NAN), factors)
            })
            .collect();
        CompiledExpr { slots, terms }
    }

    /// Parse the text dump format produced by `Display`.
    pub fn parse(s: &str) -> Result<DiffExpr, SymbolicError> {
        let err = |msg: &str| SymbolicError::Parse(format!("{msg} in `{s}`"));
        let text: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if text == "0" {
            return Ok(DiffExpr::zero());
        }
        let mut out = DiffExpr::zero();
        let mut chunks: Vec<(bool, String)> = Vec::new();
        let mut current = String::new();
        let mut negative = false;
        for ch in text.chars() {
            if (ch == '+' || ch == '-') && !current.is_empty() {
                chunks.push((negative, std::mem::take(&mut current)));
                negative = ch == '-';
            } else if ch == '+' || ch == '-' {
                negative ^= ch == '-';
            } else {
                current.push(ch);
            }
        }
        if current.is_empty() {
            return Err(err("dangling sign"));
        }
        chunks.push((negative, current));
        for (neg, chunk) in chunks {
            let mut coef = BigRational::one();
            let mut factors = Vec::new();
            for tok in chunk.split('*') {
                if tok.is_empty() {
                    return Err(err("empty factor"));
                }
                if tok.chars().next().unwrap().is_ascii_digit() {
                    let (n, d) = match tok.split_once('/') {
                        Some((n, d)) => (n, d),
                        None => (tok, "1"),
                    };
                    let n: BigInt = n.parse().map_err(|_| err("bad numerator"))?;
                    let d: BigInt = d.parse().map_err(|_| err("bad denominator"))?;
                    if d.is_zero() {
                        return Err(err("zero denominator"));
                    }
                    coef *= BigRational::new(n, d);
                    continue;
                }
                let (name, e) = match tok.split_once('^') {
                    Some((name, e)) => (name, e.parse::<u32>().map_err(|_| err("bad exponent"))?),
                    None => (tok, 1),
                };
                let a = Atom::parse(name).ok_or_else(|| err(&format!("unknown atom `{name}`")))?;
                factors.push((a, e));
            }
            if neg {
                coef = -coef;
            }
            out.add_term(Monomial::from_factors(factors), coef);
        }
        Ok(out)
    }
}

impl fmt::Display for DiffExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().enumerate() {
            let mag = c.abs();
            if idx == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}

impl From<Atom> for DiffExpr {
    fn from(a: Atom) -> Self {
        DiffExpr::atom(a)
    }
}

impl AddAssign<&DiffExpr> for DiffExpr {
    fn add_assign(&mut self, rhs: &DiffExpr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl AddAssign<DiffExpr> for DiffExpr {
    fn add_assign(&mut self, rhs: DiffExpr) {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
    }
}

impl SubAssign<&DiffExpr> for DiffExpr {
    fn sub_assign(&mut self, rhs: &DiffExpr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl SubAssign<DiffExpr> for DiffExpr {
    fn sub_assign(&mut self, rhs: DiffExpr) {
        for (m, c) in rhs.terms {
            self.add_term(m, -c);
        }
    }
}

impl Add<&DiffExpr> for &DiffExpr {
    type Output = DiffExpr;
    fn add(self, rhs: &DiffExpr) -> DiffExpr {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for DiffExpr {
    type Output = DiffExpr;
    fn add(mut self, rhs: DiffExpr) -> DiffExpr {
        self += rhs;
        self
    }
}

impl Sub<&DiffExpr> for &DiffExpr {
    type Output = DiffExpr;
    fn sub(self, rhs: &DiffExpr) -> DiffExpr {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for DiffExpr {
    type Output = DiffExpr;
    fn sub(mut self, rhs: DiffExpr) -> DiffExpr {
        self -= rhs;
        self
    }
}

impl Mul<&DiffExpr> for &DiffExpr {
    type Output = DiffExpr;
    fn mul(self, rhs: &DiffExpr) -> DiffExpr {
        let mut out = DiffExpr::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Mul for DiffExpr {
    type Output = DiffExpr;
    fn mul(self, rhs: DiffExpr) -> DiffExpr {
        &self * &rhs
    }
}

impl Neg for &DiffExpr {
    type Output = DiffExpr;
    fn neg(self) -> DiffExpr {
        DiffExpr {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }
}

impl Neg for DiffExpr {
    type Output = DiffExpr;
    fn neg(self) -> DiffExpr {
        -&self
    }
}

/// Floating-point evaluator for a fixed expression.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    slots: Vec<Atom>,
    terms: Vec<(f64, Vec<(usize, u32)>)>,
}

impl CompiledExpr {
    /// Atoms whose values must be supplied, in slot order.
    pub fn slots(&self) -> &[Atom] {
        &self.slots
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        let mut sum = 0.0;
        for (c, factors) in &self.terms {
            let mut p = *c;
            for &(s, e) in factors {
                let v = values[s];
                p *= match e {
                    1 => v,
                    2 => v * v,
                    _ => v.powi(e as i32),
                };
            }
            sum += p;
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::{Field, Var};

    fn u(k: u8) -> DiffExpr {
        DiffExpr::atom(Atom::Dep(Field::U, k))
    }

    #[test]
    fn cancellation_gives_zero() {
        let e = &(&u(0) * &u(1)) - &(&u(1) * &u(0));
        assert!(e.is_zero());
        assert_eq!(e.to_string(), "0");
    }

    #[test]
    fn dump_format() {
        let e = &(&u(0) * &DiffExpr::atom(Atom::Fu(0))).scale(&rat(1, 2))
            - &DiffExpr::atom(Atom::F).scale(&rat(3, 1));
        assert_eq!(e.to_string(), "1/2*u1*F_u1 - 3*F");
        assert_eq!(DiffExpr::parse(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn powers_and_constants_print() {
        let e = &u(0).pow(2) - &DiffExpr::int(2);
        assert_eq!(e.to_string(), "-2 + u1^2");
        assert_eq!(DiffExpr::parse("-2 + u1^2").unwrap(), e);
    }

    #[test]
    fn substitute_replaces_atoms() {
        let e = &u(0) * &DiffExpr::atom(Atom::Jet1(Field::U, 0, Var::X(0)));
        let s = e.substitute(|a| (*a == Atom::Dep(Field::U, 0)).then(DiffExpr::zero));
        assert!(s.is_zero());
    }

    #[test]
    fn compiled_matches_eval() {
        let e = DiffExpr::parse("3/4*u1^3*x2 - u2 + 5").unwrap();
        let c = e.compile();
        let vals: Vec<f64> = c
            .slots()
            .iter()
            .map(|a| match a {
                Atom::Dep(_, 0) => 0.5,
                Atom::Dep(_, 1) => -1.25,
                _ => 2.0,
            })
            .collect();
        let direct = e.eval(|a| match a {
            Atom::Dep(_, 0) => 0.5,
            Atom::Dep(_, 1) => -1.25,
            _ => 2.0,
        });
        assert!((c.eval(&vals) - direct).abs() < 1e-14);
        assert!((direct - (0.75 * 0.125 * 2.0 + 1.25 + 5.0)).abs() < 1e-14);
    }
}

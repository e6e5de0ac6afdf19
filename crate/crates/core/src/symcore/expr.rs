use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use smallvec::SmallVec;

use super::atom::{Atom, Chart, FormalDeriv};
use super::multi_index::MultiIndex;
use crate::error::{Error, Result};

/// Exact rational scalar.
pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// A product of atom powers, sorted by atom, with no zero exponents.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Monomial(SmallVec<[(Atom, i32); 3]>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(SmallVec::new())
    }

    pub fn atom(a: Atom) -> Self {
        Monomial(smallvec::smallvec![(a, 1)])
    }

    pub fn factors(&self) -> &[(Atom, i32)] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        if other.0.is_empty() {
            return self.clone();
        }
        if self.0.is_empty() {
            return other.clone();
        }
        let mut out = SmallVec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a, p) = &self.0[i];
            let (b, r) = &other.0[j];
            match a.cmp(b) {
                std::cmp::Ordering::Less => {
                    out.push((a.clone(), *p));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((b.clone(), *r));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    if p + r != 0 {
                        out.push((a.clone(), p + r));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(self.0[i..].iter().cloned());
        out.extend(other.0[j..].iter().cloned());
        Monomial(out)
    }

    /// Copy with the exponent of factor `k` shifted by `delta`.
    fn shift_power(&self, k: usize, delta: i32) -> Monomial {
        let mut out = self.0.clone();
        out[k].1 += delta;
        if out[k].1 == 0 {
            out.remove(k);
        }
        Monomial(out)
    }

    fn pow(&self, e: i32) -> Monomial {
        Monomial(self.0.iter().map(|(a, p)| (a.clone(), p * e)).collect())
    }

    pub fn is_invertible(&self) -> bool {
        self.0.iter().all(|(a, _)| a.is_invertible())
    }

    /// Total polynomial degree in jet-coordinate atoms.
    pub fn jet_degree(&self) -> i32 {
        self.0
            .iter()
            .filter(|(a, _)| matches!(a, Atom::Jet(..)))
            .map(|(_, p)| *p)
            .sum()
    }
}

/// Canonical exact-rational Laurent polynomial over [`Atom`]s. Two values are equal iff
/// their term maps coincide.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Expr {
    terms: BTreeMap<Monomial, Q>,
}

impl Expr {
    pub fn zero() -> Self {
        Expr::default()
    }

    pub fn one() -> Self {
        Expr::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        let mut e = Expr::zero();
        e.add_term(Monomial::one(), c);
        e
    }

    pub fn int(n: i64) -> Self {
        Expr::constant(q(n))
    }

    pub fn rational(n: i64, d: i64) -> Self {
        Expr::constant(qr(n, d))
    }

    pub fn atom(a: Atom) -> Self {
        Expr::term(Monomial::atom(a), Q::one())
    }

    pub fn term(m: Monomial, c: Q) -> Self {
        let mut e = Expr::zero();
        e.add_term(m, c);
        e
    }

    /// `x^i` (0-based).
    pub fn x(i: usize) -> Self {
        Expr::atom(Atom::base(i))
    }

    /// `u^α_I` (0-based `α`).
    pub fn u(alpha: usize, idx: MultiIndex) -> Self {
        Expr::atom(Atom::jet(alpha, idx))
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

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Q)> {
        self.terms.iter()
    }

    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
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

    pub fn add_scaled(&mut self, other: &Expr, c: &Q) {
        if c.is_zero() {
            return;
        }
        for (m, k) in &other.terms {
            self.add_term(m.clone(), k * c);
        }
    }

    pub fn scale(&self, c: &Q) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        Expr {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn atoms(&self) -> BTreeSet<Atom> {
        self.terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(a, _)| a.clone()))
            .collect()
    }

    /// Highest jet order among the coordinates this expression depends on.
    pub fn jet_order(&self) -> Option<usize> {
        self.atoms().iter().filter_map(Atom::jet_order).max()
    }

    /// Integer power; negative exponents require an invertible monomial.
    pub fn pow(&self, e: i32) -> Result<Expr> {
        if e < 0 {
            return self.inverse()?.pow(-e);
        }
        let mut out = Expr::one();
        for _ in 0..e {
            out = &out * self;
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Expr> {
        if self.terms.len() != 1 {
            return Err(Error::domain(format!(
                "cannot invert the non-monomial expression {self}"
            )));
        }
        let (m, c) = self.terms.iter().next().unwrap();
        if !m.is_invertible() {
            return Err(Error::domain(format!(
                "{self} is not declared nonvanishing"
            )));
        }
        Ok(Expr::term(m.pow(-1), c.recip()))
    }

    /// Exact partial derivative with respect to a single atom.
    pub fn partial(&self, by: &Atom) -> Expr {
        let mut out = Expr::zero();
        for (mono, c) in &self.terms {
            for (k, (a, p)) in mono.0.iter().enumerate() {
                let Some(d) = a.partial(by) else { continue };
                let rest = mono.shift_power(k, -1);
                let m = match d {
                    None => rest,
                    Some(atom) => rest.mul(&Monomial::atom(atom)),
                };
                out.add_term(m, c * q(*p as i64));
            }
        }
        out
    }

    /// Total derivative `d_i`.
    pub fn total_derivative(&self, i: usize, chart: &Chart) -> Result<Expr> {
        let mut out = Expr::zero();
        let mut cache: BTreeMap<&Atom, Vec<Monomial>> = BTreeMap::new();
        for (mono, c) in &self.terms {
            for (k, (a, p)) in mono.0.iter().enumerate() {
                if !cache.contains_key(a) {
                    cache.insert(a, atom_total(a, i, chart)?);
                }
                let d = &cache[a];
                if d.is_empty() {
                    continue;
                }
                let rest = mono.shift_power(k, -1);
                let coef = c * q(*p as i64);
                for dm in d {
                    out.add_term(rest.mul(dm), coef.clone());
                }
            }
        }
        Ok(out)
    }

    /// `d_I`, the composite of total derivatives.
    pub fn iterated_total(&self, idx: &MultiIndex, chart: &Chart) -> Result<Expr> {
        let mut out = self.clone();
        for d in idx.directions() {
            if out.is_zero() {
                break;
            }
            out = out.total_derivative(d, chart)?;
        }
        Ok(out)
    }

    /// `∂self/∂u^α_I` for every jet coordinate the expression depends on, keyed by `(α, I)`.
    pub fn vertical_components(&self, chart: &Chart) -> BTreeMap<(u8, MultiIndex), Expr> {
        let mut out: BTreeMap<(u8, MultiIndex), Expr> = BTreeMap::new();
        for (mono, c) in &self.terms {
            for (k, (a, p)) in mono.0.iter().enumerate() {
                let parts: Vec<((u8, MultiIndex), Monomial)> = match a {
                    Atom::Jet(alpha, idx) => vec![((*alpha, idx.clone()), Monomial::one())],
                    Atom::Formal(fd) => fd
                        .func
                        .jet_deps(chart)
                        .into_iter()
                        .map(|(b, l)| {
                            let atom = fd.with_jet(b, l.clone());
                            ((b, l), Monomial::atom(atom))
                        })
                        .collect(),
                    _ => continue,
                };
                let rest = mono.shift_power(k, -1);
                let coef = c * q(*p as i64);
                for (key, dm) in parts {
                    out.entry(key)
                        .or_default()
                        .add_term(rest.mul(&dm), coef.clone());
                }
            }
        }
        out.retain(|_, e| !e.is_zero());
        out
    }

    /// Simultaneous substitution. Binding an underived formal function (or a connection
    /// coefficient) also rewrites its derivative atoms as the matching partials of the
    /// replacement.
    pub fn substitute(&self, bindings: &BTreeMap<Atom, Expr>) -> Result<Expr> {
        for (a, e) in bindings {
            for b in e.atoms() {
                if &b == a || same_family(&b, a) {
                    return Err(Error::Substitution(format!(
                        "binding for {a} refers to itself"
                    )));
                }
            }
        }
        let mut cache: BTreeMap<Atom, Option<Expr>> = BTreeMap::new();
        let mut out = Expr::zero();
        for (mono, c) in &self.terms {
            let mut acc = Expr::constant(c.clone());
            let mut untouched = Monomial::one();
            for (a, p) in mono.0.iter() {
                if !cache.contains_key(a) {
                    cache.insert(a.clone(), replacement(a, bindings));
                }
                match &cache[a] {
                    None => untouched = untouched.mul(&Monomial::term_pow(a, *p)),
                    Some(r) => acc = &acc * &r.pow(*p)?,
                }
            }
            out += &(&acc * &Expr::term(untouched, Q::one()));
        }
        Ok(out)
    }

    /// Coefficient-wise map over rationals.
    pub fn map_coefficients(&self, f: impl Fn(&Monomial, &Q) -> Q) -> Expr {
        let mut out = Expr::zero();
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(m, c));
        }
        out
    }
}

impl Monomial {
    fn term_pow(a: &Atom, p: i32) -> Monomial {
        Monomial(smallvec::smallvec![(a.clone(), p)])
    }
}

/// `b` is a derivative atom of the function bound at `a`.
fn same_family(b: &Atom, a: &Atom) -> bool {
    match (a, b) {
        (Atom::Formal(fa), Atom::Formal(fb)) => fa.is_underived() && fa.func == fb.func,
        (
            Atom::Gamma { upper, lower, deriv },
            Atom::Gamma { upper: u2, lower: l2, .. },
        ) => deriv.is_zero() && upper == u2 && lower == l2,
        _ => false,
    }
}

fn replacement(a: &Atom, bindings: &BTreeMap<Atom, Expr>) -> Option<Expr> {
    if let Some(e) = bindings.get(a) {
        return Some(e.clone());
    }
    match a {
        Atom::Formal(fd) if !fd.is_underived() => {
            let root = Atom::Formal(Arc::new(FormalDeriv {
                func: fd.func.clone(),
                base: MultiIndex::zeros(fd.base.dim()),
                jets: SmallVec::new(),
            }));
            let mut e = bindings.get(&root)?.clone();
            for d in fd.base.directions() {
                e = e.partial(&Atom::base(d));
            }
            for (alpha, idx) in &fd.jets {
                e = e.partial(&Atom::Jet(*alpha, idx.clone()));
            }
            Some(e)
        }
        Atom::Gamma { upper, lower, deriv } if !deriv.is_zero() => {
            let root = Atom::gamma(*upper as usize, lower.clone());
            let mut e = bindings.get(&root)?.clone();
            for d in deriv.directions() {
                e = e.partial(&Atom::base(d));
            }
            Some(e)
        }
        _ => None,
    }
}

/// `d_i` of a single atom, as a list of unit-coefficient monomials.
fn atom_total(a: &Atom, i: usize, chart: &Chart) -> Result<Vec<Monomial>> {
    let jet = |alpha: u8, idx: &MultiIndex| -> Result<Atom> {
        let next = idx.increment(i);
        if next.length() > chart.order_cap {
            return Err(Error::OrderCap {
                order: next.length(),
                cap: chart.order_cap,
            });
        }
        Ok(Atom::Jet(alpha, next))
    };
    Ok(match a {
        Atom::Base(j) => {
            if *j as usize == i {
                vec![Monomial::one()]
            } else {
                vec![]
            }
        }
        Atom::Jet(alpha, idx) => vec![Monomial::atom(jet(*alpha, idx)?)],
        Atom::Gamma { .. } => vec![Monomial::atom(a.partial(&Atom::base(i)).unwrap().unwrap())],
        Atom::Formal(fd) => {
            let mut out = vec![Monomial::atom(a.partial(&Atom::base(i)).unwrap().unwrap())];
            for (b, l) in fd.func.jet_deps(chart) {
                let next = jet(b, &l)?;
                out.push(Monomial::atom(next).mul(&Monomial::atom(fd.with_jet(b, l))));
            }
            out
        }
    })
}

impl Add<&Expr> for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(mut self, rhs: Expr) -> Expr {
        self += &rhs;
        self
    }
}

impl AddAssign<&Expr> for Expr {
    fn add_assign(&mut self, rhs: &Expr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl SubAssign<&Expr> for Expr {
    fn sub_assign(&mut self, rhs: &Expr) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c);
        }
    }
}

impl Sub<&Expr> for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(mut self, rhs: Expr) -> Expr {
        self -= &rhs;
        self
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        self.scale(&-Q::one())
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

impl Mul<&Expr> for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        let mut out = Expr::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        &self * &rhs
    }
}

impl From<Q> for Expr {
    fn from(c: Q) -> Self {
        Expr::constant(c)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Atom> for Expr {
    fn from(a: Atom) -> Self {
        Expr::atom(a)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (a, p)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            match *p {
                1 => write!(f, "{a}")?,
                p if p < 0 => write!(f, "{a}^({p})")?,
                p => write!(f, "{a}^{p}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            match (k, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let a = c.abs();
            if m.is_one() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::atom::FormalFunction;

    fn mi(e: &[u8]) -> MultiIndex {
        MultiIndex::from_slice(e)
    }

    fn u(e: &[u8]) -> Expr {
        Expr::u(0, mi(e))
    }

    #[test]
    fn partial_power_rule() {
        let e = u(&[1, 0]).pow(2).unwrap();
        assert_eq!(e.partial(&Atom::jet(0, mi(&[1, 0]))), &Expr::int(2) * &u(&[1, 0]));
    }

    #[test]
    fn partial_of_formal() {
        let f = FormalFunction::new("F", 1);
        let fa = Atom::formal(f, 2);
        let d = Expr::atom(fa.clone()).partial(&Atom::jet(0, mi(&[0, 1])));
        let Atom::Formal(fd) = &fa else { unreachable!() };
        assert_eq!(d, Expr::atom(fd.with_jet(0, mi(&[0, 1]))));
        // order-2 coordinates are outside the declared dependence
        assert!(Expr::atom(fa).partial(&Atom::jet(0, mi(&[2, 0]))).is_zero());
    }

    #[test]
    fn laurent_power_rule_matches_product_rule() {
        let f = FormalFunction::nonvanishing("F", 1);
        let fa = Expr::atom(Atom::formal(f, 2));
        let inv = fa.pow(-1).unwrap();
        let d_inv = inv.partial(&Atom::base(0));
        let d_f = fa.partial(&Atom::base(0));
        assert_eq!(d_inv, -&(&fa.pow(-2).unwrap() * &d_f));
        // oracle: ∂(F·F⁻¹) = 0
        assert!((&(&d_f * &inv) + &(&fa * &d_inv)).is_zero());
    }

    #[test]
    fn total_derivative_examples() {
        let chart = Chart::new(2, 1);
        assert_eq!(u(&[1, 0]).total_derivative(0, &chart).unwrap(), u(&[2, 0]));
        let e = &Expr::x(0) * &u(&[0, 0]);
        assert_eq!(
            e.total_derivative(0, &chart).unwrap(),
            &u(&[0, 0]) + &(&Expr::x(0) * &u(&[1, 0]))
        );
        assert!(Expr::int(7).total_derivative(1, &chart).unwrap().is_zero());
    }

    #[test]
    fn iterated_total_examples() {
        let chart = Chart::new(2, 1);
        assert_eq!(u(&[0, 0]).iterated_total(&mi(&[1, 1]), &chart).unwrap(), u(&[1, 1]));
        let sq = u(&[0, 0]).pow(2).unwrap();
        let expect = &(&Expr::int(2) * &u(&[1, 0]).pow(2).unwrap())
            + &(&Expr::int(2) * &(&u(&[0, 0]) * &u(&[2, 0])));
        assert_eq!(sq.iterated_total(&mi(&[2, 0]), &chart).unwrap(), expect);
        assert_eq!(sq.iterated_total(&mi(&[0, 0]), &chart).unwrap(), sq);
    }

    #[test]
    fn order_cap_is_a_hard_error() {
        let chart = Chart::new(1, 1).with_order_cap(2);
        let e = Expr::u(0, mi(&[2]));
        assert_eq!(
            e.total_derivative(0, &chart),
            Err(Error::OrderCap { order: 3, cap: 2 })
        );
    }

    #[test]
    fn substitution() {
        let sq = u(&[0, 0]).pow(2).unwrap();
        let b = BTreeMap::from([(Atom::jet(0, mi(&[0, 0])), Expr::x(0))]);
        assert_eq!(sq.substitute(&b).unwrap(), Expr::x(0).pow(2).unwrap());

        let f = FormalFunction::new("F", 1);
        let fa = Atom::formal(f, 2);
        let Atom::Formal(fd) = &fa else { unreachable!() };
        let deriv = Expr::atom(fd.with_jet(0, mi(&[1, 0])));
        let dirichlet = (&u(&[1, 0]).pow(2).unwrap() + &u(&[0, 1]).pow(2).unwrap())
            .scale(&qr(1, 2));
        let b = BTreeMap::from([(fa.clone(), dirichlet)]);
        assert_eq!(deriv.substitute(&b).unwrap(), u(&[1, 0]));

        let cyc = BTreeMap::from([(fa.clone(), Expr::atom(fa))]);
        assert!(matches!(deriv.substitute(&cyc), Err(Error::Substitution(_))));
    }

    #[test]
    fn display_is_canonical() {
        let e = &u(&[2, 0]).scale(&q(-1)) - &u(&[0, 2]);
        assert_eq!(e.to_string(), "-u[1;0,2] - u[1;2,0]");
        assert_eq!(Expr::rational(1, 12).to_string(), "1/12");
    }
}

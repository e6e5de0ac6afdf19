use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use smallvec::SmallVec;

use crate::symcore::{Chart, Expr, MultiIndex, Q};

/// A basis one-form of the contact coframe: `θ^α_I` or `dx^i` (0-based indices).
///
/// The derived order puts every `Theta` before every `Dx`, which is the canonical wedge
/// order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Basis {
    Theta(u8, MultiIndex),
    Dx(u8),
}

impl Basis {
    pub fn theta(alpha: usize, idx: MultiIndex) -> Self {
        Basis::Theta(alpha as u8, idx)
    }

    pub fn dx(i: usize) -> Self {
        Basis::Dx(i as u8)
    }

    pub fn is_theta(&self) -> bool {
        matches!(self, Basis::Theta(..))
    }
}

/// A strictly increasing wedge word of basis one-forms.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Word(SmallVec<[Basis; 4]>);

impl Word {
    pub fn empty() -> Self {
        Word(SmallVec::new())
    }

    /// Sorts an arbitrary wedge sequence, returning the permutation sign, or `None` when a
    /// factor repeats.
    pub fn canonical<I: IntoIterator<Item = Basis>>(seq: I) -> Option<(i32, Word)> {
        let mut v: SmallVec<[Basis; 4]> = seq.into_iter().collect();
        let mut sign = 1;
        for i in 1..v.len() {
            let mut j = i;
            while j > 0 {
                match v[j - 1].cmp(&v[j]) {
                    std::cmp::Ordering::Greater => {
                        v.swap(j - 1, j);
                        sign = -sign;
                        j -= 1;
                    }
                    std::cmp::Ordering::Equal => return None,
                    std::cmp::Ordering::Less => break,
                }
            }
        }
        Some((sign, Word(v)))
    }

    pub fn factors(&self) -> &[Basis] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    /// `(p, q)`: number of contact factors and number of `dx` factors.
    pub fn bidegree(&self) -> (usize, usize) {
        let p = self.0.iter().filter(|b| b.is_theta()).count();
        (p, self.0.len() - p)
    }

    /// Highest `|I|` among the `θ^α_I` factors.
    pub fn theta_order(&self) -> usize {
        self.0
            .iter()
            .map(|b| match b {
                Basis::Theta(_, i) => i.length(),
                Basis::Dx(_) => 0,
            })
            .max()
            .unwrap_or(0)
    }

    /// Sum of `|I|` over the contact factors.
    pub fn theta_weight(&self) -> usize {
        self.0
            .iter()
            .map(|b| match b {
                Basis::Theta(_, i) => i.length(),
                Basis::Dx(_) => 0,
            })
            .sum()
    }

    pub fn dx_directions(&self) -> Vec<usize> {
        self.0
            .iter()
            .filter_map(|b| match b {
                Basis::Dx(i) => Some(*i as usize),
                _ => None,
            })
            .collect()
    }
}

/// A differential form in the contact coframe: wedge words with expression coefficients.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Form {
    terms: BTreeMap<Word, Expr>,
}

impl Form {
    pub fn zero() -> Self {
        Form::default()
    }

    /// A 0-form.
    pub fn scalar(e: Expr) -> Self {
        Form::term(Word::empty(), e)
    }

    pub fn term(w: Word, e: Expr) -> Self {
        let mut f = Form::zero();
        f.add_term(w, &e);
        f
    }

    pub fn basis(b: Basis) -> Self {
        Form::term(Word(smallvec::smallvec![b]), Expr::one())
    }

    pub fn dx(i: usize) -> Self {
        Form::basis(Basis::dx(i))
    }

    pub fn theta(alpha: usize, idx: MultiIndex) -> Self {
        Form::basis(Basis::theta(alpha, idx))
    }

    /// `du^α_I = θ^α_I + u^α_{I+1_j} dx^j`.
    pub fn du(alpha: usize, idx: &MultiIndex, chart: &Chart) -> Self {
        let mut f = Form::theta(alpha, idx.clone());
        for j in 0..chart.m {
            f.add_term(
                Word(smallvec::smallvec![Basis::dx(j)]),
                &Expr::u(alpha, idx.increment(j)),
            );
        }
        f
    }

    /// Wedge of a basis sequence given in any order, sign included.
    pub fn wedge_of(seq: impl IntoIterator<Item = Basis>) -> Self {
        match Word::canonical(seq) {
            None => Form::zero(),
            Some((s, w)) => Form::term(w, Expr::int(s as i64)),
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

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Expr)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, w: &Word) -> Expr {
        self.terms.get(w).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, w: Word, e: &Expr) {
        if e.is_zero() {
            return;
        }
        match self.terms.entry(w) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(e.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += e;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Adds `sign · e` at the canonical form of `seq`.
    pub fn add_sequence(&mut self, seq: impl IntoIterator<Item = Basis>, e: &Expr) {
        if let Some((s, w)) = Word::canonical(seq) {
            if s < 0 {
                self.add_term(w, &-e);
            } else {
                self.add_term(w, e);
            }
        }
    }

    pub fn scale(&self, e: &Expr) -> Form {
        let mut out = Form::zero();
        for (w, c) in &self.terms {
            out.add_term(w.clone(), &(c * e));
        }
        out
    }

    pub fn scale_q(&self, c: &Q) -> Form {
        let mut out = Form::zero();
        for (w, e) in &self.terms {
            out.add_term(w.clone(), &e.scale(c));
        }
        out
    }

    pub fn try_map_coefficients(
        &self,
        mut f: impl FnMut(&Expr) -> crate::Result<Expr>,
    ) -> crate::Result<Form> {
        let mut out = Form::zero();
        for (w, e) in &self.terms {
            out.add_term(w.clone(), &f(e)?);
        }
        Ok(out)
    }

    pub fn wedge(&self, other: &Form) -> Form {
        let mut out = Form::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                out.add_sequence(
                    w1.0.iter().chain(w2.0.iter()).cloned(),
                    &(c1 * c2),
                );
            }
        }
        out
    }

    /// Total degree; `None` for the zero form or an inhomogeneous form.
    pub fn degree(&self) -> Option<usize> {
        let degs: BTreeSet<usize> = self.terms.keys().map(Word::degree).collect();
        if degs.len() == 1 {
            degs.into_iter().next()
        } else {
            None
        }
    }

    pub fn bidegrees(&self) -> BTreeSet<(usize, usize)> {
        self.terms.keys().map(Word::bidegree).collect()
    }

    /// Single bidegree of a nonzero homogeneous form.
    pub fn bidegree(&self) -> Option<(usize, usize)> {
        let b = self.bidegrees();
        if b.len() == 1 {
            b.into_iter().next()
        } else {
            None
        }
    }

    /// The `p`-contact component.
    pub fn contact_component(&self, p: usize) -> Form {
        Form {
            terms: self
                .terms
                .iter()
                .filter(|(w, _)| w.bidegree().0 == p)
                .map(|(w, e)| (w.clone(), e.clone()))
                .collect(),
        }
    }

    pub fn contact_decompose(&self) -> BTreeMap<(usize, usize), Form> {
        let mut out: BTreeMap<(usize, usize), Form> = BTreeMap::new();
        for (w, e) in &self.terms {
            out.entry(w.bidegree()).or_default().add_term(w.clone(), e);
        }
        out
    }

    /// The horizontal (0-contact) component.
    pub fn horizontalize(&self) -> Form {
        self.contact_component(0)
    }

    /// Highest `|I|` among the contact factors.
    pub fn theta_order(&self) -> usize {
        self.terms.keys().map(Word::theta_order).max().unwrap_or(0)
    }

    /// Highest jet order of any coordinate in the form (coefficients and `θ^α_I`, which
    /// involves `u^α_{I+1_j}`).
    pub fn jet_order(&self) -> usize {
        self.terms
            .iter()
            .map(|(w, e)| {
                let wo = if w.bidegree().0 > 0 { w.theta_order() + 1 } else { 0 };
                wo.max(e.jet_order().unwrap_or(0))
            })
            .max()
            .unwrap_or(0)
    }
}

impl AddAssign<&Form> for Form {
    fn add_assign(&mut self, rhs: &Form) {
        for (w, e) in &rhs.terms {
            self.add_term(w.clone(), e);
        }
    }
}

impl SubAssign<&Form> for Form {
    fn sub_assign(&mut self, rhs: &Form) {
        for (w, e) in &rhs.terms {
            self.add_term(w.clone(), &-e);
        }
    }
}

impl Add<&Form> for &Form {
    type Output = Form;
    fn add(self, rhs: &Form) -> Form {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&Form> for &Form {
    type Output = Form;
    fn sub(self, rhs: &Form) -> Form {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Add for Form {
    type Output = Form;
    fn add(mut self, rhs: Form) -> Form {
        self += &rhs;
        self
    }
}

impl Sub for Form {
    type Output = Form;
    fn sub(mut self, rhs: Form) -> Form {
        self -= &rhs;
        self
    }
}

impl Neg for &Form {
    type Output = Form;
    fn neg(self) -> Form {
        self.scale_q(&-Q::from_integer(1.into()))
    }
}

impl Neg for Form {
    type Output = Form;
    fn neg(self) -> Form {
        -&self
    }
}

impl From<Expr> for Form {
    fn from(e: Expr) -> Self {
        Form::scalar(e)
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Theta(a, i) => write!(f, "theta[{};{}]", a + 1, i),
            Basis::Dx(i) => write!(f, "dx[{}]", i + 1),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, b) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, " /\\ ")?;
            }
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (w, e)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if w.degree() == 0 {
                write!(f, "({e})")?;
            } else {
                write!(f, "({e}) * {w}")?;
            }
        }
        Ok(())
    }
}

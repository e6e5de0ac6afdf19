use std::fmt;
use std::sync::Arc;

use smallvec::SmallVec;

use super::multi_index::MultiIndex;

/// The coordinate chart shared by every value in one computation: base dimension `m`,
/// fibre dimension `n`, and the jet-order safety cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Chart {
    pub m: usize,
    pub n: usize,
    pub order_cap: usize,
}

pub const DEFAULT_ORDER_CAP: usize = 10;

impl Chart {
    pub fn new(m: usize, n: usize) -> Self {
        Chart { m, n, order_cap: DEFAULT_ORDER_CAP }
    }

    pub fn with_order_cap(mut self, cap: usize) -> Self {
        self.order_cap = cap;
        self
    }

    /// All jet coordinates `(α, I)` with `|I| ≤ order`.
    pub fn jets_up_to(&self, order: usize) -> Vec<(u8, MultiIndex)> {
        let mut out = Vec::new();
        for alpha in 0..self.n {
            for idx in MultiIndex::all_up_to(self.m, order) {
                out.push((alpha as u8, idx));
            }
        }
        out
    }
}

/// Which jet coordinates a formal function may depend on. Base coordinates are always
/// included.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Dependence {
    /// Base coordinates only.
    Base,
    /// Every `u^α_I` with `|I| ≤ k`.
    Order(usize),
    /// An explicit sorted list of jet coordinates.
    Explicit(Vec<(u8, MultiIndex)>),
}

/// Declaration of a formal (unspecified) function such as a Lagrangian `L`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FormalFunction {
    pub name: String,
    pub dependence: Dependence,
    pub nonvanishing: bool,
}

impl FormalFunction {
    pub fn new(name: impl Into<String>, order: usize) -> Arc<Self> {
        Arc::new(FormalFunction {
            name: name.into(),
            dependence: Dependence::Order(order),
            nonvanishing: false,
        })
    }

    pub fn nonvanishing(name: impl Into<String>, order: usize) -> Arc<Self> {
        Arc::new(FormalFunction {
            name: name.into(),
            dependence: Dependence::Order(order),
            nonvanishing: true,
        })
    }

    pub fn of_base(name: impl Into<String>) -> Arc<Self> {
        Arc::new(FormalFunction {
            name: name.into(),
            dependence: Dependence::Base,
            nonvanishing: false,
        })
    }

    pub fn depends_on(&self, alpha: u8, idx: &MultiIndex) -> bool {
        match &self.dependence {
            Dependence::Base => false,
            Dependence::Order(k) => idx.length() <= *k,
            Dependence::Explicit(list) => list.iter().any(|(a, i)| *a == alpha && i == idx),
        }
    }

    pub fn jet_deps(&self, chart: &Chart) -> Vec<(u8, MultiIndex)> {
        match &self.dependence {
            Dependence::Base => Vec::new(),
            Dependence::Order(k) => chart.jets_up_to(*k),
            Dependence::Explicit(list) => list.clone(),
        }
    }

    pub fn max_jet_order(&self) -> Option<usize> {
        match &self.dependence {
            Dependence::Base => None,
            Dependence::Order(k) => Some(*k),
            Dependence::Explicit(list) => list.iter().map(|(_, i)| i.length()).max(),
        }
    }
}

/// A partial derivative of a formal function: base derivatives `∂^D/∂x^D` followed by
/// derivatives in the sorted multiset `jets`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct FormalDeriv {
    pub func: Arc<FormalFunction>,
    pub base: MultiIndex,
    pub jets: SmallVec<[(u8, MultiIndex); 2]>,
}

impl FormalDeriv {
    pub fn is_underived(&self) -> bool {
        self.base.is_zero() && self.jets.is_empty()
    }
}

/// Indivisible symbols of the expression kernel. All direction and component indices
/// are 0-based.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Atom {
    /// Base coordinate `x^i`.
    Base(u8),
    /// Jet coordinate `u^α_I`.
    Jet(u8, MultiIndex),
    /// Connection coefficient `Γ^h_K` (`|K| ≥ 2`, symmetric by construction), with base
    /// derivatives `deriv`.
    Gamma {
        upper: u8,
        lower: MultiIndex,
        deriv: MultiIndex,
    },
    Formal(Arc<FormalDeriv>),
}

impl Atom {
    pub fn base(i: usize) -> Self {
        Atom::Base(i as u8)
    }

    pub fn jet(alpha: usize, idx: MultiIndex) -> Self {
        Atom::Jet(alpha as u8, idx)
    }

    pub fn gamma(upper: usize, lower: MultiIndex) -> Self {
        let m = lower.dim();
        Atom::Gamma {
            upper: upper as u8,
            lower,
            deriv: MultiIndex::zeros(m),
        }
    }

    /// The underived formal function as an atom; `m` is the chart dimension.
    pub fn formal(func: Arc<FormalFunction>, m: usize) -> Self {
        Atom::Formal(Arc::new(FormalDeriv {
            func,
            base: MultiIndex::zeros(m),
            jets: SmallVec::new(),
        }))
    }

    /// Negative powers are permitted only for underived nonvanishing formal functions.
    pub fn is_invertible(&self) -> bool {
        match self {
            Atom::Formal(fd) => fd.func.nonvanishing && fd.is_underived(),
            _ => false,
        }
    }

    /// Highest jet order this atom depends on.
    pub fn jet_order(&self) -> Option<usize> {
        match self {
            Atom::Jet(_, i) => Some(i.length()),
            Atom::Formal(fd) => fd.func.max_jet_order(),
            _ => None,
        }
    }

    /// `∂self/∂by`: `None` for zero, `Some(None)` for one, otherwise the derivative atom.
    pub fn partial(&self, by: &Atom) -> Option<Option<Atom>> {
        if self == by {
            return Some(None);
        }
        match (self, by) {
            (Atom::Gamma { upper, lower, deriv }, Atom::Base(i)) => Some(Some(Atom::Gamma {
                upper: *upper,
                lower: lower.clone(),
                deriv: deriv.increment(*i as usize),
            })),
            (Atom::Formal(fd), Atom::Base(i)) => {
                let mut d = (**fd).clone();
                d.base = d.base.increment(*i as usize);
                Some(Some(Atom::Formal(Arc::new(d))))
            }
            (Atom::Formal(fd), Atom::Jet(alpha, idx)) if fd.func.depends_on(*alpha, idx) => {
                Some(Some(fd.with_jet(*alpha, idx.clone())))
            }
            _ => None,
        }
    }
}

impl FormalDeriv {
    pub(crate) fn with_jet(&self, alpha: u8, idx: MultiIndex) -> Atom {
        let mut d = self.clone();
        let key = (alpha, idx);
        let pos = d.jets.iter().position(|j| *j > key).unwrap_or(d.jets.len());
        d.jets.insert(pos, key);
        Atom::Formal(Arc::new(d))
    }
}

fn fmt_jet(f: &mut fmt::Formatter<'_>, alpha: u8, idx: &MultiIndex) -> fmt::Result {
    write!(f, "u[{};{}]", alpha + 1, idx)
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Base(i) => write!(f, "x[{}]", i + 1),
            Atom::Jet(a, i) => fmt_jet(f, *a, i),
            Atom::Gamma { upper, lower, deriv } => {
                if deriv.is_zero() {
                    write!(f, "G[{};{}]", upper + 1, lower)
                } else {
                    write!(f, "diff(G[{};{}]", upper + 1, lower)?;
                    for d in deriv.directions() {
                        write!(f, ", x[{}]", d + 1)?;
                    }
                    write!(f, ")")
                }
            }
            Atom::Formal(fd) => {
                if fd.is_underived() {
                    write!(f, "{}", fd.func.name)
                } else {
                    write!(f, "diff({}", fd.func.name)?;
                    for d in fd.base.directions() {
                        write!(f, ", x[{}]", d + 1)?;
                    }
                    for (a, i) in &fd.jets {
                        write!(f, ", ")?;
                        fmt_jet(f, *a, i)?;
                    }
                    write!(f, ")")
                }
            }
        }
    }
}

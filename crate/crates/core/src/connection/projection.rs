//! Infinitesimal nonholonomic projections `T_{J^k}J^1π_{k−1} → TJ^k` as coordinate
//! action tables.
//!
//! Nonholonomic directions are `∂/∂x^i`, `∂/∂u^α_{I·}` (`|I| ≤ k−1`, zero derivative in
//! the outer jet factor) and `∂/∂u^α_{Ij}` (`|I| ≤ k−1`, outer direction `j`). Images are
//! written in the holonomic basis `∂/∂u^α_J`, with `J` a count vector.
//!
//! On the top level `|I| = k−1` the outer direction is folded into the holonomic index
//! with weight `(I(j)+1)/k`, which is what the left-inverse condition `p ∘ Ti = id`
//! forces; below the top level the images follow the connection-dependent formulas.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;

use super::{gamma_prolong, Connection};
use crate::error::{Error, Result};
use crate::symcore::{Expr, MultiIndex, Q};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NonholonomicDir {
    X(u8),
    Dot(u8, MultiIndex),
    Pair(u8, MultiIndex, u8),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HolonomicDir {
    X(u8),
    U(u8, MultiIndex),
}

fn counts(idx: &MultiIndex) -> String {
    idx.entries().iter().map(u8::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for NonholonomicDir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NonholonomicDir::X(i) => write!(f, "d/dx[{}]", i + 1),
            NonholonomicDir::Dot(a, i) => write!(f, "d/du[{}; {} | .]", a + 1, counts(i)),
            NonholonomicDir::Pair(a, i, j) => write!(f, "d/du[{}; {} | {}]", a + 1, counts(i), j + 1),
        }
    }
}

impl fmt::Display for HolonomicDir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HolonomicDir::X(i) => write!(f, "d/dx[{}]", i + 1),
            HolonomicDir::U(a, j) => write!(f, "d/du[{}; {}]", a + 1, counts(j)),
        }
    }
}

pub type Image = BTreeMap<HolonomicDir, Expr>;

fn add_to(img: &mut Image, d: HolonomicDir, e: Expr) {
    if e.is_zero() {
        return;
    }
    let slot = img.entry(d.clone()).or_default();
    *slot += &e;
    if slot.is_zero() {
        img.remove(&d);
    }
}

/// The action of `p_∇` on every nonholonomic basis direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProjectionTable {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    images: BTreeMap<NonholonomicDir, Image>,
}

impl ProjectionTable {
    pub fn image(&self, d: &NonholonomicDir) -> Option<&Image> {
        self.images.get(d)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&NonholonomicDir, &Image)> {
        self.images.iter()
    }

    /// Image of a linear combination of nonholonomic directions.
    pub fn apply(&self, v: &[(NonholonomicDir, Expr)]) -> Image {
        let mut out = Image::new();
        for (d, c) in v {
            if let Some(img) = self.images.get(d) {
                for (h, e) in img {
                    add_to(&mut out, h.clone(), c * e);
                }
            }
        }
        out
    }

    /// `p_∇ ∘ Ti` on every holonomic direction.
    pub fn compose_with_inclusion(&self) -> BTreeMap<HolonomicDir, Image> {
        tangent_inclusion(self.k, self.m, self.n)
            .into_iter()
            .map(|(h, dirs)| {
                let v: Vec<_> = dirs.into_iter().map(|d| (d, Expr::one())).collect();
                (h, self.apply(&v))
            })
            .collect()
    }

    /// Whether `p_∇ ∘ Ti` is the identity.
    pub fn is_left_inverse_of_inclusion(&self) -> bool {
        self.compose_with_inclusion()
            .into_iter()
            .all(|(h, img)| img.len() == 1 && img.get(&h).is_some_and(|e| *e == Expr::one()))
    }

    /// At `k = 2`: on the semiholonomic directions `∂_{ij}`, `∂_{i·} + ∂_{·i}` and `∂_{··}`
    /// the projection agrees with the tangent map of the symmetrization `u_{ij} ↦ u_{(ij)}`.
    pub fn restricts_to_symmetrization(&self) -> Result<bool> {
        if self.k != 2 {
            return Err(Error::Unsupported("semiholonomic check is implemented for k = 2".into()));
        }
        let m = self.m;
        let one = |d: HolonomicDir| Image::from([(d, Expr::one())]);
        for a in 0..self.n as u8 {
            let zero = MultiIndex::zeros(m);
            if self.apply(&[(NonholonomicDir::Dot(a, zero.clone()), Expr::one())])
                != one(HolonomicDir::U(a, zero.clone()))
            {
                return Ok(false);
            }
            for i in 0..m {
                let ui = MultiIndex::unit(m, i);
                let v = [
                    (NonholonomicDir::Dot(a, ui.clone()), Expr::one()),
                    (NonholonomicDir::Pair(a, zero.clone(), i as u8), Expr::one()),
                ];
                if self.apply(&v) != one(HolonomicDir::U(a, ui.clone())) {
                    return Ok(false);
                }
                for j in 0..m {
                    // ∂/∂u_{ij} ↦ (1/#(ij)) ∂/∂u_{(ij)}, i.e. weight 1/2 off the diagonal
                    let jj = ui.increment(j);
                    let w = if i == j { Q::from_integer(1.into()) } else { Q::new(1.into(), 2.into()) };
                    let got = self.apply(&[(NonholonomicDir::Pair(a, ui.clone(), j as u8), Expr::one())]);
                    if got != Image::from([(HolonomicDir::U(a, jj), Expr::constant(w))]) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

impl fmt::Display for ProjectionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (d, img) in &self.images {
            write!(f, "{d} -> ")?;
            if img.is_empty() {
                write!(f, "0")?;
            }
            for (k, (h, e)) in img.iter().enumerate() {
                if k > 0 {
                    write!(f, " + ")?;
                }
                write!(f, "({e}) {h}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn binom_mi(sum: &MultiIndex, i: &MultiIndex, k: &MultiIndex) -> Q {
    Q::new(
        BigInt::from(sum.factorial()),
        BigInt::from(i.factorial() * k.factorial()),
    )
}

/// `Σ_{min ≤ |K| ≤ k−|I|} (I+K)!/(I!K!) Γ^j_K ∂/∂u^α_{I+K}`.
#[allow(clippy::too_many_arguments)]
fn connection_sum(
    gp: &super::GammaProlongation,
    a: u8,
    i: &MultiIndex,
    j: usize,
    min: usize,
    k: usize,
    sign: &Q,
    img: &mut Image,
) {
    let m = i.dim();
    for len in min..=(k - i.length()) {
        for kk in MultiIndex::all_of_length(m, len) {
            let g = gp.get(j, &kk);
            if g.is_zero() {
                continue;
            }
            let sum = i.add(&kk);
            let c = binom_mi(&sum, i, &kk) * sign;
            add_to(img, HolonomicDir::U(a, sum), g.scale(&c));
        }
    }
}

/// The coordinate table of `p_∇` on `T_{J^k}J^1π_{k−1}` for `n` dependent variables.
pub fn projection_p_nabla(c: &Connection, k: usize, n: usize) -> Result<ProjectionTable> {
    if k < 2 {
        return Err(Error::domain("the nonholonomic projection needs k >= 2"));
    }
    let m = c.dim();
    let gp = gamma_prolong(c, k);
    let mut images = BTreeMap::new();
    for i in 0..m {
        images.insert(NonholonomicDir::X(i as u8), Image::from([(HolonomicDir::X(i as u8), Expr::one())]));
    }
    let one = Q::from_integer(1.into());
    let minus = -one.clone();
    for a in 0..n as u8 {
        for idx in MultiIndex::all_up_to(m, k - 1) {
            // dotted direction
            let mut img = Image::new();
            let w = 1 - idx.length() as i64;
            add_to(&mut img, HolonomicDir::U(a, idx.clone()), Expr::int(w));
            for j in 0..m {
                if let Some(i) = idx.decrement(j) {
                    connection_sum(&gp, a, &i, j, 2, k, &minus, &mut img);
                }
            }
            images.insert(NonholonomicDir::Dot(a, idx.clone()), img);
            // paired directions
            for j in 0..m {
                let mut img = Image::new();
                if idx.length() == k - 1 {
                    let w = Q::new((idx.get(j) as i64 + 1).into(), (k as i64).into());
                    add_to(&mut img, HolonomicDir::U(a, idx.increment(j)), Expr::constant(w));
                } else {
                    connection_sum(&gp, a, &idx, j, 1, k, &one, &mut img);
                }
                images.insert(NonholonomicDir::Pair(a, idx.clone(), j as u8), img);
            }
        }
    }
    Ok(ProjectionTable { k, m, n, images })
}

/// `Ti_{1,k−1}`: `∂/∂x^i ↦ ∂/∂x^i`, `∂/∂u^α_J ↦ [|J| ≤ k−1] ∂/∂u^α_{J·} + Σ_{I+1_j=J, |I| ≤ k−1} ∂/∂u^α_{Ij}`.
pub fn tangent_inclusion(k: usize, m: usize, n: usize) -> BTreeMap<HolonomicDir, Vec<NonholonomicDir>> {
    let mut out = BTreeMap::new();
    for i in 0..m as u8 {
        out.insert(HolonomicDir::X(i), vec![NonholonomicDir::X(i)]);
    }
    for a in 0..n as u8 {
        for jdx in MultiIndex::all_up_to(m, k) {
            let mut v = Vec::new();
            if jdx.length() < k {
                v.push(NonholonomicDir::Dot(a, jdx.clone()));
            }
            for j in 0..m {
                if let Some(i) = jdx.decrement(j) {
                    v.push(NonholonomicDir::Pair(a, i, j as u8));
                }
            }
            out.insert(HolonomicDir::U(a, jdx), v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::qr;

    fn mi(e: &[u8]) -> MultiIndex {
        MultiIndex::from_slice(e)
    }

    #[test]
    fn flat_second_order_values() {
        let t = projection_p_nabla(&Connection::flat(2), 2, 1).unwrap();
        let off = t.image(&NonholonomicDir::Pair(0, mi(&[1, 0]), 1)).unwrap();
        assert_eq!(off, &Image::from([(HolonomicDir::U(0, mi(&[1, 1])), Expr::constant(qr(1, 2)))]));
        let diag = t.image(&NonholonomicDir::Pair(0, mi(&[1, 0]), 0)).unwrap();
        assert_eq!(diag, &Image::from([(HolonomicDir::U(0, mi(&[2, 0])), Expr::one())]));
    }

    #[test]
    fn symbolic_second_order_matches_displayed_table() {
        let c = Connection::symbolic(2);
        let t = projection_p_nabla(&c, 2, 1).unwrap();
        // ∂/∂u_{·j} ↦ ∂/∂u_j + Σ_{|K|=2} Γ^j_K ∂/∂u_K ; ∂/∂u_{i·} ↦ −Σ Γ^i_K ∂/∂u_K
        for j in 0..2 {
            let mut expect = Image::from([(HolonomicDir::U(0, MultiIndex::unit(2, j)), Expr::one())]);
            let mut dot = Image::new();
            for kk in MultiIndex::all_of_length(2, 2) {
                expect.insert(HolonomicDir::U(0, kk.clone()), c.coefficient(j, &kk));
                dot.insert(HolonomicDir::U(0, kk.clone()), -c.coefficient(j, &kk));
            }
            assert_eq!(t.image(&NonholonomicDir::Pair(0, MultiIndex::zeros(2), j as u8)).unwrap(), &expect);
            assert_eq!(t.image(&NonholonomicDir::Dot(0, MultiIndex::unit(2, j))).unwrap(), &dot);
        }
        assert_eq!(
            t.image(&NonholonomicDir::Dot(0, MultiIndex::zeros(2))).unwrap(),
            &Image::from([(HolonomicDir::U(0, MultiIndex::zeros(2)), Expr::one())])
        );
    }

    #[test]
    fn left_inverse_and_symmetrization() {
        for k in 2..=3 {
            for m in 1..=3 {
                let t = projection_p_nabla(&Connection::symbolic(m), k, 2).unwrap();
                assert!(t.is_left_inverse_of_inclusion(), "k={k} m={m}");
            }
        }
        let t = projection_p_nabla(&Connection::symbolic(3), 2, 1).unwrap();
        assert!(t.restricts_to_symmetrization().unwrap());
        assert!(projection_p_nabla(&Connection::flat(2), 1, 1).is_err());
    }
}

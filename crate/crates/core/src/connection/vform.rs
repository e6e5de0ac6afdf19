use std::collections::BTreeMap;
use std::fmt;
use std::ops::{AddAssign, SubAssign};

use num_bigint::BigInt;
use smallvec::SmallVec;

use super::{Connection, GammaProlongation};
use crate::error::{Error, Result};
use crate::jetforms::{self, apply_to_factors, Basis, Form};
use crate::symcore::{Chart, Expr, MultiIndex, Q};

/// A sorted multiset of base directions: the symmetric product `∂_{h_1} ⊙ ⋯ ⊙ ∂_{h_r}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Slots(SmallVec<[u8; 4]>);

impl Slots {
    pub fn empty() -> Self {
        Slots::default()
    }

    pub fn from_directions(dirs: &[usize]) -> Self {
        let mut v: SmallVec<[u8; 4]> = dirs.iter().map(|&d| d as u8).collect();
        v.sort_unstable();
        Slots(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn directions(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&d| d as usize)
    }

    pub fn with(&self, h: usize) -> Slots {
        let mut v = self.0.clone();
        let pos = v.iter().position(|&x| x as usize > h).unwrap_or(v.len());
        v.insert(pos, h as u8);
        Slots(v)
    }

    pub fn without_at(&self, a: usize) -> Slots {
        let mut v = self.0.clone();
        v.remove(a);
        Slots(v)
    }
}

/// `⊙^r 𝔛(M) ⊗ Ω^{p,q}`-valued values: forms tagged with a symmetric slot multiset.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct VForm {
    terms: BTreeMap<Slots, Form>,
}

impl VForm {
    pub fn zero() -> Self {
        VForm::default()
    }

    pub fn from_form(f: Form) -> Self {
        VForm::tagged(Slots::empty(), f)
    }

    pub fn tagged(slots: Slots, f: Form) -> Self {
        let mut v = VForm::zero();
        v.add(slots, &f);
        v
    }

    pub fn add(&mut self, slots: Slots, f: &Form) {
        if f.is_zero() {
            return;
        }
        let entry = self.terms.entry(slots.clone()).or_default();
        *entry += f;
        if entry.is_zero() {
            self.terms.remove(&slots);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Slots, &Form)> {
        self.terms.iter()
    }

    pub fn part(&self, slots: &Slots) -> Form {
        self.terms.get(slots).cloned().unwrap_or_default()
    }

    /// The slot-free part.
    pub fn to_form(&self) -> Form {
        self.part(&Slots::empty())
    }

    /// Slot count if uniform.
    pub fn rank(&self) -> Option<usize> {
        let mut it = self.terms.keys().map(Slots::len);
        let first = it.next()?;
        it.all(|r| r == first).then_some(first)
    }

    pub fn scale_q(&self, c: &Q) -> VForm {
        let mut out = VForm::zero();
        for (s, f) in &self.terms {
            out.add(s.clone(), &f.scale_q(c));
        }
        out
    }

    pub fn map_forms(&self, mut f: impl FnMut(&Form) -> Result<Form>) -> Result<VForm> {
        let mut out = VForm::zero();
        for (s, form) in &self.terms {
            out.add(s.clone(), &f(form)?);
        }
        Ok(out)
    }
}

impl AddAssign<&VForm> for VForm {
    fn add_assign(&mut self, rhs: &VForm) {
        for (s, f) in &rhs.terms {
            self.add(s.clone(), f);
        }
    }
}

impl SubAssign<&VForm> for VForm {
    fn sub_assign(&mut self, rhs: &VForm) {
        for (s, f) in &rhs.terms {
            self.add(s.clone(), &-f);
        }
    }
}

impl fmt::Display for VForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (s, form)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if s.is_empty() {
                write!(f, "[{form}]")?;
            } else {
                let names: Vec<String> = s.directions().map(|d| format!("D[{}]", d + 1)).collect();
                write!(f, "{} (x) [{form}]", names.join(" . "))?;
            }
        }
        Ok(())
    }
}

/// `θ^α_L ↦ Σ_{0<K≤L} L!/((L−K)! K!) Γ^h_K θ^α_{L−K}` for `|L| ≤ k` (no bound when
/// `k` is `None`).
fn s_nabla_one_form(
    gp: &GammaProlongation,
    h: usize,
    l: &MultiIndex,
    k: Option<usize>,
) -> Vec<(Expr, MultiIndex)> {
    if k.is_some_and(|k| l.length() > k) {
        return Vec::new();
    }
    let mut out = Vec::new();
    for kk in l.sub_indices() {
        if kk.is_zero() {
            continue;
        }
        let g = gp.get(h, &kk);
        if g.is_zero() {
            continue;
        }
        let rest = l.sub(&kk).unwrap();
        let c = Q::new(
            BigInt::from(l.factorial()),
            BigInt::from(rest.factorial() * kk.factorial()),
        );
        out.push((g.scale(&c), rest));
    }
    out
}

fn max_theta_order(v: &VForm) -> usize {
    v.terms().map(|(_, f)| f.theta_order()).max().unwrap_or(0)
}

/// `S_∇`: adds a slot `∂_h` and acts on the form part as a derivation. On values that
/// already carry slots the new slot joins the multiset with no normalization.
pub fn s_nabla(c: &Connection, k: Option<usize>, v: &VForm) -> Result<VForm> {
    let top = max_theta_order(v);
    let level = k.map_or(top, |k| k.min(top)).max(1);
    let gp = super::gamma_prolong(c, level);
    s_nabla_with(&gp, k, v)
}

pub(crate) fn s_nabla_with(gp: &GammaProlongation, k: Option<usize>, v: &VForm) -> Result<VForm> {
    let m = gp.m;
    let mut out = VForm::zero();
    for (slots, form) in v.terms() {
        for h in 0..m {
            let image = apply_to_factors(form, false, |b| {
                Ok(match b {
                    Basis::Theta(a, l) => s_nabla_one_form(gp, h, l, k)
                        .into_iter()
                        .map(|(c, j)| (c, smallvec::smallvec![Basis::Theta(*a, j)]))
                        .collect(),
                    Basis::Dx(_) => SmallVec::new(),
                })
            })?;
            out.add(slots.with(h), &image);
        }
    }
    Ok(out)
}

/// `d_{h∇}(X ⊗ ω) = ∇X ∧ ω + X ⊗ d_h ω` with `∇∂_h = Γ^k_{hj} dx^j ⊗ ∂_k`, extended to
/// symmetric products as a derivation over the slots.
pub fn d_h_nabla(c: &Connection, v: &VForm, chart: &Chart) -> Result<VForm> {
    let m = chart.m;
    let mut out = VForm::zero();
    for (slots, form) in v.terms() {
        out.add(slots.clone(), &jetforms::d_h(form, chart)?);
        for (a, h) in slots.directions().enumerate() {
            let rest = slots.without_at(a);
            for kdir in 0..m {
                let mut one = Form::zero();
                for j in 0..m {
                    let g = c.coefficient(kdir, &MultiIndex::unit(m, h).increment(j));
                    if !g.is_zero() {
                        one += &Form::dx(j).scale(&g);
                    }
                }
                if !one.is_zero() {
                    out.add(rest.with(kdir), &one.wedge(form));
                }
            }
        }
    }
    Ok(out)
}

/// `C`: contracts each slot occurrence once with the form part through `i_{d_h}`.
pub fn contract_c(v: &VForm) -> Result<VForm> {
    let mut out = VForm::zero();
    for (slots, form) in v.terms() {
        if slots.is_empty() {
            return Err(Error::domain("contraction needs at least one vector slot"));
        }
        for (a, h) in slots.directions().enumerate() {
            out.add(slots.without_at(a), &jetforms::interior_total(h, form));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetforms::omega0;
    use crate::varops::s_i;

    fn mi(e: &[u8]) -> MultiIndex {
        MultiIndex::from_slice(e)
    }

    #[test]
    fn flat_is_local_vertical_tensor() {
        let m = 2;
        let flat = Connection::flat(m);
        let f = Form::theta(0, mi(&[2, 1])).wedge(&Form::dx(0)).scale(&Expr::x(1));
        let got = s_nabla(&flat, None, &VForm::from_form(f.clone())).unwrap();
        for h in 0..m {
            let expect = s_i(h, m).apply(&f).unwrap();
            assert_eq!(got.part(&Slots::from_directions(&[h])), expect);
        }
    }

    #[test]
    fn second_order_first_level() {
        let c = Connection::symbolic(2);
        let t = Form::theta(0, mi(&[1, 0]));
        let got = s_nabla(&c, Some(2), &VForm::from_form(t)).unwrap();
        assert_eq!(got, VForm::tagged(Slots::from_directions(&[0]), Form::theta(0, mi(&[0, 0]))));
    }

    #[test]
    fn contraction_examples() {
        let t = Form::theta(0, mi(&[0, 0]));
        assert!(contract_c(&VForm::tagged(Slots::from_directions(&[0]), t.clone())).unwrap().is_zero());
        assert!(contract_c(&VForm::from_form(t)).is_err());
        let v = VForm::tagged(Slots::from_directions(&[0, 1]), omega0(2));
        let got = contract_c(&v).unwrap();
        let mut expect = VForm::tagged(Slots::from_directions(&[1]), Form::dx(1));
        expect.add(Slots::from_directions(&[0]), &-Form::dx(0));
        assert_eq!(got, expect);
    }

    #[test]
    fn d_h_nabla_reductions() {
        let chart = Chart::new(2, 1);
        let f = Form::theta(0, mi(&[1, 0])).scale(&Expr::u(0, mi(&[0, 1])));
        let zero_slot = d_h_nabla(&Connection::symbolic(2), &VForm::from_form(f.clone()), &chart).unwrap();
        assert_eq!(zero_slot.to_form(), jetforms::d_h(&f, &chart).unwrap());
        let tagged = VForm::tagged(Slots::from_directions(&[1]), f.clone());
        let flat = d_h_nabla(&Connection::flat(2), &tagged, &chart).unwrap();
        assert_eq!(flat, VForm::tagged(Slots::from_directions(&[1]), jetforms::d_h(&f, &chart).unwrap()));
    }
}

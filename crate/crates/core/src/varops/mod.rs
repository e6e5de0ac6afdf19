//! Vertical endomorphisms, the local homotopy operators `P̃` and `P̂` for `d_h`, and the
//! Euler–Lagrange operator.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::jetforms::{self, apply_to_factors, Basis, Form};
use crate::symcore::{factorial, Atom, Chart, Expr, MultiIndex, Q};

/// A degree-zero endomorphism of contact one-forms preserving the dependent index,
/// applied to forms as a derivation (`i_S`). `dx` factors map to zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoweringEndo {
    /// `S^{j_1} ∘ ⋯ ∘ S^{j_r}` for `J = 1_{j_1} + ⋯ + 1_{j_r}`:
    /// `θ_L ↦ L!/(L−J)! θ_{L−J}`.
    Coordinate(MultiIndex),
    /// `S^η` for `η = η_i dx^i` on `J^k`.
    Eta { eta: Vec<Expr>, k: usize },
    /// Composition, rightmost applied first.
    Compose(Vec<LoweringEndo>),
}

/// `S^i`.
pub fn s_i(i: usize, m: usize) -> LoweringEndo {
    LoweringEndo::Coordinate(MultiIndex::unit(m, i))
}

/// `S^η`; the coefficients must depend on base coordinates only.
pub fn s_eta(eta: Vec<Expr>, k: usize) -> Result<LoweringEndo> {
    for e in &eta {
        if e.atoms().iter().any(|a| !matches!(a, Atom::Base(_))) {
            return Err(Error::domain("S^eta requires coefficients in the base coordinates"));
        }
    }
    Ok(LoweringEndo::Eta { eta, k })
}

fn ratio_fact(num: &MultiIndex, den: &MultiIndex) -> Q {
    Q::new(BigInt::from(num.factorial()), BigInt::from(den.factorial()))
}

impl LoweringEndo {
    /// Image of `θ^α_L` as `(coefficient, J)` pairs meaning `coefficient · θ^α_J`.
    pub fn act(&self, l: &MultiIndex) -> Result<Vec<(Expr, MultiIndex)>> {
        match self {
            LoweringEndo::Coordinate(j) => Ok(match l.sub(j) {
                Some(rest) => vec![(Expr::constant(ratio_fact(l, &rest)), rest)],
                None => Vec::new(),
            }),
            LoweringEndo::Eta { eta, k } => {
                let m = l.dim();
                let mut out = Vec::new();
                if l.length() > *k || l.length() == 0 {
                    return Ok(out);
                }
                for (i, ei) in eta.iter().enumerate() {
                    let Some(rest) = l.decrement(i) else { continue };
                    // rest = J + K
                    for kk in rest.sub_indices() {
                        let j = rest.sub(&kk).unwrap();
                        let chart = Chart::new(m, 1);
                        let deriv = ei.iterated_total(&kk, &chart)?;
                        if deriv.is_zero() {
                            continue;
                        }
                        let c = Q::new(
                            BigInt::from(l.factorial()),
                            BigInt::from(j.factorial() * kk.factorial() * (kk.length() as u64 + 1)),
                        );
                        out.push((deriv.scale(&c), j));
                    }
                }
                Ok(out)
            }
            LoweringEndo::Compose(parts) => {
                let mut cur: Vec<(Expr, MultiIndex)> = vec![(Expr::one(), l.clone())];
                for p in parts.iter().rev() {
                    let mut next: Vec<(Expr, MultiIndex)> = Vec::new();
                    for (c, idx) in &cur {
                        for (c2, idx2) in p.act(idx)? {
                            match next.iter_mut().find(|(_, i)| *i == idx2) {
                                Some(slot) => slot.0 += &(c * &c2),
                                None => next.push((c * &c2, idx2)),
                            }
                        }
                    }
                    next.retain(|(c, _)| !c.is_zero());
                    cur = next;
                }
                Ok(cur)
            }
        }
    }

    /// `i_S ω`: the endomorphism extended to forms as a derivation.
    pub fn apply(&self, form: &Form) -> Result<Form> {
        apply_to_factors(form, false, |b| {
            Ok(match b {
                Basis::Theta(a, l) => self
                    .act(l)?
                    .into_iter()
                    .map(|(c, j)| (c, smallvec::smallvec![Basis::Theta(*a, j)]))
                    .collect(),
                Basis::Dx(_) => SmallVec::new(),
            })
        })
    }
}

/// `S̃^J ω`: compose first, then apply once as a derivation.
pub fn s_tilde(j: &MultiIndex, form: &Form) -> Form {
    LoweringEndo::Coordinate(j.clone()).apply(form).expect("infallible")
}

/// `Ŝ^J ω`: apply `i_{S^{j_l}}` sequentially.
pub fn s_hat(j: &MultiIndex, form: &Form) -> Form {
    let m = j.dim();
    let mut cur = form.clone();
    for d in j.directions() {
        cur = s_tilde(&MultiIndex::unit(m, d), &cur);
    }
    cur
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HomotopyKind {
    Tilde,
    Hat,
}

pub(crate) fn check_bidegree(form: &Form, p: usize, q: usize, m: usize) -> Result<()> {
    if p == 0 {
        return Err(Error::domain("homotopy operator needs p >= 1"));
    }
    if q == 0 || q > m {
        return Err(Error::domain(format!("homotopy operator needs 1 <= q <= {m}, got q = {q}")));
    }
    if !form.is_zero() && form.bidegree() != Some((p, q)) {
        return Err(Error::domain(format!(
            "form is not homogeneous of bidegree ({p},{q}): found {:?}",
            form.bidegrees()
        )));
    }
    Ok(())
}

/// `(−1)^{|I|}(m−q)!|I|!/(P (m−q+|I|+1)! I!)` with `P = p` or `p^{|I|+1}`.
fn homotopy_coefficient(kind: HomotopyKind, idx: &MultiIndex, p: usize, q: usize, m: usize) -> Q {
    let n = idx.length();
    let denom_p = match kind {
        HomotopyKind::Tilde => BigInt::from(p),
        HomotopyKind::Hat => BigInt::from(p).pow(n as u32 + 1),
    };
    let num = BigInt::from(factorial(m - q) * factorial(n));
    let den = denom_p * BigInt::from(factorial(m - q + n + 1) * idx.factorial());
    let c = Q::new(num, den);
    if n % 2 == 1 {
        -c
    } else {
        c
    }
}

/// `P̃ω` or `P̂ω` for `ω` of bidegree `(p, q)`.
pub fn homotopy(kind: HomotopyKind, form: &Form, p: usize, q: usize, chart: &Chart) -> Result<Form> {
    let m = chart.m;
    check_bidegree(form, p, q, m)?;
    // S̃ lowers one factor, Ŝ may spread the lowering over every factor.
    let bound = form
        .terms()
        .map(|(w, _)| match kind {
            HomotopyKind::Tilde => w.theta_order(),
            HomotopyKind::Hat => w.theta_weight(),
        })
        .max()
        .unwrap_or(0);
    let mut out = Form::zero();
    for i in 0..m {
        let mut inner = Form::zero();
        for len in 0..bound {
            for idx in MultiIndex::all_of_length(m, len) {
                let j = idx.increment(i);
                let lowered = match kind {
                    HomotopyKind::Tilde => s_tilde(&j, form),
                    HomotopyKind::Hat => s_hat(&j, form),
                };
                if lowered.is_zero() {
                    continue;
                }
                let c = homotopy_coefficient(kind, &idx, p, q, m);
                inner += &jetforms::lie_iterated(&idx, &lowered, chart)?.scale_q(&c);
            }
        }
        out += &jetforms::interior_total(i, &inner);
    }
    Ok(out)
}

pub fn p_tilde(form: &Form, p: usize, q: usize, chart: &Chart) -> Result<Form> {
    homotopy(HomotopyKind::Tilde, form, p, q, chart)
}

pub fn p_hat(form: &Form, p: usize, q: usize, chart: &Chart) -> Result<Form> {
    homotopy(HomotopyKind::Hat, form, p, q, chart)
}

/// Applies `P̃` to each homogeneous component of `form` (all must have `p ≥ 1`, `q ≥ 1`).
pub fn p_tilde_graded(form: &Form, chart: &Chart) -> Result<Form> {
    let mut out = Form::zero();
    for ((p, q), part) in form.contact_decompose() {
        out += &p_tilde(&part, p, q, chart)?;
    }
    Ok(out)
}

/// `ε_λ = Σ_{|I|≤k} (−1)^{|I|} d_I(∂L/∂u^α_I) θ^α ∧ ω_0`.
pub fn euler_lagrange(l: &Expr, k: usize, chart: &Chart) -> Result<Form> {
    if let Some(o) = l.jet_order() {
        if o > k {
            return Err(Error::domain(format!("Lagrangian has jet order {o} > declared order {k}")));
        }
    }
    let m = chart.m;
    let omega0 = jetforms::omega0(m);
    let mut out = Form::zero();
    for alpha in 0..chart.n {
        let mut coeff = Expr::zero();
        for idx in MultiIndex::all_up_to(m, k) {
            let d = l.partial(&Atom::jet(alpha, idx.clone()));
            if d.is_zero() {
                continue;
            }
            let t = d.iterated_total(&idx, chart)?;
            if idx.length() % 2 == 1 {
                coeff -= &t;
            } else {
                coeff += &t;
            }
        }
        out += &Form::theta(alpha, MultiIndex::zeros(m)).wedge(&omega0).scale(&coeff);
    }
    Ok(out)
}

/// `θ^α ∧ Σ_I (−1)^{|I|} d_I(i_{∂/∂u^α_I} ω)` for `ω ∈ Ω^{1,m}`.
pub fn source_residue(form: &Form, chart: &Chart) -> Result<Form> {
    let m = chart.m;
    if !form.is_zero() && form.bidegree() != Some((1, m)) {
        return Err(Error::domain(format!(
            "source residue needs a form of bidegree (1,{m}), found {:?}",
            form.bidegrees()
        )));
    }
    let jets: BTreeSet<(u8, MultiIndex)> = form
        .terms()
        .flat_map(|(w, _)| {
            w.factors()
                .iter()
                .filter_map(|b| match b {
                    Basis::Theta(a, i) => Some((*a, i.clone())),
                    Basis::Dx(_) => None,
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let mut out = Form::zero();
    for (alpha, idx) in jets {
        let inner = jetforms::interior_jet(alpha as usize, &idx, form);
        let mut d = jetforms::lie_iterated(&idx, &inner, chart)?;
        if idx.length() % 2 == 1 {
            d = -d;
        }
        out += &Form::theta(alpha as usize, MultiIndex::zeros(m)).wedge(&d);
    }
    Ok(out)
}

/// True iff every term is `ε θ^α ∧ ω_0`.
pub fn is_source_form(form: &Form, m: usize) -> bool {
    form.terms().all(|(w, _)| {
        let f = w.factors();
        f.len() == m + 1
            && matches!(&f[0], Basis::Theta(_, i) if i.is_zero())
            && f[1..].iter().enumerate().all(|(k, b)| *b == Basis::dx(k))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetforms::{d_h, d_v, omega0, omega_basis};
    use crate::symcore::{q, qr, FormalFunction};

    fn mi(e: &[u8]) -> MultiIndex {
        MultiIndex::from_slice(e)
    }

    fn th(e: &[u8]) -> Form {
        Form::theta(0, mi(e))
    }

    #[test]
    fn s_i_action() {
        let s1 = s_i(0, 2);
        assert_eq!(s1.act(&mi(&[2, 0])).unwrap(), vec![(Expr::int(2), mi(&[1, 0]))]);
        assert!(s1.act(&mi(&[0, 0])).unwrap().is_empty());
        assert!(s1.apply(&Form::dx(1)).unwrap().is_zero());
    }

    #[test]
    fn s_eta_constant_matches_s_i() {
        let eta = s_eta(vec![Expr::one(), Expr::zero()], 3).unwrap();
        for l in MultiIndex::all_up_to(2, 3) {
            assert_eq!(eta.act(&l).unwrap(), s_i(0, 2).act(&l).unwrap(), "{l:?}");
        }
        let zero = s_eta(vec![Expr::zero(), Expr::zero()], 3).unwrap();
        assert!(zero.act(&mi(&[1, 1])).unwrap().is_empty());
        assert!(s_eta(vec![Expr::u(0, mi(&[0]))], 1).is_err());
    }

    #[test]
    fn s_eta_varying() {
        // m=1, η = x dx, k=2. θ_(1) ↦ x θ; θ_(2) ↦ 2x θ_(1) + (2!/(0!1!2))·1·θ = 2x θ_(1) + θ.
        let eta = s_eta(vec![Expr::x(0)], 2).unwrap();
        assert_eq!(eta.act(&mi(&[1])).unwrap(), vec![(Expr::x(0), mi(&[0]))]);
        let got = eta.apply(&th(&[2])).unwrap();
        let expect = th(&[1]).scale(&Expr::x(0).scale(&q(2))) + th(&[0]);
        assert_eq!(got, expect);
        assert!(eta.apply(&th(&[3])).unwrap().is_zero());
    }

    #[test]
    fn compositions() {
        let w0 = omega0(2);
        assert_eq!(s_tilde(&mi(&[2, 0]), &th(&[2, 0]).wedge(&w0)), th(&[0, 0]).wedge(&w0).scale_q(&q(2)));
        assert!(s_tilde(&mi(&[1, 1]), &th(&[0, 0]).wedge(&w0)).is_zero());
        let composed = LoweringEndo::Compose(vec![s_i(0, 2), s_i(1, 2), s_i(0, 2)]);
        for l in MultiIndex::all_up_to(2, 4) {
            let a = composed.act(&l).unwrap();
            let b = LoweringEndo::Coordinate(mi(&[2, 1])).act(&l).unwrap();
            assert_eq!(a, b);
        }
        let f = th(&[1, 0]).wedge(&Form::dx(1));
        assert_eq!(s_hat(&mi(&[1, 0]), &f), s_tilde(&mi(&[1, 0]), &f));
        // two contact factors: Ŝ^{(2,0)} spreads over both factors, S̃ does not
        let two = th(&[1, 0]).wedge(&Form::theta(1, mi(&[1, 0])));
        assert!(s_tilde(&mi(&[2, 0]), &two).is_zero());
        assert_eq!(
            s_hat(&mi(&[2, 0]), &two),
            th(&[0, 0]).wedge(&Form::theta(1, mi(&[0, 0]))).scale_q(&q(2))
        );
    }

    #[test]
    fn p_tilde_examples() {
        let chart = Chart::new(2, 1);
        let w0 = omega0(2);
        assert!(p_tilde(&th(&[0, 0]).wedge(&w0), 1, 2, &chart).unwrap().is_zero());
        let w = th(&[1, 0]).wedge(&w0);
        let got = p_tilde(&w, 1, 2, &chart).unwrap();
        assert_eq!(got, -th(&[0, 0]).wedge(&Form::dx(1)));
        let back = d_h(&got, &chart).unwrap();
        assert_eq!(back, w);
        assert_eq!(p_hat(&w, 1, 2, &chart).unwrap(), got);
        assert!(p_tilde(&w0, 0, 2, &chart).is_err());
        assert!(p_tilde(&w, 1, 1, &chart).is_err());
    }

    #[test]
    fn homotopy_identity_second_order() {
        let chart = Chart::new(2, 1);
        let f = Expr::atom(Atom::formal(FormalFunction::new("f", 2), 2));
        let w = th(&[1, 1]).wedge(&Form::dx(0)).scale(&f);
        let ph = p_tilde(&w, 1, 1, &chart).unwrap();
        let dw = d_h(&w, &chart).unwrap();
        let pdw = p_tilde(&dw, 1, 2, &chart).unwrap();
        assert_eq!(d_h(&ph, &chart).unwrap() + pdw, w);
    }

    #[test]
    fn euler_lagrange_examples() {
        let chart = Chart::new(2, 1);
        let w0 = omega0(2);
        let theta_w0 = th(&[0, 0]).wedge(&w0);
        let ux = Expr::u(0, mi(&[1, 0]));
        let uy = Expr::u(0, mi(&[0, 1]));
        let dirichlet = (&ux * &ux + &uy * &uy).scale(&qr(1, 2));
        let el = euler_lagrange(&dirichlet, 1, &chart).unwrap();
        let lap = Expr::u(0, mi(&[2, 0])) + Expr::u(0, mi(&[0, 2]));
        assert_eq!(el, theta_w0.scale(&-lap));
        let u = Expr::u(0, mi(&[0, 0]));
        assert_eq!(euler_lagrange(&(&u * &u), 0, &chart).unwrap(), theta_w0.scale(&u.scale(&q(2))));
        let chart22 = Chart::new(2, 2);
        let jac = &Expr::u(0, mi(&[1, 0])) * &Expr::u(1, mi(&[0, 1]))
            - &Expr::u(0, mi(&[0, 1])) * &Expr::u(1, mi(&[1, 0]));
        assert!(euler_lagrange(&jac, 1, &chart22).unwrap().is_zero());
        assert!(is_source_form(&el, 2));
        assert!(!is_source_form(&th(&[1, 0]).wedge(&w0), 2));
        assert!(!is_source_form(&th(&[0, 0]).wedge(&Form::theta(1, mi(&[0, 0]))).wedge(&Form::dx(1)), 2));
    }

    #[test]
    fn source_residue_examples() {
        let chart = Chart::new(2, 1);
        let w0 = omega0(2);
        let tw = th(&[0, 0]).wedge(&w0);
        assert_eq!(source_residue(&tw, &chart).unwrap(), tw);
        let ux = Expr::u(0, mi(&[1, 0]));
        let lam = w0.scale(&(&ux * &ux));
        let dv = d_v(&lam, &chart).unwrap();
        assert_eq!(
            source_residue(&dv, &chart).unwrap(),
            euler_lagrange(&(&ux * &ux), 1, &chart).unwrap()
        );
        let eta = th(&[1, 0]).wedge(&omega_basis(&[1], 2)).scale(&Expr::x(0));
        let exact = d_h(&eta, &chart).unwrap();
        assert!(source_residue(&exact, &chart).unwrap().is_zero());
        let pw = p_tilde(&dv, 1, 2, &chart).unwrap();
        assert_eq!(source_residue(&dv, &chart).unwrap(), &dv - &d_h(&pw, &chart).unwrap());
    }
}

//! Lepage equivalents of a Lagrangian `λ = L ω_0`, the extension `ϑ^F` by homotopy
//! operators, the Vainberg–Tonti Lagrangian and the closure check.

use std::sync::Arc;

use num_bigint::BigInt;

use crate::error::{Error, Result};
use crate::jetforms::{d_full, d_v, omega0, omega_basis, Basis, Form};
use crate::symcore::{factorial, Atom, Chart, Dependence, Expr, FormalFunction, MultiIndex, Q};
use crate::varops::{self, HomotopyKind};

/// A Lagrangian `L` of declared order `k` on a chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LagrangianSpec {
    pub l: Expr,
    pub k: usize,
    pub chart: Chart,
}

impl LagrangianSpec {
    pub fn new(l: Expr, k: usize, chart: Chart) -> Result<Self> {
        if let Some(o) = l.jet_order() {
            if o > k {
                return Err(Error::domain(format!(
                    "Lagrangian has jet order {o}, above its declared order {k}"
                )));
            }
        }
        if k > chart.order_cap {
            return Err(Error::OrderCap { order: k, cap: chart.order_cap });
        }
        Ok(LagrangianSpec { l, k, chart })
    }

    /// A formal Lagrangian `name` of order `k`.
    pub fn formal(name: &str, k: usize, chart: Chart, nonvanishing: bool) -> Self {
        let f = if nonvanishing {
            FormalFunction::nonvanishing(name, k)
        } else {
            FormalFunction::new(name, k)
        };
        LagrangianSpec { l: Expr::atom(Atom::formal(f, chart.m)), k, chart }
    }

    /// `λ = L ω_0`.
    pub fn lambda(&self) -> Form {
        omega0(self.chart.m).scale(&self.l)
    }

    pub fn euler_lagrange(&self) -> Result<Form> {
        varops::euler_lagrange(&self.l, self.k, &self.chart)
    }

    fn dl(&self, alpha: usize, idx: MultiIndex) -> Expr {
        self.l.partial(&Atom::jet(alpha, idx))
    }
}

/// Recomputed Lepage-property diagnostics for a candidate `ϑ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LepageReport {
    pub theta: Form,
    pub one_contact_is_source: bool,
    pub horizontal_part_equals_lambda: bool,
    pub d_theta: Form,
}

impl LepageReport {
    pub fn is_lepage_equivalent(&self) -> bool {
        self.one_contact_is_source && self.horizontal_part_equals_lambda
    }
}

pub fn lepage_report(theta: Form, spec: &LagrangianSpec) -> Result<LepageReport> {
    let d_theta = d_full(&theta, &spec.chart)?;
    Ok(LepageReport {
        one_contact_is_source: varops::is_source_form(&d_theta.contact_component(1), spec.chart.m),
        horizontal_part_equals_lambda: theta.horizontalize() == spec.lambda(),
        d_theta,
        theta,
    })
}

fn principal_coefficient(j: &MultiIndex, k: &MultiIndex, top: &MultiIndex) -> Q {
    let num = BigInt::from(top.factorial() * factorial(j.length()) * factorial(k.length()));
    let den = BigInt::from(factorial(j.length() + k.length() + 1) * j.factorial() * k.factorial());
    let c = Q::new(num, den);
    if j.length() % 2 == 1 {
        -c
    } else {
        c
    }
}

/// The principal Lepage equivalent, from its closed-form double sum.
pub fn principal_lepage(spec: &LagrangianSpec) -> Result<Form> {
    let (m, k) = (spec.chart.m, spec.k);
    let mut out = spec.lambda();
    if k == 0 {
        return Ok(out);
    }
    let omegas: Vec<Form> = (0..m).map(|j| omega_basis(&[j], m)).collect();
    for alpha in 0..spec.chart.n {
        for jj in MultiIndex::all_up_to(m, k - 1) {
            for kk in MultiIndex::all_up_to(m, k - jj.length() - 1) {
                for (j, om) in omegas.iter().enumerate() {
                    let top = jj.add(&kk).increment(j);
                    let dl = spec.dl(alpha, top.clone());
                    if dl.is_zero() {
                        continue;
                    }
                    let coeff = dl
                        .iterated_total(&jj, &spec.chart)?
                        .scale(&principal_coefficient(&jj, &kk, &top));
                    out += &Form::theta(alpha, kk.clone()).wedge(om).scale(&coeff);
                }
            }
        }
    }
    Ok(out)
}

/// `λ − P̃(d_v λ)`.
pub fn principal_lepage_via_homotopy(spec: &LagrangianSpec) -> Result<Form> {
    let lam = spec.lambda();
    let dv = d_v(&lam, &spec.chart)?;
    Ok(&lam - &varops::p_tilde(&dv, 1, spec.chart.m, &spec.chart)?)
}

/// `L ω_0 + ∂L/∂u^α_j θ^α ∧ ω_j` for a first-order `L`.
pub fn poincare_cartan(spec: &LagrangianSpec) -> Result<Form> {
    require_order(spec, 1)?;
    let m = spec.chart.m;
    let mut out = spec.lambda();
    for alpha in 0..spec.chart.n {
        for j in 0..m {
            let dl = spec.dl(alpha, MultiIndex::unit(m, j));
            out += &Form::theta(alpha, MultiIndex::zeros(m)).wedge(&omega_basis(&[j], m)).scale(&dl);
        }
    }
    Ok(out)
}

fn require_order(spec: &LagrangianSpec, k: usize) -> Result<()> {
    if spec.l.jet_order().unwrap_or(0) > k {
        return Err(Error::domain(format!("construction needs a Lagrangian of order <= {k}")));
    }
    Ok(())
}

fn caratheodory_from_factors(spec: &LagrangianSpec, factors: Vec<Form>) -> Result<Form> {
    let m = spec.chart.m;
    let scale = if m > 1 {
        spec.l.pow(1 - m as i32).map_err(|_| {
            Error::domain("Caratheodory form needs a Lagrangian declared nonvanishing")
        })?
    } else {
        Expr::one()
    };
    let mut out = Form::scalar(Expr::one());
    for f in &factors {
        out = out.wedge(f);
    }
    Ok(out.scale(&scale))
}

/// `L^{1−m} ⋀_j (L dx^j + ∂L/∂u^α_j θ^α)`.
pub fn caratheodory(spec: &LagrangianSpec) -> Result<Form> {
    require_order(spec, 1)?;
    let m = spec.chart.m;
    let factors = (0..m)
        .map(|j| {
            let mut f = Form::dx(j).scale(&spec.l);
            for alpha in 0..spec.chart.n {
                f += &Form::theta(alpha, MultiIndex::zeros(m))
                    .scale(&spec.dl(alpha, MultiIndex::unit(m, j)));
            }
            f
        })
        .collect();
    caratheodory_from_factors(spec, factors)
}

/// The second-order Carathéodory form; `1/#(ij)` is 1 for `i = j` and `1/2` otherwise.
pub fn caratheodory2(spec: &LagrangianSpec) -> Result<Form> {
    require_order(spec, 2)?;
    let m = spec.chart.m;
    let mut factors = Vec::with_capacity(m);
    for j in 0..m {
        let mut f = Form::dx(j).scale(&spec.l);
        for alpha in 0..spec.chart.n {
            let mut c0 = spec.dl(alpha, MultiIndex::unit(m, j));
            for i in 0..m {
                let w = if i == j { Q::from_integer(1.into()) } else { Q::new(1.into(), 2.into()) };
                let second = spec.dl(alpha, MultiIndex::unit(m, i).increment(j));
                if second.is_zero() {
                    continue;
                }
                c0 -= &second.total_derivative(i, &spec.chart)?.scale(&w);
                f += &Form::theta(alpha, MultiIndex::unit(m, i)).scale(&second.scale(&w));
            }
            f += &Form::theta(alpha, MultiIndex::zeros(m)).scale(&c0);
        }
        factors.push(f);
    }
    caratheodory_from_factors(spec, factors)
}

/// `Σ_p (1/(p!)²) ∂^p L/∂u^{α_1}_{j_1}⋯∂u^{α_p}_{j_p} θ^{α_1}∧⋯∧θ^{α_p}∧ω_{j_1…j_p}`.
pub fn fundamental_first_order(spec: &LagrangianSpec) -> Result<Form> {
    if spec.k != 1 {
        return Err(Error::domain("the fundamental form is defined here for first-order Lagrangians"));
    }
    let (m, n) = (spec.chart.m, spec.chart.n);
    let mut out = Form::zero();
    // (α-sequence, j-sequence, coefficient, θ-word)
    let mut frontier: Vec<(Vec<usize>, Vec<usize>, Expr, Form)> =
        vec![(Vec::new(), Vec::new(), spec.l.clone(), Form::scalar(Expr::one()))];
    for p in 0..=m.min(n) {
        let weight = Q::new(1.into(), BigInt::from(factorial(p) * factorial(p)));
        let mut next = Vec::new();
        for (alphas, js, coeff, word) in &frontier {
            out += &word.wedge(&omega_basis(js, m)).scale(&coeff.scale(&weight));
            if p == m.min(n) {
                continue;
            }
            for alpha in (0..n).filter(|a| !alphas.contains(a)) {
                for j in (0..m).filter(|j| !js.contains(j)) {
                    let c = coeff.partial(&Atom::jet(alpha, MultiIndex::unit(m, j)));
                    if c.is_zero() {
                        continue;
                    }
                    let mut a2 = alphas.clone();
                    a2.push(alpha);
                    let mut j2 = js.clone();
                    j2.push(j);
                    let w2 = word.wedge(&Form::theta(alpha, MultiIndex::zeros(m)));
                    next.push((a2, j2, c, w2));
                }
            }
        }
        frontier = next;
    }
    Ok(out)
}

/// The Vainberg–Tonti Lagrangian `u^α ∫_0^1 ε_α(x, t u) dt` of a polynomial source form.
pub fn vainberg_tonti(eps: &Form, chart: &Chart) -> Result<LagrangianSpec> {
    let m = chart.m;
    if !varops::is_source_form(eps, m) {
        return Err(Error::domain("Vainberg-Tonti needs a source form"));
    }
    let mut l = Expr::zero();
    for (w, e) in eps.terms() {
        let Basis::Theta(alpha, _) = &w.factors()[0] else { unreachable!() };
        let mut integral = Expr::zero();
        for (mono, c) in e.terms() {
            for (a, pw) in mono.factors() {
                let polynomial = match a {
                    Atom::Jet(..) => *pw >= 0,
                    Atom::Formal(fd) => matches!(fd.func.dependence, Dependence::Base),
                    _ => true,
                };
                if !polynomial {
                    return Err(Error::Unsupported(format!(
                        "source coefficient {e} is not polynomial in the jet coordinates"
                    )));
                }
            }
            let deg = mono.jet_degree() as i64;
            integral.add_term(mono.clone(), c / Q::from_integer((deg + 1).into()));
        }
        l += &(&Expr::u(*alpha as usize, MultiIndex::zeros(m)) * &integral);
    }
    let k = l.jet_order().unwrap_or(0);
    LagrangianSpec::new(l, k, *chart)
}

/// Homotopy operator choice per contact row: `rows[p − 2]` is used on row `p`, default `P̃`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RowOperators {
    pub rows: Vec<HomotopyKind>,
}

impl RowOperators {
    pub fn uniform(kind: HomotopyKind, m: usize) -> Self {
        RowOperators { rows: vec![kind; m.saturating_sub(1)] }
    }

    fn for_row(&self, p: usize) -> HomotopyKind {
        self.rows.get(p - 2).copied().unwrap_or(HomotopyKind::Tilde)
    }
}

/// `ϑ^F = ϑ + Σ_{p=1}^{m−1} (−1)^p (P_{p+1} d_v ⋯ P_2 d_v) ϑ^{(1)}`.
pub fn extend(theta: &Form, chart: &Chart, rows: &RowOperators) -> Result<Form> {
    let m = chart.m;
    for (p, q) in theta.bidegrees() {
        if p > 1 || p + q != m {
            return Err(Error::domain(
                "extension needs an m-form that is at most 1-contact",
            ));
        }
    }
    let mut out = theta.clone();
    let mut cur = theta.contact_component(1);
    for p in 1..m {
        let dv = d_v(&cur, chart)?;
        let kind = rows.for_row(p + 1);
        cur = -varops::homotopy(kind, &dv, p + 1, m - p, chart)?;
        if cur.is_zero() {
            break;
        }
        out += &cur;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Construction {
    /// Extension of the principal Lepage equivalent by `P̃` on every row.
    Extend,
    Principal,
    PoincareCartan,
    Fundamental,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureReport {
    pub is_null: bool,
    pub theta: Form,
    pub d_theta_f: Form,
    pub el_form: Form,
}

pub fn construct(spec: &LagrangianSpec, construction: Construction) -> Result<Form> {
    match construction {
        Construction::Extend => extend(&principal_lepage(spec)?, &spec.chart, &RowOperators::default()),
        Construction::Principal => principal_lepage(spec),
        Construction::PoincareCartan => poincare_cartan(spec),
        Construction::Fundamental => fundamental_first_order(spec),
    }
}

pub fn closure_check(spec: &LagrangianSpec, construction: Construction) -> Result<ClosureReport> {
    let theta = construct(spec, construction)?;
    let el_form = spec.euler_lagrange()?;
    Ok(ClosureReport {
        is_null: el_form.is_zero(),
        d_theta_f: d_full(&theta, &spec.chart)?,
        el_form,
        theta,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LepageDifference {
    pub psi: Form,
    pub remainder: Form,
}

/// Splits `t1 − t2 = dψ + (at least 2-contact)` with `ψ = P̃((t1 − t2)^{(1)})`.
pub fn lepage_difference_decompose(t1: &Form, t2: &Form, chart: &Chart) -> Result<LepageDifference> {
    let m = chart.m;
    if t1.horizontalize() != t2.horizontalize() {
        return Err(Error::domain("forms have different horizontal parts"));
    }
    let d1 = d_full(t1, chart)?.contact_component(1);
    let d2 = d_full(t2, chart)?.contact_component(1);
    if d1 != d2 || !varops::is_source_form(&d1, m) {
        return Err(Error::domain("forms are not Lepage equivalents of the same Lagrangian"));
    }
    let theta = t1 - t2;
    let psi = if m > 1 {
        varops::p_tilde(&theta.contact_component(1), 1, m - 1, chart)?
    } else {
        Form::zero()
    };
    let remainder = &theta - &d_full(&psi, chart)?;
    debug_assert!(remainder.contact_component(0).is_zero() && remainder.contact_component(1).is_zero());
    Ok(LepageDifference { psi, remainder })
}

/// A formal function of order `k`, for building test Lagrangians.
pub fn formal_expr(func: Arc<FormalFunction>, m: usize) -> Expr {
    Expr::atom(Atom::formal(func, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::{q, qr};

    fn mi(e: &[u8]) -> MultiIndex {
        MultiIndex::from_slice(e)
    }

    #[test]
    fn principal_first_order_is_poincare_cartan() {
        let chart = Chart::new(2, 1);
        let spec = LagrangianSpec::formal("L", 1, chart, false);
        let pc = poincare_cartan(&spec).unwrap();
        assert_eq!(principal_lepage(&spec).unwrap(), pc);
        assert_eq!(principal_lepage_via_homotopy(&spec).unwrap(), pc);
    }

    #[test]
    fn principal_dirichlet() {
        let chart = Chart::new(2, 1);
        let ux = Expr::u(0, mi(&[1, 0]));
        let uy = Expr::u(0, mi(&[0, 1]));
        let l = (&ux * &ux + &uy * &uy).scale(&qr(1, 2));
        let spec = LagrangianSpec::new(l.clone(), 1, chart).unwrap();
        let th = Form::theta(0, mi(&[0, 0]));
        let expect = omega0(2).scale(&l)
            + th.wedge(&omega_basis(&[0], 2)).scale(&ux)
            + th.wedge(&omega_basis(&[1], 2)).scale(&uy);
        assert_eq!(principal_lepage(&spec).unwrap(), expect);
    }

    #[test]
    fn constant_lagrangian() {
        let spec = LagrangianSpec::new(Expr::int(3), 2, Chart::new(2, 1)).unwrap();
        assert_eq!(principal_lepage_via_homotopy(&spec).unwrap(), spec.lambda());
    }

    #[test]
    fn caratheodory_properties() {
        let chart = Chart::new(2, 1);
        let spec = LagrangianSpec::formal("L", 1, chart, true);
        let c = caratheodory(&spec).unwrap();
        let rep = lepage_report(c, &spec).unwrap();
        assert!(rep.horizontal_part_equals_lambda);
        assert_eq!(rep.d_theta.contact_component(1), spec.euler_lagrange().unwrap());
        let plain = LagrangianSpec::formal("L", 1, chart, false);
        assert!(matches!(caratheodory(&plain), Err(Error::Domain(_))));
        let one = LagrangianSpec::formal("L", 1, Chart::new(1, 1), false);
        assert_eq!(caratheodory(&one).unwrap(), poincare_cartan(&one).unwrap());
    }

    #[test]
    fn caratheodory2_reduces() {
        let chart = Chart::new(2, 1);
        let spec = LagrangianSpec::formal("L", 1, chart, true);
        let as2 = LagrangianSpec { k: 2, ..spec.clone() };
        assert_eq!(caratheodory2(&as2).unwrap(), caratheodory(&spec).unwrap());
    }

    #[test]
    fn fundamental_single_field_is_pc() {
        let spec = LagrangianSpec::formal("L", 1, Chart::new(3, 1), false);
        assert_eq!(fundamental_first_order(&spec).unwrap(), poincare_cartan(&spec).unwrap());
    }

    #[test]
    fn vainberg_tonti_examples() {
        let chart = Chart::new(2, 1);
        let u = Expr::u(0, mi(&[0, 0]));
        let tw = Form::theta(0, mi(&[0, 0])).wedge(&omega0(2));
        let vt = vainberg_tonti(&tw.scale(&u.scale(&q(2))), &chart).unwrap();
        assert_eq!(vt.l, &u * &u);
        let c = formal_expr(FormalFunction::of_base("c"), 2);
        assert_eq!(vainberg_tonti(&tw.scale(&c), &chart).unwrap().l, &c * &u);
        assert!(vainberg_tonti(&Form::zero(), &chart).unwrap().l.is_zero());
        let f = formal_expr(FormalFunction::new("F", 1), 2);
        assert!(matches!(vainberg_tonti(&tw.scale(&f), &chart), Err(Error::Unsupported(_))));
    }

    #[test]
    fn closure_simple() {
        let chart = Chart::new(2, 1);
        let ux = Expr::u(0, mi(&[1, 0]));
        let spec = LagrangianSpec::new(ux, 1, chart).unwrap();
        let r = closure_check(&spec, Construction::Extend).unwrap();
        assert!(r.is_null && r.d_theta_f.is_zero());
        let u = Expr::u(0, mi(&[0, 0]));
        let spec = LagrangianSpec::new(&u * &u, 0, chart).unwrap();
        let r = closure_check(&spec, Construction::Extend).unwrap();
        assert!(!r.is_null && !r.d_theta_f.is_zero());
        assert_eq!(r.d_theta_f.contact_component(1), r.el_form);
    }

    #[test]
    fn difference_of_equal_forms() {
        let chart = Chart::new(2, 1);
        let spec = LagrangianSpec::formal("L", 1, chart, false);
        let pc = poincare_cartan(&spec).unwrap();
        let d = lepage_difference_decompose(&pc, &pc, &chart).unwrap();
        assert!(d.psi.is_zero() && d.remainder.is_zero());
        assert!(extend(&pc.wedge(&Form::dx(0)), &chart, &RowOperators::default()).is_err());
    }
}

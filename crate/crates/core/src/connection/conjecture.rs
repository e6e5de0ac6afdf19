//! The conjectured covariant homotopy operator
//! `P_∇ ω = Σ_r c_r (C ∘ d_{h∇})^r C(S^{r+1}_∇ ω)`, a defect evaluator and an exact
//! least-structure coefficient fitter.
//!
//! `S^{r+1}_∇` here is the normalized symmetric power, `(r+1)!^{-1}` times the
//! `(r+1)`-fold application of [`s_nabla`](super::s_nabla); all coefficient schemes
//! below are expressed against that normalization.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::vform::{contract_c, d_h_nabla, s_nabla_with, VForm};
use super::{gamma_prolong, Connection};
use crate::error::{Error, Result};
use crate::jetforms::{self, Form};
use crate::symcore::{factorial, Chart, Monomial, Q};
use crate::varops::check_bidegree;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CoefficientScheme {
    /// `(−1)^r (m−q)! / (p (m−q+r+1) r!)`.
    Printed,
    /// `(−1)^r (m−q)! / (p^{r+1} (m−q+r+1)!)`.
    FactorialDenominator,
    /// The weights of the worked `p = q = 1` example: row 1 `[1/m]`, row 2
    /// `[1/(m−1), −1/(m(m−1))]`.
    Appendix,
    /// Explicit values per row `q`.
    Explicit(BTreeMap<usize, Vec<Q>>),
}

impl CoefficientScheme {
    pub fn coefficient(&self, p: usize, q: usize, m: usize, r: usize) -> Option<Q> {
        let sign = if r.is_multiple_of(2) { Q::one() } else { -Q::one() };
        match self {
            CoefficientScheme::Printed => Some(
                sign * Q::new(
                    BigInt::from(factorial(m - q)),
                    BigInt::from(p * (m - q + r + 1)) * BigInt::from(factorial(r)),
                ),
            ),
            CoefficientScheme::FactorialDenominator => Some(
                sign * Q::new(
                    BigInt::from(factorial(m - q)),
                    BigInt::from(p).pow(r as u32 + 1) * BigInt::from(factorial(m - q + r + 1)),
                ),
            ),
            CoefficientScheme::Appendix => {
                let mm = m as i64;
                match (p, q, r) {
                    (1, 1, 0) => Some(Q::new(1.into(), mm.into())),
                    (1, 2, 0) if m > 1 => Some(Q::new(1.into(), (mm - 1).into())),
                    (1, 2, 1) if m > 1 => Some(Q::new((-1).into(), (mm * (mm - 1)).into())),
                    _ => None,
                }
            }
            CoefficientScheme::Explicit(rows) => rows.get(&q).and_then(|v| v.get(r)).cloned(),
        }
    }
}

/// `T_r ω = (C ∘ d_{h∇})^r C(S^{r+1}_∇ ω)` for `r = 0, 1, …` until `S^{r+1}_∇ ω` vanishes
/// or `max_r` is reached. The flag reports whether nonzero terms were cut off.
fn series_terms(
    c: &Connection,
    form: &Form,
    chart: &Chart,
    max_r: Option<usize>,
) -> Result<(Vec<Form>, bool)> {
    let level = form.terms().map(|(w, _)| w.theta_weight()).max().unwrap_or(0).max(1);
    let gp = gamma_prolong(c, level);
    let mut power = VForm::from_form(form.clone());
    let mut out = Vec::new();
    let mut r = 0;
    loop {
        power = s_nabla_with(&gp, None, &power)?;
        if power.is_zero() {
            return Ok((out, false));
        }
        if max_r.is_some_and(|mr| r > mr) {
            return Ok((out, true));
        }
        let mut t = contract_c(&power)?;
        for _ in 0..r {
            t = contract_c(&d_h_nabla(c, &t, chart)?)?;
        }
        let norm = Q::new(1.into(), BigInt::from(factorial(r + 1)));
        out.push(t.to_form().scale_q(&norm));
        r += 1;
    }
}

/// `P_∇ ω` for `ω` of bidegree `(p, q)`.
pub fn p_nabla_conjecture(
    c: &Connection,
    form: &Form,
    p: usize,
    q: usize,
    scheme: &CoefficientScheme,
    chart: &Chart,
) -> Result<Form> {
    check_bidegree(form, p, q, chart.m)?;
    let (terms, _) = series_terms(c, form, chart, None)?;
    let mut out = Form::zero();
    for (r, t) in terms.iter().enumerate() {
        if t.is_zero() {
            continue;
        }
        let coef = scheme.coefficient(p, q, chart.m, r).ok_or_else(|| {
            Error::Unsupported(format!("coefficient scheme has no value for q = {q}, r = {r}"))
        })?;
        out += &t.scale_q(&coef);
    }
    Ok(out)
}

/// `d_h P_∇ ω + P_∇ d_h ω − ω`.
pub fn homotopy_defect(
    c: &Connection,
    form: &Form,
    p: usize,
    q: usize,
    scheme: &CoefficientScheme,
    chart: &Chart,
) -> Result<Form> {
    let mut out = jetforms::d_h(&p_nabla_conjecture(c, form, p, q, scheme, chart)?, chart)?;
    let dh = jetforms::d_h(form, chart)?;
    if !dh.is_zero() {
        out += &p_nabla_conjecture(c, &dh, p, q + 1, scheme, chart)?;
    }
    Ok(&out - form)
}

/// Coefficient `c_r` of row `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FitUnknown {
    pub q: usize,
    pub r: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FitOutcome {
    /// Values of every unknown; `None` for unknowns that never contribute.
    Unique(Vec<(FitUnknown, Option<Q>)>),
    Inconsistent,
    NonUnique { rank: usize, unknowns: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FitReport {
    pub outcome: FitOutcome,
    /// Set when a unique solution was found and held-out forms were supplied.
    pub cross_validated: Option<bool>,
    /// Some generator produced a nonzero term beyond `r = R`.
    pub truncated: bool,
}

impl FitReport {
    /// The fitted values as an explicit scheme (unused unknowns omitted).
    pub fn scheme(&self) -> Option<CoefficientScheme> {
        let FitOutcome::Unique(vals) = &self.outcome else { return None };
        let mut rows: BTreeMap<usize, Vec<Q>> = BTreeMap::new();
        for (u, v) in vals {
            let row = rows.entry(u.q).or_default();
            if row.len() <= u.r {
                row.resize(u.r + 1, Q::zero());
            }
            if let Some(v) = v {
                row[u.r] = v.clone();
            }
        }
        Some(CoefficientScheme::Explicit(rows))
    }

    pub fn value(&self, q: usize, r: usize) -> Option<Q> {
        let FitOutcome::Unique(vals) = &self.outcome else { return None };
        vals.iter().find(|(u, _)| u.q == q && u.r == r).and_then(|(_, v)| v.clone())
    }
}

fn flatten(form: &Form) -> BTreeMap<(crate::jetforms::Word, Monomial), Q> {
    let mut out = BTreeMap::new();
    for (w, e) in form.terms() {
        for (mono, c) in e.terms() {
            out.insert((w.clone(), mono.clone()), c.clone());
        }
    }
    out
}

/// Solves for `c_0..c_R` of rows `q` and `q + 1` so that the homotopy defect vanishes on
/// every generator, by exact Gaussian elimination.
pub fn fit_coefficients(
    c: &Connection,
    p: usize,
    q: usize,
    chart: &Chart,
    max_r: usize,
    generators: &[Form],
    held_out: &[Form],
) -> Result<FitReport> {
    let m = chart.m;
    let rows_q: Vec<usize> = if q < m { vec![q, q + 1] } else { vec![q] };
    let unknowns: Vec<FitUnknown> = rows_q
        .iter()
        .flat_map(|&q| (0..=max_r).map(move |r| FitUnknown { q, r }))
        .collect();
    let index: BTreeMap<FitUnknown, usize> = unknowns.iter().enumerate().map(|(i, u)| (*u, i)).collect();

    // equations: one per (generator, word, monomial)
    let mut equations: BTreeMap<(usize, crate::jetforms::Word, Monomial), (Vec<Q>, Q)> = BTreeMap::new();
    let mut truncated = false;
    let nu = unknowns.len();
    for (g, form) in generators.iter().enumerate() {
        check_bidegree(form, p, q, m)?;
        let mut columns: Vec<(usize, Form)> = Vec::new();
        let (terms, cut) = series_terms(c, form, chart, Some(max_r))?;
        truncated |= cut;
        for (r, t) in terms.into_iter().enumerate() {
            columns.push((index[&FitUnknown { q, r }], jetforms::d_h(&t, chart)?));
        }
        let dh = jetforms::d_h(form, chart)?;
        if q < m && !dh.is_zero() {
            let (terms, cut) = series_terms(c, &dh, chart, Some(max_r))?;
            truncated |= cut;
            for (r, t) in terms.into_iter().enumerate() {
                columns.push((index[&FitUnknown { q: q + 1, r }], t));
            }
        }
        for (col, f) in columns {
            for ((w, mono), v) in flatten(&f) {
                let e = equations
                    .entry((g, w, mono))
                    .or_insert_with(|| (vec![Q::zero(); nu], Q::zero()));
                e.0[col] += v;
            }
        }
        for ((w, mono), v) in flatten(form) {
            let e = equations
                .entry((g, w, mono))
                .or_insert_with(|| (vec![Q::zero(); nu], Q::zero()));
            e.1 += v;
        }
    }

    let active: Vec<usize> = (0..nu)
        .filter(|&j| equations.values().any(|(row, _)| !row[j].is_zero()))
        .collect();
    let mut matrix: Vec<Vec<Q>> = equations
        .into_values()
        .map(|(row, rhs)| {
            let mut r: Vec<Q> = active.iter().map(|&j| row[j].clone()).collect();
            r.push(rhs);
            r
        })
        .collect();
    let outcome = match solve(&mut matrix, active.len()) {
        Solve::Inconsistent => FitOutcome::Inconsistent,
        Solve::NonUnique(rank) => FitOutcome::NonUnique { rank, unknowns: active.len() },
        Solve::Unique(vals) => {
            let mut out: Vec<(FitUnknown, Option<Q>)> = unknowns.iter().map(|u| (*u, None)).collect();
            for (k, &j) in active.iter().enumerate() {
                out[j].1 = Some(vals[k].clone());
            }
            FitOutcome::Unique(out)
        }
    };
    let mut report = FitReport { outcome, cross_validated: None, truncated };
    if !held_out.is_empty() {
        if let Some(scheme) = report.scheme() {
            let mut ok = true;
            for f in held_out {
                match homotopy_defect(c, f, p, q, &scheme, chart) {
                    Ok(d) => ok &= d.is_zero(),
                    Err(_) => ok = false,
                }
            }
            report.cross_validated = Some(ok);
        }
    }
    Ok(report)
}

enum Solve {
    Unique(Vec<Q>),
    Inconsistent,
    NonUnique(usize),
}

/// Row reduction of an augmented matrix with `n` unknowns.
fn solve(a: &mut [Vec<Q>], n: usize) -> Solve {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(piv) = (row..a.len()).find(|&i| !a[i][col].is_zero()) else { continue };
        a.swap(row, piv);
        let inv = a[row][col].recip();
        for x in a[row].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = a[row].clone();
        for (i, r) in a.iter_mut().enumerate() {
            if i != row && !r[col].is_zero() {
                let f = r[col].clone();
                for (x, y) in r.iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    if a[row..].iter().any(|r| !r[n].is_zero()) {
        return Solve::Inconsistent;
    }
    if pivots.len() < n {
        return Solve::NonUnique(pivots.len());
    }
    Solve::Unique((0..n).map(|i| a[i][n].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetforms::omega0;
    use crate::symcore::{qr, Atom, Expr, FormalFunction, MultiIndex};
    use crate::varops::p_tilde;

    fn mi(e: &[u8]) -> MultiIndex {
        MultiIndex::from_slice(e)
    }

    fn formal(name: &str, order: usize, m: usize) -> Expr {
        Expr::atom(Atom::formal(FormalFunction::new(name, order), m))
    }

    #[test]
    fn scheme_values() {
        let s = CoefficientScheme::Printed;
        assert_eq!(s.coefficient(1, 2, 2, 0), Some(qr(1, 1)));
        assert_eq!(s.coefficient(1, 2, 2, 1), Some(qr(-1, 2)));
        assert_eq!(s.coefficient(1, 1, 2, 0), Some(qr(1, 2)));
        let f = CoefficientScheme::FactorialDenominator;
        for m in 2..6 {
            for (q, r) in [(1, 0), (2, 0), (2, 1)] {
                assert_eq!(f.coefficient(1, q, m, r), CoefficientScheme::Appendix.coefficient(1, q, m, r));
            }
        }
    }

    #[test]
    fn theta_only_gives_zero() {
        let chart = Chart::new(2, 1);
        let w = Form::theta(0, mi(&[0, 0])).wedge(&omega0(2));
        let got = p_nabla_conjecture(&Connection::symbolic(2), &w, 1, 2, &CoefficientScheme::Printed, &chart).unwrap();
        assert!(got.is_zero());
    }

    #[test]
    fn flat_first_order_matches_p_tilde() {
        let chart = Chart::new(2, 1);
        let f = formal("f", 1, 2);
        let w = Form::theta(0, mi(&[1, 0])).wedge(&Form::dx(1)).scale(&f);
        let flat = Connection::flat(2);
        let got = p_nabla_conjecture(&flat, &w, 1, 1, &CoefficientScheme::Printed, &chart).unwrap();
        assert_eq!(got, p_tilde(&w, 1, 1, &chart).unwrap());
    }

    #[test]
    fn solver_cases() {
        let mut a = vec![vec![qr(1, 1), qr(1, 1), qr(2, 1)], vec![qr(1, 1), qr(-1, 1), qr(0, 1)]];
        assert!(matches!(solve(&mut a, 2), Solve::Unique(v) if v == vec![qr(1, 1), qr(1, 1)]));
        let mut b = vec![vec![qr(1, 1), qr(1, 1)], vec![qr(2, 1), qr(3, 1)]];
        assert!(matches!(solve(&mut b, 1), Solve::Inconsistent));
        let mut c = vec![vec![qr(1, 1), qr(1, 1), qr(1, 1)]];
        assert!(matches!(solve(&mut c, 2), Solve::NonUnique(1)));
    }

    fn generic(m: usize, tag: &str) -> Form {
        let mut w = Form::zero();
        for i in 0..m {
            for j in 0..m {
                let f = formal(&format!("{tag}{i}{j}"), 2, m);
                w += &Form::dx(j).wedge(&Form::theta(0, MultiIndex::unit(m, i))).scale(&f);
            }
        }
        w
    }

    #[test]
    fn fit_reproduces_printed_values_at_m2() {
        let chart = Chart::new(2, 1);
        let c = Connection::symbolic(2);
        let rep = fit_coefficients(&c, 1, 1, &chart, 1, &[generic(2, "f")], &[generic(2, "g")]).unwrap();
        assert_eq!(rep.value(2, 0), Some(qr(1, 1)));
        assert_eq!(rep.value(2, 1), Some(qr(-1, 2)));
        assert_eq!(rep.value(1, 0), Some(qr(1, 2)));
        assert_eq!(rep.cross_validated, Some(true));
        let short = fit_coefficients(&c, 1, 1, &chart, 0, &[generic(2, "f")], &[]).unwrap();
        assert_eq!(short.outcome, FitOutcome::Inconsistent);
    }
}

//! Recomputation of the worked `p = q = 1` example: `ω = f^i_m dx^m ∧ θ_i` with formal
//! second-order coefficients and a symbolic connection, one dependent variable.
//!
//! Every intermediate is computed twice: once through the operators of this module and
//! once from its closed-form index expression, assembled term by term below.

use std::collections::BTreeMap;

use super::vform::{contract_c, d_h_nabla, s_nabla, Slots, VForm};
use super::Connection;
use crate::error::Result;
use crate::jetforms::{self, Form};
use crate::symcore::{Atom, Chart, Expr, FormalFunction, MultiIndex, Q};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppendixLine {
    pub name: &'static str,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AppendixReport {
    pub m: usize,
    pub lines: Vec<AppendixLine>,
    /// `ω = (1/(m−1) CS − 1/(2m(m−1)) C d C S²) d_h ω + d_h((1/m) CS ω)`.
    pub final_identity: bool,
    /// The same computation with the flat connection against the oracles with `Γ ↦ 0`.
    pub flat_specialization: bool,
}

impl AppendixReport {
    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass) && self.final_identity && self.flat_specialization
    }
}

struct Setup {
    m: usize,
    chart: Chart,
    f: Vec<Vec<Expr>>,
    conn: Connection,
}

impl Setup {
    fn f(&self, i: usize, j: usize) -> &Expr {
        &self.f[i][j]
    }

    fn d(&self, e: &Expr, l: usize) -> Expr {
        e.total_derivative(l, &self.chart).expect("formal coefficients differentiate")
    }

    /// `Γ^k_{ij}`.
    fn g(&self, k: usize, i: usize, j: usize) -> Expr {
        self.conn.coefficient(k, &MultiIndex::unit(self.m, i).increment(j))
    }

    fn th(&self, dirs: &[usize]) -> Form {
        Form::theta(0, MultiIndex::from_directions(self.m, dirs))
    }

    fn dx(&self, i: usize) -> Form {
        Form::dx(i)
    }

    fn slot(&self, dirs: &[usize]) -> Slots {
        Slots::from_directions(dirs)
    }

    fn range(&self) -> std::ops::Range<usize> {
        0..self.m
    }
}

fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

fn oracle_lines(s: &Setup) -> Vec<(&'static str, VForm)> {
    let m = s.m;
    let mq = q(m as i64);
    let r = || s.range();
    let th0 = s.th(&[]);
    let mut omega = Form::zero();
    for i in r() {
        for mm in r() {
            omega += &s.dx(mm).wedge(&s.th(&[i])).scale(s.f(i, mm));
        }
    }

    let mut dh = Form::zero();
    for l in r() {
        for i in r() {
            for mm in r() {
                let base = s.dx(l).wedge(&s.dx(mm));
                dh += &base.wedge(&s.th(&[i])).scale(&s.d(s.f(i, mm), l));
                dh += &base.wedge(&s.th(&[i, l])).scale(s.f(i, mm));
            }
        }
    }

    let mut s_dh = VForm::zero();
    for l in r() {
        for i in r() {
            for mm in r() {
                let base = s.dx(l).wedge(&s.dx(mm));
                s_dh.add(s.slot(&[i]), &base.wedge(&th0).scale(&s.d(s.f(i, mm), l)));
                for k in r() {
                    s_dh.add(s.slot(&[k]), &base.wedge(&th0).scale(&(s.f(i, mm) * &s.g(k, i, l))));
                }
            }
        }
    }
    for h in r() {
        for k in r() {
            for mm in r() {
                s_dh.add(s.slot(&[k]), &s.dx(k).wedge(&s.dx(mm)).wedge(&s.th(&[h])).scale(s.f(h, mm)));
                s_dh.add(s.slot(&[k]), &s.dx(h).wedge(&s.dx(mm)).wedge(&s.th(&[h])).scale(s.f(k, mm)));
            }
        }
    }

    let mut trace_f = Expr::zero();
    for i in r() {
        trace_f += s.f(i, i);
    }
    // pieces shared by several lines
    let mut div = Form::zero(); // (d_i f^i_j) dx^j ∧ θ
    let mut grad_tr = Form::zero(); // (d_j f^i_i) dx^j ∧ θ
    let mut gam_a = Form::zero(); // f^i_j Γ^k_{ik} dx^j ∧ θ
    let mut gam_b = Form::zero(); // f^i_k Γ^k_{ij} dx^j ∧ θ
    let mut tr_th = Form::zero(); // f^i_i dx^j ∧ θ_j
    for j in r() {
        let dxt = s.dx(j).wedge(&th0);
        tr_th += &s.dx(j).wedge(&s.th(&[j])).scale(&trace_f);
        grad_tr += &dxt.scale(&s.d(&trace_f, j));
        for i in r() {
            div += &dxt.scale(&s.d(s.f(i, j), i));
            for k in r() {
                gam_a += &dxt.scale(&(s.f(i, j) * &s.g(k, i, k)));
                gam_b += &dxt.scale(&(s.f(i, k) * &s.g(k, i, j)));
            }
        }
    }

    let c_s_dh = &(&(&(&(&div - &grad_tr) + &gam_a) - &gam_b) + &omega.scale_q(&mq)) - &tr_th;

    let mut s2 = VForm::zero();
    for i in r() {
        for l in r() {
            for mm in r() {
                s2.add(s.slot(&[i, l]), &s.dx(l).wedge(&s.dx(mm)).wedge(&th0).scale(&s.f(i, mm).scale(&q(2))));
            }
        }
    }

    let mut c_s2 = VForm::zero();
    for i in r() {
        for j in r() {
            let t = s.dx(j).wedge(&th0);
            c_s2.add(s.slot(&[i]), &t.scale(&s.f(i, j).scale(&q(2 * m as i64))));
            c_s2.add(s.slot(&[j]), &t.scale(&s.f(i, i).scale(&q(-2))));
        }
    }

    let mut half_d = VForm::zero();
    for i in r() {
        for j in r() {
            let fj = s.dx(j).wedge(&th0).scale(s.f(i, j));
            let fi = s.dx(j).wedge(&th0).scale(s.f(i, i));
            for k in r() {
                for h in r() {
                    half_d.add(s.slot(&[k]), &s.dx(h).wedge(&fj).scale(&s.g(k, i, h).scale(&mq)));
                    half_d.add(s.slot(&[k]), &-s.dx(h).wedge(&fi).scale(&s.g(k, j, h)));
                }
                let kj = s.dx(k).wedge(&s.dx(j));
                half_d.add(s.slot(&[i]), &kj.wedge(&th0).scale(&s.d(s.f(i, j), k).scale(&mq)));
                half_d.add(s.slot(&[i]), &kj.wedge(&s.th(&[k])).scale(&s.f(i, j).scale(&mq)));
                half_d.add(s.slot(&[j]), &-kj.wedge(&th0).scale(&s.d(s.f(i, i), k)));
                half_d.add(s.slot(&[j]), &-kj.wedge(&s.th(&[k])).scale(s.f(i, i)));
            }
        }
    }

    let half_cd = &(&(&(&(&gam_a.scale_q(&mq) - &gam_b.scale_q(&mq)) + &div.scale_q(&mq))
        + &omega.scale_q(&mq))
        - &grad_tr)
        - &tr_th;

    let mut s_omega = VForm::zero();
    for i in r() {
        for mm in r() {
            s_omega.add(s.slot(&[i]), &s.dx(mm).wedge(&th0).scale(s.f(i, mm)));
        }
    }
    let c_s_omega = th0.scale(&trace_f);
    let dh_c_s_omega = &grad_tr + &tr_th;
    let sum_line = &(&(&gam_a.scale_q(&mq) - &gam_b.scale_q(&mq)) + &div.scale_q(&mq)) + &omega.scale_q(&mq);

    vec![
        ("omega", VForm::from_form(omega)),
        ("d_h omega", VForm::from_form(dh)),
        ("S d_h omega", s_dh),
        ("C S d_h omega", VForm::from_form(c_s_dh)),
        ("S^2 d_h omega", s2),
        ("C S^2 d_h omega", c_s2),
        ("1/2 d_hnabla C S^2 d_h omega", half_d),
        ("1/2 C d_hnabla C S^2 d_h omega", VForm::from_form(half_cd)),
        ("S omega", s_omega),
        ("C S omega", VForm::from_form(c_s_omega)),
        ("d_h C S omega", VForm::from_form(dh_c_s_omega)),
        ("1/2 C d C S^2 d_h omega + d_h C S omega", VForm::from_form(sum_line)),
    ]
}

struct Computed {
    lines: Vec<VForm>,
    relation: bool,
    final_identity: bool,
}

fn computed_lines(s: &Setup) -> Result<Computed> {
    let m = s.m as i64;
    let c = &s.conn;
    let chart = &s.chart;
    let half = Q::new(1.into(), 2.into());
    let mut omega = Form::zero();
    for i in s.range() {
        for mm in s.range() {
            omega += &s.dx(mm).wedge(&s.th(&[i])).scale(s.f(i, mm));
        }
    }
    let dh = jetforms::d_h(&omega, chart)?;
    let dhv = VForm::from_form(dh.clone());
    let s_dh = s_nabla(c, None, &dhv)?;
    let c_s_dh = contract_c(&s_dh)?;
    let s2 = s_nabla(c, None, &s_dh)?;
    let c_s2 = contract_c(&s2)?;
    let half_d = d_h_nabla(c, &c_s2, chart)?.scale_q(&half);
    let half_cd = contract_c(&half_d)?;
    let s_omega = s_nabla(c, None, &VForm::from_form(omega.clone()))?;
    let c_s_omega = contract_c(&s_omega)?;
    let dh_c_s_omega = VForm::from_form(jetforms::d_h(&c_s_omega.to_form(), chart)?);
    let mut sum_line = half_cd.clone();
    sum_line += &dh_c_s_omega;

    // ½ C d C S² d_h ω = m CS d_h ω − m(m−1) ω + (m−1) d_h CS ω
    let rhs = &(&c_s_dh.to_form().scale_q(&q(m)) - &omega.scale_q(&q(m * (m - 1))))
        + &dh_c_s_omega.to_form().scale_q(&q(m - 1));
    let relation = half_cd.to_form() == rhs;

    let p_dh = &c_s_dh.to_form().scale_q(&Q::new(1.into(), (m - 1).into()))
        - &half_cd.to_form().scale_q(&Q::new(1.into(), (m * (m - 1)).into()));
    let rebuilt = &p_dh + &dh_c_s_omega.to_form().scale_q(&Q::new(1.into(), m.into()));
    let final_identity = rebuilt == omega;

    Ok(Computed {
        lines: vec![
            VForm::from_form(omega),
            dhv,
            s_dh,
            c_s_dh,
            s2,
            c_s2,
            half_d,
            half_cd,
            s_omega,
            c_s_omega,
            dh_c_s_omega,
            sum_line,
        ],
        relation,
        final_identity,
    })
}

fn setup(m: usize, conn: Connection) -> Setup {
    let chart = Chart::new(m, 1);
    let f = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| Expr::atom(Atom::formal(FormalFunction::new(format!("f{}_{}", i + 1, j + 1), 2), m)))
                .collect()
        })
        .collect();
    Setup { m, chart, f, conn }
}

fn flatten_gamma(v: &VForm, m: usize) -> Result<VForm> {
    let mut bind = BTreeMap::new();
    for i in 0..m {
        for k in MultiIndex::all_of_length(m, 2) {
            bind.insert(Atom::gamma(i, k), Expr::zero());
        }
    }
    v.map_forms(|f| f.try_map_coefficients(|e| e.substitute(&bind)))
}

/// Recomputes every intermediate of the worked example for dimension `m ≥ 2`.
pub fn verify_appendix_a(m: usize) -> Result<AppendixReport> {
    if m < 2 {
        return Err(crate::error::Error::domain("the worked example needs m >= 2"));
    }
    let sym = setup(m, Connection::symbolic(m));
    let oracle = oracle_lines(&sym);
    let got = computed_lines(&sym)?;
    let mut lines: Vec<AppendixLine> = oracle
        .iter()
        .zip(&got.lines)
        .map(|((name, o), g)| AppendixLine { name, pass: o == g })
        .collect();
    lines.push(AppendixLine {
        name: "1/2 C d C S^2 d_h omega = m CS d_h omega - m(m-1) omega + (m-1) d_h CS omega",
        pass: got.relation,
    });

    let flat = setup(m, Connection::flat(m));
    let flat_got = computed_lines(&flat)?;
    let mut flat_ok = flat_got.final_identity && flat_got.relation;
    for ((_, o), g) in oracle.iter().zip(&flat_got.lines) {
        flat_ok &= flatten_gamma(o, m)? == *g;
    }

    Ok(AppendixReport { m, lines, final_identity: got.final_identity, flat_specialization: flat_ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_dimensional_example_passes_every_line() {
        let r = verify_appendix_a(2).unwrap();
        for l in &r.lines {
            assert!(l.pass, "{}", l.name);
        }
        assert!(r.final_identity);
        assert!(r.flat_specialization);
    }

    #[test]
    fn rejects_m_one() {
        assert!(verify_appendix_a(1).is_err());
    }
}

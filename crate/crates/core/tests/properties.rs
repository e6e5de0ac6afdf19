//! Property tests for the algebraic laws each module promises.

mod common;

use common::*;
use lepage_kit::cli::parse::{parse_expr, parse_form, Scope};
use lepage_kit::cli::render::{parse_structured, structured_form, text_expr, text_form};
use lepage_kit::connection::{d_h_nabla, gamma_prolong, s_nabla, Connection, Slots, VForm};
use lepage_kit::jetforms::{d_full, d_h, d_v, interior_jet, interior_total, Form};
use lepage_kit::lepage::{
    caratheodory, caratheodory2, extend, fundamental_first_order, lepage_report, poincare_cartan, principal_lepage,
    vainberg_tonti, LagrangianSpec, RowOperators,
};
use lepage_kit::symcore::{leibniz_d, qr, Atom, Chart, Expr, FormalFunction, MultiIndex};
use lepage_kit::varops::{
    euler_lagrange, homotopy, is_source_form, p_tilde, s_eta, s_i, s_tilde, source_residue, HomotopyKind,
    LoweringEndo,
};
use proptest::prelude::*;
use rand::Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn expr_normal_form(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = random_chart(&mut r, 3, 2);
        let a = random_expr(&mut r, &chart, 2, 3);
        let b = random_expr(&mut r, &chart, 2, 3);
        let c = random_expr(&mut r, &chart, 2, 2);
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        // rebuilding from the term list is a no-op
        let mut rebuilt = Expr::zero();
        for (mono, q) in a.terms() {
            rebuilt.add_term(mono.clone(), q.clone());
        }
        prop_assert_eq!(rebuilt, a);
    }

    #[test]
    fn derivation_laws(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = random_chart(&mut r, 3, 2);
        let f = random_coefficient(&mut r, &chart, 2);
        let g = random_coefficient(&mut r, &chart, 2);
        let i = r.gen_range(0..chart.m);
        let by = Atom::jet(r.gen_range(0..chart.n), random_multi_index(&mut r, chart.m, 2));
        let c = qr(r.gen_range(-3..=3), 2);
        prop_assert_eq!((&f.scale(&c) + &g).partial(&by), &f.partial(&by).scale(&c) + &g.partial(&by));
        prop_assert_eq!((&f * &g).partial(&by), &(&f.partial(&by) * &g) + &(&f * &g.partial(&by)));
        let d = |e: &Expr| e.total_derivative(i, &chart).unwrap();
        prop_assert_eq!(d(&(&f.scale(&c) + &g)), &d(&f).scale(&c) + &d(&g));
        prop_assert_eq!(d(&(&f * &g)), &(&d(&f) * &g) + &(&f * &d(&g)));
    }

    #[test]
    fn total_derivatives_commute(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = random_chart(&mut r, 3, 2);
        let f = random_coefficient(&mut r, &chart, 3);
        let (i, j) = (r.gen_range(0..chart.m), r.gen_range(0..chart.m));
        let ij = f.total_derivative(i, &chart).unwrap().total_derivative(j, &chart).unwrap();
        let ji = f.total_derivative(j, &chart).unwrap().total_derivative(i, &chart).unwrap();
        prop_assert_eq!(ij, ji);
    }

    #[test]
    fn leibniz_matches_iterated_total(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = random_chart(&mut r, 3, 2);
        let f = random_expr(&mut r, &chart, 2, 2);
        let g = random_expr(&mut r, &chart, 2, 2);
        let idx = random_multi_index(&mut r, chart.m, 3);
        prop_assert_eq!(leibniz_d(&f, &g, &idx, &chart).unwrap(), (&f * &g).iterated_total(&idx, &chart).unwrap());
    }

    #[test]
    fn bicomplex_and_bidegrees(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = random_chart(&mut r, 3, 2);
        let (p, q) = (r.gen_range(0..=2), r.gen_range(0..=chart.m));
        let w = random_form(&mut r, &chart, 2, p, q, 2);
        let dh = d_h(&w, &chart).unwrap();
        let dv = d_v(&w, &chart).unwrap();
        prop_assert!(d_h(&dh, &chart).unwrap().is_zero());
        prop_assert!(d_v(&dv, &chart).unwrap().is_zero());
        prop_assert!((&d_h(&dv, &chart).unwrap() + &d_v(&dh, &chart).unwrap()).is_zero());
        prop_assert!(d_full(&d_full(&w, &chart).unwrap(), &chart).unwrap().is_zero());
        prop_assert_eq!(d_full(&w, &chart).unwrap(), &dh + &dv);
        for (bd, _) in dh.contact_decompose() {
            prop_assert_eq!(bd, (p, q + 1));
        }
        for (bd, _) in dv.contact_decompose() {
            prop_assert_eq!(bd, (p + 1, q));
        }
        // d_h acts componentwise on a mixed form
        let other = random_form(&mut r, &chart, 2, p + 1, q.saturating_sub(1), 1);
        let mixed = &w + &other;
        let parts = mixed.contact_decompose();
        let mut summed = Form::zero();
        for part in parts.values() {
            summed += &d_h(part, &chart).unwrap();
        }
        prop_assert_eq!(d_h(&mixed, &chart).unwrap(), summed);
    }

    #[test]
    fn wedge_laws(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = random_chart(&mut r, 3, 2);
        let pick = |r: &mut TestRng| {
            let (p, q) = (r.gen_range(0..=1), r.gen_range(0..=1.min(chart.m)));
            random_form(r, &chart, 2, p, q, 2)
        };
        let (a, b, c) = (pick(&mut r), pick(&mut r), pick(&mut r));
        prop_assert_eq!(a.wedge(&b).wedge(&c), a.wedge(&b.wedge(&c)));
        let (da, db) = (a.degree().unwrap_or(0), b.degree().unwrap_or(0));
        let swapped = b.wedge(&a);
        let sign = if da * db % 2 == 1 { -swapped } else { swapped };
        prop_assert_eq!(a.wedge(&b), sign);
    }

    #[test]
    fn interiors_are_antiderivations(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = random_chart(&mut r, 3, 2);
        let (pa, qb) = (r.gen_range(0..=1), r.gen_range(0..=1.min(chart.m - 1)));
        let a = random_form(&mut r, &chart, 1, pa, 1, 2);
        let b = random_form(&mut r, &chart, 1, 1, qb, 2);
        let sign = if a.degree().unwrap_or(0) % 2 == 1 { -1 } else { 1 };
        let i = r.gen_range(0..chart.m);
        let it = |f: &Form| interior_total(i, f);
        prop_assert_eq!(it(&a.wedge(&b)), &it(&a).wedge(&b) + &a.wedge(&it(&b)).scale_q(&qr(sign, 1)));
        let alpha = r.gen_range(0..chart.n);
        let idx = random_multi_index(&mut r, chart.m, 1);
        let ij = |f: &Form| interior_jet(alpha, &idx, f);
        prop_assert_eq!(ij(&a.wedge(&b)), &ij(&a).wedge(&b) + &a.wedge(&ij(&b)).scale_q(&qr(sign, 1)));
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn homotopy_identity_below_top_row(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = r.gen_range(2..=3);
        let chart = Chart::new(m, r.gen_range(1..=2));
        let (p, q) = (r.gen_range(1..=2), r.gen_range(1..m));
        let w = random_form(&mut r, &chart, 2, p, q, 2);
        for kind in [HomotopyKind::Tilde, HomotopyKind::Hat] {
            let mut lhs = d_h(&homotopy(kind, &w, p, q, &chart).unwrap(), &chart).unwrap();
            let dh = d_h(&w, &chart).unwrap();
            if !dh.is_zero() {
                lhs += &homotopy(kind, &dh, p, q + 1, &chart).unwrap();
            }
            prop_assert_eq!(lhs, w.clone());
        }
    }

    #[test]
    fn lowering_operators(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = random_chart(&mut r, 3, 2);
        let m = chart.m;
        let q = r.gen_range(0..=m);
        let w = random_form(&mut r, &chart, 3, 1, q, 2);
        let dirs: Vec<usize> = (0..r.gen_range(1..=3)).map(|_| r.gen_range(0..m)).collect();
        let j = MultiIndex::from_directions(m, &dirs);
        // any factorization of J gives the same S̃^J
        let mut stepwise = w.clone();
        for &d in dirs.iter().rev() {
            stepwise = s_tilde(&MultiIndex::unit(m, d), &stepwise);
        }
        prop_assert_eq!(s_tilde(&j, &w), stepwise);
        // constant η reproduces η_i S^i
        let coeffs: Vec<i64> = (0..m).map(|_| r.gen_range(-2..=2)).collect();
        let eta = s_eta(coeffs.iter().map(|&c| Expr::int(c)).collect(), 3).unwrap();
        let mut combo = Form::zero();
        for (i, &c) in coeffs.iter().enumerate() {
            combo += &s_i(i, m).apply(&w).unwrap().scale_q(&qr(c, 1));
        }
        prop_assert_eq!(eta.apply(&w).unwrap(), combo);
        let composed = LoweringEndo::Compose(dirs.iter().map(|&d| s_i(d, m)).collect());
        prop_assert_eq!(composed.apply(&w).unwrap(), s_tilde(&j, &w));
    }

    #[test]
    fn source_forms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = random_chart(&mut r, 3, 2);
        let k = r.gen_range(0..=2);
        let l = random_coefficient(&mut r, &chart, k);
        let el = euler_lagrange(&l, k, &chart).unwrap();
        prop_assert!(is_source_form(&el, chart.m));
        let spec = LagrangianSpec::new(l, k, chart).unwrap();
        let dv = d_v(&spec.lambda(), &chart).unwrap();
        prop_assert_eq!(source_residue(&dv, &chart).unwrap(), el);
        let w = random_form(&mut r, &chart, 2, 1, chart.m, 2);
        let rest = &w - &d_h(&p_tilde(&w, 1, chart.m, &chart).unwrap(), &chart).unwrap();
        prop_assert_eq!(source_residue(&w, &chart).unwrap(), rest);
    }

    #[test]
    fn lepage_property_and_independence(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = Chart::new(r.gen_range(1..=3), r.gen_range(1..=2));
        let k = r.gen_range(1..=2);
        let l = random_expr(&mut r, &chart, k, 3);
        let spec = LagrangianSpec::new(l, k, chart).unwrap();
        let el = spec.euler_lagrange().unwrap();
        let mut thetas = vec![principal_lepage(&spec).unwrap()];
        thetas.push(extend(&thetas[0], &chart, &RowOperators::default()).unwrap());
        thetas.push(extend(&thetas[0], &chart, &RowOperators::uniform(HomotopyKind::Hat, chart.m)).unwrap());
        if spec.l.jet_order().unwrap_or(0) <= 1 {
            thetas.push(poincare_cartan(&spec).unwrap());
            if spec.k == 1 {
                thetas.push(fundamental_first_order(&spec).unwrap());
            }
        }
        for theta in thetas {
            let rep = lepage_report(theta, &spec).unwrap();
            prop_assert!(rep.is_lepage_equivalent());
            prop_assert_eq!(rep.d_theta.contact_component(1), el.clone());
        }
    }

    #[test]
    fn vainberg_tonti_consistency(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = Chart::new(r.gen_range(1..=2), r.gen_range(1..=2));
        let k = r.gen_range(0..=2);
        let l = random_expr(&mut r, &chart, k, 3);
        let el = euler_lagrange(&l, k, &chart).unwrap();
        prop_assume!(!el.is_zero());
        let vt = vainberg_tonti(&el, &chart).unwrap();
        prop_assert_eq!(vt.euler_lagrange().unwrap(), el);
    }

    #[test]
    fn flat_connection_is_local(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = random_chart(&mut r, 3, 2);
        let m = chart.m;
        let q = r.gen_range(0..=m);
        let w = random_form(&mut r, &chart, 3, 1, q, 2);
        let flat = Connection::flat(m);
        let got = s_nabla(&flat, None, &VForm::from_form(w.clone())).unwrap();
        for h in 0..m {
            prop_assert_eq!(got.part(&Slots::from_directions(&[h])), s_i(h, m).apply(&w).unwrap());
        }
        let gp = gamma_prolong(&flat, 4);
        prop_assert!(gp.entries().all(|(_, e)| e.is_zero()));
        // zero slots: d_h∇ is d_h
        if w.bidegree().is_some_and(|(_, q)| q < m) {
            let sym = Connection::symbolic(m);
            let v = d_h_nabla(&sym, &VForm::from_form(w.clone()), &chart).unwrap();
            prop_assert_eq!(v.to_form(), d_h(&w, &chart).unwrap());
        }
    }

    #[test]
    fn text_and_structured_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let chart = random_chart(&mut r, 3, 2);
        let scope = Scope::new(chart.m, chart.n)
            .with_formal(FormalFunction::new("F", 2))
            .with_formal(FormalFunction::new("G", 2));
        let e = random_coefficient(&mut r, &chart, 2).total_derivative(0, &chart).unwrap();
        prop_assert_eq!(parse_expr(&text_expr(&e), &scope).unwrap(), e);
        let (p, q) = (r.gen_range(0..=2), r.gen_range(0..=chart.m));
        let w = random_form(&mut r, &chart, 2, p, q, 3);
        prop_assert_eq!(parse_form(&text_form(&w, chart.m), &scope).unwrap(), w.clone());
        prop_assert_eq!(parse_structured(&structured_form(&w, chart.m, chart.n)).unwrap(), w);
    }
}

#[test]
fn caratheodory_forms_are_lepage_equivalents() {
    let chart = Chart::new(2, 2);
    let spec = LagrangianSpec::formal("L", 1, chart, true);
    let rep = lepage_report(caratheodory(&spec).unwrap(), &spec).unwrap();
    assert!(rep.is_lepage_equivalent());
    assert_eq!(rep.d_theta.contact_component(1), spec.euler_lagrange().unwrap());
    let spec2 = LagrangianSpec::formal("L", 2, Chart::new(2, 1), true);
    let rep2 = lepage_report(caratheodory2(&spec2).unwrap(), &spec2).unwrap();
    assert!(rep2.is_lepage_equivalent());
    assert_eq!(rep2.d_theta.contact_component(1), spec2.euler_lagrange().unwrap());
}

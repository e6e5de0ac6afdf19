//! Random generators shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use lepage_kit::jetforms::{Basis, Form};
use lepage_kit::symcore::{qr, Atom, Chart, Expr, FormalFunction, MultiIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn mi(e: &[u8]) -> MultiIndex {
    MultiIndex::from_slice(e)
}

pub fn formal(name: &str, order: usize, m: usize) -> Expr {
    Expr::atom(Atom::formal(FormalFunction::new(name, order), m))
}

pub fn formal_fn(f: &Arc<FormalFunction>, m: usize) -> Expr {
    Expr::atom(Atom::formal(f.clone(), m))
}

fn small_rational(rng: &mut TestRng) -> lepage_kit::symcore::Q {
    let mut n = rng.gen_range(-5..=5);
    if n == 0 {
        n = 1;
    }
    qr(n, rng.gen_range(1..=4))
}

pub fn random_multi_index(rng: &mut TestRng, m: usize, max_len: usize) -> MultiIndex {
    let len = rng.gen_range(0..=max_len);
    let dirs: Vec<usize> = (0..len).map(|_| rng.gen_range(0..m)).collect();
    MultiIndex::from_directions(m, &dirs)
}

/// A polynomial in `x` and jets up to `order`, optionally with a formal factor.
pub fn random_expr(rng: &mut TestRng, chart: &Chart, order: usize, terms: usize) -> Expr {
    let (m, n) = (chart.m, chart.n);
    let mut out = Expr::zero();
    for _ in 0..terms {
        let mut t = Expr::constant(small_rational(rng));
        for _ in 0..rng.gen_range(0..=2) {
            let a = match rng.gen_range(0..5) {
                0 => Expr::x(rng.gen_range(0..m)),
                _ => Expr::u(rng.gen_range(0..n), random_multi_index(rng, m, order)),
            };
            t = &t * &a;
        }
        out += &t;
    }
    out
}

/// `random_expr` plus, with some probability, a formal function of `order` as a factor.
pub fn random_coefficient(rng: &mut TestRng, chart: &Chart, order: usize) -> Expr {
    let terms = rng.gen_range(1..=2);
    let base = random_expr(rng, chart, order, terms);
    if rng.gen_bool(0.25) {
        let name = ["F", "G"][rng.gen_range(0..2)];
        &base * &formal(name, order, chart.m)
    } else {
        base
    }
}

fn random_word(rng: &mut TestRng, chart: &Chart, order: usize, p: usize, q: usize) -> Vec<Basis> {
    let available = chart.n * MultiIndex::all_up_to(chart.m, order).len();
    assert!(p <= available, "not enough contact basis elements for p = {p}");
    let mut thetas = Vec::new();
    while thetas.len() < p {
        let alpha = rng.gen_range(0..chart.n);
        let b = Basis::theta(alpha, random_multi_index(rng, chart.m, order));
        if !thetas.contains(&b) {
            thetas.push(b);
        }
    }
    let mut dirs: Vec<usize> = (0..chart.m).collect();
    dirs.shuffle(rng);
    thetas.extend(dirs[..q].iter().map(|&i| Basis::dx(i)));
    thetas
}

/// A homogeneous form of bidegree `(p, q)` with `terms` random words.
pub fn random_form(rng: &mut TestRng, chart: &Chart, order: usize, p: usize, q: usize, terms: usize) -> Form {
    let mut out = Form::zero();
    for _ in 0..terms {
        let w = random_word(rng, chart, order, p, q);
        let c = random_coefficient(rng, chart, order);
        out += &Form::wedge_of(w).scale(&c);
    }
    out
}

/// A random chart with `m ≤ max_m`, `n ≤ max_n`.
pub fn random_chart(rng: &mut TestRng, max_m: usize, max_n: usize) -> Chart {
    Chart::new(rng.gen_range(1..=max_m), rng.gen_range(1..=max_n))
}

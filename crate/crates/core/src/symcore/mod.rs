//! Exact symbolic kernel: multi-indices, atoms over the jet chart, canonical
//! rational expressions, and partial/total derivatives.

mod atom;
mod expr;
mod multi_index;

pub use atom::{Atom, Chart, Dependence, FormalDeriv, FormalFunction, DEFAULT_ORDER_CAP};
pub use expr::{q, qr, Expr, Monomial, Q};
pub use multi_index::{factorial, MultiIndex};

use num_bigint::BigInt;
use num_traits::Zero;

use crate::error::Result;

/// Results of [`mi_arith`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndexArith {
    pub sum: MultiIndex,
    pub difference: Option<MultiIndex>,
    pub length: usize,
    pub factorial: num_bigint::BigUint,
    pub weight: num_bigint::BigUint,
}

pub fn mi_arith(a: &MultiIndex, b: &MultiIndex) -> Result<MultiIndexArith> {
    Ok(MultiIndexArith {
        sum: a.checked_add(b)?,
        difference: a.checked_sub(b)?,
        length: a.length(),
        factorial: a.factorial(),
        weight: a.weight(),
    })
}

/// `I!/(K!(I−K)!)` as a rational.
pub fn multinomial(i: &MultiIndex, k: &MultiIndex) -> Q {
    let rest = i.sub(k).expect("K ≤ I");
    Q::new(
        BigInt::from(i.factorial()),
        BigInt::from(k.factorial() * rest.factorial()),
    )
}

/// Multi-index Leibniz rule: `Σ_{K≤I} I!/(K!(I−K)!) d_K f · d_{I−K} g`.
pub fn leibniz_d(f: &Expr, g: &Expr, idx: &MultiIndex, chart: &Chart) -> Result<Expr> {
    let mut out = Expr::zero();
    for k in idx.sub_indices() {
        let rest = idx.sub(&k).unwrap();
        let df = f.iterated_total(&k, chart)?;
        if df.is_zero() {
            continue;
        }
        let dg = g.iterated_total(&rest, chart)?;
        out.add_scaled(&(&df * &dg), &multinomial(idx, &k));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinomialCheck {
    pub lhs: Q,
    pub rhs: Q,
    pub equal: bool,
}

/// `Σ_{0≤K≤I} (−1)^{|K|} I!/((|K|+p+1) K!(I−K)!)` against `p!|I|!/(|I|+p+1)!`.
pub fn weighted_binomial_check(idx: &MultiIndex, p: usize) -> BinomialCheck {
    let mut lhs = Q::zero();
    for k in idx.sub_indices() {
        let sign = if k.length() % 2 == 0 { 1 } else { -1 };
        lhs += multinomial(idx, &k) * qr(sign, (k.length() + p + 1) as i64);
    }
    let rhs = Q::new(
        BigInt::from(factorial(p) * factorial(idx.length())),
        BigInt::from(factorial(idx.length() + p + 1)),
    );
    BinomialCheck {
        equal: lhs == rhs,
        lhs,
        rhs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(e: &[u8]) -> MultiIndex {
        MultiIndex::from_slice(e)
    }

    #[test]
    fn binomial_examples() {
        // 1/2 − 2/3 + 1/4, term by term
        let c = weighted_binomial_check(&mi(&[2, 0]), 1);
        assert_eq!(c.lhs, qr(1, 2) - qr(2, 3) + qr(1, 4));
        assert_eq!(c.lhs, qr(1, 12));
        assert!(c.equal);
        for p in 0..4 {
            let c = weighted_binomial_check(&mi(&[0, 0]), p);
            assert_eq!(c.lhs, qr(1, p as i64 + 1));
            assert!(c.equal);
        }
        // K ∈ {00, 10, 01, 11}: 1 − 1/2 − 1/2 + 1/3 = 1/3 = 0!·2!/3!
        let c = weighted_binomial_check(&mi(&[1, 1]), 0);
        assert_eq!(c.lhs, qr(1, 3));
        assert!(c.equal);
    }

    #[test]
    fn leibniz_examples() {
        let chart = Chart::new(2, 1);
        let u = Expr::u(0, mi(&[0, 0]));
        let got = leibniz_d(&u, &u, &mi(&[1, 0]), &chart).unwrap();
        assert_eq!(got, (&u * &Expr::u(0, mi(&[1, 0]))).scale(&q(2)));
        let same = leibniz_d(&u, &Expr::x(1), &mi(&[0, 0]), &chart).unwrap();
        assert_eq!(same, &u * &Expr::x(1));
        let got = leibniz_d(&Expr::x(0), &u, &mi(&[2, 0]), &chart).unwrap();
        let expect = &(&Expr::x(0) * &Expr::u(0, mi(&[2, 0]))) + &Expr::u(0, mi(&[1, 0])).scale(&q(2));
        assert_eq!(got, expect);
    }

    #[test]
    fn mi_arith_reports() {
        let r = mi_arith(&mi(&[2, 1]), &mi(&[0, 1])).unwrap();
        assert_eq!(r.sum, mi(&[2, 2]));
        assert_eq!(r.difference, Some(mi(&[2, 0])));
        assert_eq!(r.weight, 3u32.into());
        assert!(mi_arith(&mi(&[1]), &mi(&[1, 0])).is_err());
    }
}

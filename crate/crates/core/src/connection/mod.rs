//! Symmetric linear connections on the base, the vertical tensor `S_∇`, the covariant
//! horizontal differential `d_{h∇}`, the contraction `C`, infinitesimal projections
//! `p_∇`, and a harness for the conjectured homotopy operator `P_∇`.

mod appendix;
mod conjecture;
mod projection;
mod vform;

pub use appendix::{verify_appendix_a, AppendixLine, AppendixReport};
pub use conjecture::{
    fit_coefficients, homotopy_defect, p_nabla_conjecture, CoefficientScheme, FitOutcome,
    FitReport, FitUnknown,
};
pub use projection::{
    projection_p_nabla, tangent_inclusion, HolonomicDir, NonholonomicDir, ProjectionTable,
};
pub use vform::{contract_c, d_h_nabla, s_nabla, Slots, VForm};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::symcore::{Atom, Chart, Expr, MultiIndex, Q};

/// A symmetric linear connection: `Γ^i_{jk}` keyed by `(i, 1_j + 1_k)`, so symmetry is
/// structural. Missing entries are zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connection {
    m: usize,
    gamma: BTreeMap<(u8, MultiIndex), Expr>,
}

impl Connection {
    pub fn flat(m: usize) -> Self {
        Connection { m, gamma: BTreeMap::new() }
    }

    /// Every coefficient an independent symbol `G[i;K]` depending on the base.
    pub fn symbolic(m: usize) -> Self {
        let mut gamma = BTreeMap::new();
        for i in 0..m {
            for k in MultiIndex::all_of_length(m, 2) {
                gamma.insert((i as u8, k.clone()), Expr::atom(Atom::gamma(i, k)));
            }
        }
        Connection { m, gamma }
    }

    /// Builds a connection from `(i, j, k, Γ^i_{jk})` entries; entries must depend on the
    /// base coordinates only, and a pair given twice must agree.
    pub fn from_entries(m: usize, entries: &[(usize, usize, usize, Expr)]) -> Result<Self> {
        let mut gamma: BTreeMap<(u8, MultiIndex), Expr> = BTreeMap::new();
        for (i, j, k, e) in entries {
            if *i >= m || *j >= m || *k >= m {
                return Err(Error::DimensionMismatch { expected: m, found: (*i).max(*j).max(*k) + 1 });
            }
            if e.jet_order().is_some() {
                return Err(Error::domain("connection coefficients must depend on the base only"));
            }
            let key = (*i as u8, MultiIndex::unit(m, *j).increment(*k));
            if let Some(prev) = gamma.get(&key) {
                if prev != e {
                    return Err(Error::Duplicate(format!("Gamma[{}; {}, {}]", i + 1, j + 1, k + 1)));
                }
            }
            if !e.is_zero() {
                gamma.insert(key, e.clone());
            }
        }
        Ok(Connection { m, gamma })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// `Γ^i_K` for `|K| = 2`.
    pub fn coefficient(&self, i: usize, k: &MultiIndex) -> Expr {
        self.gamma.get(&(i as u8, k.clone())).cloned().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(u8, MultiIndex), &Expr)> {
        self.gamma.iter()
    }

    pub fn is_flat(&self) -> bool {
        self.gamma.is_empty()
    }
}

/// The coefficients `Γ^h_K`, `1 ≤ |K| ≤ max_level`, of the prolonged connection maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaProlongation {
    pub m: usize,
    pub max_level: usize,
    coeffs: BTreeMap<(u8, MultiIndex), Expr>,
}

impl GammaProlongation {
    /// `Γ^h_K`; the Kronecker delta at `|K| = 1`, zero above `max_level`.
    pub fn get(&self, h: usize, k: &MultiIndex) -> Expr {
        if k.length() == 1 {
            return if k.get(h) == 1 { Expr::one() } else { Expr::zero() };
        }
        assert!(k.length() <= self.max_level, "prolongation level {} not computed", k.length());
        self.coeffs.get(&(h as u8, k.clone())).cloned().unwrap_or_default()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(u8, MultiIndex), &Expr)> {
        self.coeffs.iter()
    }
}

/// `Γ^g_K = (1/|K|) Σ_j K(j) (∂_j Γ^g_{K−1_j} + Γ^g_{h j} Γ^h_{K−1_j})` for `|K| ≥ 3`:
/// the symmetrization, over the position of the last index, of one prolongation step.
pub fn gamma_prolong(c: &Connection, max_level: usize) -> GammaProlongation {
    let m = c.m;
    let chart = Chart::new(m, 1);
    let mut out = GammaProlongation { m, max_level, coeffs: BTreeMap::new() };
    for (key, e) in &c.gamma {
        if max_level >= 2 {
            out.coeffs.insert(key.clone(), e.clone());
        }
    }
    for level in 3..=max_level {
        for k in MultiIndex::all_of_length(m, level) {
            for g in 0..m {
                let mut acc = Expr::zero();
                for j in 0..m {
                    let Some(prev) = k.decrement(j) else { continue };
                    let mut step = out
                        .get(g, &prev)
                        .total_derivative(j, &chart)
                        .expect("base-only coefficient");
                    for h in 0..m {
                        let a = c.coefficient(g, &MultiIndex::unit(m, h).increment(j));
                        if a.is_zero() {
                            continue;
                        }
                        step += &(&a * &out.get(h, &prev));
                    }
                    acc.add_scaled(&step, &Q::from_integer(k.get(j).into()));
                }
                let acc = acc.scale(&Q::new(1.into(), (level as i64).into()));
                if !acc.is_zero() {
                    out.coeffs.insert((g as u8, k.clone()), acc);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_vanishes() {
        let p = gamma_prolong(&Connection::flat(2), 4);
        assert!(p.entries().next().is_none());
        assert_eq!(p.get(0, &MultiIndex::from_slice(&[1, 0])), Expr::one());
        assert!(p.get(1, &MultiIndex::from_slice(&[1, 0])).is_zero());
    }

    #[test]
    fn one_dimensional_worked_value() {
        let c = Connection::from_entries(1, &[(0, 0, 0, Expr::x(0))]).unwrap();
        let p = gamma_prolong(&c, 3);
        let expect = Expr::one() + &Expr::x(0) * &Expr::x(0);
        assert_eq!(p.get(0, &MultiIndex::from_slice(&[3])), expect);
    }

    #[test]
    fn symbolic_levels_are_symmetric_by_key() {
        let c = Connection::symbolic(2);
        let p = gamma_prolong(&c, 3);
        // Γ^g_{(2,1)} mixes both last-index positions with weights 2/3 and 1/3.
        let k = MultiIndex::from_slice(&[2, 1]);
        assert!(!p.get(0, &k).is_zero());
        assert!(Connection::from_entries(2, &[(0, 0, 1, Expr::x(0)), (0, 1, 0, Expr::x(1))]).is_err());
        assert!(Connection::from_entries(2, &[(0, 0, 1, Expr::u(0, MultiIndex::zeros(2)))]).is_err());
    }
}

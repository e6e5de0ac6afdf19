//! Contact-graded differential forms on a finite-order jet chart.
//!
//! Every form is stored in the `θ/dx` coframe. The horizontal differential is built from
//! the Lie derivative along the total derivative fields, `d_h = dx^i ∧ L_{d_i}`, with
//! `L_{d_i} θ^α_J = θ^α_{J+1_i}` and `L_{d_i} dx^j = 0`.

mod form;

pub use form::{Basis, Form, Word};

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::symcore::{Chart, Expr, MultiIndex};

pub type ProblemChart = Chart;

type Replacement = SmallVec<[(Expr, SmallVec<[Basis; 2]>); 2]>;

/// Extends a map on basis one-forms to words, as a derivation (`odd = false`) or an
/// antiderivation of odd degree (`odd = true`). Coefficients are carried unchanged.
pub(crate) fn apply_to_factors(
    form: &Form,
    odd: bool,
    mut f: impl FnMut(&Basis) -> Result<Replacement>,
) -> Result<Form> {
    let mut out = Form::zero();
    for (w, c) in form.terms() {
        let factors = w.factors();
        for (k, b) in factors.iter().enumerate() {
            let rep = f(b)?;
            if rep.is_empty() {
                continue;
            }
            let negate = odd && k % 2 == 1;
            for (rc, rb) in rep {
                let mut coeff = c * &rc;
                if negate {
                    coeff = -coeff;
                }
                let seq = factors[..k]
                    .iter()
                    .cloned()
                    .chain(rb)
                    .chain(factors[k + 1..].iter().cloned());
                out.add_sequence(seq, &coeff);
            }
        }
    }
    Ok(out)
}

fn check_theta_cap(idx: &MultiIndex, chart: &Chart) -> Result<()> {
    if idx.length() + 1 > chart.order_cap {
        return Err(Error::OrderCap { order: idx.length() + 1, cap: chart.order_cap });
    }
    Ok(())
}

/// Checks that every index in `form` is valid for `chart`.
pub fn validate(form: &Form, chart: &Chart) -> Result<()> {
    for (w, e) in form.terms() {
        for b in w.factors() {
            match b {
                Basis::Dx(i) if *i as usize >= chart.m => {
                    return Err(Error::DimensionMismatch { expected: chart.m, found: *i as usize + 1 })
                }
                Basis::Theta(a, _) if *a as usize >= chart.n => {
                    return Err(Error::DimensionMismatch { expected: chart.n, found: *a as usize + 1 })
                }
                Basis::Theta(_, i) if i.dim() != chart.m => {
                    return Err(Error::DimensionMismatch { expected: chart.m, found: i.dim() })
                }
                _ => {}
            }
        }
        if let Some(o) = e.jet_order() {
            if o > chart.order_cap {
                return Err(Error::OrderCap { order: o, cap: chart.order_cap });
            }
        }
    }
    Ok(())
}

/// Wedge product after checking both factors against `chart`.
pub fn wedge_checked(a: &Form, b: &Form, chart: &Chart) -> Result<Form> {
    validate(a, chart)?;
    validate(b, chart)?;
    Ok(a.wedge(b))
}

/// `L_{d_i}`: the total derivative `d_i` acting on forms.
pub fn lie_total(i: usize, form: &Form, chart: &Chart) -> Result<Form> {
    let mut out = apply_to_factors(form, false, |b| {
        Ok(match b {
            Basis::Theta(a, idx) => {
                check_theta_cap(idx, chart)?;
                smallvec::smallvec![(
                    Expr::one(),
                    smallvec::smallvec![Basis::Theta(*a, idx.increment(i))]
                )]
            }
            Basis::Dx(_) => SmallVec::new(),
        })
    })?;
    for (w, c) in form.terms() {
        out.add_term(w.clone(), &c.total_derivative(i, chart)?);
    }
    Ok(out)
}

/// `d_I` on forms: iterated [`lie_total`].
pub fn lie_iterated(idx: &MultiIndex, form: &Form, chart: &Chart) -> Result<Form> {
    let mut cur = form.clone();
    for d in idx.directions() {
        if cur.is_zero() {
            break;
        }
        cur = lie_total(d, &cur, chart)?;
    }
    Ok(cur)
}

pub fn d_h(form: &Form, chart: &Chart) -> Result<Form> {
    let mut out = Form::zero();
    for i in 0..chart.m {
        let l = lie_total(i, form, chart)?;
        out += &Form::dx(i).wedge(&l);
    }
    Ok(out)
}

pub fn d_v(form: &Form, chart: &Chart) -> Result<Form> {
    let mut out = Form::zero();
    for (w, c) in form.terms() {
        for ((alpha, idx), dc) in c.vertical_components(chart) {
            out.add_sequence(
                std::iter::once(Basis::Theta(alpha, idx)).chain(w.factors().iter().cloned()),
                &dc,
            );
        }
    }
    Ok(out)
}

pub fn d_full(form: &Form, chart: &Chart) -> Result<Form> {
    Ok(d_h(form, chart)? + d_v(form, chart)?)
}

/// `i_{d_i}`: interior product with the total derivative field.
pub fn interior_total(i: usize, form: &Form) -> Form {
    apply_to_factors(form, true, |b| {
        Ok(match b {
            Basis::Dx(j) if *j as usize == i => smallvec::smallvec![(Expr::one(), SmallVec::new())],
            _ => SmallVec::new(),
        })
    })
    .expect("infallible")
}

/// `i_{∂/∂u^α_I}`.
pub fn interior_jet(alpha: usize, idx: &MultiIndex, form: &Form) -> Form {
    apply_to_factors(form, true, |b| {
        Ok(match b {
            Basis::Theta(a, j) if *a as usize == alpha && j == idx => {
                smallvec::smallvec![(Expr::one(), SmallVec::new())]
            }
            _ => SmallVec::new(),
        })
    })
    .expect("infallible")
}

/// `ω_0 = dx^1 ∧ ⋯ ∧ dx^m`.
pub fn omega0(m: usize) -> Form {
    Form::wedge_of((0..m).map(Basis::dx))
}

/// `ω_{j_1…j_p} = i_{∂_{j_p}} ⋯ i_{∂_{j_1}} ω_0`; zero on repeated indices.
pub fn omega_basis(indices: &[usize], m: usize) -> Form {
    let mut f = omega0(m);
    for &j in indices {
        f = interior_total(j, &f);
    }
    f
}

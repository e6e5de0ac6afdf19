//! Text, LaTeX and structured (JSON) renderings of functions and forms. Text and LaTeX
//! output fold full and co-dimension-one `dx` products into `w0` / `w[i]`
//! (`\omega_{0}` / `\omega_{i}`), with `ω_i = i_{d_i} ω_0`.

use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};
use serde_json::Number;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::jetforms::{Basis, Form, Word};
use crate::symcore::{Atom, Dependence, Expr, FormalDeriv, FormalFunction, Monomial, MultiIndex, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Latex,
    Structured,
}

pub const SCHEMA: &str = "lepage-kit";
pub const SCHEMA_VERSION: u32 = 1;

enum Token {
    Theta(u8, MultiIndex),
    Dx(u8),
    Omega0,
    Omega(u8),
}

/// Splits a word into display tokens and the sign picked up by folding.
fn fold(word: &Word, m: usize) -> (bool, Vec<Token>) {
    let dirs = word.dx_directions();
    let mut out: Vec<Token> = word
        .factors()
        .iter()
        .filter_map(|b| match b {
            Basis::Theta(a, i) => Some(Token::Theta(*a, i.clone())),
            Basis::Dx(_) => None,
        })
        .collect();
    let mut negate = false;
    if m >= 1 && dirs.len() == m {
        out.push(Token::Omega0);
    } else if m >= 2 && dirs.len() == m - 1 {
        let missing = (0..m).find(|d| !dirs.contains(d)).unwrap();
        negate = missing % 2 == 1;
        out.push(Token::Omega(missing as u8));
    } else {
        out.extend(dirs.into_iter().map(|d| Token::Dx(d as u8)));
    }
    (negate, out)
}

pub fn text_expr(e: &Expr) -> String {
    e.to_string()
}

pub fn text_form(f: &Form, m: usize) -> String {
    if f.is_zero() {
        return "0".into();
    }
    let mut parts = Vec::new();
    for (w, e) in f.terms() {
        let (neg, tokens) = fold(w, m);
        let coef = if neg { -e } else { e.clone() };
        if tokens.is_empty() {
            parts.push(format!("({coef})"));
            continue;
        }
        let toks: Vec<String> = tokens
            .iter()
            .map(|t| match t {
                Token::Theta(a, i) => format!("theta[{};{}]", a + 1, i),
                Token::Dx(i) => format!("dx[{}]", i + 1),
                Token::Omega0 => "w0".into(),
                Token::Omega(i) => format!("w[{}]", i + 1),
            })
            .collect();
        parts.push(format!("({coef}) * {}", toks.join(" /\\ ")));
    }
    parts.join(" + ")
}

fn latex_dirs(idx: &MultiIndex) -> String {
    let dirs: Vec<String> = idx.directions().into_iter().map(|d| (d + 1).to_string()).collect();
    if idx.dim() <= 9 {
        dirs.concat()
    } else {
        dirs.join(",")
    }
}

fn latex_sub(idx: &MultiIndex) -> String {
    if idx.is_zero() {
        String::new()
    } else {
        format!("_{{{}}}", latex_dirs(idx))
    }
}

fn latex_jet(a: u8, idx: &MultiIndex) -> String {
    format!("u^{{{}}}{}", a + 1, latex_sub(idx))
}

fn latex_atom(a: &Atom) -> String {
    match a {
        Atom::Base(i) => format!("x^{{{}}}", i + 1),
        Atom::Jet(al, i) => latex_jet(*al, i),
        Atom::Gamma { upper, lower, deriv } => {
            let mut s: String = deriv.directions().into_iter().map(|d| format!("\\partial_{{x^{{{}}}}}", d + 1)).collect();
            s += &format!("\\Gamma^{{{}}}{}", upper + 1, latex_sub(lower));
            s
        }
        Atom::Formal(fd) => {
            let mut s: String = fd.base.directions().into_iter().map(|d| format!("\\partial_{{x^{{{}}}}}", d + 1)).collect();
            for (al, i) in &fd.jets {
                s += &format!("\\partial_{{{}}}", latex_jet(*al, i));
            }
            s += &format!("\\operatorname{{{}}}", fd.func.name);
            s
        }
    }
}

fn latex_q(c: &Q) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("\\frac{{{}}}{{{}}}", c.numer(), c.denom())
    }
}

fn latex_monomial(mono: &Monomial) -> String {
    mono.factors()
        .iter()
        .map(|(a, p)| if *p == 1 { latex_atom(a) } else { format!("{{{}}}^{{{p}}}", latex_atom(a)) })
        .collect::<Vec<_>>()
        .join("\\,")
}

/// `|c| · mono` in LaTeX, empty when both are one.
fn latex_abs_term(mono: &Monomial, c: &Q) -> String {
    let a = c.abs();
    match (mono.is_one(), a.is_one()) {
        (true, _) => latex_q(&a),
        (false, true) => latex_monomial(mono),
        (false, false) => format!("{}\\,{}", latex_q(&a), latex_monomial(mono)),
    }
}

pub fn latex_expr(e: &Expr) -> String {
    if e.is_zero() {
        return "0".into();
    }
    let mut s = String::new();
    for (k, (mono, c)) in e.terms().enumerate() {
        match (k, c.is_negative()) {
            (0, true) => s.push('-'),
            (0, false) => {}
            (_, true) => s.push_str(" - "),
            (_, false) => s.push_str(" + "),
        }
        s.push_str(&latex_abs_term(mono, c));
    }
    s
}

pub fn latex_form(f: &Form, m: usize) -> String {
    if f.is_zero() {
        return "0".into();
    }
    if f.len() == 1 {
        let (w, e) = f.terms().next().unwrap();
        if w.degree() == 0 {
            return latex_expr(e);
        }
    }
    let mut s = String::new();
    for (k, (w, e)) in f.terms().enumerate() {
        let (neg, tokens) = fold(w, m);
        let e = if neg { -e } else { e.clone() };
        let word: Vec<String> = tokens
            .iter()
            .map(|t| match t {
                Token::Theta(a, i) => format!("\\theta^{{{}}}{}", a + 1, latex_sub(i)),
                Token::Dx(i) => format!("\\mathrm{{d}}x^{{{}}}", i + 1),
                Token::Omega0 => "\\omega_{0}".into(),
                Token::Omega(i) => format!("\\omega_{{{}}}", i + 1),
            })
            .collect();
        let word = word.join("\\wedge");
        let (negative, coef) = if e.len() == 1 {
            let (mono, c) = e.terms().next().unwrap();
            let body = if mono.is_one() && c.abs().is_one() && !word.is_empty() {
                String::new()
            } else {
                latex_abs_term(mono, c)
            };
            (c.is_negative(), body)
        } else {
            (false, format!("\\left({}\\right)", latex_expr(&e)))
        };
        match (k, negative) {
            (0, true) => s.push('-'),
            (0, false) => {}
            (_, true) => s.push_str(" - "),
            (_, false) => s.push_str(" + "),
        }
        s.push_str(&coef);
        if !coef.is_empty() && !word.is_empty() {
            s.push_str("\\,");
        }
        s.push_str(&word);
    }
    s
}

// ---- structured output ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rational {
    pub num: Number,
    pub den: Number,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetRef {
    pub alpha: u8,
    pub index: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DependenceDto {
    Base,
    Order { order: usize },
    Explicit { jets: Vec<JetRef> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AtomDto {
    X { i: u8 },
    U { alpha: u8, index: Vec<u8> },
    Gamma { upper: u8, lower: Vec<u8>, deriv: Vec<u8> },
    Formal { name: String, dependence: DependenceDto, nonvanishing: bool, base: Vec<u8>, jets: Vec<JetRef> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub atom: AtomDto,
    pub power: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExprTerm {
    pub coefficient: Rational,
    pub factors: Vec<Factor>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExprDto {
    pub terms: Vec<ExprTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BasisDto {
    Theta { alpha: u8, index: Vec<u8> },
    Dx { i: u8 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormTerm {
    pub word: Vec<BasisDto>,
    pub coefficient: ExprDto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormDto {
    pub terms: Vec<FormTerm>,
}

/// Top-level structured document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub schema: String,
    pub version: u32,
    pub m: usize,
    pub n: usize,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Body {
    Expr(ExprDto),
    Form(FormDto),
    Report(serde_json::Value),
}

impl Document {
    pub fn new(m: usize, n: usize, body: Body) -> Self {
        Document { schema: SCHEMA.into(), version: SCHEMA_VERSION, m, n, body }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Document = serde_json::from_str(text).map_err(|e| Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
            expected: Vec::new(),
        })?;
        if doc.schema != SCHEMA || doc.version != SCHEMA_VERSION {
            return Err(Error::Unsupported(format!("schema {} version {}", doc.schema, doc.version)));
        }
        Ok(doc)
    }
}

fn number(v: &BigInt) -> Number {
    Number::from_str(&v.to_string()).expect("integer literal")
}

fn big(n: &Number) -> Result<BigInt> {
    BigInt::from_str(&n.to_string()).map_err(|_| Error::Unsupported(format!("non-integer number {n}")))
}

fn jet_ref(a: u8, i: &MultiIndex) -> JetRef {
    JetRef { alpha: a + 1, index: i.entries().to_vec() }
}

fn from_jet_ref(j: &JetRef) -> Result<(u8, MultiIndex)> {
    if j.alpha == 0 {
        return Err(Error::domain("dependent-variable indices start at 1"));
    }
    Ok((j.alpha - 1, MultiIndex::from_slice(&j.index)))
}

fn atom_dto(a: &Atom) -> AtomDto {
    match a {
        Atom::Base(i) => AtomDto::X { i: i + 1 },
        Atom::Jet(al, i) => AtomDto::U { alpha: al + 1, index: i.entries().to_vec() },
        Atom::Gamma { upper, lower, deriv } => AtomDto::Gamma {
            upper: upper + 1,
            lower: lower.entries().to_vec(),
            deriv: deriv.entries().to_vec(),
        },
        Atom::Formal(fd) => AtomDto::Formal {
            name: fd.func.name.clone(),
            dependence: match &fd.func.dependence {
                Dependence::Base => DependenceDto::Base,
                Dependence::Order(k) => DependenceDto::Order { order: *k },
                Dependence::Explicit(l) => DependenceDto::Explicit { jets: l.iter().map(|(a, i)| jet_ref(*a, i)).collect() },
            },
            nonvanishing: fd.func.nonvanishing,
            base: fd.base.entries().to_vec(),
            jets: fd.jets.iter().map(|(a, i)| jet_ref(*a, i)).collect(),
        },
    }
}

fn one_based(v: u8) -> Result<u8> {
    v.checked_sub(1).ok_or_else(|| Error::domain("indices start at 1"))
}

fn atom_from(d: &AtomDto) -> Result<Atom> {
    Ok(match d {
        AtomDto::X { i } => Atom::Base(one_based(*i)?),
        AtomDto::U { alpha, index } => Atom::Jet(one_based(*alpha)?, MultiIndex::from_slice(index)),
        AtomDto::Gamma { upper, lower, deriv } => Atom::Gamma {
            upper: one_based(*upper)?,
            lower: MultiIndex::from_slice(lower),
            deriv: MultiIndex::from_slice(deriv),
        },
        AtomDto::Formal { name, dependence, nonvanishing, base, jets } => {
            let dependence = match dependence {
                DependenceDto::Base => Dependence::Base,
                DependenceDto::Order { order } => Dependence::Order(*order),
                DependenceDto::Explicit { jets } => {
                    Dependence::Explicit(jets.iter().map(from_jet_ref).collect::<Result<_>>()?)
                }
            };
            let func = Arc::new(FormalFunction { name: name.clone(), dependence, nonvanishing: *nonvanishing });
            let mut js: SmallVec<[(u8, MultiIndex); 2]> = jets.iter().map(from_jet_ref).collect::<Result<_>>()?;
            js.sort();
            Atom::Formal(Arc::new(FormalDeriv { func, base: MultiIndex::from_slice(base), jets: js }))
        }
    })
}

pub fn expr_dto(e: &Expr) -> ExprDto {
    ExprDto {
        terms: e
            .terms()
            .map(|(mono, c)| ExprTerm {
                coefficient: Rational { num: number(c.numer()), den: number(c.denom()) },
                factors: mono.factors().iter().map(|(a, p)| Factor { atom: atom_dto(a), power: *p }).collect(),
            })
            .collect(),
    }
}

pub fn expr_from(d: &ExprDto) -> Result<Expr> {
    let mut out = Expr::zero();
    for t in &d.terms {
        let den = big(&t.coefficient.den)?;
        if den == BigInt::from(0) {
            return Err(Error::domain("zero denominator"));
        }
        let mut term = Expr::constant(Q::new(big(&t.coefficient.num)?, den));
        for f in &t.factors {
            term = &term * &Expr::atom(atom_from(&f.atom)?).pow(f.power)?;
        }
        out += &term;
    }
    Ok(out)
}

pub fn form_dto(f: &Form) -> FormDto {
    FormDto {
        terms: f
            .terms()
            .map(|(w, e)| FormTerm {
                word: w
                    .factors()
                    .iter()
                    .map(|b| match b {
                        Basis::Theta(a, i) => BasisDto::Theta { alpha: a + 1, index: i.entries().to_vec() },
                        Basis::Dx(i) => BasisDto::Dx { i: i + 1 },
                    })
                    .collect(),
                coefficient: expr_dto(e),
            })
            .collect(),
    }
}

pub fn form_from(d: &FormDto) -> Result<Form> {
    let mut out = Form::zero();
    for t in &d.terms {
        let seq = t
            .word
            .iter()
            .map(|b| {
                Ok(match b {
                    BasisDto::Theta { alpha, index } => Basis::Theta(one_based(*alpha)?, MultiIndex::from_slice(index)),
                    BasisDto::Dx { i } => Basis::Dx(one_based(*i)?),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.add_sequence(seq, &expr_from(&t.coefficient)?);
    }
    Ok(out)
}

pub fn structured_expr(e: &Expr, m: usize, n: usize) -> String {
    Document::new(m, n, Body::Expr(expr_dto(e))).to_json()
}

pub fn structured_form(f: &Form, m: usize, n: usize) -> String {
    Document::new(m, n, Body::Form(form_dto(f))).to_json()
}

/// Reads a structured document holding a function or a form (functions come back as
/// degree-zero forms).
pub fn parse_structured(text: &str) -> Result<Form> {
    match Document::from_json(text)?.body {
        Body::Expr(e) => Ok(Form::scalar(expr_from(&e)?)),
        Body::Form(f) => form_from(&f),
        Body::Report(_) => Err(Error::Unsupported("reports are not values".into())),
    }
}

pub fn render_form(f: &Form, format: Format, m: usize, n: usize) -> String {
    match format {
        Format::Text => text_form(f, m),
        Format::Latex => latex_form(f, m),
        Format::Structured => structured_form(f, m, n),
    }
}

pub fn render_expr(e: &Expr, format: Format, m: usize, n: usize) -> String {
    match format {
        Format::Text => text_expr(e),
        Format::Latex => latex_expr(e),
        Format::Structured => structured_expr(e, m, n),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::parse::{parse_form, parse_latex, Scope};
    use crate::jetforms::omega_basis;
    use crate::symcore::qr;

    #[test]
    fn latex_theta_omega() {
        let f = Form::theta(0, MultiIndex::zeros(2)).wedge(&omega_basis(&[0], 2));
        assert_eq!(latex_form(&f, 2), "\\theta^{1}\\wedge\\omega_{1}");
        assert_eq!(text_form(&f, 2), "(1) * theta[1;0,0] /\\ w[1]");
    }

    #[test]
    fn rational_text() {
        assert_eq!(text_expr(&Expr::constant(qr(1, 12))), "1/12");
        assert_eq!(latex_expr(&Expr::constant(qr(-1, 12))), "-\\frac{1}{12}");
    }

    #[test]
    fn round_trips() {
        let m = 2;
        let scope = Scope::new(m, 1)
            .with_formal(FormalFunction::new("F", 2))
            .with_formal(FormalFunction::nonvanishing("N", 1));
        let nv = Expr::atom(Atom::formal(scope.formals["N"].clone(), m));
        let f = Expr::atom(Atom::formal(scope.formals["F"].clone(), m));
        let ux = Expr::u(0, MultiIndex::from_slice(&[1, 0]));
        let coef = &(&f.partial(&Atom::base(1)).partial(&Atom::jet(0, MultiIndex::from_slice(&[0, 1]))) * &ux)
            - &Expr::constant(qr(3, 7));
        let w = &Form::theta(0, MultiIndex::from_slice(&[1, 1])).wedge(&Form::dx(1)).scale(&coef)
            + &Form::dx(0).wedge(&Form::dx(1)).scale(&(&nv.pow(-2).unwrap() * &Expr::x(0)));
        assert_eq!(parse_form(&text_form(&w, m), &scope).unwrap(), w);
        assert_eq!(parse_latex(&latex_form(&w, m), &scope).unwrap(), w);
        assert_eq!(parse_structured(&structured_form(&w, m, 1)).unwrap(), w);
    }
}

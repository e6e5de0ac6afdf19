use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use pest::error::{ErrorVariant, LineColLocation};
use pest::iterators::Pair;
use pest::Parser;
use pest_derive::Parser;

use crate::connection::Connection;
use crate::error::{Error, Result};
use crate::jetforms::{omega0, omega_basis, Form};
use crate::lepage::LagrangianSpec;
use crate::symcore::{Atom, Chart, Expr, FormalFunction, MultiIndex, Q};

#[derive(Parser)]
#[grammar = "cli/grammar.pest"]
struct DslParser;

/// Names and dimensions that values are parsed against.
#[derive(Clone, Debug, Default)]
pub struct Scope {
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub formals: BTreeMap<String, Arc<FormalFunction>>,
    pub values: BTreeMap<String, Form>,
}

impl Scope {
    pub fn new(m: usize, n: usize) -> Self {
        Scope { m: Some(m), n: Some(n), ..Default::default() }
    }

    pub fn with_formal(mut self, f: Arc<FormalFunction>) -> Self {
        self.formals.insert(f.name.clone(), f);
        self
    }
}

/// A parsed problem file.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub chart: Chart,
    pub lagrangians: BTreeMap<String, LagrangianSpec>,
    /// The connection declared through `Gamma`, keyed `"Gamma"`.
    pub connections: BTreeMap<String, Connection>,
    pub formals: BTreeMap<String, Arc<FormalFunction>>,
    pub forms: BTreeMap<String, Form>,
}

impl ProblemSpec {
    pub fn lagrangian(&self, name: &str) -> Result<&LagrangianSpec> {
        self.lagrangians.get(name).ok_or_else(|| Error::UnknownIdentifier(name.into()))
    }

    pub fn form(&self, name: &str) -> Result<&Form> {
        self.forms.get(name).ok_or_else(|| Error::UnknownIdentifier(name.into()))
    }

    /// The declared connection, or the flat one.
    pub fn connection(&self) -> Connection {
        self.connections.get("Gamma").cloned().unwrap_or_else(|| Connection::flat(self.chart.m))
    }

    pub fn scope(&self) -> Scope {
        let mut s = Scope::new(self.chart.m, self.chart.n);
        s.formals = self.formals.clone();
        s
    }
}

fn rule_name(r: Rule) -> String {
    match r {
        Rule::expr | Rule::product | Rule::wedge | Rule::unary | Rule::power => "expression".into(),
        Rule::int => "integer".into(),
        Rule::signed_int => "signed integer".into(),
        Rule::ident | Rule::name => "identifier".into(),
        Rule::index_list => "index list".into(),
        Rule::add_op => "`+` or `-`".into(),
        Rule::mul_op => "`*` or `/`".into(),
        Rule::EOI => "end of input".into(),
        Rule::dim_decl | Rule::dim_name => "`m =` or `n =`".into(),
        Rule::lagrangian => "Lagrangian block".into(),
        Rule::formal_decl | Rule::kw_formal => "`formal`".into(),
        Rule::gamma_decl | Rule::gamma_entry | Rule::kw_gamma => "`Gamma`".into(),
        Rule::form_decl | Rule::kw_form => "`form`".into(),
        Rule::kw_order => "`order`".into(),
        Rule::kw_base => "`base`".into(),
        Rule::kw_nonvanishing => "`nonvanishing`".into(),
        Rule::kw_flat | Rule::kw_symbolic => "`flat` or `symbolic`".into(),
        other => format!("{other:?}").replace("lx_", "latex "),
    }
}

fn syntax_from_pest(e: pest::error::Error<Rule>) -> Error {
    let (line, column) = match e.line_col {
        LineColLocation::Pos(p) | LineColLocation::Span(p, _) => p,
    };
    let (message, mut expected) = match &e.variant {
        ErrorVariant::ParsingError { positives, negatives } => {
            let exp: Vec<String> = positives.iter().map(|r| rule_name(*r)).collect();
            let msg = if negatives.is_empty() {
                "unexpected input".to_string()
            } else {
                format!("unexpected {}", negatives.iter().map(|r| rule_name(*r)).collect::<Vec<_>>().join(", "))
            };
            (msg, exp)
        }
        ErrorVariant::CustomError { message } => (message.clone(), Vec::new()),
    };
    expected.sort();
    expected.dedup();
    let message = if expected.is_empty() {
        message
    } else {
        format!("{message}; expected {}", expected.join(", "))
    };
    Error::Syntax { line, column, message, expected }
}

fn at(pair: &Pair<'_, Rule>, message: impl Into<String>) -> Error {
    let (line, column) = pair.as_span().start_pos().line_col();
    Error::Syntax { line, column, message: message.into(), expected: Vec::new() }
}

fn int_of(pair: &Pair<'_, Rule>) -> Result<usize> {
    pair.as_str().parse::<usize>().map_err(|_| at(pair, "integer out of range"))
}

fn one_based(pair: &Pair<'_, Rule>, bound: usize, what: &str) -> Result<usize> {
    let v = int_of(pair)?;
    if v == 0 {
        return Err(at(pair, format!("{what} indices start at 1")));
    }
    if v > bound {
        return Err(Error::DimensionMismatch { expected: bound, found: v });
    }
    Ok(v - 1)
}

struct Eval<'s> {
    scope: &'s Scope,
}

impl Eval<'_> {
    fn m(&self, pair: &Pair<'_, Rule>) -> Result<usize> {
        self.scope.m.ok_or_else(|| at(pair, "`m` must be declared before use"))
    }

    fn n(&self, pair: &Pair<'_, Rule>) -> Result<usize> {
        self.scope.n.ok_or_else(|| at(pair, "`n` must be declared before use"))
    }

    fn counts(&self, pair: Pair<'_, Rule>) -> Result<MultiIndex> {
        let m = self.m(&pair)?;
        let mut v = Vec::new();
        for p in pair.into_inner() {
            let c = int_of(&p)?;
            v.push(u8::try_from(c).map_err(|_| at(&p, "multi-index entry too large"))?);
        }
        if v.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: v.len() });
        }
        Ok(MultiIndex::from_slice(&v))
    }

    fn alpha_and_index(&self, pair: Pair<'_, Rule>) -> Result<(usize, MultiIndex)> {
        let n = self.n(&pair)?;
        let mut it = pair.into_inner();
        let a = it.next().unwrap();
        let alpha = one_based(&a, n, "dependent-variable")?;
        Ok((alpha, self.counts(it.next().unwrap())?))
    }

    fn direction(&self, pair: Pair<'_, Rule>) -> Result<usize> {
        let m = self.m(&pair)?;
        let p = pair.into_inner().next().unwrap();
        one_based(&p, m, "base")
    }

    fn variable(&self, pair: Pair<'_, Rule>) -> Result<Atom> {
        Ok(match pair.as_rule() {
            Rule::jet => {
                let (a, i) = self.alpha_and_index(pair)?;
                Atom::jet(a, i)
            }
            _ => Atom::base(self.direction(pair)?),
        })
    }

    fn scalar(&self, f: Form, pair: &Pair<'_, Rule>) -> Result<Expr> {
        if f.is_zero() {
            return Ok(Expr::zero());
        }
        if f.degree() != Some(0) {
            return Err(at(pair, "expected a function, found a form of positive degree"));
        }
        Ok(f.coefficient(&crate::jetforms::Word::empty()))
    }

    fn expr(&self, pair: Pair<'_, Rule>) -> Result<Form> {
        let mut it = pair.into_inner().peekable();
        let negate = it.peek().is_some_and(|p| p.as_rule() == Rule::neg);
        if negate {
            it.next();
        }
        let mut acc = self.product(it.next().unwrap())?;
        if negate {
            acc = -acc;
        }
        while let Some(op) = it.next() {
            let rhs = self.product(it.next().unwrap())?;
            if op.as_str() == "+" {
                acc += &rhs;
            } else {
                acc -= &rhs;
            }
        }
        Ok(acc)
    }

    fn product(&self, pair: Pair<'_, Rule>) -> Result<Form> {
        let mut it = pair.into_inner();
        let mut acc = self.wedge(it.next().unwrap())?;
        while let Some(op) = it.next() {
            let rhs_pair = it.next().unwrap();
            let span = rhs_pair.clone();
            let rhs = self.wedge(rhs_pair)?;
            if op.as_str() == "*" {
                acc = acc.wedge(&rhs);
            } else {
                let d = self.scalar(rhs, &span)?;
                let inv = match d.as_constant() {
                    Some(c) if c.numer() == &BigInt::from(0) => return Err(at(&span, "division by zero")),
                    Some(c) => Expr::constant(c.recip()),
                    None => d.inverse().map_err(|e| at(&span, e.to_string()))?,
                };
                acc = acc.scale(&inv);
            }
        }
        Ok(acc)
    }

    fn wedge(&self, pair: Pair<'_, Rule>) -> Result<Form> {
        let mut it = pair.into_inner();
        let mut acc = self.unary(it.next().unwrap())?;
        for p in it {
            acc = acc.wedge(&self.unary(p)?);
        }
        Ok(acc)
    }

    fn unary(&self, pair: Pair<'_, Rule>) -> Result<Form> {
        let mut negs = 0;
        let mut out = Form::zero();
        for p in pair.into_inner() {
            match p.as_rule() {
                Rule::neg => negs += 1,
                _ => out = self.power(p)?,
            }
        }
        Ok(if negs % 2 == 1 { -out } else { out })
    }

    fn power(&self, pair: Pair<'_, Rule>) -> Result<Form> {
        let mut it = pair.into_inner();
        let base_pair = it.next().unwrap();
        let span = base_pair.clone();
        let base = self.primary(base_pair)?;
        let Some(exp) = it.next() else { return Ok(base) };
        let e: i32 = exp.as_str().parse().map_err(|_| at(&exp, "exponent out of range"))?;
        let s = self.scalar(base, &span)?;
        let v = s.pow(e).map_err(|err| at(&span, err.to_string()))?;
        Ok(Form::scalar(v))
    }

    fn primary(&self, pair: Pair<'_, Rule>) -> Result<Form> {
        Ok(match pair.as_rule() {
            Rule::int => {
                let v: BigInt = pair.as_str().parse().map_err(|_| at(&pair, "bad integer"))?;
                Form::scalar(Expr::constant(Q::from_integer(v)))
            }
            Rule::jet => {
                let (a, i) = self.alpha_and_index(pair)?;
                Form::scalar(Expr::u(a, i))
            }
            Rule::base => Form::scalar(Expr::x(self.direction(pair)?)),
            Rule::gamma => {
                let m = self.m(&pair)?;
                let mut it = pair.clone().into_inner();
                let h = one_based(&it.next().unwrap(), m, "base")?;
                let k = self.counts(it.next().unwrap())?;
                if k.length() < 2 {
                    return Err(at(&pair, "connection symbols need |K| >= 2"));
                }
                Form::scalar(Expr::atom(Atom::gamma(h, k)))
            }
            Rule::theta => {
                let (a, i) = self.alpha_and_index(pair)?;
                Form::theta(a, i)
            }
            Rule::du => {
                let n = self.n(&pair)?;
                let m = self.m(&pair)?;
                let (a, i) = self.alpha_and_index(pair)?;
                Form::du(a, &i, &Chart::new(m, n))
            }
            Rule::dx => Form::dx(self.direction(pair)?),
            Rule::w0 => omega0(self.m(&pair)?),
            Rule::wi => {
                let m = self.m(&pair)?;
                omega_basis(&[self.direction(pair)?], m)
            }
            Rule::diff => {
                let mut it = pair.clone().into_inner();
                let target_pair = it.next().unwrap();
                let tspan = target_pair.clone();
                let mut e = self.scalar(self.expr(target_pair)?, &tspan)?;
                for v in it {
                    e = e.partial(&self.variable(v)?);
                }
                Form::scalar(e)
            }
            Rule::expr => self.expr(pair)?,
            Rule::name => {
                let name = pair.as_str();
                if let Some(f) = self.scope.values.get(name) {
                    f.clone()
                } else if let Some(func) = self.scope.formals.get(name) {
                    let m = self.m(&pair)?;
                    Form::scalar(Expr::atom(Atom::formal(func.clone(), m)))
                } else {
                    return Err(Error::UnknownIdentifier(name.into()));
                }
            }
            r => unreachable!("unexpected rule {r:?}"),
        })
    }
}

/// Parses a value (function or form) in the plain-text syntax.
pub fn parse_form(text: &str, scope: &Scope) -> Result<Form> {
    let mut pairs = DslParser::parse(Rule::value, text).map_err(syntax_from_pest)?;
    let top = pairs.next().unwrap();
    let expr = top.into_inner().next().unwrap();
    Eval { scope }.expr(expr)
}

/// Parses a function in the plain-text syntax.
pub fn parse_expr(text: &str, scope: &Scope) -> Result<Expr> {
    let mut pairs = DslParser::parse(Rule::value, text).map_err(syntax_from_pest)?;
    let expr = pairs.next().unwrap().into_inner().next().unwrap();
    let span = expr.clone();
    let ev = Eval { scope };
    let f = ev.expr(expr)?;
    ev.scalar(f, &span)
}

pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    parse_problem_with(text, None)
}

/// Parses a problem file; `order_cap` overrides the default jet-order cap.
pub fn parse_problem_with(text: &str, order_cap: Option<usize>) -> Result<ProblemSpec> {
    let mut pairs = DslParser::parse(Rule::problem, text).map_err(syntax_from_pest)?;
    let mut scope = Scope::default();
    let mut lagrangians = BTreeMap::new();
    let mut forms = BTreeMap::new();
    let mut gamma_mode: Option<Connection> = None;
    let mut gamma_entries: Vec<(usize, usize, usize, Expr)> = Vec::new();
    let mut gamma_seen: Option<Pair<'_, Rule>> = None;

    let chart_of = |scope: &Scope, pair: &Pair<'_, Rule>| -> Result<Chart> {
        let (Some(m), Some(n)) = (scope.m, scope.n) else {
            return Err(at(pair, "`m` and `n` must be declared first"));
        };
        let c = Chart::new(m, n);
        Ok(match order_cap {
            Some(k) => c.with_order_cap(k),
            None => c,
        })
    };
    let claim = |scope: &Scope, lagr: &BTreeMap<String, LagrangianSpec>, pair: &Pair<'_, Rule>| -> Result<()> {
        let name = pair.as_str();
        if scope.formals.contains_key(name) || scope.values.contains_key(name) || lagr.contains_key(name) {
            return Err(Error::Duplicate(name.into()));
        }
        Ok(())
    };

    for stmt in pairs.next().unwrap().into_inner() {
        match stmt.as_rule() {
            Rule::dim_decl => {
                let mut it = stmt.clone().into_inner();
                let which = it.next().unwrap();
                let v = int_of(&it.next().unwrap())?;
                if v == 0 {
                    return Err(at(&stmt, "dimensions must be positive"));
                }
                let slot = if which.as_str() == "m" { &mut scope.m } else { &mut scope.n };
                if slot.is_some() {
                    return Err(Error::Duplicate(which.as_str().into()));
                }
                *slot = Some(v);
            }
            Rule::formal_decl => {
                let mut it = stmt.clone().into_inner();
                it.next();
                let name = it.next().unwrap();
                claim(&scope, &lagrangians, &name)?;
                let kind = it.next().unwrap();
                let func = if kind.as_rule() == Rule::kw_base {
                    FormalFunction::of_base(name.as_str())
                } else {
                    let k = int_of(&it.next().unwrap())?;
                    if it.next().is_some() {
                        FormalFunction::nonvanishing(name.as_str(), k)
                    } else {
                        FormalFunction::new(name.as_str(), k)
                    }
                };
                scope.formals.insert(name.as_str().into(), func);
            }
            Rule::lagrangian => {
                let chart = chart_of(&scope, &stmt)?;
                let mut it = stmt.clone().into_inner();
                let name = it.next().unwrap();
                claim(&scope, &lagrangians, &name)?;
                it.next();
                let k = int_of(&it.next().unwrap())?;
                let body = it.next().unwrap();
                let span = body.clone();
                let ev = Eval { scope: &scope };
                let l = ev.scalar(ev.expr(body)?, &span)?;
                let spec = LagrangianSpec::new(l.clone(), k, chart)?;
                scope.values.insert(name.as_str().into(), Form::scalar(l));
                lagrangians.insert(name.as_str().to_string(), spec);
            }
            Rule::form_decl => {
                chart_of(&scope, &stmt)?;
                let mut it = stmt.clone().into_inner();
                it.next();
                let name = it.next().unwrap();
                claim(&scope, &lagrangians, &name)?;
                let f = Eval { scope: &scope }.expr(it.next().unwrap())?;
                scope.values.insert(name.as_str().into(), f.clone());
                forms.insert(name.as_str().to_string(), f);
            }
            Rule::gamma_decl => {
                let chart = chart_of(&scope, &stmt)?;
                if gamma_seen.is_some() {
                    return Err(Error::Duplicate("Gamma".into()));
                }
                let kind = stmt.clone().into_inner().nth(1).unwrap();
                gamma_mode = Some(if kind.as_rule() == Rule::kw_flat {
                    Connection::flat(chart.m)
                } else {
                    Connection::symbolic(chart.m)
                });
                gamma_seen = Some(stmt);
            }
            Rule::gamma_entry => {
                let chart = chart_of(&scope, &stmt)?;
                if gamma_mode.is_some() {
                    return Err(Error::Duplicate("Gamma".into()));
                }
                let mut it = stmt.clone().into_inner();
                it.next();
                let i = one_based(&it.next().unwrap(), chart.m, "base")?;
                let j = one_based(&it.next().unwrap(), chart.m, "base")?;
                let k = one_based(&it.next().unwrap(), chart.m, "base")?;
                let body = it.next().unwrap();
                let span = body.clone();
                let ev = Eval { scope: &scope };
                let e = ev.scalar(ev.expr(body)?, &span)?;
                gamma_entries.push((i, j, k, e));
                gamma_seen = Some(stmt);
            }
            Rule::EOI => {}
            r => unreachable!("unexpected statement {r:?}"),
        }
    }

    let (Some(m), Some(n)) = (scope.m, scope.n) else {
        return Err(Error::Syntax {
            line: 1,
            column: 1,
            message: "missing `m` or `n` declaration".into(),
            expected: vec!["`m =` or `n =`".into()],
        });
    };
    let mut connections = BTreeMap::new();
    if let Some(c) = gamma_mode {
        connections.insert("Gamma".to_string(), c);
    } else if !gamma_entries.is_empty() {
        connections.insert("Gamma".to_string(), Connection::from_entries(m, &gamma_entries)?);
    }
    let mut chart = Chart::new(m, n);
    if let Some(k) = order_cap {
        chart = chart.with_order_cap(k);
    }
    Ok(ProblemSpec { chart, lagrangians, connections, formals: scope.formals, forms })
}

/// Parses a value rendered by the LaTeX renderer.
pub fn parse_latex(text: &str, scope: &Scope) -> Result<Form> {
    let mut pairs = DslParser::parse(Rule::latex, text).map_err(syntax_from_pest)?;
    let sum = pairs.next().unwrap().into_inner().next().unwrap();
    Latex { scope }.sum(sum)
}

struct Latex<'s> {
    scope: &'s Scope,
}

impl Latex<'_> {
    fn m(&self, pair: &Pair<'_, Rule>) -> Result<usize> {
        self.scope.m.ok_or_else(|| at(pair, "dimension `m` is required"))
    }

    fn dirs(&self, pair: Pair<'_, Rule>) -> Result<MultiIndex> {
        let m = self.m(&pair)?;
        let text = pair.into_inner().next().unwrap();
        let parts: Vec<usize> = if text.as_str().contains(',') {
            text.as_str().split(',').map(|s| s.parse().unwrap_or(0)).collect()
        } else {
            text.as_str().chars().map(|c| c.to_digit(10).unwrap_or(0) as usize).collect()
        };
        let mut idx = MultiIndex::zeros(m);
        for d in parts {
            if d == 0 || d > m {
                return Err(Error::DimensionMismatch { expected: m, found: d });
            }
            idx = idx.increment(d - 1);
        }
        Ok(idx)
    }

    fn upper(&self, pair: &Pair<'_, Rule>, bound: Option<usize>) -> Result<usize> {
        let bound = bound.ok_or_else(|| at(pair, "dimensions are required"))?;
        one_based(pair, bound, "index")
    }

    fn sum(&self, pair: Pair<'_, Rule>) -> Result<Form> {
        let mut it = pair.into_inner().peekable();
        let negate = it.peek().is_some_and(|p| p.as_rule() == Rule::neg);
        if negate {
            it.next();
        }
        let mut acc = self.term(it.next().unwrap())?;
        if negate {
            acc = -acc;
        }
        while let Some(op) = it.next() {
            let rhs = self.term(it.next().unwrap())?;
            if op.as_str() == "+" {
                acc += &rhs;
            } else {
                acc -= &rhs;
            }
        }
        Ok(acc)
    }

    fn term(&self, pair: Pair<'_, Rule>) -> Result<Form> {
        let mut acc = Form::scalar(Expr::one());
        for item in pair.into_inner() {
            acc = acc.wedge(&self.item(item)?);
        }
        Ok(acc)
    }

    fn atom(&self, pair: Pair<'_, Rule>) -> Result<Expr> {
        let m = self.m(&pair)?;
        Ok(match pair.as_rule() {
            Rule::lx_x => {
                let i = self.upper(&pair.clone().into_inner().next().unwrap(), Some(m))?;
                Expr::x(i)
            }
            Rule::lx_u => {
                let mut it = pair.clone().into_inner();
                let a = self.upper(&it.next().unwrap(), self.scope.n)?;
                let idx = match it.next() {
                    Some(s) => self.dirs(s)?,
                    None => MultiIndex::zeros(m),
                };
                Expr::u(a, idx)
            }
            Rule::lx_gamma => {
                let mut it = pair.clone().into_inner();
                let h = self.upper(&it.next().unwrap(), Some(m))?;
                Expr::atom(Atom::gamma(h, self.dirs(it.next().unwrap())?))
            }
            Rule::lx_formal => {
                let name = pair.clone().into_inner().next().unwrap();
                let func = self
                    .scope
                    .formals
                    .get(name.as_str())
                    .ok_or_else(|| Error::UnknownIdentifier(name.as_str().into()))?;
                Expr::atom(Atom::formal(func.clone(), m))
            }
            Rule::lx_partial => {
                let parts: Vec<_> = pair.into_inner().collect();
                let (target, vars) = parts.split_last().unwrap();
                let mut e = self.atom(target.clone())?;
                for v in vars {
                    let var = self.atom(v.clone())?;
                    let a = var.atoms().into_iter().next().unwrap();
                    e = e.partial(&a);
                }
                e
            }
            r => unreachable!("unexpected latex atom {r:?}"),
        })
    }

    fn item(&self, pair: Pair<'_, Rule>) -> Result<Form> {
        Ok(match pair.as_rule() {
            Rule::int => {
                let v: BigInt = pair.as_str().parse().map_err(|_| at(&pair, "bad integer"))?;
                Form::scalar(Expr::constant(Q::from_integer(v)))
            }
            Rule::lx_frac => {
                let mut it = pair.clone().into_inner();
                let n: BigInt = it.next().unwrap().as_str().parse().map_err(|_| at(&pair, "bad integer"))?;
                let d: BigInt = it.next().unwrap().as_str().parse().map_err(|_| at(&pair, "bad integer"))?;
                if d == BigInt::from(0) {
                    return Err(at(&pair, "division by zero"));
                }
                Form::scalar(Expr::constant(Q::new(n, d)))
            }
            Rule::lx_power => {
                let mut it = pair.clone().into_inner();
                let base = self.atom(it.next().unwrap())?;
                let e: i32 = it.next().unwrap().as_str().parse().map_err(|_| at(&pair, "bad exponent"))?;
                Form::scalar(base.pow(e).map_err(|err| at(&pair, err.to_string()))?)
            }
            Rule::lx_group => self.sum(pair.into_inner().next().unwrap())?,
            Rule::lx_theta => {
                let m = self.m(&pair)?;
                let mut it = pair.clone().into_inner();
                let a = self.upper(&it.next().unwrap(), self.scope.n)?;
                let idx = match it.next() {
                    Some(s) => self.dirs(s)?,
                    None => MultiIndex::zeros(m),
                };
                Form::theta(a, idx)
            }
            Rule::lx_dx => {
                let m = self.m(&pair)?;
                Form::dx(self.upper(&pair.into_inner().next().unwrap(), Some(m))?)
            }
            Rule::lx_omega => {
                let m = self.m(&pair)?;
                let i = int_of(&pair.clone().into_inner().next().unwrap())?;
                if i == 0 {
                    omega0(m)
                } else if i <= m {
                    omega_basis(&[i - 1], m)
                } else {
                    return Err(Error::DimensionMismatch { expected: m, found: i });
                }
            }
            _ => Form::scalar(self.atom(pair)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcore::qr;

    #[test]
    fn dirichlet_problem() {
        let p = parse_problem("m=2; n=1; L: order=1 1/2*(u[1;1,0]^2 + u[1;0,1]^2);").unwrap();
        let l = p.lagrangian("L").unwrap();
        let ux = Expr::u(0, MultiIndex::from_slice(&[1, 0]));
        let uy = Expr::u(0, MultiIndex::from_slice(&[0, 1]));
        let expect = (&ux * &ux + &uy * &uy).scale(&qr(1, 2));
        assert_eq!(l.l, expect);
        assert_eq!(l.k, 1);
    }

    #[test]
    fn gamma_declarations() {
        let p = parse_problem("m=2; n=1; Gamma = flat;").unwrap();
        assert!(p.connection().is_flat());
        let p = parse_problem("m=2; n=1; Gamma[1; 1,2] = x[1];").unwrap();
        assert_eq!(p.connection().coefficient(0, &MultiIndex::from_slice(&[1, 1])), Expr::x(0));
        assert!(matches!(
            parse_problem("m=2; n=1; Gamma = flat; Gamma = symbolic;"),
            Err(Error::Duplicate(_))
        ));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_problem("m=2; n=1; form a = u[1;1];"),
            Err(Error::DimensionMismatch { expected: 2, found: 1 })
        ));
        match parse_problem("m=2; n=1;\nL: order=1 u[1;1,0] +;") {
            Err(Error::Syntax { line, expected, .. }) => {
                assert_eq!(line, 2);
                assert!(!expected.is_empty());
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_problem("m=2; n=1; form a = q;"), Err(Error::UnknownIdentifier(_))));
        assert!(matches!(parse_problem("m=2; n=1; form a = x[1]; form a = x[2];"), Err(Error::Duplicate(_))));
    }

    #[test]
    fn forms_and_formals() {
        let p = parse_problem(
            "m=2; n=1; formal F order 2; formal c base;\n\
             form w = F * theta[1;0,0] /\\ w0 - diff(F, u[1;1,0], x[2]) * dx[1] + c^2/3;",
        )
        .unwrap();
        let w = p.form("w").unwrap();
        assert_eq!(w.bidegrees().len(), 3);
        let t = Form::theta(0, MultiIndex::zeros(2)).wedge(&omega0(2));
        let f = Expr::atom(Atom::formal(p.formals["F"].clone(), 2));
        assert_eq!(w.coefficient(t.terms().next().unwrap().0), f);
    }
}

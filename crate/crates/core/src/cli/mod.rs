//! Problem-file parser, command dispatcher and renderers behind the `lepage-kit` binary.
//!
//! Exit codes: 0 success, 1 input or domain error, 2 failed verification, 64 usage error.

pub mod parse;
pub mod render;

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::connection::{
    fit_coefficients, gamma_prolong, homotopy_defect, p_nabla_conjecture, projection_p_nabla,
    verify_appendix_a, CoefficientScheme, FitOutcome,
};
use crate::error::{Error, Result};
use crate::jetforms::{self, Form};
use crate::lepage::{self, Construction};
use crate::varops::{self, HomotopyKind};

pub use parse::{parse_expr, parse_form, parse_latex, parse_problem, parse_problem_with, ProblemSpec, Scope};
pub use render::{parse_structured, render_expr, render_form, Format};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "lepage-kit", version, about = "Exact variational-bicomplex computations on a jet chart")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Problem file in the lepage-kit DSL.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,
    /// Maximum jet order admitted in computations.
    #[arg(long, global = true)]
    pub order_cap: Option<usize>,
    /// Exit with status 2 when the computed defect or differential is nonzero.
    #[arg(long, global = true)]
    pub assert_zero: bool,
    /// Write the output here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Euler-Lagrange form of a Lagrangian.
    El {
        #[arg(long)]
        lagrangian: String,
    },
    /// A Lepage equivalent of a Lagrangian.
    Lepage {
        #[arg(long)]
        lagrangian: String,
        #[arg(long, value_enum, default_value = "principal")]
        variant: Variant,
    },
    /// Vainberg-Tonti Lagrangian of a source form.
    VainbergTonti {
        #[arg(long)]
        form: String,
    },
    /// Checks whether d(theta) vanishes exactly for null Lagrangians.
    Closure {
        #[arg(long)]
        lagrangian: String,
        #[arg(long, value_enum, default_value = "extend")]
        construction: ClosureConstruction,
    },
    /// Evaluates d_h P w + P d_h w - w for a homogeneous form.
    HomotopyCheck {
        #[arg(long)]
        form: String,
        #[arg(long, value_enum, default_value = "tilde")]
        operator: Operator,
    },
    /// Checks d_h^2 = 0, d_v^2 = 0 and d_h d_v + d_v d_h = 0 on a form.
    BicomplexCheck {
        #[arg(long)]
        form: String,
    },
    /// Prolonged connection coefficients up to a level.
    GammaProlong {
        #[arg(long, default_value_t = 3)]
        level: usize,
    },
    /// Coordinate table of the nonholonomic projection.
    PNabla {
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Conjectured covariant homotopy operator.
    Conjecture {
        #[command(subcommand)]
        action: ConjectureAction,
    },
    /// Recomputes the worked p = q = 1 example.
    AppendixA {
        #[arg(long, default_value_t = 2)]
        m: usize,
    },
}

#[derive(Subcommand, Debug)]
pub enum ConjectureAction {
    Defect {
        #[arg(long)]
        form: String,
        #[arg(long, value_enum, default_value = "printed")]
        scheme: Scheme,
    },
    Fit {
        /// Generator forms (repeatable).
        #[arg(long = "form", required = true)]
        forms: Vec<String>,
        /// Held-out forms for cross-validation (repeatable).
        #[arg(long = "held-out")]
        held_out: Vec<String>,
        #[arg(long, default_value_t = 1)]
        max_r: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Variant {
    Principal,
    Pc,
    Caratheodory,
    Caratheodory2,
    Fundamental,
    Extend,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ClosureConstruction {
    Extend,
    Principal,
    Pc,
    Fundamental,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Operator {
    Tilde,
    Hat,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Scheme {
    Printed,
    Factorial,
    Appendix,
}

/// What a command invocation produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

struct Ctx {
    format: Format,
    assert_zero: bool,
    m: usize,
    n: usize,
}

impl Ctx {
    fn form(&self, f: &Form) -> String {
        render_form(f, self.format, self.m, self.n)
    }

    fn report(&self, v: Value) -> String {
        render::Document::new(self.m, self.n, render::Body::Report(v)).to_json()
    }
}

fn form_value(f: &Form) -> Value {
    serde_json::to_value(render::form_dto(f)).expect("serializable")
}

fn load(cli: &Cli) -> Result<ProblemSpec> {
    let path = cli.spec.as_ref().ok_or_else(|| Error::Unsupported("this command needs --spec FILE".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Unsupported(format!("cannot read {}: {e}", path.display())))?;
    parse_problem_with(&text, cli.order_cap)
}

fn homogeneous(f: &Form) -> Result<(usize, usize)> {
    f.bidegree().ok_or_else(|| Error::domain("form must be nonzero and of a single bidegree"))
}

/// Parses arguments and runs one command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    Outcome { stdout: rendered, stderr: String::new(), code: EXIT_OK }
                }
                _ => Outcome { stdout: String::new(), stderr: rendered, code: EXIT_USAGE },
            };
        }
    };
    let (mut stdout, code) = match execute(&cli) {
        Ok(r) => r,
        Err(e) => return Outcome { stdout: String::new(), stderr: format!("error: {e}\n"), code: EXIT_ERROR },
    };
    if !stdout.ends_with('\n') {
        stdout.push('\n');
    }
    if let Some(path) = &cli.out {
        if let Err(e) = std::fs::write(path, &stdout) {
            return Outcome {
                stdout: String::new(),
                stderr: format!("error: cannot write {}: {e}\n", path.display()),
                code: EXIT_ERROR,
            };
        }
        stdout.clear();
    }
    Outcome { stdout, stderr: String::new(), code }
}

fn execute(cli: &Cli) -> Result<(String, i32)> {
    if let Command::AppendixA { m } = cli.command {
        return appendix(m, cli);
    }
    let spec = load(cli)?;
    let ctx = Ctx { format: cli.format, assert_zero: cli.assert_zero, m: spec.chart.m, n: spec.chart.n };
    let chart = &spec.chart;
    match &cli.command {
        Command::El { lagrangian } => {
            let el = spec.lagrangian(lagrangian)?.euler_lagrange()?;
            Ok((ctx.form(&el), EXIT_OK))
        }
        Command::Lepage { lagrangian, variant } => {
            let l = spec.lagrangian(lagrangian)?;
            let theta = match variant {
                Variant::Principal => lepage::principal_lepage(l)?,
                Variant::Pc => lepage::poincare_cartan(l)?,
                Variant::Caratheodory => lepage::caratheodory(l)?,
                Variant::Caratheodory2 => lepage::caratheodory2(l)?,
                Variant::Fundamental => lepage::fundamental_first_order(l)?,
                Variant::Extend => lepage::construct(l, Construction::Extend)?,
            };
            if ctx.format == Format::Structured {
                let rep = lepage::lepage_report(theta.clone(), l)?;
                let v = json!({
                    "command": "lepage",
                    "theta": form_value(&theta),
                    "one_contact_is_source": rep.one_contact_is_source,
                    "horizontal_part_equals_lambda": rep.horizontal_part_equals_lambda,
                });
                return Ok((ctx.report(v), EXIT_OK));
            }
            Ok((ctx.form(&theta), EXIT_OK))
        }
        Command::VainbergTonti { form } => {
            let vt = lepage::vainberg_tonti(spec.form(form)?, chart)?;
            Ok((render_expr(&vt.l, ctx.format, ctx.m, ctx.n), EXIT_OK))
        }
        Command::Closure { lagrangian, construction } => {
            let l = spec.lagrangian(lagrangian)?;
            let c = match construction {
                ClosureConstruction::Extend => Construction::Extend,
                ClosureConstruction::Principal => Construction::Principal,
                ClosureConstruction::Pc => Construction::PoincareCartan,
                ClosureConstruction::Fundamental => Construction::Fundamental,
            };
            let rep = lepage::closure_check(l, c)?;
            let closed = rep.d_theta_f.is_zero();
            let one_contact_ok = rep.d_theta_f.contact_component(1) == rep.el_form;
            let code = if rep.is_null != closed || (!closed && ctx.assert_zero) {
                EXIT_VERIFY_FAILED
            } else {
                EXIT_OK
            };
            if ctx.format == Format::Structured {
                let v = json!({
                    "command": "closure",
                    "null_lagrangian": rep.is_null,
                    "closed": closed,
                    "one_contact_part_equals_el": one_contact_ok,
                    "theta": form_value(&rep.theta),
                    "d_theta": form_value(&rep.d_theta_f),
                    "el": form_value(&rep.el_form),
                });
                return Ok((ctx.report(v), code));
            }
            let mut s = String::new();
            match (rep.is_null, closed) {
                (true, true) => writeln!(s, "NULL: d(thetaF) = 0").unwrap(),
                (false, false) => {
                    writeln!(s, "NOT NULL: d(thetaF) != 0").unwrap();
                    writeln!(s, "(d thetaF)^(1) = EL: {one_contact_ok}").unwrap();
                    writeln!(s, "EL = {}", ctx.form(&rep.el_form)).unwrap();
                }
                (true, false) => writeln!(s, "CLOSURE FAILS: null Lagrangian but d(thetaF) != 0").unwrap(),
                (false, true) => writeln!(s, "CLOSURE FAILS: d(thetaF) = 0 but EL != 0").unwrap(),
            }
            Ok((s, code))
        }
        Command::HomotopyCheck { form, operator } => {
            let w = spec.form(form)?;
            let (p, q) = homogeneous(w)?;
            let kind = match operator {
                Operator::Tilde => HomotopyKind::Tilde,
                Operator::Hat => HomotopyKind::Hat,
            };
            let mut lhs = varops::homotopy(kind, w, p, q, chart)?;
            lhs = jetforms::d_h(&lhs, chart)?;
            if q < chart.m {
                let dw = jetforms::d_h(w, chart)?;
                if !dw.is_zero() {
                    lhs += &varops::homotopy(kind, &dw, p, q + 1, chart)?;
                }
            }
            let defect = &lhs - w;
            let top = q == chart.m;
            let code = if defect.is_zero() || (top && !ctx.assert_zero) { EXIT_OK } else { EXIT_VERIFY_FAILED };
            if ctx.format == Format::Structured {
                let v = json!({ "command": "homotopy-check", "p": p, "q": q, "top_row": top, "defect": form_value(&defect) });
                return Ok((ctx.report(v), code));
            }
            let mut s = format!("bidegree ({p}, {q})\n");
            if top {
                writeln!(s, "top row: omega - d_h P omega = {}", ctx.form(&-defect)).unwrap();
            } else {
                writeln!(s, "d_h P omega + P d_h omega - omega = {}", ctx.form(&defect)).unwrap();
            }
            Ok((s, code))
        }
        Command::BicomplexCheck { form } => {
            let w = spec.form(form)?;
            let dh = jetforms::d_h(w, chart)?;
            let dv = jetforms::d_v(w, chart)?;
            let checks = [
                ("d_h d_h", jetforms::d_h(&dh, chart)?),
                ("d_v d_v", jetforms::d_v(&dv, chart)?),
                ("d_h d_v + d_v d_h", &jetforms::d_h(&dv, chart)? + &jetforms::d_v(&dh, chart)?),
            ];
            let ok = checks.iter().all(|(_, f)| f.is_zero());
            let code = if ok { EXIT_OK } else { EXIT_VERIFY_FAILED };
            if ctx.format == Format::Structured {
                let items: Vec<Value> = checks
                    .iter()
                    .map(|(name, f)| json!({ "law": name, "zero": f.is_zero(), "value": form_value(f) }))
                    .collect();
                return Ok((ctx.report(json!({ "command": "bicomplex-check", "laws": items })), code));
            }
            let mut s = String::new();
            for (name, f) in &checks {
                let tag = if f.is_zero() { "PASS" } else { "FAIL" };
                writeln!(s, "{tag}  {name} = {}", ctx.form(f)).unwrap();
            }
            Ok((s, code))
        }
        Command::GammaProlong { level } => {
            let c = spec.connection();
            let gp = gamma_prolong(&c, *level);
            let entries: Vec<_> = gp.entries().filter(|(_, e)| !e.is_zero()).collect();
            if ctx.format == Format::Structured {
                let items: Vec<Value> = entries
                    .iter()
                    .map(|((h, k), e)| {
                        json!({ "upper": h + 1, "lower": k.entries(), "value": render::expr_dto(e) })
                    })
                    .collect();
                return Ok((ctx.report(json!({ "command": "gamma-prolong", "level": level, "entries": items })), EXIT_OK));
            }
            let mut s = String::new();
            if entries.is_empty() {
                writeln!(s, "all G[h;K] vanish for 2 <= |K| <= {level}").unwrap();
            }
            for ((h, k), e) in entries {
                writeln!(s, "G[{};{}] = {}", h + 1, k, render_expr(e, ctx.format, ctx.m, ctx.n)).unwrap();
            }
            Ok((s, EXIT_OK))
        }
        Command::PNabla { k } => {
            let t = projection_p_nabla(&spec.connection(), *k, ctx.n)?;
            let left_inverse = t.is_left_inverse_of_inclusion();
            let code = if left_inverse { EXIT_OK } else { EXIT_VERIFY_FAILED };
            if ctx.format == Format::Structured {
                let rows: Vec<Value> = t
                    .entries()
                    .map(|(d, img)| {
                        let terms: Vec<Value> = img
                            .iter()
                            .map(|(h, e)| json!({ "direction": h.to_string(), "coefficient": render::expr_dto(e) }))
                            .collect();
                        json!({ "direction": d.to_string(), "image": terms })
                    })
                    .collect();
                let v = json!({ "command": "p-nabla", "k": k, "left_inverse_of_inclusion": left_inverse, "table": rows });
                return Ok((ctx.report(v), code));
            }
            let mut s = t.to_string();
            writeln!(s, "p o Ti = id: {left_inverse}").unwrap();
            Ok((s, code))
        }
        Command::Conjecture { action } => conjecture(action, &spec, &ctx),
        Command::AppendixA { .. } => unreachable!(),
    }
}

fn scheme_of(s: Scheme) -> CoefficientScheme {
    match s {
        Scheme::Printed => CoefficientScheme::Printed,
        Scheme::Factorial => CoefficientScheme::FactorialDenominator,
        Scheme::Appendix => CoefficientScheme::Appendix,
    }
}

fn conjecture(action: &ConjectureAction, spec: &ProblemSpec, ctx: &Ctx) -> Result<(String, i32)> {
    let chart = &spec.chart;
    let c = spec.connection();
    match action {
        ConjectureAction::Defect { form, scheme } => {
            let w = spec.form(form)?;
            let (p, q) = homogeneous(w)?;
            let sch = scheme_of(*scheme);
            let pw = p_nabla_conjecture(&c, w, p, q, &sch, chart)?;
            let d = homotopy_defect(&c, w, p, q, &sch, chart)?;
            let code = if d.is_zero() || !ctx.assert_zero { EXIT_OK } else { EXIT_VERIFY_FAILED };
            if ctx.format == Format::Structured {
                let v = json!({
                    "command": "conjecture-defect",
                    "p": p, "q": q,
                    "p_nabla": form_value(&pw),
                    "defect": form_value(&d),
                    "zero": d.is_zero(),
                });
                return Ok((ctx.report(v), code));
            }
            let s = format!("P_nabla(omega) = {}\ndefect = {}\n", ctx.form(&pw), ctx.form(&d));
            Ok((s, code))
        }
        ConjectureAction::Fit { forms, held_out, max_r } => {
            let gens = forms.iter().map(|f| spec.form(f).cloned()).collect::<Result<Vec<_>>>()?;
            let held = held_out.iter().map(|f| spec.form(f).cloned()).collect::<Result<Vec<_>>>()?;
            let (p, q) = homogeneous(&gens[0])?;
            let rep = fit_coefficients(&c, p, q, chart, *max_r, &gens, &held)?;
            let ok = matches!(rep.outcome, FitOutcome::Unique(_)) && rep.cross_validated != Some(false);
            let code = if ok { EXIT_OK } else { EXIT_VERIFY_FAILED };
            let mut s = String::new();
            let mut values = Vec::new();
            match &rep.outcome {
                FitOutcome::Unique(vals) => {
                    writeln!(s, "outcome: unique").unwrap();
                    for (u, v) in vals {
                        let shown = v.as_ref().map_or("unused".to_string(), |v| v.to_string());
                        writeln!(s, "c[q={}, r={}] = {shown}", u.q, u.r).unwrap();
                        values.push(json!({ "q": u.q, "r": u.r, "value": v.as_ref().map(|v| v.to_string()) }));
                    }
                }
                FitOutcome::Inconsistent => writeln!(s, "outcome: inconsistent").unwrap(),
                FitOutcome::NonUnique { rank, unknowns } => {
                    writeln!(s, "outcome: non-unique (rank {rank} of {unknowns})").unwrap()
                }
            }
            if let Some(cv) = rep.cross_validated {
                writeln!(s, "cross-validated: {cv}").unwrap();
            }
            if rep.truncated {
                writeln!(s, "note: terms beyond r = {max_r} were nonzero").unwrap();
            }
            if ctx.format == Format::Structured {
                let outcome = match rep.outcome {
                    FitOutcome::Unique(_) => "unique",
                    FitOutcome::Inconsistent => "inconsistent",
                    FitOutcome::NonUnique { .. } => "non-unique",
                };
                let v = json!({
                    "command": "conjecture-fit",
                    "outcome": outcome,
                    "values": values,
                    "cross_validated": rep.cross_validated,
                    "truncated": rep.truncated,
                });
                return Ok((ctx.report(v), code));
            }
            Ok((s, code))
        }
    }
}

fn appendix(m: usize, cli: &Cli) -> Result<(String, i32)> {
    let rep = verify_appendix_a(m)?;
    let code = if rep.all_pass() { EXIT_OK } else { EXIT_VERIFY_FAILED };
    if cli.format == Format::Structured {
        let lines: Vec<Value> = rep.lines.iter().map(|l| json!({ "line": l.name, "pass": l.pass })).collect();
        let v = json!({
            "command": "appendix-a",
            "lines": lines,
            "final_identity": rep.final_identity,
            "flat_specialization": rep.flat_specialization,
        });
        let doc = render::Document::new(m, 1, render::Body::Report(v));
        return Ok((doc.to_json(), code));
    }
    let tag = |b: bool| if b { "PASS" } else { "FAIL" };
    let mut s = format!("worked example p = q = 1, m = {m}, n = 1\n");
    for l in &rep.lines {
        writeln!(s, "{}  {}", tag(l.pass), l.name).unwrap();
    }
    writeln!(s, "{}  final identity", tag(rep.final_identity)).unwrap();
    writeln!(s, "{}  flat specialization", tag(rep.flat_specialization)).unwrap();
    Ok((s, code))
}

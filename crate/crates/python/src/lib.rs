//! Python bindings. Indices follow the DSL: dependent variables and directions are 1-based.

use lepage_kit::cli::parse::{parse_expr, parse_form, parse_problem, ProblemSpec, Scope};
use lepage_kit::cli::render::{latex_expr, latex_form, parse_structured, structured_expr, structured_form, text_expr, text_form};
use lepage_kit::connection::{self, CoefficientScheme, Connection};
use lepage_kit::jetforms::{self, Form};
use lepage_kit::lepage::{self, Construction, LagrangianSpec, RowOperators};
use lepage_kit::symcore::{self, Chart, Expr, MultiIndex};
use lepage_kit::varops::{self, HomotopyKind};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: lepage_kit::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn zero_based(i: usize, bound: usize, what: &str) -> PyResult<usize> {
    if i == 0 || i > bound {
        return Err(PyValueError::new_err(format!("{what} {i} is out of range 1..={bound}")));
    }
    Ok(i - 1)
}

fn kind(operator: &str) -> PyResult<HomotopyKind> {
    match operator {
        "tilde" => Ok(HomotopyKind::Tilde),
        "hat" => Ok(HomotopyKind::Hat),
        other => Err(PyValueError::new_err(format!("unknown operator {other:?}; expected 'tilde' or 'hat'"))),
    }
}

#[pyclass(name = "Expr", module = "lepage_kit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyExpr {
    inner: Expr,
    chart: Chart,
}

#[pymethods]
impl PyExpr {
    #[staticmethod]
    #[pyo3(signature = (text, m, n))]
    fn parse(text: &str, m: usize, n: usize) -> PyResult<Self> {
        let inner = parse_expr(text, &Scope::new(m, n)).map_err(err)?;
        Ok(PyExpr { inner, chart: Chart::new(m, n) })
    }

    fn text(&self) -> String {
        text_expr(&self.inner)
    }

    fn latex(&self) -> String {
        latex_expr(&self.inner)
    }

    fn structured(&self) -> String {
        structured_expr(&self.inner, self.chart.m, self.chart.n)
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    /// Total derivative `d_i`.
    fn total_derivative(&self, i: usize) -> PyResult<Self> {
        let i = zero_based(i, self.chart.m, "direction")?;
        let inner = self.inner.total_derivative(i, &self.chart).map_err(err)?;
        Ok(PyExpr { inner, chart: self.chart })
    }

    fn __add__(&self, other: &Self) -> Self {
        PyExpr { inner: &self.inner + &other.inner, chart: self.chart }
    }

    fn __sub__(&self, other: &Self) -> Self {
        PyExpr { inner: &self.inner - &other.inner, chart: self.chart }
    }

    fn __mul__(&self, other: &Self) -> Self {
        PyExpr { inner: &self.inner * &other.inner, chart: self.chart }
    }

    fn __neg__(&self) -> Self {
        PyExpr { inner: -&self.inner, chart: self.chart }
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __str__(&self) -> String {
        self.text()
    }

    fn __repr__(&self) -> String {
        format!("Expr({:?})", self.text())
    }
}

#[pyclass(name = "Form", module = "lepage_kit", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyForm {
    inner: Form,
    chart: Chart,
}

impl PyForm {
    fn with(&self, inner: Form) -> Self {
        PyForm { inner, chart: self.chart }
    }
}

#[pymethods]
impl PyForm {
    #[staticmethod]
    #[pyo3(signature = (text, m, n))]
    fn parse(text: &str, m: usize, n: usize) -> PyResult<Self> {
        let inner = parse_form(text, &Scope::new(m, n)).map_err(err)?;
        Ok(PyForm { inner, chart: Chart::new(m, n) })
    }

    #[staticmethod]
    #[pyo3(signature = (json, m, n))]
    fn from_structured(json: &str, m: usize, n: usize) -> PyResult<Self> {
        let inner = parse_structured(json).map_err(err)?;
        Ok(PyForm { inner, chart: Chart::new(m, n) })
    }

    fn text(&self) -> String {
        text_form(&self.inner, self.chart.m)
    }

    fn latex(&self) -> String {
        latex_form(&self.inner, self.chart.m)
    }

    fn structured(&self) -> String {
        structured_form(&self.inner, self.chart.m, self.chart.n)
    }

    fn is_zero(&self) -> bool {
        self.inner.is_zero()
    }

    /// Sorted list of `(p, q)` contact bidegrees present.
    fn bidegrees(&self) -> Vec<(usize, usize)> {
        self.inner.bidegrees().into_iter().collect()
    }

    /// The `p`-contact component.
    fn contact_component(&self, p: usize) -> Self {
        self.with(self.inner.contact_component(p))
    }

    fn wedge(&self, other: &Self) -> Self {
        self.with(self.inner.wedge(&other.inner))
    }

    fn d_h(&self) -> PyResult<Self> {
        Ok(self.with(jetforms::d_h(&self.inner, &self.chart).map_err(err)?))
    }

    fn d_v(&self) -> PyResult<Self> {
        Ok(self.with(jetforms::d_v(&self.inner, &self.chart).map_err(err)?))
    }

    fn d(&self) -> PyResult<Self> {
        Ok(self.with(jetforms::d_full(&self.inner, &self.chart).map_err(err)?))
    }

    /// `P̃ω` (operator "tilde") or `P̂ω` ("hat") for a form of bidegree `(p, q)`.
    #[pyo3(signature = (p, q, operator = "tilde"))]
    fn homotopy(&self, p: usize, q: usize, operator: &str) -> PyResult<Self> {
        let out = varops::homotopy(kind(operator)?, &self.inner, p, q, &self.chart).map_err(err)?;
        Ok(self.with(out))
    }

    fn source_residue(&self) -> PyResult<Self> {
        Ok(self.with(varops::source_residue(&self.inner, &self.chart).map_err(err)?))
    }

    fn __add__(&self, other: &Self) -> Self {
        self.with(&self.inner + &other.inner)
    }

    fn __sub__(&self, other: &Self) -> Self {
        self.with(&self.inner - &other.inner)
    }

    fn __neg__(&self) -> Self {
        self.with(-&self.inner)
    }

    fn __mul__(&self, other: &PyExpr) -> Self {
        self.with(self.inner.scale(&other.inner))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __str__(&self) -> String {
        self.text()
    }

    fn __repr__(&self) -> String {
        format!("Form({:?})", self.text())
    }
}

/// A parsed problem file: chart, Lagrangians, forms and an optional connection.
#[pyclass(name = "Problem", module = "lepage_kit", frozen, skip_from_py_object)]
struct PyProblem {
    inner: ProblemSpec,
}

impl PyProblem {
    fn lagrangian(&self, name: &str) -> PyResult<&LagrangianSpec> {
        self.inner.lagrangian(name).map_err(err)
    }

    fn form_of(&self, inner: Form) -> PyForm {
        PyForm { inner, chart: self.inner.chart }
    }
}

#[pymethods]
impl PyProblem {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(PyProblem { inner: parse_problem(text).map_err(err)? })
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.chart.m
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.chart.n
    }

    fn lagrangians(&self) -> Vec<String> {
        self.inner.lagrangians.keys().cloned().collect()
    }

    fn forms(&self) -> Vec<String> {
        self.inner.forms.keys().cloned().collect()
    }

    fn form(&self, name: &str) -> PyResult<PyForm> {
        Ok(self.form_of(self.inner.form(name).map_err(err)?.clone()))
    }

    fn lagrangian_expr(&self, name: &str) -> PyResult<PyExpr> {
        Ok(PyExpr { inner: self.lagrangian(name)?.l.clone(), chart: self.inner.chart })
    }

    fn euler_lagrange(&self, name: &str) -> PyResult<PyForm> {
        Ok(self.form_of(self.lagrangian(name)?.euler_lagrange().map_err(err)?))
    }

    /// Variants: principal, pc, caratheodory, caratheodory2, fundamental, extend.
    #[pyo3(signature = (name, variant = "principal"))]
    fn lepage(&self, name: &str, variant: &str) -> PyResult<PyForm> {
        let spec = self.lagrangian(name)?;
        let out = match variant {
            "principal" => lepage::principal_lepage(spec),
            "pc" => lepage::poincare_cartan(spec),
            "caratheodory" => lepage::caratheodory(spec),
            "caratheodory2" => lepage::caratheodory2(spec),
            "fundamental" => lepage::fundamental_first_order(spec),
            "extend" => lepage::principal_lepage(spec)
                .and_then(|t| lepage::extend(&t, &spec.chart, &RowOperators::default())),
            other => return Err(PyValueError::new_err(format!("unknown variant {other:?}"))),
        };
        Ok(self.form_of(out.map_err(err)?))
    }

    /// Closure check; returns a dict with `is_null`, `d_theta_zero`, `one_contact_is_el`.
    #[pyo3(signature = (name, construction = "extend"))]
    fn closure<'py>(&self, py: Python<'py>, name: &str, construction: &str) -> PyResult<Bound<'py, PyDict>> {
        let c = match construction {
            "extend" => Construction::Extend,
            "principal" => Construction::Principal,
            "pc" => Construction::PoincareCartan,
            "fundamental" => Construction::Fundamental,
            other => return Err(PyValueError::new_err(format!("unknown construction {other:?}"))),
        };
        let rep = lepage::closure_check(self.lagrangian(name)?, c).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("is_null", rep.is_null)?;
        d.set_item("d_theta_zero", rep.d_theta_f.is_zero())?;
        d.set_item("one_contact_is_el", rep.d_theta_f.contact_component(1) == rep.el_form)?;
        d.set_item("theta", self.form_of(rep.theta))?;
        Ok(d)
    }

    /// `d_h P_∇ ω + P_∇ d_h ω − ω` with the problem's connection; schemes: printed, factorial, appendix.
    #[pyo3(signature = (form, p, q, scheme = "printed"))]
    fn conjecture_defect(&self, form: &str, p: usize, q: usize, scheme: &str) -> PyResult<PyForm> {
        let scheme = match scheme {
            "printed" => CoefficientScheme::Printed,
            "factorial" => CoefficientScheme::FactorialDenominator,
            "appendix" => CoefficientScheme::Appendix,
            other => return Err(PyValueError::new_err(format!("unknown scheme {other:?}"))),
        };
        let w = self.inner.form(form).map_err(err)?;
        let conn: Connection = self.inner.connection();
        let d = connection::homotopy_defect(&conn, w, p, q, &scheme, &self.inner.chart).map_err(err)?;
        Ok(self.form_of(d))
    }
}

#[pyfunction]
fn weighted_binomial_check(index: Vec<u8>, p: usize) -> (bool, String, String) {
    let c = symcore::weighted_binomial_check(&MultiIndex::from_slice(&index), p);
    (c.equal, c.lhs.to_string(), c.rhs.to_string())
}

/// Recomputes the worked `p = q = 1` example; returns a dict of per-line results.
#[pyfunction]
fn verify_worked_example<'py>(py: Python<'py>, m: usize) -> PyResult<Bound<'py, PyDict>> {
    let rep = connection::verify_appendix_a(m).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("m", rep.m)?;
    let lines: Vec<(String, bool)> = rep.lines.iter().map(|l| (l.name.to_string(), l.pass)).collect();
    d.set_item("lines", lines)?;
    d.set_item("final_identity", rep.final_identity)?;
    d.set_item("flat_specialization", rep.flat_specialization)?;
    d.set_item("all_pass", rep.all_pass())?;
    Ok(d)
}

/// Runs the command-line interface in-process; returns `(stdout, stderr, exit_code)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (String, String, i32) {
    let out = lepage_kit::cli::run(std::iter::once("lepage-kit".to_string()).chain(args));
    (out.stdout, out.stderr, out.code)
}

#[pymodule]
#[pyo3(name = "lepage_kit")]
fn lepage_kit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpr>()?;
    m.add_class::<PyForm>()?;
    m.add_class::<PyProblem>()?;
    m.add_function(wrap_pyfunction!(weighted_binomial_check, m)?)?;
    m.add_function(wrap_pyfunction!(verify_worked_example, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}

//! Scalar fields on a planar chart: parsing, evaluation and exact symbolic
//! differentiation of expressions in the two chart variables `x`, `y`.
//!
//! Every geometric datum of the toolkit (metric factors, Killing length,
//! bundle curvature, prescribed mean curvature, graph functions) is carried
//! by a [`ScalarField`]. Fields are immutable after construction and cheap
//! to clone, so they can be evaluated concurrently.

mod calculus;
mod parser;
mod program;

pub use parser::ParseError;
pub use program::Program;

use std::fmt;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

/// Chart variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

/// Unary functions of the expression language. `Sign` is not part of the
/// input grammar; it only arises as the derivative of `Abs` (and is accepted
/// back by the parser so that printed derivatives re-parse).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Atan,
    Abs,
    Sign,
}

impl Func {
    pub(crate) fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Atan => "atan",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            "atan" => Func::Atan,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            _ => return None,
        })
    }
}

/// Expression tree over `x`, `y`, constants and the operators of the grammar.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
}

/// Errors raised when an expression is evaluated outside its real domain.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of non-positive value {0}")]
    LogDomain(f64),
    #[error("sqrt of negative value {0}")]
    SqrtDomain(f64),
    #[error("power {base}^{exponent} outside the real domain")]
    PowDomain { base: f64, exponent: f64 },
    #[error("tan evaluated at a pole")]
    TanPole,
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

fn is_integer(v: f64) -> bool {
    v.fract() == 0.0 && v.abs() < 1e15
}

pub(crate) fn eval_pow(base: f64, exponent: f64) -> Result<f64, EvalError> {
    // a^b with non-integer b demands a > 0: the geometric data the toolkit
    // carries (conformal factors, Killing lengths) are positive fields, and
    // complex or NaN escapes would poison every downstream quadrature.
    if base > 0.0 {
        return Ok(base.powf(exponent));
    }
    if is_integer(exponent) {
        if base == 0.0 && exponent < 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        let e32 = exponent.clamp(-1e9, 1e9) as i32;
        return Ok(base.powi(e32));
    }
    if base == 0.0 && exponent > 0.0 {
        return Ok(0.0);
    }
    Err(EvalError::PowDomain { base, exponent })
}

pub(crate) fn eval_func(f: Func, v: f64) -> Result<f64, EvalError> {
    let out = match f {
        Func::Sin => v.sin(),
        Func::Cos => v.cos(),
        Func::Tan => {
            let c = v.cos();
            if c == 0.0 {
                return Err(EvalError::TanPole);
            }
            v.sin() / c
        }
        Func::Exp => v.exp(),
        Func::Log => {
            if v <= 0.0 {
                return Err(EvalError::LogDomain(v));
            }
            v.ln()
        }
        Func::Sqrt => {
            if v < 0.0 {
                return Err(EvalError::SqrtDomain(v));
            }
            v.sqrt()
        }
        Func::Tanh => v.tanh(),
        Func::Atan => v.atan(),
        Func::Abs => v.abs(),
        Func::Sign => {
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
    };
    if out.is_finite() {
        Ok(out)
    } else {
        Err(EvalError::NonFinite)
    }
}

impl Expr {
    fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(c) => *c,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            Expr::Neg(u) => -u.eval(x, y)?,
            Expr::Add(u, v) => u.eval(x, y)? + v.eval(x, y)?,
            Expr::Sub(u, v) => u.eval(x, y)? - v.eval(x, y)?,
            Expr::Mul(u, v) => u.eval(x, y)? * v.eval(x, y)?,
            Expr::Div(u, v) => {
                let d = v.eval(x, y)?;
                if d == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                u.eval(x, y)? / d
            }
            Expr::Pow(u, v) => eval_pow(u.eval(x, y)?, v.eval(x, y)?)?,
            Expr::Call(f, u) => eval_func(*f, u.eval(x, y)?)?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(..) | Expr::Var(..) | Expr::Call(..) => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
        let prec = self.precedence();
        let need = prec < parent;
        if need {
            write!(f, "(")?;
        }
        match self {
            Expr::Num(c) => {
                if *c < 0.0 || !c.is_finite() {
                    write!(f, "({c})")?;
                } else {
                    write!(f, "{c}")?;
                }
            }
            Expr::Var(Var::X) => write!(f, "x")?,
            Expr::Var(Var::Y) => write!(f, "y")?,
            Expr::Neg(u) => {
                write!(f, "-")?;
                u.fmt_prec(f, 4)?;
            }
            Expr::Add(u, v) => {
                u.fmt_prec(f, 1)?;
                write!(f, "+")?;
                v.fmt_prec(f, 2)?;
            }
            Expr::Sub(u, v) => {
                u.fmt_prec(f, 1)?;
                write!(f, "-")?;
                v.fmt_prec(f, 2)?;
            }
            Expr::Mul(u, v) => {
                u.fmt_prec(f, 2)?;
                write!(f, "*")?;
                v.fmt_prec(f, 3)?;
            }
            Expr::Div(u, v) => {
                u.fmt_prec(f, 2)?;
                write!(f, "/")?;
                v.fmt_prec(f, 3)?;
            }
            Expr::Pow(u, v) => {
                u.fmt_prec(f, 5)?;
                write!(f, "^")?;
                v.fmt_prec(f, 4)?;
            }
            Expr::Call(func, u) => {
                write!(f, "{}(", func.name())?;
                u.fmt_prec(f, 0)?;
                write!(f, ")")?;
            }
        }
        if need {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// A parsed analytic expression in `(x, y)` together with its source text.
///
/// Evaluation is pure and deterministic; exact partial derivatives are
/// available through [`ScalarField::differentiate`].
#[derive(Clone)]
pub struct ScalarField {
    source: String,
    ast: Arc<Expr>,
    program: Arc<OnceLock<Program>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.source)
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)
    }
}

impl ScalarField {
    /// Parse an expression following the toolkit grammar.
    pub fn parse(text: &str) -> Result<ScalarField, ParseError> {
        let ast = parser::parse(text, false)?;
        Ok(ScalarField::from_ast(ast))
    }

    /// Parse a radial expression: the identifier `rho` (or `r`) is accepted
    /// as an alias of the first chart variable, so one-variable radial data
    /// can be written naturally.
    pub fn parse_radial(text: &str) -> Result<ScalarField, ParseError> {
        let ast = parser::parse(text, true)?;
        Ok(ScalarField::from_ast(ast))
    }

    pub(crate) fn from_ast(ast: Arc<Expr>) -> ScalarField {
        let ast = calculus::simplify(&ast);
        ScalarField {
            source: ast.to_string(),
            ast,
            program: Arc::new(OnceLock::new()),
        }
    }

    pub fn constant(c: f64) -> ScalarField {
        ScalarField::from_ast(Arc::new(Expr::Num(c)))
    }

    pub fn zero() -> ScalarField {
        ScalarField::constant(0.0)
    }

    pub fn one() -> ScalarField {
        ScalarField::constant(1.0)
    }

    pub fn var(v: Var) -> ScalarField {
        ScalarField::from_ast(Arc::new(Expr::Var(v)))
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    /// Value of the constant field, if the expression folded to a constant.
    pub fn as_constant(&self) -> Option<f64> {
        match *self.ast {
            Expr::Num(c) => Some(c),
            _ => None,
        }
    }

    fn prog(&self) -> &Program {
        self.program.get_or_init(|| Program::compile(&self.ast))
    }

    /// Evaluate at a chart point.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.prog().eval(x, y)
    }

    /// Evaluate, panicking on domain errors. Reserved for internal fields
    /// that are smooth by construction on the points being sampled.
    pub fn eval_unchecked(&self, x: f64, y: f64) -> f64 {
        match self.prog().eval(x, y) {
            Ok(v) => v,
            Err(e) => panic!("field `{}` failed at ({x}, {y}): {e}", self.source),
        }
    }

    /// Tree-walking evaluation; used by tests to cross-check the compiled
    /// program.
    pub fn eval_ast(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        self.ast.eval(x, y)
    }

    /// Exact symbolic partial derivative.
    pub fn differentiate(&self, var: Var) -> ScalarField {
        ScalarField::from_ast(calculus::differentiate(&self.ast, var))
    }

    // ----- symbolic composition helpers -----

    pub fn add(&self, rhs: &ScalarField) -> ScalarField {
        ScalarField::from_ast(Arc::new(Expr::Add(self.ast.clone(), rhs.ast.clone())))
    }

    pub fn sub(&self, rhs: &ScalarField) -> ScalarField {
        ScalarField::from_ast(Arc::new(Expr::Sub(self.ast.clone(), rhs.ast.clone())))
    }

    pub fn mul(&self, rhs: &ScalarField) -> ScalarField {
        ScalarField::from_ast(Arc::new(Expr::Mul(self.ast.clone(), rhs.ast.clone())))
    }

    pub fn div(&self, rhs: &ScalarField) -> ScalarField {
        ScalarField::from_ast(Arc::new(Expr::Div(self.ast.clone(), rhs.ast.clone())))
    }

    pub fn neg(&self) -> ScalarField {
        ScalarField::from_ast(Arc::new(Expr::Neg(self.ast.clone())))
    }

    pub fn sqrt(&self) -> ScalarField {
        ScalarField::from_ast(Arc::new(Expr::Call(Func::Sqrt, self.ast.clone())))
    }

    pub fn powi(&self, n: i32) -> ScalarField {
        ScalarField::from_ast(Arc::new(Expr::Pow(
            self.ast.clone(),
            Arc::new(Expr::Num(n as f64)),
        )))
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        self.mul(&ScalarField::constant(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(text: &str) -> ScalarField {
        ScalarField::parse(text).unwrap()
    }

    #[test]
    fn conformal_factor_of_unit_sphere_base_at_origin() {
        // conformal factor of M^2(1) evaluates to 1 at the origin
        let lam = f("1/(1+(x^2+y^2)/4)");
        assert_eq!(lam.eval(0.0, 0.0).unwrap(), 1.0);
        assert!((lam.eval(1.0, 1.0).unwrap() - 1.0 / 1.5).abs() < 1e-15);
    }

    #[test]
    fn zero_field_has_zero_partials() {
        let z = f("0");
        let zx = z.differentiate(Var::X);
        let zy = z.differentiate(Var::Y);
        for &(x, y) in &[(0.0, 0.0), (1.3, -0.4), (10.0, 3.0)] {
            assert_eq!(zx.eval(x, y).unwrap(), 0.0);
            assert_eq!(zy.eval(x, y).unwrap(), 0.0);
        }
    }

    #[test]
    fn sin_exp_value_and_partial() {
        let g = f("sin(x)*exp(y)");
        assert_eq!(g.eval(0.0, 1.0).unwrap(), 0.0);
        let gx = g.differentiate(Var::X);
        assert!((gx.eval(0.0, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-14);
        // cross-check against central finite differences
        let h = 1e-5;
        let fd = (g.eval(h, 1.0).unwrap() - g.eval(-h, 1.0).unwrap()) / (2.0 * h);
        let sym = gx.eval(0.0, 1.0).unwrap();
        assert!((sym - fd).abs() / (1.0 + sym.abs()) < 1e-6);
    }

    #[test]
    fn polynomial_derivative() {
        let p = f("x^2+y");
        let px = p.differentiate(Var::X);
        for &(x, y) in &[(0.0, 0.0), (1.5, 2.0), (-3.0, 0.7)] {
            assert!((px.eval(x, y).unwrap() - 2.0 * x).abs() < 1e-13);
        }
    }

    #[test]
    fn log_derivative() {
        let l = f("log(y)");
        let ly = l.differentiate(Var::Y);
        assert!((ly.eval(0.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mixed_partials_commute() {
        let g = f("exp(x*y)");
        let gxy = g.differentiate(Var::X).differentiate(Var::Y);
        let gyx = g.differentiate(Var::Y).differentiate(Var::X);
        let a = gxy.eval(1.0, 1.0).unwrap();
        let b = gyx.eval(1.0, 1.0).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn pow_domain() {
        let p = f("x^0.5");
        assert!(matches!(
            p.eval(-1.0, 0.0),
            Err(EvalError::PowDomain { .. })
        ));
        let q = f("x^2");
        assert_eq!(q.eval(-2.0, 0.0).unwrap(), 4.0);
        let r = f("x^(0-2)");
        assert_eq!(r.eval(-2.0, 0.0).unwrap(), 0.25);
        assert!(matches!(r.eval(0.0, 0.0), Err(EvalError::DivisionByZero)));
    }

    #[test]
    fn named_constants() {
        let c = f("pi");
        assert_eq!(c.eval(0.0, 0.0).unwrap(), std::f64::consts::PI);
        let e = f("e^x");
        assert!((e.eval(2.0, 0.0).unwrap() - 2.0f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn unary_minus_binds_before_power() {
        // grammar: factor := unary ('^' factor)?, so -x^2 parses as (-x)^2
        let p = f("-x^2");
        assert_eq!(p.eval(3.0, 0.0).unwrap(), 9.0);
    }

    #[test]
    fn print_parse_roundtrip() {
        let cases = [
            "1/(1+(x^2+y^2)/4)",
            "sin(x)*exp(y)-tan(x/(2+y^2))",
            "-x^2+3*y^2-abs(x*y)",
            "sqrt(1+x^2)^(y/3)",
            "x*(y-2)/(x+y+10)",
        ];
        for src in cases {
            let a = f(src);
            let b = f(&a.to_string());
            for &(x, y) in &[(0.1, 0.2), (1.0, -0.5), (2.0, 3.0)] {
                let va = a.eval(x, y).unwrap();
                let vb = b.eval(x, y).unwrap();
                assert!((va - vb).abs() <= 1e-15 * (1.0 + va.abs()), "{src}: {va} vs {vb}");
            }
        }
    }

    #[test]
    fn compiled_matches_ast_walk() {
        let g = f("sin(x)*exp(y) + sqrt(1+x^2*y^2) - atan(x-y)/(2+cos(y))");
        for i in 0..50 {
            let x = -2.0 + 0.08 * i as f64;
            let y = 1.7 - 0.06 * i as f64;
            let a = g.eval(x, y).unwrap();
            let b = g.eval_ast(x, y).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn radial_alias() {
        let lam = ScalarField::parse_radial("1/(1-rho^2/4)").unwrap();
        assert!((lam.eval(1.0, 0.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
    }
}

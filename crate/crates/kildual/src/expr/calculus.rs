//! Symbolic differentiation and lightweight simplification.
//!
//! Simplification is deliberately shallow: constant folding plus the
//! identities that keep derivative trees from exploding (0+u, 1*u, 0*u,
//! u^1, u^0). Anything fancier buys little for numerical evaluation.

use std::sync::Arc;

use super::{Expr, Func, Var};

fn num(c: f64) -> Arc<Expr> {
    Arc::new(Expr::Num(c))
}

fn add(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    simplify_node(Expr::Add(a, b))
}

fn sub(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    simplify_node(Expr::Sub(a, b))
}

fn mul(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    simplify_node(Expr::Mul(a, b))
}

fn div(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    simplify_node(Expr::Div(a, b))
}

fn pow(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
    simplify_node(Expr::Pow(a, b))
}

fn neg(a: Arc<Expr>) -> Arc<Expr> {
    simplify_node(Expr::Neg(a))
}

fn call(f: Func, a: Arc<Expr>) -> Arc<Expr> {
    simplify_node(Expr::Call(f, a))
}

/// One-level simplification of a freshly built node. Children are assumed
/// to be already simplified.
fn simplify_node(e: Expr) -> Arc<Expr> {
    match e {
        Expr::Neg(ref u) => match &**u {
            Expr::Num(c) => num(-c),
            Expr::Neg(inner) => inner.clone(),
            _ => Arc::new(e),
        },
        Expr::Add(ref a, ref b) => match (&**a, &**b) {
            (Expr::Num(x), Expr::Num(y)) if (x + y).is_finite() => num(x + y),
            (Expr::Num(z), _) if *z == 0.0 => b.clone(),
            (_, Expr::Num(z)) if *z == 0.0 => a.clone(),
            _ => Arc::new(e),
        },
        Expr::Sub(ref a, ref b) => match (&**a, &**b) {
            (Expr::Num(x), Expr::Num(y)) if (x - y).is_finite() => num(x - y),
            (_, Expr::Num(z)) if *z == 0.0 => a.clone(),
            (Expr::Num(z), _) if *z == 0.0 => neg(b.clone()),
            _ => Arc::new(e),
        },
        Expr::Mul(ref a, ref b) => match (&**a, &**b) {
            (Expr::Num(x), Expr::Num(y)) if (x * y).is_finite() => num(x * y),
            (Expr::Num(z), _) | (_, Expr::Num(z)) if *z == 0.0 => num(0.0),
            (Expr::Num(o), _) if *o == 1.0 => b.clone(),
            (_, Expr::Num(o)) if *o == 1.0 => a.clone(),
            (Expr::Num(o), _) if *o == -1.0 => neg(b.clone()),
            (_, Expr::Num(o)) if *o == -1.0 => neg(a.clone()),
            _ => Arc::new(e),
        },
        Expr::Div(ref a, ref b) => match (&**a, &**b) {
            (Expr::Num(x), Expr::Num(y)) if *y != 0.0 && (x / y).is_finite() => num(x / y),
            (Expr::Num(z), _) if *z == 0.0 => num(0.0),
            (_, Expr::Num(o)) if *o == 1.0 => a.clone(),
            _ => Arc::new(e),
        },
        Expr::Pow(ref a, ref b) => match (&**a, &**b) {
            (_, Expr::Num(o)) if *o == 1.0 => a.clone(),
            (_, Expr::Num(z)) if *z == 0.0 => num(1.0),
            (Expr::Num(x), Expr::Num(y)) => match super::eval_pow(*x, *y) {
                Ok(v) if v.is_finite() => num(v),
                _ => Arc::new(e),
            },
            _ => Arc::new(e),
        },
        Expr::Call(f, ref u) => match &**u {
            Expr::Num(c) => match super::eval_func(f, *c) {
                Ok(v) if v.is_finite() => num(v),
                _ => Arc::new(e),
            },
            _ => Arc::new(e),
        },
        _ => Arc::new(e),
    }
}

/// Bottom-up simplification of a whole tree.
pub(super) fn simplify(e: &Arc<Expr>) -> Arc<Expr> {
    match &**e {
        Expr::Num(_) | Expr::Var(_) => e.clone(),
        Expr::Neg(u) => simplify_node(Expr::Neg(simplify(u))),
        Expr::Add(a, b) => simplify_node(Expr::Add(simplify(a), simplify(b))),
        Expr::Sub(a, b) => simplify_node(Expr::Sub(simplify(a), simplify(b))),
        Expr::Mul(a, b) => simplify_node(Expr::Mul(simplify(a), simplify(b))),
        Expr::Div(a, b) => simplify_node(Expr::Div(simplify(a), simplify(b))),
        Expr::Pow(a, b) => simplify_node(Expr::Pow(simplify(a), simplify(b))),
        Expr::Call(f, u) => simplify_node(Expr::Call(*f, simplify(u))),
    }
}

/// Exact partial derivative; total on the AST.
pub(super) fn differentiate(e: &Arc<Expr>, var: Var) -> Arc<Expr> {
    match &**e {
        Expr::Num(_) => num(0.0),
        Expr::Var(v) => num(if *v == var { 1.0 } else { 0.0 }),
        Expr::Neg(u) => neg(differentiate(u, var)),
        Expr::Add(a, b) => add(differentiate(a, var), differentiate(b, var)),
        Expr::Sub(a, b) => sub(differentiate(a, var), differentiate(b, var)),
        Expr::Mul(a, b) => add(
            mul(differentiate(a, var), b.clone()),
            mul(a.clone(), differentiate(b, var)),
        ),
        Expr::Div(a, b) => {
            // (a/b)' = (a'b - ab') / b^2
            let numer = sub(
                mul(differentiate(a, var), b.clone()),
                mul(a.clone(), differentiate(b, var)),
            );
            div(numer, pow(b.clone(), num(2.0)))
        }
        Expr::Pow(a, b) => {
            let da = differentiate(a, var);
            if let Expr::Num(c) = &**b {
                // constant exponent: c * a^(c-1) * a', valid on the whole
                // real domain of a^c
                return mul(mul(num(*c), pow(a.clone(), num(c - 1.0))), da);
            }
            let db = differentiate(b, var);
            // a^b * (b' log a + b a'/a)
            let inner = add(
                mul(db, call(Func::Log, a.clone())),
                div(mul(b.clone(), da), a.clone()),
            );
            mul(e.clone(), inner)
        }
        Expr::Call(f, u) => {
            let du = differentiate(u, var);
            let outer = match f {
                Func::Sin => call(Func::Cos, u.clone()),
                Func::Cos => neg(call(Func::Sin, u.clone())),
                Func::Tan => {
                    // 1/cos^2
                    div(num(1.0), pow(call(Func::Cos, u.clone()), num(2.0)))
                }
                Func::Exp => call(Func::Exp, u.clone()),
                Func::Log => div(num(1.0), u.clone()),
                Func::Sqrt => div(num(0.5), call(Func::Sqrt, u.clone())),
                Func::Tanh => sub(num(1.0), pow(call(Func::Tanh, u.clone()), num(2.0))),
                Func::Atan => div(num(1.0), add(num(1.0), pow(u.clone(), num(2.0)))),
                Func::Abs => call(Func::Sign, u.clone()),
                Func::Sign => num(0.0),
            };
            mul(outer, du)
        }
    }
}

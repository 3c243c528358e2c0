//! Flat postfix compilation of expression trees.
//!
//! Quadratures and grid assembly evaluate the same field millions of times;
//! a stack program avoids the pointer chasing of the boxed tree.

use super::{eval_func, eval_pow, EvalError, Expr, Func, Var};

#[derive(Debug, Clone, Copy)]
enum Instr {
    Const(f64),
    X,
    Y,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Call(Func),
}

#[derive(Debug, Clone)]
pub struct Program {
    code: Vec<Instr>,
    max_stack: usize,
}

impl Program {
    pub(super) fn compile(e: &Expr) -> Program {
        let mut code = Vec::new();
        emit(e, &mut code);
        // stack depth bound: one slot per push, conservative but exact enough
        let mut depth = 0usize;
        let mut max = 0usize;
        for instr in &code {
            match instr {
                Instr::Const(_) | Instr::X | Instr::Y => depth += 1,
                Instr::Add | Instr::Sub | Instr::Mul | Instr::Div | Instr::Pow => depth -= 1,
                Instr::Neg | Instr::Call(_) => {}
            }
            max = max.max(depth);
        }
        Program { code, max_stack: max }
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        let mut stack = [0.0f64; 64];
        if self.max_stack > stack.len() {
            return self.eval_growable(x, y);
        }
        let mut sp = 0usize;
        for instr in &self.code {
            match *instr {
                Instr::Const(c) => {
                    stack[sp] = c;
                    sp += 1;
                }
                Instr::X => {
                    stack[sp] = x;
                    sp += 1;
                }
                Instr::Y => {
                    stack[sp] = y;
                    sp += 1;
                }
                Instr::Neg => stack[sp - 1] = -stack[sp - 1],
                Instr::Add => {
                    sp -= 1;
                    stack[sp - 1] += stack[sp];
                }
                Instr::Sub => {
                    sp -= 1;
                    stack[sp - 1] -= stack[sp];
                }
                Instr::Mul => {
                    sp -= 1;
                    stack[sp - 1] *= stack[sp];
                }
                Instr::Div => {
                    sp -= 1;
                    if stack[sp] == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    stack[sp - 1] /= stack[sp];
                }
                Instr::Pow => {
                    sp -= 1;
                    stack[sp - 1] = eval_pow(stack[sp - 1], stack[sp])?;
                }
                Instr::Call(f) => stack[sp - 1] = eval_func(f, stack[sp - 1])?,
            }
        }
        let v = stack[0];
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_growable(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        let mut stack: Vec<f64> = Vec::with_capacity(self.max_stack);
        for instr in &self.code {
            match *instr {
                Instr::Const(c) => stack.push(c),
                Instr::X => stack.push(x),
                Instr::Y => stack.push(y),
                Instr::Neg => {
                    let a = stack.last_mut().unwrap();
                    *a = -*a;
                }
                Instr::Add => {
                    let b = stack.pop().unwrap();
                    *stack.last_mut().unwrap() += b;
                }
                Instr::Sub => {
                    let b = stack.pop().unwrap();
                    *stack.last_mut().unwrap() -= b;
                }
                Instr::Mul => {
                    let b = stack.pop().unwrap();
                    *stack.last_mut().unwrap() *= b;
                }
                Instr::Div => {
                    let b = stack.pop().unwrap();
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    *stack.last_mut().unwrap() /= b;
                }
                Instr::Pow => {
                    let b = stack.pop().unwrap();
                    let a = stack.last_mut().unwrap();
                    *a = eval_pow(*a, b)?;
                }
                Instr::Call(f) => {
                    let a = stack.last_mut().unwrap();
                    *a = eval_func(f, *a)?;
                }
            }
        }
        let v = stack[0];
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

fn emit(e: &Expr, code: &mut Vec<Instr>) {
    match e {
        Expr::Num(c) => code.push(Instr::Const(*c)),
        Expr::Var(Var::X) => code.push(Instr::X),
        Expr::Var(Var::Y) => code.push(Instr::Y),
        Expr::Neg(u) => {
            emit(u, code);
            code.push(Instr::Neg);
        }
        Expr::Add(a, b) => {
            emit(a, code);
            emit(b, code);
            code.push(Instr::Add);
        }
        Expr::Sub(a, b) => {
            emit(a, code);
            emit(b, code);
            code.push(Instr::Sub);
        }
        Expr::Mul(a, b) => {
            emit(a, code);
            emit(b, code);
            code.push(Instr::Mul);
        }
        Expr::Div(a, b) => {
            emit(a, code);
            emit(b, code);
            code.push(Instr::Div);
        }
        Expr::Pow(a, b) => {
            emit(a, code);
            emit(b, code);
            code.push(Instr::Pow);
        }
        Expr::Call(f, u) => {
            emit(u, code);
            code.push(Instr::Call(*f));
        }
    }
}

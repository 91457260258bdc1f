use std::collections::HashMap;

use num::rational::Rational64;
use num::Integer;
use thiserror::Error;

use super::{Expr, Func, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("point has {got} coordinates but the expression uses x{needed}")]
    DimensionMismatch { needed: usize, got: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("log of non-positive value {0}")]
    LogNonPositive(f64),
    #[error("sqrt of negative value {0}")]
    SqrtNegative(f64),
    #[error("power {exponent} undefined at base {base}")]
    PowDomain { base: f64, exponent: String },
    #[error("derivative of abs evaluated where its argument vanishes")]
    AbsDerivativeAtZero,
    #[error("non-finite result {0}")]
    NonFinite(f64),
}

fn finite(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite(v))
    }
}

fn div(a: f64, b: f64) -> Result<f64, EvalError> {
    if b == 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    finite(a / b)
}

#[derive(Debug, Clone, Copy)]
struct PowSpec {
    exact: Rational64,
    value: f64,
    integer: Option<i32>,
    odd_denominator: bool,
}

impl PowSpec {
    fn new(r: Rational64) -> Self {
        let integer = if r.is_integer() {
            i32::try_from(*r.numer()).ok()
        } else {
            None
        };
        PowSpec {
            exact: r,
            value: *r.numer() as f64 / *r.denom() as f64,
            integer,
            odd_denominator: r.denom().is_odd(),
        }
    }

    fn apply(&self, base: f64) -> Result<f64, EvalError> {
        if base == 0.0 && self.value < 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        if let Some(k) = self.integer {
            return finite(base.powi(k));
        }
        if base < 0.0 {
            if self.odd_denominator {
                // real odd root; the sign follows the parity of the numerator
                let magnitude = (-base).powf(self.value);
                let odd_numerator = self.exact.numer().is_odd();
                return finite(if odd_numerator { -magnitude } else { magnitude });
            }
            return Err(EvalError::PowDomain {
                base,
                exponent: self.exact.to_string(),
            });
        }
        finite(base.powf(self.value))
    }
}

fn call(func: Func, a: f64) -> Result<f64, EvalError> {
    match func {
        Func::Sin => Ok(a.sin()),
        Func::Cos => Ok(a.cos()),
        Func::Exp => finite(a.exp()),
        Func::Log => {
            if a <= 0.0 {
                Err(EvalError::LogNonPositive(a))
            } else {
                Ok(a.ln())
            }
        }
        Func::Sqrt => {
            if a < 0.0 {
                Err(EvalError::SqrtNegative(a))
            } else {
                Ok(a.sqrt())
            }
        }
        Func::Abs => Ok(a.abs()),
    }
}

fn sign(a: f64) -> Result<f64, EvalError> {
    if a == 0.0 {
        Err(EvalError::AbsDerivativeAtZero)
    } else {
        Ok(a.signum())
    }
}

/// Coefficients (ascending powers of `w = 1/t`) of the polynomial `P_k` with
/// `d^k/dt^k exp(-1/t) = exp(-1/t) P_k(1/t)`.
pub(crate) fn flat_polynomial(order: u32) -> Vec<f64> {
    let mut p = vec![1.0];
    for _ in 0..order {
        // P_{k+1}(w) = w^2 (P_k(w) - P_k'(w))
        let mut next = vec![0.0; p.len() + 2];
        for (i, &c) in p.iter().enumerate() {
            next[i + 2] += c;
            if i > 0 {
                next[i + 1] -= c * i as f64;
            }
        }
        p = next;
    }
    p
}

fn flat_eval(poly: &[f64], t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let w = 1.0 / t;
    if w > 700.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for &c in poly.iter().rev() {
        acc = acc * w + c;
    }
    (-w).exp() * acc
}

pub(super) fn eval(e: &Expr, point: &[f64]) -> Result<f64, EvalError> {
    let mut memo = HashMap::new();
    eval_memo(e, point, &mut memo)
}

fn eval_memo(e: &Expr, x: &[f64], memo: &mut HashMap<usize, f64>) -> Result<f64, EvalError> {
    if let Some(&v) = memo.get(&e.ptr_key()) {
        return Ok(v);
    }
    let v = match e.node() {
        Node::Const(c) => *c,
        Node::Pi => std::f64::consts::PI,
        Node::Var(i) => *x.get(*i).ok_or(EvalError::DimensionMismatch {
            needed: i + 1,
            got: x.len(),
        })?,
        Node::Neg(a) => -eval_memo(a, x, memo)?,
        Node::Add(a, b) => finite(eval_memo(a, x, memo)? + eval_memo(b, x, memo)?)?,
        Node::Sub(a, b) => finite(eval_memo(a, x, memo)? - eval_memo(b, x, memo)?)?,
        Node::Mul(a, b) => finite(eval_memo(a, x, memo)? * eval_memo(b, x, memo)?)?,
        Node::Div(a, b) => div(eval_memo(a, x, memo)?, eval_memo(b, x, memo)?)?,
        Node::Pow(a, r) => PowSpec::new(*r).apply(eval_memo(a, x, memo)?)?,
        Node::Call(f, a) => call(*f, eval_memo(a, x, memo)?)?,
        Node::Sign(a) => sign(eval_memo(a, x, memo)?)?,
        Node::Flat(k, a) => flat_eval(&flat_polynomial(*k), eval_memo(a, x, memo)?),
    };
    memo.insert(e.ptr_key(), v);
    Ok(v)
}

#[derive(Debug, Clone)]
enum Op {
    Const(f64),
    Var(usize),
    Neg(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Pow(usize, PowSpec),
    Call(Func, usize),
    Sign(usize),
    Flat(usize, Vec<f64>),
}

/// A set of expressions flattened into one instruction tape with shared
/// subexpressions evaluated once per point. Used for bulk sampling.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    outputs: Vec<usize>,
    arity: usize,
}

impl CompiledExpr {
    pub fn new(exprs: &[Expr]) -> Self {
        let mut ops = Vec::new();
        let mut slots = HashMap::new();
        let outputs = exprs
            .iter()
            .map(|e| Self::emit(e, &mut ops, &mut slots))
            .collect();
        let arity = exprs.iter().map(Expr::arity).max().unwrap_or(0);
        CompiledExpr {
            ops,
            outputs,
            arity,
        }
    }

    pub fn single(e: &Expr) -> Self {
        Self::new(std::slice::from_ref(e))
    }

    fn emit(e: &Expr, ops: &mut Vec<Op>, slots: &mut HashMap<usize, usize>) -> usize {
        if let Some(&s) = slots.get(&e.ptr_key()) {
            return s;
        }
        let op = match e.node() {
            Node::Const(c) => Op::Const(*c),
            Node::Pi => Op::Const(std::f64::consts::PI),
            Node::Var(i) => Op::Var(*i),
            Node::Neg(a) => Op::Neg(Self::emit(a, ops, slots)),
            Node::Add(a, b) => {
                let (a, b) = (Self::emit(a, ops, slots), Self::emit(b, ops, slots));
                Op::Add(a, b)
            }
            Node::Sub(a, b) => {
                let (a, b) = (Self::emit(a, ops, slots), Self::emit(b, ops, slots));
                Op::Sub(a, b)
            }
            Node::Mul(a, b) => {
                let (a, b) = (Self::emit(a, ops, slots), Self::emit(b, ops, slots));
                Op::Mul(a, b)
            }
            Node::Div(a, b) => {
                let (a, b) = (Self::emit(a, ops, slots), Self::emit(b, ops, slots));
                Op::Div(a, b)
            }
            Node::Pow(a, r) => Op::Pow(Self::emit(a, ops, slots), PowSpec::new(*r)),
            Node::Call(f, a) => Op::Call(*f, Self::emit(a, ops, slots)),
            Node::Sign(a) => Op::Sign(Self::emit(a, ops, slots)),
            Node::Flat(k, a) => Op::Flat(Self::emit(a, ops, slots), flat_polynomial(*k)),
        };
        ops.push(op);
        let slot = ops.len() - 1;
        slots.insert(e.ptr_key(), slot);
        slot
    }

    pub fn outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Evaluates every output at `x`, writing them into `out`.
    pub fn eval_into(
        &self,
        x: &[f64],
        scratch: &mut Vec<f64>,
        out: &mut [f64],
    ) -> Result<(), EvalError> {
        if x.len() < self.arity {
            return Err(EvalError::DimensionMismatch {
                needed: self.arity,
                got: x.len(),
            });
        }
        scratch.clear();
        scratch.reserve(self.ops.len());
        for op in &self.ops {
            let v = match op {
                Op::Const(c) => *c,
                Op::Var(i) => x[*i],
                Op::Neg(a) => -scratch[*a],
                Op::Add(a, b) => finite(scratch[*a] + scratch[*b])?,
                Op::Sub(a, b) => finite(scratch[*a] - scratch[*b])?,
                Op::Mul(a, b) => finite(scratch[*a] * scratch[*b])?,
                Op::Div(a, b) => div(scratch[*a], scratch[*b])?,
                Op::Pow(a, spec) => spec.apply(scratch[*a])?,
                Op::Call(f, a) => call(*f, scratch[*a])?,
                Op::Sign(a) => sign(scratch[*a])?,
                Op::Flat(a, poly) => flat_eval(poly, scratch[*a]),
            };
            scratch.push(v);
        }
        for (o, &slot) in out.iter_mut().zip(&self.outputs) {
            *o = scratch[slot];
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut scratch = Vec::new();
        let mut out = vec![0.0; self.outputs.len()];
        self.eval_into(x, &mut scratch, &mut out)?;
        Ok(out)
    }
}

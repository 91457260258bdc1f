//! A small real-valued expression language.
//!
//! Expressions define test functions, chart maps and metric components. They
//! can be parsed from text, differentiated symbolically and evaluated in IEEE
//! double precision.
//!
//! # Grammar
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = "-" unary | power ;
//! power    = atom [ "^" exponent ] ;
//! exponent = number | "-" number | "(" [ "-" ] number [ "/" number ] ")" ;
//! atom     = number | "pi" | variable | func "(" expr ")" | "(" expr ")" ;
//! func     = "sin" | "cos" | "exp" | "log" | "sqrt" | "abs" ;
//! variable = "x" digit { digit } ;          (* x1 .. xn, 1-based *)
//! number   = digit { digit } [ "." { digit } ] [ ("e" | "E") [ "+" | "-" ] digit { digit } ] ;
//! ```
//!
//! Exponents are rational literals, so `x1^2/3` is `(x1^2)/3` while
//! `x1^(2/3)` is a cube-root power. Chained powers such as `x1^2^3` are
//! rejected; write the parentheses.
//!
//! Besides the parsed node kinds the tree has two internal nodes that the
//! grammar cannot produce: `sign(..)`, which appears in derivatives of `abs`,
//! and the flat function `flat[k](..)` (the `k`-th derivative of
//! `t -> exp(-1/t)` for `t > 0`, `0` otherwise) that bump functions are built
//! from.

mod diff;
mod eval;
mod parse;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num::rational::Rational64;
use num::{One, Zero};

pub use eval::{CompiledExpr, EvalError};
pub use parse::{parse_expr, ParseError, ParseErrorKind};

/// Elementary functions available in the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Pi,
    /// Zero-based variable index; printed as `x{index+1}`.
    Var(usize),
    Neg(Expr),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Pow(Expr, Rational64),
    Call(Func, Expr),
    /// Derivative of `abs`; evaluating it at zero is an error.
    Sign(Expr),
    /// `k`-th derivative of the flat function `t -> exp(-1/t)` (zero for `t <= 0`).
    Flat(u32, Expr),
}

/// Immutable, cheaply clonable expression tree. Subtrees are shared.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&*self.0, f)
    }
}

impl Expr {
    /// Wraps a node without any folding. The parser builds trees this way.
    pub fn raw(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr_key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn constant(c: f64) -> Expr {
        Expr::raw(Node::Const(c))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn pi() -> Expr {
        Expr::raw(Node::Pi)
    }

    /// Zero-based variable.
    pub fn var(index: usize) -> Expr {
        Expr::raw(Node::Var(index))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::raw(Node::Neg(self.clone())),
        }
    }

    pub fn add(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a + b),
            (Some(a), _) if a == 0.0 => other.clone(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Expr::raw(Node::Add(self.clone(), other.clone())),
        }
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a - b),
            (Some(a), _) if a == 0.0 => other.neg(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Expr::raw(Node::Sub(self.clone(), other.clone())),
        }
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a * b),
            (Some(a), _) if a == 0.0 => Expr::zero(),
            (_, Some(b)) if b == 0.0 => Expr::zero(),
            (Some(a), _) if a == 1.0 => other.clone(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            (Some(a), _) if a == -1.0 => other.neg(),
            (_, Some(b)) if b == -1.0 => self.neg(),
            _ => Expr::raw(Node::Mul(self.clone(), other.clone())),
        }
    }

    pub fn div(&self, other: &Expr) -> Expr {
        match (self.as_const(), other.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => Expr::constant(a / b),
            (Some(a), _) if a == 0.0 => Expr::zero(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            _ => Expr::raw(Node::Div(self.clone(), other.clone())),
        }
    }

    pub fn powr(&self, exponent: Rational64) -> Expr {
        if exponent.is_zero() {
            return Expr::one();
        }
        if exponent.is_one() {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            if exponent.is_integer() && c != 0.0 {
                if let Ok(e) = i32::try_from(*exponent.numer()) {
                    return Expr::constant(c.powi(e));
                }
            }
        }
        Expr::raw(Node::Pow(self.clone(), exponent))
    }

    pub fn powi(&self, exponent: i64) -> Expr {
        self.powr(Rational64::from_integer(exponent))
    }

    pub fn call(func: Func, arg: &Expr) -> Expr {
        Expr::raw(Node::Call(func, arg.clone()))
    }

    pub fn sin(&self) -> Expr {
        Expr::call(Func::Sin, self)
    }

    pub fn cos(&self) -> Expr {
        Expr::call(Func::Cos, self)
    }

    pub fn exp(&self) -> Expr {
        Expr::call(Func::Exp, self)
    }

    pub fn ln(&self) -> Expr {
        Expr::call(Func::Log, self)
    }

    pub fn sqrt(&self) -> Expr {
        match self.as_const() {
            Some(c) if c >= 0.0 => Expr::constant(c.sqrt()),
            _ => Expr::call(Func::Sqrt, self),
        }
    }

    pub fn abs(&self) -> Expr {
        Expr::call(Func::Abs, self)
    }

    /// `k`-th derivative of the flat function at this argument.
    pub fn flat(&self, order: u32) -> Expr {
        Expr::raw(Node::Flat(order, self.clone()))
    }

    pub fn scale(&self, c: f64) -> Expr {
        Expr::constant(c).mul(self)
    }

    /// Sum of a list of expressions; empty sums are zero.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms
            .into_iter()
            .fold(Expr::zero(), |acc, t| acc.add(&t))
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        factors
            .into_iter()
            .fold(Expr::one(), |acc, t| acc.mul(&t))
    }

    /// Largest variable index referenced plus one (0 for closed expressions).
    pub fn arity(&self) -> usize {
        let mut seen = HashMap::new();
        self.arity_memo(&mut seen)
    }

    fn arity_memo(&self, seen: &mut HashMap<usize, usize>) -> usize {
        if let Some(&a) = seen.get(&self.ptr_key()) {
            return a;
        }
        let a = match self.node() {
            Node::Const(_) | Node::Pi => 0,
            Node::Var(i) => i + 1,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) | Node::Sign(a) | Node::Flat(_, a) => {
                a.arity_memo(seen)
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.arity_memo(seen).max(b.arity_memo(seen))
            }
        };
        seen.insert(self.ptr_key(), a);
        a
    }

    /// Replaces every variable `x_i` by `values[i]` (composition with a vector map).
    ///
    /// Panics if a referenced variable has no replacement.
    pub fn substitute(&self, values: &[Expr]) -> Expr {
        let mut memo = HashMap::new();
        self.substitute_memo(values, &mut memo)
    }

    fn substitute_memo(&self, values: &[Expr], memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(e) = memo.get(&self.ptr_key()) {
            return e.clone();
        }
        let out = match self.node() {
            Node::Const(_) | Node::Pi => self.clone(),
            Node::Var(i) => values
                .get(*i)
                .unwrap_or_else(|| panic!("substitute: no value for x{}", i + 1))
                .clone(),
            Node::Neg(a) => a.substitute_memo(values, memo).neg(),
            Node::Add(a, b) => a
                .substitute_memo(values, memo)
                .add(&b.substitute_memo(values, memo)),
            Node::Sub(a, b) => a
                .substitute_memo(values, memo)
                .sub(&b.substitute_memo(values, memo)),
            Node::Mul(a, b) => a
                .substitute_memo(values, memo)
                .mul(&b.substitute_memo(values, memo)),
            Node::Div(a, b) => a
                .substitute_memo(values, memo)
                .div(&b.substitute_memo(values, memo)),
            Node::Pow(a, r) => a.substitute_memo(values, memo).powr(*r),
            Node::Call(f, a) => Expr::call(*f, &a.substitute_memo(values, memo)),
            Node::Sign(a) => Expr::raw(Node::Sign(a.substitute_memo(values, memo))),
            Node::Flat(k, a) => a.substitute_memo(values, memo).flat(*k),
        };
        memo.insert(self.ptr_key(), out.clone());
        out
    }

    /// Number of distinct nodes in the shared tree.
    pub fn node_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.ptr_key()) {
                continue;
            }
            match e.node() {
                Node::Const(_) | Node::Pi | Node::Var(_) => {}
                Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) | Node::Sign(a) | Node::Flat(_, a) => {
                    stack.push(a.clone())
                }
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    stack.push(a.clone());
                    stack.push(b.clone());
                }
            }
        }
        seen.len()
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(&self, &rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(&self, &rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(&self, &rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::div(&self, &rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

/// Symbolic partial derivative with respect to the zero-based `axis`.
pub fn diff_expr(e: &Expr, axis: usize) -> Expr {
    diff::diff(e, axis)
}

/// Evaluates `e` at `point`; the point must provide every referenced variable.
pub fn eval_expr(e: &Expr, point: &[f64]) -> Result<f64, EvalError> {
    eval::eval(e, point)
}

// Printing. Precedence levels: sum 1, product 2, unary minus 3, power 4, atom 5.
fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(..) | Node::Sub(..) => 1,
        Node::Mul(..) | Node::Div(..) => 2,
        Node::Neg(_) => 3,
        Node::Pow(..) => 4,
        Node::Const(c) if *c < 0.0 || c.is_sign_negative() => 3,
        _ => 5,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, min_prec: u8) -> fmt::Result {
    if precedence(child) < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

fn fmt_const(f: &mut fmt::Formatter<'_>, c: f64) -> fmt::Result {
    if c.is_finite() {
        if c.is_sign_negative() {
            write!(f, "-{}", -c)
        } else {
            write!(f, "{c}")
        }
    } else if c.is_nan() {
        write!(f, "(0/0)")
    } else if c > 0.0 {
        write!(f, "(1/0)")
    } else {
        write!(f, "(-1/0)")
    }
}

fn fmt_rational(f: &mut fmt::Formatter<'_>, r: &Rational64) -> fmt::Result {
    if r.is_integer() && *r.numer() >= 0 {
        write!(f, "{}", r.numer())
    } else if r.is_integer() {
        write!(f, "({})", r.numer())
    } else {
        write!(f, "({}/{})", r.numer(), r.denom())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => fmt_const(f, *c),
            Node::Pi => write!(f, "pi"),
            Node::Var(i) => write!(f, "x{}", i + 1),
            Node::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, 3)
            }
            Node::Add(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " + ")?;
                write_child(f, b, 2)
            }
            Node::Sub(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " - ")?;
                write_child(f, b, 2)
            }
            Node::Mul(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "*")?;
                write_child(f, b, 3)
            }
            Node::Div(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "/")?;
                write_child(f, b, 3)
            }
            Node::Pow(a, r) => {
                write_child(f, a, 5)?;
                write!(f, "^")?;
                fmt_rational(f, r)
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
            Node::Sign(a) => write!(f, "sign({a})"),
            Node::Flat(k, a) => write!(f, "flat[{k}]({a})"),
        }
    }
}

use std::collections::HashMap;

use num::rational::Rational64;
use num::One;

use super::{Expr, Func, Node};

pub(super) fn diff(e: &Expr, axis: usize) -> Expr {
    let mut memo = HashMap::new();
    diff_memo(e, axis, &mut memo)
}

fn diff_memo(e: &Expr, axis: usize, memo: &mut HashMap<usize, Expr>) -> Expr {
    if let Some(d) = memo.get(&e.ptr_key()) {
        return d.clone();
    }
    let d = match e.node() {
        Node::Const(_) | Node::Pi => Expr::zero(),
        Node::Var(i) => {
            if *i == axis {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Neg(a) => diff_memo(a, axis, memo).neg(),
        Node::Add(a, b) => diff_memo(a, axis, memo).add(&diff_memo(b, axis, memo)),
        Node::Sub(a, b) => diff_memo(a, axis, memo).sub(&diff_memo(b, axis, memo)),
        Node::Mul(a, b) => {
            let da = diff_memo(a, axis, memo);
            let db = diff_memo(b, axis, memo);
            da.mul(b).add(&a.mul(&db))
        }
        Node::Div(a, b) => {
            let da = diff_memo(a, axis, memo);
            let db = diff_memo(b, axis, memo);
            if db.is_zero() {
                da.div(b)
            } else {
                // (a' b - a b') / b^2
                da.mul(b).sub(&a.mul(&db)).div(&b.powi(2))
            }
        }
        Node::Pow(a, r) => {
            let da = diff_memo(a, axis, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                let coeff = *r.numer() as f64 / *r.denom() as f64;
                let lowered = *r - Rational64::one();
                Expr::constant(coeff).mul(&a.powr(lowered)).mul(&da)
            }
        }
        Node::Call(func, a) => {
            let da = diff_memo(a, axis, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                let outer = match func {
                    Func::Sin => a.cos(),
                    Func::Cos => a.sin().neg(),
                    Func::Exp => e.clone(),
                    Func::Log => Expr::one().div(a),
                    Func::Sqrt => Expr::constant(0.5).div(e),
                    Func::Abs => Expr::raw(Node::Sign(a.clone())),
                };
                outer.mul(&da)
            }
        }
        // sign is locally constant wherever it is defined
        Node::Sign(_) => Expr::zero(),
        Node::Flat(k, a) => {
            let da = diff_memo(a, axis, memo);
            if da.is_zero() {
                Expr::zero()
            } else {
                a.flat(k + 1).mul(&da)
            }
        }
    };
    memo.insert(e.ptr_key(), d.clone());
    d
}

#[cfg(test)]
mod tests {
    use super::super::{eval_expr, parse_expr};
    use super::*;

    fn d(s: &str, n: usize, axis: usize) -> Expr {
        diff(&parse_expr(s, n).unwrap(), axis)
    }

    #[test]
    fn chain_rule_on_sine() {
        let de = d("sin(2*pi*x1)", 1, 0);
        let tau = 2.0 * std::f64::consts::PI;
        for x in [0.0, 0.1, 0.37] {
            let v = eval_expr(&de, &[x]).unwrap();
            assert!((v - tau * (tau * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_of_sum_of_squares() {
        let de = d("x1^2 + x2^2", 2, 1);
        assert_eq!(eval_expr(&de, &[3.0, 4.0]).unwrap(), 8.0);
        // the x1 branch folds away completely
        assert_eq!(de.to_string(), "2*x2");
    }

    #[test]
    fn constant_has_zero_derivative() {
        assert_eq!(d("3.5*pi", 1, 0), Expr::zero());
        assert_eq!(d("x2", 2, 0), Expr::zero());
    }

    #[test]
    fn abs_derivative_errors_only_at_zero() {
        let de = d("abs(x1)", 1, 0);
        assert_eq!(eval_expr(&de, &[-2.0]).unwrap(), -1.0);
        assert!(eval_expr(&de, &[0.0]).is_err());
    }

    #[test]
    fn flat_derivatives_match_closed_forms() {
        let t = Expr::var(0);
        let f = t.flat(0);
        let f1 = diff(&f, 0);
        let f2 = diff(&f1, 0);
        for x in [0.2f64, 0.5, 1.3] {
            let e = (-1.0 / x).exp();
            assert!((eval_expr(&f1, &[x]).unwrap() - e / (x * x)).abs() < 1e-14);
            let second = e * (1.0 - 2.0 * x) / x.powi(4);
            assert!((eval_expr(&f2, &[x]).unwrap() - second).abs() < 1e-12);
        }
        assert_eq!(eval_expr(&f2, &[-0.5]).unwrap(), 0.0);
        assert_eq!(eval_expr(&f2, &[0.0]).unwrap(), 0.0);
    }
}

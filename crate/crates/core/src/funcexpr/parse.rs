use num::rational::Rational64;
use thiserror::Error;

use super::{Expr, Func, Node};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedEnd,
    UnexpectedToken(String),
    UnknownIdentifier(String),
    VariableOutOfRange { index: usize, dim: usize },
    BadNumber(String),
    ExponentNotRational,
    ChainedExponent,
}

/// Syntax error with the 0-based character position where it was detected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at position {position}: {message}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, kind: ParseErrorKind) -> Self {
        let message = match &kind {
            ParseErrorKind::UnexpectedChar(c) => format!("unexpected character '{c}'"),
            ParseErrorKind::UnexpectedEnd => "unexpected end of input".to_string(),
            ParseErrorKind::UnexpectedToken(t) => format!("unexpected token '{t}'"),
            ParseErrorKind::UnknownIdentifier(s) => format!("unknown identifier '{s}'"),
            ParseErrorKind::VariableOutOfRange { index, dim } => {
                format!("variable x{index} out of range for dimension {dim}")
            }
            ParseErrorKind::BadNumber(s) => format!("malformed number '{s}'"),
            ParseErrorKind::ExponentNotRational => {
                "exponent must be a rational literal such as 2, -1 or (1/3)".to_string()
            }
            ParseErrorKind::ChainedExponent => {
                "chained exponents need explicit parentheses".to_string()
            }
        };
        ParseError {
            position,
            kind,
            message,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(s) | Tok::Ident(s) => s.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            d if d.is_ascii_digit() || d == '.' => {
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                out.push((Tok::Num(chars[start..i].iter().collect()), start));
                continue;
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), start));
                continue;
            }
            other => return Err(ParseError::new(start, ParseErrorKind::UnexpectedChar(other))),
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, chars.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self) -> ParseError {
        match self.peek() {
            Tok::End => ParseError::new(self.here(), ParseErrorKind::UnexpectedEnd),
            t => ParseError::new(self.here(), ParseErrorKind::UnexpectedToken(t.describe())),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected())
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::raw(Node::Add(lhs, rhs));
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::raw(Node::Sub(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::raw(Node::Mul(lhs, rhs));
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::raw(Node::Div(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            let inner = self.unary()?;
            return Ok(Expr::raw(Node::Neg(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let exponent = self.exponent()?;
        if *self.peek() == Tok::Caret {
            return Err(ParseError::new(self.here(), ParseErrorKind::ChainedExponent));
        }
        Ok(Expr::raw(Node::Pow(base, exponent)))
    }

    fn integer_literal(&mut self) -> Result<i64, ParseError> {
        let at = self.here();
        match self.bump() {
            Tok::Num(s) => s
                .parse::<i64>()
                .map_err(|_| ParseError::new(at, ParseErrorKind::ExponentNotRational)),
            _ => Err(ParseError::new(at, ParseErrorKind::ExponentNotRational)),
        }
    }

    fn exponent(&mut self) -> Result<Rational64, ParseError> {
        match self.peek() {
            Tok::Num(_) => Ok(Rational64::from_integer(self.integer_literal()?)),
            Tok::Minus => {
                self.bump();
                Ok(Rational64::from_integer(-self.integer_literal()?))
            }
            Tok::LParen => {
                self.bump();
                let negative = if *self.peek() == Tok::Minus {
                    self.bump();
                    true
                } else {
                    false
                };
                let num = self.integer_literal()?;
                let den = if *self.peek() == Tok::Slash {
                    self.bump();
                    let at = self.here();
                    let d = self.integer_literal()?;
                    if d == 0 {
                        return Err(ParseError::new(at, ParseErrorKind::ExponentNotRational));
                    }
                    d
                } else {
                    1
                };
                self.expect(Tok::RParen)?;
                let r = Rational64::new(num, den);
                Ok(if negative { -r } else { r })
            }
            _ => Err(ParseError::new(self.here(), ParseErrorKind::ExponentNotRational)),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let at = self.here();
        match self.peek().clone() {
            Tok::Num(s) => {
                self.bump();
                let v: f64 = s
                    .parse()
                    .map_err(|_| ParseError::new(at, ParseErrorKind::BadNumber(s.clone())))?;
                Ok(Expr::constant(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if name == "pi" {
                    return Ok(Expr::pi());
                }
                if let Some(func) = Func::from_name(&name) {
                    self.expect(Tok::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::raw(Node::Call(func, arg)));
                }
                if let Some(digits) = name.strip_prefix('x') {
                    if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
                        let index: usize = digits.parse().map_err(|_| {
                            ParseError::new(at, ParseErrorKind::UnknownIdentifier(name.clone()))
                        })?;
                        if index == 0 || index > self.dim {
                            return Err(ParseError::new(
                                at,
                                ParseErrorKind::VariableOutOfRange {
                                    index,
                                    dim: self.dim,
                                },
                            ));
                        }
                        return Ok(Expr::var(index - 1));
                    }
                }
                Err(ParseError::new(at, ParseErrorKind::UnknownIdentifier(name)))
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// Parses `text` into an expression over the variables `x1..xn`.
pub fn parse_expr(text: &str, n: usize) -> Result<Expr, ParseError> {
    let toks = tokenize(text)?;
    let mut parser = Parser { toks, pos: 0, dim: n };
    let e = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(parser.unexpected());
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_tree_shape() {
        let e = parse_expr("sin(2*pi*x1)", 1).unwrap();
        let expected = Expr::raw(Node::Call(
            Func::Sin,
            Expr::raw(Node::Mul(
                Expr::raw(Node::Mul(Expr::constant(2.0), Expr::pi())),
                Expr::var(0),
            )),
        ));
        assert_eq!(e, expected);
    }

    #[test]
    fn sum_of_squares_tree() {
        let e = parse_expr("x1^2 + x2^2", 2).unwrap();
        let sq = |i| Expr::raw(Node::Pow(Expr::var(i), Rational64::from_integer(2)));
        assert_eq!(e, Expr::raw(Node::Add(sq(0), sq(1))));
    }

    #[test]
    fn variable_out_of_range() {
        let err = parse_expr("x3", 2).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::VariableOutOfRange { index: 3, dim: 2 });
        assert_eq!(err.position, 0);
        assert!(parse_expr("x0", 2).is_err());
    }

    #[test]
    fn precedence_rules() {
        // unary minus binds looser than ^
        let e = parse_expr("-x1^2", 1).unwrap();
        assert!(matches!(e.node(), Node::Neg(inner) if matches!(inner.node(), Node::Pow(..))));
        // ^ takes only a literal: x1^2/3 is (x1^2)/3
        let e = parse_expr("x1^2/3", 1).unwrap();
        assert!(matches!(e.node(), Node::Div(..)));
        let e = parse_expr("x1^(2/3)", 1).unwrap();
        assert!(matches!(e.node(), Node::Pow(_, r) if *r == Rational64::new(2, 3)));
        let e = parse_expr("1 - 2 - 3", 0).unwrap();
        assert!(matches!(e.node(), Node::Sub(a, _) if matches!(a.node(), Node::Sub(..))));
    }

    #[test]
    fn malformed_inputs_report_positions() {
        let err = parse_expr("sin((x1", 1).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedEnd);
        assert_eq!(err.position, 7);
        let err = parse_expr("x1 + foo(x1)", 1).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownIdentifier("foo".into()));
        assert_eq!(err.position, 5);
        let err = parse_expr("2^x1", 1).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::ExponentNotRational);
        let err = parse_expr("x1^2^3", 1).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::ChainedExponent);
        let err = parse_expr("x1 $ 2", 1).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnexpectedChar('$'));
        assert!(parse_expr("(x1))", 1).is_err());
        assert!(parse_expr("", 1).is_err());
        assert!(parse_expr("1.2.3", 1).is_err());
    }

    #[test]
    fn scientific_literals() {
        let e = parse_expr("2.5e-3", 0).unwrap();
        assert_eq!(e.as_const(), Some(2.5e-3));
    }
}

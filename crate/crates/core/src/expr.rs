//! Expression trees for metric components, with a hand-rolled tokenizer and
//! recursive-descent parser reporting line/column positions.
//!
//! Grammar (standard infix precedence, `^` right-associative and binding
//! tighter than unary minus):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | variable | function '(' expr ')' | '(' expr ')'
//! ```
//!
//! Variables are `x1..xn`; functions are sin, cos, sinh, cosh, exp, log,
//! sqrt. Constants are stored as `f64` and converted to the evaluation
//! scalar on use.

use crate::error::{Error, Result};
use crate::real::Real;
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// Expression tree over constants, variables `x1..xn` and the operator set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index (`x1` is index 0).
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Apply(Func, Box<Expr>),
}

impl Expr {
    /// Evaluates at a chart point; deterministic by construction.
    pub fn eval<T: Real>(&self, x: &[T]) -> T {
        match self {
            Expr::Const(c) => T::of(*c),
            Expr::Var(i) => x[*i],
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => a.eval(x).powf(b.eval(x)),
            Expr::Neg(a) => -a.eval(x),
            Expr::Apply(f, a) => {
                let v = a.eval(x);
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Sinh => v.sinh(),
                    Func::Cosh => v.cosh(),
                    Func::Exp => v.exp(),
                    Func::Log => v.ln(),
                    Func::Sqrt => v.sqrt(),
                }
            }
        }
    }

    /// Highest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
            Expr::Neg(a) | Expr::Apply(_, a) => a.max_var(),
        }
    }

    /// Canonical text form; `parse(print(e))` reproduces the tree.
    pub fn print(&self) -> String {
        let mut s = String::new();
        self.write(&mut s, 0);
        s
    }

    // Precedence levels: 1 add, 2 mul, 3 unary minus, 4 power, 5 atom.
    fn write(&self, out: &mut String, parent: u8) {
        let prec = match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        };
        let need = prec < parent
            // Right operand of '-' and '/' needs parens at equal precedence.
            || matches!(self, Expr::Neg(..)) && parent == 3;
        if need {
            out.push('(');
        }
        match self {
            Expr::Const(c) => {
                let _ = write!(out, "{c:?}");
            }
            Expr::Var(i) => {
                let _ = write!(out, "x{}", i + 1);
            }
            Expr::Add(a, b) => {
                a.write(out, 1);
                out.push_str(" + ");
                b.write(out, 2);
            }
            Expr::Sub(a, b) => {
                a.write(out, 1);
                out.push_str(" - ");
                b.write(out, 2);
            }
            Expr::Mul(a, b) => {
                a.write(out, 2);
                out.push_str(" * ");
                b.write(out, 3);
            }
            Expr::Div(a, b) => {
                a.write(out, 2);
                out.push_str(" / ");
                b.write(out, 3);
            }
            Expr::Neg(a) => {
                out.push('-');
                a.write(out, 3);
            }
            Expr::Pow(a, b) => {
                a.write(out, 5);
                out.push('^');
                b.write(out, 4);
            }
            Expr::Apply(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write(out, 0);
                out.push(')');
            }
        }
        if need {
            out.push(')');
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SpannedTok {
    pub(crate) tok: TokPub,
    pub(crate) line: usize,
    pub(crate) col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokPub {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

pub(crate) fn tokenize(text: &str, start_line: usize, start_col: usize) -> Result<Vec<SpannedTok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0usize;
    let mut line = start_line;
    let mut col = start_col;
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        let advance = |i: &mut usize, col: &mut usize| {
            *i += 1;
            *col += 1;
        };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(&mut i, &mut col),
            '+' => {
                out.push(SpannedTok { tok: TokPub::Plus, line: tline, col: tcol });
                advance(&mut i, &mut col);
            }
            '-' => {
                out.push(SpannedTok { tok: TokPub::Minus, line: tline, col: tcol });
                advance(&mut i, &mut col);
            }
            '*' => {
                out.push(SpannedTok { tok: TokPub::Star, line: tline, col: tcol });
                advance(&mut i, &mut col);
            }
            '/' => {
                out.push(SpannedTok { tok: TokPub::Slash, line: tline, col: tcol });
                advance(&mut i, &mut col);
            }
            '^' => {
                out.push(SpannedTok { tok: TokPub::Caret, line: tline, col: tcol });
                advance(&mut i, &mut col);
            }
            '(' => {
                out.push(SpannedTok { tok: TokPub::LParen, line: tline, col: tcol });
                advance(&mut i, &mut col);
            }
            ')' => {
                out.push(SpannedTok { tok: TokPub::RParen, line: tline, col: tcol });
                advance(&mut i, &mut col);
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || chars[i] == '.'
                        || chars[i] == 'e'
                        || chars[i] == 'E'
                        || ((chars[i] == '+' || chars[i] == '-')
                            && i > start
                            && (chars[i - 1] == 'e' || chars[i - 1] == 'E')))
                {
                    i += 1;
                    col += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let v: f64 = s.parse().map_err(|_| Error::Parse {
                    line: tline,
                    col: tcol,
                    message: format!("malformed number `{s}`"),
                })?;
                out.push(SpannedTok { tok: TokPub::Num(v), line: tline, col: tcol });
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                    col += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(SpannedTok { tok: TokPub::Ident(s), line: tline, col: tcol });
            }
            other => {
                return Err(Error::Parse {
                    line: tline,
                    col: tcol,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    Ok(out)
}

pub(crate) struct ExprParser {
    toks: Vec<SpannedTok>,
    pos: usize,
    end_line: usize,
    end_col: usize,
}

impl ExprParser {
    pub(crate) fn new(toks: Vec<SpannedTok>, end_line: usize, end_col: usize) -> Self {
        Self { toks, pos: 0, end_line, end_col }
    }

    fn peek(&self) -> Option<&TokPub> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or((self.end_line, self.end_col))
    }

    fn bump(&mut self) -> Option<SpannedTok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        let (line, col) = self.here();
        Error::Parse {
            line,
            col,
            message: message.into(),
        }
    }

    pub(crate) fn parse_full(&mut self) -> Result<Expr> {
        let e = self.expr()?;
        if self.pos != self.toks.len() {
            return Err(self.fail("unexpected trailing input"));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(TokPub::Plus) => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(TokPub::Minus) => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(TokPub::Star) => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(TokPub::Slash) => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if matches!(self.peek(), Some(TokPub::Minus)) {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(TokPub::Caret)) {
            self.bump();
            // Right-associative; exponent may carry a unary minus.
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(SpannedTok { tok: TokPub::Num(v), .. }) => Ok(Expr::Const(v)),
            Some(SpannedTok { tok: TokPub::Ident(name), line, col }) => {
                if let Some(f) = Func::from_name(&name) {
                    if !matches!(self.peek(), Some(TokPub::LParen)) {
                        return Err(self.fail(format!("expected `(` after function `{name}`")));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    match self.bump() {
                        Some(SpannedTok { tok: TokPub::RParen, .. }) => {
                            Ok(Expr::Apply(f, Box::new(arg)))
                        }
                        _ => Err(self.fail("expected `)`")),
                    }
                } else if let Some(rest) = name.strip_prefix('x') {
                    match rest.parse::<usize>() {
                        Ok(k) if k >= 1 => Ok(Expr::Var(k - 1)),
                        _ => Err(Error::Parse {
                            line,
                            col,
                            message: format!("unknown identifier `{name}`"),
                        }),
                    }
                } else {
                    Err(Error::Parse {
                        line,
                        col,
                        message: format!("unknown identifier `{name}`"),
                    })
                }
            }
            Some(SpannedTok { tok: TokPub::LParen, .. }) => {
                let e = self.expr()?;
                match self.bump() {
                    Some(SpannedTok { tok: TokPub::RParen, .. }) => Ok(e),
                    _ => Err(self.fail("expected `)`")),
                }
            }
            Some(s) => Err(Error::Parse {
                line: s.line,
                col: s.col,
                message: format!("unexpected token {:?}", s.tok),
            }),
            None => Err(self.fail("unexpected end of expression")),
        }
    }
}

/// Parses a standalone expression (positions reported relative to
/// `line`/`col` of its first character).
pub fn parse_expr_at(text: &str, line: usize, col: usize) -> Result<Expr> {
    let toks = tokenize(text, line, col)?;
    let end_col = col + text.chars().count();
    ExprParser::new(toks, line, end_col).parse_full()
}

/// Parses a standalone expression.
pub fn parse_expr(text: &str) -> Result<Expr> {
    parse_expr_at(text, 1, 1)
}

//! Small arithmetic expression language shared by comparison functions and
//! parametric map templates.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' base)?
//! base   := number | var | '(' expr ')'
//! var    := 'x' digits | 'x' | 'r' | 'i' | 'n'
//! ```
//!
//! `x` alone is `x1`. Exponents must evaluate to integers. Division by a
//! literal zero is rejected while parsing.

use crate::error::{IfsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    /// Coordinate `x_k`, 1-based.
    X(usize),
    /// Argument of a comparison function.
    R,
    /// Map index in a parametric family.
    I,
    /// Iterate count in closed-form tail certificates.
    N,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
}

/// Variable bindings for evaluation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env<'a> {
    pub x: &'a [f64],
    pub r: f64,
    pub i: f64,
    pub n: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Var(Var),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

fn err(column: usize, message: impl Into<String>) -> IfsError {
    IfsError::Parse {
        column,
        message: message.into(),
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < chars.len() {
        let c = chars[k];
        let col = k + 1;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                k += 1;
                continue;
            }
            '+' => out.push((Tok::Plus, col)),
            '-' => out.push((Tok::Minus, col)),
            '*' | '×' => out.push((Tok::Star, col)),
            '/' | '÷' => out.push((Tok::Slash, col)),
            '^' => out.push((Tok::Caret, col)),
            '(' => out.push((Tok::LParen, col)),
            ')' => out.push((Tok::RParen, col)),
            '0'..='9' | '.' => {
                let start = k;
                while k < chars.len() && (chars[k].is_ascii_digit() || chars[k] == '.') {
                    k += 1;
                }
                if k < chars.len() && (chars[k] == 'e' || chars[k] == 'E') {
                    let mut j = k + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        k = j;
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                    }
                }
                let text: String = chars[start..k].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| err(col, format!("malformed number '{text}'")))?;
                out.push((Tok::Num(v), col));
                continue;
            }
            'x' => {
                k += 1;
                let start = k;
                while k < chars.len() && chars[k].is_ascii_digit() {
                    k += 1;
                }
                let idx = if start == k {
                    1
                } else {
                    let text: String = chars[start..k].iter().collect();
                    text.parse::<usize>()
                        .map_err(|_| err(col, "coordinate index too large"))?
                };
                if idx == 0 {
                    return Err(err(col, "coordinates are numbered from x1"));
                }
                if k < chars.len() && chars[k].is_alphabetic() {
                    return Err(err(k + 1, format!("unknown identifier near '{}'", chars[k])));
                }
                out.push((Tok::Var(Var::X(idx)), col));
                continue;
            }
            'r' | 'i' | 'n' => {
                if k + 1 < chars.len() && chars[k + 1].is_alphanumeric() {
                    return Err(err(col, "unknown identifier"));
                }
                let v = match c {
                    'r' => Var::R,
                    'i' => Var::I,
                    _ => Var::N,
                };
                out.push((Tok::Var(v), col));
            }
            other => return Err(err(col, format!("unexpected character '{other}'"))),
        }
        k += 1;
    }
    out.push((Tok::End, chars.len() + 1));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    let col = self.col();
                    let rhs = self.factor()?;
                    if rhs == Expr::Num(0.0) {
                        return Err(err(col, "division by literal zero"));
                    }
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let col = self.col();
            let exp = self.base()?;
            if let Expr::Num(e) = exp {
                if e.fract() != 0.0 {
                    return Err(err(col, "exponent must be an integer"));
                }
            }
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        let col = self.col();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Var(v) => Ok(Expr::Var(v)),
            Tok::LParen => {
                let e = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return Err(err(self.col(), "expected ')'"));
                }
                self.bump();
                Ok(e)
            }
            Tok::End => Err(err(col, "unexpected end of expression")),
            t => Err(err(col, format!("unexpected token {t:?}"))),
        }
    }
}

fn int_exponent(e: f64) -> Result<i32> {
    if e.fract() != 0.0 || e.abs() > i32::MAX as f64 {
        return Err(IfsError::Domain(format!("exponent {e} is not an integer")));
    }
    Ok(e as i32)
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser {
            toks: tokenize(src)?,
            pos: 0,
        };
        let e = p.expr()?;
        if *p.peek() != Tok::End {
            return Err(err(p.col(), "trailing input"));
        }
        Ok(e)
    }

    /// Every variable referenced by the expression.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            Expr::Neg(a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Rejects references to variables not permitted in a context.
    pub fn check_vars(&self, allow: impl Fn(Var) -> bool) -> Result<()> {
        for v in self.vars() {
            if !allow(v) {
                return Err(IfsError::Domain(format!("variable {v:?} is not allowed here")));
            }
        }
        Ok(())
    }

    pub fn eval(&self, env: &Env<'_>) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::X(k)) => *env
                .x
                .get(k - 1)
                .ok_or_else(|| IfsError::Domain(format!("x{k} is not bound")))?,
            Expr::Var(Var::R) => env.r,
            Expr::Var(Var::I) => env.i,
            Expr::Var(Var::N) => env.n,
            Expr::Neg(a) => -a.eval(env)?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => {
                let d = b.eval(env)?;
                if d == 0.0 {
                    return Err(IfsError::Domain("division by zero".into()));
                }
                a.eval(env)? / d
            }
            Expr::Pow(a, b) => a.eval(env)?.powi(int_exponent(b.eval(env)?)?),
        })
    }

    /// Replaces the index variable by `i` and folds constant subtrees.
    /// Fails when a divisor folds to zero, e.g. `x1/(i-i)`.
    pub fn substitute_index(&self, i: f64) -> Result<Expr> {
        let fold = |e: Expr| -> Result<Expr> {
            match &e {
                Expr::Neg(a) => {
                    if let Expr::Num(v) = **a {
                        return Ok(Expr::Num(-v));
                    }
                }
                Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                    if let Expr::Div(_, d) = &e {
                        if **d == Expr::Num(0.0) {
                            return Err(IfsError::Domain(format!(
                                "division by zero after substituting i = {i}"
                            )));
                        }
                    }
                    if let (Expr::Num(_), Expr::Num(_)) = (&**a, &**b) {
                        return Ok(Expr::Num(e.eval(&Env::default())?));
                    }
                }
                _ => {}
            }
            Ok(e)
        };
        let b = |e: &Expr| -> Result<Box<Expr>> { Ok(Box::new(e.substitute_index(i)?)) };
        match self {
            Expr::Var(Var::I) => Ok(Expr::Num(i)),
            Expr::Num(_) | Expr::Var(_) => Ok(self.clone()),
            Expr::Neg(a) => fold(Expr::Neg(b(a)?)),
            Expr::Add(x, y) => fold(Expr::Add(b(x)?, b(y)?)),
            Expr::Sub(x, y) => fold(Expr::Sub(b(x)?, b(y)?)),
            Expr::Mul(x, y) => fold(Expr::Mul(b(x)?, b(y)?)),
            Expr::Div(x, y) => fold(Expr::Div(b(x)?, b(y)?)),
            Expr::Pow(x, y) => fold(Expr::Pow(b(x)?, b(y)?)),
        }
    }

    /// Recognizes expressions affine in `x1..x_dim`; returns the coefficient
    /// row and constant term. `None` when the expression is not affine or
    /// mentions variables other than coordinates.
    pub fn as_affine(&self, dim: usize) -> Option<(Vec<f64>, f64)> {
        let konst = |c: f64| Some((vec![0.0; dim], c));
        let is_const = |a: &(Vec<f64>, f64)| a.0.iter().all(|v| *v == 0.0);
        match self {
            Expr::Num(v) => konst(*v),
            Expr::Var(Var::X(k)) if *k <= dim => {
                let mut row = vec![0.0; dim];
                row[k - 1] = 1.0;
                Some((row, 0.0))
            }
            Expr::Var(_) => None,
            Expr::Neg(a) => {
                let (r, c) = a.as_affine(dim)?;
                Some((r.iter().map(|v| -v).collect(), -c))
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let (ra, ca) = a.as_affine(dim)?;
                let (rb, cb) = b.as_affine(dim)?;
                let sign = if matches!(self, Expr::Add(..)) { 1.0 } else { -1.0 };
                Some((
                    ra.iter().zip(&rb).map(|(x, y)| x + sign * y).collect(),
                    ca + sign * cb,
                ))
            }
            Expr::Mul(a, b) => {
                let la = a.as_affine(dim)?;
                let lb = b.as_affine(dim)?;
                let (k, (r, c)) = if is_const(&la) {
                    (la.1, lb)
                } else if is_const(&lb) {
                    (lb.1, la)
                } else {
                    return None;
                };
                Some((r.iter().map(|v| v * k).collect(), c * k))
            }
            Expr::Div(a, b) => {
                let (r, c) = a.as_affine(dim)?;
                let lb = b.as_affine(dim)?;
                if !is_const(&lb) || lb.1 == 0.0 {
                    return None;
                }
                Some((r.iter().map(|v| v / lb.1).collect(), c / lb.1))
            }
            Expr::Pow(a, b) => {
                let la = a.as_affine(dim)?;
                let lb = b.as_affine(dim)?;
                if !is_const(&lb) {
                    return None;
                }
                let e = int_exponent(lb.1).ok()?;
                if is_const(&la) {
                    konst(la.1.powi(e))
                } else if e == 1 {
                    Some(la)
                } else if e == 0 {
                    konst(1.0)
                } else {
                    None
                }
            }
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = IfsError;
    fn from_str(s: &str) -> Result<Expr> {
        Expr::parse(s)
    }
}

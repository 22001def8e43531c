//! Expression language for parametrizations.
//!
//! ```text
//! patch  := "(" expr { "," expr } ")"
//! expr   := term { ("+" | "-") term }
//! term   := factor { ("*" | "/") factor }
//! factor := [ "-" ] atom [ "^" integer ]
//! atom   := number | ident | func "(" expr ")" | "(" expr ")"
//! func   := sin | cos | sinh | cosh | sqrt
//! ```
//!
//! Identifiers are parameters, except the reserved constant `pi`. Both the
//! ASCII hyphen and U+2212 are accepted as minus signs.

use std::fmt;

use thiserror::Error;

use crate::taylor::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Non-negative literal; negative values are `Neg(Const)`.
    Const(f64),
    /// The constant π, kept symbolic so it prints back as `pi`.
    Pi,
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("syntax error at EOF: unbalanced parenthesis")]
    Unbalanced,
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("function '{name}' takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of a non-positive value {0}")]
    SqrtDomain(f64),
    #[error("variable index {index} out of range ({count} variables)")]
    UnboundVariable { index: usize, count: usize },
    #[error("expression evaluated to a non-finite value")]
    NonFinite,
}

// smart constructors with light folding, used by differentiation
pub fn constant(c: f64) -> Expr {
    if c < 0.0 {
        Expr::Neg(Box::new(Expr::Const(-c)))
    } else {
        Expr::Const(c)
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Const(c) if *c == 1.0)
}

fn neg(e: Expr) -> Expr {
    match e {
        Expr::Neg(inner) => *inner,
        e if is_zero(&e) => e,
        e => Expr::Neg(Box::new(e)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if let Expr::Neg(y) = b {
        return sub(a, *y);
    }
    if is_zero(&a) {
        b
    } else if is_zero(&b) {
        a
    } else {
        Expr::Add(Box::new(a), Box::new(b))
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if let Expr::Neg(y) = b {
        return add(a, *y);
    }
    if is_zero(&b) {
        a
    } else if is_zero(&a) {
        neg(b)
    } else {
        Expr::Sub(Box::new(a), Box::new(b))
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match b {
        Expr::Neg(y) => mul_plain(neg_leftmost(a), *y),
        b => mul_plain(a, b),
    }
}

/// Negates a product through its leftmost factor, the shape the parser
/// gives `-a*b`.
fn neg_leftmost(e: Expr) -> Expr {
    match e {
        Expr::Mul(a, b) => Expr::Mul(Box::new(neg_leftmost(*a)), b),
        Expr::Div(a, b) => Expr::Div(Box::new(neg_leftmost(*a)), b),
        e => neg(e),
    }
}

fn mul_plain(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        Expr::Const(0.0)
    } else if is_one(&a) {
        b
    } else if is_one(&b) {
        a
    } else {
        Expr::Mul(Box::new(a), Box::new(b))
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        Expr::Const(0.0)
    } else if is_one(&b) {
        a
    } else {
        Expr::Div(Box::new(a), Box::new(b))
    }
}

fn pow(a: Expr, n: i32) -> Expr {
    match n {
        0 => Expr::Const(1.0),
        1 => a,
        _ => Expr::Pow(Box::new(a), n),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

impl Expr {
    pub fn eval<S: Real>(&self, vars: &[S]) -> Result<S, EvalError> {
        let template = vars.first().ok_or(EvalError::UnboundVariable { index: 0, count: 0 });
        let out = match self {
            Expr::Const(c) => template.map(|t| t.lift(*c))?,
            Expr::Pi => template.map(|t| t.lift(std::f64::consts::PI))?,
            Expr::Var(i) => vars
                .get(*i)
                .cloned()
                .ok_or(EvalError::UnboundVariable {
                    index: *i,
                    count: vars.len(),
                })?,
            Expr::Neg(a) => -a.eval(vars)?,
            Expr::Add(a, b) => a.eval(vars)? + b.eval(vars)?,
            Expr::Sub(a, b) => a.eval(vars)? - b.eval(vars)?,
            Expr::Mul(a, b) => a.eval(vars)? * b.eval(vars)?,
            Expr::Div(a, b) => {
                let den = b.eval(vars)?;
                if den.value() == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                a.eval(vars)? * den.recip()
            }
            Expr::Pow(a, n) => {
                let base = a.eval(vars)?;
                if *n < 0 && base.value() == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                base.powi(*n)
            }
            Expr::Call(f, a) => {
                let x = a.eval(vars)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Sqrt => {
                        if x.value() <= 0.0 {
                            return Err(EvalError::SqrtDomain(x.value()));
                        }
                        x.sqrt()
                    }
                }
            }
        };
        if !out.value().is_finite() {
            return Err(EvalError::NonFinite);
        }
        Ok(out)
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn differentiate(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) | Expr::Pi => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.differentiate(var)),
            Expr::Add(a, b) => add(a.differentiate(var), b.differentiate(var)),
            Expr::Sub(a, b) => sub(a.differentiate(var), b.differentiate(var)),
            Expr::Mul(a, b) => add(
                mul(a.differentiate(var), (**b).clone()),
                mul((**a).clone(), b.differentiate(var)),
            ),
            Expr::Div(a, b) => {
                let da = a.differentiate(var);
                let db = b.differentiate(var);
                if is_zero(&db) {
                    div(da, (**b).clone())
                } else {
                    div(
                        sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                        pow((**b).clone(), 2),
                    )
                }
            }
            Expr::Pow(a, n) => mul(
                mul(constant(*n as f64), pow((**a).clone(), n - 1)),
                a.differentiate(var),
            ),
            Expr::Call(f, a) => {
                let inner = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Sinh => call(Func::Cosh, inner),
                    Func::Cosh => call(Func::Sinh, inner),
                    Func::Sqrt => div(Expr::Const(1.0), mul(Expr::Const(2.0), call(Func::Sqrt, inner))),
                };
                mul(outer, a.differentiate(var))
            }
        }
    }

    /// Writes the expression back in DSL syntax using `names` for variables.
    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        Printer { expr: self, names }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }
}

struct Printer<'a> {
    expr: &'a Expr,
    names: &'a [String],
}

impl Printer<'_> {
    fn write(&self, e: &Expr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match e {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Pi => write!(f, "pi"),
            Expr::Var(i) => match self.names.get(*i) {
                Some(n) => write!(f, "{n}"),
                None => write!(f, "x{i}"),
            },
            Expr::Neg(a) => {
                write!(f, "-")?;
                self.child(a, a.precedence() >= 4, f)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                self.child(a, true, f)?;
                write!(f, "{}", if matches!(e, Expr::Add(..)) { " + " } else { " - " })?;
                self.child(b, b.precedence() >= 2, f)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                self.child(a, a.precedence() >= 2, f)?;
                write!(f, "{}", if matches!(e, Expr::Mul(..)) { "*" } else { "/" })?;
                self.child(b, b.precedence() >= 3, f)
            }
            Expr::Pow(a, n) => {
                self.child(a, a.precedence() >= 5, f)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                self.write(a, f)?;
                write!(f, ")")
            }
        }
    }

    fn child(&self, e: &Expr, bare: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if bare {
            self.write(e, f)
        } else {
            write!(f, "(")?;
            self.write(e, f)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(self.expr, f)
    }
}

/// A parsed vector-valued map together with its parameter names.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedMap {
    pub params: Vec<String>,
    pub exprs: Vec<Expr>,
}

impl fmt::Display for ParsedMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.exprs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", e.display(&self.params))?;
        }
        write!(f, ")")
    }
}

/// Parses a patch, inferring parameters in order of first appearance.
pub fn parse(text: &str) -> Result<ParsedMap, ParseError> {
    Parser::new(text, None).patch()
}

/// Parses a patch whose identifiers must all be among `params`.
pub fn parse_with_params(text: &str, params: &[String]) -> Result<ParsedMap, ParseError> {
    Parser::new(text, Some(params.to_vec())).patch()
}

/// Parses a single scalar expression with no free parameters (e.g. `2*pi`).
pub fn parse_constant(text: &str) -> Result<f64, ParseError> {
    let mut p = Parser::new(text, Some(Vec::new()));
    let e = p.expr()?;
    p.expect_end()?;
    let (line, column) = (1, 1);
    e.eval(&[0.0f64]).map_err(|err| ParseError {
        line,
        column,
        kind: ParseErrorKind::Syntax(err.to_string()),
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Eof,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut column) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, column);
        let single = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '+' => Some(Tok::Plus),
            '-' | '\u{2212}' => Some(Tok::Minus),
            '*' | '\u{00d7}' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned {
                tok,
                line: l0,
                column: c0,
            });
            i += 1;
            column += 1;
            continue;
        }
        if c == '\n' {
            line += 1;
            column = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            column += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
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
            let literal: String = chars[start..i].iter().collect();
            let value: f64 = literal.parse().map_err(|_| ParseError {
                line: l0,
                column: c0,
                kind: ParseErrorKind::Syntax(format!("malformed number '{literal}'")),
            })?;
            column += i - start;
            out.push(Spanned {
                tok: Tok::Num(value),
                line: l0,
                column: c0,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            column += i - start;
            out.push(Spanned {
                tok: Tok::Ident(chars[start..i].iter().collect()),
                line: l0,
                column: c0,
            });
            continue;
        }
        return Err(ParseError {
            line: l0,
            column: c0,
            kind: ParseErrorKind::Syntax(format!("unexpected character '{c}'")),
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    tokens: Result<Vec<Spanned>, ParseError>,
    pos: usize,
    params: Vec<String>,
    fixed: bool,
    depth: usize,
}

impl Parser {
    fn new(text: &str, params: Option<Vec<String>>) -> Self {
        let fixed = params.is_some();
        Self {
            tokens: tokenize(text),
            pos: 0,
            params: params.unwrap_or_default(),
            fixed,
            depth: 0,
        }
    }

    fn toks(&self) -> &[Spanned] {
        self.tokens.as_ref().expect("checked before parsing")
    }

    fn peek(&self) -> &Spanned {
        &self.toks()[self.pos]
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks()[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        let t = self.peek();
        ParseError {
            line: t.line,
            column: t.column,
            kind,
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let t = self.peek();
        if t.tok == Tok::Eof && self.depth > 0 {
            return self.error_here(ParseErrorKind::Unbalanced);
        }
        let found = match &t.tok {
            Tok::Eof => "end of input".to_string(),
            other => format!("{other:?}"),
        };
        self.error_here(ParseErrorKind::Syntax(format!("expected {wanted}, found {found}")))
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn expect_end(&mut self) -> Result<(), ParseError> {
        if let Err(e) = &self.tokens {
            return Err(e.clone());
        }
        if self.peek().tok == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    fn patch(mut self) -> Result<ParsedMap, ParseError> {
        if let Err(e) = &self.tokens {
            return Err(e.clone());
        }
        self.expect(Tok::LParen, "'('")?;
        self.depth += 1;
        let mut exprs = vec![self.expr()?];
        loop {
            match self.peek().tok {
                Tok::Comma => {
                    self.bump();
                    exprs.push(self.expr()?);
                }
                Tok::RParen => {
                    self.bump();
                    self.depth -= 1;
                    break;
                }
                _ => return Err(self.unexpected("',' or ')'")),
            }
        }
        self.expect_end()?;
        Ok(ParsedMap {
            params: self.params,
            exprs,
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        if let Err(e) = &self.tokens {
            return Err(e.clone());
        }
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
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

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek().tok {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let negate = if self.peek().tok == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let mut base = self.atom()?;
        if self.peek().tok == Tok::Caret {
            self.bump();
            let sign = if self.peek().tok == Tok::Minus {
                self.bump();
                -1
            } else {
                1
            };
            let t = self.bump();
            match t.tok {
                Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => {
                    base = Expr::Pow(Box::new(base), sign * v as i32);
                }
                _ => {
                    return Err(ParseError {
                        line: t.line,
                        column: t.column,
                        kind: ParseErrorKind::Syntax("exponent must be an integer".into()),
                    })
                }
            }
        }
        Ok(if negate { Expr::Neg(Box::new(base)) } else { base })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Const(v))
            }
            Tok::LParen => {
                self.bump();
                self.depth += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                self.depth -= 1;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek().tok == Tok::LParen {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError {
                        line: t.line,
                        column: t.column,
                        kind: ParseErrorKind::UnknownIdentifier(name.clone()),
                    })?;
                    self.bump();
                    self.depth += 1;
                    let arg = self.expr()?;
                    let mut found = 1;
                    while self.peek().tok == Tok::Comma {
                        self.bump();
                        self.expr()?;
                        found += 1;
                    }
                    self.expect(Tok::RParen, "')'")?;
                    self.depth -= 1;
                    if found != 1 {
                        return Err(ParseError {
                            line: t.line,
                            column: t.column,
                            kind: ParseErrorKind::Arity {
                                name,
                                expected: 1,
                                found,
                            },
                        });
                    }
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                if name == "pi" {
                    return Ok(Expr::Pi);
                }
                if Func::from_name(&name).is_some() {
                    return Err(ParseError {
                        line: t.line,
                        column: t.column,
                        kind: ParseErrorKind::Arity {
                            name,
                            expected: 1,
                            found: 0,
                        },
                    });
                }
                if let Some(i) = self.params.iter().position(|p| *p == name) {
                    return Ok(Expr::Var(i));
                }
                if self.fixed {
                    return Err(ParseError {
                        line: t.line,
                        column: t.column,
                        kind: ParseErrorKind::UnknownIdentifier(name),
                    });
                }
                self.params.push(name);
                Ok(Expr::Var(self.params.len() - 1))
            }
            _ => Err(self.unexpected("a number, identifier or '('")),
        }
    }
}

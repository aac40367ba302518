//! Small arithmetic expression language with exact symbolic derivatives.
//!
//! Grammar (lowest to highest precedence):
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := atom ('^' integer)*
//! atom    := number | ident | func '(' sum ')' | '(' sum ')'
//! ```
//!
//! `integer` may carry a sign and may be parenthesised, e.g. `x^-2`, `x^(3)`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("exponent at byte {pos} is not an integer")]
    NonIntegerExponent { pos: usize },
    #[error("domain error at x = {point:?}: {msg}")]
    Domain { point: Vec<f64>, msg: String },
    #[error("derivative order {0} exceeds the supported maximum of 4")]
    OrderTooHigh(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }
}

/// Expression tree over a fixed set of variables addressed by index.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

pub const MAX_ORDER: usize = 4;

/// Parses a one-variable expression in `x`.
pub fn parse_expression(src: &str) -> Result<Expr, ExprError> {
    parse_expression_in(src, &["x"])
}

/// Parses an expression whose free variables are drawn from `vars`.
/// `Var(i)` refers to `vars[i]`.
pub fn parse_expression_in(src: &str, vars: &[&str]) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        vars,
    };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn syntax(&self, msg: &str) -> ExprError {
        ExprError::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.product()?));
            } else if self.eat(b'-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.product()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(b'/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let mut base = self.atom()?;
        while self.eat(b'^') {
            let n = self.integer_exponent()?;
            base = Expr::Pow(Box::new(base), n);
        }
        Ok(base)
    }

    fn integer_exponent(&mut self) -> Result<i32, ExprError> {
        let paren = self.eat(b'(');
        let start = {
            self.skip_ws();
            self.pos
        };
        let neg = if self.eat(b'-') {
            true
        } else {
            self.eat(b'+');
            false
        };
        self.skip_ws();
        let (text, end) = self.number_text();
        if text.is_empty() {
            return Err(self.syntax("expected integer exponent"));
        }
        if text.contains(['.', 'e', 'E']) {
            return Err(ExprError::NonIntegerExponent { pos: start });
        }
        let mag: i32 = text
            .parse()
            .map_err(|_| ExprError::NonIntegerExponent { pos: start })?;
        self.pos = end;
        if paren {
            self.expect(b')')?;
        }
        Ok(if neg { -mag } else { mag })
    }

    /// Longest numeric literal at the cursor; does not advance.
    fn number_text(&self) -> (&str, usize) {
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i > self.pos && i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            let digits = j;
            while j < s.len() && s[j].is_ascii_digit() {
                j += 1;
            }
            if j > digits {
                i = j;
            }
        }
        // The scanned range is ASCII by construction.
        (std::str::from_utf8(&s[self.pos..i]).unwrap_or(""), i)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                let (text, end) = self.number_text();
                let v: f64 = text.parse().map_err(|_| ExprError::Syntax {
                    pos: start,
                    msg: format!("malformed number `{text}`"),
                })?;
                if !v.is_finite() {
                    return Err(ExprError::Syntax {
                        pos: start,
                        msg: format!("number `{text}` is out of range"),
                    });
                }
                self.pos = end;
                Ok(Expr::Const(v))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                let mut i = self.pos;
                while i < self.src.len() && (self.src[i].is_ascii_alphanumeric() || self.src[i] == b'_')
                {
                    i += 1;
                }
                let name = std::str::from_utf8(&self.src[start..i]).unwrap_or("");
                self.pos = i;
                let func = match name {
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    _ => None,
                };
                if let Some(func) = func {
                    self.expect(b'(')?;
                    let arg = self.sum()?;
                    self.expect(b')')?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                if name == "pi" {
                    return Ok(Expr::Const(std::f64::consts::PI));
                }
                match self.vars.iter().position(|v| *v == name) {
                    Some(k) => Ok(Expr::Var(k)),
                    None => Err(ExprError::UnknownIdentifier {
                        pos: start,
                        name: name.to_string(),
                    }),
                }
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(_) => Err(self.syntax("unexpected character")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }
}

// Smart constructors fold constants and drop neutral elements so that
// repeated differentiation stays small. Folds that overflow are kept
// symbolic so every constant in a tree stays finite.

fn c(v: f64) -> Expr {
    Expr::Const(v)
}

fn is_const(e: &Expr, v: f64) -> bool {
    matches!(e, Expr::Const(x) if *x == v)
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => c(-x),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if (x + y).is_finite() => c(x + y),
        _ if is_const(&a, 0.0) => b,
        _ if is_const(&b, 0.0) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if (x - y).is_finite() => c(x - y),
        _ if is_const(&b, 0.0) => a,
        _ if is_const(&a, 0.0) => neg(b),
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if (x * y).is_finite() => c(x * y),
        _ if is_const(&a, 0.0) || is_const(&b, 0.0) => c(0.0),
        _ if is_const(&a, 1.0) => b,
        _ if is_const(&b, 1.0) => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        _ if is_const(&a, 0.0) && !is_const(&b, 0.0) => c(0.0),
        _ if is_const(&b, 1.0) => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, n: i32) -> Expr {
    match (&a, n) {
        (_, 0) => c(1.0),
        (_, 1) => a,
        (Expr::Const(x), _) if x.powi(n).is_finite() => c(x.powi(n)),
        _ => Expr::Pow(Box::new(a), n),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

impl Expr {
    /// Exact derivative with respect to variable `var`.
    pub fn derivative(&self, var: usize) -> Expr {
        match self {
            Expr::Const(_) => c(0.0),
            Expr::Var(k) => c(if *k == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.derivative(var)),
            Expr::Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Expr::Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Expr::Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.derivative(var), (**b).clone()),
                    mul((**a).clone(), b.derivative(var)),
                ),
                pow((**b).clone(), 2),
            ),
            Expr::Pow(a, n) => mul(
                mul(c(f64::from(*n)), pow((**a).clone(), n - 1)),
                a.derivative(var),
            ),
            Expr::Call(f, a) => {
                let outer = match f {
                    Func::Sin => call(Func::Cos, (**a).clone()),
                    Func::Cos => neg(call(Func::Sin, (**a).clone())),
                    Func::Exp => call(Func::Exp, (**a).clone()),
                };
                mul(outer, a.derivative(var))
            }
        }
    }

    /// Repeated derivative; `order` up to [`MAX_ORDER`].
    pub fn nth_derivative(&self, var: usize, order: usize) -> Result<Expr, ExprError> {
        if order > MAX_ORDER {
            return Err(ExprError::OrderTooHigh(order));
        }
        let mut e = self.clone();
        for _ in 0..order {
            e = e.derivative(var);
        }
        Ok(e)
    }

    pub fn eval_at(&self, point: &[f64]) -> Result<f64, ExprError> {
        let domain = |msg: &str| ExprError::Domain {
            point: point.to_vec(),
            msg: msg.to_string(),
        };
        let v = match self {
            Expr::Const(x) => *x,
            Expr::Var(k) => *point
                .get(*k)
                .ok_or_else(|| domain("missing coordinate"))?,
            Expr::Neg(a) => -a.eval_at(point)?,
            Expr::Add(a, b) => a.eval_at(point)? + b.eval_at(point)?,
            Expr::Sub(a, b) => a.eval_at(point)? - b.eval_at(point)?,
            Expr::Mul(a, b) => a.eval_at(point)? * b.eval_at(point)?,
            Expr::Div(a, b) => {
                let den = b.eval_at(point)?;
                if den == 0.0 {
                    return Err(domain("division by zero"));
                }
                a.eval_at(point)? / den
            }
            Expr::Pow(a, n) => {
                let base = a.eval_at(point)?;
                if base == 0.0 && *n < 0 {
                    return Err(domain("negative power of zero"));
                }
                base.powi(*n)
            }
            Expr::Call(f, a) => {
                let x = a.eval_at(point)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(domain("non-finite value"))
        }
    }

    /// Evaluates a one-variable expression.
    pub fn eval(&self, x: f64) -> Result<f64, ExprError> {
        self.eval_at(&[x])
    }

    /// True if `var` occurs anywhere in the tree.
    pub fn depends_on(&self, var: usize) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(k) => *k == var,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.depends_on(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
        }
    }

    /// Renders the tree with full parenthesisation and the given variable names.
    pub fn render(&self, vars: &[&str]) -> String {
        struct R<'a>(&'a Expr, &'a [&'a str]);
        impl fmt::Display for R<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let v = self.1;
                match self.0 {
                    Expr::Const(x) => {
                        if *x < 0.0 {
                            write!(f, "(0-{})", -x)
                        } else {
                            write!(f, "{x:?}")
                        }
                    }
                    Expr::Var(k) => write!(f, "{}", v.get(*k).copied().unwrap_or("?")),
                    Expr::Neg(a) => write!(f, "(-{})", R(a, v)),
                    Expr::Add(a, b) => write!(f, "({} + {})", R(a, v), R(b, v)),
                    Expr::Sub(a, b) => write!(f, "({} - {})", R(a, v), R(b, v)),
                    Expr::Mul(a, b) => write!(f, "({} * {})", R(a, v), R(b, v)),
                    Expr::Div(a, b) => write!(f, "({} / {})", R(a, v), R(b, v)),
                    Expr::Pow(a, n) => write!(f, "({}^({}))", R(a, v), n),
                    Expr::Call(func, a) => write!(f, "{}({})", func.name(), R(a, v)),
                }
            }
        }
        R(self, vars).to_string()
    }
}

/// Evaluates the `order`-th derivative of a one-variable expression at `point`.
pub fn eval_deriv(ast: &Expr, point: f64, order: usize) -> Result<f64, ExprError> {
    ast.nth_derivative(0, order)?.eval(point)
}

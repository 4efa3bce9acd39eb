//! Symbol expressions: a small infix language for bounded phase-space
//! functions, with a recursive-descent parser, an evaluator and a printer
//! whose output parses back to the same tree.
//!
//! Grammar (whitespace-insensitive, usual precedence, left-associative):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | primary
//! primary := number | variable | "pi" | function "(" expr ")" | "(" expr ")"
//! ```
//!
//! Variables are `x`, `xi` (first coordinate pair) and `x1..xn`, `xi1..xin`.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::phase::PhasePoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X(usize),
    Xi(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tanh,
    Exp,
    Atan,
    Sqrt,
    /// `gaussian(t) = exp(-t²)`
    Gaussian,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tanh" => Func::Tanh,
            "exp" => Func::Exp,
            "atan" => Func::Atan,
            "sqrt" => Func::Sqrt,
            "gaussian" => Func::Gaussian,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Atan => "atan",
            Func::Sqrt => "sqrt",
            Func::Gaussian => "gaussian",
        }
    }

    fn apply(self, t: f64) -> Option<f64> {
        let v = match self {
            Func::Sin => t.sin(),
            Func::Cos => t.cos(),
            Func::Tanh => t.tanh(),
            Func::Exp => t.exp(),
            Func::Atan => t.atan(),
            Func::Sqrt if t < 0.0 => return None,
            Func::Sqrt => t.sqrt(),
            Func::Gaussian => (-t * t).exp(),
        };
        Some(v)
    }

    /// Sup-norm of the function over ℝ, when finite.
    fn range_bound(self) -> Option<f64> {
        match self {
            Func::Sin | Func::Cos | Func::Tanh | Func::Gaussian => Some(1.0),
            Func::Atan => Some(std::f64::consts::FRAC_PI_2),
            Func::Exp | Func::Sqrt => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    fn eval(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        let v = match self {
            Expr::Num(c) => *c,
            Expr::Var(Var::X(i)) => x[*i],
            Expr::Var(Var::Xi(i)) => xi[*i],
            Expr::Neg(a) => -a.eval(x, xi)?,
            Expr::Add(a, b) => a.eval(x, xi)? + b.eval(x, xi)?,
            Expr::Sub(a, b) => a.eval(x, xi)? - b.eval(x, xi)?,
            Expr::Mul(a, b) => a.eval(x, xi)? * b.eval(x, xi)?,
            Expr::Div(a, b) => {
                let den = b.eval(x, xi)?;
                if den == 0.0 {
                    return Err(self.domain("division by zero"));
                }
                a.eval(x, xi)? / den
            }
            Expr::Call(f, a) => f
                .apply(a.eval(x, xi)?)
                .ok_or_else(|| self.domain("square root of a negative number"))?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.domain("non-finite value"))
        }
    }

    fn domain(&self, message: &str) -> Error {
        Error::Domain {
            expr: self.to_string(),
            message: message.to_string(),
        }
    }

    fn max_index(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(Var::X(i)) | Expr::Var(Var::Xi(i)) => i + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.max_index(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.max_index().max(b.max_index())
            }
        }
    }

    fn static_bound(&self) -> Option<f64> {
        match self {
            Expr::Num(c) => Some(c.abs()),
            Expr::Var(_) => None,
            Expr::Neg(a) => a.static_bound(),
            Expr::Add(a, b) | Expr::Sub(a, b) => Some(a.static_bound()? + b.static_bound()?),
            Expr::Mul(a, b) => Some(a.static_bound()? * b.static_bound()?),
            Expr::Div(_, _) => None,
            Expr::Call(f, a) => match f {
                Func::Exp => a.static_bound().map(f64::exp),
                Func::Sqrt => a.static_bound().map(f64::sqrt),
                _ => f.range_bound(),
            },
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            _ => 4,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, parenthesize: bool) -> fmt::Result {
        if parenthesize {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) if *c == std::f64::consts::PI => write!(f, "pi"),
            Expr::Num(c) => write!(f, "{c:?}"),
            Expr::Var(Var::X(0)) => write!(f, "x"),
            Expr::Var(Var::Xi(0)) => write!(f, "xi"),
            Expr::Var(Var::X(i)) => write!(f, "x{}", i + 1),
            Expr::Var(Var::Xi(i)) => write!(f, "xi{}", i + 1),
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.fmt_child(f, a.precedence() < 3)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let (op, prec) = match self {
                    Expr::Add(..) => (" + ", 1),
                    Expr::Sub(..) => (" - ", 1),
                    Expr::Mul(..) => ("*", 2),
                    _ => ("/", 2),
                };
                a.fmt_child(f, a.precedence() < prec)?;
                write!(f, "{op}")?;
                b.fmt_child(f, b.precedence() <= prec)
            }
        }
    }
}

/// A parsed symbol together with its declared metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolExpr {
    ast: Expr,
    bound: Option<f64>,
    smooth: bool,
}

impl SymbolExpr {
    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn constant(c: f64) -> Self {
        SymbolExpr {
            ast: Expr::Num(c),
            bound: Some(c.abs()),
            smooth: true,
        }
    }

    /// Declared sup bound `M` with `|f| ≤ M`; inferred from the expression
    /// when every leaf is bounded.
    pub fn bound(&self) -> Option<f64> {
        self.bound
    }

    pub fn is_bounded(&self) -> bool {
        self.bound.is_some()
    }

    pub fn is_smooth(&self) -> bool {
        self.smooth
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    /// Marks the symbol as not smooth, e.g. for symbols whose derivatives
    /// blow up somewhere.
    pub fn non_smooth(mut self) -> Self {
        self.smooth = false;
        self
    }

    /// Number of coordinate pairs the expression reads.
    pub fn dim(&self) -> usize {
        self.ast.max_index().max(1)
    }

    pub fn eval_real(&self, p: &PhasePoint) -> Result<f64> {
        if p.dim() < self.ast.max_index() {
            return Err(Error::Dimension {
                expected: self.ast.max_index(),
                found: p.dim(),
            });
        }
        self.ast.eval(&p.x, &p.xi)
    }

    /// Planar fast path: evaluates at `(x, ξ) ∈ ℝ²`.
    pub fn eval_planar(&self, x: f64, xi: f64) -> Result<f64> {
        if self.ast.max_index() > 1 {
            return Err(Error::Dimension {
                expected: self.ast.max_index(),
                found: 1,
            });
        }
        self.ast.eval(&[x], &[xi])
    }

    /// Checks a sample value against the declared bound.
    pub fn check_bound(&self, value: f64) -> Result<()> {
        match self.bound {
            Some(m) if value.abs() > m * (1.0 + 1e-12) => Err(Error::Unbounded { value, bound: m }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SymbolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt(f)
    }
}

impl std::str::FromStr for SymbolExpr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_symbol(s)
    }
}

pub fn parse_symbol(text: &str) -> Result<SymbolExpr> {
    let mut parser = Parser { src: text, pos: 0 };
    let ast = parser.expr()?;
    parser.skip_ws();
    if parser.pos < text.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    let bound = ast.static_bound();
    Ok(SymbolExpr {
        ast,
        bound,
        smooth: true,
    })
}

/// Parses and evaluates an expression without variables, such as `7*pi/8`.
pub fn parse_constant(text: &str) -> Result<f64> {
    let f = parse_symbol(text)?;
    if f.ast.max_index() > 0 {
        return Err(Error::Invalid(format!("`{}` is not a constant expression", text.trim())));
    }
    f.ast.eval(&[], &[])
}

pub fn eval_symbol(f: &SymbolExpr, p: &PhasePoint) -> Result<Complex64> {
    f.eval_real(p).map(|v| Complex64::new(v, 0.0))
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    self.skip_ws();
                    return Err(self.error("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(start),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                self.identifier(name, start)
            }
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number(&mut self, start: usize) -> Result<Expr> {
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[start..end];
        let value: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        self.pos = end;
        Ok(Expr::Num(value))
    }

    fn identifier(&mut self, name: &str, start: usize) -> Result<Expr> {
        if let Some(func) = Func::from_name(name) {
            let args = self.call_args(name)?;
            if args.len() != 1 {
                return Err(Error::Arity {
                    function: name.to_string(),
                    expected: 1,
                    found: args.len(),
                });
            }
            let arg = args.into_iter().next().expect("one argument");
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if let Some(var) = parse_var(name) {
            return Ok(Expr::Var(var));
        }
        if name == "pi" {
            return Ok(Expr::Num(std::f64::consts::PI));
        }
        Err(Error::UnknownIdentifier {
            name: name.to_string(),
            offset: start,
        })
    }

    fn call_args(&mut self, name: &str) -> Result<Vec<Expr>> {
        if !self.eat('(') {
            self.skip_ws();
            return Err(self.error(&format!("expected `(` after `{name}`")));
        }
        let mut args = Vec::new();
        if self.eat(')') {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(',') {
                continue;
            }
            if self.eat(')') {
                return Ok(args);
            }
            self.skip_ws();
            return Err(self.error("expected `)`"));
        }
    }
}

fn parse_var(name: &str) -> Option<Var> {
    let (ctor, digits): (fn(usize) -> Var, &str) = if let Some(rest) = name.strip_prefix("xi") {
        (Var::Xi, rest)
    } else if let Some(rest) = name.strip_prefix('x') {
        (Var::X, rest)
    } else {
        return None;
    };
    if digits.is_empty() {
        return Some(ctor(0));
    }
    if digits.starts_with('0') {
        return None;
    }
    let k: usize = digits.parse().ok()?;
    Some(ctor(k - 1))
}

/// A named symbol with a hand-written closed form, used to cross-check the
/// evaluator.
pub struct BuiltinSymbol {
    pub name: &'static str,
    pub text: &'static str,
    pub closed_form: fn(f64, f64) -> f64,
}

pub fn builtin_symbols() -> Vec<BuiltinSymbol> {
    fn gauss(t: f64) -> f64 {
        (-t * t).exp()
    }
    vec![
        BuiltinSymbol {
            name: "harper",
            text: "cos(x) + cos(xi)",
            closed_form: |x, xi| x.cos() + xi.cos(),
        },
        BuiltinSymbol {
            name: "tanh-product",
            text: "tanh(x)*tanh(xi)",
            closed_form: |x, xi| x.tanh() * xi.tanh(),
        },
        BuiltinSymbol {
            name: "radial-tanh",
            text: "tanh(x*x + xi*xi)",
            closed_form: |x, xi| (x * x + xi * xi).tanh(),
        },
        BuiltinSymbol {
            name: "radial-atan",
            text: "2*atan(x*x + xi*xi)/pi",
            closed_form: |x, xi| 2.0 * (x * x + xi * xi).atan() / std::f64::consts::PI,
        },
        BuiltinSymbol {
            name: "gaussian",
            text: "gaussian(x)*gaussian(xi)",
            closed_form: |x, xi| gauss(x) * gauss(xi),
        },
        BuiltinSymbol {
            name: "quantum-plane",
            text: "(1 + x - xi)*gaussian(x)*gaussian(xi)",
            closed_form: |y, eta| (1.0 + y - eta) * gauss(y) * gauss(eta),
        },
    ]
}

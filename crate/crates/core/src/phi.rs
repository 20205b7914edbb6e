//! Monotone gauge functions on `[0, ∞)` as small expression trees.
//!
//! Grammar (whitespace ignored, `u` or `x` is the variable):
//!
//! ```text
//! expr   := term ('+' term)*
//! term   := factor ('*' factor)*
//! factor := atom ('^' number)?
//! atom   := number | 'u' | 'x' | '(' expr ')' | func '(' expr ')' | func
//! func   := sqrt | log1p | expm1
//! ```
//!
//! A bare function name stands for that function applied to `u`, so `"sqrt"`
//! is `√u`. Constants are nonnegative; there is no subtraction.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var,
    Const(f64),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Sqrt(Box<Expr>),
    Log1p(Box<Expr>),
    ExpM1(Box<Expr>),
    /// `outer(inner(u))`.
    Compose(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Expr::Var => u,
            Expr::Const(c) => *c,
            Expr::Add(a, b) => a.eval(u) + b.eval(u),
            Expr::Mul(a, b) => {
                let (x, y) = (a.eval(u), b.eval(u));
                // 0 · ∞ arises only from a vanishing factor at u = 0
                if x == 0.0 || y == 0.0 {
                    0.0
                } else {
                    x * y
                }
            }
            Expr::Pow(a, beta) => a.eval(u).powf(*beta),
            Expr::Sqrt(a) => a.eval(u).sqrt(),
            Expr::Log1p(a) => a.eval(u).ln_1p(),
            Expr::ExpM1(a) => a.eval(u).exp_m1(),
            Expr::Compose(outer, inner) => outer.eval(inner.eval(u)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) => 0,
            Expr::Mul(..) => 1,
            Expr::Pow(..) => 2,
            _ => 3,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            f.write_str("(")?;
            self.fmt_prec(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Var => f.write_str("u"),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Add(a, b) => {
                a.fmt_prec(f, 0)?;
                f.write_str(" + ")?;
                b.fmt_prec(f, 1)
            }
            Expr::Mul(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str("*")?;
                b.fmt_prec(f, 2)
            }
            Expr::Pow(a, beta) => {
                a.fmt_prec(f, 3)?;
                write!(f, "^{beta}")
            }
            Expr::Sqrt(a) => call(f, "sqrt", a),
            Expr::Log1p(a) => call(f, "log1p", a),
            Expr::ExpM1(a) => call(f, "expm1", a),
            Expr::Compose(outer, inner) => outer.substitute(inner).fmt_prec(f, min),
        }
    }

    /// The tree with every `u` replaced by `inner`.
    pub fn substitute(&self, inner: &Expr) -> Expr {
        let s = |e: &Expr| Box::new(e.substitute(inner));
        match self {
            Expr::Var => inner.clone(),
            Expr::Const(c) => Expr::Const(*c),
            Expr::Add(a, b) => Expr::Add(s(a), s(b)),
            Expr::Mul(a, b) => Expr::Mul(s(a), s(b)),
            Expr::Pow(a, beta) => Expr::Pow(s(a), *beta),
            Expr::Sqrt(a) => Expr::Sqrt(s(a)),
            Expr::Log1p(a) => Expr::Log1p(s(a)),
            Expr::ExpM1(a) => Expr::ExpM1(s(a)),
            Expr::Compose(outer, mid) => Expr::Compose(outer.clone(), s(mid)),
        }
    }
}

fn call(f: &mut fmt::Formatter<'_>, name: &str, arg: &Expr) -> fmt::Result {
    write!(f, "{name}(")?;
    arg.fmt_prec(f, 0)?;
    f.write_str(")")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, what: &str) -> Error {
        Error::Parse(format!("gauge `{}`: {what} at offset {}", self.src, self.pos))
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while self.eat('+') {
            lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while self.eat('*') {
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let beta = self.number()?;
            if beta <= 0.0 {
                return Err(self.error("exponent must be positive"));
            }
            return Ok(Expr::Pow(Box::new(base), beta));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let mut end = 0;
        for (i, c) in rest.char_indices() {
            let exp_sign = (c == '-' || c == '+') && i > 0 && matches!(rest.as_bytes()[i - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exp_sign {
                end = i + 1;
            } else {
                break;
            }
        }
        let value: f64 = rest[..end].parse().map_err(|_| self.error("expected a number"))?;
        if !value.is_finite() {
            return Err(self.error("constant must be finite"));
        }
        self.pos += end;
        Ok(value)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => Ok(Expr::Const(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                let rest = &self.src[self.pos..];
                let len = rest
                    .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
                    .unwrap_or(rest.len());
                let name = &rest[..len];
                self.pos += len;
                let wrap: fn(Box<Expr>) -> Expr = match name {
                    "u" | "x" => return Ok(Expr::Var),
                    "sqrt" => Expr::Sqrt,
                    "log1p" => Expr::Log1p,
                    "expm1" => Expr::ExpM1,
                    _ => {
                        self.pos -= len;
                        return Err(self.error(&format!("unknown name `{name}`")));
                    }
                };
                let arg = if self.eat('(') {
                    let e = self.expr()?;
                    if !self.eat(')') {
                        return Err(self.error("expected `)`"));
                    }
                    e
                } else {
                    Expr::Var
                };
                Ok(wrap(Box::new(arg)))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr> {
    let mut p = Parser { src, pos: 0 };
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

/// Sample points `2^k`, `k ∈ [-30, 60]`, plus `0`.
pub fn log_grid() -> Vec<f64> {
    std::iter::once(0.0)
        .chain((-60..=120).map(|k| 2f64.powf(k as f64 / 2.0)))
        .collect()
}

/// A validated gauge: `φ(0) = 0` and nondecreasing on the sampling grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PhiSpec {
    expr: Expr,
}

impl PhiSpec {
    pub fn new(expr: Expr) -> Result<Self> {
        let at0 = expr.eval(0.0);
        if at0 != 0.0 {
            return Err(Error::param("phi", format!("`{expr}` takes the value {at0} at 0")));
        }
        let mut prev = 0.0;
        for u in log_grid() {
            let v = expr.eval(u);
            if v.is_nan() || v < prev {
                return Err(Error::param(
                    "phi",
                    format!("`{expr}` is not nondecreasing near u = {u:e}"),
                ));
            }
            prev = v;
        }
        Ok(PhiSpec { expr })
    }

    pub fn parse(src: &str) -> Result<Self> {
        Self::new(parse_expr(src)?)
    }

    pub fn sqrt() -> Self {
        PhiSpec { expr: Expr::Sqrt(Box::new(Expr::Var)) }
    }

    /// `u ↦ a·√u`.
    pub fn scaled_sqrt(a: f64) -> Result<Self> {
        Self::new(Expr::Mul(Box::new(Expr::Const(a)), Box::new(Expr::Sqrt(Box::new(Expr::Var)))))
    }

    pub fn zero() -> Self {
        PhiSpec { expr: Expr::Const(0.0) }
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.expr.eval(u)
    }

    /// `u ↦ self(√u)`. For a one-dimensional gauge `ψ` this is the
    /// two-dimensional gauge `φ` with `φ(u²) = ψ(u)`.
    pub fn compose_sqrt(&self) -> PhiSpec {
        PhiSpec {
            expr: Expr::Compose(Box::new(self.expr.clone()), Box::new(Expr::Sqrt(Box::new(Expr::Var)))),
        }
    }

    /// `φ(u)/√u` on the sampling grid.
    pub fn sqrt_ratio_profile(&self) -> GrowthProfile {
        GrowthProfile::sample(|u| self.eval(u) / u.sqrt())
    }

    /// `ψ(u)/u` on the sampling grid.
    pub fn linear_ratio_profile(&self) -> GrowthProfile {
        GrowthProfile::sample(|u| self.eval(u) / u)
    }
}

impl fmt::Display for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.expr {
            Expr::Sqrt(a) if **a == Expr::Var => f.write_str("sqrt"),
            Expr::Log1p(a) if **a == Expr::Var => f.write_str("log1p"),
            Expr::ExpM1(a) if **a == Expr::Var => f.write_str("expm1"),
            e => e.fmt(f),
        }
    }
}

impl FromStr for PhiSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PhiSpec::parse(s)
    }
}

impl Serialize for PhiSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PhiSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PhiSpec::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// A sampled growth ratio `u ↦ g(u)` over `u = 2^{k/2}`, `k ∈ [-60, 120]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthProfile {
    pub u: Vec<f64>,
    pub ratio: Vec<f64>,
}

impl GrowthProfile {
    fn sample(g: impl Fn(f64) -> f64) -> Self {
        let u: Vec<f64> = log_grid().into_iter().skip(1).collect();
        let ratio = u.iter().map(|&u| g(u)).collect();
        GrowthProfile { u, ratio }
    }

    /// Largest sampled value.
    pub fn sup(&self) -> f64 {
        self.ratio.iter().fold(0.0f64, |m, &r| if r.is_nan() { m } else { m.max(r) })
    }

    /// Sampled value at the largest `u`.
    pub fn tail(&self) -> f64 {
        *self.ratio.last().expect("nonempty grid")
    }

    /// The upper half of the grid is strictly increasing and ends above
    /// `factor` times its starting value: the sampled signature of `g → ∞`.
    pub fn looks_unbounded(&self, factor: f64) -> bool {
        let tail = &self.ratio[self.ratio.len() / 2..];
        let rising = tail
            .windows(2)
            .all(|w| w[1] > w[0] || (w[0] == f64::INFINITY && w[1] == f64::INFINITY));
        rising && tail[tail.len() - 1] > factor * tail[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_evaluates() {
        let cases = [
            ("sqrt", 4.0, 2.0),
            ("u*log1p(u)", 1.0, 2f64.ln()),
            ("2*u^0.5", 9.0, 6.0),
            ("expm1(u) + u", 0.0, 0.0),
            ("sqrt(u*log1p(u))", 0.0, 0.0),
            ("x", 3.0, 3.0),
            ("log1p(log1p)", 1.0, 2f64.ln().ln_1p()),
            ("1e-1*u", 10.0, 1.0),
        ];
        for (src, u, want) in cases {
            let phi = PhiSpec::parse(src).unwrap();
            assert!((phi.eval(u) - want).abs() < 1e-12, "{src}");
        }
    }

    #[test]
    fn display_roundtrips() {
        for src in ["sqrt", "u*log1p", "(u + 1)^2*u", "expm1(sqrt(u))*3", "u^0.5 + u"] {
            let e = parse_expr(src).unwrap();
            let again = parse_expr(&e.to_string()).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
        assert_eq!(PhiSpec::parse("u*log1p").unwrap().to_string(), "u*log1p(u)");
        assert_eq!(PhiSpec::parse("sqrt(u)").unwrap().to_string(), "sqrt");
    }

    #[test]
    fn rejects_bad_input() {
        for src in ["", "u +", "cos(u)", "u^-1", "(u", "u)", "u - 1", "u^0"] {
            assert!(parse_expr(src).is_err() || PhiSpec::parse(src).is_err(), "{src}");
        }
        assert!(matches!(PhiSpec::parse("u + 1"), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn zero_map_is_a_gauge() {
        assert_eq!(PhiSpec::parse("0").unwrap(), PhiSpec::zero());
        assert_eq!(PhiSpec::zero().eval(1e9), 0.0);
    }

    #[test]
    fn lifting_matches_squares() {
        let psi = PhiSpec::parse("u*log1p(u)").unwrap();
        let phi = psi.compose_sqrt();
        for u in [0.0, 0.3, 2.0, 17.0, 1e4] {
            assert!((phi.eval(u * u) - psi.eval(u)).abs() <= 1e-12 * psi.eval(u).max(1.0));
        }
        assert_eq!(phi.to_string(), "sqrt(u)*log1p(sqrt(u))");
        assert_eq!(PhiSpec::parse(&phi.to_string()).unwrap().eval(9.0), phi.eval(9.0));
    }

    #[test]
    fn growth_classification() {
        assert!(!PhiSpec::sqrt().sqrt_ratio_profile().looks_unbounded(2.0));
        assert_eq!(PhiSpec::sqrt().sqrt_ratio_profile().sup(), 1.0);
        assert!(PhiSpec::parse("u").unwrap().sqrt_ratio_profile().looks_unbounded(2.0));
        assert!(PhiSpec::parse("u*log1p").unwrap().linear_ratio_profile().looks_unbounded(2.0));
        assert!(!PhiSpec::parse("u").unwrap().linear_ratio_profile().looks_unbounded(2.0));
    }

    #[test]
    fn serde_as_string() {
        let phi = PhiSpec::parse("sqrt").unwrap();
        let json = serde_json::to_string(&phi).unwrap();
        assert_eq!(json, "\"sqrt\"");
        assert_eq!(serde_json::from_str::<PhiSpec>(&json).unwrap(), phi);
        assert!(serde_json::from_str::<PhiSpec>("\"u+1\"").is_err());
    }
}

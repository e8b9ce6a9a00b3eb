//! Polynomials with real coefficients in real variables, and a small text
//! parser for them.
//!
//! Accepted grammar (whitespace ignored):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*      // '/' only by a constant
//! unary  := ('+' | '-') unary | power
//! power  := atom ('^' integer)?
//! atom   := number | variable | '(' expr ')'
//! ```
//!
//! Numbers are decimal literals with an optional exponent (`2.5e-7`).

use std::collections::BTreeMap;
use std::fmt;

use super::{PolyError, MAX_DEGREE};

/// Sparse polynomial with `f64` coefficients over `nvars` real variables.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPoly {
    nvars: usize,
    terms: BTreeMap<Vec<u8>, f64>,
}

impl RealPoly {
    pub fn zero(nvars: usize) -> Self {
        RealPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = RealPoly::zero(nvars);
        p.push(vec![0; nvars], c);
        p.normalize();
        p
    }

    pub fn var(nvars: usize, k: usize) -> Self {
        assert!(k < nvars);
        let mut e = vec![0; nvars];
        e[k] = 1;
        RealPoly::from_terms(nvars, [(e, 1.0)])
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u8>, f64)>) -> Self {
        let mut p = RealPoly::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars);
            p.push(e, c);
        }
        p.normalize();
        p
    }

    fn push(&mut self, e: Vec<u8>, c: f64) {
        *self.terms.entry(e).or_insert(0.0) += c;
    }

    fn normalize(&mut self) {
        self.terms.retain(|_, c| c.abs() >= super::DROP_TOL);
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &f64)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&a| a as u32).sum())
            .max()
            .unwrap_or(0)
    }

    /// Whether every term has total degree `d`.
    pub fn is_homogeneous(&self, d: u32) -> bool {
        self.terms
            .keys()
            .all(|e| e.iter().map(|&a| a as u32).sum::<u32>() == d)
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> RealPoly {
        let mut p = RealPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        };
        p.normalize();
        p
    }

    pub fn add(&self, other: &RealPoly) -> RealPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.push(e.clone(), *c);
        }
        out.normalize();
        out
    }

    pub fn sub(&self, other: &RealPoly) -> RealPoly {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &RealPoly) -> Result<RealPoly, PolyError> {
        assert_eq!(self.nvars, other.nvars);
        let degree = self.degree() + other.degree();
        if !self.is_zero() && !other.is_zero() && degree > MAX_DEGREE {
            return Err(PolyError::DegreeCap { degree });
        }
        let mut out = RealPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.push(e, ca * cb);
            }
        }
        out.normalize();
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<RealPoly, PolyError> {
        let mut out = RealPoly::constant(self.nvars, 1.0);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Partial derivative in variable `k`.
    pub fn deriv(&self, k: usize) -> RealPoly {
        assert!(k < self.nvars);
        let mut out = RealPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[k] > 0 {
                let mut de = e.clone();
                de[k] -= 1;
                out.push(de, c * e[k] as f64);
            }
        }
        out.normalize();
        out
    }

    pub fn gradient(&self) -> Vec<RealPoly> {
        (0..self.nvars).map(|k| self.deriv(k)).collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars);
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(x)
                    .fold(*c, |acc, (&a, &xi)| acc * xi.powi(a as i32))
            })
            .sum()
    }

    /// Substitutes `value` for the last variable, returning a polynomial in
    /// the remaining `nvars - 1` variables.
    pub fn fix_last(&self, value: f64) -> RealPoly {
        assert!(self.nvars >= 2);
        let m = self.nvars - 1;
        let mut out = RealPoly::zero(m);
        for (e, c) in &self.terms {
            out.push(e[..m].to_vec(), c * value.powi(e[m] as i32));
        }
        out.normalize();
        out
    }

    /// Appends one extra variable that does not occur.
    pub fn extend_vars(&self) -> RealPoly {
        RealPoly {
            nvars: self.nvars + 1,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| {
                    let mut e = e.clone();
                    e.push(0);
                    (e, *c)
                })
                .collect(),
        }
    }
}

/// Parses an expression in `x1..xn, y1..yn`. Variable order in the result is
/// `(x_1, ..., x_n, y_1, ..., y_n)`.
pub fn parse_real(text: &str, n: usize) -> Result<RealPoly, PolyError> {
    let resolve = |name: &str| -> Option<usize> {
        let (head, idx) = name.split_at(1);
        let j: usize = idx.parse().ok()?;
        if j == 0 || j > n {
            return None;
        }
        match head {
            "x" => Some(j - 1),
            "y" => Some(n + j - 1),
            _ => None,
        }
    };
    Parser::new(text, 2 * n, &resolve).parse()
}

/// Parses an expression in `x1..xm` only (used for homogeneous inputs).
pub fn parse_real_vars(text: &str, m: usize) -> Result<RealPoly, PolyError> {
    let resolve = |name: &str| -> Option<usize> {
        let idx = name.strip_prefix('x')?;
        let j: usize = idx.parse().ok()?;
        (j >= 1 && j <= m).then(|| j - 1)
    };
    Parser::new(text, m, &resolve).parse()
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    nvars: usize,
    resolve: &'a dyn Fn(&str) -> Option<usize>,
}

/// Prints terms as `c*x1^a1*x2^a2` with variables named `x1..x{nvars}`,
/// highest exponent vectors first, so the output parses back with
/// [`parse_real_vars`].
impl fmt::Display for RealPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let sign = if *c < 0.0 { "-" } else { "+" };
            if i == 0 {
                if *c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            write!(f, "{:?}", c.abs())?;
            for (k, &a) in e.iter().enumerate() {
                match a {
                    0 => {}
                    1 => write!(f, "*x{}", k + 1)?,
                    _ => write!(f, "*x{}^{a}", k + 1)?,
                }
            }
        }
        Ok(())
    }
}

impl<'a> Parser<'a> {
    fn new(text: &str, nvars: usize, resolve: &'a dyn Fn(&str) -> Option<usize>) -> Self {
        Parser {
            chars: text.chars().collect(),
            pos: 0,
            nvars,
            resolve,
        }
    }

    fn err(&self, message: impl Into<String>) -> PolyError {
        PolyError::Parse {
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<RealPoly, PolyError> {
        if self.peek().is_none() {
            return Err(self.err("empty expression"));
        }
        let p = self.expr()?;
        if let Some(c) = self.peek() {
            return Err(self.err(format!("unexpected character '{c}'")));
        }
        Ok(p)
    }

    fn expr(&mut self) -> Result<RealPoly, PolyError> {
        let mut acc = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                '+' => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                '-' => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<RealPoly, PolyError> {
        let mut acc = self.unary()?;
        while let Some(c) = self.peek() {
            match c {
                '*' => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = acc.mul(&rhs).map_err(|e| self.err(e.to_string()))?;
                }
                '/' => {
                    self.pos += 1;
                    self.skip_ws();
                    let start = self.pos;
                    let rhs = self.unary()?;
                    let c = constant_value(&rhs).ok_or_else(|| PolyError::Parse {
                        column: start + 1,
                        message: "division is only allowed by a constant".into(),
                    })?;
                    if c == 0.0 {
                        return Err(PolyError::Parse {
                            column: start + 1,
                            message: "division by zero".into(),
                        });
                    }
                    acc = acc.scale(1.0 / c);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<RealPoly, PolyError> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(self.unary()?.scale(-1.0))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<RealPoly, PolyError> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.err("expected a non-negative integer exponent"));
            }
            let text: String = self.chars[start..self.pos].iter().collect();
            let k: u32 = text.parse().map_err(|_| self.err("exponent too large"))?;
            if k > MAX_DEGREE {
                return Err(PolyError::DegreeCap { degree: k });
            }
            return base.pow(k).map_err(|e| self.err(e.to_string()));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<RealPoly, PolyError> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let p = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(p)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => {
                let start = self.pos;
                while self.pos < self.chars.len()
                    && (self.chars[self.pos].is_ascii_digit() || self.chars[self.pos] == '.')
                {
                    self.pos += 1;
                }
                // Optional exponent, e.g. `2.5e-7`.
                if matches!(self.chars.get(self.pos), Some('e' | 'E')) {
                    let mut k = self.pos + 1;
                    if matches!(self.chars.get(k), Some('+' | '-')) {
                        k += 1;
                    }
                    if self.chars.get(k).is_some_and(|c| c.is_ascii_digit()) {
                        while self.chars.get(k).is_some_and(|c| c.is_ascii_digit()) {
                            k += 1;
                        }
                        self.pos = k;
                    }
                }
                let text: String = self.chars[start..self.pos].iter().collect();
                let v: f64 = text.parse().map_err(|_| PolyError::Parse {
                    column: start + 1,
                    message: format!("invalid number '{text}'"),
                })?;
                Ok(RealPoly::constant(self.nvars, v))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                match (self.resolve)(&name) {
                    Some(k) => Ok(RealPoly::var(self.nvars, k)),
                    None => Err(PolyError::Parse {
                        column: start + 1,
                        message: format!("unknown variable '{name}'"),
                    }),
                }
            }
            Some(c) => Err(self.err(format!("unexpected character '{c}'"))),
            None => Err(self.err("unexpected end of input")),
        }
    }
}

fn constant_value(p: &RealPoly) -> Option<f64> {
    match p.terms.len() {
        0 => Some(0.0),
        1 => {
            let (e, c) = p.terms.iter().next()?;
            e.iter().all(|&a| a == 0).then_some(*c)
        }
        _ => None,
    }
}

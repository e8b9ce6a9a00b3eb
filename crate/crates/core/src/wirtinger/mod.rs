//! Polynomials in `z_1..z_n` and `z̄_1..z̄_n` with complex coefficients.
//!
//! A [`PolyRC`] is a finite sum `Σ c_{a,b} z^a z̄^b`. Wirtinger derivatives act
//! on exponents directly, so differentiation is exact; only the coefficient
//! arithmetic is floating point. Real-coordinate input (`x_j`, `y_j`) goes
//! through [`RealPoly`] and the text parser in [`real`].

mod batch;
pub mod real;

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

pub use batch::PolySet;
pub use real::{parse_real, RealPoly};

pub type C64 = Complex64;

/// Largest total degree a polynomial may reach.
pub const MAX_DEGREE: u32 = 12;

/// Coefficients with modulus below this are dropped after every operation.
pub const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("variable index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("total degree {degree} exceeds the cap of {MAX_DEGREE}")]
    DegreeCap { degree: u32 },
    #[error("parse error at column {column}: {message}")]
    Parse { column: usize, message: String },
}

/// Exponent pair `(a, b)` of the monomial `z^a z̄^b`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub z: Vec<u8>,
    pub zbar: Vec<u8>,
}

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial {
            z: vec![0; n],
            zbar: vec![0; n],
        }
    }

    pub fn degree(&self) -> u32 {
        self.z.iter().chain(self.zbar.iter()).map(|&e| e as u32).sum()
    }

    fn times(&self, other: &Monomial) -> Monomial {
        Monomial {
            z: self.z.iter().zip(&other.z).map(|(a, b)| a + b).collect(),
            zbar: self.zbar.iter().zip(&other.zbar).map(|(a, b)| a + b).collect(),
        }
    }

    /// The exponent pair of the complex conjugate monomial.
    pub fn conj(&self) -> Monomial {
        Monomial {
            z: self.zbar.clone(),
            zbar: self.z.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolyRC {
    n: usize,
    terms: BTreeMap<Monomial, C64>,
}

impl PolyRC {
    pub fn zero(n: usize) -> Self {
        assert!(n >= 1, "dimension must be at least 1");
        PolyRC {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: C64) -> Self {
        let mut p = PolyRC::zero(n);
        p.push(Monomial::one(n), c);
        p
    }

    /// The coordinate function `z_j` (0-based).
    pub fn z(n: usize, j: usize) -> Self {
        assert!(j < n);
        let mut m = Monomial::one(n);
        m.z[j] = 1;
        PolyRC::from_terms(n, [(m, C64::new(1.0, 0.0))])
    }

    /// The coordinate function `z̄_j` (0-based).
    pub fn zbar(n: usize, j: usize) -> Self {
        assert!(j < n);
        let mut m = Monomial::one(n);
        m.zbar[j] = 1;
        PolyRC::from_terms(n, [(m, C64::new(1.0, 0.0))])
    }

    /// `x_j = (z_j + z̄_j) / 2`.
    pub fn re_z(n: usize, j: usize) -> Self {
        (&PolyRC::z(n, j) + &PolyRC::zbar(n, j)).scale(C64::new(0.5, 0.0))
    }

    /// `y_j = (z_j - z̄_j) / (2i)`.
    pub fn im_z(n: usize, j: usize) -> Self {
        (&PolyRC::z(n, j) - &PolyRC::zbar(n, j)).scale(C64::new(0.0, -0.5))
    }

    /// `|z_j|^2`.
    pub fn abs_sq(n: usize, j: usize) -> Self {
        let mut m = Monomial::one(n);
        m.z[j] = 1;
        m.zbar[j] = 1;
        PolyRC::from_terms(n, [(m, C64::new(1.0, 0.0))])
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = (Monomial, C64)>) -> Self {
        let mut p = PolyRC::zero(n);
        for (m, c) in terms {
            assert_eq!(m.z.len(), n);
            assert_eq!(m.zbar.len(), n);
            p.push(m, c);
        }
        p.normalize();
        p
    }

    fn push(&mut self, m: Monomial, c: C64) {
        *self.terms.entry(m).or_insert(C64::new(0.0, 0.0)) += c;
    }

    fn normalize(&mut self) {
        self.terms.retain(|_, c| c.norm() >= DROP_TOL);
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> C64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn scale(&self, s: C64) -> PolyRC {
        let mut p = PolyRC {
            n: self.n,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        };
        p.normalize();
        p
    }

    pub fn checked_mul(&self, other: &PolyRC) -> Result<PolyRC, PolyError> {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let degree = self.degree() + other.degree();
        if !self.is_zero() && !other.is_zero() && degree > MAX_DEGREE {
            return Err(PolyError::DegreeCap { degree });
        }
        let mut out = PolyRC::zero(self.n);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.push(ma.times(mb), ca * cb);
            }
        }
        out.normalize();
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Result<PolyRC, PolyError> {
        let mut out = PolyRC::constant(self.n, C64::new(1.0, 0.0));
        for _ in 0..k {
            out = out.checked_mul(self)?;
        }
        Ok(out)
    }

    /// Complex conjugate: `c z^a z̄^b ↦ c̄ z^b z̄^a`.
    pub fn conj(&self) -> PolyRC {
        PolyRC {
            n: self.n,
            terms: self.terms.iter().map(|(m, c)| (m.conj(), c.conj())).collect(),
        }
    }

    fn check_index(&self, j: usize) -> Result<(), PolyError> {
        if j >= self.n {
            Err(PolyError::IndexOutOfRange {
                index: j,
                n: self.n,
            })
        } else {
            Ok(())
        }
    }

    /// `∂p/∂z_j`.
    pub fn d_z(&self, j: usize) -> Result<PolyRC, PolyError> {
        self.check_index(j)?;
        let mut out = PolyRC::zero(self.n);
        for (m, c) in &self.terms {
            let e = m.z[j];
            if e > 0 {
                let mut dm = m.clone();
                dm.z[j] = e - 1;
                out.push(dm, c * e as f64);
            }
        }
        out.normalize();
        Ok(out)
    }

    /// `∂p/∂z̄_j`.
    pub fn d_zbar(&self, j: usize) -> Result<PolyRC, PolyError> {
        self.check_index(j)?;
        let mut out = PolyRC::zero(self.n);
        for (m, c) in &self.terms {
            let e = m.zbar[j];
            if e > 0 {
                let mut dm = m.clone();
                dm.zbar[j] = e - 1;
                out.push(dm, c * e as f64);
            }
        }
        out.normalize();
        Ok(out)
    }

    /// `∂p/∂x_j = ∂p/∂z_j + ∂p/∂z̄_j`.
    pub fn d_x(&self, j: usize) -> Result<PolyRC, PolyError> {
        Ok(&self.d_z(j)? + &self.d_zbar(j)?)
    }

    /// `∂p/∂y_j = i (∂p/∂z_j - ∂p/∂z̄_j)`.
    pub fn d_y(&self, j: usize) -> Result<PolyRC, PolyError> {
        Ok((&self.d_z(j)? - &self.d_zbar(j)?).scale(C64::new(0.0, 1.0)))
    }

    /// Derivative along real coordinate `k` in interleaved order
    /// `(x_1, y_1, x_2, y_2, ...)`.
    pub fn d_real(&self, k: usize) -> Result<PolyRC, PolyError> {
        if k % 2 == 0 {
            self.d_x(k / 2)
        } else {
            self.d_y(k / 2)
        }
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        self.eval_with_scale(z).0
    }

    /// Value together with `Σ |c| |z^a z̄^b|`, the natural scale for rounding
    /// error in the sum.
    pub fn eval_with_scale(&self, z: &[C64]) -> (C64, f64) {
        assert_eq!(z.len(), self.n, "point dimension mismatch");
        let (dz, dzb) = self.max_exponents();
        let pz = power_table(z, &dz, false);
        let pzb = power_table(z, &dzb, true);
        let mut acc = C64::new(0.0, 0.0);
        let mut scale = 0.0;
        for (m, c) in &self.terms {
            let mut v = *c;
            for j in 0..self.n {
                if m.z[j] > 0 {
                    v *= pz[j][m.z[j] as usize];
                }
                if m.zbar[j] > 0 {
                    v *= pzb[j][m.zbar[j] as usize];
                }
            }
            acc += v;
            scale += v.norm();
        }
        (acc, scale)
    }

    fn max_exponents(&self) -> (Vec<u8>, Vec<u8>) {
        let mut dz = vec![0u8; self.n];
        let mut dzb = vec![0u8; self.n];
        for m in self.terms.keys() {
            for j in 0..self.n {
                dz[j] = dz[j].max(m.z[j]);
                dzb[j] = dzb[j].max(m.zbar[j]);
            }
        }
        (dz, dzb)
    }

    /// Whether `coeff(a, b) = conj(coeff(b, a))` for every exponent pair, to
    /// within `1e-12` relative to the largest coefficient.
    pub fn is_real_valued(&self) -> bool {
        let scale = self.max_coeff().max(1.0);
        self.terms
            .iter()
            .all(|(m, c)| (c - self.coeff(&m.conj()).conj()).norm() <= 1e-12 * scale)
    }

    pub fn max_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient-wise difference.
    pub fn max_abs_diff(&self, other: &PolyRC) -> f64 {
        (self - other).max_coeff()
    }

    /// Deterministic text form, one term per line, used for hashing.
    pub fn canonical_string(&self) -> String {
        let mut s = format!("n={}\n", self.n);
        for (m, c) in &self.terms {
            s.push_str(&format!(
                "{:?}|{:?}|{:.15e}|{:.15e}\n",
                m.z, m.zbar, c.re, c.im
            ));
        }
        s
    }

    /// Polynomial from a real-coordinate polynomial over `(x_1..x_n, y_1..y_n)`.
    pub fn from_real(p: &RealPoly) -> Result<PolyRC, PolyError> {
        assert!(p.nvars() % 2 == 0 && p.nvars() >= 2);
        let n = p.nvars() / 2;
        let maxdeg = p.degree() as usize;
        let mut powers: Vec<Vec<PolyRC>> = Vec::with_capacity(2 * n);
        for k in 0..2 * n {
            let base = if k < n {
                PolyRC::re_z(n, k)
            } else {
                PolyRC::im_z(n, k - n)
            };
            let mut row = vec![PolyRC::constant(n, C64::new(1.0, 0.0))];
            for e in 1..=maxdeg {
                let next = row[e - 1].checked_mul(&base)?;
                row.push(next);
            }
            powers.push(row);
        }
        let mut out = PolyRC::zero(n);
        for (exps, c) in p.terms() {
            let mut t = PolyRC::constant(n, C64::new(*c, 0.0));
            for (k, &e) in exps.iter().enumerate() {
                if e > 0 {
                    t = t.checked_mul(&powers[k][e as usize])?;
                }
            }
            out = &out + &t;
        }
        Ok(out)
    }

    /// Parses a real-coordinate expression in `x1..xn, y1..yn` and converts it.
    pub fn parse_real(text: &str, n: usize) -> Result<PolyRC, PolyError> {
        PolyRC::from_real(&parse_real(text, n)?)
    }
}

pub(crate) fn power_table(z: &[C64], maxdeg: &[u8], conj: bool) -> Vec<Vec<C64>> {
    z.iter()
        .zip(maxdeg)
        .map(|(zj, &d)| {
            let base = if conj { zj.conj() } else { *zj };
            let mut row = Vec::with_capacity(d as usize + 1);
            row.push(C64::new(1.0, 0.0));
            for e in 1..=d as usize {
                row.push(row[e - 1] * base);
            }
            row
        })
        .collect()
}

impl std::ops::Add for &PolyRC {
    type Output = PolyRC;
    fn add(self, rhs: &PolyRC) -> PolyRC {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.push(m.clone(), *c);
        }
        out.normalize();
        out
    }
}

impl std::ops::Sub for &PolyRC {
    type Output = PolyRC;
    fn sub(self, rhs: &PolyRC) -> PolyRC {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.push(m.clone(), -c);
        }
        out.normalize();
        out
    }
}

impl std::ops::Neg for &PolyRC {
    type Output = PolyRC;
    fn neg(self) -> PolyRC {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl fmt::Display for PolyRC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for j in 0..self.n {
                match m.z[j] {
                    0 => {}
                    1 => write!(f, "*z{}", j + 1)?,
                    e => write!(f, "*z{}^{}", j + 1, e)?,
                }
                match m.zbar[j] {
                    0 => {}
                    1 => write!(f, "*zb{}", j + 1)?,
                    e => write!(f, "*zb{}^{}", j + 1, e)?,
                }
            }
        }
        Ok(())
    }
}

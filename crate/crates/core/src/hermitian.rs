//! Dense complex matrices at small dimension, with a cyclic Jacobi
//! eigensolver for the Hermitian case.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HermError {
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NonConvergence { sweeps: usize, off: f64 },
    #[error("matrix is singular to working tolerance (|det| = {det:e})")]
    Singular { det: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Maximum number of Jacobi sweeps before reporting non-convergence.
pub const MAX_SWEEPS: usize = 100;

/// Determinant threshold below which inversion is refused.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        CMat {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = CMat::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Determinant by LU factorisation with partial pivoting.
    pub fn det(&self) -> C64 {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = C64::new(1.0, 0.0);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))
                .unwrap();
            if a[(p, k)].norm() == 0.0 {
                return C64::new(0.0, 0.0);
            }
            if p != k {
                a.swap_rows(p, k);
                det = -det;
            }
            let pivot = a[(k, k)];
            det *= pivot;
            for i in k + 1..n {
                let f = a[(i, k)] / pivot;
                for j in k..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<CMat, HermError> {
        if self.rows != self.cols {
            return Err(HermError::DimensionMismatch(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let det = self.det().norm();
        if det <= SINGULAR_TOL {
            return Err(HermError::Singular { det });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = CMat::identity(n);
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].norm().total_cmp(&a[(j, k)].norm()))
                .unwrap();
            a.swap_rows(p, k);
            inv.swap_rows(p, k);
            let pivot = a[(k, k)];
            for j in 0..n {
                a[(k, j)] /= pivot;
                inv[(k, j)] /= pivot;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[(i, k)];
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let (akj, ikj) = (a[(k, j)], inv[(k, j)]);
                    a[(i, j)] -= f * akj;
                    inv[(i, j)] -= f * ikj;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Display for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|c| format!("{:.6}{:+.6}i", c.re, c.im))
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Square matrix symmetrised to be exactly Hermitian at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct HermMat(CMat);

/// Spectral decomposition `m = V diag(values) V*`.
#[derive(Clone, Debug, Serialize)]
pub struct Eigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the same order as `values`.
    #[serde(skip)]
    pub vectors: CMat,
}

impl HermMat {
    /// Builds `(m + m*)/2`.
    pub fn new(m: CMat) -> Self {
        assert_eq!(m.rows(), m.cols(), "Hermitian matrix must be square");
        let n = m.rows();
        let sym = CMat::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(m[(i, i)].re, 0.0)
            } else {
                (m[(i, j)] + m[(j, i)].conj()) * 0.5
            }
        });
        HermMat(sym)
    }

    pub fn zeros(n: usize) -> Self {
        HermMat(CMat::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        HermMat(CMat::identity(n))
    }

    pub fn from_real_diag(values: &[f64]) -> Self {
        let d: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        HermMat(CMat::diag(&d))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_cmat(&self) -> &CMat {
        &self.0
    }

    pub fn into_cmat(self) -> CMat {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn det(&self) -> f64 {
        self.0.det().re
    }

    pub fn frobenius(&self) -> f64 {
        self.0.frobenius()
    }

    pub fn scale(&self, s: f64) -> HermMat {
        HermMat(self.0.scale(C64::new(s, 0.0)))
    }

    pub fn add(&self, other: &HermMat) -> HermMat {
        HermMat(self.0.add(&other.0))
    }

    pub fn sub(&self, other: &HermMat) -> HermMat {
        HermMat(self.0.sub(&other.0))
    }

    /// `B m B*`, Hermitian for any `B`.
    pub fn congruence(&self, b: &CMat) -> HermMat {
        HermMat::new(b.mul(&self.0).mul(&b.adjoint()))
    }

    /// Eigen-decomposition by cyclic complex Jacobi rotations.
    pub fn eigh(&self) -> Result<Eigen, HermError> {
        let n = self.dim();
        let mut a = self.0.clone();
        let mut v = CMat::identity(n);
        let scale = a.frobenius();
        let target = 1e-15 * scale;
        let mut sweeps = 0;
        loop {
            let off = off_diagonal_norm(&a);
            if off <= target || off == 0.0 {
                break;
            }
            if sweeps >= MAX_SWEEPS {
                return Err(HermError::NonConvergence { sweeps, off });
            }
            sweeps += 1;
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
        let values = order.iter().map(|&i| a[(i, i)].re).collect();
        let mut vectors = CMat::zeros(n, n);
        for (col, &i) in order.iter().enumerate() {
            let mut x = v.column(i);
            phase_fix(&mut x);
            for (r, xr) in x.into_iter().enumerate() {
                vectors[(r, col)] = xr;
            }
        }
        Ok(Eigen { values, vectors })
    }

    pub fn eigvalsh(&self) -> Result<Vec<f64>, HermError> {
        Ok(self.eigh()?.values)
    }

    /// Whether the spectrum lies in `[-tol, 1 + tol]`, together with the
    /// margin `min(λ_min, 1 - λ_max)`.
    pub fn is_range_01(&self, tol: f64) -> Result<(bool, f64), HermError> {
        let ev = self.eigvalsh()?;
        let (lo, hi) = match (ev.first(), ev.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Ok((true, 0.0)),
        };
        let margin = lo.min(1.0 - hi);
        Ok((lo >= -tol && hi <= 1.0 + tol, margin))
    }

    /// Inverse; the inverse of a Hermitian matrix is Hermitian.
    pub fn invert(&self) -> Result<HermMat, HermError> {
        Ok(HermMat::new(self.0.inverse()?))
    }
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    assert_eq!(a.cols(), b.rows());
    assert_eq!(a.rows(), b.cols());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..a.rows() {
        for k in 0..a.cols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn off_diagonal_norm(a: &CMat) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation annihilating entry `(p, q)`.
fn rotate(a: &mut CMat, v: &mut CMat, p: usize, q: usize) {
    let apq = a[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let phase = apq / g;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // J = D R with D = diag(1, conj(phase)) on (p, q) and R the real rotation.
    let jpp = C64::new(c, 0.0);
    let jpq = C64::new(s, 0.0);
    let jqp = -phase.conj() * s;
    let jqq = phase.conj() * c;
    let n = a.rows();
    // A <- A J (columns p, q).
    for i in 0..n {
        let (aip, aiq) = (a[(i, p)], a[(i, q)]);
        a[(i, p)] = aip * jpp + aiq * jqp;
        a[(i, q)] = aip * jpq + aiq * jqq;
    }
    // A <- J* A (rows p, q).
    for j in 0..n {
        let (apj, aqj) = (a[(p, j)], a[(q, j)]);
        a[(p, j)] = jpp.conj() * apj + jqp.conj() * aqj;
        a[(q, j)] = jpq.conj() * apj + jqq.conj() * aqj;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    for i in 0..n {
        let (vip, viq) = (v[(i, p)], v[(i, q)]);
        v[(i, p)] = vip * jpp + viq * jqp;
        v[(i, q)] = vip * jpq + viq * jqq;
    }
}

/// Rotates a vector so that its first non-negligible component is real
/// and positive.
fn phase_fix(x: &mut [C64]) {
    let norm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if let Some(lead) = x.iter().find(|c| c.norm() > 1e-12 * norm.max(1e-300)).copied() {
        let phase = lead.conj() / lead.norm();
        for c in x.iter_mut() {
            *c *= phase;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_sorted() {
        let m = HermMat::from_real_diag(&[3.0, 1.0, 2.0]);
        assert_eq!(m.eigvalsh().unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x_spectrum() {
        let m = HermMat::new(CMat::from_rows(&[
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ]));
        let ev = m.eigvalsh().unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn complex_offdiagonal_reconstruction() {
        let m = HermMat::new(CMat::from_rows(&[
            vec![c(2.0, 0.0), c(1.0, -1.0), c(0.0, 0.5)],
            vec![c(1.0, 1.0), c(-1.0, 0.0), c(0.3, 0.0)],
            vec![c(0.0, -0.5), c(0.3, 0.0), c(0.5, 0.0)],
        ]));
        let e = m.eigh().unwrap();
        let d: Vec<C64> = e.values.iter().map(|&v| c(v, 0.0)).collect();
        let rec = e.vectors.mul(&CMat::diag(&d)).mul(&e.vectors.adjoint());
        assert!(rec.sub(m.as_cmat()).frobenius() < 1e-13);
        let gram = e.vectors.adjoint().mul(&e.vectors);
        assert!(gram.sub(&CMat::identity(3)).frobenius() < 1e-13);
        for j in 0..3 {
            let lead = e.vectors.column(j).into_iter().find(|x| x.norm() > 1e-12).unwrap();
            assert!(lead.im.abs() < 1e-14 && lead.re > 0.0);
        }
    }

    #[test]
    fn range_01_on_zero_and_projection() {
        let (ok, margin) = HermMat::zeros(3).is_range_01(1e-10).unwrap();
        assert!(ok);
        assert_eq!(margin, 0.0);
        let v = [c(0.6, 0.0), c(0.0, 0.8)];
        let p = HermMat::new(CMat::from_fn(2, 2, |i, j| v[i] * v[j].conj()));
        let ev = p.eigvalsh().unwrap();
        assert!(ev[0].abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
        assert!(p.is_range_01(1e-10).unwrap().0);
        assert!(!HermMat::from_real_diag(&[2.0]).is_range_01(1e-10).unwrap().0);
    }

    #[test]
    fn invert_identity_and_singular() {
        let i3 = HermMat::identity(3);
        assert_eq!(i3.invert().unwrap(), i3);
        let s = HermMat::from_real_diag(&[1.0, 0.0]);
        assert!(matches!(s.invert(), Err(HermError::Singular { .. })));
    }

    #[test]
    fn determinant_with_pivoting() {
        let m = CMat::from_rows(&[
            vec![c(0.0, 0.0), c(2.0, 0.0)],
            vec![c(3.0, 0.0), c(1.0, 1.0)],
        ]);
        assert!((m.det() - c(-6.0, 0.0)).norm() < 1e-15);
    }
}

//! Weighted `(0,q)`-form calculus on compactly supported test forms.
//!
//! A [`TestForm`] has coefficients `f_J(z) = g_J((z - c)/R)` where each
//! `g_J` is a polynomial in `w, w̄` carrying the factor `(1 - |w|²)⁴`, and
//! `f_J = 0` outside the ball `|w| < 1`. All derivatives are taken exactly on
//! the polynomial piece; the weighted integrals use midpoint quadrature.

pub mod multi_index;
pub mod quadrature;

use std::io::Write;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::DomainSpec;
use crate::upsilon::chi;
use crate::wirtinger::{Monomial, PolyError, PolyRC, PolySet};
use crate::C64;

pub use multi_index::{epsilon, insert, MultiIndexAlg};
pub use quadrature::integrate;

/// Largest dimension accepted by the quadrature-based operations.
pub const MAX_QUADRATURE_DIM: usize = 3;

/// Exponent of the radial bump `(1 - |w|²)^BUMP_POWER`.
pub const BUMP_POWER: u32 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormError {
    #[error("form degree {q} is outside [0, {n}] for this operation")]
    DegreeOutOfRange { q: usize, n: usize },
    #[error("expected {expected} coefficients, got {got}")]
    CoefficientCount { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("quadrature needs n <= {MAX_QUADRATURE_DIM}, got n = {n}")]
    DimensionCap { n: usize },
    #[error("support box is not contained in the quadrature box along axis {axis}")]
    Containment { axis: usize },
    #[error("quadrature needs an even number of nodes per axis >= 4, got {per_axis}")]
    InvalidGrid { per_axis: usize },
    #[error("support ball of radius {radius} is not inside the domain (rho = {rho} at a sampled point)")]
    BallNotInside { radius: f64, rho: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `φ = t|z|²`.
    Gauss,
    /// `φ = 2t Σ (Re z_j)²`.
    Model,
}

/// A weight `e^{-φ}` whose complex Hessian is `t·I`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub t: f64,
    pub kind: WeightKind,
}

impl WeightSpec {
    pub fn gauss(t: f64) -> Self {
        WeightSpec { t, kind: WeightKind::Gauss }
    }

    pub fn model(t: f64) -> Self {
        WeightSpec { t, kind: WeightKind::Model }
    }

    pub fn phi(&self, z: &[C64]) -> f64 {
        match self.kind {
            WeightKind::Gauss => self.t * z.iter().map(|c| c.norm_sqr()).sum::<f64>(),
            WeightKind::Model => 2.0 * self.t * z.iter().map(|c| c.re * c.re).sum::<f64>(),
        }
    }

    /// `∂φ/∂z_j`.
    pub fn phi_z(&self, z: &[C64], j: usize) -> C64 {
        match self.kind {
            WeightKind::Gauss => z[j].conj() * self.t,
            WeightKind::Model => C64::new(2.0 * self.t * z[j].re, 0.0),
        }
    }

    /// `φ` as a polynomial on `C^n`.
    pub fn phi_poly(&self, n: usize) -> PolyRC {
        let mut p = PolyRC::zero(n);
        for j in 0..n {
            let term = match self.kind {
                WeightKind::Gauss => PolyRC::abs_sq(n, j).scale(C64::new(self.t, 0.0)),
                WeightKind::Model => {
                    let x = PolyRC::re_z(n, j);
                    x.checked_mul(&x).expect("degree 2").scale(C64::new(2.0 * self.t, 0.0))
                }
            };
            p = &p + &term;
        }
        p
    }

    /// `∂φ/∂z_j` at `z = c + R w`, as a polynomial in `w`.
    fn phi_z_in_w(&self, n: usize, j: usize, center: &[C64], radius: f64) -> PolyRC {
        let t = self.t;
        match self.kind {
            WeightKind::Gauss => {
                let lin = PolyRC::zbar(n, j).scale(C64::new(t * radius, 0.0));
                &PolyRC::constant(n, center[j].conj() * t) + &lin
            }
            WeightKind::Model => {
                let lin = PolyRC::re_z(n, j).scale(C64::new(2.0 * t * radius, 0.0));
                &PolyRC::constant(n, C64::new(2.0 * t * center[j].re, 0.0)) + &lin
            }
        }
    }

    /// Largest coefficient of `φ_{j k̄} - t δ_{jk}` over all `j, k`; zero when
    /// the Hessian identity holds exactly.
    pub fn hessian_residual(&self, n: usize) -> Result<f64, PolyError> {
        let phi = self.phi_poly(n);
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let h = phi.d_z(j)?.d_zbar(k)?;
                let target = if j == k {
                    PolyRC::constant(n, C64::new(self.t, 0.0))
                } else {
                    PolyRC::zero(n)
                };
                worst = worst.max(h.max_abs_diff(&target));
            }
        }
        Ok(worst)
    }
}

/// `(1 - |w|²)^BUMP_POWER` on `C^n`.
pub fn bump_poly(n: usize) -> PolyRC {
    let mut s = PolyRC::constant(n, C64::new(1.0, 0.0));
    for j in 0..n {
        s = &s - &PolyRC::abs_sq(n, j);
    }
    s.pow(BUMP_POWER).expect("bump degree is within the cap")
}

/// A compactly supported `(0,q)`-form. See the module docs for the
/// representation.
#[derive(Clone, Debug)]
pub struct TestForm {
    n: usize,
    q: usize,
    center: Vec<C64>,
    radius: f64,
    coeffs: Vec<PolyRC>,
}

impl TestForm {
    /// Builds a form from polynomial pieces `g_J(w)` that must already vanish
    /// to second order on `|w| = 1`; use [`TestForm::bump`] to attach the
    /// bump factor automatically.
    pub fn new(n: usize, q: usize, center: Vec<C64>, radius: f64, coeffs: Vec<PolyRC>) -> Result<Self, FormError> {
        let alg = MultiIndexAlg::new(n, q).ok_or(FormError::DegreeOutOfRange { q, n })?;
        if coeffs.len() != alg.len() {
            return Err(FormError::CoefficientCount {
                expected: alg.len(),
                got: coeffs.len(),
            });
        }
        if center.len() != n {
            return Err(FormError::DimensionMismatch {
                expected: n,
                got: center.len(),
            });
        }
        if let Some(c) = coeffs.iter().find(|c| c.n() != n) {
            return Err(FormError::DimensionMismatch { expected: n, got: c.n() });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(FormError::Precondition(format!("radius must be positive, got {radius}")));
        }
        Ok(TestForm {
            n,
            q,
            center,
            radius,
            coeffs,
        })
    }

    /// `f_J(z) = p_J(w) (1 - |w|²)⁴` with `w = (z - c)/R`.
    pub fn bump(n: usize, q: usize, center: Vec<C64>, radius: f64, profiles: Vec<PolyRC>) -> Result<Self, FormError> {
        let b = bump_poly(n);
        let coeffs = profiles.iter().map(|p| p.checked_mul(&b)).collect::<Result<Vec<_>, _>>()?;
        TestForm::new(n, q, center, radius, coeffs)
    }

    /// Random profiles of total degree at most `degree` in `w, w̄` with
    /// standard complex normal coefficients.
    pub fn random(
        n: usize,
        q: usize,
        center: Vec<C64>,
        radius: f64,
        degree: u32,
        rng: &mut impl Rng,
    ) -> Result<Self, FormError> {
        let count = MultiIndexAlg::new(n, q).ok_or(FormError::DegreeOutOfRange { q, n })?.len();
        let monomials = monomials_up_to(n, degree);
        let profiles = (0..count)
            .map(|_| {
                PolyRC::from_terms(
                    n,
                    monomials.iter().map(|m| {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        (m.clone(), C64::new(re, im))
                    }),
                )
            })
            .collect();
        TestForm::bump(n, q, center, radius, profiles)
    }

    pub fn zero(n: usize, q: usize, center: Vec<C64>, radius: f64) -> Result<Self, FormError> {
        let count = MultiIndexAlg::new(n, q).ok_or(FormError::DegreeOutOfRange { q, n })?.len();
        TestForm::new(n, q, center, radius, vec![PolyRC::zero(n); count])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn center(&self) -> &[C64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Polynomial pieces `g_J(w)`, ordered like [`MultiIndexAlg::indices`].
    pub fn coeffs(&self) -> &[PolyRC] {
        &self.coeffs
    }

    pub fn alg(&self) -> MultiIndexAlg {
        MultiIndexAlg::new(self.n, self.q).expect("validated at construction")
    }

    fn to_w(&self, z: &[C64]) -> Vec<C64> {
        z.iter().zip(&self.center).map(|(a, c)| (a - c) / self.radius).collect()
    }

    /// Coefficients `f_J(z)`.
    pub fn eval(&self, z: &[C64]) -> Vec<C64> {
        let w = self.to_w(z);
        if w.iter().map(|c| c.norm_sqr()).sum::<f64>() >= 1.0 {
            return vec![C64::new(0.0, 0.0); self.coeffs.len()];
        }
        self.coeffs.iter().map(|g| g.eval(&w)).collect()
    }

    /// Axis-aligned box `[c - R, c + R]` in interleaved real coordinates.
    pub fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.center.iter().flat_map(|c| [c.re - self.radius, c.im - self.radius]).collect();
        let hi = self.center.iter().flat_map(|c| [c.re + self.radius, c.im + self.radius]).collect();
        (lo, hi)
    }

    /// The same coefficients placed in another ball and multiplied by
    /// `amplitude`: `u(z) = amplitude · f(c + R (z - c')/R')`.
    pub fn relocated(&self, center: Vec<C64>, radius: f64, amplitude: f64) -> Result<Self, FormError> {
        let coeffs = self.coeffs.iter().map(|g| g.scale(C64::new(amplitude, 0.0))).collect();
        TestForm::new(self.n, self.q, center, radius, coeffs)
    }

    /// `∂̄f = Σ_K Σ_{k,J} ε^{kJ}_K ∂f_J/∂z̄_k dz̄_K`.
    pub fn dbar(&self) -> Result<TestForm, FormError> {
        if self.q >= self.n {
            return Err(FormError::DegreeOutOfRange { q: self.q, n: self.n });
        }
        let alg = self.alg();
        let up = MultiIndexAlg::new(self.n, self.q + 1).expect("q + 1 <= n");
        let mut coeffs = vec![PolyRC::zero(self.n); up.len()];
        let inv_r = C64::new(1.0 / self.radius, 0.0);
        for (ji, j_ix) in alg.indices().iter().enumerate() {
            for k in 0..self.n {
                if let Some((kk, sign)) = insert(k, j_ix) {
                    let pos = up.position(&kk).expect("increasing union");
                    let d = self.coeffs[ji].d_zbar(k)?.scale(inv_r * sign as f64);
                    coeffs[pos] = &coeffs[pos] + &d;
                }
            }
        }
        TestForm::new(self.n, self.q + 1, self.center.clone(), self.radius, coeffs)
    }

    /// `∂̄*_φ f = -Σ_J Σ_j L_j f_{jJ} dz̄_J` with `L_j = ∂/∂z_j - ∂φ/∂z_j`.
    pub fn dbar_star(&self, w: &WeightSpec) -> Result<TestForm, FormError> {
        if self.q == 0 {
            return Err(FormError::DegreeOutOfRange { q: 0, n: self.n });
        }
        let alg = self.alg();
        let down = MultiIndexAlg::new(self.n, self.q - 1).expect("q - 1 >= 0");
        let mut coeffs = vec![PolyRC::zero(self.n); down.len()];
        let inv_r = C64::new(1.0 / self.radius, 0.0);
        for (ii, i_ix) in down.indices().iter().enumerate() {
            for j in 0..self.n {
                if let Some((k, sign)) = insert(j, i_ix) {
                    let g = &self.coeffs[alg.position(&k).expect("increasing union")];
                    let phi_j = w.phi_z_in_w(self.n, j, &self.center, self.radius);
                    let lj = &g.d_z(j)?.scale(inv_r) - &phi_j.checked_mul(g)?;
                    coeffs[ii] = &coeffs[ii] - &lj.scale(C64::new(sign as f64, 0.0));
                }
            }
        }
        TestForm::new(self.n, self.q - 1, self.center.clone(), self.radius, coeffs)
    }
}

fn monomials_up_to(n: usize, degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut exps = vec![0u8; 2 * n];
    fn rec(exps: &mut Vec<u8>, k: usize, left: u32, n: usize, out: &mut Vec<Monomial>) {
        if k == exps.len() {
            out.push(Monomial {
                z: exps[..n].to_vec(),
                zbar: exps[n..].to_vec(),
            });
            return;
        }
        for a in 0..=left {
            exps[k] = a as u8;
            rec(exps, k + 1, left - a, n, out);
        }
        exps[k] = 0;
    }
    rec(&mut exps, 0, degree, n, &mut out);
    out
}

/// Numerical evaluator for a form and its first Wirtinger derivatives.
struct Jet1 {
    set: PolySet,
    center: Vec<C64>,
    radius: f64,
    count: usize,
    n: usize,
}

/// Values at one point: `f_J`, `∂f_J/∂z̄_k` (`[J][k]`), `∂f_J/∂z_k`.
struct Jet1Values {
    inside: bool,
    raw: Vec<C64>,
}

impl Jet1 {
    fn new(f: &TestForm) -> Result<Self, FormError> {
        let n = f.n;
        let inv_r = C64::new(1.0 / f.radius, 0.0);
        let mut polys = f.coeffs.clone();
        for g in &f.coeffs {
            for k in 0..n {
                polys.push(g.d_zbar(k)?.scale(inv_r));
            }
        }
        for g in &f.coeffs {
            for k in 0..n {
                polys.push(g.d_z(k)?.scale(inv_r));
            }
        }
        Ok(Jet1 {
            set: PolySet::new(&polys),
            center: f.center.clone(),
            radius: f.radius,
            count: f.coeffs.len(),
            n,
        })
    }

    fn values(&self) -> Jet1Values {
        Jet1Values {
            inside: false,
            raw: vec![C64::new(0.0, 0.0); self.count * (1 + 2 * self.n)],
        }
    }

    fn eval(&self, z: &[C64], scratch: &mut Vec<C64>, out: &mut Jet1Values) {
        let w: Vec<C64> = z.iter().zip(&self.center).map(|(a, c)| (a - c) / self.radius).collect();
        out.inside = w.iter().map(|c| c.norm_sqr()).sum::<f64>() < 1.0;
        if out.inside {
            self.set.eval_into(&w, scratch, &mut out.raw);
        }
    }

    fn f(&self, v: &Jet1Values, j: usize) -> C64 {
        v.raw[j]
    }

    fn dzbar(&self, v: &Jet1Values, j: usize, k: usize) -> C64 {
        v.raw[self.count + j * self.n + k]
    }

    fn dz(&self, v: &Jet1Values, j: usize, k: usize) -> C64 {
        v.raw[self.count * (1 + self.n) + j * self.n + k]
    }
}

/// Midpoint grid size with an error estimate from the half-size grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadSpec {
    /// Nodes per real axis on the fine grid (even, at least 4).
    pub per_axis: usize,
    /// Optional explicit box; it must contain the support box.
    #[serde(default)]
    pub bbox: Option<(Vec<f64>, Vec<f64>)>,
}

impl QuadSpec {
    pub fn new(per_axis: usize) -> Self {
        QuadSpec { per_axis, bbox: None }
    }

    fn resolve(&self, n: usize, support: &(Vec<f64>, Vec<f64>)) -> Result<(Vec<f64>, Vec<f64>), FormError> {
        if n > MAX_QUADRATURE_DIM {
            return Err(FormError::DimensionCap { n });
        }
        if self.per_axis < 4 || self.per_axis % 2 != 0 {
            return Err(FormError::InvalidGrid { per_axis: self.per_axis });
        }
        match &self.bbox {
            None => Ok(support.clone()),
            Some((lo, hi)) => {
                if lo.len() != 2 * n || hi.len() != 2 * n {
                    return Err(FormError::DimensionMismatch {
                        expected: 2 * n,
                        got: lo.len().min(hi.len()),
                    });
                }
                for axis in 0..2 * n {
                    if lo[axis] > support.0[axis] || hi[axis] < support.1[axis] {
                        return Err(FormError::Containment { axis });
                    }
                }
                Ok((lo.clone(), hi.clone()))
            }
        }
    }
}

/// The four weighted quantities of a form.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct WeightedNorms {
    /// `‖f‖²_φ`.
    pub norm_sq: f64,
    /// `‖∂̄f‖²_φ`.
    pub dbar_sq: f64,
    /// `‖∂̄*_φ f‖²_φ`.
    pub dbar_star_sq: f64,
    /// `Σ_{J,j} ‖∂f_J/∂z̄_j‖²_φ`.
    pub grad_sq: f64,
}

impl WeightedNorms {
    fn abs_diff(&self, o: &WeightedNorms) -> WeightedNorms {
        WeightedNorms {
            norm_sq: (self.norm_sq - o.norm_sq).abs(),
            dbar_sq: (self.dbar_sq - o.dbar_sq).abs(),
            dbar_star_sq: (self.dbar_star_sq - o.dbar_star_sq).abs(),
            grad_sq: (self.grad_sq - o.grad_sq).abs(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NormsReport {
    pub weight: WeightSpec,
    pub per_axis: usize,
    pub fine: WeightedNorms,
    pub coarse: WeightedNorms,
    /// `|fine - coarse|`, an upper estimate of the coarse-grid error.
    pub error: WeightedNorms,
}

/// Evaluates all four weighted quantities for several weights in one pass.
fn norms_many(f: &TestForm, weights: &[WeightSpec], per_axis: usize, bbox: &(Vec<f64>, Vec<f64>)) -> Result<Vec<WeightedNorms>, FormError> {
    let jet = Jet1::new(f)?;
    let n = f.n;
    let alg = f.alg();
    // (target K, source J, k, sign) for ∂̄ and (target I, source K, j, sign) for ∂̄*.
    let mut dbar_terms = Vec::new();
    let mut up_len = 0;
    if f.q < n {
        let up = MultiIndexAlg::new(n, f.q + 1).expect("q + 1 <= n");
        up_len = up.len();
        for (ji, j_ix) in alg.indices().iter().enumerate() {
            for k in 0..n {
                if let Some((kk, s)) = insert(k, j_ix) {
                    dbar_terms.push((up.position(&kk).expect("union"), ji, k, s as f64));
                }
            }
        }
    }
    let mut star_terms = Vec::new();
    let mut down_len = 0;
    if f.q > 0 {
        let down = MultiIndexAlg::new(n, f.q - 1).expect("q >= 1");
        down_len = down.len();
        for (ii, i_ix) in down.indices().iter().enumerate() {
            for j in 0..n {
                if let Some((k, s)) = insert(j, i_ix) {
                    star_terms.push((ii, alg.position(&k).expect("union"), j, s as f64));
                }
            }
        }
    }
    let nw = weights.len();
    let count = f.coeffs.len();
    let sums = integrate(
        &bbox.0,
        &bbox.1,
        per_axis,
        4 * nw,
        || {
            (
                Vec::new(),
                jet.values(),
                vec![C64::new(0.0, 0.0); up_len],
                vec![C64::new(0.0, 0.0); down_len],
            )
        },
        |(scratch, vals, up, down), z, acc| {
            jet.eval(z, scratch, vals);
            if !vals.inside {
                return;
            }
            let norm: f64 = (0..count).map(|j| jet.f(vals, j).norm_sqr()).sum();
            let mut grad = 0.0;
            for j in 0..count {
                for k in 0..n {
                    grad += jet.dzbar(vals, j, k).norm_sqr();
                }
            }
            up.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            for &(kk, ji, k, s) in &dbar_terms {
                up[kk] += jet.dzbar(vals, ji, k) * s;
            }
            let dbar: f64 = up.iter().map(|v| v.norm_sqr()).sum();
            for (wi, w) in weights.iter().enumerate() {
                let e = (-w.phi(z)).exp();
                down.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
                for &(ii, kk, j, s) in &star_terms {
                    let fk = jet.f(vals, kk);
                    down[ii] -= (jet.dz(vals, kk, j) - w.phi_z(z, j) * fk) * s;
                }
                let star: f64 = down.iter().map(|v| v.norm_sqr()).sum();
                acc[4 * wi] += norm * e;
                acc[4 * wi + 1] += dbar * e;
                acc[4 * wi + 2] += star * e;
                acc[4 * wi + 3] += grad * e;
            }
        },
    );
    Ok((0..nw)
        .map(|wi| WeightedNorms {
            norm_sq: sums[4 * wi],
            dbar_sq: sums[4 * wi + 1],
            dbar_star_sq: sums[4 * wi + 2],
            grad_sq: sums[4 * wi + 3],
        })
        .collect())
}

/// `‖f‖²_φ`, `‖∂̄f‖²_φ`, `‖∂̄*_φ f‖²_φ` and the gradient term, with an error
/// estimate from the half-size grid.
pub fn weighted_norms(f: &TestForm, w: &WeightSpec, quad: &QuadSpec) -> Result<NormsReport, FormError> {
    Ok(weighted_norms_many(f, &[*w], quad)?.remove(0))
}

/// [`weighted_norms`] for several weights sharing the polynomial evaluations.
pub fn weighted_norms_many(f: &TestForm, ws: &[WeightSpec], quad: &QuadSpec) -> Result<Vec<NormsReport>, FormError> {
    let bbox = quad.resolve(f.n, &f.support_box())?;
    let fine = norms_many(f, ws, quad.per_axis, &bbox)?;
    let coarse = norms_many(f, ws, quad.per_axis / 2, &bbox)?;
    Ok(ws
        .iter()
        .zip(fine.into_iter().zip(coarse))
        .map(|(w, (fine, coarse))| NormsReport {
            weight: *w,
            per_axis: quad.per_axis,
            error: fine.abs_diff(&coarse),
            fine,
            coarse,
        })
        .collect())
}

/// Residual of the Morrey-Kohn-Hörmander identity for an interior form,
/// `‖∂̄f‖² + ‖∂̄*f‖² - Σ‖∂f_J/∂z̄_j‖² - qt‖f‖²` (all weighted).
#[derive(Clone, Debug, Serialize)]
pub struct MkhReport {
    pub t: f64,
    pub weight: WeightKind,
    pub q: usize,
    pub per_axis: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs - rhs| / (lhs + grad + |qt|‖f‖²)` on the fine grid.
    pub relative_residual: f64,
    /// The same on the half-size grid.
    pub coarse_relative_residual: f64,
    /// `coarse_relative_residual / relative_residual`.
    pub refinement_ratio: f64,
}

fn mkh_from(q: usize, w: &WeightSpec, m: &WeightedNorms) -> (f64, f64, f64) {
    let lhs = m.dbar_sq + m.dbar_star_sq;
    let curv = q as f64 * w.t * m.norm_sq;
    let rhs = m.grad_sq + curv;
    let scale = lhs + m.grad_sq + curv.abs();
    let rel = if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 };
    (lhs, rhs, rel)
}

pub fn mkh_check(f: &TestForm, w: &WeightSpec, quad: &QuadSpec) -> Result<MkhReport, FormError> {
    Ok(mkh_check_many(f, &[*w], quad)?.remove(0))
}

/// [`mkh_check`] for several weights sharing the polynomial evaluations.
pub fn mkh_check_many(f: &TestForm, ws: &[WeightSpec], quad: &QuadSpec) -> Result<Vec<MkhReport>, FormError> {
    Ok(weighted_norms_many(f, ws, quad)?.iter().map(|r| mkh_report(f.q, r)).collect())
}

/// MKH residuals of a `(0,q)`-form from its already computed norms.
pub fn mkh_report(q: usize, r: &NormsReport) -> MkhReport {
    let (lhs, rhs, rel) = mkh_from(q, &r.weight, &r.fine);
    let (_, _, coarse_rel) = mkh_from(q, &r.weight, &r.coarse);
    MkhReport {
        t: r.weight.t,
        weight: r.weight.kind,
        q,
        per_axis: r.per_axis,
        lhs,
        rhs,
        relative_residual: rel,
        coarse_relative_residual: coarse_rel,
        refinement_ratio: if rel > 0.0 { coarse_rel / rel } else { f64::INFINITY },
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BasicEstimate {
    pub t: f64,
    /// `‖∂̄f‖² + ‖∂̄*f‖² - qt‖f‖²`.
    pub margin: f64,
    /// `Σ‖∂f_J/∂z̄_j‖²`, which the margin equals for interior forms.
    pub grad_term: f64,
    /// Combined refinement error estimate of the terms in `margin`.
    pub error_estimate: f64,
}

/// The basic-estimate margin for the Gaussian weight with `t > 0`.
pub fn basic_estimate_check(f: &TestForm, w: &WeightSpec, quad: &QuadSpec) -> Result<BasicEstimate, FormError> {
    basic_estimate_precondition(w)?;
    basic_estimate_from(f.q, &weighted_norms(f, w, quad)?)
}

fn basic_estimate_precondition(w: &WeightSpec) -> Result<(), FormError> {
    if w.kind != WeightKind::Gauss || w.t <= 0.0 {
        return Err(FormError::Precondition("basic estimate needs the Gaussian weight with t > 0".into()));
    }
    Ok(())
}

/// The basic-estimate margin of a `(0,q)`-form from its already computed
/// norms.
pub fn basic_estimate_from(q: usize, r: &NormsReport) -> Result<BasicEstimate, FormError> {
    basic_estimate_precondition(&r.weight)?;
    let qt = q as f64 * r.weight.t;
    Ok(BasicEstimate {
        t: r.weight.t,
        margin: r.fine.dbar_sq + r.fine.dbar_star_sq - qt * r.fine.norm_sq,
        grad_term: r.fine.grad_sq,
        error_estimate: r.error.dbar_sq + r.error.dbar_star_sq + qt * r.error.norm_sq,
    })
}

/// `(u, g)_φ = ∫ Σ_J u_J conj(g_J) e^{-φ}` over the union of the supports.
pub fn inner_product(u: &TestForm, g: &TestForm, w: &WeightSpec, per_axis: usize) -> Result<C64, FormError> {
    if u.n != g.n || u.q != g.q {
        return Err(FormError::DimensionMismatch { expected: u.q, got: g.q });
    }
    if u.n > MAX_QUADRATURE_DIM {
        return Err(FormError::DimensionCap { n: u.n });
    }
    let (ulo, uhi) = u.support_box();
    let (glo, ghi) = g.support_box();
    let lo: Vec<f64> = ulo.iter().zip(&glo).map(|(a, b)| a.min(*b)).collect();
    let hi: Vec<f64> = uhi.iter().zip(&ghi).map(|(a, b)| a.max(*b)).collect();
    let us = PolySet::new(&u.coeffs);
    let gs = PolySet::new(&g.coeffs);
    let m = u.coeffs.len();
    let sums = integrate(
        &lo,
        &hi,
        per_axis,
        2,
        || (Vec::new(), vec![C64::new(0.0, 0.0); m], vec![C64::new(0.0, 0.0); m]),
        |(scratch, uv, gv), z, acc| {
            let wu = u.to_w(z);
            let wg = g.to_w(z);
            if wu.iter().map(|c| c.norm_sqr()).sum::<f64>() >= 1.0 || wg.iter().map(|c| c.norm_sqr()).sum::<f64>() >= 1.0 {
                return;
            }
            us.eval_into(&wu, scratch, uv);
            gs.eval_into(&wg, scratch, gv);
            let e = (-w.phi(z)).exp();
            let s: C64 = uv.iter().zip(gv.iter()).map(|(a, b)| a * b.conj()).sum();
            acc[0] += s.re * e;
            acc[1] += s.im * e;
        },
    );
    Ok(C64::new(sums[0], sums[1]))
}

#[derive(Clone, Debug, Serialize)]
pub struct AdjointReport {
    pub per_axis: usize,
    /// `(∂̄u, g)_φ`.
    pub lhs: C64,
    /// `(u, ∂̄*_φ g)_φ`.
    pub rhs: C64,
    pub residual: f64,
    pub coarse_residual: f64,
}

/// Compares `(∂̄u, g)_φ` with `(u, ∂̄*_φ g)_φ` on the fine and half-size
/// grids.
pub fn adjointness_check(u: &TestForm, g: &TestForm, w: &WeightSpec, quad: &QuadSpec) -> Result<AdjointReport, FormError> {
    if g.q != u.q + 1 {
        return Err(FormError::DegreeOutOfRange { q: g.q, n: u.n });
    }
    quad.resolve(u.n, &u.support_box())?;
    let du = u.dbar()?;
    let sg = g.dbar_star(w)?;
    let pair = |per_axis| -> Result<(C64, C64), FormError> {
        Ok((inner_product(&du, g, w, per_axis)?, inner_product(u, &sg, w, per_axis)?))
    };
    let (lhs, rhs) = pair(quad.per_axis)?;
    let (cl, cr) = pair(quad.per_axis / 2)?;
    Ok(AdjointReport {
        per_axis: quad.per_axis,
        lhs,
        rhs,
        residual: (lhs - rhs).norm(),
        coarse_residual: (cl - cr).norm(),
    })
}

/// A form multiplied by the cutoff `χ(((r+1)² - |z|²)/(2r+1))`, which is `1`
/// on `|z| ≤ r` and `0` on `|z| ≥ r + 1`. The cutoff is not polynomial, so
/// this type evaluates numerically.
#[derive(Clone, Debug)]
pub struct TruncatedForm {
    pub inner: TestForm,
    pub r: f64,
}

/// Derivative of [`chi`].
pub fn chi_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let e = |s: f64| (-1.0 / s).exp();
    let de = |s: f64| e(s) / (s * s);
    let (a, b) = (e(t), e(1.0 - t));
    (de(t) * b + a * de(1.0 - t)) / ((a + b) * (a + b))
}

pub fn truncate_form(f: &TestForm, r: f64) -> Result<TruncatedForm, FormError> {
    if !(r >= 0.0) {
        return Err(FormError::Precondition(format!("cutoff radius must be nonnegative, got {r}")));
    }
    Ok(TruncatedForm { inner: f.clone(), r })
}

impl TruncatedForm {
    fn arg(&self, z: &[C64]) -> f64 {
        let r2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
        ((self.r + 1.0).powi(2) - r2) / (2.0 * self.r + 1.0)
    }

    pub fn cutoff(&self, z: &[C64]) -> f64 {
        chi(self.arg(z))
    }

    pub fn eval(&self, z: &[C64]) -> Vec<C64> {
        let c = self.cutoff(z);
        self.inner.eval(z).into_iter().map(|v| v * c).collect()
    }

    /// Coefficients of `∂̄` of the truncated form, by the product rule.
    pub fn dbar_eval(&self, z: &[C64]) -> Result<Vec<C64>, FormError> {
        let f = &self.inner;
        let df = f.dbar()?;
        let c = self.cutoff(z);
        let dc = chi_prime(self.arg(z)) / (2.0 * self.r + 1.0);
        let fv = f.eval(z);
        let mut out: Vec<C64> = df.eval(z).into_iter().map(|v| v * c).collect();
        let alg = f.alg();
        let up = MultiIndexAlg::new(f.n, f.q + 1).expect("checked by dbar");
        for (ji, j_ix) in alg.indices().iter().enumerate() {
            for k in 0..f.n {
                if let Some((kk, s)) = insert(k, j_ix) {
                    // ∂/∂z̄_k of the cutoff argument is -z_k / (2r + 1).
                    out[up.position(&kk).expect("union")] += -z[k] * dc * fv[ji] * s as f64;
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub r: f64,
    pub norm: f64,
    pub dbar_norm: f64,
    pub dbar_star_norm: f64,
    /// `(‖∂̄u_R‖ + ‖∂̄*u_R‖) / ‖u_R‖`.
    pub quotient: f64,
    pub quotient_times_r: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingTable {
    pub domain: String,
    pub rows: Vec<ScalingRow>,
    /// `max_R |Q(R) R / Q(R_0) R_0 - 1|`.
    pub max_relative_deviation: f64,
}

/// Centers `(0, ..., 0, i(2R² + R))` whose balls of radius `R` lie in the
/// Siegel half-space `{Im z_n > |z'|²}`.
pub fn heisenberg_center(n: usize, r: f64) -> Vec<C64> {
    let mut c = vec![C64::new(0.0, 0.0); n];
    c[n - 1] = C64::new(0.0, 2.0 * r * r + r);
    c
}

/// Checks `ρ < 0` on the ball `B(c, R)` at its center, at `±R` along every
/// real axis, and at `samples` seeded random points of the sphere and the
/// interior.
pub fn check_ball_inside(spec: &DomainSpec, center: &[C64], radius: f64, samples: usize, seed: u64) -> Result<(), FormError> {
    let n = spec.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points: Vec<Vec<C64>> = vec![center.to_vec()];
    for axis in 0..2 * n {
        for s in [-1.0, 1.0] {
            let mut p = center.to_vec();
            if axis % 2 == 0 {
                p[axis / 2].re += s * radius;
            } else {
                p[axis / 2].im += s * radius;
            }
            points.push(p);
        }
    }
    for i in 0..samples {
        let v: Vec<f64> = (0..2 * n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
        let scale = if i % 2 == 0 { 1.0 } else { rng.gen::<f64>().powf(1.0 / (2 * n) as f64) };
        points.push(
            (0..n)
                .map(|j| center[j] + C64::new(v[2 * j], v[2 * j + 1]) * (radius * scale / norm))
                .collect(),
        );
    }
    for p in points {
        let rho = spec.eval(&p);
        if !(rho < 0.0) {
            return Err(FormError::BallNotInside { radius, rho });
        }
    }
    Ok(())
}

/// Rescales `u1` (supported in the unit ball) to `u_R(z) = R^{-n} u1((z -
/// z_R)/R)` and tabulates the unweighted Rayleigh quotient `Q(R)`.
pub fn scaling_demo(
    u1: &TestForm,
    spec: &DomainSpec,
    centers: &[Vec<C64>],
    radii: &[f64],
    per_axis: usize,
) -> Result<ScalingTable, FormError> {
    let n = u1.n;
    if spec.n() != n {
        return Err(FormError::DimensionMismatch { expected: n, got: spec.n() });
    }
    if centers.len() != radii.len() || radii.is_empty() {
        return Err(FormError::Precondition("need one center per radius".into()));
    }
    let c1: f64 = u1.center.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if c1 + u1.radius > 1.0 + 1e-12 {
        return Err(FormError::Precondition("u1 must be supported in the unit ball".into()));
    }
    let w = WeightSpec::gauss(0.0);
    let mut rows = Vec::new();
    for (center, &r) in centers.iter().zip(radii) {
        check_ball_inside(spec, center, r, 256, 7)?;
        let c: Vec<C64> = center.iter().zip(&u1.center).map(|(zr, c)| zr + c * r).collect();
        let ur = u1.relocated(c, r * u1.radius, r.powi(-(n as i32)))?;
        let m = weighted_norms(&ur, &w, &QuadSpec::new(per_axis))?.fine;
        let (norm, dbar, star) = (m.norm_sq.sqrt(), m.dbar_sq.sqrt(), m.dbar_star_sq.sqrt());
        let quotient = (dbar + star) / norm;
        rows.push(ScalingRow {
            r,
            norm,
            dbar_norm: dbar,
            dbar_star_norm: star,
            quotient,
            quotient_times_r: quotient * r,
        });
    }
    let base = rows[0].quotient_times_r;
    let max_relative_deviation = rows.iter().map(|row| (row.quotient_times_r / base - 1.0).abs()).fold(0.0, f64::max);
    Ok(ScalingTable {
        domain: spec.name.clone(),
        rows,
        max_relative_deviation,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelWeightReport {
    pub t: f64,
    pub n: usize,
    /// Largest coefficient of `φ_{jk̄} - tδ_{jk}`.
    pub hessian_residual: f64,
    /// Largest `φ` over sampled points with `ρ ≤ 0`.
    pub sup_phi: f64,
    pub bound: f64,
    pub samples: usize,
}

impl ModelWeightReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.hessian_residual == 0.0 && self.sup_phi <= self.bound + tol
    }
}

/// Checks the Hessian identity of `φ = 2tΣ(Re z_j)²` exactly and samples
/// `φ` over the tube `{Σ(Re z_j)² < 1}`, including boundary points.
pub fn model_weight_checks(t: f64, n: usize, samples: usize, seed: u64) -> Result<ModelWeightReport, FormError> {
    if t < 0.0 {
        return Err(FormError::Precondition(format!("t must be nonnegative, got {t}")));
    }
    let w = WeightSpec::model(t);
    let hessian_residual = w.hessian_residual(n)?;
    let tube = crate::builtins::tube(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup_phi: f64 = 0.0;
    let mut used = 0;
    for i in 0..samples {
        let mut z: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.gen_range(-1.2..1.2), rng.gen_range(-10.0..10.0)))
            .collect();
        if i % 4 == 0 {
            // Radial projection of the real part onto the boundary sphere.
            let r = z.iter().map(|c| c.re * c.re).sum::<f64>().sqrt();
            if r > 0.0 {
                z.iter_mut().for_each(|c| c.re /= r);
            }
        }
        if tube.eval(&z) <= 1e-15 {
            used += 1;
            sup_phi = sup_phi.max(w.phi(&z));
        }
    }
    Ok(ModelWeightReport {
        t,
        n,
        hessian_residual,
        sup_phi,
        bound: 2.0 * t,
        samples: used,
    })
}

/// Writes MKH reports as CSV.
pub fn write_mkh_csv<W: Write>(out: W, reports: &[MkhReport]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a scaling table as CSV.
pub fn write_scaling_csv<W: Write>(out: W, table: &ScalingTable) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in &table.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

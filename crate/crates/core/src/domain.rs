//! Boundary geometry of a domain `Ω = {ρ < 0}` with polynomial `ρ`.
//!
//! Conventions used throughout:
//!
//! * `ρ_j = ∂ρ/∂z_j` and `H = (ρ_{j k̄})` is the complex Hessian.
//! * The real gradient, written as a complex vector, is `g_j = ∂ρ/∂x_j +
//!   i ∂ρ/∂y_j = 2 conj(ρ_j)`, so `|∇ρ| = 2 |∂ρ|`. For graph domains this
//!   equals `|dρ| = (1 + 4 Σ' |ρ_j|²)^{1/2}`.
//! * A frame is an `n × n` unitary matrix whose first `n - 1` rows `v` are
//!   complex tangent vectors (`Σ_j v_j ρ_j = 0`) and whose last row is the
//!   unit normal `conj(ρ') / |ρ'|`.
//! * The Levi matrix is `ℒ = F H F*` restricted to the tangent rows, scaled
//!   according to [`Normalization`].
//! * Real coordinates are interleaved: `(x_1, y_1, x_2, y_2, ...)`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::hermitian::{CMat, HermError, HermMat};
use crate::wirtinger::{Monomial, PolyError, PolyRC, PolySet};
use crate::C64;

/// Absolute part of the on-boundary test `|ρ| ≤ ON_BOUNDARY_ABS + ON_BOUNDARY_REL · scale`.
pub const ON_BOUNDARY_ABS: f64 = 1e-9;
/// Relative part of the on-boundary test, applied to `Σ |terms|` of `ρ`.
pub const ON_BOUNDARY_REL: f64 = 1e-13;
/// Gradients shorter than this are rejected as degenerate.
pub const MIN_GRADIENT: f64 = 1e-10;
/// Newton iteration cap for projection onto `{ρ = 0}`.
pub const NEWTON_MAX_ITER: usize = 50;
/// Iteration cap for the foot-point search.
pub const FOOT_MAX_ITER: usize = 500;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("defining function is not real valued")]
    NotRealValued,
    #[error("graph variable z{0} does not enter as -Im z{0} + (terms free of z{0})", .index + 1)]
    GraphStructure { index: usize },
    #[error("degenerate boundary point: |grad rho| = {norm:e}")]
    DegenerateGradient { norm: f64 },
    #[error("point is not on the boundary: |rho| = {residual:e} exceeds {allowed:e}")]
    NotOnBoundary { residual: f64, allowed: f64 },
    #[error("no boundary points found in the window ({dropped} seeds failed to project)")]
    NoBoundaryPoints { dropped: usize },
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("point at distance {distance:e} lies outside the allowed reach {reach:e}")]
    OutsideReach { distance: f64, reach: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("point is at the origin, where the test vector is undefined")]
    ZeroPoint,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Herm(#[from] HermError),
}

/// How the complex Hessian is scaled before it is restricted to the tangent
/// space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Hessian of `ρ` as given.
    #[default]
    Raw,
    /// Hessian divided by `|∇ρ|`, i.e. the Hessian of `ρ/|∇ρ|` restricted to
    /// tangent vectors at the point.
    UnitGradient,
}

/// A defining function together with its precomputed derivatives.
#[derive(Clone, Debug)]
pub struct DomainSpec {
    pub name: String,
    rho: PolyRC,
    graph_var: Option<usize>,
    grad: Vec<PolyRC>,
    hess: Vec<Vec<PolyRC>>,
    batch: PolySet,
}

/// Values of `ρ` and its first and mixed second derivatives at a point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub rho: f64,
    /// `Σ |c| |monomial|` over the terms of `ρ`, the rounding scale of `rho`.
    pub rho_scale: f64,
    pub grad: Vec<C64>,
    pub hessian: HermMat,
}

impl Jet {
    /// `|∇ρ| = 2 |∂ρ|`.
    pub fn grad_norm(&self) -> f64 {
        2.0 * self.grad.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real gradient as a complex vector, `2 conj(ρ_j)`.
    pub fn real_gradient(&self) -> Vec<C64> {
        self.grad.iter().map(|g| g.conj() * 2.0).collect()
    }

    pub fn on_boundary_tolerance(&self) -> f64 {
        ON_BOUNDARY_ABS + ON_BOUNDARY_REL * self.rho_scale
    }
}

impl DomainSpec {
    pub fn new(name: impl Into<String>, rho: PolyRC) -> Result<Self, DomainError> {
        Self::build(name.into(), rho, None)
    }

    /// A graph domain `ρ = -Im z_g + (polynomial free of z_g)`, `g` 0-based.
    pub fn graph(name: impl Into<String>, rho: PolyRC, graph_var: usize) -> Result<Self, DomainError> {
        Self::build(name.into(), rho, Some(graph_var))
    }

    fn build(name: String, rho: PolyRC, graph_var: Option<usize>) -> Result<Self, DomainError> {
        if !rho.is_real_valued() {
            return Err(DomainError::NotRealValued);
        }
        let n = rho.n();
        if let Some(g) = graph_var {
            if g >= n {
                return Err(DomainError::GraphStructure { index: g });
            }
            check_graph_structure(&rho, g)?;
        }
        let grad: Vec<PolyRC> = (0..n).map(|j| rho.d_z(j)).collect::<Result<_, _>>()?;
        let mut hess = Vec::with_capacity(n);
        for gj in &grad {
            hess.push((0..n).map(|k| gj.d_zbar(k)).collect::<Result<Vec<_>, _>>()?);
        }
        let mut all = vec![rho.clone()];
        all.extend(grad.iter().cloned());
        all.extend(hess.iter().flatten().cloned());
        let batch = PolySet::new(&all);
        Ok(DomainSpec {
            name,
            rho,
            graph_var,
            grad,
            hess,
            batch,
        })
    }

    pub fn n(&self) -> usize {
        self.rho.n()
    }

    pub fn rho(&self) -> &PolyRC {
        &self.rho
    }

    pub fn graph_var(&self) -> Option<usize> {
        self.graph_var
    }

    /// `ρ_j` as polynomials.
    pub fn grad_polys(&self) -> &[PolyRC] {
        &self.grad
    }

    /// `ρ_{j k̄}` as polynomials.
    pub fn hessian_polys(&self) -> &[Vec<PolyRC>] {
        &self.hess
    }

    /// The same domain with `ρ` multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<DomainSpec, DomainError> {
        assert!(c > 0.0);
        Self::build(
            format!("{}*{}", c, self.name),
            self.rho.scale(C64::new(c, 0.0)),
            None,
        )
    }

    /// SHA-256 of the canonical coefficient listing and graph variable.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.rho.canonical_string().as_bytes());
        h.update(format!("graph={:?}", self.graph_var).as_bytes());
        hex::encode(h.finalize())
    }

    fn check_dim(&self, z: &[C64]) -> Result<(), DomainError> {
        if z.len() != self.n() {
            return Err(DomainError::DimensionMismatch {
                expected: self.n(),
                got: z.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, z: &[C64]) -> f64 {
        self.rho.eval(z).re
    }

    pub fn jet(&self, z: &[C64]) -> Result<Jet, DomainError> {
        self.check_dim(z)?;
        let n = self.n();
        let v = self.batch.eval(z);
        let (rho, rho_scale) = self.rho.eval_with_scale(z);
        debug_assert!((rho - v[0]).norm() <= 1e-12 * (1.0 + rho_scale));
        let grad = v[1..=n].to_vec();
        let h = CMat::from_fn(n, n, |j, k| v[1 + n + j * n + k]);
        Ok(Jet {
            rho: rho.re,
            rho_scale,
            grad,
            hessian: HermMat::new(h),
        })
    }

    /// Newton projection `z ← z - ρ g / |g|²` onto `{ρ = 0}`.
    pub fn newton_project(&self, z0: &[C64]) -> Result<Vec<C64>, DomainError> {
        self.check_dim(z0)?;
        let mut z = z0.to_vec();
        let mut residual = f64::INFINITY;
        for _ in 0..=NEWTON_MAX_ITER {
            let (rho, scale) = self.rho.eval_with_scale(&z);
            residual = rho.re.abs();
            if residual <= 1e-12 + 1e-14 * scale {
                return Ok(z);
            }
            let g: Vec<C64> = self
                .grad
                .iter()
                .map(|p| p.eval(&z).conj() * 2.0)
                .collect();
            let g2: f64 = g.iter().map(|c| c.norm_sqr()).sum();
            if g2.sqrt() < MIN_GRADIENT {
                return Err(DomainError::DegenerateGradient { norm: g2.sqrt() });
            }
            let step = rho.re / g2;
            for (zj, gj) in z.iter_mut().zip(&g) {
                *zj -= gj * step;
            }
        }
        Err(DomainError::NonConvergence {
            what: "Newton projection",
            iterations: NEWTON_MAX_ITER,
            residual,
        })
    }

    /// For graph domains, the boundary point above `z`: `Im z_g` is replaced
    /// by the value of the terms of `ρ` that do not involve `z_g`.
    pub fn graph_lift(&self, z: &[C64]) -> Result<Vec<C64>, DomainError> {
        self.check_dim(z)?;
        let g = self.graph_var.expect("graph_lift on a non-graph domain");
        let mut w = z.to_vec();
        w[g] = C64::new(w[g].re, 0.0);
        let height = self.eval(&w);
        w[g] = C64::new(w[g].re, height);
        Ok(w)
    }
}

fn check_graph_structure(rho: &PolyRC, g: usize) -> Result<(), DomainError> {
    let n = rho.n();
    let mut zg = Monomial::one(n);
    zg.z[g] = 1;
    let mut zbg = Monomial::one(n);
    zbg.zbar[g] = 1;
    // -Im z = -(z - z̄)/(2i) = (i/2) z - (i/2) z̄.
    let ok_lin = (rho.coeff(&zg) - C64::new(0.0, 0.5)).norm() < 1e-14
        && (rho.coeff(&zbg) - C64::new(0.0, -0.5)).norm() < 1e-14;
    let others_free = rho
        .terms()
        .all(|(m, _)| *m == zg || *m == zbg || (m.z[g] == 0 && m.zbar[g] == 0));
    if ok_lin && others_free {
        Ok(())
    } else {
        Err(DomainError::GraphStructure { index: g })
    }
}

/// A boundary point with its full first- and second-order geometry.
#[derive(Clone, Debug)]
pub struct BoundaryPointData {
    pub z: Vec<C64>,
    pub rho: f64,
    /// `ρ_j = ∂ρ/∂z_j`.
    pub grad: Vec<C64>,
    /// `|∇ρ| = 2|∂ρ|`, equal to `|dρ|` for graph domains.
    pub grad_norm: f64,
    /// Unscaled complex Hessian `(ρ_{j k̄})`.
    pub hessian: HermMat,
    /// Rows `0..n-1` tangent, row `n-1` the unit normal.
    pub frame: CMat,
    pub levi: HermMat,
    /// Ascending Levi eigenvalues.
    pub mu: Vec<f64>,
    pub normalization: Normalization,
}

impl BoundaryPointData {
    /// Tangent rows of the frame as an `(n-1) × n` matrix.
    pub fn tangent_frame(&self) -> CMat {
        let n = self.z.len();
        CMat::from_fn(n - 1, n, |a, j| self.frame[(a, j)])
    }

    /// Hessian scaled per the normalization flag.
    pub fn scaled_hessian(&self) -> HermMat {
        match self.normalization {
            Normalization::Raw => self.hessian.clone(),
            Normalization::UnitGradient => self.hessian.scale(1.0 / self.grad_norm),
        }
    }

    /// Max of `|⟨f_a, f_b⟩ - δ_ab|` over frame rows.
    pub fn frame_unitarity_error(&self) -> f64 {
        let n = self.z.len();
        let g = self.frame.mul(&self.frame.adjoint());
        g.sub(&CMat::identity(n)).max_abs()
    }

    /// Max of `|Σ_j v_j ρ_j| / |ρ'|` over tangent rows.
    pub fn frame_tangency_error(&self) -> f64 {
        let n = self.z.len();
        let gnorm = self.grad_norm / 2.0;
        (0..n - 1)
            .map(|a| {
                let s: C64 = (0..n).map(|j| self.frame[(a, j)] * self.grad[j]).sum();
                s.norm() / gnorm
            })
            .fold(0.0, f64::max)
    }
}

/// How tangent frames are built.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum FrameMethod {
    /// Closed-form frame for three-dimensional graph domains over `z_3`,
    /// Gram-Schmidt otherwise.
    #[default]
    Auto,
    /// Pivoted Gram-Schmidt seeded with the standard basis in the given order.
    GramSchmidt(Vec<usize>),
}

/// Boundary geometry at `z` using the default frame method.
pub fn frame_at(
    spec: &DomainSpec,
    z: &[C64],
    normalization: Normalization,
) -> Result<BoundaryPointData, DomainError> {
    frame_at_with(spec, z, normalization, &FrameMethod::Auto)
}

pub fn frame_at_with(
    spec: &DomainSpec,
    z: &[C64],
    normalization: Normalization,
    method: &FrameMethod,
) -> Result<BoundaryPointData, DomainError> {
    let jet = spec.jet(z)?;
    let allowed = jet.on_boundary_tolerance();
    if jet.rho.abs() > allowed {
        return Err(DomainError::NotOnBoundary {
            residual: jet.rho.abs(),
            allowed,
        });
    }
    let grad_norm = jet.grad_norm();
    if grad_norm < MIN_GRADIENT {
        return Err(DomainError::DegenerateGradient { norm: grad_norm });
    }
    let n = spec.n();
    let frame = match method {
        FrameMethod::Auto if n == 3 && spec.graph_var() == Some(2) => graph_frame_3(&jet.grad),
        FrameMethod::Auto => gram_schmidt_frame(&jet.grad, &(0..n).collect::<Vec<_>>()),
        FrameMethod::GramSchmidt(order) => gram_schmidt_frame(&jet.grad, order),
    };
    let mut data = BoundaryPointData {
        z: z.to_vec(),
        rho: jet.rho,
        grad: jet.grad,
        grad_norm,
        hessian: jet.hessian,
        frame,
        levi: HermMat::zeros(n - 1),
        mu: Vec::new(),
        normalization,
    };
    let f = data.tangent_frame();
    data.levi = data.scaled_hessian().congruence(&f);
    data.mu = data.levi.eigvalsh()?;
    Ok(data)
}

/// Closed-form orthonormal frame for `ρ = -Im z_3 + f(z_1, z_2)`, with
/// `d = |dρ|`:
///
/// ```text
/// u1 = d⁻¹ (1 + 4|ρ2|²/(d+1), -4 ρ1 ρ̄2/(d+1), 2i ρ1)
/// u2 = d⁻¹ (-4 ρ̄1 ρ2/(d+1), 1 + 4|ρ1|²/(d+1), 2i ρ2)
/// u3 = d⁻¹ (2 ρ̄1, 2 ρ̄2, -i)
/// ```
pub fn graph_frame_3(grad: &[C64]) -> CMat {
    let (r1, r2) = (grad[0], grad[1]);
    let d = (1.0 + 4.0 * (r1.norm_sqr() + r2.norm_sqr())).sqrt();
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    let u1 = vec![
        one + 4.0 * r2.norm_sqr() / (d + 1.0),
        -4.0 * r1 * r2.conj() / (d + 1.0),
        2.0 * i * r1,
    ];
    let u2 = vec![
        -4.0 * r1.conj() * r2 / (d + 1.0),
        one + 4.0 * r1.norm_sqr() / (d + 1.0),
        2.0 * i * r2,
    ];
    let u3 = vec![2.0 * r1.conj(), 2.0 * r2.conj(), -i];
    CMat::from_rows(&[u1, u2, u3]).scale(C64::new(1.0 / d, 0.0))
}

/// Unit normal followed by pivoted Gram-Schmidt over the standard basis.
/// Candidates are visited in `order`; at each step the candidate with the
/// largest residual is taken, ties going to the earlier one in `order`.
pub fn gram_schmidt_frame(grad: &[C64], order: &[usize]) -> CMat {
    let n = grad.len();
    let gnorm = grad.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
    let normal: Vec<C64> = grad.iter().map(|g| g.conj() / gnorm).collect();
    let mut basis: Vec<Vec<C64>> = vec![normal.clone()];
    let mut used = vec![false; n];
    for _ in 0..n - 1 {
        let mut best: Option<(usize, Vec<C64>, f64)> = None;
        for &e in order {
            if used[e] {
                continue;
            }
            let mut v = vec![C64::new(0.0, 0.0); n];
            v[e] = C64::new(1.0, 0.0);
            orthogonalize(&mut v, &basis);
            orthogonalize(&mut v, &basis);
            let r = norm(&v);
            if best.as_ref().map_or(true, |b| r > b.2 * (1.0 + 1e-12)) {
                best = Some((e, v, r));
            }
        }
        let (e, v, r) = best.expect("Gram-Schmidt ran out of candidates");
        used[e] = true;
        basis.push(v.into_iter().map(|c| c / r).collect());
    }
    let mut rows: Vec<Vec<C64>> = basis[1..].to_vec();
    rows.push(normal);
    CMat::from_rows(&rows)
}

fn orthogonalize(v: &mut [C64], basis: &[Vec<C64>]) {
    for b in basis {
        let p: C64 = v.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
        for (x, y) in v.iter_mut().zip(b) {
            *x -= p * y;
        }
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// A box in interleaved real coordinates `(x_1, y_1, ..., x_n, y_n)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Window {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, DomainError> {
        if lo.len() != hi.len() || lo.len() % 2 != 0 || lo.is_empty() {
            return Err(DomainError::InvalidWindow(format!(
                "bounds of lengths {} and {} are not a box in C^n",
                lo.len(),
                hi.len()
            )));
        }
        for (k, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a <= b) || !a.is_finite() || !b.is_finite() {
                return Err(DomainError::InvalidWindow(format!(
                    "axis {k} has bounds [{a}, {b}]"
                )));
            }
        }
        Ok(Window { lo, hi })
    }

    /// The cube `[-r, r]^{2n}`.
    pub fn cube(n: usize, r: f64) -> Self {
        Window {
            lo: vec![-r; 2 * n],
            hi: vec![r; 2 * n],
        }
    }

    pub fn n(&self) -> usize {
        self.lo.len() / 2
    }

    /// Tensor grid with `counts[k]` nodes on axis `k`, endpoints included
    /// (a single node sits at the midpoint). Grid order is lexicographic
    /// with the last axis fastest.
    pub fn grid(&self, counts: &[usize]) -> Result<Vec<Vec<C64>>, DomainError> {
        if counts.len() != self.lo.len() || counts.iter().any(|&c| c == 0) {
            return Err(DomainError::InvalidWindow(
                "counts must be positive, one per real axis".into(),
            ));
        }
        let axes: Vec<Vec<f64>> = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let (a, b) = (self.lo[k], self.hi[k]);
                if c == 1 {
                    vec![0.5 * (a + b)]
                } else {
                    (0..c).map(|i| a + (b - a) * i as f64 / (c - 1) as f64).collect()
                }
            })
            .collect();
        let total: usize = counts.iter().product();
        let n = self.n();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; counts.len()];
        for _ in 0..total {
            let z = (0..n)
                .map(|j| C64::new(axes[2 * j][idx[2 * j]], axes[2 * j + 1][idx[2 * j + 1]]))
                .collect();
            out.push(z);
            for k in (0..counts.len()).rev() {
                idx[k] += 1;
                if idx[k] < counts[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(out)
    }
}

/// Result of [`boundary_sample`].
#[derive(Clone, Debug)]
pub struct Sample {
    pub points: Vec<BoundaryPointData>,
    /// Seeds that failed to reach the boundary.
    pub dropped: usize,
}

/// Boundary points generated from a seed grid over `window`. Graph domains
/// are lifted exactly; other domains are Newton-projected. Output order
/// follows the seed grid.
pub fn boundary_sample(
    spec: &DomainSpec,
    window: &Window,
    counts: &[usize],
    normalization: Normalization,
) -> Result<Sample, DomainError> {
    if window.n() != spec.n() {
        return Err(DomainError::DimensionMismatch {
            expected: spec.n(),
            got: window.n(),
        });
    }
    let mut counts = counts.to_vec();
    if let Some(g) = spec.graph_var() {
        if counts.len() == 2 * spec.n() {
            counts[2 * g + 1] = 1;
        }
    }
    let seeds = window.grid(&counts)?;
    let results: Vec<Option<BoundaryPointData>> = seeds
        .par_iter()
        .map(|seed| {
            let z = match spec.graph_var() {
                Some(_) => spec.graph_lift(seed).ok()?,
                None => spec.newton_project(seed).ok()?,
            };
            frame_at(spec, &z, normalization).ok()
        })
        .collect();
    let dropped = results.iter().filter(|r| r.is_none()).count();
    let points: Vec<BoundaryPointData> = results.into_iter().flatten().collect();
    if points.is_empty() {
        return Err(DomainError::NoBoundaryPoints { dropped });
    }
    Ok(Sample { points, dropped })
}

/// Output of [`signed_distance`].
#[derive(Clone, Debug)]
pub struct SignedDistance {
    /// Negative inside `Ω`, positive outside.
    pub delta: f64,
    pub foot: Vec<C64>,
    /// Unit outward normal at the foot point (the gradient of the signed
    /// distance there), as a complex vector.
    pub normal_grad: Vec<C64>,
    pub iterations: usize,
}

/// Signed distance from `p` to the boundary, with the nearest boundary point.
///
/// Starts from the Newton projection of `p` and alternates a tangential
/// correction (moving the foot along the tangential part of `p - foot`) with
/// re-projection, until `p - foot` is parallel to the normal.
pub fn signed_distance(
    spec: &DomainSpec,
    p: &[C64],
    eps_reach: f64,
) -> Result<SignedDistance, DomainError> {
    spec.check_dim(p)?;
    let mut foot = spec.newton_project(p)?;
    for it in 0..FOOT_MAX_ITER {
        let jet = spec.jet(&foot)?;
        let g = jet.real_gradient();
        let gn = norm(&g);
        if gn < MIN_GRADIENT {
            return Err(DomainError::DegenerateGradient { norm: gn });
        }
        let nhat: Vec<C64> = g.iter().map(|c| c / gn).collect();
        let d: Vec<C64> = p.iter().zip(&foot).map(|(a, b)| a - b).collect();
        let along: f64 = d.iter().zip(&nhat).map(|(a, b)| (a * b.conj()).re).sum();
        let tangential: Vec<C64> = d.iter().zip(&nhat).map(|(a, b)| a - b * along).collect();
        let dist = norm(&d);
        let tres = norm(&tangential);
        if tres <= 1e-10 * (1.0 + dist) {
            if dist > eps_reach {
                return Err(DomainError::OutsideReach {
                    distance: dist,
                    reach: eps_reach,
                });
            }
            let sign = if spec.eval(p) < 0.0 { -1.0 } else { 1.0 };
            return Ok(SignedDistance {
                delta: sign * dist,
                foot,
                normal_grad: nhat,
                iterations: it,
            });
        }
        let moved: Vec<C64> = foot.iter().zip(&tangential).map(|(a, b)| a + b).collect();
        foot = spec.newton_project(&moved)?;
    }
    Err(DomainError::NonConvergence {
        what: "foot-point iteration",
        iterations: FOOT_MAX_ITER,
        residual: f64::NAN,
    })
}

/// Residuals of the quadric test vector relations at `z`.
#[derive(Clone, Debug, Serialize)]
pub struct EigenvectorCheck {
    /// `|Σ_j v_j ρ_j|`.
    pub tangency: f64,
    /// Max over `k` of `|Σ_j v_j ρ_{j k̄} - λ v_k - c conj(ρ_k)|`.
    pub residual: f64,
    /// `λ = (|z|²₋ - |z|²₊) / |z|²`.
    pub eigenvalue: f64,
}

/// Checks the test vector `v = (|z|²₋ z_1..z_p, |z|²₊ z_{p+1}..z_n)` on a
/// quadric with `p` positive directions: tangency and the relation
/// `Σ_j v_j ρ_{j k̄} = λ v_k + (2|z|²₋|z|²₊/|z|²) conj(ρ_k)`.
pub fn levi_eigenvector_check(
    spec: &DomainSpec,
    p: usize,
    z: &[C64],
) -> Result<EigenvectorCheck, DomainError> {
    let jet = spec.jet(z)?;
    let n = spec.n();
    let plus: f64 = z[..p].iter().map(|c| c.norm_sqr()).sum();
    let minus: f64 = z[p..].iter().map(|c| c.norm_sqr()).sum();
    let total = plus + minus;
    if total == 0.0 {
        return Err(DomainError::ZeroPoint);
    }
    let v: Vec<C64> = (0..n)
        .map(|j| if j < p { z[j] * minus } else { z[j] * plus })
        .collect();
    let tangency = v.iter().zip(&jet.grad).map(|(a, b)| a * b).sum::<C64>().norm();
    let lambda = (minus - plus) / total;
    let coef = 2.0 * minus * plus / total;
    let h = jet.hessian.as_cmat();
    let residual = (0..n)
        .map(|k| {
            let lhs: C64 = (0..n).map(|j| v[j] * h[(j, k)]).sum();
            (lhs - v[k] * lambda - jet.grad[k].conj() * coef).norm()
        })
        .fold(0.0, f64::max);
    Ok(EigenvectorCheck {
        tangency,
        residual,
        eigenvalue: lambda,
    })
}

/// Writes one CSV row per point: interleaved coordinates, `|∇ρ|`, then the
/// Levi eigenvalues.
pub fn write_points_csv<W: Write>(points: &[BoundaryPointData], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    if let Some(first) = points.first() {
        let n = first.z.len();
        let mut header: Vec<String> = Vec::new();
        for j in 1..=n {
            header.push(format!("x{j}"));
            header.push(format!("y{j}"));
        }
        header.push("grad_norm".into());
        for i in 1..n {
            header.push(format!("mu{i}"));
        }
        w.write_record(&header)?;
    }
    for p in points {
        let mut rec: Vec<String> = Vec::new();
        for c in &p.z {
            rec.push(format!("{:.17e}", c.re));
            rec.push(format!("{:.17e}", c.im));
        }
        rec.push(format!("{:.17e}", p.grad_norm));
        rec.extend(p.mu.iter().map(|m| format!("{m:.17e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

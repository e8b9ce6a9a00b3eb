//! Hermitian matrix fields `Υ` used by the weak `Z(q)` test.
//!
//! Matrices are stored as `Y[k][j] = Υ^{k̄ j}` in ambient coordinates, so
//! tangency reads `Y ρ' = 0` and the Hessian pairing is `Σ Υ^{k̄ j} ρ_{j k̄} =
//! Tr(Y H)`. A field given in frame coordinates `X` (indices of the Levi
//! matrix) corresponds to the ambient `Y = F* X F`, with `F` the tangent rows
//! of the frame.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{graph_frame_3, signed_distance, DomainError, DomainSpec, Normalization};
use crate::hermitian::{CMat, HermError, HermMat};
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UpsilonError {
    #[error("point is outside the region where '{label}' is defined")]
    OutsideRegion { label: String },
    #[error("lambda = {lambda} is not in (0, 1) at y = {y}; Y1 is too small")]
    LambdaOutOfRange { y: f64, lambda: f64 },
    #[error("|z|^2_- vanishes; the quadric projection is undefined")]
    VanishingMinus,
    #[error("invalid parameters: {0}")]
    Parameters(String),
    #[error("dimension mismatch: field has n = {expected}, point has {got} coordinates")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Herm(#[from] HermError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

type Evaluator = dyn Fn(&[C64]) -> Result<HermMat, UpsilonError> + Send + Sync;
type Validity = dyn Fn(&[C64]) -> bool + Send + Sync;

/// An `n × n` Hermitian-matrix-valued function with a region of definition.
#[derive(Clone)]
pub struct HermitianField {
    label: String,
    n: usize,
    evaluator: Arc<Evaluator>,
    validity: Arc<Validity>,
}

impl fmt::Debug for HermitianField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermitianField")
            .field("label", &self.label)
            .field("n", &self.n)
            .finish()
    }
}

impl HermitianField {
    pub fn new(
        label: impl Into<String>,
        n: usize,
        evaluator: impl Fn(&[C64]) -> Result<HermMat, UpsilonError> + Send + Sync + 'static,
        validity: impl Fn(&[C64]) -> bool + Send + Sync + 'static,
    ) -> Self {
        HermitianField {
            label: label.into(),
            n,
            evaluator: Arc::new(evaluator),
            validity: Arc::new(validity),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_valid(&self, z: &[C64]) -> bool {
        z.len() == self.n && (self.validity)(z)
    }

    pub fn eval(&self, z: &[C64]) -> Result<HermMat, UpsilonError> {
        if z.len() != self.n {
            return Err(UpsilonError::DimensionMismatch {
                expected: self.n,
                got: z.len(),
            });
        }
        if !(self.validity)(z) {
            return Err(UpsilonError::OutsideRegion {
                label: self.label.clone(),
            });
        }
        (self.evaluator)(z)
    }
}

/// `max_k |Σ_j Υ^{k̄ j} ρ_j| / |ρ'|`.
pub fn tangency_residual(y: &HermMat, grad: &[C64]) -> f64 {
    let gnorm = grad.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
    let v = y.as_cmat().mul_vec(grad);
    v.iter().map(|c| c.norm()).fold(0.0, f64::max) / gnorm.max(f64::MIN_POSITIVE)
}

/// Frame coordinates `F Y F*` of an ambient field value.
pub fn to_frame_coords(y: &HermMat, tangent_frame: &CMat) -> HermMat {
    y.congruence(tangent_frame)
}

/// Ambient value `F* X F` of a frame-coordinate matrix.
pub fn from_frame_coords(x: &HermMat, tangent_frame: &CMat) -> HermMat {
    x.congruence(&tangent_frame.adjoint())
}

/// The constant zero field.
pub fn upsilon_zero(n: usize) -> HermitianField {
    HermitianField::new("zero", n, move |_| Ok(HermMat::zeros(n)), |_| true)
}

/// Projection `Υ^{k̄ j} = δ_{jk} - z̄_k z_j / |z|²₋` for `j, k > p` on the
/// quadric with `p` positive directions; zero elsewhere.
pub fn upsilon_quadric(n: usize, p: usize) -> HermitianField {
    assert!(p < n);
    HermitianField::new(
        format!("quadric({n},{p})"),
        n,
        move |z| {
            let minus: f64 = z[p..].iter().map(|c| c.norm_sqr()).sum();
            if minus == 0.0 {
                return Err(UpsilonError::VanishingMinus);
            }
            let m = CMat::from_fn(n, n, |k, j| {
                if k < p || j < p {
                    C64::new(0.0, 0.0)
                } else {
                    let delta = if j == k { 1.0 } else { 0.0 };
                    C64::new(delta, 0.0) - z[k].conj() * z[j] / minus
                }
            });
            Ok(HermMat::new(m))
        },
        move |z| z[p..].iter().any(|c| c.norm_sqr() > 0.0),
    )
}

/// `λ(y) = 1 - (150 y² - 100) / (y¹⁰ + 100 y⁸)`.
pub fn lambda(y: f64) -> f64 {
    let y2 = y * y;
    let y8 = y2 * y2 * y2 * y2;
    1.0 - (150.0 * y2 - 100.0) / (y8 * y2 + 100.0 * y8)
}

fn first_derivs(spec: &DomainSpec, z: &[C64]) -> (C64, C64) {
    let g = spec.grad_polys();
    (g[0].eval(z), g[1].eval(z))
}

/// `4λ/|dρ|² [[|ρ2|², -ρ1 ρ̄2], [-ρ̄1 ρ2, |ρ1|²]]` on the `z_1, z_2` block.
/// Defined for `|y| ≥ y1`, `y = Im z_1`.
pub fn upsilon1(spec: Arc<DomainSpec>, y1: f64) -> HermitianField {
    assert_eq!(spec.n(), 3, "upsilon1 needs a domain in C^3");
    HermitianField::new(
        format!("upsilon1(Y1={y1})"),
        3,
        move |z| upsilon1_value(&spec, z),
        move |z| z[0].im.abs() >= y1,
    )
}

fn upsilon1_value(spec: &DomainSpec, z: &[C64]) -> Result<HermMat, UpsilonError> {
    let y = z[0].im;
    let lam = lambda(y);
    if !(lam > 0.0 && lam < 1.0) {
        return Err(UpsilonError::LambdaOutOfRange { y, lambda: lam });
    }
    let (r1, r2) = first_derivs(spec, z);
    let d2 = 1.0 + 4.0 * (r1.norm_sqr() + r2.norm_sqr());
    let s = 4.0 * lam / d2;
    let zero = C64::new(0.0, 0.0);
    let m = CMat::from_rows(&[
        vec![C64::new(r2.norm_sqr(), 0.0) * s, -r1 * r2.conj() * s, zero],
        vec![-r1.conj() * r2 * s, C64::new(r1.norm_sqr(), 0.0) * s, zero],
        vec![zero, zero, zero],
    ]);
    Ok(HermMat::new(m))
}

/// The `2 × 2` block `U` of the closed-form graph frame (first two
/// components of the two tangent rows).
pub fn u_block(r1: C64, r2: C64) -> CMat {
    let f = graph_frame_3(&[r1, r2, C64::new(0.0, 0.5)]);
    CMat::from_fn(2, 2, |a, j| f[(a, j)])
}

/// Closed form `U⁻¹ = I + 4 ρ' ρ'* / (|dρ| + 1)` with `ρ' = (ρ1, ρ2)`.
pub fn u_block_inverse(r1: C64, r2: C64) -> CMat {
    let d = (1.0 + 4.0 * (r1.norm_sqr() + r2.norm_sqr())).sqrt();
    let v = [r1, r2];
    CMat::from_fn(2, 2, |a, b| {
        let delta = if a == b { 1.0 } else { 0.0 };
        C64::new(delta, 0.0) + v[a] * v[b].conj() * (4.0 / (d + 1.0))
    })
}

/// Frame-coordinate value `I - D⁻¹ U⁻* diag(2, 3y²) U⁻¹` with
/// `D = 2(1 + 4|ρ1|²) + 3y²(1 + 4|ρ2|²)`.
pub fn upsilon2_frame(spec: &DomainSpec, z: &[C64]) -> HermMat {
    let (r1, r2) = first_derivs(spec, z);
    let y = z[0].im;
    let uinv = u_block_inverse(r1, r2);
    let lam = CMat::diag(&[C64::new(2.0, 0.0), C64::new(3.0 * y * y, 0.0)]);
    let den = 2.0 * (1.0 + 4.0 * r1.norm_sqr()) + 3.0 * y * y * (1.0 + 4.0 * r2.norm_sqr());
    let inner = uinv.adjoint().mul(&lam).mul(&uinv).scale(C64::new(1.0 / den, 0.0));
    HermMat::new(CMat::identity(2).sub(&inner))
}

/// `Υ₂` in ambient coordinates, `F* X F` with `X` from [`upsilon2_frame`].
pub fn upsilon2(spec: Arc<DomainSpec>) -> HermitianField {
    assert_eq!(spec.n(), 3, "upsilon2 needs a domain in C^3");
    HermitianField::new(
        "upsilon2",
        3,
        move |z| {
            let x = upsilon2_frame(&spec, z);
            Ok(from_frame_coords(&x, &tangent_rows(&spec, z)))
        },
        |_| true,
    )
}

fn tangent_rows(spec: &DomainSpec, z: &[C64]) -> CMat {
    let g: Vec<C64> = spec.grad_polys().iter().map(|p| p.eval(z)).collect();
    let f = graph_frame_3(&g);
    CMat::from_fn(2, 3, |a, j| f[(a, j)])
}

/// Smooth step: `0` for `t ≤ 0`, `1` for `t ≥ 1`, with `1 - χ(t) = χ(1 - t)`.
pub fn chi(t: f64) -> f64 {
    let e = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let (a, b) = (e(t), e(1.0 - t));
    if a + b == 0.0 {
        // Unreachable for finite t, kept for NaN safety.
        return if t >= 0.5 { 1.0 } else { 0.0 };
    }
    a / (a + b)
}

/// Region parameters of the patched field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchParams {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub y1: f64,
    pub y2: f64,
}

impl Default for PatchParams {
    fn default() -> Self {
        PatchParams {
            r0: 3.0,
            r1: 6.0,
            r2: 6.0,
            y1: 15.0,
            y2: 30.0,
        }
    }
}

impl PatchParams {
    pub fn validate(&self) -> Result<(), UpsilonError> {
        let ok = self.r0 > 0.0 && self.r1 > self.r0 && self.r2 == self.r1 && self.y1 > 0.0 && self.y2 > self.y1;
        if ok {
            Ok(())
        } else {
            Err(UpsilonError::Parameters(format!(
                "need R2 = R1 > R0 > 0 and Y2 > Y1 > 0, got {self:?}"
            )))
        }
    }

    /// Cutoff weights `(a, b)` of the two pieces at `z`.
    pub fn weights(&self, z: &[C64]) -> (f64, f64) {
        let y2 = z[0].im * z[0].im;
        let r2 = z[0].re * z[0].re + z[1].norm_sqr();
        let (ya, yb) = (self.y1 * self.y1, self.y2 * self.y2);
        let a = chi((y2 - ya) / (yb - ya)) * chi((self.r1 * self.r1 - r2) / (self.r1 * self.r1 - self.r0 * self.r0));
        let b = chi((yb - y2) / (yb - ya)) * chi((self.r2 * self.r2 - r2) / (self.r2 * self.r2 - self.r0 * self.r0));
        (a, b)
    }
}

/// `a Υ₁ + b Υ₂` with the smooth cutoff weights of [`PatchParams::weights`].
pub fn upsilon_patched(spec: Arc<DomainSpec>, params: PatchParams) -> Result<HermitianField, UpsilonError> {
    params.validate()?;
    assert_eq!(spec.n(), 3, "upsilon_patched needs a domain in C^3");
    let label = format!(
        "patched(R0={},R1={},R2={},Y1={},Y2={})",
        params.r0, params.r1, params.r2, params.y1, params.y2
    );
    Ok(HermitianField::new(
        label,
        3,
        move |z| {
            let (a, b) = params.weights(z);
            let mut out = HermMat::zeros(3);
            if a > 0.0 {
                out = out.add(&upsilon1_value(&spec, z)?.scale(a));
            }
            if b > 0.0 {
                let x = upsilon2_frame(&spec, z);
                out = out.add(&from_frame_coords(&x, &tangent_rows(&spec, z)).scale(b));
            }
            Ok(out)
        },
        |_| true,
    ))
}

/// Outcome of [`scan_y1`].
#[derive(Clone, Debug, Serialize)]
pub struct Y1Scan {
    pub y1: f64,
    /// Candidates rejected by the `λ` bracket.
    pub bracket_failures: Vec<u32>,
    /// Candidates rejected by the positivity check.
    pub positivity_failures: Vec<u32>,
    /// Smallest positivity value seen for the accepted candidate.
    pub min_positivity: f64,
}

/// Whether `100 y⁻⁸ < 1 - λ < 200 y⁻⁸` holds at `y`.
pub fn lambda_bracket_holds(y: f64) -> bool {
    let y8 = y.powi(8);
    let gap = 1.0 - lambda(y);
    100.0 / y8 < gap && gap < 200.0 / y8
}

/// Smallest integer `Y1 ≤ max_y1` such that the `λ` bracket holds on
/// `|y| ∈ [Y1, 10 Y1]` and `Tr ℒ - Tr(Υ₁ ℒ) ≥ 0` (up to rounding) at a grid
/// of boundary points with `|y| ∈ [Y1, 4 Y1]`, `x² + |z_2|² ≤ r1²`.
pub fn scan_y1(spec: &DomainSpec, r1: f64, max_y1: u32) -> Option<Y1Scan> {
    let mut bracket_failures = Vec::new();
    let mut positivity_failures = Vec::new();
    for cand in 1..=max_y1 {
        let y1 = cand as f64;
        let bracket = (0..=200).all(|i| {
            let y = y1 * 10f64.powf(i as f64 / 200.0);
            lambda_bracket_holds(y)
        });
        if !bracket {
            bracket_failures.push(cand);
            continue;
        }
        match y1_positivity(spec, r1, y1) {
            Some(min) => {
                return Some(Y1Scan {
                    y1,
                    bracket_failures,
                    positivity_failures,
                    min_positivity: min,
                })
            }
            None => positivity_failures.push(cand),
        }
    }
    None
}

fn y1_positivity(spec: &DomainSpec, r1: f64, y1: f64) -> Option<f64> {
    let m = 5usize;
    let axis: Vec<f64> = (0..m).map(|i| -r1 + 2.0 * r1 * i as f64 / (m - 1) as f64).collect();
    let mut min = f64::INFINITY;
    for &ys in &[1.0, -1.0, 1.5, -2.0, 4.0] {
        for &x in &axis {
            for &a in &axis {
                for &b in &axis {
                    if x * x + a * a + b * b > r1 * r1 {
                        continue;
                    }
                    let seed = [C64::new(x, ys * y1), C64::new(a, b), C64::new(0.0, 0.0)];
                    let z = spec.graph_lift(&seed).ok()?;
                    let pd = crate::domain::frame_at(spec, &z, Normalization::Raw).ok()?;
                    let yv = upsilon1_value(spec, &z).ok()?;
                    let x1 = to_frame_coords(&yv, &pd.tangent_frame());
                    let tr_l = pd.levi.trace();
                    let pair = crate::hermitian::trace_product(x1.as_cmat(), pd.levi.as_cmat()).re;
                    let val = tr_l - pair;
                    let tol = 1e-9 * (1.0 + pd.levi.frobenius());
                    if val < -tol {
                        return None;
                    }
                    min = min.min(val);
                }
            }
        }
    }
    Some(min)
}

/// Which branch of the extension to use away from the boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignCase {
    /// `q - Tr Υ > 0`: the extension decays to `0`.
    QAboveTrace,
    /// `q - Tr Υ < 0`: the extension decays to `I`.
    QBelowTrace,
}

/// `Υ̃(p) = ψ(p) Υ(π(p))`, plus `(1 - ψ(p)) I` in the [`SignCase::QBelowTrace`]
/// case, where `π` is the foot-point projection and `ψ = χ((2ε - |δ|)/ε)` is
/// `1` within distance `ε` of the boundary and `0` beyond `2ε`.
pub fn extend_upsilon(
    field: HermitianField,
    spec: Arc<DomainSpec>,
    eps: f64,
    sign_case: SignCase,
) -> HermitianField {
    assert!(eps > 0.0);
    let n = field.n();
    let label = format!("extend({}, eps={eps}, {sign_case:?})", field.label());
    HermitianField::new(
        label,
        n,
        move |p| {
            let (psi, inner) = match signed_distance(&spec, p, 2.0 * eps) {
                Ok(sd) => {
                    let psi = chi((2.0 * eps - sd.delta.abs()) / eps);
                    let inner = if psi > 0.0 {
                        field.eval(&sd.foot)?.scale(psi)
                    } else {
                        HermMat::zeros(n)
                    };
                    (psi, inner)
                }
                Err(DomainError::OutsideReach { .. }) => (0.0, HermMat::zeros(n)),
                Err(e) => return Err(e.into()),
            };
            Ok(match sign_case {
                SignCase::QAboveTrace => inner,
                SignCase::QBelowTrace => inner.add(&HermMat::identity(n).scale(1.0 - psi)),
            })
        },
        |_| true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn chi_symmetry_and_limits() {
        assert_eq!(chi(-1.0), 0.0);
        assert_eq!(chi(0.0), 0.0);
        assert_eq!(chi(1.0), 1.0);
        assert_eq!(chi(2.0), 1.0);
        for i in 1..20 {
            let t = i as f64 / 20.0;
            assert!((1.0 - chi(t) - chi(1.0 - t)).abs() < 1e-15);
            assert!(chi(t) >= chi(t - 0.05));
        }
    }

    #[test]
    fn quadric_projection_properties() {
        let f = upsilon_quadric(3, 1);
        let z = [c(1.0, 0.0), c(0.0, 0.0), c(2f64.sqrt(), 0.0)];
        let y = f.eval(&z).unwrap();
        assert!((y.trace() - 1.0).abs() < 1e-14);
        let y2 = y.as_cmat().mul(y.as_cmat());
        assert!(y2.sub(y.as_cmat()).max_abs() < 1e-14);
        let grad = [c(1.0, 0.0), c(0.0, 0.0), c(-(2f64.sqrt()), 0.0)];
        assert!(tangency_residual(&y, &grad) < 1e-15);
        assert!(matches!(
            f.eval(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
            Err(UpsilonError::OutsideRegion { .. })
        ));
    }

    #[test]
    fn lambda_bracket_threshold() {
        assert!(!lambda_bracket_holds(14.0));
        assert!(lambda_bracket_holds(15.0));
        assert!(lambda(15.0) > 0.0 && lambda(15.0) < 1.0);
    }

    #[test]
    fn upsilon2_at_origin() {
        let spec = builtins::sextic_graph();
        let x = upsilon2_frame(&spec, &[c(0.0, 0.0); 3]);
        assert!(x.sub(&HermMat::from_real_diag(&[0.0, 1.0])).frobenius() < 1e-15);
    }

    #[test]
    fn closed_form_inverse_matches_numeric() {
        for (r1, r2) in [(c(0.3, -1.0), c(2.0, 0.5)), (c(-40.0, 7.0), c(0.01, 0.0))] {
            let u = u_block(r1, r2);
            let num = u.inverse().unwrap();
            let closed = u_block_inverse(r1, r2);
            assert!(num.sub(&closed).max_abs() < 1e-10 * closed.max_abs());
        }
    }

    #[test]
    fn patched_parameter_order() {
        let spec = Arc::new(builtins::sextic_graph());
        let bad = PatchParams {
            r0: 3.0,
            r1: 6.0,
            r2: 7.0,
            y1: 15.0,
            y2: 30.0,
        };
        assert!(upsilon_patched(spec.clone(), bad).is_err());
        let far = [c(12.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let f = upsilon_patched(spec, PatchParams::default()).unwrap();
        assert_eq!(f.eval(&far).unwrap(), HermMat::zeros(3));
    }

    #[test]
    fn upsilon1_rejects_small_y() {
        let spec = Arc::new(builtins::sextic_graph());
        let f = upsilon1(spec.clone(), 0.5);
        assert!(matches!(
            f.eval(&[c(0.0, 0.6), c(0.0, 0.0), c(0.0, 0.0)]),
            Err(UpsilonError::LambdaOutOfRange { .. })
        ));
    }
}

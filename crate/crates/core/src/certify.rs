//! Weak `Z(q)` certification over boundary samples, growth evidence for
//! uniform `C^m` bounds, and homogenization identities.
//!
//! Every verdict here is about the sampled points only. Reports carry an
//! explicit `evidence` label to say so.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{frame_at, BoundaryPointData, DomainError, DomainSpec, Normalization, Window};
use crate::hermitian::{trace_product, HermError};
use crate::upsilon::{tangency_residual, to_frame_coords, HermitianField, UpsilonError};
use crate::wirtinger::real::RealPoly;
use crate::wirtinger::{PolyError, PolyRC, PolySet};
use crate::C64;

/// Label attached to every report produced from finite samples.
pub const EVIDENCE_LABEL: &str = "numerical evidence on sampled points, not a proof";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertError {
    #[error("q = {q} is outside [1, {max}]")]
    InvalidQ { q: usize, max: usize },
    #[error("sample is empty")]
    EmptySample,
    #[error("dimension mismatch: domain has n = {domain}, {what} has n = {other}")]
    DimensionMismatch {
        what: &'static str,
        domain: usize,
        other: usize,
    },
    #[error("sample point {index} is not on K0 = {{x = 0, z2 = 0}}")]
    OffK0 { index: usize },
    #[error("sample point {index}: {source}")]
    InvalidPoint { index: usize, source: UpsilonError },
    #[error("input is not homogeneous (degrees {degrees:?})")]
    NonHomogeneous { degrees: Vec<u32> },
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Upsilon(#[from] UpsilonError),
    #[error(transparent)]
    Herm(#[from] HermError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Thresholds used by [`check_weak_zq`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Allowed negativity for the closed conditions (i) and (ii).
    pub tol: f64,
    /// Required floor for `inf |q - Tr Υ|`.
    pub theta_min: f64,
    /// Allowed `|Υ ρ'| / |ρ'|`.
    pub tangency: f64,
    /// When set, the condition (ii) allowance is `tol · (1 + ‖ℒ‖_F)`,
    /// so that rounding in large Levi matrices is not read as a violation.
    pub relative_levi: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol: 1e-8,
            theta_min: 1e-3,
            tangency: 1e-9,
            relative_levi: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Per-point values of the weak `Z(q)` conditions.
#[derive(Clone, Debug, Serialize)]
pub struct PointRecord {
    /// Interleaved real coordinates.
    pub point: Vec<f64>,
    pub mu: Vec<f64>,
    pub trace_upsilon: f64,
    /// `min(λ_min(Υ), 1 - λ_max(Υ))`.
    pub c_i: f64,
    /// `μ_1 + ... + μ_q - Tr(X ℒ)` with `X` the frame-coordinate `Υ`.
    pub c_ii: f64,
    /// `μ_1 + ... + μ_q - Tr(Υ H)` with the ambient Hessian.
    pub c_ii_ambient: f64,
    /// `|q - Tr Υ|`.
    pub c_iii: f64,
    pub tangency: f64,
    /// Allowance used for `c_ii`.
    pub c_ii_allowance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Aggregate {
    pub points: usize,
    pub min_c_i: f64,
    pub min_c_ii: f64,
    pub inf_c_iii: f64,
    pub max_tangency: f64,
    /// Largest `|c_ii - c_ii_ambient| / (1 + ‖ℒ‖_F)`.
    pub max_route_gap: f64,
    /// Indices of points violating (i), (ii) or tangency.
    pub failing_points: Vec<usize>,
    /// Conditions that failed, e.g. `["iii"]`.
    pub failed_conditions: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertReport {
    pub domain: String,
    pub domain_hash: String,
    pub field: String,
    pub q: usize,
    pub normalization: Normalization,
    pub tolerances: Tolerances,
    pub verdict: Verdict,
    pub evidence: &'static str,
    pub aggregate: Aggregate,
    pub per_point: Vec<PointRecord>,
}

fn interleave(z: &[C64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Evaluates conditions (i)-(iii) of the weak `Z(q)` test at every point of
/// `sample`.
pub fn check_weak_zq(
    spec: &DomainSpec,
    field: &HermitianField,
    q: usize,
    sample: &[BoundaryPointData],
    tolerances: &Tolerances,
) -> Result<CertReport, CertError> {
    let n = spec.n();
    if q < 1 || q > n - 1 {
        return Err(CertError::InvalidQ { q, max: n - 1 });
    }
    if sample.is_empty() {
        return Err(CertError::EmptySample);
    }
    if field.n() != n {
        return Err(CertError::DimensionMismatch {
            what: "field",
            domain: n,
            other: field.n(),
        });
    }
    let normalization = sample[0].normalization;
    let records: Vec<PointRecord> = sample
        .par_iter()
        .enumerate()
        .map(|(index, pd)| point_record(field, q, pd, tolerances).map_err(|e| lift(index, e)))
        .collect::<Result<_, _>>()?;

    let mut agg = Aggregate {
        points: records.len(),
        min_c_i: f64::INFINITY,
        min_c_ii: f64::INFINITY,
        inf_c_iii: f64::INFINITY,
        max_tangency: 0.0,
        max_route_gap: 0.0,
        failing_points: Vec::new(),
        failed_conditions: Vec::new(),
    };
    let (mut fail_i, mut fail_ii, mut fail_t) = (false, false, false);
    for (idx, (r, pd)) in records.iter().zip(sample).enumerate() {
        agg.min_c_i = agg.min_c_i.min(r.c_i);
        agg.min_c_ii = agg.min_c_ii.min(r.c_ii);
        agg.inf_c_iii = agg.inf_c_iii.min(r.c_iii);
        agg.max_tangency = agg.max_tangency.max(r.tangency);
        let gap = (r.c_ii - r.c_ii_ambient).abs() / (1.0 + pd.levi.frobenius());
        agg.max_route_gap = agg.max_route_gap.max(gap);
        let bad_i = r.c_i < -tolerances.tol;
        let bad_ii = r.c_ii < -r.c_ii_allowance;
        let bad_t = r.tangency > tolerances.tangency;
        if bad_i || bad_ii || bad_t {
            agg.failing_points.push(idx);
        }
        fail_i |= bad_i;
        fail_ii |= bad_ii;
        fail_t |= bad_t;
    }
    if fail_i {
        agg.failed_conditions.push("i".into());
    }
    if fail_ii {
        agg.failed_conditions.push("ii".into());
    }
    if agg.inf_c_iii < tolerances.theta_min {
        agg.failed_conditions.push("iii".into());
    }
    if fail_t {
        agg.failed_conditions.push("tangency".into());
    }
    let verdict = if agg.failed_conditions.is_empty() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(CertReport {
        domain: spec.name.clone(),
        domain_hash: spec.hash(),
        field: field.label().to_string(),
        q,
        normalization,
        tolerances: *tolerances,
        verdict,
        evidence: EVIDENCE_LABEL,
        aggregate: agg,
        per_point: records,
    })
}

fn lift(index: usize, e: CertError) -> CertError {
    match e {
        CertError::Upsilon(source) => CertError::InvalidPoint { index, source },
        other => other,
    }
}

fn point_record(
    field: &HermitianField,
    q: usize,
    pd: &BoundaryPointData,
    tolerances: &Tolerances,
) -> Result<PointRecord, CertError> {
    let y = field.eval(&pd.z)?;
    let (_, c_i) = y.is_range_01(tolerances.tol)?;
    let f = pd.tangent_frame();
    let x = to_frame_coords(&y, &f);
    let mu_sum: f64 = pd.mu[..q].iter().sum();
    let c_ii = mu_sum - trace_product(x.as_cmat(), pd.levi.as_cmat()).re;
    let h = pd.scaled_hessian();
    let c_ii_ambient = mu_sum - trace_product(y.as_cmat(), h.as_cmat()).re;
    let c_iii = (q as f64 - y.trace()).abs();
    let allowance = if tolerances.relative_levi {
        tolerances.tol * (1.0 + pd.levi.frobenius())
    } else {
        tolerances.tol
    };
    Ok(PointRecord {
        point: interleave(&pd.z),
        mu: pd.mu.clone(),
        trace_upsilon: y.trace(),
        c_i,
        c_ii,
        c_ii_ambient,
        c_iii,
        tangency: tangency_residual(&y, &pd.grad),
        c_ii_allowance: allowance,
    })
}

/// Per-point values on `K_0`.
#[derive(Clone, Debug, Serialize)]
pub struct K0Record {
    pub y: f64,
    /// `|Υ^{2̄1}|` in frame coordinates.
    pub offdiag: f64,
    /// `|(-3y²/(1+4|ρ1|²))(1 - Υ^{1̄1}) + 2(1 - Υ^{2̄2})|`.
    pub balance: f64,
    /// Eigenvalues of the frame-coordinate `Υ`, ascending.
    pub eigenvalues: Vec<f64>,
    /// `min_i |λ_i - 1|`.
    pub distance_to_one: f64,
    /// Frobenius norm of the Levi matrix.
    pub levi_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct K0Report {
    pub field: String,
    pub evidence: &'static str,
    pub max_offdiag: f64,
    pub max_balance: f64,
    pub max_levi_norm: f64,
    /// Smallest `distance_to_one` among points with `y = 0` (points of `K`).
    pub k_min_distance_to_one: Option<f64>,
    /// Smallest `distance_to_one` among points with `y ≠ 0`.
    pub k0_min_distance_to_one: Option<f64>,
    pub records: Vec<K0Record>,
}

impl K0Report {
    /// Number of eigenvalues within `tol` of `1` at each point with `y = 0`.
    pub fn k_counts(&self, tol: f64) -> Vec<usize> {
        self.records
            .iter()
            .filter(|r| r.y == 0.0)
            .map(|r| r.eigenvalues.iter().filter(|l| (*l - 1.0).abs() <= tol).count())
            .collect()
    }
}

/// Evaluates the two identities that any admissible `Υ` must satisfy on
/// `K_0 = {x = 0, z_2 = 0} ∩ bΩ` of the sextic graph, and tracks how close
/// the spectrum gets to `1`.
pub fn check_k0_negative_result(
    spec: &DomainSpec,
    field: &HermitianField,
    sample: &[Vec<C64>],
) -> Result<K0Report, CertError> {
    if spec.n() != 3 || field.n() != 3 {
        return Err(CertError::DimensionMismatch {
            what: "K0 check",
            domain: spec.n(),
            other: field.n(),
        });
    }
    if sample.is_empty() {
        return Err(CertError::EmptySample);
    }
    let mut records = Vec::with_capacity(sample.len());
    for (index, z) in sample.iter().enumerate() {
        if z[0].re.abs() > 1e-12 || z[1].norm() > 1e-12 {
            return Err(CertError::OffK0 { index });
        }
        let pd = frame_at(spec, z, Normalization::Raw)?;
        let y_amb = field.eval(z).map_err(|source| CertError::InvalidPoint { index, source })?;
        let x = to_frame_coords(&y_amb, &pd.tangent_frame());
        let y = z[0].im;
        let r1 = pd.grad[0];
        let balance = (-3.0 * y * y / (1.0 + 4.0 * r1.norm_sqr())) * (1.0 - x.get(0, 0).re)
            + 2.0 * (1.0 - x.get(1, 1).re);
        let eigenvalues = x.eigvalsh()?;
        let distance_to_one = eigenvalues.iter().map(|l| (l - 1.0).abs()).fold(f64::INFINITY, f64::min);
        records.push(K0Record {
            y,
            offdiag: x.get(1, 0).norm(),
            balance: balance.abs(),
            eigenvalues,
            distance_to_one,
            levi_norm: pd.levi.frobenius(),
        });
    }
    let fold_max = |f: fn(&K0Record) -> f64| records.iter().map(f).fold(0.0, f64::max);
    let min_dist = |pred: fn(&K0Record) -> bool| {
        records
            .iter()
            .filter(|r| pred(r))
            .map(|r| r.distance_to_one)
            .reduce(f64::min)
    };
    Ok(K0Report {
        field: field.label().to_string(),
        evidence: EVIDENCE_LABEL,
        max_offdiag: fold_max(|r| r.offdiag),
        max_balance: fold_max(|r| r.balance),
        max_levi_norm: fold_max(|r| r.levi_norm),
        k_min_distance_to_one: min_dist(|r| r.y == 0.0),
        k0_min_distance_to_one: min_dist(|r| r.y != 0.0),
        records,
    })
}

/// All `k`-th order real partial derivatives of `ρ`, one per multiset of
/// interleaved real axes, with the number of orderings of each multiset.
fn kth_derivatives(rho: &PolyRC, k: usize) -> Result<Vec<(PolyRC, f64)>, PolyError> {
    let m = 2 * rho.n();
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<usize>, PolyRC)> = vec![(Vec::new(), rho.clone())];
    while let Some((axes, p)) = stack.pop() {
        if axes.len() == k {
            let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
            for a in &axes {
                *counts.entry(*a).or_insert(0) += 1;
            }
            let mut mult = factorial(k as u32);
            for c in counts.values() {
                mult /= factorial(*c);
            }
            if !p.is_zero() {
                out.push((p, mult));
            }
            continue;
        }
        let start = axes.last().copied().unwrap_or(0);
        for a in start..m {
            let mut next = axes.clone();
            next.push(a);
            stack.push((next, p.d_real(a)?));
        }
    }
    Ok(out)
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Sampling controls for [`uniform_cm_evidence`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthConfig {
    /// Derivative orders `k ≥ 1`.
    pub orders: Vec<usize>,
    /// Increasing window radii.
    pub radii: Vec<f64>,
    /// Grid nodes per real axis (odd keeps the coordinate planes).
    pub per_axis: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowStats {
    pub radius: f64,
    /// Points with radial coordinate at most `radius`.
    pub points: usize,
    /// `max |∇^kρ| / |∇ρ|` per order.
    pub max_ratio: Vec<f64>,
    /// `max |∇^kρ| / |∇ρ| · (r² + 1)^{k/2 - 1}` per order.
    pub max_weighted: Vec<f64>,
    /// Over the shell `(radius/2, radius]` of this window's own grid.
    pub shell_min_grad: f64,
    pub shell_max_ratio: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthReport {
    pub domain: String,
    pub evidence: &'static str,
    pub orders: Vec<usize>,
    pub windows: Vec<WindowStats>,
    /// Slope of `log(shell min |∇ρ|)` against `log(r²)` over the last two
    /// shells.
    pub gradient_exponent_s: Option<f64>,
    /// Slope of `log(shell max ratio)` against `log r` over the last two
    /// shells, per order.
    pub ratio_exponent_r: Vec<Option<f64>>,
    /// Relative change of `max_weighted` between the last two windows, per
    /// order (`0` when both vanish).
    pub last_window_variation: Vec<f64>,
}

impl GrowthReport {
    /// Whether `max_weighted` varies less than `rel` between the last two
    /// windows, for every order.
    pub fn bounded(&self, rel: f64) -> bool {
        self.last_window_variation.iter().all(|&v| v < rel)
    }
}

/// The radial coordinate used to place points in windows: the Euclidean
/// norm over all coordinates except the graph variable, if any.
pub fn radial(spec: &DomainSpec, z: &[C64]) -> f64 {
    z.iter()
        .enumerate()
        .filter(|(j, _)| Some(*j) != spec.graph_var())
        .map(|(_, c)| c.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Samples `|∇^kρ| / |∇ρ|` on the boundary over nested windows of radius
/// `R_1 < R_2 < ...`. Each window gets its own grid scaled to its radius, and
/// window `i` pools the points of all grids that fall inside it.
pub fn uniform_cm_evidence(spec: &DomainSpec, config: &GrowthConfig) -> Result<GrowthReport, CertError> {
    if config.orders.iter().any(|&k| k == 0) {
        return Err(CertError::Invalid("derivative orders must be at least 1".into()));
    }
    if config.radii.is_empty() || config.radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CertError::Invalid("radii must be increasing".into()));
    }
    let n = spec.n();
    let mut polys: Vec<PolyRC> = Vec::new();
    let mut groups: Vec<Vec<(usize, f64)>> = Vec::new();
    for &k in &config.orders {
        let mut g = Vec::new();
        for (p, mult) in kth_derivatives(spec.rho(), k)? {
            g.push((polys.len(), mult));
            polys.push(p);
        }
        groups.push(g);
    }
    let batch = if polys.is_empty() { None } else { Some(PolySet::new(&polys)) };

    // Point values: (radial, |∇ρ|, ratios per order).
    type Row = (f64, f64, Vec<f64>);
    let mut per_grid: Vec<Vec<Row>> = Vec::new();
    for &radius in &config.radii {
        let mut counts = vec![config.per_axis; 2 * n];
        if let Some(g) = spec.graph_var() {
            counts[2 * g] = 1;
            counts[2 * g + 1] = 1;
        }
        let seeds = Window::cube(n, radius).grid(&counts)?;
        let rows: Vec<Row> = seeds
            .par_iter()
            .filter_map(|seed| {
                let z = match spec.graph_var() {
                    Some(_) => spec.graph_lift(seed).ok()?,
                    None => spec.newton_project(seed).ok()?,
                };
                let jet = spec.jet(&z).ok()?;
                let gn = jet.grad_norm();
                if gn < crate::domain::MIN_GRADIENT {
                    return None;
                }
                let vals = batch.as_ref().map(|b| b.eval(&z)).unwrap_or_default();
                let ratios = groups
                    .iter()
                    .map(|g| {
                        let s: f64 = g.iter().map(|&(i, mult)| mult * vals[i].norm_sqr()).sum();
                        s.sqrt() / gn
                    })
                    .collect();
                Some((radial(spec, &z), gn, ratios))
            })
            .collect();
        per_grid.push(rows);
    }

    let no = config.orders.len();
    let mut windows = Vec::new();
    for (wi, &radius) in config.radii.iter().enumerate() {
        let mut max_ratio = vec![0.0; no];
        let mut max_weighted = vec![0.0; no];
        let mut count = 0;
        for rows in &per_grid {
            for (r, _, ratios) in rows.iter().filter(|row| row.0 <= radius) {
                count += 1;
                for (o, &k) in config.orders.iter().enumerate() {
                    let w = (r * r + 1.0).powf(k as f64 / 2.0 - 1.0);
                    max_ratio[o] = f64::max(max_ratio[o], ratios[o]);
                    max_weighted[o] = f64::max(max_weighted[o], ratios[o] * w);
                }
            }
        }
        let mut shell_min_grad = f64::INFINITY;
        let mut shell_max_ratio = vec![0.0; no];
        for (r, gn, ratios) in per_grid[wi].iter().filter(|row| row.0 > radius / 2.0 && row.0 <= radius) {
            let _ = r;
            shell_min_grad = shell_min_grad.min(*gn);
            for o in 0..no {
                shell_max_ratio[o] = f64::max(shell_max_ratio[o], ratios[o]);
            }
        }
        windows.push(WindowStats {
            radius,
            points: count,
            max_ratio,
            max_weighted,
            shell_min_grad,
            shell_max_ratio,
        });
    }

    let last2 = |f: &dyn Fn(&WindowStats) -> f64, log_base: f64| -> Option<f64> {
        let l = windows.len();
        if l < 2 {
            return None;
        }
        let (a, b) = (&windows[l - 2], &windows[l - 1]);
        let (va, vb) = (f(a), f(b));
        if !(va > 0.0 && vb > 0.0 && va.is_finite() && vb.is_finite()) {
            return None;
        }
        Some((vb / va).ln() / ((b.radius / a.radius).ln() * log_base))
    };
    let gradient_exponent_s = last2(&|w| w.shell_min_grad, 2.0);
    let ratio_exponent_r = (0..no).map(|o| last2(&|w| w.shell_max_ratio[o], 1.0)).collect();
    let last_window_variation = (0..no)
        .map(|o| {
            let l = windows.len();
            if l < 2 {
                return f64::INFINITY;
            }
            let (a, b) = (windows[l - 2].max_weighted[o], windows[l - 1].max_weighted[o]);
            if a == 0.0 && b == 0.0 {
                0.0
            } else {
                (b - a).abs() / a.abs().max(b.abs())
            }
        })
        .collect();
    Ok(GrowthReport {
        domain: spec.name.clone(),
        evidence: EVIDENCE_LABEL,
        orders: config.orders.clone(),
        windows,
        gradient_exponent_s,
        ratio_exponent_r,
        last_window_variation,
    })
}

/// Output of [`dehomogenize_and_check`].
#[derive(Clone, Debug, Serialize)]
pub struct HomogReport {
    pub degree: u32,
    /// Largest coefficient of `x·∇ρ̃ - d ρ̃` (exactly zero for homogeneous input).
    pub euler_residual: f64,
    /// Largest coefficient of `x·∇ρ(x) + ρ̃_{m+1}(x, 1) - d ρ(x)`.
    pub dehomogenized_residual: f64,
    /// Largest `|x·∇ρ(x) + ρ̃_{m+1}(x, 1)|` over sampled points of `{ρ = 0}`.
    pub boundary_identity_max: f64,
    /// Smallest `|∇ρ̃|` seen on the unit sphere of `{ρ̃ = 0}`.
    pub c0: Option<f64>,
    /// Smallest `|∇ρ(x)|² / (C₀² (|x|²+1)^{d-2})` over sampled boundary points.
    pub degree_bound_min_ratio: Option<f64>,
    /// Smallest `|∇ρ(x)|² (|x|²+1)² / C₀²` over sampled boundary points.
    pub weak_bound_min_ratio: Option<f64>,
    pub boundary_points: usize,
    pub evidence: &'static str,
}

/// Result of dehomogenizing `ρ̃` in its last variable.
#[derive(Clone, Debug)]
pub struct Dehomogenized {
    pub rho: RealPoly,
    pub report: HomogReport,
}

/// Sets the last variable of a homogeneous `ρ̃` to `1` and checks the
/// resulting identities. `samples` boundary points of `{ρ = 0}` are drawn
/// from a seeded generator to test the gradient lower bound; `samples = 0`
/// skips the numerical part.
pub fn dehomogenize_and_check(
    rho_tilde: &RealPoly,
    samples: usize,
    seed: u64,
) -> Result<Dehomogenized, CertError> {
    let m1 = rho_tilde.nvars();
    if m1 < 2 {
        return Err(CertError::Invalid("need at least two variables".into()));
    }
    let d = rho_tilde.degree();
    if !rho_tilde.is_homogeneous(d) {
        let mut degrees: Vec<u32> = rho_tilde
            .terms()
            .map(|(e, _)| e.iter().map(|&a| a as u32).sum())
            .collect();
        degrees.sort_unstable();
        degrees.dedup();
        return Err(CertError::NonHomogeneous { degrees });
    }
    let grad_t = rho_tilde.gradient();
    let mut euler = rho_tilde.scale(-(d as f64));
    for (k, gk) in grad_t.iter().enumerate() {
        euler = euler.add(&RealPoly::var(m1, k).mul(gk)?);
    }

    let rho = rho_tilde.fix_last(1.0);
    let m = m1 - 1;
    let grad = rho.gradient();
    let last_deriv = grad_t[m].fix_last(1.0);
    let mut x_dot_grad = RealPoly::zero(m);
    for (k, gk) in grad.iter().enumerate() {
        x_dot_grad = x_dot_grad.add(&RealPoly::var(m, k).mul(gk)?);
    }
    let identity = x_dot_grad.add(&last_deriv).sub(&rho.scale(d as f64));

    let mut report = HomogReport {
        degree: d,
        euler_residual: euler.max_coeff(),
        dehomogenized_residual: identity.max_coeff(),
        boundary_identity_max: 0.0,
        c0: None,
        degree_bound_min_ratio: None,
        weak_bound_min_ratio: None,
        boundary_points: 0,
        evidence: EVIDENCE_LABEL,
    };
    if samples == 0 {
        return Ok(Dehomogenized { rho, report });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grad_norm_t = |p: &[f64]| grad_t.iter().map(|g| g.eval(p).powi(2)).sum::<f64>().sqrt();
    let mut c0 = f64::INFINITY;
    // Sphere points of {ρ̃ = 0}.
    for _ in 0..samples {
        let u: Vec<f64> = (0..m1).map(|_| StandardNormal.sample(&mut rng)).collect();
        if let Some(p) = real_newton(rho_tilde, &grad_t, &u) {
            let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r > 0.0 {
                let s: Vec<f64> = p.iter().map(|v| v / r).collect();
                c0 = c0.min(grad_norm_t(&s));
            }
        }
    }
    // Boundary points of {ρ = 0}, spread over several scales.
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for i in 0..samples {
        let scale = 10f64.powf(3.0 * (i % 4) as f64 / 3.0);
        let x: Vec<f64> = (0..m)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                scale * v
            })
            .collect();
        if let Some(p) = real_newton(&rho, &grad, &x) {
            let mut full = p.clone();
            full.push(1.0);
            let r = full.iter().map(|v| v * v).sum::<f64>().sqrt();
            let s: Vec<f64> = full.iter().map(|v| v / r).collect();
            c0 = c0.min(grad_norm_t(&s));
            pts.push(p);
        }
    }
    if !c0.is_finite() || pts.is_empty() {
        return Ok(Dehomogenized { rho, report });
    }
    let mut deg_min = f64::INFINITY;
    let mut weak_min = f64::INFINITY;
    let mut ident_max: f64 = 0.0;
    for x in &pts {
        let g2: f64 = grad.iter().map(|g| g.eval(x).powi(2)).sum();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let scale = 1.0 + r2.sqrt() * g2.sqrt();
        ident_max = ident_max.max((x_dot_grad.eval(x) + last_deriv.eval(x)).abs() / scale);
        deg_min = deg_min.min(g2 / (c0 * c0 * (r2 + 1.0).powi(d as i32 - 2)));
        weak_min = weak_min.min(g2 * (r2 + 1.0).powi(2) / (c0 * c0));
    }
    report.boundary_identity_max = ident_max;
    report.c0 = Some(c0);
    report.degree_bound_min_ratio = Some(deg_min);
    report.weak_bound_min_ratio = Some(weak_min);
    report.boundary_points = pts.len();
    Ok(Dehomogenized { rho, report })
}

/// Newton projection onto `{p = 0}` in real coordinates.
pub fn real_newton(p: &RealPoly, grad: &[RealPoly], x0: &[f64]) -> Option<Vec<f64>> {
    let mut x = x0.to_vec();
    for _ in 0..=crate::domain::NEWTON_MAX_ITER {
        let v = p.eval(&x);
        let g: Vec<f64> = grad.iter().map(|gk| gk.eval(&x)).collect();
        let g2: f64 = g.iter().map(|a| a * a).sum();
        let scale = 1.0 + x.iter().map(|a| a * a).sum::<f64>();
        if v.abs() <= 1e-12 * scale {
            return Some(x);
        }
        if g2.sqrt() < crate::domain::MIN_GRADIENT {
            return None;
        }
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= v * gi / g2;
        }
    }
    None
}

/// A random homogeneous polynomial of degree `d` in `m` variables with
/// standard normal coefficients on every monomial.
pub fn random_homogeneous(m: usize, d: u32, seed: u64) -> RealPoly {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    let mut e = vec![0u8; m];
    fill_exponents(&mut e, 0, d, &mut |exps| {
        let c: f64 = StandardNormal.sample(&mut rng);
        terms.push((exps.to_vec(), c));
    });
    RealPoly::from_terms(m, terms)
}

fn fill_exponents(e: &mut [u8], k: usize, left: u32, f: &mut dyn FnMut(&[u8])) {
    if k == e.len() - 1 {
        e[k] = left as u8;
        f(e);
        return;
    }
    for a in 0..=left {
        e[k] = a as u8;
        fill_exponents(e, k + 1, left - a, f);
    }
    e[k] = 0;
}

//! One function per check kind. Each returns a verdict, a JSON body and
//! optional CSV artifacts.

use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use weakzq::builtins;
use weakzq::certify::{
    check_k0_negative_result, check_weak_zq, dehomogenize_and_check, random_homogeneous, uniform_cm_evidence,
    GrowthConfig as CoreGrowth, Verdict,
};
use weakzq::domain::{boundary_sample, write_points_csv, BoundaryPointData, DomainSpec, Window};
use weakzq::forms::{
    basic_estimate_from, heisenberg_center, mkh_report, model_weight_checks, scaling_demo, write_mkh_csv,
    weighted_norms_many, write_scaling_csv, QuadSpec, TestForm, WeightKind, WeightSpec,
};
use weakzq::upsilon::{
    extend_upsilon, upsilon1, upsilon2, upsilon_patched, upsilon_quadric, upsilon_zero, HermitianField,
    PatchParams,
};
use weakzq::wirtinger::real::parse_real_vars;
use weakzq::wirtinger::PolyRC;

use crate::config::{CheckKind, DomainConfig, RunConfig, UpsilonConfig};

pub struct Outcome {
    pub pass: bool,
    pub body: Value,
    /// `(suffix, contents)` pairs written next to the JSON report.
    pub csv: Vec<(String, Vec<u8>)>,
}

pub fn build_domain(cfg: &DomainConfig) -> Result<DomainSpec> {
    match cfg {
        DomainConfig::Builtin(name) => Ok(builtins::resolve(name)?),
        DomainConfig::Table(t) => match (&t.builtin, &t.poly) {
            (Some(name), None) => Ok(builtins::resolve(name)?),
            (None, Some(text)) => {
                let n = t.n.ok_or_else(|| anyhow!("domain.n is required with domain.poly"))?;
                if n == 0 {
                    bail!("domain.n must be at least 1");
                }
                let rho = PolyRC::parse_real(text, n).context("domain.poly")?;
                let name = t.name.clone().unwrap_or_else(|| "custom".to_string());
                Ok(match t.graph_var {
                    Some(g) if g >= 1 && g <= n => DomainSpec::graph(name, rho, g - 1)?,
                    Some(g) => bail!("domain.graph_var = {g} is outside [1, {n}]"),
                    None => DomainSpec::new(name, rho)?,
                })
            }
            _ => bail!("domain needs exactly one of `builtin` or `poly`"),
        },
    }
}

fn quadric_p(spec: &DomainSpec) -> Option<usize> {
    let inner = spec.name.strip_prefix("quadric(")?.strip_suffix(')')?;
    inner.split(',').nth(1)?.trim().parse().ok()
}

pub fn build_field(cfg: &UpsilonConfig, spec: &Arc<DomainSpec>) -> Result<HermitianField> {
    let n = spec.n();
    let needs_c3 = |what: &str| -> Result<()> {
        if n != 3 {
            bail!("upsilon kind `{what}` needs a domain in C^3, got n = {n}");
        }
        Ok(())
    };
    Ok(match cfg {
        UpsilonConfig::Zero => upsilon_zero(n),
        UpsilonConfig::Quadric { p } => {
            let p = p
                .or_else(|| quadric_p(spec))
                .ok_or_else(|| anyhow!("upsilon.p is required unless the domain is a builtin quadric"))?;
            if p > n {
                bail!("upsilon.p = {p} exceeds n = {n}");
            }
            upsilon_quadric(n, p)
        }
        UpsilonConfig::Patched { r0, r1, r2, y1, y2 } => {
            needs_c3("patched")?;
            let params = PatchParams {
                r0: *r0,
                r1: *r1,
                r2: r2.unwrap_or(*r1),
                y1: *y1,
                y2: *y2,
            };
            upsilon_patched(spec.clone(), params)?
        }
        UpsilonConfig::Upsilon1 { y1 } => {
            needs_c3("upsilon1")?;
            upsilon1(spec.clone(), *y1)
        }
        UpsilonConfig::Upsilon2 => {
            needs_c3("upsilon2")?;
            upsilon2(spec.clone())
        }
        UpsilonConfig::Extend { eps, sign, base } => {
            if !(*eps > 0.0) {
                bail!("upsilon.eps must be positive");
            }
            extend_upsilon(build_field(base, spec)?, spec.clone(), *eps, *sign)
        }
    })
}

fn window(cfg: &RunConfig, n: usize) -> Result<(Window, Vec<usize>)> {
    let s = &cfg.sampling;
    let w = match (&s.lo, &s.hi) {
        (Some(lo), Some(hi)) => Window::new(lo.clone(), hi.clone())?,
        (None, None) => Window::cube(n, s.radius.unwrap_or(2.0)),
        _ => bail!("sampling needs both `lo` and `hi`"),
    };
    let counts = match s.counts.len() {
        0 => vec![5; 2 * n],
        1 => vec![s.counts[0]; 2 * n],
        k if k == 2 * n => s.counts.clone(),
        k => bail!("sampling.counts has {k} entries, expected 1 or {}", 2 * n),
    };
    Ok((w, counts))
}

fn sample(cfg: &RunConfig, spec: &DomainSpec) -> Result<Vec<BoundaryPointData>> {
    let (w, counts) = window(cfg, spec.n())?;
    Ok(boundary_sample(spec, &w, &counts, cfg.normalization)?.points)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<(), csv::Error>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

pub fn validate(cfg: &RunConfig, spec: &DomainSpec) -> Result<()> {
    let n = spec.n();
    if cfg.q < 1 || cfg.q + 1 > n {
        bail!("q = {} is outside [1, {}]", cfg.q, n.saturating_sub(1));
    }
    let t = &cfg.tolerances;
    if !(t.tol >= 0.0 && t.theta_min >= 0.0 && t.tangency >= 0.0) {
        bail!("tolerances must be nonnegative");
    }
    Ok(())
}

pub fn run_check(kind: CheckKind, cfg: &RunConfig, spec: &Arc<DomainSpec>) -> Result<Outcome> {
    match kind {
        CheckKind::Certify => certify(cfg, spec),
        CheckKind::LeviScan => levi_scan(cfg, spec),
        CheckKind::MkhCheck => mkh(cfg),
        CheckKind::ScalingDemo => scaling(cfg, spec),
        CheckKind::HomogCheck => homog(cfg),
        CheckKind::K0Check => k0(cfg, spec),
        CheckKind::Growth => growth(cfg, spec),
        CheckKind::ModelWeight => model_weight(cfg),
    }
}

fn certify(cfg: &RunConfig, spec: &Arc<DomainSpec>) -> Result<Outcome> {
    let field = build_field(&cfg.upsilon, spec)?;
    let points = sample(cfg, spec)?;
    let report = check_weak_zq(spec, &field, cfg.q, &points, &cfg.tolerances)?;
    let mut header: Vec<String> = (1..=spec.n()).flat_map(|j| [format!("x{j}"), format!("y{j}")]).collect();
    header.extend(["c_i", "c_ii", "c_ii_ambient", "c_iii", "tangency", "trace_upsilon"].map(String::from));
    let bytes = csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(&header)?;
        for r in &report.per_point {
            let mut row: Vec<String> = r.point.iter().map(|v| v.to_string()).collect();
            row.extend([r.c_i, r.c_ii, r.c_ii_ambient, r.c_iii, r.tangency, r.trace_upsilon].iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    })?;
    let mut body = to_value(&report);
    body.as_object_mut().expect("object").remove("per_point");
    Ok(Outcome {
        pass: report.verdict == Verdict::Pass,
        body,
        csv: vec![("points".into(), bytes)],
    })
}

fn levi_scan(cfg: &RunConfig, spec: &Arc<DomainSpec>) -> Result<Outcome> {
    let (w, counts) = window(cfg, spec.n())?;
    let s = boundary_sample(spec, &w, &counts, cfg.normalization)?;
    let mu_min = s.points.iter().map(|p| p.mu[0]).fold(f64::INFINITY, f64::min);
    let mu_max = s.points.iter().map(|p| *p.mu.last().unwrap_or(&0.0)).fold(f64::NEG_INFINITY, f64::max);
    let frame = s.points.iter().map(|p| p.frame_unitarity_error()).fold(0.0, f64::max);
    let tangency = s.points.iter().map(|p| p.frame_tangency_error()).fold(0.0, f64::max);
    let bytes = csv_bytes(|b| write_points_csv(&s.points, b))?;
    Ok(Outcome {
        pass: !s.points.is_empty(),
        body: json!({
            "points": s.points.len(),
            "dropped": s.dropped,
            "normalization": cfg.normalization,
            "min_mu": mu_min,
            "max_mu": mu_max,
            "max_frame_unitarity_error": frame,
            "max_frame_tangency_error": tangency,
        }),
        csv: vec![("points".into(), bytes)],
    })
}

fn random_center(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
        .collect()
}

fn mkh(cfg: &RunConfig) -> Result<Outcome> {
    let m = &cfg.mkh;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let weights: Vec<WeightSpec> = m
        .t_values
        .iter()
        .map(|&t| WeightSpec { t, kind: cfg.weight.form })
        .collect();
    let quad = QuadSpec::new(m.per_axis);
    let mut all = Vec::new();
    let mut rows = Vec::new();
    let mut worst_rel: f64 = 0.0;
    let mut worst_ratio = f64::INFINITY;
    let mut worst_margin = f64::INFINITY;
    for i in 0..m.forms {
        let center = random_center(&mut rng, m.n);
        let radius = rng.gen_range(0.6..1.2);
        let f = TestForm::random(m.n, m.q, center, radius, m.degree, &mut rng)?;
        let norms = weighted_norms_many(&f, &weights, &quad)?;
        let reports: Vec<_> = norms.iter().map(|r| mkh_report(m.q, r)).collect();
        for (r, nr) in reports.iter().zip(&norms) {
            worst_rel = worst_rel.max(r.relative_residual);
            worst_ratio = worst_ratio.min(r.refinement_ratio);
            if r.t > 0.0 && cfg.weight.form == WeightKind::Gauss {
                worst_margin = worst_margin.min(basic_estimate_from(m.q, nr)?.margin);
            }
            rows.push(json!({"form": i, "t": r.t, "relative_residual": r.relative_residual,
                "coarse_relative_residual": r.coarse_relative_residual, "refinement_ratio": r.refinement_ratio}));
        }
        all.extend(reports);
    }
    let margin_ok = !worst_margin.is_finite() || worst_margin >= -m.basic_tol;
    let pass = worst_rel <= m.max_relative && worst_ratio >= m.min_ratio && margin_ok;
    let bytes = csv_bytes(|b| write_mkh_csv(b, &all))?;
    Ok(Outcome {
        pass,
        body: json!({
            "forms": m.forms, "n": m.n, "q": m.q, "per_axis": m.per_axis, "weight": cfg.weight.form,
            "max_relative_residual": worst_rel, "min_refinement_ratio": worst_ratio,
            "min_basic_estimate_margin": if worst_margin.is_finite() { Some(worst_margin) } else { None },
            "rows": rows,
        }),
        csv: vec![("residuals".into(), bytes)],
    })
}

fn scaling(cfg: &RunConfig, spec: &Arc<DomainSpec>) -> Result<Outcome> {
    let s = &cfg.scaling;
    let n = spec.n();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let zero = vec![C64::new(0.0, 0.0); n];
    let u1 = TestForm::random(n, s.q, zero, 1.0, s.degree, &mut rng)?;
    let centers: Vec<Vec<C64>> = s.radii.iter().map(|&r| heisenberg_center(n, r)).collect();
    let table = scaling_demo(&u1, spec, &centers, &s.radii, s.per_axis)?;
    let decreasing = table.rows.windows(2).all(|w| w[1].quotient < w[0].quotient);
    let bytes = csv_bytes(|b| write_scaling_csv(b, &table))?;
    Ok(Outcome {
        pass: table.max_relative_deviation <= s.max_relative && decreasing,
        body: to_value(&table),
        csv: vec![("table".into(), bytes)],
    })
}

fn homog(cfg: &RunConfig) -> Result<Outcome> {
    let h = &cfg.homog;
    let mut inputs = Vec::new();
    if let Some(text) = &h.poly {
        inputs.push(("input".to_string(), parse_real_vars(text, h.vars).context("homog.poly")?));
    }
    for i in 0..h.random {
        inputs.push((
            format!("random[{i}]"),
            random_homogeneous(h.random_vars, h.random_degree, cfg.seed.wrapping_add(i as u64)),
        ));
    }
    if inputs.is_empty() {
        bail!("homog-check needs homog.poly or homog.random > 0");
    }
    let mut pass = true;
    let mut results = Vec::new();
    for (label, p) in &inputs {
        let samples = if label == "input" { h.samples } else { 0 };
        let out = dehomogenize_and_check(p, samples, cfg.seed)?;
        let r = &out.report;
        pass &= r.euler_residual == 0.0 && r.dehomogenized_residual == 0.0;
        if let Some(ratio) = r.degree_bound_min_ratio {
            pass &= ratio >= 1.0 - 1e-9;
        }
        results.push(json!({"label": label, "dehomogenized": out.rho.to_string(), "report": r}));
    }
    Ok(Outcome {
        pass,
        body: json!({ "inputs": results }),
        csv: Vec::new(),
    })
}

fn k0(cfg: &RunConfig, spec: &Arc<DomainSpec>) -> Result<Outcome> {
    let k = &cfg.k0;
    if spec.n() != 3 || spec.graph_var() != Some(2) {
        bail!("k0-check needs a graph domain in C^3 over z_3");
    }
    let field = build_field(&cfg.upsilon, spec)?;
    let count = k.count.max(2);
    let pts: Vec<Vec<C64>> = (0..count)
        .map(|i| {
            let y = -k.y_max + 2.0 * k.y_max * i as f64 / (count - 1) as f64;
            spec.graph_lift(&[C64::new(0.0, y), C64::new(0.0, 0.0), C64::new(0.0, 0.0)])
        })
        .collect::<Result<_, _>>()?;
    let report = check_k0_negative_result(spec, &field, &pts)?;
    let tol = k.identity_tol;
    let k_ok = report.k_counts(tol).iter().all(|&c| c == 1);
    let sep_ok = report.k0_min_distance_to_one.map_or(true, |d| d >= k.separation);
    let pass = report.max_offdiag <= tol && report.max_balance <= tol && report.max_levi_norm <= tol && k_ok && sep_ok;
    let first_close = report
        .records
        .iter()
        .filter(|r| r.y != 0.0 && r.distance_to_one < k.separation)
        .map(|r| r.y.abs())
        .fold(f64::INFINITY, f64::min);
    let mut body = to_value(&report);
    body["separation"] = json!(k.separation);
    body["smallest_abs_y_below_separation"] = json!(if first_close.is_finite() { Some(first_close) } else { None });
    Ok(Outcome {
        pass,
        body,
        csv: Vec::new(),
    })
}

fn growth(cfg: &RunConfig, spec: &Arc<DomainSpec>) -> Result<Outcome> {
    let g = &cfg.growth;
    let report = uniform_cm_evidence(
        spec,
        &CoreGrowth {
            orders: g.orders.clone(),
            radii: g.radii.clone(),
            per_axis: g.per_axis,
        },
    )?;
    Ok(Outcome {
        pass: report.bounded(g.max_variation),
        body: to_value(&report),
        csv: Vec::new(),
    })
}

fn model_weight(cfg: &RunConfig) -> Result<Outcome> {
    let m = &cfg.model_weight;
    let r = model_weight_checks(cfg.weight.t, m.n, m.samples, cfg.seed)?;
    Ok(Outcome {
        pass: r.holds(1e-9),
        body: to_value(&r),
        csv: Vec::new(),
    })
}

mod common;

use std::sync::Arc;

use common::rng;
use rand::Rng;
use weakzq::builtins::{ball, quadric, quintic_graph, sextic_graph};
use weakzq::certify::{
    check_k0_negative_result, check_weak_zq, dehomogenize_and_check, radial, random_homogeneous, uniform_cm_evidence,
    CertError, GrowthConfig, Tolerances, Verdict, EVIDENCE_LABEL,
};
use weakzq::domain::{boundary_sample, Normalization, Window};
use weakzq::upsilon::{upsilon_patched, upsilon_quadric, upsilon_zero, PatchParams};
use weakzq::wirtinger::real::parse_real_vars;
use weakzq::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[test]
fn ball_passes_for_every_q() {
    let spec = ball(4);
    let sample = boundary_sample(&spec, &Window::cube(4, 1.0), &[3; 8], Normalization::Raw).unwrap();
    for q in 1..=3 {
        let r = check_weak_zq(&spec, &upsilon_zero(4), q, &sample.points, &Tolerances::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.aggregate.failed_conditions.is_empty());
        assert!((r.aggregate.inf_c_iii - q as f64).abs() < 1e-15);
        assert_eq!(r.evidence, EVIDENCE_LABEL);
    }
}

#[test]
fn both_routes_to_condition_ii_agree() {
    let spec = quadric(4, 1);
    let sample = boundary_sample(&spec, &Window::cube(4, 1.5), &[3; 8], Normalization::Raw).unwrap();
    for q in 1..=3 {
        let r = check_weak_zq(&spec, &upsilon_quadric(4, 1), q, &sample.points, &Tolerances::default()).unwrap();
        assert!(r.aggregate.max_route_gap < 1e-12, "{}", r.aggregate.max_route_gap);
        for p in &r.per_point {
            assert!((p.c_ii - p.c_ii_ambient).abs() < 1e-10 * (1.0 + p.mu.iter().map(|m| m * m).sum::<f64>().sqrt()));
        }
    }
}

#[test]
fn quadric_fails_only_through_trace_at_critical_q() {
    let spec = quadric(3, 1);
    let sample = boundary_sample(&spec, &Window::cube(3, 2.0), &[5; 6], Normalization::Raw).unwrap();
    let field = upsilon_quadric(3, 1);
    let r1 = check_weak_zq(&spec, &field, 1, &sample.points, &Tolerances::default()).unwrap();
    assert_eq!(r1.verdict, Verdict::Fail);
    assert_eq!(r1.aggregate.failed_conditions, vec!["iii".to_string()]);
    assert!(r1.aggregate.inf_c_iii < 1e-12);
    let r2 = check_weak_zq(&spec, &field, 2, &sample.points, &Tolerances::default()).unwrap();
    assert_eq!(r2.verdict, Verdict::Pass);
}

#[test]
fn verdict_is_invariant_under_scaling_rho() {
    let base = quadric(3, 1);
    let field = upsilon_quadric(3, 1);
    for factor in [0.01, 3.0, 250.0] {
        let scaled = base.scaled(factor).unwrap();
        let a = boundary_sample(&base, &Window::cube(3, 2.0), &[3; 6], Normalization::UnitGradient).unwrap();
        let b = boundary_sample(&scaled, &Window::cube(3, 2.0), &[3; 6], Normalization::UnitGradient).unwrap();
        for q in 1..=2 {
            let ra = check_weak_zq(&base, &field, q, &a.points, &Tolerances::default()).unwrap();
            let rb = check_weak_zq(&scaled, &field, q, &b.points, &Tolerances::default()).unwrap();
            assert_eq!(ra.verdict, rb.verdict);
            assert!((ra.aggregate.min_c_ii - rb.aggregate.min_c_ii).abs() < 1e-9);
        }
    }
}

#[test]
fn invalid_requests() {
    let spec = ball(3);
    let sample = boundary_sample(&spec, &Window::cube(3, 1.0), &[3; 6], Normalization::Raw).unwrap();
    let tol = Tolerances::default();
    assert!(matches!(
        check_weak_zq(&spec, &upsilon_zero(3), 0, &sample.points, &tol),
        Err(CertError::InvalidQ { q: 0, max: 2 })
    ));
    assert!(matches!(
        check_weak_zq(&spec, &upsilon_zero(3), 3, &sample.points, &tol),
        Err(CertError::InvalidQ { .. })
    ));
    assert!(matches!(check_weak_zq(&spec, &upsilon_zero(3), 1, &[], &tol), Err(CertError::EmptySample)));
    assert!(matches!(
        check_weak_zq(&spec, &upsilon_zero(2), 1, &sample.points, &tol),
        Err(CertError::DimensionMismatch { .. })
    ));
}

#[test]
fn k0_identities_hold_for_patched_field() {
    let spec = Arc::new(sextic_graph());
    let field = upsilon_patched(spec.clone(), PatchParams::default()).unwrap();
    let sample: Vec<Vec<C64>> = (0..=12)
        .map(|i| spec.graph_lift(&[c(0.0, -6.0 + i as f64), c(0.0, 0.0), c(0.0, 0.0)]).unwrap())
        .collect();
    let r = check_k0_negative_result(&spec, &field, &sample).unwrap();
    assert!(r.max_offdiag <= 1e-9 && r.max_balance <= 1e-9 && r.max_levi_norm <= 1e-9);
    assert_eq!(r.k_counts(1e-9), vec![1]);
    assert!(r.k0_min_distance_to_one.unwrap() > 0.0);

    let off = vec![spec.graph_lift(&[c(0.5, 1.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap()];
    assert!(matches!(check_k0_negative_result(&spec, &field, &off), Err(CertError::OffK0 { index: 0 })));
}

#[test]
fn sextic_gradient_growth_exponent() {
    let config = GrowthConfig {
        orders: vec![2, 3],
        radii: vec![125.0, 250.0, 500.0, 1000.0],
        per_axis: 9,
    };
    let r = uniform_cm_evidence(&sextic_graph(), &config).unwrap();
    let s = r.gradient_exponent_s.unwrap();
    assert!((s - 2.5).abs() < 0.1, "fitted exponent {s}");
    assert!(r.bounded(0.1), "{:?}", r.last_window_variation);
    assert_eq!(r.evidence, EVIDENCE_LABEL);
}

#[test]
fn quintic_ratio_is_unbounded() {
    // Grids with 4 or 8 intervals per half-axis revisit the same spikes of
    // the ratio at every scale, so the shell maxima stall; 10 intervals do not.
    let config = GrowthConfig {
        orders: vec![2],
        radii: vec![4.0, 8.0, 16.0, 32.0],
        per_axis: 11,
    };
    let r = uniform_cm_evidence(&quintic_graph(), &config).unwrap();
    let shells: Vec<f64> = r.windows.iter().map(|w| w.shell_max_ratio[0]).collect();
    assert!(shells.windows(2).all(|w| w[1] > w[0]), "{shells:?}");
    let exponent = r.ratio_exponent_r[0].unwrap();
    assert!((exponent - 1.0).abs() < 0.1, "{exponent}");
    assert!(!r.bounded(0.1));

    // On {y = 0, z2 = 0} the gradient has unit length while the z2 z̄2
    // Hessian entry equals 2x.
    let spec = quintic_graph();
    for x in [10.0, 100.0, 1000.0] {
        let z = spec.graph_lift(&[c(x, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let jet = spec.jet(&z).unwrap();
        assert!((jet.grad_norm() - 1.0).abs() < 1e-12);
        assert!((jet.hessian.get(1, 1).re - 2.0 * x).abs() < 1e-9 * x);
    }
}

#[test]
fn growth_config_is_validated() {
    let bad = GrowthConfig {
        orders: vec![0],
        radii: vec![1.0],
        per_axis: 3,
    };
    assert!(matches!(uniform_cm_evidence(&ball(2), &bad), Err(CertError::Invalid(_))));
    let bad = GrowthConfig {
        orders: vec![2],
        radii: vec![2.0, 1.0],
        per_axis: 3,
    };
    assert!(uniform_cm_evidence(&ball(2), &bad).is_err());
}

#[test]
fn radial_coordinate_skips_graph_variable() {
    let z = [c(3.0, 0.0), c(0.0, 4.0), c(100.0, 100.0)];
    assert_eq!(radial(&sextic_graph(), &z), 5.0);
    assert!((radial(&quadric(3, 1), &z) - (25.0f64 + 20000.0).sqrt()).abs() < 1e-12);
}

#[test]
fn dehomogenization_examples() {
    let rho_tilde = parse_real_vars("x1^2 + x2^2 - x3^2", 3).unwrap();
    let out = dehomogenize_and_check(&rho_tilde, 0, 0).unwrap();
    assert_eq!(out.rho, parse_real_vars("x1^2 + x2^2 - 1", 2).unwrap());
    assert_eq!(out.report.euler_residual, 0.0);
    assert_eq!(out.report.dehomogenized_residual, 0.0);

    let out = dehomogenize_and_check(&rho_tilde, 100, 9).unwrap();
    assert!(out.report.boundary_points > 0);
    assert!(out.report.boundary_identity_max < 1e-10);
    assert!(out.report.c0.unwrap() > 0.0);

    let mixed = parse_real_vars("x1^2 + x2", 2).unwrap();
    assert!(matches!(
        dehomogenize_and_check(&mixed, 0, 0),
        Err(CertError::NonHomogeneous { degrees }) if degrees == vec![1, 2]
    ));
}

#[test]
fn random_homogeneous_inputs_satisfy_euler_identity() {
    let mut rng = rng(51);
    for _ in 0..10 {
        let m = rng.gen_range(2..5);
        let d = rng.gen_range(1..6);
        let p = random_homogeneous(m, d, rng.gen());
        assert!(p.is_homogeneous(d));
        let out = dehomogenize_and_check(&p, 0, 0).unwrap();
        assert_eq!(out.report.degree, d);
        assert_eq!(out.report.euler_residual, 0.0);
        assert_eq!(out.report.dehomogenized_residual, 0.0);
    }
}

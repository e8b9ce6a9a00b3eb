mod common;

use common::{random_point, rng};
use rand::Rng;
use weakzq::builtins::{ball, heisenberg, quadric, sextic_graph, tube};
use weakzq::domain::{
    boundary_sample, frame_at, frame_at_with, levi_eigenvector_check, signed_distance, DomainError, DomainSpec,
    FrameMethod, Normalization, Window,
};
use weakzq::wirtinger::PolyRC;
use weakzq::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn quadric_sample_lies_on_boundary() {
    let spec = quadric(2, 1);
    let sample = boundary_sample(&spec, &Window::cube(2, 2.0), &[3, 3, 3, 3], Normalization::Raw).unwrap();
    assert!(sample.points.len() + sample.dropped == 81);
    assert!(!sample.points.is_empty());
    for p in &sample.points {
        let lhs = p.z[1].norm_sqr();
        let rhs = p.z[0].norm_sqr() + 1.0;
        assert!((lhs - rhs).abs() < 1e-10 * rhs, "{:?}", p.z);
        assert!(p.frame_unitarity_error() < 1e-12);
        assert!(p.frame_tangency_error() < 1e-12);
    }
}

#[test]
fn newton_projection_on_ball_follows_ray() {
    let z = ball(2).newton_project(&[c(2.0, 0.0), c(0.0, 0.0)]).unwrap();
    assert!(dist(&z, &[c(1.0, 0.0), c(0.0, 0.0)]) < 1e-12);
}

#[test]
fn sextic_graph_lift_and_origin_frame() {
    let spec = sextic_graph();
    let mut rng = rng(31);
    for _ in 0..50 {
        let z = random_point(3, 2.0, &mut rng);
        let w = spec.graph_lift(&z).unwrap();
        assert!(spec.eval(&w).abs() <= 1e-12 * (1.0 + spec.rho().eval_with_scale(&w).1));
    }
    let origin = [c(0.0, 0.0); 3];
    let data = frame_at(&spec, &origin, Normalization::Raw).unwrap();
    let i = c(0.0, 1.0);
    let expected = [[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0), -i]];
    for (a, row) in expected.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert!((data.frame[(a, j)] - v).norm() < 1e-15);
        }
    }
    assert_eq!(data.levi.frobenius(), 0.0);
}

#[test]
fn ball_and_tube_levi_forms() {
    let data = frame_at(&ball(3), &[c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.0)], Normalization::Raw).unwrap();
    assert!(data.mu.iter().all(|m| (m - 1.0).abs() < 1e-14), "{:?}", data.mu);
    let data = frame_at(&tube(3), &[c(0.6, 5.0), c(0.8, -1.0), c(0.0, 2.0)], Normalization::Raw).unwrap();
    assert!(data.mu.iter().all(|m| (m - 0.5).abs() < 1e-14), "{:?}", data.mu);
    let data = frame_at(&ball(2), &[c(0.6, 0.0), c(0.0, 0.8)], Normalization::UnitGradient).unwrap();
    assert!((data.mu[0] - 0.5).abs() < 1e-14);
}

#[test]
fn heisenberg_levi_is_identity_scaled_by_normal_component() {
    let spec = heisenberg(3);
    let mut rng = rng(32);
    for _ in 0..20 {
        let z = spec.graph_lift(&random_point(3, 2.0, &mut rng)).unwrap();
        let data = frame_at(&spec, &z, Normalization::Raw).unwrap();
        // The tangent frame is orthonormal, so the restricted identity has
        // one eigenvalue 1 and one equal to 1 - |normal component|².
        let r: f64 = z[..2].iter().map(|v| v.norm_sqr()).sum();
        let lower = 1.0 / (1.0 + 4.0 * r);
        assert!((data.mu[0] - lower).abs() < 1e-12 && (data.mu[1] - 1.0).abs() < 1e-12, "{:?}", data.mu);
    }
}

#[test]
fn signed_distance_on_ball() {
    let spec = ball(2);
    let out = signed_distance(&spec, &[c(2.0, 0.0), c(0.0, 0.0)], 10.0).unwrap();
    assert!((out.delta - 1.0).abs() < 1e-10);
    let inside = signed_distance(&spec, &[c(0.0, 0.3), c(0.4, 0.0)], 10.0).unwrap();
    assert!((inside.delta + 0.5).abs() < 1e-10);
    assert!(dist(&inside.foot, &[c(0.0, 0.6), c(0.8, 0.0)]) < 1e-9);
    assert!(matches!(
        signed_distance(&spec, &[c(3.0, 0.0), c(0.0, 0.0)], 1.0),
        Err(DomainError::OutsideReach { .. })
    ));
}

#[test]
fn signed_distance_on_sextic_is_a_local_minimum() {
    let spec = sextic_graph();
    let mut rng = rng(33);
    for _ in 0..10 {
        let base = spec.graph_lift(&random_point(3, 0.8, &mut rng)).unwrap();
        let mut p = base.clone();
        p[2] += c(0.0, rng.gen_range(0.05..0.2));
        let out = signed_distance(&spec, &p, 1.0).unwrap();
        assert!(out.delta < 0.0);
        // The vertical distance bounds the true distance from above.
        let vertical = dist(&p, &base);
        assert!(-out.delta <= vertical + 1e-12);
        assert!((dist(&p, &out.foot) + out.delta).abs() < 1e-12);
        // Nearby boundary points are no closer.
        for _ in 0..200 {
            let mut q = out.foot.clone();
            for v in q.iter_mut().take(2) {
                *v += c(rng.gen_range(-1e-3..1e-3), rng.gen_range(-1e-3..1e-3));
            }
            q[2] += c(rng.gen_range(-1e-3..1e-3), 0.0);
            let q = spec.graph_lift(&q).unwrap();
            assert!(dist(&p, &q) >= -out.delta - 1e-12);
        }
    }
}

#[test]
fn quadric_test_vector_relations() {
    let mut rng = rng(34);
    for (n, p) in [(3, 1), (4, 2), (3, 2)] {
        let spec = quadric(n, p);
        for _ in 0..20 {
            let z = spec.newton_project(&random_point(n, 2.0, &mut rng)).unwrap();
            let check = levi_eigenvector_check(&spec, p, &z).unwrap();
            let size: f64 = z.iter().map(|v| v.norm_sqr()).sum();
            assert!(check.tangency < 1e-10 * size.powf(1.5));
            assert!(check.residual < 1e-10 * size.powf(1.5));
        }
    }
    assert!(matches!(
        levi_eigenvector_check(&quadric(2, 1), 1, &[c(0.0, 0.0); 2]),
        Err(DomainError::ZeroPoint)
    ));
}

#[test]
fn levi_spectrum_is_frame_independent() {
    let spec = quadric(4, 2);
    let mut rng = rng(35);
    let z = spec.newton_project(&random_point(4, 1.5, &mut rng)).unwrap();
    let reference = frame_at(&spec, &z, Normalization::Raw).unwrap();
    for order in [vec![3, 2, 1, 0], vec![1, 3, 0, 2], vec![2, 0, 3, 1]] {
        let other = frame_at_with(&spec, &z, Normalization::Raw, &FrameMethod::GramSchmidt(order)).unwrap();
        assert!(other.frame_unitarity_error() < 1e-12);
        for (a, b) in reference.mu.iter().zip(&other.mu) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn errors() {
    let not_real = PolyRC::z(2, 0);
    assert!(matches!(DomainSpec::new("bad", not_real), Err(DomainError::NotRealValued)));
    assert!(matches!(
        DomainSpec::graph("bad", PolyRC::abs_sq(2, 0), 1),
        Err(DomainError::GraphStructure { index: 1 })
    ));
    let spec = ball(2);
    assert!(matches!(
        frame_at(&spec, &[c(0.5, 0.0), c(0.0, 0.0)], Normalization::Raw),
        Err(DomainError::NotOnBoundary { .. })
    ));
    assert!(matches!(
        frame_at(&spec, &[c(1.0, 0.0)], Normalization::Raw),
        Err(DomainError::DimensionMismatch { .. })
    ));
    assert!(Window::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
    assert!(Window::new(vec![0.0], vec![1.0]).is_err());
    assert!(Window::cube(1, 1.0).grid(&[2, 0]).is_err());
}

#[test]
fn window_grid_order_and_midpoints() {
    let w = Window::new(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap();
    let g = w.grid(&[2, 1]).unwrap();
    assert_eq!(g, vec![vec![c(0.0, 0.0)], vec![c(2.0, 0.0)]]);
    let g = w.grid(&[2, 3]).unwrap();
    assert_eq!(g.len(), 6);
    assert_eq!(g[1], vec![c(0.0, 0.0)]);
    assert_eq!(g[5], vec![c(2.0, 1.0)]);
}

#[test]
fn scaling_changes_hash_not_boundary() {
    let spec = quadric(3, 1);
    let scaled = spec.scaled(4.0).unwrap();
    assert_ne!(spec.hash(), scaled.hash());
    assert_eq!(spec.hash(), quadric(3, 1).hash());
    let z = [c(1.0, 0.0), c(0.0, 0.0), c(2f64.sqrt(), 0.0)];
    let a = frame_at(&spec, &z, Normalization::UnitGradient).unwrap();
    let b = frame_at(&scaled, &z, Normalization::UnitGradient).unwrap();
    for (x, y) in a.mu.iter().zip(&b.mu) {
        assert!((x - y).abs() < 1e-14);
    }
}

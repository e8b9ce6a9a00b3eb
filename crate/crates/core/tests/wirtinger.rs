mod common;

use common::{check_wirtinger, complex_normal, random_point, random_poly, rng};
use rand::Rng;
use weakzq::builtins::{p_poly, q_poly, quadric, sextic_graph};
use weakzq::certify::random_homogeneous;
use weakzq::wirtinger::real::parse_real_vars;
use weakzq::wirtinger::{parse_real, Monomial, PolyError, PolyRC, PolySet, RealPoly, MAX_DEGREE};
use weakzq::C64;

fn mono(z: &[u8], zbar: &[u8]) -> Monomial {
    Monomial {
        z: z.to_vec(),
        zbar: zbar.to_vec(),
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

#[test]
fn derivatives_of_abs_square() {
    let p = PolyRC::abs_sq(1, 0);
    assert_eq!(p.d_z(0).unwrap(), PolyRC::zbar(1, 0));
    assert_eq!(p.d_zbar(0).unwrap(), PolyRC::z(1, 0));
}

#[test]
fn derivative_of_constant_is_zero() {
    let p = PolyRC::constant(2, c(5.0));
    assert!(p.d_z(0).unwrap().is_zero());
    assert!(p.d_zbar(1).unwrap().is_zero());
}

#[test]
fn derivative_of_p_in_z2() {
    // d/dz2 of 2x|z2|² - xy⁴ is 2x z̄2 = z̄2 (z1 + z̄1).
    let p = p_poly();
    let expected = PolyRC::from_terms(3, [(mono(&[1, 0, 0], &[0, 1, 0]), c(1.0)), (mono(&[0, 0, 0], &[1, 1, 0]), c(1.0))]);
    assert!(p.d_z(1).unwrap().max_abs_diff(&expected) < 1e-15);
}

#[test]
fn p_and_q_agree_with_finite_differences() {
    let mut rng = rng(11);
    for p in [p_poly(), q_poly()] {
        for _ in 0..20 {
            let z = random_point(3, 1.5, &mut rng);
            check_wirtinger(&p, &z).unwrap();
        }
    }
}

#[test]
fn conjugation_swaps_derivatives() {
    let mut rng = rng(12);
    for _ in 0..50 {
        let n = rng.gen_range(1..=3);
        let p = random_poly(n, 5, 6, &mut rng);
        for j in 0..n {
            let a = p.d_zbar(j).unwrap().conj();
            let b = p.conj().d_z(j).unwrap();
            assert!(a.max_abs_diff(&b) == 0.0);
        }
    }
}

#[test]
fn real_valued_polynomials_have_conjugate_derivatives_and_real_values() {
    let mut rng = rng(13);
    for p in [p_poly(), q_poly(), sextic_graph().rho().clone(), quadric(3, 1).rho().clone()] {
        assert!(p.is_real_valued());
        for j in 0..3 {
            let dz = p.d_z(j).unwrap();
            assert!(p.d_zbar(j).unwrap().max_abs_diff(&dz.conj()) < 1e-14);
        }
        for _ in 0..100 {
            let z = random_point(3, 1.0, &mut rng);
            assert!(p.eval(&z).im.abs() <= 1e-13, "{}", p.eval(&z));
        }
    }
}

#[test]
fn from_real_examples() {
    let p = PolyRC::parse_real("x1^2 + y1^2", 1).unwrap();
    assert_eq!(p, PolyRC::abs_sq(1, 0));
    assert!(PolyRC::parse_real("0", 2).unwrap().is_zero());
    // P(1 + i, 1) = 2·1·1 - 1·1 = 1.
    let v = p_poly().eval(&[C64::new(1.0, 1.0), c(1.0), c(0.0)]);
    assert!((v - c(1.0)).norm() < 1e-14);
}

#[test]
fn from_real_matches_direct_real_evaluation() {
    let text = "3*x1^2*y2 - 0.5*x2*y1^3 + 2.25*y1*y2 - 7";
    let real = parse_real(text, 2).unwrap();
    let p = PolyRC::from_real(&real).unwrap();
    let mut rng = rng(14);
    for _ in 0..50 {
        let z = random_point(2, 2.0, &mut rng);
        let x = [z[0].re, z[1].re, z[0].im, z[1].im];
        let direct = 3.0 * x[0] * x[0] * x[3] - 0.5 * x[1] * x[2].powi(3) + 2.25 * x[2] * x[3] - 7.0;
        assert!((real.eval(&x) - direct).abs() < 1e-12);
        assert!((p.eval(&z) - c(direct)).norm() < 1e-12);
    }
}

#[test]
fn boundary_evaluations() {
    assert_eq!(quadric(2, 1).rho().eval(&[c(0.0), c(1.0)]), c(0.0));
    assert_eq!(sextic_graph().rho().eval(&[c(0.0); 3]), c(0.0));
    let mut rng = rng(15);
    let p = random_poly(2, 4, 5, &mut rng);
    let constant = p.coeff(&Monomial::one(2));
    assert_eq!(p.eval(&[c(0.0), c(0.0)]), constant);
}

#[test]
fn index_and_degree_errors() {
    let p = PolyRC::z(2, 0);
    assert_eq!(p.d_z(2), Err(PolyError::IndexOutOfRange { index: 2, n: 2 }));
    assert!(matches!(p.pow(MAX_DEGREE + 1), Err(PolyError::DegreeCap { .. })));
    assert!(p.pow(MAX_DEGREE).is_ok());
}

#[test]
fn parse_errors_carry_columns() {
    match parse_real("x1 + * y1", 1) {
        Err(PolyError::Parse { column, .. }) => assert_eq!(column, 6),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_real("x1 / y1", 1), Err(PolyError::Parse { .. })));
    assert!(matches!(parse_real("x3", 2), Err(PolyError::Parse { .. })));
    assert!(matches!(parse_real("", 2), Err(PolyError::Parse { .. })));
    assert!(matches!(parse_real("x1^13", 1), Err(PolyError::DegreeCap { degree: 13 })));
}

#[test]
fn division_by_constant_and_exponent_literals() {
    let a = parse_real("x1^3/3 + 2.5e-1*y1", 1).unwrap();
    let b = parse_real("0.3333333333333333*x1^3 + 0.25*y1", 1).unwrap();
    assert_eq!(a.sub(&b).max_coeff(), 0.0);
}

#[test]
fn real_poly_display_round_trips() {
    for seed in 0..20 {
        let p = random_homogeneous(2 + seed as usize % 3, 1 + seed as u32 % 5, seed);
        let text = p.to_string();
        let back = parse_real_vars(&text, p.nvars()).unwrap();
        assert_eq!(back, p, "{text}");
    }
    let tiny = RealPoly::from_terms(2, [(vec![1, 0], 3.5e-9), (vec![0, 2], -1.25e17)]);
    assert_eq!(parse_real_vars(&tiny.to_string(), 2).unwrap(), tiny);
    assert_eq!(RealPoly::zero(3).to_string(), "0");
}

#[test]
fn batch_evaluation_matches_single() {
    let mut rng = rng(16);
    let polys: Vec<PolyRC> = (0..4).map(|_| random_poly(3, 6, 7, &mut rng)).collect();
    let set = PolySet::new(&polys);
    for _ in 0..20 {
        let z: Vec<C64> = (0..3).map(|_| complex_normal(&mut rng)).collect();
        let batch = set.eval(&z);
        for (p, v) in polys.iter().zip(&batch) {
            let single = p.eval(&z);
            assert!((single - v).norm() <= 1e-12 * (1.0 + single.norm()));
        }
    }
}

#[test]
fn small_coefficients_are_dropped() {
    let p = PolyRC::from_terms(1, [(mono(&[1], &[0]), C64::new(1e-15, 0.0)), (mono(&[0], &[1]), c(1.0))]);
    assert_eq!(p.len(), 1);
    let q = &p - &p;
    assert!(q.is_zero());
}

#[test]
fn sextic_x_derivative_closed_form() {
    // ∂ρ/∂x = 2|z2|² - y⁴ + x(19/10 x⁴ + 4x²|z2|² + 2|z2|⁴ + 4|z2|²y² + 5x²y² - y⁴/2).
    let rho = sextic_graph().rho().clone();
    let expected = PolyRC::parse_real(
        "2*(x2^2 + y2^2) - y1^4 + x1*(1.9*x1^4 + 4*x1^2*(x2^2 + y2^2) + 2*(x2^2 + y2^2)^2 \
         + 4*(x2^2 + y2^2)*y1^2 + 5*x1^2*y1^2 - 0.5*y1^4)",
        3,
    )
    .unwrap();
    assert!(rho.d_x(0).unwrap().max_abs_diff(&expected) < 1e-14);
}

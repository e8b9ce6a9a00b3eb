mod common;

use common::{check_dbar_squared, check_eigh, check_wirtinger, random_herm, random_poly, rng};
use proptest::prelude::*;
use rand::Rng;
use weakzq::certify::random_homogeneous;
use weakzq::forms::{epsilon, insert, TestForm};
use weakzq::hermitian::{CMat, HermMat};
use weakzq::wirtinger::real::parse_real_vars;
use weakzq::wirtinger::PolyRC;
use weakzq::C64;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn increasing(n: usize, mask: u32) -> Vec<usize> {
    (0..n).filter(|k| mask & (1 << k) != 0).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigh_reconstructs(seed in any::<u64>(), n in 1usize..7) {
        let m = random_herm(n, &mut rng(seed));
        prop_assert!(check_eigh(&m).is_ok(), "{:?}", check_eigh(&m));
    }

    #[test]
    fn eigh_handles_scaled_matrices(seed in any::<u64>(), n in 1usize..5, exp in -8i32..8) {
        let m = random_herm(n, &mut rng(seed)).scale(10f64.powi(exp));
        prop_assert!(check_eigh(&m).is_ok(), "{:?}", check_eigh(&m));
    }

    #[test]
    fn eigenvalues_of_shifted_matrix_shift(seed in any::<u64>(), n in 1usize..6, s in -5.0f64..5.0) {
        let m = random_herm(n, &mut rng(seed));
        let shifted = m.add(&HermMat::identity(n).scale(s));
        let a = m.eigvalsh().unwrap();
        let b = shifted.eigvalsh().unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x + s - y).abs() < 1e-10 * (1.0 + m.frobenius()));
        }
    }

    #[test]
    fn wirtinger_matches_finite_differences(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let p = random_poly(n, 6, 8, &mut r);
        let z: Vec<C64> = (0..n).map(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
        prop_assert!(check_wirtinger(&p, &z).is_ok(), "{:?}", check_wirtinger(&p, &z));
    }

    #[test]
    fn product_rule(seed in any::<u64>(), n in 1usize..4, j in 0usize..3) {
        prop_assume!(j < n);
        let mut r = rng(seed);
        let a = random_poly(n, 4, 5, &mut r);
        let b = random_poly(n, 4, 5, &mut r);
        let ab = a.checked_mul(&b).unwrap();
        let lhs = ab.d_zbar(j).unwrap();
        let rhs = &a.d_zbar(j).unwrap().checked_mul(&b).unwrap() + &a.checked_mul(&b.d_zbar(j).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-10 * (1.0 + ab.max_coeff()));
    }

    #[test]
    fn from_real_agrees_with_real_evaluation(seed in any::<u64>(), m in 1usize..3, d in 1u32..5) {
        let p = random_homogeneous(2 * m, d, seed);
        let cplx = PolyRC::from_real(&p).unwrap();
        prop_assert!(cplx.is_real_valued());
        let mut r = rng(seed ^ 0x5eed);
        let z: Vec<C64> = (0..m).map(|_| c(r.gen_range(-1.5..1.5), r.gen_range(-1.5..1.5))).collect();
        let mut x: Vec<f64> = z.iter().map(|v| v.re).collect();
        x.extend(z.iter().map(|v| v.im));
        let direct = p.eval(&x);
        let via = cplx.eval(&z);
        prop_assert!((via.re - direct).abs() < 1e-10 * (1.0 + p.max_coeff() * 10f64.powi(d as i32)));
        prop_assert!(via.im.abs() < 1e-10 * (1.0 + p.max_coeff() * 10f64.powi(d as i32)));
    }

    #[test]
    fn real_poly_text_round_trip(seed in any::<u64>(), m in 1usize..5, d in 0u32..6) {
        let p = random_homogeneous(m, d, seed).scale(10f64.powi((seed % 21) as i32 - 10));
        let back = parse_real_vars(&p.to_string(), m).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn epsilon_is_consistent_with_insert(n in 1usize..7, imask in any::<u32>(), j in 0usize..7) {
        prop_assume!(j < n);
        let i = increasing(n, imask & ((1 << n) - 1));
        match insert(j, &i) {
            None => prop_assert!(i.contains(&j)),
            Some((k, s)) => {
                prop_assert!(k.windows(2).all(|w| w[0] < w[1]));
                prop_assert_eq!(k.len(), i.len() + 1);
                prop_assert_eq!(epsilon(j, &i, &k), s);
                // Inserting j in front costs one sign per smaller index.
                let smaller = i.iter().filter(|&&a| a < j).count();
                prop_assert_eq!(s, if smaller % 2 == 0 { 1 } else { -1 });
            }
        }
    }

    #[test]
    fn dbar_squared_is_zero(seed in any::<u64>(), n in 1usize..4, q in 0usize..3) {
        prop_assume!(q < n);
        let mut r = rng(seed);
        let center: Vec<C64> = (0..n).map(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
        let f = TestForm::random(n, q, center, r.gen_range(0.5..2.0), 2, &mut r).unwrap();
        prop_assert!(check_dbar_squared(&f).is_ok(), "{:?}", check_dbar_squared(&f));
    }

    #[test]
    fn determinant_is_multiplicative(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let a = random_herm(n, &mut r).into_cmat();
        let b = random_herm(n, &mut r).into_cmat();
        let lhs = a.mul(&b).det();
        let rhs = a.det() * b.det();
        prop_assert!((lhs - rhs).norm() < 1e-9 * (1.0 + rhs.norm()));
        let i = CMat::identity(n);
        prop_assert!((i.det() - c(1.0, 0.0)).norm() < 1e-15);
    }
}

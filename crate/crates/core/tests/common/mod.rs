//! Oracles shared by the integration tests and the acceptance runner.
//!
//! Each check returns `Err` with a description of the first violation, so the
//! same code can back both `#[test]` functions and PASS/FAIL lines.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use weakzq::forms::multi_index::{epsilon, MultiIndexAlg};
use weakzq::forms::{adjointness_check, QuadSpec, TestForm, WeightSpec};
use weakzq::hermitian::{CMat, HermMat};
use weakzq::wirtinger::{Monomial, PolyRC};
use weakzq::C64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn complex_normal(rng: &mut impl Rng) -> C64 {
    C64::new(normal(rng), normal(rng))
}

/// Random Hermitian matrix with complex normal entries.
pub fn random_herm(n: usize, rng: &mut impl Rng) -> HermMat {
    let entries: Vec<C64> = (0..n * n).map(|_| complex_normal(rng)).collect();
    HermMat::new(CMat::from_fn(n, n, |i, j| entries[i * n + j]))
}

/// Random polynomial with `terms` monomials of degree at most `degree`.
pub fn random_poly(n: usize, degree: u32, terms: usize, rng: &mut impl Rng) -> PolyRC {
    let mut out = Vec::with_capacity(terms);
    for _ in 0..terms {
        let mut m = Monomial::one(n);
        let target = rng.gen_range(0..=degree);
        for _ in 0..target {
            let j = rng.gen_range(0..n);
            if rng.gen_bool(0.5) {
                m.z[j] += 1;
            } else {
                m.zbar[j] += 1;
            }
        }
        out.push((m, complex_normal(rng)));
    }
    PolyRC::from_terms(n, out)
}

/// Uniform point of the polydisc `|z_j| < r` (rejection in each square).
pub fn random_point(n: usize, r: f64, rng: &mut impl Rng) -> Vec<C64> {
    (0..n)
        .map(|_| loop {
            let c = C64::new(rng.gen_range(-r..r), rng.gen_range(-r..r));
            if c.norm() < r {
                break c;
            }
        })
        .collect()
}

/// Sign of the permutation `σ` with `seq[σ(k)] = target[k]`, found by
/// enumerating every permutation. `0` when none exists.
pub fn permutation_sign_oracle(seq: &[usize], target: &[usize]) -> i8 {
    let q = seq.len();
    if target.len() != q {
        return 0;
    }
    let mut perm: Vec<usize> = (0..q).collect();
    let mut result = 0;
    visit_permutations(&mut perm, 0, &mut |p| {
        if (0..q).all(|k| seq[p[k]] == target[k]) {
            result = inversion_sign(p);
        }
    });
    result
}

fn visit_permutations(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        visit_permutations(p, k + 1, f);
        p.swap(k, i);
    }
}

fn inversion_sign(p: &[usize]) -> i8 {
    let mut inversions = 0;
    for a in 0..p.len() {
        for b in a + 1..p.len() {
            if p[a] > p[b] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Compares `epsilon(j, I, J)` with the permutation oracle for every
/// `j < n`, increasing `I` of length `q - 1` and `J` of length `q`, for all
/// `n ≤ n_max`. Returns the number of entries compared.
pub fn check_epsilon_table(n_max: usize) -> Result<usize, String> {
    let mut compared = 0;
    for n in 1..=n_max {
        for q in 1..=n {
            let js = MultiIndexAlg::new(n, q).expect("valid degree");
            let is = MultiIndexAlg::new(n, q - 1).expect("valid degree");
            for k in js.indices() {
                for i in is.indices() {
                    for j in 0..n {
                        let mut seq = vec![j];
                        seq.extend_from_slice(i);
                        let expected = permutation_sign_oracle(&seq, k);
                        let got = epsilon(j, i, k);
                        if got != expected {
                            return Err(format!("n={n} j={j} I={i:?} J={k:?}: got {got}, oracle {expected}"));
                        }
                        compared += 1;
                    }
                }
            }
        }
    }
    Ok(compared)
}

/// Reconstruction, unitarity, ordering, trace and determinant of `eigh`.
pub fn check_eigh(m: &HermMat) -> Result<(), String> {
    let n = m.dim();
    let eig = m.eigh().map_err(|e| e.to_string())?;
    let frob = m.frobenius();
    let v = &eig.vectors;
    let d = CMat::diag(&eig.values.iter().map(|&l| C64::new(l, 0.0)).collect::<Vec<_>>());
    let rec = v.mul(&d).mul(&v.adjoint()).sub(m.as_cmat()).frobenius();
    if rec > 1e-10 * (1.0 + frob) {
        return Err(format!("reconstruction error {rec:e} for n={n}"));
    }
    let unit = v.adjoint().mul(v).sub(&CMat::identity(n)).frobenius();
    if unit > 1e-10 {
        return Err(format!("unitarity error {unit:e} for n={n}"));
    }
    if eig.values.windows(2).any(|w| w[0] > w[1]) {
        return Err(format!("eigenvalues not ascending: {:?}", eig.values));
    }
    let tr: f64 = eig.values.iter().sum();
    if (tr - m.trace()).abs() > 1e-10 * (1.0 + frob) {
        return Err(format!("trace {tr} vs {}", m.trace()));
    }
    let prod: f64 = eig.values.iter().product();
    let det = m.as_cmat().det();
    let scale = det.norm().max(1e-8 * (1.0 + frob).powi(n as i32));
    if (det - prod).norm() > 1e-8 * scale {
        return Err(format!("det {det} vs product {prod}"));
    }
    Ok(())
}

/// Central differences of `p` along `x_j` and `y_j` at `z`.
fn real_partials(p: &PolyRC, z: &[C64], j: usize, h: f64) -> (C64, C64) {
    let shifted = |d: C64| {
        let mut w = z.to_vec();
        w[j] += d;
        p.eval(&w)
    };
    let dx = (shifted(C64::new(h, 0.0)) - shifted(C64::new(-h, 0.0))) / (2.0 * h);
    let dy = (shifted(C64::new(0.0, h)) - shifted(C64::new(0.0, -h))) / (2.0 * h);
    (dx, dy)
}

/// `∂p/∂z_j = (∂_x - i∂_y)/2` and `∂p/∂z̄_j = (∂_x + i∂_y)/2` against central
/// differences, the symbolic `d_x`, `d_y`, and commutation of mixed partials.
pub fn check_wirtinger(p: &PolyRC, z: &[C64]) -> Result<(), String> {
    let n = p.n();
    let i = C64::new(0.0, 1.0);
    let h = 1e-5;
    let scale = 1.0 + p.terms().map(|(m, c)| c.norm() * monomial_abs(m, z)).sum::<f64>();
    for j in 0..n {
        let (dx, dy) = real_partials(p, z, j, h);
        let dz = p.d_z(j).map_err(|e| e.to_string())?.eval(z);
        let dzb = p.d_zbar(j).map_err(|e| e.to_string())?.eval(z);
        let fd_z = (dx - i * dy) * 0.5;
        let fd_zb = (dx + i * dy) * 0.5;
        let tol = 1e-6 * scale;
        if (dz - fd_z).norm() > tol || (dzb - fd_zb).norm() > tol {
            return Err(format!(
                "j={j}: d_z {dz} vs {fd_z}, d_zbar {dzb} vs {fd_zb} (tol {tol:e}) for {p}"
            ));
        }
        let sx = p.d_x(j).map_err(|e| e.to_string())?.eval(z);
        let sy = p.d_y(j).map_err(|e| e.to_string())?.eval(z);
        if (sx - (dz + dzb)).norm() > 1e-10 * scale || (sy - i * (dz - dzb)).norm() > 1e-10 * scale {
            return Err(format!("j={j}: d_x/d_y inconsistent with d_z/d_zbar"));
        }
        for k in 0..n {
            let a = p.d_z(j).and_then(|q| q.d_zbar(k)).map_err(|e| e.to_string())?;
            let b = p.d_zbar(k).and_then(|q| q.d_z(j)).map_err(|e| e.to_string())?;
            if a.max_abs_diff(&b) > 1e-12 * (1.0 + p.max_coeff()) {
                return Err(format!("mixed partials differ for j={j}, k={k}"));
            }
        }
    }
    Ok(())
}

fn monomial_abs(m: &Monomial, z: &[C64]) -> f64 {
    z.iter()
        .enumerate()
        .map(|(j, c)| c.norm().powi(m.z[j] as i32 + m.zbar[j] as i32))
        .product()
}

/// `∂̄∂̄f = 0` coefficientwise, relative to the size of `f`.
pub fn check_dbar_squared(f: &TestForm) -> Result<f64, String> {
    let d1 = f.dbar().map_err(|e| e.to_string())?;
    if d1.q() == f.n() {
        return Ok(0.0);
    }
    let d2 = d1.dbar().map_err(|e| e.to_string())?;
    let size = f.coeffs().iter().map(|c| c.max_coeff()).fold(0.0, f64::max);
    let worst = d2.coeffs().iter().map(|c| c.max_coeff()).fold(0.0, f64::max);
    if worst > 1e-12 * (1.0 + size) {
        return Err(format!("largest coefficient of dbar^2 f is {worst:e}"));
    }
    Ok(worst)
}

/// `(∂̄u, g)_φ = (u, ∂̄*_φ g)_φ` up to the quadrature error. The fine-grid
/// residual must be below `max_relative (1 + |lhs|)`, and at most the
/// half-size grid residual divided by `3.5` unless it already sits at
/// rounding level. Returns the relative residual.
pub fn check_adjointness(
    u: &TestForm,
    g: &TestForm,
    w: &WeightSpec,
    per_axis: usize,
    max_relative: f64,
) -> Result<f64, String> {
    let r = adjointness_check(u, g, w, &QuadSpec::new(per_axis)).map_err(|e| e.to_string())?;
    let scale = 1.0 + r.lhs.norm();
    if r.residual > max_relative * scale {
        return Err(format!("residual {:e} with lhs {} at N={per_axis}", r.residual, r.lhs));
    }
    let rounding = 1e-12 * scale;
    if r.residual > rounding && r.coarse_residual < 3.5 * r.residual {
        return Err(format!(
            "residual {:e} on the fine grid and {:e} on the coarse grid",
            r.residual, r.coarse_residual
        ));
    }
    Ok(r.residual / scale)
}

//! Tensor-product midpoint quadrature over boxes in `C^n = R^{2n}`.

use rayon::prelude::*;

use crate::C64;

/// Midpoint rule with `per_axis` nodes on each of the `2n` real axes of the
/// box `[lo, hi]` (interleaved `x_1, y_1, x_2, ...`).
///
/// `integrand(state, z, acc)` adds its `k` contributions at `z` into `acc`.
/// The first axis is split across threads; partial sums are combined in axis
/// order, so the result does not depend on the thread count.
pub fn integrate<S, I, F>(lo: &[f64], hi: &[f64], per_axis: usize, k: usize, init: I, integrand: F) -> Vec<f64>
where
    I: Fn() -> S + Sync,
    F: Fn(&mut S, &[C64], &mut [f64]) + Sync,
{
    let dim = lo.len();
    assert!(dim >= 2 && dim % 2 == 0 && hi.len() == dim);
    let h: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a) / per_axis as f64).collect();
    let cell: f64 = h.iter().product();
    let node = |axis: usize, i: usize| lo[axis] + (i as f64 + 0.5) * h[axis];
    let partials: Vec<Vec<f64>> = (0..per_axis)
        .into_par_iter()
        .map(|i0| {
            let mut state = init();
            let mut acc = vec![0.0; k];
            let mut idx = vec![0usize; dim];
            idx[0] = i0;
            let mut z = vec![C64::new(0.0, 0.0); dim / 2];
            let inner = per_axis.pow(dim as u32 - 1);
            for _ in 0..inner {
                for (j, zj) in z.iter_mut().enumerate() {
                    *zj = C64::new(node(2 * j, idx[2 * j]), node(2 * j + 1, idx[2 * j + 1]));
                }
                integrand(&mut state, &z, &mut acc);
                for axis in (1..dim).rev() {
                    idx[axis] += 1;
                    if idx[axis] < per_axis {
                        break;
                    }
                    idx[axis] = 0;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; k];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total.iter_mut().for_each(|t| *t *= cell);
    total
}

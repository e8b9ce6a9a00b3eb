//! Joint evaluation of several polynomials that share monomials.

use std::collections::BTreeMap;

use super::{power_table, Monomial, PolyRC, C64};

/// A list of polynomials compiled against a shared monomial table, so that
/// each distinct monomial is evaluated once per point.
#[derive(Clone, Debug)]
pub struct PolySet {
    n: usize,
    monomials: Vec<Monomial>,
    max_z: Vec<u8>,
    max_zbar: Vec<u8>,
    rows: Vec<Vec<(usize, C64)>>,
}

impl PolySet {
    pub fn new(polys: &[PolyRC]) -> Self {
        assert!(!polys.is_empty(), "PolySet needs at least one polynomial");
        let n = polys[0].n();
        let mut index: BTreeMap<Monomial, usize> = BTreeMap::new();
        for p in polys {
            assert_eq!(p.n(), n, "dimension mismatch");
            for (m, _) in p.terms() {
                let next = index.len();
                index.entry(m.clone()).or_insert(next);
            }
        }
        let mut monomials = vec![Monomial::one(n); index.len()];
        for (m, &i) in &index {
            monomials[i] = m.clone();
        }
        let mut max_z = vec![0u8; n];
        let mut max_zbar = vec![0u8; n];
        for m in &monomials {
            for j in 0..n {
                max_z[j] = max_z[j].max(m.z[j]);
                max_zbar[j] = max_zbar[j].max(m.zbar[j]);
            }
        }
        let rows = polys
            .iter()
            .map(|p| p.terms().map(|(m, c)| (index[m], *c)).collect())
            .collect();
        PolySet {
            n,
            monomials,
            max_z,
            max_zbar,
            rows,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Values of every polynomial at `z`, written into `out`. `scratch` is
    /// reused between calls to avoid allocation in quadrature loops.
    pub fn eval_into(&self, z: &[C64], scratch: &mut Vec<C64>, out: &mut [C64]) {
        assert_eq!(z.len(), self.n);
        assert_eq!(out.len(), self.rows.len());
        let pz = power_table(z, &self.max_z, false);
        let pzb = power_table(z, &self.max_zbar, true);
        scratch.clear();
        for m in &self.monomials {
            let mut v = C64::new(1.0, 0.0);
            for j in 0..self.n {
                if m.z[j] > 0 {
                    v *= pz[j][m.z[j] as usize];
                }
                if m.zbar[j] > 0 {
                    v *= pzb[j][m.zbar[j] as usize];
                }
            }
            scratch.push(v);
        }
        for (row, o) in self.rows.iter().zip(out.iter_mut()) {
            *o = row.iter().map(|&(i, c)| c * scratch[i]).sum();
        }
    }

    pub fn eval(&self, z: &[C64]) -> Vec<C64> {
        let mut scratch = Vec::with_capacity(self.monomials.len());
        let mut out = vec![C64::new(0.0, 0.0); self.rows.len()];
        self.eval_into(z, &mut scratch, &mut out);
        out
    }
}

//! Strictly increasing multi-indices and the sign `ε^{jI}_J`.

use std::collections::HashMap;

/// All strictly increasing multi-indices of length `q` drawn from
/// `0..n`, in lexicographic order.
#[derive(Clone, Debug)]
pub struct MultiIndexAlg {
    n: usize,
    q: usize,
    indices: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
}

impl MultiIndexAlg {
    /// Returns `None` when `q > n`.
    pub fn new(n: usize, q: usize) -> Option<Self> {
        if q > n {
            return None;
        }
        let mut indices = Vec::new();
        let mut current = Vec::with_capacity(q);
        combinations(n, q, 0, &mut current, &mut indices);
        let lookup = indices.iter().enumerate().map(|(i, ix)| (ix.clone(), i)).collect();
        Some(MultiIndexAlg {
            n,
            q,
            indices,
            lookup,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    /// Position of an increasing multi-index.
    pub fn position(&self, ix: &[usize]) -> Option<usize> {
        self.lookup.get(ix).copied()
    }
}

fn combinations(n: usize, q: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() == q {
        out.push(current.clone());
        return;
    }
    for j in start..n {
        current.push(j);
        combinations(n, q, j + 1, current, out);
        current.pop();
    }
}

/// `ε^{jI}_J`: the sign of the permutation taking `(j, i_1, ..., i_{q-1})`
/// to the increasing `J`, or `0` when `j ∈ I` or `{j} ∪ I ≠ J`. `I` and `J`
/// must be strictly increasing.
pub fn epsilon(j: usize, i: &[usize], k: &[usize]) -> i8 {
    if k.len() != i.len() + 1 || i.contains(&j) || !k.contains(&j) {
        return 0;
    }
    if !i.iter().all(|a| k.contains(a)) {
        return 0;
    }
    let before = i.iter().filter(|&&a| a < j).count();
    if before % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Inserts `j` into the increasing `i`, returning the increasing union and
/// `ε^{jI}_{J}`, or `None` if `j ∈ I`.
pub fn insert(j: usize, i: &[usize]) -> Option<(Vec<usize>, i8)> {
    if i.contains(&j) {
        return None;
    }
    let pos = i.iter().filter(|&&a| a < j).count();
    let mut k = i.to_vec();
    k.insert(pos, j);
    Some((k, if pos % 2 == 0 { 1 } else { -1 }))
}

//! Sparse `LDLᵀ` factorization of the normal matrix `A·W·Aᵀ` for arbitrary `A`.
//!
//! The sparsity pattern of `A·W·Aᵀ` does not depend on the positive weights
//! `W`, so ordering, symbolic analysis and the mapping from `A`'s column
//! products to matrix slots are computed once; each [`SparseLdl::factor`]
//! call only redoes the numeric phase (up-looking, row by row of `L`).

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::lp::SparseLp;

use super::{NormalSolver, PivotFailure};

const NONE: usize = usize::MAX;
const PIVOT_TOL: f64 = 1e-13;

/// Minimum-degree elimination order of a symmetric adjacency structure.
///
/// Ties go to the lowest node index so the order is deterministic.
pub(crate) fn minimum_degree(adjacency: &[BTreeSet<usize>]) -> Vec<usize> {
    let n = adjacency.len();
    let mut adj: Vec<BTreeSet<usize>> = adjacency.to_vec();
    let mut eliminated = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n).map(|v| Reverse((adj[v].len(), v))).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse((deg, v))) = heap.pop() {
        if eliminated[v] || deg != adj[v].len() {
            continue;
        }
        eliminated[v] = true;
        order.push(v);
        let neighbours: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
        for &u in &neighbours {
            adj[u].remove(&v);
            for &w in &neighbours {
                if w != u {
                    adj[u].insert(w);
                }
            }
            heap.push(Reverse((adj[u].len(), u)));
        }
    }
    order
}

/// Normal-equation solver for a general sparse `A`.
#[derive(Debug, Clone)]
pub struct SparseLdl {
    n: usize,
    perm: Vec<usize>,
    /// Upper-triangular CSC pattern of the permuted matrix.
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// `(slot, coefficient, A column)`: `values[slot] += coefficient · w[column]`.
    contributions: Vec<(usize, f64, usize)>,
    diag_slot: Vec<usize>,
    parent: Vec<usize>,
    l_ptr: Vec<usize>,
    values: Vec<f64>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    d: Vec<f64>,
}

impl SparseLdl {
    pub fn new(lp: &SparseLp) -> Self {
        let a = &lp.a;
        let n = a.rows();
        let mut adjacency = vec![BTreeSet::new(); n];
        for j in 0..a.cols() {
            let rows: Vec<usize> = a.col(j).map(|(i, _)| i).collect();
            for &p in &rows {
                for &q in &rows {
                    if p != q {
                        adjacency[p].insert(q);
                    }
                }
            }
        }
        let order = minimum_degree(&adjacency);
        let mut perm = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            perm[old] = new;
        }

        // Upper pattern (row <= col) in permuted indices, diagonal always present.
        let mut cols: Vec<BTreeSet<usize>> = (0..n).map(|k| BTreeSet::from([k])).collect();
        for (old, nbrs) in adjacency.iter().enumerate() {
            for &other in nbrs {
                let (r, c) = (perm[old], perm[other]);
                if r < c {
                    cols[c].insert(r);
                }
            }
        }
        let mut col_ptr = vec![0; n + 1];
        let mut row_idx = Vec::new();
        for (k, rows) in cols.iter().enumerate() {
            row_idx.extend(rows.iter().copied());
            col_ptr[k + 1] = row_idx.len();
        }
        let slot = |r: usize, c: usize| -> usize {
            let span = &row_idx[col_ptr[c]..col_ptr[c + 1]];
            col_ptr[c] + span.binary_search(&r).expect("pattern covers every product")
        };
        let diag_slot: Vec<usize> = (0..n).map(|k| slot(k, k)).collect();
        let mut contributions = Vec::new();
        for j in 0..a.cols() {
            let entries: Vec<(usize, f64)> = a.col(j).map(|(i, v)| (perm[i], v)).collect();
            for &(p, vp) in &entries {
                for &(q, vq) in &entries {
                    if p <= q {
                        contributions.push((slot(p, q), vp * vq, j));
                    }
                }
            }
        }

        let (parent, l_ptr) = symbolic(n, &col_ptr, &row_idx);
        let nnz_l = l_ptr[n];
        Self {
            n,
            perm,
            values: vec![0.0; row_idx.len()],
            col_ptr,
            row_idx,
            contributions,
            diag_slot,
            parent,
            l_ptr,
            l_idx: vec![0; nnz_l],
            l_val: vec![0.0; nnz_l],
            d: vec![0.0; n],
        }
    }

    /// Number of stored entries in `L` (excluding the unit diagonal).
    pub fn factor_nnz(&self) -> usize {
        self.l_ptr[self.n]
    }

    fn numeric(&mut self) -> Result<(), PivotFailure> {
        let n = self.n;
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let max_diag = self.diag_slot.iter().map(|&s| self.values[s]).fold(0.0, f64::max);
        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for p in self.col_ptr[k]..self.col_ptr[k + 1] {
                let mut i = self.row_idx[p];
                y[i] += self.values[p];
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = self.parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            let mut dk = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let start = self.l_ptr[i];
                let end = start + lnz[i];
                for p in start..end {
                    y[self.l_idx[p]] -= self.l_val[p] * yi;
                }
                let l_ki = yi / self.d[i];
                dk -= l_ki * yi;
                self.l_idx[end] = k;
                self.l_val[end] = l_ki;
                lnz[i] += 1;
            }
            if !(dk > PIVOT_TOL * max_diag) || !dk.is_finite() {
                return Err(PivotFailure { index: k });
            }
            self.d[k] = dk;
        }
        Ok(())
    }
}

/// Elimination tree and column pointers of `L` for an upper CSC pattern.
fn symbolic(n: usize, col_ptr: &[usize], row_idx: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut parent = vec![NONE; n];
    let mut flag = vec![NONE; n];
    let mut counts = vec![0usize; n];
    for k in 0..n {
        flag[k] = k;
        for &row in &row_idx[col_ptr[k]..col_ptr[k + 1]] {
            let mut i = row;
            if i >= k {
                continue;
            }
            while flag[i] != k {
                if parent[i] == NONE {
                    parent[i] = k;
                }
                counts[i] += 1;
                flag[i] = k;
                i = parent[i];
            }
        }
    }
    let mut l_ptr = vec![0; n + 1];
    for k in 0..n {
        l_ptr[k + 1] = l_ptr[k] + counts[k];
    }
    (parent, l_ptr)
}

impl NormalSolver for SparseLdl {
    fn factor_with(&mut self, _lp: &SparseLp, weights: &[f64], delta: f64) -> Result<(), PivotFailure> {
        self.values.iter_mut().for_each(|v| *v = 0.0);
        for &(slot, coef, j) in &self.contributions {
            self.values[slot] += coef * weights[j];
        }
        if delta != 0.0 {
            for &s in &self.diag_slot {
                self.values[s] += delta;
            }
        }
        self.numeric()
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for (old, &new) in self.perm.iter().enumerate() {
            x[new] = rhs[old];
        }
        for j in 0..n {
            let xj = x[j];
            for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                x[self.l_idx[p]] -= self.l_val[p] * xj;
            }
        }
        for j in 0..n {
            x[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for p in self.l_ptr[j]..self.l_ptr[j + 1] {
                s -= self.l_val[p] * x[self.l_idx[p]];
            }
            x[j] = s;
        }
        self.perm.iter().map(|&new| x[new]).collect()
    }

    fn name(&self) -> &'static str {
        "sparse-ldl"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_normal(lp: &SparseLp, w: &[f64]) -> Vec<Vec<f64>> {
        let m = lp.m();
        let mut out = vec![vec![0.0; m]; m];
        for j in 0..lp.n() {
            let col: Vec<(usize, f64)> = lp.a.col(j).collect();
            for &(p, vp) in &col {
                for &(q, vq) in &col {
                    out[p][q] += vp * vq * w[j];
                }
            }
        }
        out
    }

    #[test]
    fn arrowhead_is_ordered_without_fill() {
        // Hub node 0 connected to 1..5: leaves go first, the hub only once it
        // is down to a single neighbour.
        let mut adj = vec![BTreeSet::new(); 6];
        for leaf in 1..6 {
            adj[0].insert(leaf);
            adj[leaf].insert(0);
        }
        let order = minimum_degree(&adj);
        assert!(order.iter().position(|&v| v == 0).unwrap() >= 4);
        assert_eq!(order.len(), 6);
    }

    #[test]
    fn solves_normal_equations() {
        let triplets = vec![
            (0, 0, 1.0),
            (0, 1, 2.0),
            (0, 4, -1.0),
            (1, 1, 1.0),
            (1, 2, 3.0),
            (2, 2, -1.0),
            (2, 3, 1.0),
            (2, 0, 0.5),
            (3, 4, 2.0),
            (3, 5, 1.0),
        ];
        let lp = SparseLp::from_triplets(4, 6, &triplets, vec![0.0; 4], vec![0.0; 6]).unwrap();
        let w = [0.5, 2.0, 1.5, 0.1, 3.0, 0.7];
        let mut ldl = SparseLdl::new(&lp);
        ldl.factor_with(&lp, &w, 0.0).unwrap();
        let rhs = [1.0, -2.0, 0.5, 3.0];
        let y = ldl.solve(&rhs);
        let m = dense_normal(&lp, &w);
        for i in 0..4 {
            let r: f64 = (0..4).map(|k| m[i][k] * y[k]).sum();
            assert!((r - rhs[i]).abs() < 1e-12, "row {i}: {r}");
        }
    }

    #[test]
    fn rank_deficient_matrix_fails_pivot() {
        let triplets = vec![(0, 0, 1.0), (1, 0, 1.0)];
        let lp = SparseLp::from_triplets(2, 1, &triplets, vec![0.0; 2], vec![0.0]).unwrap();
        let mut ldl = SparseLdl::new(&lp);
        assert!(ldl.factor_with(&lp, &[1.0], 0.0).is_err());
        assert!(ldl.factor_with(&lp, &[1.0], 1e-8).is_ok());
    }
}

//! Normal-equation solver specialised to the snake LP layout.
//!
//! With weights `w = x²`, the normal matrix `A·W·Aᵀ` of the snake LP splits as
//! `S + V·diag(w_P)·Vᵀ`:
//!
//! * `S` is block diagonal with one arrowhead block per sample point `t`:
//!   the coverage row `t` (diagonal `Σ_k (w_a + w_b) + w_e`) bordered by the
//!   `K` link rows `(t, k)` (diagonal `w_a + w_b`, coupling `w_a − w_b`);
//! * `V` has a single 1 per link row, in the column of its snake point `k`,
//!   so the `P(k)` columns couple every link row sharing the same `k`.
//!
//! Each `S` block is solved in `O(K)` and the coupling is handled through the
//! `K×K` capacitance matrix `C = diag(1/w_P) + Vᵀ S⁻¹ V`, which is dense but
//! small. Forming `C` costs `O(T·K²)` per factorization instead of the
//! `O(K·T²)` fill a general sparse factorization would incur.

use crate::lp::SparseLp;
use crate::lpbuild::VarColumns;

use super::dense::{cholesky_in_place, cholesky_solve};
use super::{NormalSolver, PivotFailure};

#[derive(Debug, Clone)]
pub struct SnakeNormal {
    layout: VarColumns,
    inv_s: Vec<f64>,
    q: Vec<f64>,
    sigma: Vec<f64>,
    capacitance: Vec<f64>,
}

impl SnakeNormal {
    pub fn new(layout: VarColumns) -> Self {
        let (k, t) = (layout.k, layout.t);
        Self {
            layout,
            inv_s: vec![0.0; k * t],
            q: vec![0.0; k * t],
            sigma: vec![0.0; t],
            capacitance: vec![0.0; k * k],
        }
    }

    /// Returns a solver when `lp` has exactly the snake constraint pattern for
    /// the given `k` and `t`.
    pub fn detect(lp: &SparseLp, k: usize, t: usize) -> Option<Self> {
        let layout = VarColumns { k, t };
        if k == 0 || t == 0 || lp.m() != layout.m() || lp.n() != layout.n() {
            return None;
        }
        for ti in 0..t {
            let mut expected: Vec<(usize, f64)> = (0..k)
                .flat_map(|ki| [(layout.a(ti, ki), 1.0), (layout.b(ti, ki), 1.0)])
                .chain([(layout.e(ti), -1.0)])
                .collect();
            expected.sort_by_key(|e| e.0);
            if !lp.a.row(layout.coverage_row(ti)).eq(expected) {
                return None;
            }
            for ki in 0..k {
                let expected = [(layout.a(ti, ki), 1.0), (layout.b(ti, ki), -1.0), (layout.p(ki), 1.0)];
                if !lp.a.row(layout.link_row(ti, ki)).eq(expected) {
                    return None;
                }
            }
        }
        Some(Self::new(layout))
    }

    pub fn layout(&self) -> VarColumns {
        self.layout
    }

    /// Solves `S z = r` block by block, writing into `z`.
    fn solve_blocks(&self, coverage: &[f64], link: &[f64], z_cov: &mut [f64], z_link: &mut [f64]) {
        let k = self.layout.k;
        for ti in 0..self.layout.t {
            let span = ti * k..(ti + 1) * k;
            let q = &self.q[span.clone()];
            let inv_s = &self.inv_s[span.clone()];
            let r1 = &link[span.clone()];
            let qr: f64 = q.iter().zip(r1).map(|(a, b)| a * b).sum();
            let z0 = (coverage[ti] - qr) / self.sigma[ti];
            z_cov[ti] = z0;
            for (((z, &r), &is), &qk) in z_link[span].iter_mut().zip(r1).zip(inv_s).zip(q) {
                *z = r * is - qk * z0;
            }
        }
    }
}

impl NormalSolver for SnakeNormal {
    /// Link rows absorb their residual in `b` (or `a`), then coverage rows in
    /// `e` (or `a` and `b` together, which leaves the link rows unchanged).
    fn repair(&self, lp: &SparseLp, x: &mut [f64]) -> bool {
        let lay = self.layout;
        if lp.n() != lay.n() || x.len() != lay.n() {
            return false;
        }
        for ti in 0..lay.t {
            for ki in 0..lay.k {
                let (a, b) = (lay.a(ti, ki), lay.b(ti, ki));
                let r = x[a] - x[b] + x[lay.p(ki)] - lp.b[lay.link_row(ti, ki)];
                if r > 0.0 {
                    x[b] += r;
                } else {
                    x[a] -= r;
                }
            }
            let sum: f64 = (0..lay.k).map(|ki| x[lay.a(ti, ki)] + x[lay.b(ti, ki)]).sum();
            let r = sum - x[lay.e(ti)] - lp.b[lay.coverage_row(ti)];
            if r > 0.0 {
                x[lay.e(ti)] += r;
            } else {
                let share = -r / (2 * lay.k) as f64;
                for ki in 0..lay.k {
                    x[lay.a(ti, ki)] += share;
                    x[lay.b(ti, ki)] += share;
                }
            }
        }
        true
    }

    fn factor_with(&mut self, _lp: &SparseLp, w: &[f64], delta: f64) -> Result<(), PivotFailure> {
        let VarColumns { k, t } = self.layout;
        let lay = self.layout;
        let cap = &mut self.capacitance;
        cap.iter_mut().for_each(|v| *v = 0.0);
        for ki in 0..k {
            let wp = w[lay.p(ki)];
            if !(wp > 0.0) {
                return Err(PivotFailure { index: lay.m() });
            }
            cap[ki * k + ki] = 1.0 / wp;
        }
        for ti in 0..t {
            let mut sigma = w[lay.e(ti)] + delta;
            for ki in 0..k {
                let (wa, wb) = (w[lay.a(ti, ki)], w[lay.b(ti, ki)]);
                let s = wa + wb + delta;
                if !(s > 0.0) || !s.is_finite() {
                    return Err(PivotFailure {
                        index: lay.link_row(ti, ki),
                    });
                }
                let idx = ti * k + ki;
                self.inv_s[idx] = 1.0 / s;
                self.q[idx] = (wa - wb) / s;
                // h − g²/s written without cancellation.
                sigma += (4.0 * wa * wb + delta * (wa + wb)) / s;
            }
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(PivotFailure {
                    index: lay.coverage_row(ti),
                });
            }
            self.sigma[ti] = sigma;
            let inv_sigma = 1.0 / sigma;
            let q = &self.q[ti * k..(ti + 1) * k];
            let inv_s = &self.inv_s[ti * k..(ti + 1) * k];
            for i in 0..k {
                let qi = q[i] * inv_sigma;
                let row = &mut cap[i * k..i * k + i + 1];
                for (c, &qj) in row.iter_mut().zip(q) {
                    *c += qi * qj;
                }
                cap[i * k + i] += inv_s[i];
            }
        }
        cholesky_in_place(cap, k, 1e-15).map_err(|i| PivotFailure { index: lay.p(i) })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let VarColumns { k, t } = self.layout;
        let (coverage, link) = rhs.split_at(t);
        let mut y = vec![0.0; rhs.len()];
        {
            let (y_cov, y_link) = y.split_at_mut(t);
            self.solve_blocks(coverage, link, y_cov, y_link);
        }
        // Woodbury correction through the capacitance matrix.
        let mut u = vec![0.0; k];
        for chunk in y[t..].chunks_exact(k) {
            for (uk, zk) in u.iter_mut().zip(chunk) {
                *uk += zk;
            }
        }
        cholesky_solve(&self.capacitance, k, &mut u);
        let zeros = vec![0.0; t];
        let spread: Vec<f64> = (0..t * k).map(|i| u[i % k]).collect();
        let mut w_cov = vec![0.0; t];
        let mut w_link = vec![0.0; t * k];
        self.solve_blocks(&zeros, &spread, &mut w_cov, &mut w_link);
        for (yi, wi) in y[..t].iter_mut().zip(&w_cov) {
            *yi -= wi;
        }
        for (yi, wi) in y[t..].iter_mut().zip(&w_link) {
            *yi -= wi;
        }
        y
    }

    fn name(&self) -> &'static str {
        "snake-structured"
    }
}

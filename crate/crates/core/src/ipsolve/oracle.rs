//! Exhaustive basis enumeration for tiny LPs, used as a reference in tests.

use itertools::Itertools;

use crate::lp::{dot, SparseLp};

use super::dense::lu_solve;
use super::{SolveError, SolveOutcome, Status};

pub const ORACLE_MAX_N: usize = 14;
pub const ORACLE_MAX_M: usize = 8;

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;

fn dense(lp: &SparseLp) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![0.0; lp.n()]; lp.m()];
    for (i, j, v) in lp.a.triplets() {
        rows[i][j] = v;
    }
    rows
}

/// Drops linearly dependent rows of `[A | b]`. Fails when a dependent row
/// contradicts the others.
fn independent_rows(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<usize>, SolveError> {
    let n = a.first().map_or(0, Vec::len);
    let scale = a.iter().flatten().chain(b).fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut basis: Vec<(Vec<f64>, f64, usize)> = Vec::new();
    let mut keep = Vec::new();
    for (i, (row, &rhs)) in a.iter().zip(b).enumerate() {
        let mut r = row.clone();
        let mut s = rhs;
        for (brow, bs, pivot) in &basis {
            let f = r[*pivot] / brow[*pivot];
            if f != 0.0 {
                for k in 0..n {
                    r[k] -= f * brow[k];
                }
                s -= f * bs;
            }
        }
        let pivot = (0..n).max_by(|&p, &q| r[p].abs().total_cmp(&r[q].abs()));
        match pivot {
            Some(p) if r[p].abs() > PIVOT_TOL * scale => {
                basis.push((r, s, p));
                keep.push(i);
            }
            _ if s.abs() > FEAS_TOL * scale => return Err(SolveError::InfeasibleProblem),
            _ => {}
        }
    }
    Ok(keep)
}

/// Minimum-cost vertex by enumerating every basis of `m` columns.
pub fn oracle_solve(lp: &SparseLp) -> Result<SolveOutcome, SolveError> {
    let (m, n) = (lp.m(), lp.n());
    if n > ORACLE_MAX_N || m > ORACLE_MAX_M {
        return Err(SolveError::TooLarge {
            m,
            n,
            max_m: ORACLE_MAX_M,
            max_n: ORACLE_MAX_N,
        });
    }
    let full = dense(lp);
    let keep = independent_rows(&full, &lp.b)?;
    let rows: Vec<&Vec<f64>> = keep.iter().map(|&i| &full[i]).collect();
    let a = &rows;
    let b: Vec<f64> = keep.iter().map(|&i| lp.b[i]).collect();
    let r = keep.len();
    let b_scale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));

    let basis_matrix =
        |cols: &[usize]| -> Vec<f64> { (0..r).flat_map(|i| cols.iter().map(move |&j| a[i][j])).collect() };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut has_ray = false;
    for cols in (0..n).combinations(r) {
        let bm = basis_matrix(&cols);
        let Some(xb) = lu_solve(bm.clone(), r, b.clone(), PIVOT_TOL) else {
            continue;
        };
        if xb.iter().all(|&v| v >= -FEAS_TOL * b_scale) {
            let mut x = vec![0.0; n];
            for (&j, &v) in cols.iter().zip(&xb) {
                x[j] = v.max(0.0);
            }
            let obj = dot(&lp.c, &x);
            if best.as_ref().is_none_or(|(o, _)| obj < *o) {
                best = Some((obj, x));
            }
        }
        // Extreme rays of {d ≥ 0, A d = 0}: one nonbasic column entering.
        if !has_ray {
            for j in (0..n).filter(|j| !cols.contains(j)) {
                let aj: Vec<f64> = (0..r).map(|i| a[i][j]).collect();
                let Some(u) = lu_solve(bm.clone(), r, aj, PIVOT_TOL) else {
                    continue;
                };
                if u.iter().all(|&v| v <= FEAS_TOL) {
                    let mut d = vec![0.0; n];
                    d[j] = 1.0;
                    for (&col, &v) in cols.iter().zip(&u) {
                        d[col] = -v;
                    }
                    if dot(&lp.c, &d) < -FEAS_TOL {
                        has_ray = true;
                        break;
                    }
                }
            }
        }
    }
    if r == 0 {
        has_ray = lp.c.iter().any(|&c| c < 0.0);
    }
    match best {
        None => Err(SolveError::InfeasibleProblem),
        Some(_) if has_ray => Err(SolveError::UnboundedDetected),
        Some((objective, x)) => Ok(SolveOutcome {
            status: Status::Converged,
            objective,
            iterations: 0,
            trace: Vec::new(),
            x_final: x,
        }),
    }
}

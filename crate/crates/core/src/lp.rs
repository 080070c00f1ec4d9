//! Sparse standard-form linear programs: minimize `c·x` subject to `Ax = b`, `x ≥ 0`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpFormatError {
    #[error("triplet ({row}, {col}) outside a {m}x{n} matrix")]
    OutOfRange { row: usize, col: usize, m: usize, n: usize },
    #[error("duplicate triplet at ({row}, {col})")]
    Duplicate { row: usize, col: usize },
    #[error("vector {name} has length {got}, expected {expected}")]
    Length {
        name: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// Compressed sparse row matrix with a column-major mirror for `Aᵀ` products.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    col_values: Vec<f64>,
}

impl SparseMatrix {
    /// Assembles from `(row, col, value)` triplets; repeated positions are rejected.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, LpFormatError> {
        for &(r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(LpFormatError::OutOfRange {
                    row: r,
                    col: c,
                    m: rows,
                    n: cols,
                });
            }
            if !v.is_finite() {
                return Err(LpFormatError::NonFinite("A"));
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_unstable_by_key(|&i| (triplets[i].0, triplets[i].1));
        for w in order.windows(2) {
            let (a, b) = (triplets[w[0]], triplets[w[1]]);
            if a.0 == b.0 && a.1 == b.1 {
                return Err(LpFormatError::Duplicate { row: a.0, col: a.1 });
            }
        }
        let mut row_ptr = vec![0; rows + 1];
        for &(r, _, _) in triplets {
            row_ptr[r + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = order.iter().map(|&i| triplets[i].1).collect();
        let values = order.iter().map(|&i| triplets[i].2).collect();

        let mut col_order: Vec<usize> = (0..triplets.len()).collect();
        col_order.sort_unstable_by_key(|&i| (triplets[i].1, triplets[i].0));
        let mut col_ptr = vec![0; cols + 1];
        for &(_, c, _) in triplets {
            col_ptr[c + 1] += 1;
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let row_idx = col_order.iter().map(|&i| triplets[i].0).collect();
        let col_values = col_order.iter().map(|&i| triplets[i].2).collect();
        Ok(Self {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
            col_ptr,
            row_idx,
            col_values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `i` as `(col, value)` pairs, columns ascending.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Entries of column `j` as `(row, value)` pairs, rows ascending.
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.col_values[span].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.rows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn mul_t_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        (0..self.cols)
            .map(|j| self.col(j).map(|(i, v)| v * y[i]).sum())
            .collect()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn row_is_empty(&self, i: usize) -> bool {
        self.row(i).all(|(_, v)| v == 0.0)
    }
}

/// Standard-form LP with sparse constraint matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLp {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl SparseLp {
    pub fn new(a: SparseMatrix, b: Vec<f64>, c: Vec<f64>) -> Result<Self, LpFormatError> {
        if b.len() != a.rows() {
            return Err(LpFormatError::Length {
                name: "b",
                got: b.len(),
                expected: a.rows(),
            });
        }
        if c.len() != a.cols() {
            return Err(LpFormatError::Length {
                name: "c",
                got: c.len(),
                expected: a.cols(),
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(LpFormatError::NonFinite("b"));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(LpFormatError::NonFinite("c"));
        }
        Ok(Self { a, b, c })
    }

    pub fn from_triplets(
        m: usize,
        n: usize,
        triplets: &[(usize, usize, f64)],
        b: Vec<f64>,
        c: Vec<f64>,
    ) -> Result<Self, LpFormatError> {
        Self::new(SparseMatrix::from_triplets(m, n, triplets)?, b, c)
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.c, x)
    }

    /// `‖Ax − b‖∞`.
    pub fn residual_inf(&self, x: &[f64]) -> f64 {
        self.a
            .mul_vec(x)
            .iter()
            .zip(&self.b)
            .map(|(ax, b)| (ax - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn b_norm_inf(&self) -> f64 {
        norm_inf(&self.b)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Model constants carried alongside an LP dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpConstants {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub c: Vec<f64>,
}

/// JSON form `{m, n, triplets, b, c, constants, x0}`; `triplets` is a list of
/// `[row, col, value]` arrays, `constants` may be `null` for LPs that did not
/// come from the snake model and the optional `x0` is a strictly positive
/// feasible starting point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpDump {
    pub m: usize,
    pub n: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(default)]
    pub constants: Option<DumpConstants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
}

impl LpDump {
    pub fn from_lp(lp: &SparseLp, constants: Option<DumpConstants>) -> Self {
        Self {
            m: lp.m(),
            n: lp.n(),
            triplets: lp.a.triplets(),
            b: lp.b.clone(),
            c: lp.c.clone(),
            constants,
            x0: None,
        }
    }

    pub fn to_lp(&self) -> Result<SparseLp, LpFormatError> {
        SparseLp::from_triplets(self.m, self.n, &self.triplets, self.b.clone(), self.c.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_match_dense() {
        let t = [(0, 0, 1.0), (0, 2, 2.0), (1, 1, -3.0), (2, 0, 4.0), (2, 2, 5.0)];
        let a = SparseMatrix::from_triplets(3, 3, &t).unwrap();
        assert_eq!(a.mul_vec(&[1.0, 2.0, 3.0]), vec![7.0, -6.0, 19.0]);
        assert_eq!(a.mul_t_vec(&[1.0, 1.0, 1.0]), vec![5.0, -3.0, 7.0]);
        assert_eq!(a.norm_inf(), 9.0);
        assert_eq!(a.nnz(), 5);
    }

    #[test]
    fn duplicates_and_range_are_rejected() {
        assert_eq!(
            SparseMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.0)]),
            Err(LpFormatError::Duplicate { row: 0, col: 1 })
        );
        assert!(matches!(
            SparseMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]),
            Err(LpFormatError::OutOfRange { .. })
        ));
    }

    #[test]
    fn dump_json_round_trip() {
        let lp = SparseLp::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)], vec![1.0], vec![1.0, 0.0]).unwrap();
        let dump = LpDump::from_lp(&lp, None);
        let text = serde_json::to_string(&dump).unwrap();
        assert!(text.contains("\"triplets\":[[0,0,1.0],[0,1,1.0]]"));
        let back: LpDump = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_lp().unwrap(), lp);
        let bare: LpDump =
            serde_json::from_str(r#"{"m":1,"n":2,"triplets":[[0,0,1],[0,1,1]],"b":[1],"c":[1,0]}"#).unwrap();
        assert_eq!(bare.to_lp().unwrap(), lp);
    }
}

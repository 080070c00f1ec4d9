//! The snake model as a standard-form LP.
//!
//! For `T` sample values `P_t`, `M` of them edge points, and `K` snake values
//! `P_k`, the model minimizes `Σ_t c_t Σ_k |P_t − P_k|`. Each absolute value is
//! split as `a(t,k) − b(t,k) = P_t − P_k` with `a, b ≥ 0`, and a surplus `e(t)`
//! turns the per-point coverage requirement into an equality:
//!
//! ```text
//! Σ_k (a(t,k) + b(t,k)) − e(t) = K·R − K²·c_t      one row per t
//! a(t,k) − b(t,k) + P(k)       = P_t               one row per (t,k)
//! ```
//!
//! Columns are laid out as all `a` (t-major), all `b`, all `e`, then all `P`;
//! the coverage rows come first, followed by the link rows in t-major order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edgemap::PointSample;
use crate::lp::{DumpConstants, LpDump, SparseLp};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpBuildError {
    #[error("sample values are all equal; the value range R is zero")]
    DegenerateEdgeMap,
    #[error("snake count must be at least 1")]
    ZeroK,
    #[error("snake count {k} exceeds the {t} sample points")]
    KTooLarge { k: usize, t: usize },
    #[error("expected {expected} snake values, got {got}")]
    SnakeLength { expected: usize, got: usize },
    #[error("snake value {index} is not strictly positive")]
    ZeroSnakeValue { index: usize },
    #[error("epsilon must be positive and finite")]
    BadEpsilon,
    #[error("initial point component {index} is {value} (epsilon too small)")]
    NonPositiveComponent { index: usize, value: f64 },
}

/// `R`, `K`, `M` and the per-point weights `c_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConstants {
    pub r: f64,
    pub k: usize,
    pub m: usize,
    pub c: Vec<f64>,
}

impl ModelConstants {
    pub fn new(sample: &PointSample, k: usize) -> Result<Self, LpBuildError> {
        if k == 0 {
            return Err(LpBuildError::ZeroK);
        }
        let r = compute_r(sample)?;
        Ok(Self {
            r,
            k,
            m: sample.m(),
            c: compute_ct(sample, r, k),
        })
    }

    /// Right-hand side of coverage row `t`.
    pub fn coverage_rhs(&self, t: usize) -> f64 {
        let k = self.k as f64;
        k * self.r - k * k * self.c[t]
    }
}

/// Largest absolute difference between any two sample values.
pub fn compute_r(sample: &PointSample) -> Result<f64, LpBuildError> {
    let (lo, hi) = sample
        .points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.value), hi.max(p.value))
        });
    let r = hi - lo;
    if !(r > 0.0) {
        return Err(LpBuildError::DegenerateEdgeMap);
    }
    Ok(r)
}

fn mean_abs_dev(p: f64, others: &[f64]) -> f64 {
    others.iter().map(|q| (p - q).abs()).sum::<f64>() / others.len() as f64
}

/// `c_t = (R − mean_m |P_t − P_m|) / K` over the edge points `m`.
pub fn compute_ct(sample: &PointSample, r: f64, k: usize) -> Vec<f64> {
    let edges = sample.edge_values();
    sample
        .points
        .iter()
        .map(|p| (r - mean_abs_dev(p.value, &edges)) / k as f64)
        .collect()
}

/// Affinity of every sample point to the edge set (`ve`) and the snake (`vs`).
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeAffinity {
    pub ve: Vec<f64>,
    pub vs: Vec<f64>,
}

pub fn edge_affinity(sample: &PointSample, r: f64, snake: &[f64]) -> EdgeAffinity {
    let edges = sample.edge_values();
    let (ve, vs) = sample
        .points
        .iter()
        .map(|p| (r - mean_abs_dev(p.value, &edges), r - mean_abs_dev(p.value, snake)))
        .unzip();
    EdgeAffinity { ve, vs }
}

/// Identity of one LP column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    A { t: usize, k: usize },
    B { t: usize, k: usize },
    E { t: usize },
    P { k: usize },
}

/// Column and row numbering for `K` snake points and `T` sample points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarColumns {
    pub k: usize,
    pub t: usize,
}

impl VarColumns {
    pub fn n(&self) -> usize {
        2 * self.k * self.t + self.k + self.t
    }

    pub fn m(&self) -> usize {
        self.k * self.t + self.t
    }

    pub fn a(&self, t: usize, k: usize) -> usize {
        t * self.k + k
    }

    pub fn b(&self, t: usize, k: usize) -> usize {
        self.k * self.t + t * self.k + k
    }

    pub fn e(&self, t: usize) -> usize {
        2 * self.k * self.t + t
    }

    pub fn p(&self, k: usize) -> usize {
        2 * self.k * self.t + self.t + k
    }

    pub fn coverage_row(&self, t: usize) -> usize {
        t
    }

    pub fn link_row(&self, t: usize, k: usize) -> usize {
        self.t + t * self.k + k
    }

    pub fn encode(&self, var: Var) -> usize {
        match var {
            Var::A { t, k } => self.a(t, k),
            Var::B { t, k } => self.b(t, k),
            Var::E { t } => self.e(t),
            Var::P { k } => self.p(k),
        }
    }

    pub fn decode(&self, col: usize) -> Option<Var> {
        let kt = self.k * self.t;
        let var = if col < kt {
            Var::A {
                t: col / self.k,
                k: col % self.k,
            }
        } else if col < 2 * kt {
            let i = col - kt;
            Var::B {
                t: i / self.k,
                k: i % self.k,
            }
        } else if col < 2 * kt + self.t {
            Var::E { t: col - 2 * kt }
        } else if col < self.n() {
            Var::P {
                k: col - 2 * kt - self.t,
            }
        } else {
            return None;
        };
        Some(var)
    }
}

/// The assembled LP with its column map, constants and the sample values.
#[derive(Debug, Clone, PartialEq)]
pub struct LpStandardForm {
    pub lp: SparseLp,
    pub columns: VarColumns,
    pub constants: ModelConstants,
    pub values: Vec<f64>,
}

pub fn build_lp(sample: &PointSample, k: usize) -> Result<LpStandardForm, LpBuildError> {
    let constants = ModelConstants::new(sample, k)?;
    Ok(assemble(sample.values(), constants))
}

/// Assembles the LP from explicit sample values and precomputed constants.
pub fn assemble(values: Vec<f64>, constants: ModelConstants) -> LpStandardForm {
    let cols = VarColumns {
        k: constants.k,
        t: values.len(),
    };
    let (kk, tt) = (cols.k, cols.t);
    let mut triplets = Vec::with_capacity(tt * (2 * kk + 1) + 3 * kk * tt);
    let mut b = vec![0.0; cols.m()];
    let mut c = vec![0.0; cols.n()];
    for t in 0..tt {
        let row = cols.coverage_row(t);
        for k in 0..kk {
            triplets.push((row, cols.a(t, k), 1.0));
            triplets.push((row, cols.b(t, k), 1.0));
            c[cols.a(t, k)] = constants.c[t];
            c[cols.b(t, k)] = constants.c[t];
        }
        triplets.push((row, cols.e(t), -1.0));
        b[row] = constants.coverage_rhs(t);
        for k in 0..kk {
            let row = cols.link_row(t, k);
            triplets.push((row, cols.a(t, k), 1.0));
            triplets.push((row, cols.b(t, k), -1.0));
            triplets.push((row, cols.p(k), 1.0));
            b[row] = values[t];
        }
    }
    let lp = SparseLp::from_triplets(cols.m(), cols.n(), &triplets, b, c)
        .expect("snake layout has unique in-range finite entries");
    LpStandardForm {
        lp,
        columns: cols,
        constants,
        values,
    }
}

impl LpStandardForm {
    pub fn dump(&self) -> LpDump {
        LpDump::from_lp(
            &self.lp,
            Some(DumpConstants {
                r: self.constants.r,
                k: self.columns.k,
                t: self.columns.t,
                m: self.constants.m,
                c: self.constants.c.clone(),
            }),
        )
    }

    /// The `P(k)` block of a solution vector.
    pub fn snake_values(&self, x: &[f64]) -> Vec<f64> {
        (0..self.columns.k).map(|k| x[self.columns.p(k)]).collect()
    }

    /// Largest `min(a(t,k), b(t,k))`; zero when every split is complementary.
    pub fn split_gap(&self, x: &[f64]) -> f64 {
        let cols = self.columns;
        (0..cols.t)
            .flat_map(|t| (0..cols.k).map(move |k| (t, k)))
            .map(|(t, k)| x[cols.a(t, k)].min(x[cols.b(t, k)]))
            .fold(0.0, f64::max)
    }

    pub fn initial_point(&self, snake: &[f64], epsilon: f64) -> Result<Vec<f64>, LpBuildError> {
        warm_start(&self.values, &self.constants, snake, epsilon)
    }
}

/// Closed-form strictly positive feasible point for a given snake.
///
/// With `d = max_{k,t} |P_k − P_t| + ε`: `b(t,k) = d`, `a(t,k) = d − (P_k − P_t)`
/// and `e(t)` absorbs the coverage row. Any `ε ≥ R/2` keeps `e(t) > 0`.
pub fn warm_start(
    values: &[f64],
    constants: &ModelConstants,
    snake: &[f64],
    epsilon: f64,
) -> Result<Vec<f64>, LpBuildError> {
    let cols = VarColumns {
        k: constants.k,
        t: values.len(),
    };
    if snake.len() != cols.k {
        return Err(LpBuildError::SnakeLength {
            expected: cols.k,
            got: snake.len(),
        });
    }
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(LpBuildError::BadEpsilon);
    }
    if let Some(index) = snake.iter().position(|&v| !(v > 0.0)) {
        return Err(LpBuildError::ZeroSnakeValue { index });
    }
    let max_diff = snake
        .iter()
        .flat_map(|pk| values.iter().map(move |pt| (pk - pt).abs()))
        .fold(0.0, f64::max);
    let d = max_diff + epsilon;
    let mut x = vec![0.0; cols.n()];
    for (t, &pt) in values.iter().enumerate() {
        let mut coverage = 0.0;
        for (k, &pk) in snake.iter().enumerate() {
            let a = d - (pk - pt);
            x[cols.a(t, k)] = a;
            x[cols.b(t, k)] = d;
            coverage += a + d;
        }
        x[cols.e(t)] = coverage - constants.coverage_rhs(t);
    }
    for (k, &pk) in snake.iter().enumerate() {
        x[cols.p(k)] = pk;
    }
    if let Some(index) = x.iter().position(|&v| !(v > 0.0)) {
        return Err(LpBuildError::NonPositiveComponent { index, value: x[index] });
    }
    Ok(x)
}

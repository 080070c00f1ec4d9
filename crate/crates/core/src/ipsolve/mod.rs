//! Affine-scaling interior-point solver for `min c·x  s.t.  Ax = b, x ≥ 0`.
//!
//! Each iteration rescales by `D = diag(x)`, projects the scaled cost onto the
//! null space of `A·D` and walks along the projected direction with a ratio
//! test that keeps every component strictly positive.

mod dense;
mod ldl;
mod oracle;
mod snake;

use log::{debug, trace, warn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{dot, norm_inf, SparseLp, SparseMatrix};

pub use ldl::SparseLdl;
pub use oracle::{oracle_solve, ORACLE_MAX_M, ORACLE_MAX_N};
pub use snake::SnakeNormal;

const REFINE_STEPS: usize = 6;
const STATIONARY_TOL: f64 = 1e-13;
const NEGATIVE_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("infeasible start: {0}")]
    InfeasibleStart(String),
    #[error("normal matrix is singular beyond regularization (pivot {pivot})")]
    FactorizationFailure { pivot: usize },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("problem too large for the oracle ({m}x{n}, limit {max_m}x{max_n})")]
    TooLarge {
        m: usize,
        n: usize,
        max_m: usize,
        max_n: usize,
    },
    #[error("problem is infeasible")]
    InfeasibleProblem,
    #[error("problem is unbounded below")]
    UnboundedDetected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub alpha: f64,
    pub obj_tol: f64,
    pub feas_tol: f64,
    pub max_iter: usize,
    pub stall_window: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            alpha: 0.95,
            obj_tol: 1e-9,
            feas_tol: 1e-9,
            max_iter: 500,
            stall_window: 3,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |msg: &str| Err(SolveError::InvalidOptions(msg.to_string()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.obj_tol > 0.0) || !(self.feas_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if self.stall_window == 0 {
            return bad("stall_window must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    Converged,
    Unbounded,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpState {
    pub x: Vec<f64>,
    pub iter: usize,
    pub objective: f64,
    pub last_step: f64,
    pub status: Status,
}

impl IpState {
    pub fn new(lp: &SparseLp, x: Vec<f64>) -> Self {
        Self {
            objective: lp.objective(&x),
            x,
            iter: 0,
            last_step: 0.0,
            status: Status::Running,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub objective: f64,
    pub step: f64,
    pub direction_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: Status,
    pub objective: f64,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
    #[serde(rename = "x")]
    pub x_final: Vec<f64>,
}

/// Outcome of the ratio test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    Step(f64),
    Unbounded,
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PivotFailure {
    pub index: usize,
}

/// Factorizes and solves `A·diag(w)·Aᵀ (+ δI)` for a fixed sparsity pattern.
pub trait NormalSolver {
    fn factor_with(&mut self, lp: &SparseLp, weights: &[f64], delta: f64) -> Result<(), PivotFailure>;
    fn solve(&self, rhs: &[f64]) -> Vec<f64>;
    fn name(&self) -> &'static str;
    /// Restores `Ax = b` by raising components only, when the layout allows
    /// it. Returns `false` when no such repair is known.
    fn repair(&self, _lp: &SparseLp, _x: &mut [f64]) -> bool {
        false
    }
}

/// Picks the structured backend when `hint = Some((k, t))` matches the snake
/// layout and falls back to the general sparse factorization otherwise.
pub fn auto_backend(lp: &SparseLp, hint: Option<(usize, usize)>) -> Box<dyn NormalSolver> {
    if let Some(s) = hint.and_then(|(k, t)| SnakeNormal::detect(lp, k, t)) {
        return Box::new(s);
    }
    Box::new(SparseLdl::new(lp))
}

/// Factorizes with weights `w`, escalating a diagonal shift on failure.
/// Returns the shift that succeeded.
fn factorize(backend: &mut dyn NormalSolver, lp: &SparseLp, w: &[f64]) -> Result<f64, SolveError> {
    let first = match backend.factor_with(lp, w, 0.0) {
        Ok(()) => return Ok(0.0),
        Err(p) => p,
    };
    let m = lp.m().max(1);
    let trace: f64 = (0..lp.n())
        .map(|j| w[j] * lp.a.col(j).map(|(_, v)| v * v).sum::<f64>())
        .sum();
    let base = 1e-10 * trace / m as f64;
    let mut last = first;
    for scale in [1.0, 10.0, 100.0] {
        let delta = base * scale;
        match backend.factor_with(lp, w, delta) {
            Ok(()) => {
                debug!("{}: regularized with delta {delta:e}", backend.name());
                return Ok(delta);
            }
            Err(p) => last = p,
        }
    }
    Err(SolveError::FactorizationFailure { pivot: last.index })
}

/// Iterative refinement of `M y = r`, `M = A·diag(w)·Aᵀ`, where `residual(y)`
/// evaluates `r − M y` against the exact operator. Refinement also undoes any
/// regularization shift in the factorization.
fn refine(backend: &dyn NormalSolver, rhs: &[f64], residual: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    let mut y = backend.solve(rhs);
    let mut res_norm = norm_inf(&residual(&y));
    for _ in 0..REFINE_STEPS {
        if res_norm == 0.0 {
            break;
        }
        let dy = backend.solve(&residual(&y));
        let cand: Vec<f64> = y.iter().zip(&dy).map(|(a, b)| a + b).collect();
        let cand_norm = norm_inf(&residual(&cand));
        if !(cand_norm < res_norm) {
            break;
        }
        y = cand;
        res_norm = cand_norm;
    }
    trace!("refined residual {res_norm:e} for rhs {:e}", norm_inf(rhs));
    y
}

/// `A·diag(w)·(c − Aᵀy)`: the normal-equation residual of the projection,
/// formed so that the cancellation in `c − Aᵀy` happens before scaling.
fn projection_residual(a: &SparseMatrix, w: &[f64], c: &[f64], y: &[f64]) -> Vec<f64> {
    let aty = a.mul_t_vec(y);
    let ws: Vec<f64> = (0..c.len()).map(|j| w[j] * (c[j] - aty[j])).collect();
    a.mul_vec(&ws)
}

/// Affine-scaling direction `Δ = −D²(c − Aᵀy)` with `(A D² Aᵀ) y = A D² c`.
pub fn direction(lp: &SparseLp, x: &[f64]) -> Result<Vec<f64>, SolveError> {
    let mut backend = SparseLdl::new(lp);
    direction_with(lp, x, &mut backend)
}

pub fn direction_with(lp: &SparseLp, x: &[f64], backend: &mut dyn NormalSolver) -> Result<Vec<f64>, SolveError> {
    if x.len() != lp.n() {
        return Err(SolveError::DimensionMismatch(format!(
            "x has length {}, expected {}",
            x.len(),
            lp.n()
        )));
    }
    if x.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(SolveError::InfeasibleStart("x must be strictly positive".into()));
    }
    let w: Vec<f64> = x.iter().map(|v| v * v).collect();
    factorize(backend, lp, &w)?;
    let wc: Vec<f64> = w.iter().zip(&lp.c).map(|(wi, ci)| wi * ci).collect();
    let r = lp.a.mul_vec(&wc);
    let y = refine(backend, &r, |y| projection_residual(&lp.a, &w, &lp.c, y));
    let aty = lp.a.mul_t_vec(&y);
    Ok((0..lp.n()).map(|j| -w[j] * (lp.c[j] - aty[j])).collect())
}

/// Ratio test: `λ = α·min{x_i/−Δ_i : Δ_i < 0}`.
pub fn step_size(x: &[f64], delta: &[f64], alpha: f64, c: &[f64]) -> StepRule {
    let scaled = delta.iter().zip(x).map(|(d, xi)| (d / xi).abs()).fold(0.0, f64::max);
    let cx = dot(c, x);
    let cd = dot(c, delta);
    if scaled <= STATIONARY_TOL * (1.0 + cx.abs()) || cd >= 0.0 {
        return StepRule::Stationary;
    }
    let dmax = norm_inf(delta);
    if delta.iter().all(|&d| d >= -NEGATIVE_TOL * dmax) {
        return StepRule::Unbounded;
    }
    let ratio = delta
        .iter()
        .zip(x)
        .filter(|(d, _)| **d < 0.0)
        .map(|(d, xi)| xi / -d)
        .fold(f64::INFINITY, f64::min);
    StepRule::Step(alpha * ratio)
}

fn feasible(lp: &SparseLp, x: &[f64], opts: &SolveOptions) -> bool {
    lp.residual_inf(x) <= opts.feas_tol * (1.0 + lp.b_norm_inf())
}

/// Scaled least-squares feasibility correction
/// `x ← x − D²Aᵀ(AD²Aᵀ)⁻¹(Ax − b)` with `D = diag(x)`. Each component moves
/// in proportion to its square, so components near zero stay positive.
fn correct(lp: &SparseLp, x: &mut [f64], backend: &mut dyn NormalSolver) -> Result<(), SolveError> {
    let w: Vec<f64> = x.iter().map(|v| v * v).collect();
    factorize(backend, lp, &w)?;
    let r: Vec<f64> = lp.a.mul_vec(x).iter().zip(&lp.b).map(|(ax, b)| ax - b).collect();
    let y = refine(backend, &r, |y| {
        let aty = lp.a.mul_t_vec(y);
        let scaled: Vec<f64> = aty.iter().zip(&w).map(|(v, wi)| v * wi).collect();
        r.iter().zip(lp.a.mul_vec(&scaled)).map(|(ri, mi)| ri - mi).collect()
    });
    for ((xi, d), wi) in x.iter_mut().zip(lp.a.mul_t_vec(&y)).zip(&w) {
        *xi -= wi * d;
    }
    Ok(())
}

/// One affine-scaling step. Returns the trace entry when the iterate moved;
/// `None` means the status changed without a step.
pub fn iterate(
    lp: &SparseLp,
    state: &mut IpState,
    opts: &SolveOptions,
    backend: &mut dyn NormalSolver,
) -> Result<Option<TraceEntry>, SolveError> {
    let delta = direction_with(lp, &state.x, backend)?;
    let lambda = match step_size(&state.x, &delta, opts.alpha, &lp.c) {
        StepRule::Step(l) => l,
        StepRule::Stationary => {
            debug!("stationary direction");
            state.status = Status::Converged;
            return Ok(None);
        }
        StepRule::Unbounded => {
            state.status = Status::Unbounded;
            return Ok(None);
        }
    };
    let mut x: Vec<f64> = state.x.iter().zip(&delta).map(|(xi, d)| xi + lambda * d).collect();
    if !feasible(lp, &x, opts) {
        debug!("feasibility drift {:e}, correcting", lp.residual_inf(&x));
        if !backend.repair(lp, &mut x) || !feasible(lp, &x, opts) {
            correct(lp, &mut x, backend)?;
        }
        if !feasible(lp, &x, opts) {
            return Err(SolveError::NumericalFailure(format!(
                "residual {:e} after correction",
                lp.residual_inf(&x)
            )));
        }
    }
    if x.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(SolveError::NumericalFailure("iterate left the interior".into()));
    }
    let objective = lp.objective(&x);
    if objective > state.objective {
        debug!("objective rose from {:e} to {objective:e}", state.objective);
        // Round-off now outweighs the remaining descent.
        state.status = Status::Converged;
        return Ok(None);
    }
    state.objective = objective;
    state.x = x;
    state.iter += 1;
    state.last_step = lambda;
    Ok(Some(TraceEntry {
        objective: state.objective,
        step: lambda,
        direction_norm: delta.iter().map(|d| d * d).sum::<f64>().sqrt(),
    }))
}

fn check_start(lp: &SparseLp, x0: &[f64], opts: &SolveOptions) -> Result<(), SolveError> {
    opts.validate()?;
    if x0.len() != lp.n() {
        return Err(SolveError::DimensionMismatch(format!(
            "x0 has length {}, expected {}",
            x0.len(),
            lp.n()
        )));
    }
    if let Some(i) = x0.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(SolveError::InfeasibleStart(format!(
            "component {i} is {} (must be > 0)",
            x0[i]
        )));
    }
    if !feasible(lp, x0, opts) {
        return Err(SolveError::InfeasibleStart(format!(
            "residual {:e} exceeds tolerance",
            lp.residual_inf(x0)
        )));
    }
    Ok(())
}

/// Solves with the general sparse backend after pruning all-zero rows.
pub fn solve(lp: &SparseLp, x0: &[f64], opts: &SolveOptions) -> Result<SolveOutcome, SolveError> {
    check_start(lp, x0, opts)?;
    let empty: Vec<usize> = (0..lp.m()).filter(|&i| lp.a.row_is_empty(i)).collect();
    if empty.is_empty() {
        let mut backend = SparseLdl::new(lp);
        return solve_with(lp, x0, opts, &mut backend);
    }
    warn!("pruning {} all-zero constraint rows", empty.len());
    let keep: Vec<usize> = (0..lp.m()).filter(|i| !empty.contains(i)).collect();
    let mut new_row = vec![usize::MAX; lp.m()];
    for (new, &old) in keep.iter().enumerate() {
        new_row[old] = new;
    }
    let triplets: Vec<(usize, usize, f64)> =
        lp.a.triplets()
            .into_iter()
            .filter(|t| t.2 != 0.0)
            .map(|(i, j, v)| (new_row[i], j, v))
            .collect();
    let b = keep.iter().map(|&i| lp.b[i]).collect();
    let reduced = SparseLp::from_triplets(keep.len(), lp.n(), &triplets, b, lp.c.clone())
        .map_err(|e| SolveError::DimensionMismatch(e.to_string()))?;
    let mut backend = SparseLdl::new(&reduced);
    solve_with(&reduced, x0, opts, &mut backend)
}

/// Runs the iteration to completion with a caller-supplied backend.
///
/// A numerical failure after at least one accepted step ends the run with
/// status `NumericalFailure` and the best iterate so far; a failure on the
/// very first step is returned as an error.
pub fn solve_with(
    lp: &SparseLp,
    x0: &[f64],
    opts: &SolveOptions,
    backend: &mut dyn NormalSolver,
) -> Result<SolveOutcome, SolveError> {
    check_start(lp, x0, opts)?;
    let mut state = IpState::new(lp, x0.to_vec());
    let mut best = (state.objective, state.x.clone());
    let mut trace = Vec::new();
    let mut stalled = 0;
    while state.status == Status::Running {
        if state.iter >= opts.max_iter {
            state.status = Status::MaxIterations;
            break;
        }
        let previous = state.objective;
        match iterate(lp, &mut state, opts, backend) {
            Ok(Some(entry)) => {
                trace.push(entry);
                if state.objective <= best.0 {
                    best = (state.objective, state.x.clone());
                }
                let change = (previous - state.objective).abs() / (1.0 + previous.abs());
                stalled = if change < opts.obj_tol { stalled + 1 } else { 0 };
                if stalled >= opts.stall_window {
                    state.status = Status::Converged;
                }
            }
            Ok(None) => {}
            Err(e) if trace.is_empty() => return Err(e),
            Err(e) => {
                warn!("stopping after {} iterations: {e}", state.iter);
                state.status = Status::NumericalFailure;
            }
        }
    }
    debug!(
        "{}: {:?} after {} iterations, objective {:e}",
        backend.name(),
        state.status,
        state.iter,
        best.0
    );
    Ok(SolveOutcome {
        status: state.status,
        objective: best.0,
        iterations: trace.len(),
        trace,
        x_final: best.1,
    })
}

/// Finds a strictly positive feasible point when none is supplied.
///
/// Appends one artificial column `r = b − A·1` and drives its weight `s` to
/// zero from the start `(1, …, 1)`; the remaining residual `s·r` is removed
/// with a scaled correction once it falls below the feasibility tolerance.
pub fn phase_one(lp: &SparseLp, opts: &SolveOptions) -> Result<Vec<f64>, SolveError> {
    opts.validate()?;
    let (m, n) = (lp.m(), lp.n());
    let ones = vec![1.0; n];
    let r: Vec<f64> = lp.a.mul_vec(&ones).iter().zip(&lp.b).map(|(ax, b)| b - ax).collect();
    let tol = 0.1 * opts.feas_tol * (1.0 + lp.b_norm_inf());
    let r_norm = norm_inf(&r);
    if r_norm <= tol {
        return Ok(ones);
    }
    let mut triplets = lp.a.triplets();
    triplets.extend(
        r.iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, &v)| (i, n, v)),
    );
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let aux = SparseLp::from_triplets(m, n + 1, &triplets, lp.b.clone(), c)
        .map_err(|e| SolveError::DimensionMismatch(e.to_string()))?;
    let mut backend = SparseLdl::new(&aux);
    let mut state = IpState::new(&aux, vec![1.0; n + 1]);
    while state.status == Status::Running && state.iter < opts.max_iter {
        if state.x[n] * r_norm <= tol {
            break;
        }
        iterate(&aux, &mut state, opts, &mut backend)?;
    }
    if state.x[n] * r_norm > tol {
        return Err(SolveError::InfeasibleProblem);
    }
    let mut x = state.x[..n].to_vec();
    if !feasible(lp, &x, opts) {
        let mut backend = SparseLdl::new(lp);
        correct(lp, &mut x, &mut backend)?;
    }
    if !feasible(lp, &x, opts) || x.iter().any(|&v| !(v > 0.0)) {
        return Err(SolveError::NumericalFailure(
            "phase one ended outside the interior".into(),
        ));
    }
    Ok(x)
}

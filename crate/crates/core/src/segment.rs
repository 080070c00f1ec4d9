//! End-to-end segmentation: edge maps, point sample, LP, solve, contour, mask.
//!
//! The LP works on pixel values only, so snake values are mapped back to
//! image positions by snapping each one onto the closest-valued unused edge
//! pixel. Tiling the image into small regions gives the snap spatial locality:
//! each tile is solved independently with a snake count proportional to its
//! share of the edge pixels.

use std::time::Instant;

use log::{info, warn};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edgemap::{sample_points, EdgeError, EdgePack, PointSample, Roi, DEFAULT_BUDGET};
use crate::imagecore::GrayImage;
use crate::ipsolve::{solve_with, SnakeNormal, SolveError, SolveOptions, Status};
use crate::lpbuild::{build_lp, compute_r, LpBuildError, LpStandardForm};

pub const DEFAULT_K: usize = 100;
pub const DEFAULT_TILE: usize = 64;
pub const MIN_TILE: usize = 16;
pub const MIN_TILE_K: usize = 4;
pub const DEFAULT_CLOSE_ITERS: usize = 2;
/// Default `tau_match` as a fraction of the value range `R`.
pub const TAU_FRACTION: f64 = 0.1;
/// Mask components smaller than this fraction of the largest one are dropped.
pub const MIN_COMPONENT_FRACTION: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SegmentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("snake count {k} exceeds the {t} sample points")]
    KTooLarge { k: usize, t: usize },
    #[error(transparent)]
    Edge(#[from] EdgeError),
    #[error(transparent)]
    Build(#[from] LpBuildError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    /// Snake count, defaulting to `min(100, M)`. Tiled runs split it over the
    /// tiles in proportion to their edge counts.
    pub k: Option<usize>,
    pub t_budget: usize,
    /// Binary edge threshold; `None` adapts to the noise level.
    pub theta: Option<f64>,
    pub tile: Option<usize>,
    /// Restricts segmentation (and tiling) to this rectangle.
    pub roi: Option<Roi>,
    pub seed: u64,
    /// Value-match tolerance; `None` uses `0.1·R` per region.
    pub tau_match: Option<f64>,
    pub close_iters: usize,
    /// Warm-start margin; `None` uses `R`.
    pub epsilon: Option<f64>,
    pub solver: SolveOptions,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        Self {
            k: None,
            t_budget: DEFAULT_BUDGET,
            theta: None,
            tile: None,
            roi: None,
            seed: 0,
            tau_match: None,
            close_iters: DEFAULT_CLOSE_ITERS,
            epsilon: None,
            solver: SolveOptions::default(),
        }
    }
}

impl SegmentConfig {
    pub fn tiled() -> Self {
        Self {
            tile: Some(DEFAULT_TILE),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SegmentError> {
        let bad = |m: String| Err(SegmentError::InvalidConfig(m));
        if self.k == Some(0) {
            return bad("k must be at least 1".into());
        }
        if self.tile.is_none() {
            if let Some(k) = self.k {
                if self.t_budget <= k {
                    return bad(format!("t_budget {} must exceed k {k}", self.t_budget));
                }
            }
        }
        if self.t_budget < 2 {
            return bad("t_budget must be at least 2".into());
        }
        if let Some(tile) = self.tile {
            if tile < MIN_TILE {
                return bad(format!("tile must be at least {MIN_TILE}"));
            }
        }
        if let Some(theta) = self.theta {
            if !(theta > 0.0 && theta <= 1.0) {
                return bad(format!("theta must lie in (0, 1], got {theta}"));
            }
        }
        if let Some(tau) = self.tau_match {
            if !(tau >= 0.0) || !tau.is_finite() {
                return bad("tau_match must be finite and non-negative".into());
            }
        }
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0) || !eps.is_finite() {
                return bad("epsilon must be positive".into());
            }
        }
        self.solver.validate().or_else(|e| bad(e.to_string()))
    }
}

/// Per-region record; `error` is set when the region was skipped or failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileSummary {
    pub index: usize,
    pub roi: Roi,
    pub edge_count: usize,
    pub k: usize,
    pub t: usize,
    pub status: Option<Status>,
    pub iterations: usize,
    pub objective: Option<f64>,
    pub contour_len: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub config: SegmentConfig,
    pub theta: f64,
    pub edge_count: usize,
    pub snake_values: Vec<f64>,
    pub contour: Vec<(usize, usize)>,
    pub mask: GrayImage,
    pub objective_trace: Vec<f64>,
    pub tiles: Vec<TileSummary>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub edgemap_ms: f64,
    pub solve_ms: f64,
    pub mask_ms: f64,
    pub total_ms: f64,
}

#[derive(Serialize)]
struct ResultJson<'a> {
    config: &'a SegmentConfig,
    theta: f64,
    edge_count: usize,
    snake_values: &'a [f64],
    contour: &'a [(usize, usize)],
    mask_area: usize,
    objective_trace: &'a [f64],
    tiles: &'a [TileSummary],
    timings: Option<Timings>,
}

impl SegmentationResult {
    /// JSON document `{config, contour, objective_trace, tiles, timings, ...}`.
    pub fn to_json(&self, timings: Option<Timings>) -> serde_json::Value {
        serde_json::to_value(ResultJson {
            config: &self.config,
            theta: self.theta,
            edge_count: self.edge_count,
            snake_values: &self.snake_values,
            contour: &self.contour,
            mask_area: self.mask.count_nonzero(),
            objective_trace: &self.objective_trace,
            tiles: &self.tiles,
            timings,
        })
        .expect("result serializes")
    }
}

/// SplitMix64 step, used to derive independent per-region streams.
fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Values of `k` distinct sample points chosen uniformly at random. Zero values
/// are raised to `1e-6·R` so the warm start stays strictly positive.
pub fn init_snake(sample: &PointSample, k: usize, seed: u64) -> Result<Vec<f64>, SegmentError> {
    let t = sample.t();
    if k > t {
        return Err(SegmentError::KTooLarge { k, t });
    }
    let r = compute_r(sample)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(index::sample(&mut rng, t, k)
        .into_iter()
        .map(|i| {
            let v = sample.points[i].value;
            if v > 0.0 {
                v
            } else {
                1e-6 * r
            }
        })
        .collect())
}

/// Greedy value snap: snake `k` takes the unused edge point closest in value,
/// ties going to the smaller `(row, col)`. Matches farther than `tau` are
/// dropped and leave the edge point available.
pub fn extract_contour(sample: &PointSample, snake: &[f64], tau: f64) -> Vec<(usize, usize)> {
    let edges: Vec<(f64, usize, usize)> = sample
        .edge_idx
        .iter()
        .map(|&i| {
            let p = &sample.points[i];
            (p.value, p.row, p.col)
        })
        .collect();
    let mut used = vec![false; edges.len()];
    let mut contour = Vec::new();
    for &pk in snake {
        let best = edges
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, &(v, r, c))| ((v - pk).abs(), r, c, i))
            .min_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
        match best {
            Some((diff, r, c, i)) if diff <= tau => {
                used[i] = true;
                contour.push((r, c));
            }
            Some(_) => {}
            None => break,
        }
    }
    contour
}

fn morph(mask: &[bool], w: usize, h: usize, dilate: bool) -> Vec<bool> {
    let mut out = vec![false; w * h];
    for r in 0..h {
        for c in 0..w {
            let mut acc = !dilate;
            for rr in r.saturating_sub(1)..(r + 2).min(h) {
                for cc in c.saturating_sub(1)..(c + 2).min(w) {
                    let v = mask[rr * w + cc];
                    if dilate {
                        acc |= v;
                    } else {
                        acc &= v;
                    }
                }
            }
            out[r * w + c] = acc;
        }
    }
    out
}

/// `iters` dilations followed by `iters` erosions with a 3×3 square.
/// Pixels outside the image take no part in either operation.
fn closing(mask: Vec<bool>, w: usize, h: usize, iters: usize) -> Vec<bool> {
    let mut m = mask;
    for _ in 0..iters {
        m = morph(&m, w, h, true);
    }
    for _ in 0..iters {
        m = morph(&m, w, h, false);
    }
    m
}

/// Marks everything not 4-reachable from the border through unset pixels.
fn fill_holes(mask: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut outside = vec![false; w * h];
    let mut stack = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if (r == 0 || c == 0 || r + 1 == h || c + 1 == w) && !mask[r * w + c] {
                outside[r * w + c] = true;
                stack.push((r, c));
            }
        }
    }
    while let Some((r, c)) = stack.pop() {
        let mut visit = |rr: usize, cc: usize| {
            let i = rr * w + cc;
            if !mask[i] && !outside[i] {
                outside[i] = true;
                stack.push((rr, cc));
            }
        };
        if r > 0 {
            visit(r - 1, c);
        }
        if r + 1 < h {
            visit(r + 1, c);
        }
        if c > 0 {
            visit(r, c - 1);
        }
        if c + 1 < w {
            visit(r, c + 1);
        }
    }
    outside.into_iter().map(|o| !o).collect()
}

fn components_of(mask: &[bool], w: usize, h: usize) -> Vec<Vec<(usize, usize)>> {
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for start in 0..w * h {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![(start / w, start % w)];
        let mut comp = Vec::new();
        while let Some((r, c)) = stack.pop() {
            comp.push((r, c));
            for rr in r.saturating_sub(1)..(r + 2).min(h) {
                for cc in c.saturating_sub(1)..(c + 2).min(w) {
                    let i = rr * w + cc;
                    if mask[i] && !seen[i] {
                        seen[i] = true;
                        stack.push((rr, cc));
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// 8-connected components of the non-zero pixels, each sorted row-major and
/// listed in order of their first pixel.
pub fn connected_components(img: &GrayImage) -> Vec<Vec<(usize, usize)>> {
    let mask: Vec<bool> = img.data().iter().map(|&v| v != 0).collect();
    components_of(&mask, img.width(), img.height())
}

/// Rasterizes contour pixels, closes gaps, fills enclosed regions and drops
/// specks much smaller than the main region.
pub fn contour_to_mask(contour: &[(usize, usize)], width: usize, height: usize, close_iters: usize) -> GrayImage {
    let mut plot = vec![false; width * height];
    for &(r, c) in contour {
        if r < height && c < width {
            plot[r * width + c] = true;
        }
    }
    let filled = fill_holes(&closing(plot, width, height, close_iters), width, height);
    let comps = components_of(&filled, width, height);
    let largest = comps.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = GrayImage::filled(width, height, 0);
    for comp in comps {
        if comp.len() as f64 >= MIN_COMPONENT_FRACTION * largest as f64 {
            for (r, c) in comp {
                out.set(r, c, 255);
            }
        }
    }
    out
}

/// Result of one region before merging.
#[derive(Debug, Clone, PartialEq)]
pub struct RoiOutcome {
    pub form_k: usize,
    pub form_t: usize,
    pub snake_values: Vec<f64>,
    pub contour: Vec<(usize, usize)>,
    pub status: Status,
    pub objective: f64,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

/// Samples a region and assembles its LP; `k` is capped at the sample size.
pub fn roi_lp(
    pack: &EdgePack,
    roi: Roi,
    k: usize,
    cfg: &SegmentConfig,
    seed: u64,
) -> Result<(PointSample, LpStandardForm), SegmentError> {
    let sample = sample_points(pack, cfg.t_budget, Some(roi), seed)?;
    let k = k.min(sample.t());
    let form = build_lp(&sample, k)?;
    Ok((sample, form))
}

/// Builds and solves the LP for one region with snake count `k`.
pub fn segment_roi(
    pack: &EdgePack,
    roi: Roi,
    k: usize,
    cfg: &SegmentConfig,
    seed: u64,
) -> Result<RoiOutcome, SegmentError> {
    let (sample, form) = roi_lp(pack, roi, k, cfg, seed)?;
    solve_form(&form, &sample, cfg, seed)
}

/// Warm start used by [`solve_form`] for an assembled region LP.
pub fn region_start(
    form: &LpStandardForm,
    sample: &PointSample,
    cfg: &SegmentConfig,
    seed: u64,
) -> Result<Vec<f64>, SegmentError> {
    let snake0 = init_snake(sample, form.columns.k, derive_seed(seed, u64::MAX))?;
    Ok(form.initial_point(&snake0, cfg.epsilon.unwrap_or(form.constants.r))?)
}

/// Warm start, solve and extraction for an assembled LP.
pub fn solve_form(
    form: &LpStandardForm,
    sample: &PointSample,
    cfg: &SegmentConfig,
    seed: u64,
) -> Result<RoiOutcome, SegmentError> {
    let r = form.constants.r;
    let x0 = region_start(form, sample, cfg, seed)?;
    let mut backend = SnakeNormal::new(form.columns);
    let outcome = solve_with(&form.lp, &x0, &cfg.solver, &mut backend)?;
    let snake_values = form.snake_values(&outcome.x_final);
    let contour = extract_contour(sample, &snake_values, cfg.tau_match.unwrap_or(TAU_FRACTION * r));
    Ok(RoiOutcome {
        form_k: form.columns.k,
        form_t: form.columns.t,
        snake_values,
        contour,
        status: outcome.status,
        objective: outcome.objective,
        objective_trace: outcome.trace.iter().map(|e| e.objective).collect(),
        iterations: outcome.iterations,
    })
}

/// Square tiles covering `area`; tiles on the far edges are clipped.
pub fn tile_grid(area: Roi, tile: usize) -> Vec<Roi> {
    let mut out = Vec::new();
    let (row_end, col_end) = (area.row + area.height, area.col + area.width);
    for row in (area.row..row_end).step_by(tile) {
        for col in (area.col..col_end).step_by(tile) {
            out.push(Roi {
                row,
                col,
                height: tile.min(row_end - row),
                width: tile.min(col_end - col),
            });
        }
    }
    out
}

/// Snake count for a tile holding `edges` of the `total` edge pixels.
pub fn tile_k(k_total: usize, edges: usize, total: usize) -> usize {
    let share = (k_total as f64 * edges as f64 / total as f64).round() as usize;
    share.max(MIN_TILE_K)
}

pub fn run(img: &GrayImage, cfg: &SegmentConfig) -> Result<SegmentationResult, SegmentError> {
    run_timed(img, cfg).map(|(r, _)| r)
}

pub fn run_timed(img: &GrayImage, cfg: &SegmentConfig) -> Result<(SegmentationResult, Timings), SegmentError> {
    cfg.validate()?;
    let start = Instant::now();
    let pack = EdgePack::from_image(img, cfg.theta)?;
    let edgemap_ms = start.elapsed().as_secs_f64() * 1e3;
    let (w, h) = (img.width(), img.height());
    let area = cfg.roi.unwrap_or(Roi::full(w, h));
    if area.area() == 0 || area.row + area.height > h || area.col + area.width > w {
        return Err(EdgeError::EmptyRoi.into());
    }
    let total = pack.edges_in(&area);
    if total == 0 {
        return Err(EdgeError::NoEdges { theta: pack.theta }.into());
    }
    info!("edge map: theta {:.4}, {total} edge pixels", pack.theta);

    let solve_start = Instant::now();
    let mut tiles = Vec::new();
    let mut snake_values = Vec::new();
    let mut contour = Vec::new();
    let mut traces: Vec<Vec<f64>> = Vec::new();
    match cfg.tile {
        None => {
            let k = cfg.k.unwrap_or(DEFAULT_K.min(total));
            let out = segment_roi(&pack, area, k, cfg, cfg.seed)?;
            tiles.push(summary(0, area, total, Ok(&out)));
            snake_values = out.snake_values;
            contour = out.contour;
            traces.push(out.objective_trace);
        }
        Some(size) => {
            let k_total = cfg.k.unwrap_or(DEFAULT_K.min(total));
            for (index, roi) in tile_grid(area, size).into_iter().enumerate() {
                let edges = pack.edges_in(&roi);
                let result = if edges == 0 {
                    Err(SegmentError::Edge(EdgeError::NoEdges { theta: pack.theta }))
                } else {
                    let seed = derive_seed(cfg.seed, index as u64);
                    segment_roi(&pack, roi, tile_k(k_total, edges, total), cfg, seed)
                };
                match result {
                    Ok(out) => {
                        tiles.push(summary(index, roi, edges, Ok(&out)));
                        snake_values.extend(out.snake_values);
                        contour.extend(out.contour);
                        traces.push(out.objective_trace);
                    }
                    Err(e) => {
                        if edges > 0 {
                            warn!("tile {index} failed: {e}");
                        }
                        tiles.push(summary(index, roi, edges, Err(&e)));
                    }
                }
            }
        }
    }
    let solve_ms = solve_start.elapsed().as_secs_f64() * 1e3;
    let mask_start = Instant::now();
    let mask = contour_to_mask(&contour, w, h, cfg.close_iters);
    let mask_ms = mask_start.elapsed().as_secs_f64() * 1e3;
    let result = SegmentationResult {
        config: cfg.clone(),
        theta: pack.theta,
        edge_count: total,
        snake_values,
        contour,
        mask,
        objective_trace: merge_traces(&traces),
        tiles,
    };
    let timings = Timings {
        edgemap_ms,
        solve_ms,
        mask_ms,
        total_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((result, timings))
}

fn summary(index: usize, roi: Roi, edges: usize, out: Result<&RoiOutcome, &SegmentError>) -> TileSummary {
    match out {
        Ok(o) => TileSummary {
            index,
            roi,
            edge_count: edges,
            k: o.form_k,
            t: o.form_t,
            status: Some(o.status),
            iterations: o.iterations,
            objective: Some(o.objective),
            contour_len: o.contour.len(),
            error: None,
        },
        Err(e) => TileSummary {
            index,
            roi,
            edge_count: edges,
            k: 0,
            t: 0,
            status: None,
            iterations: 0,
            objective: None,
            contour_len: 0,
            error: Some(e.to_string()),
        },
    }
}

/// Sum over regions of each region's objective at iteration `i`, holding a
/// region's final value once it has stopped.
fn merge_traces(traces: &[Vec<f64>]) -> Vec<f64> {
    let len = traces.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|i| traces.iter().filter_map(|t| t.get(i).or(t.last())).sum())
        .collect()
}

/// Input dimmed to half intensity with contour pixels set to 255.
pub fn overlay(img: &GrayImage, contour: &[(usize, usize)]) -> GrayImage {
    let data = img.data().iter().map(|&v| v / 2).collect();
    let mut out = GrayImage::new(img.width(), img.height(), data).expect("same dimensions");
    for &(r, c) in contour {
        out.set(r, c, 255);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edgemap::SamplePoint;
    use crate::imagecore::{generate_shape, ShapeKind};
    use proptest::prelude::*;

    fn binary_sample() -> PointSample {
        let pts = [(0, 0, 0.0), (2, 3, 1.0), (2, 7, 1.0), (4, 4, 0.0)];
        PointSample::new(
            pts.iter()
                .map(|&(row, col, value)| SamplePoint { row, col, value })
                .collect(),
            vec![1, 2],
        )
        .unwrap()
    }

    #[test]
    fn init_snake_is_deterministic_and_positive() {
        let s = PointSample::from_values(&[0.0, 0.5, 1.0, 0.25], vec![2]).unwrap();
        let a = init_snake(&s, 4, 9).unwrap();
        assert_eq!(a, init_snake(&s, 4, 9).unwrap());
        assert!(a.iter().all(|&v| v > 0.0));
        let mut sorted = a.clone();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(sorted, vec![1e-6, 0.25, 0.5, 1.0]);
        assert_eq!(init_snake(&s, 5, 0), Err(SegmentError::KTooLarge { k: 5, t: 4 }));
    }

    #[test]
    fn extraction_breaks_ties_lexicographically() {
        let s = binary_sample();
        assert_eq!(extract_contour(&s, &[1.0], 0.1), vec![(2, 3)]);
        assert_eq!(extract_contour(&s, &[1.0, 1.0, 1.0], 0.1), vec![(2, 3), (2, 7)]);
        assert!(extract_contour(&s, &[0.5], 0.1).is_empty());
    }

    #[test]
    fn exact_values_recover_all_edges() {
        let s = PointSample::from_values(&[0.1, 0.4, 0.9, 0.6, 0.0], vec![1, 2, 3]).unwrap();
        let mut c = extract_contour(&s, &[0.9, 0.4, 0.6], 0.0);
        c.sort_unstable();
        assert_eq!(c, vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn outline_fills_to_rectangle() {
        let mut outline = Vec::new();
        for i in 0..10 {
            outline.extend([(5, 5 + i), (14, 5 + i), (5 + i, 5), (5 + i, 14)]);
        }
        let mask = contour_to_mask(&outline, 30, 30, 0);
        assert_eq!(mask.count_nonzero(), 100);
        let mask = contour_to_mask(&outline, 30, 30, 2);
        assert_eq!(mask.count_nonzero(), 100);
        assert_eq!(contour_to_mask(&[], 30, 30, 2).count_nonzero(), 0);
    }

    #[test]
    fn small_specks_are_dropped() {
        let mut contour: Vec<(usize, usize)> = (0..40).flat_map(|r| (0..40).map(move |c| (r + 5, c + 5))).collect();
        contour.push((60, 60));
        let mask = contour_to_mask(&contour, 80, 80, 0);
        assert_eq!(mask.count_nonzero(), 1600);
    }

    #[test]
    fn mask_is_idempotent_on_shapes() {
        for kind in ShapeKind::ALL {
            let img = generate_shape(kind, 200, 160).unwrap();
            let pixels: Vec<(usize, usize)> = (0..160)
                .flat_map(|r| (0..200).map(move |c| (r, c)))
                .filter(|&(r, c)| img.get(r, c) != 0)
                .collect();
            let once = contour_to_mask(&pixels, 200, 160, 2);
            let again_pixels: Vec<(usize, usize)> = (0..160)
                .flat_map(|r| (0..200).map(move |c| (r, c)))
                .filter(|&(r, c)| once.get(r, c) != 0)
                .collect();
            assert_eq!(contour_to_mask(&again_pixels, 200, 160, 2), once, "{kind}");
        }
    }

    #[test]
    fn tiles_cover_the_image() {
        let tiles = tile_grid(Roi::full(400, 320), 64);
        assert_eq!(tiles.len(), 7 * 5);
        assert_eq!(tiles.iter().map(Roi::area).sum::<usize>(), 400 * 320);
        assert_eq!(tile_k(100, 1, 1000), MIN_TILE_K);
        assert_eq!(tile_k(1000, 150, 1000), 150);
    }

    #[test]
    fn constant_image_has_no_edges() {
        let img = GrayImage::filled(64, 64, 90);
        assert!(matches!(
            run(&img, &SegmentConfig::default()),
            Err(SegmentError::Edge(_))
        ));
    }

    #[test]
    fn config_validation() {
        let bad = [
            SegmentConfig {
                k: Some(0),
                ..Default::default()
            },
            SegmentConfig {
                k: Some(1000),
                ..Default::default()
            },
            SegmentConfig {
                tile: Some(8),
                ..Default::default()
            },
            SegmentConfig {
                theta: Some(0.0),
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert!(SegmentConfig::tiled().validate().is_ok());
    }

    #[test]
    fn rectangle_roi_contour_lies_on_edges() {
        let img = generate_shape(ShapeKind::Rectangle, 96, 96).unwrap();
        let pack = EdgePack::from_image(&img, None).unwrap();
        let roi = Roi {
            row: 16,
            col: 16,
            height: 32,
            width: 32,
        };
        let cfg = SegmentConfig {
            t_budget: 300,
            ..Default::default()
        };
        let out = segment_roi(&pack, roi, 16, &cfg, 3).unwrap();
        assert!(!out.contour.is_empty());
        assert!(out.contour.len() <= 16);
        for &(r, c) in &out.contour {
            assert!(pack.is_edge(r, c) && roi.contains(r, c));
        }
        assert!(out
            .objective_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs())));
    }

    #[test]
    fn merged_trace_holds_final_values() {
        assert_eq!(merge_traces(&[vec![3.0, 2.0, 1.0], vec![5.0]]), vec![8.0, 7.0, 6.0]);
        assert!(merge_traces(&[]).is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn contour_points_are_distinct_edges(
            values in proptest::collection::vec(0.0f64..1.0, 4..30),
            snake in proptest::collection::vec(0.0f64..1.0, 1..12),
            tau in 0.0f64..0.5,
        ) {
            let t = values.len();
            let edges: Vec<usize> = (0..t).step_by(2).collect();
            prop_assume!(edges.len() < t);
            let s = PointSample::from_values(&values, edges.clone()).unwrap();
            let c = extract_contour(&s, &snake, tau);
            prop_assert!(c.len() <= snake.len().min(edges.len()));
            let mut sorted = c.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), c.len());
            for (r, col) in c {
                prop_assert_eq!(r, 0);
                prop_assert!(edges.contains(&col));
            }
        }
    }
}

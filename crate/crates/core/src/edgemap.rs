//! Continuous and binary edge maps, and the point sample the LP is built on.
//!
//! The continuous map is the Sobel gradient magnitude of the intensities
//! scaled to `[0, 1]`, divided by its maximum. The binary map thresholds the
//! continuous map; by default the threshold adapts to the background level as
//! `max(0.2, 3 · median)` so that clean images use `0.2` and noisy images do
//! not flood the binary map with noise responses.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::{FloatField, GrayImage};

pub const DEFAULT_THETA: f64 = 0.2;
/// Multiplier on the median continuous-map value used by [`adaptive_threshold`].
pub const NOISE_MEDIAN_FACTOR: f64 = 3.0;
pub const DEFAULT_BUDGET: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdgeError {
    #[error("image too small for a 3x3 gradient: {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("gradient field is identically zero")]
    AllZero,
    #[error("no pixel reaches the edge threshold {theta}")]
    NoEdges { theta: f64 },
    #[error("threshold must lie in (0, 1], got {0}")]
    BadThreshold(f64),
    #[error("sample budget {budget} does not exceed the {edges} edge points")]
    BudgetTooSmall { budget: usize, edges: usize },
    #[error("region of interest is empty or outside the image")]
    EmptyRoi,
    #[error("edge maps have mismatched dimensions")]
    DimensionMismatch,
}

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
}

impl Roi {
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            row: 0,
            col: 0,
            height,
            width,
        }
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        row >= self.row && row < self.row + self.height && col >= self.col && col < self.col + self.width
    }

    fn validate(&self, width: usize, height: usize) -> Result<(), EdgeError> {
        if self.area() == 0 || self.row + self.height > height || self.col + self.width > width {
            return Err(EdgeError::EmptyRoi);
        }
        Ok(())
    }
}

/// Sobel gradient magnitude with replicated borders, on intensities in `[0, 1]`.
pub fn gradient_magnitude(img: &GrayImage) -> Result<FloatField, EdgeError> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(EdgeError::TooSmall { width: w, height: h });
    }
    let px = |r: isize, c: isize| -> f64 {
        let r = r.clamp(0, h as isize - 1) as usize;
        let c = c.clamp(0, w as isize - 1) as usize;
        img.get(r, c) as f64 / 255.0
    };
    let mut out = Vec::with_capacity(w * h);
    for r in 0..h as isize {
        for c in 0..w as isize {
            let gx = (px(r - 1, c + 1) + 2.0 * px(r, c + 1) + px(r + 1, c + 1))
                - (px(r - 1, c - 1) + 2.0 * px(r, c - 1) + px(r + 1, c - 1));
            let gy = (px(r + 1, c - 1) + 2.0 * px(r + 1, c) + px(r + 1, c + 1))
                - (px(r - 1, c - 1) + 2.0 * px(r - 1, c) + px(r - 1, c + 1));
            out.push((gx * gx + gy * gy).sqrt() as f32);
        }
    }
    Ok(FloatField::new(w, h, out).expect("gradient values are finite"))
}

/// Divides every value by the global maximum.
pub fn normalize(field: &FloatField) -> Result<FloatField, EdgeError> {
    let max = field.max();
    if !(max > 0.0) {
        return Err(EdgeError::AllZero);
    }
    let data = field.data().iter().map(|&v| v / max).collect();
    Ok(FloatField::new(field.width(), field.height(), data).expect("finite"))
}

/// `max(DEFAULT_THETA, NOISE_MEDIAN_FACTOR · median)`, capped at 1.
pub fn adaptive_threshold(field: &FloatField) -> f64 {
    let mut values: Vec<f32> = field.data().to_vec();
    let mid = values.len() / 2;
    let (_, median, _) = values.select_nth_unstable_by(mid, f32::total_cmp);
    (NOISE_MEDIAN_FACTOR * *median as f64).clamp(DEFAULT_THETA, 1.0)
}

/// Marks pixels whose continuous value reaches `theta` with 255.
pub fn binary_edges(field: &FloatField, theta: f64) -> Result<GrayImage, EdgeError> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(EdgeError::BadThreshold(theta));
    }
    let data: Vec<u8> = field
        .data()
        .iter()
        .map(|&v| if v as f64 >= theta { 255 } else { 0 })
        .collect();
    if data.iter().all(|&v| v == 0) {
        return Err(EdgeError::NoEdges { theta });
    }
    Ok(GrayImage::new(field.width(), field.height(), data).expect("same dimensions"))
}

/// Continuous map, binary map and the threshold that produced it.
#[derive(Debug, Clone)]
pub struct EdgePack {
    pub continuous: FloatField,
    pub binary: GrayImage,
    pub edge_count: usize,
    pub theta: f64,
}

impl EdgePack {
    pub fn new(continuous: FloatField, binary: GrayImage, theta: f64) -> Result<Self, EdgeError> {
        if continuous.width() != binary.width() || continuous.height() != binary.height() {
            return Err(EdgeError::DimensionMismatch);
        }
        let edge_count = binary.data().iter().filter(|&&v| v == 255).count();
        Ok(Self {
            continuous,
            binary,
            edge_count,
            theta,
        })
    }

    /// Builds both maps from an image. `theta = None` selects [`adaptive_threshold`].
    pub fn from_image(img: &GrayImage, theta: Option<f64>) -> Result<Self, EdgeError> {
        let continuous = normalize(&gradient_magnitude(img)?)?;
        let theta = theta.unwrap_or_else(|| adaptive_threshold(&continuous));
        let binary = binary_edges(&continuous, theta)?;
        Self::new(continuous, binary, theta)
    }

    pub fn width(&self) -> usize {
        self.binary.width()
    }

    pub fn height(&self) -> usize {
        self.binary.height()
    }

    pub fn is_edge(&self, row: usize, col: usize) -> bool {
        self.binary.get(row, col) == 255
    }

    pub fn edges_in(&self, roi: &Roi) -> usize {
        (roi.row..roi.row + roi.height)
            .map(|r| (roi.col..roi.col + roi.width).filter(|&c| self.is_edge(r, c)).count())
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// The `T` model points in row-major order; `edge_idx` marks the `M` edge points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSample {
    pub points: Vec<SamplePoint>,
    pub edge_idx: Vec<usize>,
}

impl PointSample {
    /// Checks `1 ≤ M < T`, distinct in-range edge indices and distinct coordinates.
    pub fn new(points: Vec<SamplePoint>, edge_idx: Vec<usize>) -> Result<Self, EdgeError> {
        let t = points.len();
        let m = edge_idx.len();
        if m == 0 {
            return Err(EdgeError::NoEdges { theta: f64::NAN });
        }
        if m >= t {
            return Err(EdgeError::BudgetTooSmall { budget: t, edges: m });
        }
        let mut seen = vec![false; t];
        for &i in &edge_idx {
            assert!(i < t && !seen[i], "edge index {i} out of range or repeated");
            seen[i] = true;
        }
        let mut coords: Vec<(usize, usize)> = points.iter().map(|p| (p.row, p.col)).collect();
        coords.sort_unstable();
        assert!(coords.windows(2).all(|w| w[0] != w[1]), "duplicate sample coordinates");
        Ok(Self { points, edge_idx })
    }

    /// Builds a sample from bare values with no spatial meaning: point `i`
    /// sits at `(0, i)`. Used for LP-level experiments and tests.
    pub fn from_values(values: &[f64], edge_idx: Vec<usize>) -> Result<Self, EdgeError> {
        let points = values
            .iter()
            .enumerate()
            .map(|(i, &value)| SamplePoint { row: 0, col: i, value })
            .collect();
        Self::new(points, edge_idx)
    }

    pub fn t(&self) -> usize {
        self.points.len()
    }

    pub fn m(&self) -> usize {
        self.edge_idx.len()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn edge_values(&self) -> Vec<f64> {
        self.edge_idx.iter().map(|&i| self.points[i].value).collect()
    }
}

/// Samples every edge pixel of the ROI plus uniformly chosen background pixels
/// until `budget` points are taken (or the ROI is exhausted).
pub fn sample_points(pack: &EdgePack, budget: usize, roi: Option<Roi>, seed: u64) -> Result<PointSample, EdgeError> {
    let roi = roi.unwrap_or_else(|| Roi::full(pack.width(), pack.height()));
    roi.validate(pack.width(), pack.height())?;

    let mut edges = Vec::new();
    let mut background = Vec::new();
    for r in roi.row..roi.row + roi.height {
        for c in roi.col..roi.col + roi.width {
            if pack.is_edge(r, c) {
                edges.push((r, c));
            } else {
                background.push((r, c));
            }
        }
    }
    let m = edges.len();
    if m == 0 {
        return Err(EdgeError::NoEdges { theta: pack.theta });
    }
    let take = budget.min(roi.area());
    if take <= m {
        return Err(EdgeError::BudgetTooSmall { budget: take, edges: m });
    }
    let fill = take - m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen: Vec<(usize, usize)> = if fill == background.len() {
        background
    } else {
        let mut picks = index::sample(&mut rng, background.len(), fill).into_vec();
        picks.sort_unstable();
        picks.into_iter().map(|i| background[i]).collect()
    };

    let mut coords: Vec<((usize, usize), bool)> = edges
        .into_iter()
        .map(|rc| (rc, true))
        .chain(chosen.into_iter().map(|rc| (rc, false)))
        .collect();
    coords.sort_unstable();

    let mut points = Vec::with_capacity(coords.len());
    let mut edge_idx = Vec::with_capacity(m);
    for (i, ((row, col), is_edge)) in coords.into_iter().enumerate() {
        if is_edge {
            edge_idx.push(i);
        }
        points.push(SamplePoint {
            row,
            col,
            value: pack.continuous.get(row, col) as f64,
        });
    }
    PointSample::new(points, edge_idx)
}

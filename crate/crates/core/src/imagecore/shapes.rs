//! Deterministic binary shape fixtures.
//!
//! Geometry, with `s = min(width, height)` and the shape centred in the frame:
//!
//! * `Rectangle`: rows `[round(0.25h), round(0.75h))`, columns `[round(0.25w), round(0.75w))`.
//! * `Heart`: the implicit curve `(x² + y² − 1)³ − x²y³ ≤ 0`, scaled to a height of `0.6·s`.
//! * `Star`: five-pointed polygon, outer radius `0.35·s`, inner radius `0.14·s`, one tip up.
//! * `Arrow`: seven-vertex polygon pointing right, `0.6·s` long and `0.42·s` tall.
//! * `Multi`: a star, an arrow and a rectangle at half scale on disjoint anchors.
//!
//! Polygons are filled with the even-odd rule sampled at pixel centres; a
//! centre lying exactly on an edge counts as foreground.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{GrayImage, ImageError};

pub const MIN_SHAPE_DIM: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Arrow,
    Heart,
    Rectangle,
    Star,
    Multi,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 5] = [
        ShapeKind::Arrow,
        ShapeKind::Heart,
        ShapeKind::Rectangle,
        ShapeKind::Star,
        ShapeKind::Multi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Arrow => "arrow",
            ShapeKind::Heart => "heart",
            ShapeKind::Rectangle => "rectangle",
            ShapeKind::Star => "star",
            ShapeKind::Multi => "multi",
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = ImageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ShapeKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| ImageError::InvalidParameter(format!("unknown shape {s:?}")))
    }
}

const ARROW: [(f64, f64); 7] = [
    (-0.5, -0.12),
    (0.1, -0.12),
    (0.1, -0.35),
    (0.5, 0.0),
    (0.1, 0.35),
    (0.1, 0.12),
    (-0.5, 0.12),
];

pub fn generate_shape(kind: ShapeKind, width: usize, height: usize) -> Result<GrayImage, ImageError> {
    if width < MIN_SHAPE_DIM || height < MIN_SHAPE_DIM {
        return Err(ImageError::TooSmall {
            width,
            height,
            min: MIN_SHAPE_DIM,
        });
    }
    let mut img = GrayImage::filled(width, height, 0);
    let (w, h) = (width as f64, height as f64);
    let s = w.min(h);
    let (cx, cy) = (w / 2.0, h / 2.0);
    match kind {
        ShapeKind::Rectangle => {
            let (c0, c1) = ((0.25 * w).round() as usize, (0.75 * w).round() as usize);
            let (r0, r1) = ((0.25 * h).round() as usize, (0.75 * h).round() as usize);
            for r in r0..r1 {
                for c in c0..c1 {
                    img.set(r, c, 255);
                }
            }
        }
        ShapeKind::Heart => fill_heart(&mut img, cx, cy, 0.6 * s),
        ShapeKind::Star => fill_polygon(&mut img, &star_vertices(cx, cy, 0.35 * s, 0.14 * s)),
        ShapeKind::Arrow => fill_polygon(&mut img, &arrow_vertices(cx, cy, 0.6 * s)),
        ShapeKind::Multi => {
            let t = 0.5 * s;
            fill_polygon(&mut img, &star_vertices(0.27 * w, 0.35 * h, 0.35 * t, 0.14 * t));
            fill_polygon(&mut img, &arrow_vertices(0.72 * w, 0.33 * h, 0.6 * t));
            let (rx, ry) = (0.5 * w, 0.75 * h);
            let (hx, hy) = (0.3 * t, 0.2 * t);
            fill_polygon(
                &mut img,
                &[
                    (rx - hx, ry - hy),
                    (rx + hx, ry - hy),
                    (rx + hx, ry + hy),
                    (rx - hx, ry + hy),
                ],
            );
        }
    }
    Ok(img)
}

fn star_vertices(cx: f64, cy: f64, outer: f64, inner: f64) -> Vec<(f64, f64)> {
    (0..10)
        .map(|i| {
            let angle = -std::f64::consts::FRAC_PI_2 + i as f64 * std::f64::consts::PI / 5.0;
            let r = if i % 2 == 0 { outer } else { inner };
            (cx + r * angle.cos(), cy + r * angle.sin())
        })
        .collect()
}

fn arrow_vertices(cx: f64, cy: f64, length: f64) -> Vec<(f64, f64)> {
    ARROW.iter().map(|&(u, v)| (cx + u * length, cy + v * length)).collect()
}

fn fill_heart(img: &mut GrayImage, cx: f64, cy: f64, height: f64) {
    // The curve spans y in [-1, 1.2361] (top lobes at y = 1.2361).
    const Y_MIN: f64 = -1.0;
    const Y_MAX: f64 = 1.236_067_977_499_79;
    let scale = height / (Y_MAX - Y_MIN);
    let y_mid = 0.5 * (Y_MAX + Y_MIN);
    for r in 0..img.height() {
        let y = -((r as f64 + 0.5) - cy) / scale + y_mid;
        for c in 0..img.width() {
            let x = ((c as f64 + 0.5) - cx) / scale;
            let q = x * x + y * y - 1.0;
            if q * q * q - x * x * y * y * y <= 0.0 {
                img.set(r, c, 255);
            }
        }
    }
}

/// Even-odd scanline fill sampled at pixel centres (`x = col + 0.5`, `y = row + 0.5`).
pub(crate) fn fill_polygon(img: &mut GrayImage, vertices: &[(f64, f64)]) {
    let n = vertices.len();
    if n < 3 {
        return;
    }
    let (width, height) = (img.width(), img.height());
    let mut xs: Vec<f64> = Vec::with_capacity(n);
    for r in 0..height {
        let y = r as f64 + 0.5;
        xs.clear();
        for i in 0..n {
            let (x0, y0) = vertices[i];
            let (x1, y1) = vertices[(i + 1) % n];
            if (y0 <= y) != (y1 <= y) {
                xs.push(x0 + (y - y0) * (x1 - x0) / (y1 - y0));
            } else if y0 == y && y1 == y {
                // Horizontal edge through the sample row: its pixels are boundary.
                mark_span(img, r, x0.min(x1), x0.max(x1), width);
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            mark_span(img, r, pair[0], pair[1], width);
        }
    }
}

fn mark_span(img: &mut GrayImage, row: usize, x0: f64, x1: f64, width: usize) {
    let first = (x0 - 0.5).ceil().max(0.0);
    let last = (x1 - 0.5).floor().min(width as f64 - 1.0);
    if first > last {
        return;
    }
    for c in first as usize..=last as usize {
        img.set(row, c, 255);
    }
}

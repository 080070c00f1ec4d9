//! Seeded additive Gaussian noise.
//!
//! The generator is pinned so that a given seed produces the same image on
//! every platform: `ChaCha8Rng::seed_from_u64(seed)` supplies 64-bit words,
//! each word `w` maps to a uniform `u = 1 - (w >> 11) · 2⁻⁵³ ∈ (0, 1]`, and
//! consecutive pairs `(u₁, u₂)` go through Box–Muller to give two normals
//! `√(−2 ln u₁)·cos(2πu₂)` and `√(−2 ln u₁)·sin(2πu₂)`, consumed in that order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GrayImage, ImageError};

/// Stream of standard normal deviates produced by the pinned Box–Muller scheme.
pub struct NormalSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn uniform_open_closed(&mut self) -> f64 {
        1.0 - (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.uniform_open_closed();
        let u2 = self.uniform_open_closed();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// Adds `N(0, sigma²)` noise to every pixel: `clamp(round(p + n), 0, 255)`.
///
/// Pixels are visited in row-major order, one deviate each.
pub fn add_gaussian_noise(img: &GrayImage, sigma: f64, seed: u64) -> Result<GrayImage, ImageError> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(ImageError::InvalidParameter(format!(
            "noise sigma must be finite and non-negative, got {sigma}"
        )));
    }
    let mut normals = NormalSource::new(seed);
    let data = img
        .data()
        .iter()
        .map(|&p| {
            let v = (p as f64 + sigma * normals.next_normal()).round();
            v.clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(img.width(), img.height(), data)
}

//! Reproducible additive Gaussian noise.
//!
//! The generator is fully specified so other implementations can reproduce
//! it bit for bit:
//!
//! * state update and output follow SplitMix64: add `0x9E3779B97F4A7C15`,
//!   then `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
//!   z *= 0x94D049BB133111EB; z ^= z >> 31` (wrapping arithmetic);
//! * each Box–Muller pair draws two outputs `a`, `b` and forms
//!   `u1 = ((a >> 11) + 1) * 2^-53` in `(0, 1]` and `u2 = (b >> 11) * 2^-53`
//!   in `[0, 1)`; the pair is `r cos(2 pi u2)`, `r sin(2 pi u2)` with
//!   `r = sqrt(-2 ln u1)`, emitted cosine first;
//! * samples are added to pixels in row-major order.
//!
//! Transcendentals come from `libm`, so results do not depend on the
//! platform math library.

use crate::error::{Error, Result};
use crate::image::Image;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `0..n` (modulo reduction).
    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

const INV_2_53: f64 = 1.0 / 9_007_199_254_740_992.0;

/// Standard normal samples via Box–Muller over [`SplitMix64`].
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        GaussianStream {
            rng: SplitMix64::new(seed),
            spare: None,
        }
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let a = self.rng.next_u64();
        let b = self.rng.next_u64();
        let u1 = ((a >> 11) + 1) as f64 * INV_2_53;
        let u2 = (b >> 11) as f64 * INV_2_53;
        let radius = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(radius * libm::sin(theta));
        radius * libm::cos(theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
    /// Clamp to `[0, 255]` after adding noise.
    pub clip: bool,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            sigma: 13.0,
            seed: 42,
            clip: true,
        }
    }
}

pub fn add_gaussian_noise(img: &Image, spec: &NoiseSpec) -> Result<Image> {
    if !(spec.sigma >= 0.0) || !spec.sigma.is_finite() {
        return Err(Error::Config(format!("noise sigma must be non-negative, got {}", spec.sigma)));
    }
    if spec.sigma == 0.0 {
        return Ok(if spec.clip { img.map(|v| v.clamp(0.0, 255.0)) } else { img.clone() });
    }
    let mut stream = GaussianStream::new(spec.seed);
    let data = img
        .data()
        .iter()
        .map(|&v| {
            let noisy = v + spec.sigma * stream.next_standard();
            if spec.clip {
                noisy.clamp(0.0, 255.0)
            } else {
                noisy
            }
        })
        .collect();
    Image::new(img.height(), img.width(), data)
}

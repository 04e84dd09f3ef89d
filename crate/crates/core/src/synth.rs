//! Deterministic piece-wise constant test images.
//!
//! These stand in for depth maps and clip-art: flat regions separated by
//! sharp edges.
//!
//! | kind      | content                                                        |
//! |-----------|----------------------------------------------------------------|
//! | `step`    | columns `< width/2` are 0, the rest 200                        |
//! | `blocks`  | square blocks, each one of [`BLOCK_PLATEAUS`]                  |
//! | `clipart` | background 230 with six seeded rectangles and discs            |
//! | `ramp`    | `255 * col / (width - 1)`                                      |
//! | `ringing` | step 0 to 100 at `width/2` with alternating ±4 bands by the edge |

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::noise::SplitMix64;

pub const STEP_LOW: f64 = 0.0;
pub const STEP_HIGH: f64 = 200.0;
pub const BLOCK_PLATEAUS: [f64; 8] = [0.0, 36.0, 72.0, 108.0, 144.0, 180.0, 216.0, 252.0];
pub const CLIPART_BACKGROUND: f64 = 230.0;
pub const CLIPART_PALETTE: [f64; 5] = [20.0, 70.0, 120.0, 160.0, 200.0];
pub const RINGING_LOW: f64 = 0.0;
pub const RINGING_HIGH: f64 = 100.0;
pub const RINGING_AMPLITUDE: f64 = 4.0;
/// Columns of ringing on each side of the edge.
pub const RINGING_BAND: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Step,
    Blocks,
    Clipart,
    Ramp,
    Ringing,
}

impl SynthKind {
    pub const ALL: [SynthKind; 5] = [
        SynthKind::Step,
        SynthKind::Blocks,
        SynthKind::Clipart,
        SynthKind::Ramp,
        SynthKind::Ringing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SynthKind::Step => "step",
            SynthKind::Blocks => "blocks",
            SynthKind::Clipart => "clipart",
            SynthKind::Ramp => "ramp",
            SynthKind::Ringing => "ringing",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown synthetic image kind '{s}'")))
    }
}

pub fn synth_piecewise(kind: SynthKind, height: usize, width: usize, seed: u64) -> Result<Image> {
    if height < 8 || width < 8 {
        return Err(Error::Config(format!(
            "synthetic images need at least 8x8, got {height}x{width}"
        )));
    }
    match kind {
        SynthKind::Step => Image::from_fn(height, width, |_, c| {
            if c < width / 2 {
                STEP_LOW
            } else {
                STEP_HIGH
            }
        }),
        SynthKind::Ramp => Image::from_fn(height, width, |_, c| 255.0 * c as f64 / (width - 1) as f64),
        SynthKind::Blocks => blocks(height, width, seed),
        SynthKind::Clipart => clipart(height, width, seed),
        SynthKind::Ringing => Ok(ringing_step(height, width)?.1),
    }
}

fn blocks(height: usize, width: usize, seed: u64) -> Result<Image> {
    let size = (height.min(width) / 4).max(4);
    let rows = height.div_ceil(size);
    let cols = width.div_ceil(size);
    let mut rng = SplitMix64::new(seed);
    let values: Vec<f64> = (0..rows * cols)
        .map(|_| BLOCK_PLATEAUS[rng.below(BLOCK_PLATEAUS.len() as u64) as usize])
        .collect();
    Image::from_fn(height, width, |r, c| values[(r / size) * cols + c / size])
}

fn clipart(height: usize, width: usize, seed: u64) -> Result<Image> {
    let mut data = vec![CLIPART_BACKGROUND; height * width];
    let mut rng = SplitMix64::new(seed);
    let (h, w) = (height as u64, width as u64);
    for shape in 0..6u64 {
        let value = CLIPART_PALETTE[rng.below(CLIPART_PALETTE.len() as u64) as usize];
        let cy = rng.below(h) as f64;
        let cx = rng.below(w) as f64;
        let ry = (h / 16 + rng.below(h / 4 + 1)) as f64;
        let rx = (w / 16 + rng.below(w / 4 + 1)) as f64;
        for r in 0..height {
            for c in 0..width {
                let dy = r as f64 - cy;
                let dx = c as f64 - cx;
                let inside = if shape % 2 == 0 {
                    dy.abs() <= ry && dx.abs() <= rx
                } else {
                    (dy / ry).powi(2) + (dx / rx).powi(2) <= 1.0
                };
                if inside {
                    data[r * width + c] = value;
                }
            }
        }
    }
    Image::new(height, width, data)
}

/// Clean step and a copy with compression-style ringing.
///
/// The edge sits between columns `width/2 - 1` and `width/2`. In the
/// [`RINGING_BAND`] columns on each side the distorted copy alternates
/// `±RINGING_AMPLITUDE` column by column around the plateau value.
pub fn ringing_step(height: usize, width: usize) -> Result<(Image, Image)> {
    if height < 8 || width < 4 * RINGING_BAND {
        return Err(Error::Config(format!(
            "ringing fixture needs at least 8x{}, got {height}x{width}",
            4 * RINGING_BAND
        )));
    }
    let edge = width / 2;
    let plateau = |c: usize| if c < edge { RINGING_LOW } else { RINGING_HIGH };
    let clean = Image::from_fn(height, width, |_, c| plateau(c))?;
    let distorted = Image::from_fn(height, width, |_, c| {
        let dist = if c < edge { edge - 1 - c } else { c - edge };
        if dist < RINGING_BAND {
            let sign = if dist % 2 == 0 { 1.0 } else { -1.0 };
            // Overshoot on the high side, undershoot on the low side.
            let toward = if c < edge { -1.0 } else { 1.0 };
            plateau(c) + toward * sign * RINGING_AMPLITUDE
        } else {
            plateau(c)
        }
    })?;
    Ok((clean, distorted))
}

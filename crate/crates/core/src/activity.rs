//! Clipped and normalized local activity.
//!
//! Activity is the population standard deviation over the 3x3 window around
//! each pixel (replicate padding at the borders), clamped to `[1/2, h]` and
//! divided by its global maximum. Both filter families use it to modulate
//! smoothing strength per pixel.

use crate::error::{Error, Result};
use crate::image::Image;

/// Lower clamp applied to the raw standard deviation.
pub const CLIP_LOW: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityConfig {
    /// Upper clamp `h`, in intensity units.
    pub clip_high: f64,
    /// Recompute the map every `update_interval` iterations.
    pub update_interval: usize,
    pub max_iterations: usize,
}

impl Default for ActivityConfig {
    fn default() -> Self {
        ActivityConfig {
            clip_high: 30.0,
            update_interval: 5,
            max_iterations: 11,
        }
    }
}

impl ActivityConfig {
    pub fn validate(&self) -> Result<()> {
        validate_clip_high(self.clip_high)?;
        if self.update_interval == 0 {
            return Err(Error::Config("update interval must be at least 1".into()));
        }
        if self.max_iterations > 0 && self.update_interval > self.max_iterations {
            return Err(Error::Config(format!(
                "update interval {} exceeds iteration count {}",
                self.update_interval, self.max_iterations
            )));
        }
        Ok(())
    }
}

fn validate_clip_high(h: f64) -> Result<()> {
    if !(h > CLIP_LOW) || !h.is_finite() {
        return Err(Error::Config(format!(
            "activity clip bound must be finite and > {CLIP_LOW}, got {h}"
        )));
    }
    Ok(())
}

/// Every stage of the activity computation for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivityMap {
    pub raw_std: Image,
    pub clipped: Image,
    pub normalized: Image,
    /// The map handed to the filters; equal to `normalized` at the time of
    /// computation.
    pub tuned: Image,
}

impl ActivityMap {
    pub fn compute(img: &Image, clip_high: f64) -> Result<Self> {
        let (_, raw_std) = local_mean_std(img);
        let clipped = clip_activity(&raw_std, clip_high)?;
        let normalized = normalize_activity(&clipped);
        Ok(ActivityMap {
            raw_std,
            clipped,
            tuned: normalized.clone(),
            normalized,
        })
    }
}

/// Per-pixel mean and population standard deviation over the 3x3 window.
pub fn local_mean_std(img: &Image) -> (Image, Image) {
    let (h, w) = img.dims();
    let mut mean = Vec::with_capacity(h * w);
    let mut std = Vec::with_capacity(h * w);
    let mut window = [0.0f64; 9];
    for r in 0..h as isize {
        for c in 0..w as isize {
            let mut k = 0;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    window[k] = img.get_clamped(r + dr, c + dc);
                    k += 1;
                }
            }
            let m = window.iter().sum::<f64>() / 9.0;
            let var = window.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 9.0;
            mean.push(m);
            std.push(var.sqrt());
        }
    }
    (Image::from_parts(h, w, mean), Image::from_parts(h, w, std))
}

/// Clamps every value to `[1/2, h]`.
pub fn clip_activity(std: &Image, clip_high: f64) -> Result<Image> {
    validate_clip_high(clip_high)?;
    Ok(std.map(|v| {
        if v < CLIP_LOW {
            CLIP_LOW
        } else if v >= clip_high {
            clip_high
        } else {
            v
        }
    }))
}

/// Divides by the global maximum. Inputs come from `clip_activity`, so the
/// maximum is at least 1/2.
pub fn normalize_activity(clipped: &Image) -> Image {
    let max = clipped.max();
    clipped.map(|v| v / max)
}

/// Interval-updated activity.
///
/// When `t` is a multiple of the update interval, `recompute` is invoked and
/// its result stored in `cache`; otherwise the cached map (computed at
/// `t - t mod l`) is returned.
pub fn scheduled_activity<'a, F>(
    t: usize,
    cfg: &ActivityConfig,
    recompute: F,
    cache: &'a mut Option<Image>,
) -> Result<&'a Image>
where
    F: FnOnce() -> Result<Image>,
{
    if cfg.update_interval == 0 {
        return Err(Error::Config("update interval must be at least 1".into()));
    }
    if t % cfg.update_interval == 0 {
        *cache = Some(recompute()?);
    }
    cache
        .as_ref()
        .ok_or_else(|| Error::Internal(format!("no cached activity map at iteration {t}")))
}

//! Explicit anisotropic diffusion filters.
//!
//! Every filter iterates the update
//!
//! ```text
//! I_i <- I_i + lambda * sum_j c(|I_j - I_i|, ...) * (I_j - I_i)
//! ```
//!
//! over a 4- or 8-connected neighborhood with replicate boundaries. The
//! Perona–Malik variants use a gradient-only conductance. The local
//! activity-tuned (LAT) variants additionally scale the conductance by the
//! clipped, normalized activity `K_i` of the center pixel, recomputed on a
//! schedule: once (`flat*`), every iteration (`tlat*`) or every `l`
//! iterations (`plat*`).
//!
//! The total-variation baseline is a separate explicit descent on the
//! regularized Euler–Lagrange equation, see [`diffuse_tv`].

use std::fmt;
use std::str::FromStr;

use crate::activity::{scheduled_activity, ActivityConfig, ActivityMap};
use crate::error::{Error, Result};
use crate::image::{forward_diff_x, forward_diff_y, Image, NeighborMode};

/// `exp(-(|g|/rho)^2)`.
#[inline]
pub fn edge_stop_pm_exp(grad: f64, rho: f64) -> f64 {
    let t = grad / rho;
    (-(t * t)).exp()
}

/// `1 / (1 + (|g|/rho)^2)`.
#[inline]
pub fn edge_stop_pm_frac(grad: f64, rho: f64) -> f64 {
    let t = grad / rho;
    1.0 / (1.0 + t * t)
}

/// `exp(-(|g| / (rho1 k))^2)`: activity enters squared.
pub fn edge_stop_lat(grad: f64, k: f64, rho1: f64) -> Result<f64> {
    check_activity(k)?;
    Ok(lat_sq(grad, k, rho1))
}

/// `exp(-g^2 / (rho2_sq k))`: activity enters linearly. The scale is passed
/// already squared.
pub fn edge_stop_lat_i(grad: f64, k: f64, rho2_sq: f64) -> Result<f64> {
    check_activity(k)?;
    Ok(lat_lin(grad, k, rho2_sq))
}

fn check_activity(k: f64) -> Result<()> {
    if !(k > 0.0 && k <= 1.0) {
        return Err(Error::Contract(format!("activity must lie in (0, 1], got {k}")));
    }
    Ok(())
}

#[inline]
fn lat_sq(grad: f64, k: f64, rho1: f64) -> f64 {
    let t = grad / (rho1 * k);
    (-(t * t)).exp()
}

#[inline]
fn lat_lin(grad: f64, k: f64, rho2_sq: f64) -> f64 {
    (-(grad * grad) / (rho2_sq * k)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    PmExp,
    PmFrac,
    Flat,
    Tlat,
    #[default]
    Plat,
    FlatI,
    TlatI,
    PlatI,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::PmExp,
        Variant::PmFrac,
        Variant::Flat,
        Variant::Tlat,
        Variant::Plat,
        Variant::FlatI,
        Variant::TlatI,
        Variant::PlatI,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::PmExp => "pm_exp",
            Variant::PmFrac => "pm_frac",
            Variant::Flat => "flat",
            Variant::Tlat => "tlat",
            Variant::Plat => "plat",
            Variant::FlatI => "flat_i",
            Variant::TlatI => "tlat_i",
            Variant::PlatI => "plat_i",
        }
    }

    pub fn is_lat(self) -> bool {
        !matches!(self, Variant::PmExp | Variant::PmFrac)
    }

    /// Variants whose `rho` is the squared scale of the linear-activity stop.
    pub fn uses_rho2_sq(self) -> bool {
        matches!(self, Variant::FlatI | Variant::TlatI | Variant::PlatI)
    }

    /// Activity recompute interval for `iterations` total iterations.
    pub fn effective_interval(self, configured: usize, iterations: usize) -> usize {
        match self {
            Variant::Flat | Variant::FlatI => iterations.max(1),
            Variant::Tlat | Variant::TlatI => 1,
            _ => configured,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown diffusion variant '{s}'")))
    }
}

/// Default `rho` for gradient-only and squared-activity stops.
pub const DEFAULT_RHO1: f64 = 30.0;
/// Default `rho2^2` for the linear-activity stop.
pub const DEFAULT_RHO2_SQ: f64 = 300.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionConfig {
    pub lambda: f64,
    /// `rho` for PM, `rho1` for `flat/tlat/plat`, `rho2^2` for the `_i` variants.
    pub rho: f64,
    pub iterations: usize,
    pub variant: Variant,
    pub activity: ActivityConfig,
    pub neighborhood: NeighborMode,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        DiffusionConfig::for_variant(Variant::default())
    }
}

impl DiffusionConfig {
    /// Defaults with the `rho` appropriate to `variant`.
    pub fn for_variant(variant: Variant) -> Self {
        DiffusionConfig {
            lambda: 0.25,
            rho: if variant.uses_rho2_sq() {
                DEFAULT_RHO2_SQ
            } else {
                DEFAULT_RHO1
            },
            iterations: 11,
            variant,
            activity: ActivityConfig::default(),
            neighborhood: NeighborMode::FourConnected,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bound = 1.0 / self.neighborhood.count() as f64;
        if !(self.lambda > 0.0 && self.lambda <= bound) {
            return Err(Error::Config(format!(
                "lambda must lie in (0, {bound}] for {} neighbors, got {}",
                self.neighborhood.count(),
                self.lambda
            )));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(Error::Config(format!("rho must be positive, got {}", self.rho)));
        }
        if self.variant.is_lat() {
            self.effective_activity().validate()?;
        }
        Ok(())
    }

    /// Activity schedule with the interval implied by the variant.
    pub fn effective_activity(&self) -> ActivityConfig {
        ActivityConfig {
            clip_high: self.activity.clip_high,
            update_interval: self
                .variant
                .effective_interval(self.activity.update_interval, self.iterations),
            max_iterations: self.iterations,
        }
    }
}

/// Runs whichever diffusion `cfg.variant` names.
pub fn diffuse(img: &Image, cfg: &DiffusionConfig) -> Result<Image> {
    if cfg.variant.is_lat() {
        diffuse_lat(img, cfg)
    } else {
        diffuse_pm(img, cfg)
    }
}

/// Perona–Malik diffusion with replicate boundaries.
pub fn diffuse_pm(img: &Image, cfg: &DiffusionConfig) -> Result<Image> {
    cfg.validate()?;
    let stop: fn(f64, f64) -> f64 = match cfg.variant {
        Variant::PmExp => edge_stop_pm_exp,
        Variant::PmFrac => edge_stop_pm_frac,
        v => {
            return Err(Error::Config(format!(
                "variant '{v}' is not a Perona-Malik variant"
            )))
        }
    };
    let offsets = cfg.neighborhood.offsets();
    let mut cur = img.clone();
    for _ in 0..cfg.iterations {
        cur = explicit_step(&cur, offsets, cfg.lambda, |_, g| stop(g, cfg.rho));
    }
    cur.check_finite()?;
    Ok(cur)
}

/// Local activity-tuned diffusion.
pub fn diffuse_lat(img: &Image, cfg: &DiffusionConfig) -> Result<Image> {
    if !cfg.variant.is_lat() {
        return Err(Error::Config(format!(
            "variant '{}' is not an activity-tuned variant",
            cfg.variant
        )));
    }
    cfg.validate()?;
    let schedule = cfg.effective_activity();
    let linear = cfg.variant.uses_rho2_sq();
    let offsets = cfg.neighborhood.offsets();
    let rho = cfg.rho;

    let mut cur = img.clone();
    let mut cache = None;
    for t in 0..cfg.iterations {
        let k = scheduled_activity(
            t,
            &schedule,
            || ActivityMap::compute(&cur, schedule.clip_high).map(|a| a.tuned),
            &mut cache,
        )?;
        let k = k.data();
        let next = if linear {
            explicit_step(&cur, offsets, cfg.lambda, |i, g| lat_lin(g, k[i], rho))
        } else {
            explicit_step(&cur, offsets, cfg.lambda, |i, g| lat_sq(g, k[i], rho))
        };
        cur = next;
    }
    cur.check_finite()?;
    Ok(cur)
}

/// One explicit update. `conductance(i, g)` receives the row-major index of
/// the center pixel and the neighbor difference.
fn explicit_step<F>(cur: &Image, offsets: &[(isize, isize)], lambda: f64, conductance: F) -> Image
where
    F: Fn(usize, f64) -> f64,
{
    let (h, w) = cur.dims();
    let src = cur.data();
    let mut out = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            let center = src[i];
            let mut flux = 0.0;
            for &(dr, dc) in offsets {
                let g = cur.get_clamped(r as isize + dr, c as isize + dc) - center;
                if g != 0.0 {
                    flux += conductance(i, g) * g;
                }
            }
            out.push(center + lambda * flux);
        }
    }
    Image::from_parts(h, w, out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvConfig {
    /// Fidelity weight.
    pub lambda: f64,
    pub dt: f64,
    /// Gradient-magnitude regularizer.
    pub eps: f64,
    pub iterations: usize,
}

impl Default for TvConfig {
    fn default() -> Self {
        TvConfig {
            lambda: 0.25,
            dt: 0.1,
            eps: 1e-3,
            iterations: 50,
        }
    }
}

impl TvConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("dt", self.dt), ("eps", self.eps)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("TV {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Explicit descent on the regularized total-variation Euler–Lagrange
/// equation:
///
/// `I <- I + dt * (div(grad I / sqrt(|grad I|^2 + eps^2)) - lambda (I - I0))`
///
/// The gradient is the forward difference and the divergence its negative
/// adjoint (backward difference), so the flow is the exact gradient descent
/// of the discrete regularized energy.
pub fn diffuse_tv(img: &Image, original: &Image, cfg: &TvConfig) -> Result<Image> {
    img.ensure_same_dims(original)?;
    cfg.validate()?;
    tv_flow(img, original, cfg.lambda, cfg.dt, cfg.eps, cfg.iterations)
}

/// Same flow with fidelity weight zero allowed (pure TV flow).
pub fn tv_flow(img: &Image, original: &Image, lambda: f64, dt: f64, eps: f64, iterations: usize) -> Result<Image> {
    img.ensure_same_dims(original)?;
    let (h, w) = img.dims();
    let eps_sq = eps * eps;
    let mut cur = img.clone();
    for _ in 0..iterations {
        let gx = forward_diff_x(&cur);
        let gy = forward_diff_y(&cur);
        let (gx, gy) = (gx.data(), gy.data());
        let mut px = vec![0.0; h * w];
        let mut py = vec![0.0; h * w];
        for i in 0..h * w {
            let mag = (gx[i] * gx[i] + gy[i] * gy[i] + eps_sq).sqrt();
            px[i] = gx[i] / mag;
            py[i] = gy[i] / mag;
        }
        let src = cur.data();
        let orig = original.data();
        let mut out = Vec::with_capacity(h * w);
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                let mut div = px[i] + py[i];
                if c > 0 {
                    div -= px[i - 1];
                }
                if r > 0 {
                    div -= py[i - w];
                }
                out.push(src[i] + dt * (div - lambda * (src[i] - orig[i])));
            }
        }
        cur = Image::from_parts(h, w, out);
    }
    cur.check_finite()?;
    Ok(cur)
}

//! Relative total variation smoothing and its local activity-tuned variants.
//!
//! The non-convex RTV penalty is minimized by iterated reweighted least
//! squares. Each outer iteration freezes per-pixel weights computed from the
//! current iterate,
//!
//! ```text
//! s_x(q) = [sum_p g(p, q) / (L_x(p) + eps)] / (|dx I(q)| + eps)
//! ```
//!
//! (and likewise for `y`), then solves the sparse SPD system
//!
//! ```text
//! (E + lambda (Gx^T Sx Q Gx + Gy^T Sy Q Gy)) x = b
//! ```
//!
//! where `Q` is the identity (`rtv`), the inverse activity `1/v` (`lat_rtv`,
//! stronger smoothing of low-activity texture) or the activity `v`
//! (`lat_rtvd`, denoising).
//!
//! Gradients entering the weights are measured on intensities divided by
//! [`RtvConfig::intensity_range`], so `lambda` and `eps` carry their usual
//! unit-range meaning while images stay on the 0–255 scale. The activity map
//! is measured in raw intensity units so that `clip_high` matches the
//! diffusion filters.

use std::fmt;
use std::str::FromStr;

use crate::activity::ActivityMap;
use crate::error::{Error, Result};
use crate::image::{forward_diff_x, forward_diff_y, Image};
use crate::solver::{solve_dense, solve_pcg, CsrMatrix, SparseSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RtvMode {
    Rtv,
    #[default]
    LatRtv,
    LatRtvd,
}

impl RtvMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RtvMode::Rtv => "rtv",
            RtvMode::LatRtv => "lat_rtv",
            RtvMode::LatRtvd => "lat_rtvd",
        }
    }
}

impl fmt::Display for RtvMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RtvMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [RtvMode::Rtv, RtvMode::LatRtv, RtvMode::LatRtvd]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown RTV mode '{s}'")))
    }
}

/// What the data term pulls each solve towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fidelity {
    /// The iterate from the previous outer iteration.
    #[default]
    PreviousIterate,
    /// The filter input.
    OriginalImage,
}

impl Fidelity {
    pub fn as_str(self) -> &'static str {
        match self {
            Fidelity::PreviousIterate => "previous_iterate",
            Fidelity::OriginalImage => "original_image",
        }
    }
}

impl fmt::Display for Fidelity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Fidelity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "previous_iterate" => Ok(Fidelity::PreviousIterate),
            "original_image" => Ok(Fidelity::OriginalImage),
            _ => Err(Error::Config(format!("unknown fidelity '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    Pcg,
    Dense,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Pcg => "pcg",
            SolverKind::Dense => "dense",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pcg" => Ok(SolverKind::Pcg),
            "dense" => Ok(SolverKind::Dense),
            _ => Err(Error::Config(format!("unknown solver '{s}'"))),
        }
    }
}

/// Images with more pixels than this must use the iterative solver.
pub const DENSE_MAX_PIXELS: usize = 64 * 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RtvConfig {
    pub lambda: f64,
    pub sigma: f64,
    pub eps: f64,
    pub iterations: usize,
    pub mode: RtvMode,
    pub fidelity: Fidelity,
    /// Activity clip bound, intensity units.
    pub clip_high: f64,
    pub solver: SolverKind,
    /// Relative-residual target for the iterative solver.
    pub tolerance: f64,
    /// Intensity span mapped to unit range when measuring gradients.
    pub intensity_range: f64,
}

impl Default for RtvConfig {
    fn default() -> Self {
        RtvConfig {
            lambda: 0.01,
            sigma: 3.0,
            eps: 1e-3,
            iterations: 4,
            mode: RtvMode::default(),
            fidelity: Fidelity::default(),
            clip_high: 30.0,
            solver: SolverKind::default(),
            tolerance: 1e-6,
            intensity_range: 255.0,
        }
    }
}

impl RtvConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda", self.lambda),
            ("sigma", self.sigma),
            ("eps", self.eps),
            ("tolerance", self.tolerance),
            ("intensity_range", self.intensity_range),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("RTV {name} must be positive, got {v}")));
            }
        }
        if !(self.clip_high > crate::activity::CLIP_LOW) {
            return Err(Error::Config(format!(
                "activity clip bound must exceed {}, got {}",
                crate::activity::CLIP_LOW,
                self.clip_high
            )));
        }
        Ok(())
    }
}

/// Unnormalized Gaussian samples on a `(2r+1) x (2r+1)` window, `r = ceil(3 sigma)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianKernel {
    pub radius: usize,
    pub values: Vec<f64>,
}

impl GaussianKernel {
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Weight at offset `(dr, dc)` from the center.
    pub fn at(&self, dr: isize, dc: isize) -> f64 {
        let r = self.radius as isize;
        if dr.abs() > r || dc.abs() > r {
            return 0.0;
        }
        self.values[((dr + r) * (2 * r + 1) + dc + r) as usize]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

fn window_radius(sigma: f64) -> usize {
    (3.0 * sigma).ceil() as usize
}

pub fn gaussian_window(sigma: f64) -> Result<GaussianKernel> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
    }
    let radius = window_radius(sigma);
    let r = radius as isize;
    let two_s2 = 2.0 * sigma * sigma;
    let mut values = Vec::with_capacity((2 * radius + 1).pow(2));
    for dy in -r..=r {
        for dx in -r..=r {
            values.push((-((dx * dx + dy * dy) as f64) / two_s2).exp());
        }
    }
    Ok(GaussianKernel { radius, values })
}

/// One-dimensional factor of the window; the 2-D window is its outer product.
fn gaussian_profile(sigma: f64) -> Vec<f64> {
    let r = window_radius(sigma) as isize;
    let two_s2 = 2.0 * sigma * sigma;
    (-r..=r).map(|d| (-((d * d) as f64) / two_s2).exp()).collect()
}

/// Gaussian-weighted window sum with zero padding outside the image,
/// computed separably (rows, then columns).
fn window_sum(src: &[f64], h: usize, w: usize, profile: &[f64]) -> Vec<f64> {
    let r = profile.len() / 2;
    let mut tmp = vec![0.0; h * w];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let lo = x.saturating_sub(r);
            let hi = (x + r).min(w - 1);
            let mut acc = 0.0;
            for q in lo..=hi {
                acc += profile[q + r - x] * row[q];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        let lo = y.saturating_sub(r);
        let hi = (y + r).min(h - 1);
        for x in 0..w {
            let mut acc = 0.0;
            for q in lo..=hi {
                acc += profile[q + r - y] * tmp[q * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Windowed total variation `D` and windowed inherent variation `L` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedVariations {
    pub d_x: Image,
    pub d_y: Image,
    pub l_x: Image,
    pub l_y: Image,
}

/// `D = sum g |dI|` and `L = |sum g dI|` over the Gaussian window, on the
/// image as given (no intensity rescaling).
pub fn windowed_variations(img: &Image, sigma: f64) -> Result<WindowedVariations> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
    }
    let (h, w) = img.dims();
    let profile = gaussian_profile(sigma);
    let gx = forward_diff_x(img);
    let gy = forward_diff_y(img);
    let abs = |v: &[f64]| v.iter().map(|x| x.abs()).collect::<Vec<_>>();
    let d_x = window_sum(&abs(gx.data()), h, w, &profile);
    let d_y = window_sum(&abs(gy.data()), h, w, &profile);
    let l_x = abs(&window_sum(gx.data(), h, w, &profile));
    let l_y = abs(&window_sum(gy.data(), h, w, &profile));
    Ok(WindowedVariations {
        d_x: Image::from_parts(h, w, d_x),
        d_y: Image::from_parts(h, w, d_y),
        l_x: Image::from_parts(h, w, l_x),
        l_y: Image::from_parts(h, w, l_y),
    })
}

/// Frozen weights of one reweighted least-squares step.
#[derive(Debug, Clone, PartialEq)]
pub struct RtvWeights {
    pub s_x: Image,
    pub s_y: Image,
    /// Per-pixel activity factor: ones (`rtv`), `c = 1/v` (`lat_rtv`) or
    /// `w = v` (`lat_rtvd`).
    pub activity_factor: Image,
}

/// Weights for the current iterate, with the activity map measured on it.
pub fn decomposition_weights(img: &Image, cfg: &RtvConfig) -> Result<RtvWeights> {
    cfg.validate()?;
    let v = match cfg.mode {
        RtvMode::Rtv => None,
        RtvMode::LatRtv | RtvMode::LatRtvd => Some(ActivityMap::compute(img, cfg.clip_high)?.normalized),
    };
    decomposition_weights_with_activity(img, cfg, v.as_ref())
}

/// Weights with a caller-supplied normalized activity map `v` (ignored in
/// `rtv` mode, required otherwise).
pub fn decomposition_weights_with_activity(
    img: &Image,
    cfg: &RtvConfig,
    activity: Option<&Image>,
) -> Result<RtvWeights> {
    let (h, w) = img.dims();
    let scale = 1.0 / cfg.intensity_range;
    let profile = gaussian_profile(cfg.sigma);
    let eps = cfg.eps;

    let axis = |grad: Image| -> Image {
        let g: Vec<f64> = grad.data().iter().map(|v| v * scale).collect();
        let l = window_sum(&g, h, w, &profile);
        let inv_l: Vec<f64> = l.iter().map(|v| 1.0 / (v.abs() + eps)).collect();
        let blurred = window_sum(&inv_l, h, w, &profile);
        let s = blurred
            .iter()
            .zip(&g)
            .map(|(b, g)| b / (g.abs() + eps))
            .collect();
        Image::from_parts(h, w, s)
    };
    let s_x = axis(forward_diff_x(img));
    let s_y = axis(forward_diff_y(img));

    let activity_factor = match cfg.mode {
        RtvMode::Rtv => Image::from_parts(h, w, vec![1.0; h * w]),
        RtvMode::LatRtv | RtvMode::LatRtvd => {
            let v = activity.ok_or_else(|| {
                Error::Contract(format!("mode {} needs an activity map", cfg.mode))
            })?;
            img.ensure_same_dims(v)?;
            if let Some(bad) = v.data().iter().find(|&&x| !(x > 0.0 && x <= 1.0)) {
                return Err(Error::Contract(format!("activity value {bad} outside (0, 1]")));
            }
            if cfg.mode == RtvMode::LatRtv {
                v.map(|x| 1.0 / x)
            } else {
                v.clone()
            }
        }
    };
    s_x.check_finite()?;
    s_y.check_finite()?;
    Ok(RtvWeights {
        s_x,
        s_y,
        activity_factor,
    })
}

/// Assembles `E + lambda (Gx^T Sx Q Gx + Gy^T Sy Q Gy)` with `target` as the
/// right-hand side. Built stencil-wise: at most five entries per row, columns
/// `p-W, p-1, p, p+1, p+W`. `lambda = 0` gives the identity.
pub fn assemble_system(weights: &RtvWeights, lambda: f64, target: &Image) -> Result<SparseSystem> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Config(format!("lambda must be non-negative, got {lambda}")));
    }
    target.ensure_same_dims(&weights.s_x)?;
    target.ensure_same_dims(&weights.s_y)?;
    target.ensure_same_dims(&weights.activity_factor)?;
    let (h, w) = target.dims();
    let n = h * w;
    let (sx, sy, q) = (
        weights.s_x.data(),
        weights.s_y.data(),
        weights.activity_factor.data(),
    );
    // Edge weight between p and its right (resp. lower) neighbor.
    let ax = |p: usize| lambda * sx[p] * q[p];
    let ay = |p: usize| lambda * sy[p] * q[p];

    let mut row_offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(5 * n);
    let mut vals = Vec::with_capacity(5 * n);
    row_offsets.push(0);
    for r in 0..h {
        for c in 0..w {
            let p = r * w + c;
            let mut diag = 1.0;
            if r > 0 {
                let a = ay(p - w);
                cols.push(p - w);
                vals.push(-a);
                diag += a;
            }
            if c > 0 {
                let a = ax(p - 1);
                cols.push(p - 1);
                vals.push(-a);
                diag += a;
            }
            let diag_slot = vals.len();
            cols.push(p);
            vals.push(0.0);
            if c + 1 < w {
                let a = ax(p);
                cols.push(p + 1);
                vals.push(-a);
                diag += a;
            }
            if r + 1 < h {
                let a = ay(p);
                cols.push(p + w);
                vals.push(-a);
                diag += a;
            }
            vals[diag_slot] = diag;
            row_offsets.push(cols.len());
        }
    }
    let matrix = CsrMatrix::from_raw_parts(n, n, row_offsets, cols, vals)?;
    SparseSystem::new(matrix, target.data().to_vec())
}

/// Iteration cap for the iterative solver on an `n`-unknown system.
pub fn pcg_max_iterations(n: usize) -> usize {
    10 * n
}

/// Solves with the configured backend, returning the solution and the
/// solver iteration count (zero for the direct solve).
pub fn solve_system(system: &SparseSystem, cfg: &RtvConfig) -> Result<(Vec<f64>, usize)> {
    match cfg.solver {
        SolverKind::Pcg => {
            let sol = solve_pcg(system, cfg.tolerance, pcg_max_iterations(system.n()))?;
            Ok((sol.x, sol.iterations))
        }
        SolverKind::Dense => {
            if system.n() > DENSE_MAX_PIXELS {
                return Err(Error::Config(format!(
                    "dense solver limited to {DENSE_MAX_PIXELS} pixels, got {}",
                    system.n()
                )));
            }
            Ok((solve_dense(system)?, 0))
        }
    }
}

/// Output of [`rtv_filter_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct RtvReport {
    pub image: Image,
    /// Solver iterations per outer iteration.
    pub solver_iterations: Vec<usize>,
}

pub fn rtv_filter(img: &Image, cfg: &RtvConfig) -> Result<Image> {
    rtv_filter_report(img, cfg).map(|r| r.image)
}

/// Runs `cfg.iterations` outer iterations: weights from the current
/// iterate, then one linear solve.
pub fn rtv_filter_report(img: &Image, cfg: &RtvConfig) -> Result<RtvReport> {
    cfg.validate()?;
    let (h, w) = img.dims();
    let mut cur = img.clone();
    let mut solver_iterations = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        let weights = decomposition_weights(&cur, cfg)?;
        let target = match cfg.fidelity {
            Fidelity::PreviousIterate => &cur,
            Fidelity::OriginalImage => img,
        };
        let system = assemble_system(&weights, cfg.lambda, target)?;
        let (x, iters) = solve_system(&system, cfg)?;
        solver_iterations.push(iters);
        cur = Image::from_parts(h, w, x);
        cur.check_finite()?;
    }
    Ok(RtvReport {
        image: cur,
        solver_iterations,
    })
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use latfilter::activity::ActivityConfig;
use latfilter::diffusion::{DEFAULT_RHO1, DEFAULT_RHO2_SQ};
use latfilter::{
    DiffusionConfig, Fidelity, NeighborMode, NoiseSpec, RtvConfig, RtvMode, SolverKind, SynthKind, TvConfig,
    Variant,
};

use crate::io::ColorMode;

#[derive(Debug, Parser)]
#[command(name = "latfilter", version, about = "Local-activity-tuned smoothing filters for piece-wise constant images")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Anisotropic diffusion (Perona–Malik or activity-tuned).
    FilterAd(FilterAdArgs),
    /// Relative-total-variation smoothing, optionally activity-tuned.
    FilterRtv(FilterRtvArgs),
    /// Total-variation flow baseline.
    FilterTv(FilterTvArgs),
    /// Add seeded Gaussian noise.
    Noise(NoiseArgs),
    /// Peak signal-to-noise ratio of two images (peak 255).
    Psnr(PsnrArgs),
    /// Write a synthetic piece-wise constant image.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
pub struct FilterIo {
    pub input: PathBuf,
    /// Output file; `.pgm` or `.png`.
    pub output: PathBuf,
    /// How color PNG input is handled.
    #[arg(long, value_enum, default_value_t = ColorMode::Luma)]
    pub color: ColorMode,
    /// Write PGM as ASCII (P2) instead of binary (P5).
    #[arg(long)]
    pub ascii: bool,
    /// Print a JSON run record on stdout.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Neighbors {
    #[value(name = "4")]
    Four,
    #[value(name = "8")]
    Eight,
}

impl From<Neighbors> for NeighborMode {
    fn from(n: Neighbors) -> Self {
        match n {
            Neighbors::Four => NeighborMode::FourConnected,
            Neighbors::Eight => NeighborMode::EightConnected,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FilterAdArgs {
    #[command(flatten)]
    pub io: FilterIo,
    /// pm_exp, pm_frac, flat, tlat, plat, flat_i, tlat_i or plat_i.
    #[arg(long, default_value_t = Variant::Plat)]
    pub variant: Variant,
    /// Step size; at most 1/4 (4 neighbors) or 1/8 (8 neighbors).
    #[arg(long, default_value_t = 0.25)]
    pub lambda: f64,
    /// Edge threshold for pm_exp / pm_frac.
    #[arg(long, default_value_t = DEFAULT_RHO1)]
    pub rho: f64,
    /// Edge threshold for flat / tlat / plat.
    #[arg(long, default_value_t = DEFAULT_RHO1)]
    pub rho1: f64,
    /// Squared edge threshold for the `_i` variants.
    #[arg(long = "rho2-sq", default_value_t = DEFAULT_RHO2_SQ)]
    pub rho2_sq: f64,
    /// Upper activity clamp.
    #[arg(long, default_value_t = 30.0)]
    pub h: f64,
    #[arg(long, default_value_t = 11)]
    pub iters: usize,
    /// Activity recompute interval (plat variants).
    #[arg(long, default_value_t = 5)]
    pub interval: usize,
    #[arg(long, value_enum, default_value_t = Neighbors::Four)]
    pub neighbors: Neighbors,
}

impl FilterAdArgs {
    pub fn to_config(&self) -> DiffusionConfig {
        let rho = match self.variant {
            Variant::PmExp | Variant::PmFrac => self.rho,
            v if v.uses_rho2_sq() => self.rho2_sq,
            _ => self.rho1,
        };
        DiffusionConfig {
            lambda: self.lambda,
            rho,
            iterations: self.iters,
            variant: self.variant,
            activity: ActivityConfig {
                clip_high: self.h,
                update_interval: self.interval,
                max_iterations: self.iters,
            },
            neighborhood: self.neighbors.into(),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FilterRtvArgs {
    #[command(flatten)]
    pub io: FilterIo,
    /// rtv, lat_rtv or lat_rtvd.
    #[arg(long, default_value_t = RtvMode::LatRtv)]
    pub mode: RtvMode,
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    /// Gaussian window scale in pixels.
    #[arg(long, default_value_t = 3.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 4)]
    pub iters: usize,
    /// previous_iterate or original_image.
    #[arg(long, default_value_t = Fidelity::PreviousIterate)]
    pub fidelity: Fidelity,
    /// Upper activity clamp.
    #[arg(long, default_value_t = 30.0)]
    pub h: f64,
    /// pcg or dense.
    #[arg(long, default_value_t = SolverKind::Pcg)]
    pub solver: SolverKind,
    /// Relative residual tolerance for PCG.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

impl FilterRtvArgs {
    pub fn to_config(&self) -> RtvConfig {
        RtvConfig {
            lambda: self.lambda,
            sigma: self.sigma,
            eps: self.eps,
            iterations: self.iters,
            mode: self.mode,
            fidelity: self.fidelity,
            clip_high: self.h,
            solver: self.solver,
            tolerance: self.tol,
            ..RtvConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct FilterTvArgs {
    #[command(flatten)]
    pub io: FilterIo,
    /// Fidelity weight.
    #[arg(long, default_value_t = 0.25)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 50)]
    pub iters: usize,
}

impl FilterTvArgs {
    pub fn to_config(&self) -> TvConfig {
        TvConfig {
            lambda: self.lambda,
            dt: self.dt,
            eps: self.eps,
            iterations: self.iters,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct NoiseArgs {
    #[command(flatten)]
    pub io: FilterIo,
    #[arg(long, default_value_t = 13.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Keep values outside [0, 255] instead of clamping.
    #[arg(long)]
    pub no_clip: bool,
}

impl NoiseArgs {
    pub fn to_spec(&self) -> NoiseSpec {
        NoiseSpec {
            sigma: self.sigma,
            seed: self.seed,
            clip: !self.no_clip,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct PsnrArgs {
    pub reference: PathBuf,
    pub test: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// step, blocks, clipart, ramp or ringing.
    pub kind: SynthKind,
    pub output: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the artifact-free reference (differs from the output only
    /// for `ringing`).
    #[arg(long)]
    pub clean: Option<PathBuf>,
    #[arg(long)]
    pub ascii: bool,
    #[arg(long)]
    pub json: bool,
}

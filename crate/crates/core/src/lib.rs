//! Local activity-tuned edge-preserving filters for single-channel images.
//!
//! Two families are provided:
//!
//! * [`diffusion`]: Perona–Malik diffusion, the activity-tuned variants
//!   (`flat`, `tlat`, `plat` and their `_i` counterparts) aimed at coding
//!   artifacts on piece-wise smooth images, plus a total-variation baseline.
//! * [`rtv`]: relative total variation smoothing and its activity-tuned
//!   smoothing (`lat_rtv`) and denoising (`lat_rtvd`) modes, solved as a
//!   sequence of sparse SPD systems (see [`solver`]).
//!
//! Images are real-valued on a nominal 0–255 scale ([`Image`]); quantization
//! happens only when writing files.

pub mod activity;
pub mod diffusion;
pub mod error;
pub mod image;
pub mod metrics;
pub mod noise;
pub mod rtv;
pub mod solver;
pub mod synth;

pub use activity::{ActivityConfig, ActivityMap};
pub use diffusion::{diffuse, diffuse_lat, diffuse_pm, diffuse_tv, DiffusionConfig, TvConfig, Variant};
pub use error::{Error, Result};
pub use image::{Image, NeighborMode};
pub use metrics::{discrete_tv, psnr};
pub use noise::{add_gaussian_noise, NoiseSpec};
pub use rtv::{rtv_filter, Fidelity, RtvConfig, RtvMode, SolverKind};
pub use solver::{CsrMatrix, SparseSystem};
pub use synth::{synth_piecewise, SynthKind};

//! Library half of the `latfilter` binary: argument types, file I/O and the
//! command runner. `main.rs` only parses arguments and maps errors to exit
//! codes.

pub mod io;

mod args;

use std::time::Instant;

use latfilter::metrics::{mse, PSNR_PEAK};
use latfilter::rtv::rtv_filter_report;
use latfilter::synth::ringing_step;
use latfilter::{add_gaussian_noise, diffuse, diffuse_tv, discrete_tv, synth_piecewise, Image, SynthKind};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

pub use args::{
    Cli, Command, FilterAdArgs, FilterIo, FilterRtvArgs, FilterTvArgs, Neighbors, NoiseArgs, PsnrArgs, SynthArgs,
};
pub use io::{read_gray, read_image, write_image, ColorMode, IoError, PgmEncoding};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] IoError),
    /// Invalid parameters or inputs rejected by the library.
    #[error("{0}")]
    Config(latfilter::Error),
    /// Non-convergence, non-finite values or singular systems.
    #[error("{0}")]
    Numeric(latfilter::Error),
}

impl From<latfilter::Error> for CliError {
    fn from(e: latfilter::Error) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e)
        } else {
            CliError::Config(e)
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }
}

/// The `--json` record.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub command: &'static str,
    pub params: Value,
    pub metrics: Value,
    pub wall_time_ms: f64,
}

/// Runs a parsed command and returns what should go to stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let start = Instant::now();
    let (name, json_out, params, metrics, text) = match &cli.command {
        Command::FilterAd(a) => {
            let cfg = a.to_config();
            cfg.validate()?;
            let params = json!({
                "variant": cfg.variant.as_str(),
                "lambda": cfg.lambda,
                "rho": cfg.rho,
                "h": cfg.activity.clip_high,
                "iters": cfg.iterations,
                "interval": cfg.effective_activity().update_interval,
                "neighbors": cfg.neighborhood.count(),
            });
            let (inputs, outputs) = filter_channels(&a.io, |img| Ok(diffuse(img, &cfg)?))?;
            ("filter-ad", a.io.json, params, filter_metrics(&inputs, &outputs), String::new())
        }
        Command::FilterRtv(a) => {
            let cfg = a.to_config();
            cfg.validate()?;
            let params = json!({
                "mode": cfg.mode.as_str(),
                "lambda": cfg.lambda,
                "sigma": cfg.sigma,
                "eps": cfg.eps,
                "iters": cfg.iterations,
                "fidelity": cfg.fidelity.as_str(),
                "h": cfg.clip_high,
                "solver": cfg.solver.as_str(),
                "tol": cfg.tolerance,
            });
            let mut solver_iterations = Vec::new();
            let (inputs, outputs) = filter_channels(&a.io, |img| {
                let report = rtv_filter_report(img, &cfg)?;
                solver_iterations.extend_from_slice(&report.solver_iterations);
                Ok(report.image)
            })?;
            let mut metrics = filter_metrics(&inputs, &outputs);
            metrics["solver_iterations"] = json!(solver_iterations);
            ("filter-rtv", a.io.json, params, metrics, String::new())
        }
        Command::FilterTv(a) => {
            let cfg = a.to_config();
            cfg.validate()?;
            let params = json!({
                "lambda": cfg.lambda,
                "dt": cfg.dt,
                "eps": cfg.eps,
                "iters": cfg.iterations,
            });
            let (inputs, outputs) = filter_channels(&a.io, |img| Ok(diffuse_tv(img, img, &cfg)?))?;
            ("filter-tv", a.io.json, params, filter_metrics(&inputs, &outputs), String::new())
        }
        Command::Noise(a) => {
            let spec = a.to_spec();
            let params = json!({ "sigma": spec.sigma, "seed": spec.seed, "clip": spec.clip });
            let mut channel = 0u64;
            let (inputs, outputs) = filter_channels(&a.io, |img| {
                // Channels past the first draw from consecutive seeds.
                let s = latfilter::NoiseSpec {
                    seed: spec.seed.wrapping_add(channel),
                    ..spec
                };
                channel += 1;
                Ok(add_gaussian_noise(img, &s)?)
            })?;
            let metrics = json!({ "psnr_db": psnr_value(joint_psnr(&inputs, &outputs)?) });
            ("noise", a.io.json, params, metrics, String::new())
        }
        Command::Psnr(a) => {
            let reference = read_gray(&a.reference)?;
            let test = read_gray(&a.test)?;
            let err = mse(&reference, &test)?;
            let db = latfilter::psnr(&reference, &test)?;
            let text = if db.is_infinite() {
                "inf\n".to_string()
            } else {
                format!("{db:.4}\n")
            };
            let metrics = json!({ "psnr_db": psnr_value(db), "mse": err });
            ("psnr", a.json, json!({}), metrics, text)
        }
        Command::Synth(a) => {
            let img = synth_piecewise(a.kind, a.height, a.width, a.seed)?;
            write_image(std::slice::from_ref(&img), &a.output, encoding(a.ascii))?;
            if let Some(path) = &a.clean {
                let clean = match a.kind {
                    SynthKind::Ringing => ringing_step(a.height, a.width)?.0,
                    _ => img.clone(),
                };
                write_image(&[clean], path, encoding(a.ascii))?;
            }
            let params = json!({ "kind": a.kind.as_str(), "height": a.height, "width": a.width, "seed": a.seed });
            let metrics = json!({ "min": img.min(), "max": img.max(), "mean": img.mean(), "tv": discrete_tv(&img) });
            ("synth", a.json, params, metrics, String::new())
        }
    };
    if !json_out {
        return Ok(text);
    }
    let record = RunRecord {
        command: name,
        params,
        metrics,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let mut line = serde_json::to_string(&record).map_err(|e| CliError::Config(latfilter::Error::Internal(e.to_string())))?;
    line.push('\n');
    Ok(line)
}

fn encoding(ascii: bool) -> PgmEncoding {
    if ascii {
        PgmEncoding::Ascii
    } else {
        PgmEncoding::Binary
    }
}

/// Reads the input, applies `f` to every channel and writes the result.
fn filter_channels(
    io: &FilterIo,
    mut f: impl FnMut(&Image) -> Result<Image, CliError>,
) -> Result<(Vec<Image>, Vec<Image>), CliError> {
    let inputs = read_image(&io.input, io.color)?;
    let outputs = inputs.iter().map(&mut f).collect::<Result<Vec<_>, _>>()?;
    write_image(&outputs, &io.output, encoding(io.ascii))?;
    Ok((inputs, outputs))
}

fn filter_metrics(inputs: &[Image], outputs: &[Image]) -> Value {
    let sum = |imgs: &[Image], g: fn(&Image) -> f64| imgs.iter().map(g).sum::<f64>();
    json!({
        "channels": inputs.len(),
        "mean_in": sum(inputs, Image::mean) / inputs.len() as f64,
        "mean_out": sum(outputs, Image::mean) / outputs.len() as f64,
        "tv_in": sum(inputs, discrete_tv),
        "tv_out": sum(outputs, discrete_tv),
    })
}

/// PSNR over all channels pooled together.
fn joint_psnr(a: &[Image], b: &[Image]) -> Result<f64, CliError> {
    let mut total = 0.0;
    for (x, y) in a.iter().zip(b) {
        total += mse(x, y)?;
    }
    let m = total / a.len() as f64;
    Ok(if m == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PSNR_PEAK * PSNR_PEAK / m).log10()
    })
}

/// JSON has no infinity; identical images report the string `"inf"`.
fn psnr_value(db: f64) -> Value {
    if db.is_finite() {
        json!(db)
    } else {
        json!("inf")
    }
}

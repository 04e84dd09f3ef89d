//! Image quality measures.

use crate::error::Result;
use crate::image::{forward_diff_x, forward_diff_y, Image};

/// Peak value used by [`psnr`].
pub const PSNR_PEAK: f64 = 255.0;

/// Mean squared difference.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.len() as f64)
}

/// Peak signal-to-noise ratio in decibels with a fixed 255 peak.
///
/// Identical images give `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (PSNR_PEAK * PSNR_PEAK / m).log10())
}

/// Isotropic discrete total variation with forward differences.
pub fn discrete_tv(img: &Image) -> f64 {
    let gx = forward_diff_x(img);
    let gy = forward_diff_y(img);
    gx.data()
        .iter()
        .zip(gy.data())
        .map(|(x, y)| (x * x + y * y).sqrt())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn psnr_examples() {
        let a = Image::from_fn(4, 4, |r, c| (r * 4 + c) as f64).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = a.map(|v| v + 1.0);
        assert!((psnr(&a, &b).unwrap() - 48.130803608679106).abs() < 1e-12);
        let c = a.map(|v| v + 255.0);
        assert!(psnr(&a, &c).unwrap().abs() < 1e-12);
        let d = Image::filled(4, 5, 0.0).unwrap();
        assert!(matches!(psnr(&a, &d), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn tv_examples() {
        assert_eq!(discrete_tv(&Image::filled(5, 5, 3.0).unwrap()), 0.0);
        let step = Image::from_fn(7, 6, |_, c| if c < 3 { 0.0 } else { 100.0 }).unwrap();
        assert_eq!(discrete_tv(&step), 700.0);
    }
}

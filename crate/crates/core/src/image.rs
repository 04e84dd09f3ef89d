//! The single-channel real-valued image grid and the discrete gradient
//! operators every filter in the crate is built from.
//!
//! Two boundary conventions coexist:
//!
//! * neighbor gradients (diffusion) replicate the nearest in-bounds pixel, so
//!   no flux crosses the border;
//! * forward differences are zero in the last column (resp. row), which is
//!   what the sparse operator matrices encode.
//!
//! Vectorization is row-major: pixel `(r, c)` sits at index `r * width + c`.

use std::fmt;

use crate::error::{Error, Result};
use crate::solver::CsrMatrix;

/// Rectangular grid of real intensities, nominally on a 0–255 scale.
#[derive(Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Image {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Image")
            .field("height", &self.height)
            .field("width", &self.width)
            .finish_non_exhaustive()
    }
}

impl Image {
    /// Builds an image from row-major samples.
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height < 2 || width < 2 {
            return Err(Error::InvalidImage(format!(
                "image must be at least 2x2, got {height}x{width}"
            )));
        }
        if data.len() != height * width {
            return Err(Error::InvalidImage(format!(
                "expected {} samples for {height}x{width}, got {}",
                height * width,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!(
                "non-finite sample at index {pos}"
            )));
        }
        Ok(Image {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Image::new(height, width, vec![value; height * width])
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Image::new(height, width, data)
    }

    /// Internal constructor for results derived from an already valid image.
    /// Skips the finiteness scan; callers guarantee the shape.
    pub(crate) fn from_parts(height: usize, width: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), height * width);
        Image {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Sample with replicate padding: out-of-range coordinates are clamped
    /// to the nearest in-bounds pixel.
    #[inline]
    pub fn get_clamped(&self, row: isize, col: isize) -> f64 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.data[r * self.width + c]
    }

    /// Applies `f` to every sample.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image::from_parts(self.height, self.width, self.data.iter().map(|&v| f(v)).collect())
    }

    /// Verifies that every sample is finite; filters call this on their output.
    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(pos) => Err(Error::NonFinite(format!("sample {pos} of {}x{} image", self.height, self.width))),
            None => Ok(()),
        }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sum of all samples, accumulated in row-major order.
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.data.len() as f64
    }

    pub(crate) fn ensure_same_dims(&self, other: &Image) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.height, self.width),
                actual: format!("{}x{}", other.height, other.width),
            });
        }
        Ok(())
    }
}

/// Which pixels count as neighbors of a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborMode {
    #[default]
    FourConnected,
    EightConnected,
}

const FOUR: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
const EIGHT: [(isize, isize); 8] = [
    (-1, 0),
    (1, 0),
    (0, -1),
    (0, 1),
    (-1, -1),
    (-1, 1),
    (1, -1),
    (1, 1),
];

impl NeighborMode {
    /// `(row delta, column delta)` pairs, axial neighbors first.
    pub fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            NeighborMode::FourConnected => &FOUR,
            NeighborMode::EightConnected => &EIGHT,
        }
    }

    pub fn count(self) -> usize {
        self.offsets().len()
    }
}

/// `I_j - I_i` for the neighbor of `pixel` at `offset`, with the neighbor
/// replicated from the nearest in-bounds pixel when it falls outside.
pub fn neighbor_gradient(img: &Image, pixel: (usize, usize), offset: (isize, isize)) -> Result<f64> {
    let (r, c) = pixel;
    if r >= img.height || c >= img.width {
        return Err(Error::Contract(format!(
            "pixel ({r}, {c}) outside {}x{} image",
            img.height, img.width
        )));
    }
    if offset.0.abs() > 1 || offset.1.abs() > 1 || offset == (0, 0) {
        return Err(Error::Contract(format!("{offset:?} is not a neighbor offset")));
    }
    let center = img.get(r, c);
    Ok(img.get_clamped(r as isize + offset.0, c as isize + offset.1) - center)
}

/// Horizontal forward difference; the last column is zero.
pub fn forward_diff_x(img: &Image) -> Image {
    let (h, w) = img.dims();
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        let row = &img.data[r * w..(r + 1) * w];
        let dst = &mut out[r * w..(r + 1) * w];
        for c in 0..w - 1 {
            dst[c] = row[c + 1] - row[c];
        }
    }
    Image::from_parts(h, w, out)
}

/// Vertical forward difference; the last row is zero.
pub fn forward_diff_y(img: &Image) -> Image {
    let (h, w) = img.dims();
    let mut out = vec![0.0; h * w];
    for r in 0..h - 1 {
        for c in 0..w {
            out[r * w + c] = img.data[(r + 1) * w + c] - img.data[r * w + c];
        }
    }
    Image::from_parts(h, w, out)
}

/// Sparse forward-difference operators `(G_x, G_y)` acting on row-major
/// vectorized `height x width` images. Rows for the last column (for `G_x`)
/// and the last row (for `G_y`) are empty.
pub fn gradient_operator_matrices(height: usize, width: usize) -> Result<(CsrMatrix, CsrMatrix)> {
    if height < 2 || width < 2 {
        return Err(Error::InvalidImage(format!(
            "operators need at least 2x2, got {height}x{width}"
        )));
    }
    let n = height * width;
    let mut gx = Vec::with_capacity(2 * n);
    let mut gy = Vec::with_capacity(2 * n);
    for r in 0..height {
        for c in 0..width {
            let p = r * width + c;
            if c + 1 < width {
                gx.push((p, p, -1.0));
                gx.push((p, p + 1, 1.0));
            }
            if r + 1 < height {
                gy.push((p, p, -1.0));
                gy.push((p, p + width, 1.0));
            }
        }
    }
    Ok((
        CsrMatrix::from_triplets(n, n, &gx)?,
        CsrMatrix::from_triplets(n, n, &gy)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(h: usize, w: usize, v: &[f64]) -> Image {
        Image::new(h, w, v.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(Image::new(1, 5, vec![0.0; 5]).is_err());
        assert!(Image::new(2, 2, vec![0.0; 3]).is_err());
        assert!(Image::new(2, 2, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        assert!(Image::new(2, 2, vec![0.0, f64::INFINITY, 0.0, 0.0]).is_err());
    }

    #[test]
    fn neighbor_offsets() {
        assert_eq!(NeighborMode::FourConnected.offsets(), &[(-1, 0), (1, 0), (0, -1), (0, 1)]);
        let eight = NeighborMode::EightConnected.offsets();
        assert_eq!(eight.len(), 8);
        assert_eq!(&eight[..4], NeighborMode::FourConnected.offsets());
        for d in [(-1, -1), (-1, 1), (1, -1), (1, 1)] {
            assert!(eight.contains(&d));
        }
    }

    #[test]
    fn neighbor_gradient_examples() {
        let flat = Image::filled(3, 3, 42.0).unwrap();
        for &o in NeighborMode::EightConnected.offsets() {
            assert_eq!(neighbor_gradient(&flat, (1, 1), o).unwrap(), 0.0);
        }
        let pair = img(2, 2, &[0.0, 10.0, 0.0, 10.0]);
        assert_eq!(neighbor_gradient(&pair, (0, 0), (0, 1)).unwrap(), 10.0);
        // Out-of-bounds neighbors replicate the pixel itself.
        assert_eq!(neighbor_gradient(&pair, (0, 0), (-1, 0)).unwrap(), 0.0);
        assert_eq!(neighbor_gradient(&pair, (0, 0), (0, -1)).unwrap(), 0.0);
        assert_eq!(neighbor_gradient(&pair, (0, 1), (0, 1)).unwrap(), 0.0);
    }

    #[test]
    fn neighbor_gradient_rejects_bad_indices() {
        let pair = img(2, 2, &[0.0, 10.0, 0.0, 10.0]);
        assert!(matches!(neighbor_gradient(&pair, (2, 0), (0, 1)), Err(Error::Contract(_))));
        assert!(matches!(neighbor_gradient(&pair, (0, 0), (0, 2)), Err(Error::Contract(_))));
        assert!(matches!(neighbor_gradient(&pair, (0, 0), (0, 0)), Err(Error::Contract(_))));
    }

    #[test]
    fn forward_diff_row_example() {
        let im = img(2, 4, &[0.0, 3.0, 3.0, 8.0, 0.0, 3.0, 3.0, 8.0]);
        assert_eq!(&forward_diff_x(&im).data()[..4], &[3.0, 0.0, 5.0, 0.0]);
        assert!(forward_diff_y(&im).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_diff_y_last_row_zero() {
        let im = img(3, 2, &[1.0, 2.0, 4.0, 7.0, 11.0, 16.0]);
        assert_eq!(forward_diff_y(&im).data(), &[3.0, 5.0, 7.0, 9.0, 0.0, 0.0]);
    }

    #[test]
    fn operator_matrices_on_2x2() {
        let (gx, gy) = gradient_operator_matrices(2, 2).unwrap();
        let (a, b, c, d) = (1.5, 4.0, -2.0, 9.0);
        assert_eq!(gx.spmv(&[a, b, c, d]).unwrap(), vec![b - a, 0.0, d - c, 0.0]);
        assert_eq!(gy.spmv(&[a, b, c, d]).unwrap(), vec![c - a, d - b, 0.0, 0.0]);
        assert_eq!(gx.spmv(&[5.0; 4]).unwrap(), vec![0.0; 4]);
    }
}

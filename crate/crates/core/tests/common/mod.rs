#![allow(dead_code)]

use latfilter::noise::SplitMix64;
use latfilter::Image;

/// Uniform random image on `[0, 255)`.
pub fn random_image(h: usize, w: usize, seed: u64) -> Image {
    let mut rng = SplitMix64::new(seed);
    Image::from_fn(h, w, |_, _| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 255.0).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn dense_matvec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

pub fn dense_matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let k = b.len();
    let m = b[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for t in 0..k {
            let v = a[i][t];
            if v != 0.0 {
                for j in 0..m {
                    out[i][j] += v * b[t][j];
                }
            }
        }
    }
    out
}

pub fn dense_transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, m) = (a.len(), a[0].len());
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

/// FNV-1a over the 8-bit rounding of every sample.
pub fn fnv1a_u8(img: &Image) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &v in img.data() {
        h ^= v.round().clamp(0.0, 255.0) as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

//! Implementation-vs-oracle checks. Each oracle below is written
//! independently of the code path it verifies (brute-force loops, dense
//! algebra, an external eigen-solver, or values computed offline).

mod common;

use common::*;
use latfilter::activity::local_mean_std;
use latfilter::image::{forward_diff_x, forward_diff_y, gradient_operator_matrices};
use latfilter::metrics::discrete_tv;
use latfilter::noise::{GaussianStream, SplitMix64};
use latfilter::rtv::{
    assemble_system, decomposition_weights, gaussian_window, windowed_variations, RtvConfig, RtvMode,
};
use latfilter::solver::{solve_dense, solve_pcg};
use latfilter::synth::{synth_piecewise, SynthKind};
use latfilter::{ActivityMap, Image};

#[test]
fn forward_diff_telescopes() {
    let im = random_image(5, 5, 11);
    let dx = forward_diff_x(&im);
    let dy = forward_diff_y(&im);
    for r in 0..5 {
        let sum: f64 = (0..5).map(|c| dx.get(r, c)).sum();
        assert!((sum - (im.get(r, 4) - im.get(r, 0))).abs() < 1e-10);
    }
    for c in 0..5 {
        let sum: f64 = (0..5).map(|r| dy.get(r, c)).sum();
        assert!((sum - (im.get(4, c) - im.get(0, c))).abs() < 1e-10);
    }
}

#[test]
fn operator_matrices_match_direct_differences() {
    let (gx, gy) = gradient_operator_matrices(6, 7).unwrap();
    for seed in 0..10 {
        let im = random_image(6, 7, 100 + seed);
        let vx = gx.spmv(im.data()).unwrap();
        let vy = gy.spmv(im.data()).unwrap();
        assert!(max_abs_diff(&vx, forward_diff_x(&im).data()) <= 1e-12);
        assert!(max_abs_diff(&vy, forward_diff_y(&im).data()) <= 1e-12);
    }
    // Rows of the last column / last row are empty.
    for r in 0..6 {
        assert_eq!(gx.row(r * 7 + 6).count(), 0);
    }
    for c in 0..7 {
        assert_eq!(gy.row(5 * 7 + c).count(), 0);
    }
}

fn brute_force_std(img: &Image, r: usize, c: usize) -> f64 {
    let (h, w) = img.dims();
    let mut samples = Vec::new();
    for dr in [-1i64, 0, 1] {
        for dc in [-1i64, 0, 1] {
            let rr = (r as i64 + dr).max(0).min(h as i64 - 1) as usize;
            let cc = (c as i64 + dc).max(0).min(w as i64 - 1) as usize;
            samples.push(img.get(rr, cc));
        }
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    (samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[test]
fn local_std_matches_two_pass_brute_force() {
    for seed in 0..5 {
        let im = random_image(8, 8, seed);
        let (_, std) = local_mean_std(&im);
        for r in 0..8 {
            for c in 0..8 {
                assert!((std.get(r, c) - brute_force_std(&im, r, c)).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn spmv_matches_dense_multiply() {
    let im = random_image(5, 5, 3);
    let cfg = RtvConfig::default();
    let w = decomposition_weights(&im, &cfg).unwrap();
    let sys = assemble_system(&w, cfg.lambda, &im).unwrap();
    let x = random_image(5, 5, 4);
    let sparse = sys.matrix().spmv(x.data()).unwrap();
    let dense = dense_matvec(&sys.matrix().to_dense(), x.data());
    assert!(max_abs_diff(&sparse, &dense) <= 1e-12 * dense.iter().fold(1.0f64, |m, v| m.max(v.abs())));
}

/// Stencil assembly agrees with `E + lambda (Gx^T diag(sx q) Gx + Gy^T diag(sy q) Gy)`
/// formed by dense products of the operator matrices.
#[test]
fn assembled_matrix_matches_gramian_form() {
    let (h, w) = (5, 6);
    let (gx, gy) = gradient_operator_matrices(h, w).unwrap();
    let (gx, gy) = (gx.to_dense(), gy.to_dense());
    for mode in [RtvMode::Rtv, RtvMode::LatRtv, RtvMode::LatRtvd] {
        let im = random_image(h, w, 21);
        let cfg = RtvConfig {
            mode,
            lambda: 0.02,
            sigma: 1.5,
            ..Default::default()
        };
        let wts = decomposition_weights(&im, &cfg).unwrap();
        let sys = assemble_system(&wts, cfg.lambda, &im).unwrap();
        let n = h * w;
        let scale = |g: &[Vec<f64>], s: &Image| -> Vec<Vec<f64>> {
            g.iter()
                .enumerate()
                .map(|(i, row)| row.iter().map(|v| v * s.data()[i] * wts.activity_factor.data()[i]).collect())
                .collect()
        };
        let tx = dense_matmul(&dense_transpose(&gx), &scale(&gx, &wts.s_x));
        let ty = dense_matmul(&dense_transpose(&gy), &scale(&gy, &wts.s_y));
        let a = sys.matrix().to_dense();
        let mut worst: f64 = 0.0;
        let mut biggest: f64 = 1.0;
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j { 1.0 } else { 0.0 } + cfg.lambda * (tx[i][j] + ty[i][j]);
                worst = worst.max((a[i][j] - expect).abs());
                biggest = biggest.max(expect.abs());
            }
        }
        assert!(worst <= 1e-12 * biggest, "{mode}: {worst}");
        assert_eq!(sys.matrix().max_asymmetry(), 0.0);
    }
}

#[test]
fn assembled_matrix_is_positive_definite_with_identity_shift() {
    for mode in [RtvMode::LatRtv, RtvMode::LatRtvd] {
        let im = random_image(8, 8, 5);
        let cfg = RtvConfig {
            mode,
            ..Default::default()
        };
        let sys = assemble_system(&decomposition_weights(&im, &cfg).unwrap(), cfg.lambda, &im).unwrap();
        let dense = sys.matrix().to_dense();
        let n = dense.len();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| dense[i][j]);
        let eig = nalgebra::SymmetricEigen::new(m);
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= 1.0 - 1e-9, "{mode}: smallest eigenvalue {min}");

        // x^T A x >= |x|^2
        for seed in 0..5 {
            let x = random_image(8, 8, 50 + seed).map(|v| v - 127.0);
            let ax = sys.matrix().spmv(x.data()).unwrap();
            let quad: f64 = x.data().iter().zip(&ax).map(|(a, b)| a * b).sum();
            let norm: f64 = x.data().iter().map(|v| v * v).sum();
            assert!(quad >= norm * (1.0 - 1e-12));
        }
    }
}

const PCG_ORACLE_TOL: f64 = 1e-10;

#[test]
fn pcg_agrees_with_dense_on_assembled_systems() {
    let mut worst: f64 = 0.0;
    for seed in 0..10u64 {
        let mode = if seed % 2 == 0 { RtvMode::LatRtv } else { RtvMode::LatRtvd };
        let im = random_image(8, 8, 200 + seed);
        let cfg = RtvConfig {
            mode,
            ..Default::default()
        };
        let sys = assemble_system(&decomposition_weights(&im, &cfg).unwrap(), cfg.lambda, &im).unwrap();
        // The filter default (1e-6 relative) leaves ~1e-4 absolute error on
        // 0-255 intensities; the equivalence check needs a tighter target.
        let iterative = solve_pcg(&sys, PCG_ORACLE_TOL, 640).unwrap();
        assert!(iterative.residual <= PCG_ORACLE_TOL);
        let direct = solve_dense(&sys).unwrap();
        worst = worst.max(max_abs_diff(&iterative.x, &direct));
    }
    assert!(worst <= 1e-6, "max |pcg - dense| = {worst}");
}

fn direct_windowed(img: &Image, sigma: f64) -> [Vec<f64>; 4] {
    let k = gaussian_window(sigma).unwrap();
    let r = k.radius as isize;
    let (h, w) = img.dims();
    let gx = forward_diff_x(img);
    let gy = forward_diff_y(img);
    let mut out = [vec![0.0; h * w], vec![0.0; h * w], vec![0.0; h * w], vec![0.0; h * w]];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let (mut dx, mut dy, mut lx, mut ly) = (0.0, 0.0, 0.0, 0.0);
            for qy in y - r..=y + r {
                for qx in x - r..=x + r {
                    if qy < 0 || qx < 0 || qy >= h as isize || qx >= w as isize {
                        continue;
                    }
                    let g = k.at(qy - y, qx - x);
                    let (a, b) = (gx.get(qy as usize, qx as usize), gy.get(qy as usize, qx as usize));
                    dx += g * a.abs();
                    dy += g * b.abs();
                    lx += g * a;
                    ly += g * b;
                }
            }
            let i = y as usize * w + x as usize;
            out[0][i] = dx;
            out[1][i] = dy;
            out[2][i] = lx.abs();
            out[3][i] = ly.abs();
        }
    }
    out
}

#[test]
fn windowed_variations_match_direct_window_sums() {
    for (seed, sigma) in [(1u64, 1.0), (2, 2.0), (3, 0.7)] {
        let im = random_image(13, 11, seed);
        let wv = windowed_variations(&im, sigma).unwrap();
        let [dx, dy, lx, ly] = direct_windowed(&im, sigma);
        assert!(max_abs_diff(wv.d_x.data(), &dx) < 1e-9);
        assert!(max_abs_diff(wv.d_y.data(), &dy) < 1e-9);
        assert!(max_abs_diff(wv.l_x.data(), &lx) < 1e-9);
        assert!(max_abs_diff(wv.l_y.data(), &ly) < 1e-9);
    }
}

#[test]
fn windowed_variations_on_ramp_and_texture() {
    let ramp = Image::from_fn(20, 20, |_, c| 3.0 * c as f64).unwrap();
    let wv = windowed_variations(&ramp, 1.0).unwrap();
    for r in 0..20 {
        for c in 0..19 {
            assert!((wv.d_x.get(r, c) - wv.l_x.get(r, c)).abs() < 1e-9);
        }
    }

    let strip = Image::from_fn(32, 32, |_, c| (c % 2) as f64).unwrap();
    let sigma = 3.0;
    let eps = 1e-3;
    let [dx, _, lx, _] = direct_windowed(&strip, sigma);
    let wv = windowed_variations(&strip, sigma).unwrap();
    for (r, c) in [(16, 15), (16, 16), (12, 14)] {
        let i = r * 32 + c;
        assert!(dx[i] / (lx[i] + eps) > 10.0);
        assert!(wv.d_x.data()[i] / (wv.l_x.data()[i] + eps) > 10.0);
    }
}

/// The quadratic surrogate evaluated at its own linearization point versus
/// the activity-tuned RTV penalty. The two differ by construction (the
/// activity sits at different pixels and eps perturbs both factors), so the
/// gap is reported rather than asserted.
#[test]
fn quadratic_surrogate_tracks_penalty() {
    let im = random_image(16, 16, 77);
    let cfg = RtvConfig::default();
    let wts = decomposition_weights(&im, &cfg).unwrap();
    let scaled = im.map(|v| v / cfg.intensity_range);
    let wv = windowed_variations(&scaled, cfg.sigma).unwrap();
    let v = ActivityMap::compute(&im, cfg.clip_high).unwrap().normalized;
    let gx = forward_diff_x(&scaled);
    let surrogate: f64 = (0..256)
        .map(|p| wts.s_x.data()[p] * wts.activity_factor.data()[p] * gx.data()[p].powi(2))
        .sum::<f64>()
        * cfg.lambda;
    let penalty: f64 = (0..256)
        .map(|p| wv.d_x.data()[p] / (wv.l_x.data()[p] + cfg.eps) / v.data()[p])
        .sum::<f64>()
        * cfg.lambda;
    let rel = (surrogate - penalty).abs() / penalty;
    println!("surrogate {surrogate:.6} penalty {penalty:.6} relative gap {rel:.4}");
    assert!(surrogate.is_finite() && penalty.is_finite() && surrogate > 0.0);
}

#[test]
fn constant_image_weights_are_positive_and_finite() {
    let im = Image::filled(10, 10, 0.0).unwrap();
    let cfg = RtvConfig::default();
    let w = decomposition_weights(&im, &cfg).unwrap();
    for s in w.s_x.data().iter().chain(w.s_y.data()) {
        assert!(s.is_finite() && *s > 0.0);
    }
    // Flat activity clamps to 1/2 everywhere, normalized to 1.
    assert!(w.activity_factor.data().iter().all(|&c| c == 1.0));
}

#[test]
fn noise_reference_stream_seed_42() {
    // Computed offline with an independent implementation of the documented
    // generator. The committed bits are the libm results; the offline oracle
    // used the platform math library, which differs by one ulp at index 9.
    let mut rng = SplitMix64::new(42);
    let raw: Vec<u64> = (0..4).map(|_| rng.next_u64()).collect();
    assert_eq!(raw, vec![0xbdd732262feb6e95, 0x28efe333b266f103, 0x47526757130f9f52, 0x581ce1ff0e4ae394]);

    let expected: [u64; 16] = [
        0x3fda8ac4b546f507,
        0x3fe4e2c3bafb6392,
        0xbfec8a54f4e91a7b,
        0x3ff53ab5d4785915,
        0x3ffbac69cd4142bb,
        0xbffe2279a49132ea,
        0x3fe175b8fd2de8b9,
        0xbffa82663feedf19,
        0xbff1495f183d321c,
        0xbfefd9f415f8b643,
        0xbffc76296a7a60e5,
        0x3fb412a3b6a5034d,
        0xbff25473fd96d150,
        0xbfc2898b64f52e4a,
        0x3fd0ab38bced1168,
        0x3febab3a1c9741c4,
    ];
    let mut stream = GaussianStream::new(42);
    let got: Vec<u64> = (0..16).map(|_| stream.next_standard().to_bits()).collect();
    assert_eq!(got, expected.to_vec());

    let offline = [
        0.4147197504315305,
        0.6526812221519427,
        -0.8918862136277562,
        1.3268335628141064,
        1.7295930879374015,
        -1.883416788902816,
        0.5456204361828646,
        -1.6568357941995997,
        -1.080412954982541,
        -0.9953556470042673,
        -1.7788480910585858,
        0.07840941628547889,
        -1.1456184297395176,
        -0.1448225253064826,
        0.26045053911027205,
        0.8646517332472787,
    ];
    for (g, o) in got.iter().zip(offline) {
        let g = f64::from_bits(*g);
        assert!((g - o).abs() <= 2.0 * f64::EPSILON * o.abs(), "{g} vs {o}");
    }
}

#[test]
fn noise_sample_statistics() {
    let im = Image::filled(256, 256, 128.0).unwrap();
    let spec = latfilter::NoiseSpec {
        sigma: 13.0,
        seed: 2024,
        clip: false,
    };
    let noisy = latfilter::add_gaussian_noise(&im, &spec).unwrap();
    let diffs: Vec<f64> = noisy.data().iter().zip(im.data()).map(|(a, b)| a - b).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((sd - 13.0).abs() <= 0.5, "sample sd {sd}");
    assert!(mean.abs() < 0.5);
}

#[test]
fn psnr_unit_mse_constant() {
    // 10 log10(255^2), evaluated offline.
    let a = Image::filled(3, 3, 10.0).unwrap();
    let b = Image::filled(3, 3, 11.0).unwrap();
    assert!((latfilter::psnr(&a, &b).unwrap() - 48.1308036086791).abs() < 1e-10);
}

#[test]
fn discrete_tv_matches_double_loop() {
    let im = random_image(9, 12, 8);
    let mut expected = 0.0;
    for r in 0..9 {
        for c in 0..12 {
            let dx = if c + 1 < 12 { im.get(r, c + 1) - im.get(r, c) } else { 0.0 };
            let dy = if r + 1 < 9 { im.get(r + 1, c) - im.get(r, c) } else { 0.0 };
            expected += (dx * dx + dy * dy).sqrt();
        }
    }
    assert!((discrete_tv(&im) - expected).abs() <= 1e-9);
}

#[test]
fn clipart_fixture_checksum() {
    let im = synth_piecewise(SynthKind::Clipart, 64, 64, 7).unwrap();
    assert_eq!(fnv1a_u8(&im), CLIPART_64_SEED7);
    let blocks = synth_piecewise(SynthKind::Blocks, 64, 64, 7).unwrap();
    assert_eq!(fnv1a_u8(&blocks), BLOCKS_64_SEED7);
}

// Recorded when the fixtures were generated.
const CLIPART_64_SEED7: u64 = 5783939127366239547;
const BLOCKS_64_SEED7: u64 = 6469312161433637669;

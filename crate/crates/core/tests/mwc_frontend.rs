use num_complex::Complex64;
use rand::Rng;
use specx_core::linalg::{fro, CMat};
use specx_core::mwc::{
    build_sensing_matrix, fourier_coefficients, gen_mixing_sequences, xample, ChannelSamples,
    MixingSequenceSet,
};
use specx_core::rng::rng_from_seed;
use specx_core::sensing::{build_frame, somp, SliceSupport};
use specx_core::signal::{gen_comm_slices, BandShape, CommTransmissionSpec, SliceSpectrum};
use specx_core::GridSpec;
use specx_oracles::{mixing_coefficient_quadrature, mwc_time_domain};

fn rel_rms(a: &CMat, b: &[Vec<Complex64>]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (r, row) in b.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            num += (a[(r, c)] - v).norm_sqr();
            den += v.norm_sqr();
        }
    }
    (num / den).sqrt()
}

fn random_comm(grid: &GridSpec, n_sig: usize, seed: u64) -> SliceSpectrum {
    let mut rng = rng_from_seed(seed ^ 0xabc);
    let b = 0.5 * grid.f_p();
    let lim = grid.f_nyq() / 2.0 - b / 2.0;
    let specs: Vec<_> = (0..n_sig)
        .map(|_| CommTransmissionSpec {
            carrier: rng.random_range(-lim..lim),
            bandwidth: b,
            power: 1.0,
            shape: BandShape::Flat,
        })
        .collect();
    gen_comm_slices(&specs, grid, 0.0, seed).unwrap().spectrum
}

#[test]
fn coefficients_match_quadrature() {
    let seqs = MixingSequenceSet::from_rows(&[
        vec![1, -1, 1, -1, 1, -1, 1, -1],
        vec![1, 1, -1, 1, -1, -1, -1, 1],
    ])
    .unwrap();
    let n = 8;
    let c = fourier_coefficients(&seqs, n).unwrap();
    let a = build_sensing_matrix(&seqs, n).unwrap();
    for i in 0..2 {
        for j in 0..n {
            let l = j as i64 - 4;
            let q = mixing_coefficient_quadrature(seqs.row(i), l);
            assert!(
                (c[(i, j)] - q).norm() < 1e-9,
                "c[{i},{l}] = {} vs {q}",
                c[(i, j)]
            );
            assert_eq!(a.a[(i, j)], c[(i, j)].conj());
        }
    }
}

#[test]
fn chip_mean_concentrates() {
    let n_chips = 400;
    let bound = 3.0 / (n_chips as f64).sqrt();
    let inside = (0..500)
        .filter(|&s| {
            let seq = gen_mixing_sequences(1, n_chips, s).unwrap();
            let mean = seq.row(0).iter().map(|&v| v as f64).sum::<f64>() / n_chips as f64;
            mean.abs() < bound
        })
        .count();
    assert!(inside as f64 >= 0.99 * 500.0, "{inside}");
}

#[test]
fn one_hot_slice_gives_scaled_column() {
    let grid = GridSpec::new(10.0, 1.0, 1.0, 8).unwrap();
    let seqs = gen_mixing_sequences(5, grid.n_slices(), 3).unwrap();
    let a = build_sensing_matrix(&seqs, grid.n_slices()).unwrap();
    let j = 7;
    let mut x = CMat::zeros(grid.n_slices(), 8);
    for g in 0..8 {
        x[(j, g)] = Complex64::new(g as f64 + 1.0, -1.0);
    }
    let z = xample(
        &SliceSpectrum::from_values(x.clone(), grid).unwrap(),
        &a,
        0.0,
        0,
    )
    .unwrap();
    for i in 0..5 {
        for g in 0..8 {
            assert!((z.z[(i, g)] - a.a[(i, j)] * x[(j, g)]).norm() < 1e-14);
        }
    }
    let zero = xample(&SliceSpectrum::zeros(grid), &a, 0.0, 0).unwrap();
    assert!(zero.z.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn xample_is_linear() {
    let grid = GridSpec::new(12.0, 1.0, 1.0, 8).unwrap();
    let seqs = gen_mixing_sequences(6, grid.n_slices(), 5).unwrap();
    let a = build_sensing_matrix(&seqs, grid.n_slices()).unwrap();
    let x1 = random_comm(&grid, 2, 1);
    let x2 = random_comm(&grid, 2, 2);
    let alpha = 2.5;
    let lhs = xample(&x1.scaled(alpha).add(&x2).unwrap(), &a, 0.0, 0)
        .unwrap()
        .z;
    let rhs = xample(&x1, &a, 0.0, 0).unwrap().z * Complex64::new(alpha, 0.0)
        + xample(&x2, &a, 0.0, 0).unwrap().z;
    assert!(fro(&(lhs - &rhs)) < 1e-12 * fro(&rhs));
}

#[test]
fn time_and_frequency_paths_agree() {
    for q in [1usize, 3] {
        let grid = GridSpec::new(12.0, 1.0, q as f64, 8).unwrap();
        let seqs = gen_mixing_sequences(6, grid.n_slices(), 5).unwrap();
        let a = build_sensing_matrix(&seqs, grid.n_slices()).unwrap();
        let z = xample(&random_comm(&grid, 2, 9), &a, 0.0, 0).unwrap();
        let t = z.time_samples();
        assert_eq!(t.ncols(), q * 8);
        let back = ChannelSamples::from_time_samples(&t, grid).unwrap();
        assert!(fro(&(back.z - &z.z)) < 1e-8 * fro(&z.z));
    }
}

#[test]
fn frequency_model_matches_time_domain_mixing() {
    // a couple of grids, including intended oversampling
    for (q, seed) in [(1usize, 1u64), (1, 2), (3, 3)] {
        let grid = GridSpec::new(11.0, 1.0, q as f64, 16).unwrap();
        let n = grid.n_slices();
        let seqs = gen_mixing_sequences(6, n, seed).unwrap();
        let a = build_sensing_matrix(&seqs, n).unwrap();
        let x = random_comm(&grid, 2, seed);
        let z = xample(&x, &a, 0.0, 0).unwrap();
        let oracle = mwc_time_domain(&x.to_nyquist_spectrum(), &seqs.rows(), 16, q, 2048);
        let err = rel_rms(&z.z, &oracle);
        assert!(err < 1e-6, "q={q}: relative RMS {err:.3e}");
    }
}

#[test]
fn somp_exact_with_enough_channels() {
    // K <= 4 active slices, M >= 4K rows, N <= 64
    let grid = GridSpec::new(40.0, 1.0, 1.0, 8).unwrap();
    let n = grid.n_slices();
    let trials = 300;
    let mut ok = 0;
    for t in 0..trials {
        let mut rng = rng_from_seed(t);
        let k = 4;
        let mut idx: Vec<usize> = Vec::new();
        while idx.len() < k {
            let i = rng.random_range(0..n);
            if !idx.contains(&i) {
                idx.push(i);
            }
        }
        let mut x = CMat::zeros(n, 8);
        for &i in &idx {
            for g in 0..8 {
                x[(i, g)] = specx_core::rng::complex_gaussian(&mut rng, 1.0);
            }
        }
        let seqs = gen_mixing_sequences(4 * k, n, 1000 + t).unwrap();
        let a = build_sensing_matrix(&seqs, n).unwrap();
        let z = xample(&SliceSpectrum::from_values(x, grid).unwrap(), &a, 0.0, 0).unwrap();
        let s = somp(&build_frame(&z.z, 1e-6), &a, k, 1e-6).unwrap();
        if s == SliceSupport::new(idx, n).unwrap() {
            ok += 1;
        }
    }
    assert!(ok as f64 >= 0.99 * trials as f64, "{ok}/{trials}");
}

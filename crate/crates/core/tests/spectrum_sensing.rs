use num_complex::Complex64;
use rand::Rng;
use specx_core::linalg::CMat;
use specx_core::mwc::{build_sensing_matrix, gen_mixing_sequences, xample, SensingMatrix};
use specx_core::rng::{complex_gaussian, rng_from_seed};
use specx_core::sensing::{
    build_frame, nyquist_reconstruct, omp_pks, omp_pks_with, radar_slice_support, recover_slices,
    somp_with, GreedyOptions, SelectionRule, SliceSupport,
};
use specx_core::signal::{
    design_radar_waveform, flat_base_spectrum, gen_comm_slices, radar_slices, BandShape,
    CommTransmissionSpec, SliceSpectrum,
};
use specx_core::{FrequencySet, GridSpec};
use specx_oracles::best_support;

const CARRIER: f64 = 2.5e9;
const B_H: f64 = 162e6;

fn grid() -> GridSpec {
    GridSpec::new(10e9, 400e6, 400e6, 64).unwrap()
}

fn comm(grid: &GridSpec, n_sig: usize, seed: u64) -> specx_core::signal::CommSlices {
    let mut rng = rng_from_seed(seed ^ 0x5eed);
    let specs: Vec<_> = (0..n_sig)
        .map(|_| CommTransmissionSpec {
            carrier: rng.random_range(0.1e9..4.9e9),
            bandwidth: 50e6,
            power: 1.0,
            shape: BandShape::Flat,
        })
        .collect();
    gen_comm_slices(&specs, grid, 0.0, seed).unwrap()
}

/// Four radar bands of 8.1 MHz at random spots in the radar span.
fn radar(grid: &GridSpec, seed: u64) -> (SliceSpectrum, SliceSupport) {
    let mut rng = rng_from_seed(seed ^ 0xfade);
    let pairs: Vec<[f64; 2]> = (0..4)
        .map(|b| {
            let lo = -B_H / 2.0 + b as f64 * B_H / 4.0 + rng.random_range(0.0..B_H / 4.0 - 8.1e6);
            [lo, lo + 8.1e6]
        })
        .collect();
    let bands = FrequencySet::from_pairs(&pairs).unwrap();
    let wf = design_radar_waveform(&flat_base_spectrum(162), B_H, &bands, 1.0).unwrap();
    let x = radar_slices(&wf, CARRIER, grid, 0.2, seed).unwrap();
    (x, radar_slice_support(&bands.shifted(CARRIER), grid))
}

fn matrix(m: usize, n: usize, seed: u64) -> SensingMatrix {
    build_sensing_matrix(&gen_mixing_sequences(m, n, seed).unwrap(), n).unwrap()
}

#[test]
fn known_support_with_modified_bound_is_exact() {
    let g = grid();
    let n_sig = 2;
    let opts = GreedyOptions {
        rule: SelectionRule::RankAware,
        mirror_pairs: false,
    };
    let trials = 200;
    let mut ok = 0;
    for t in 0..trials {
        let c = comm(&g, n_sig, t);
        let (r, s_r) = radar(&g, t);
        let a = matrix(2 * 2 * n_sig + s_r.len(), g.n_slices(), 7000 + t);
        let z = xample(&c.spectrum.add(&r).unwrap(), &a, 0.0, 0).unwrap();
        let k_extra = c.s_c.difference(&s_r).len();
        let s = omp_pks_with(
            &build_frame(&z.z, 1e-6),
            &a,
            &s_r,
            k_extra,
            1e-9,
            opts,
            Some(&g),
        )
        .unwrap();
        if s == c.s_c.union(&s_r) {
            ok += 1;
        }
    }
    assert!(ok as f64 >= 0.97 * trials as f64, "{ok}/{trials}");
}

#[test]
fn radar_slices_land_on_the_known_support() {
    let g = grid();
    for t in 0..20 {
        let (r, s_r) = radar(&g, t);
        assert_eq!(r.active_slices(1e-12), s_r);
    }
}

#[test]
fn no_comm_returns_the_known_support() {
    let g = grid();
    let (r, s_r) = radar(&g, 3);
    let a = matrix(12, g.n_slices(), 3);
    let z = xample(&r, &a, 0.0, 0).unwrap();
    let s = omp_pks(&build_frame(&z.z, 1e-6), &a, &s_r, 6, 1e-9).unwrap();
    assert_eq!(s, s_r);
}

#[test]
fn known_support_must_fit_the_channels() {
    let g = grid();
    let a = matrix(3, g.n_slices(), 1);
    let z = CMat::zeros(3, 4);
    let s_r = SliceSupport::new(vec![0, 1, 2], g.n_slices()).unwrap();
    assert!(omp_pks(&build_frame(&z, 1e-6), &a, &s_r, 1, 1e-9).is_err());
}

#[test]
fn least_squares_residual_is_orthogonal_to_the_support() {
    let g = grid();
    let c = comm(&g, 3, 11);
    let a = matrix(14, g.n_slices(), 11);
    let z = xample(&c.spectrum, &a, 0.05, 4).unwrap().z;
    let est = recover_slices(&z, &a, &c.s_c).unwrap();
    let r = &z - &a.a * &est.x_hat;
    for &j in c.s_c.indices() {
        let inner = a.a.column(j).adjoint() * &r;
        assert!(
            inner.norm() < 1e-8 * z.norm(),
            "column {j}: {}",
            inner.norm()
        );
    }
    for i in 0..g.n_slices() {
        if !c.s_c.contains(i) {
            assert!(est
                .x_hat
                .row(i)
                .iter()
                .all(|v| *v == Complex64::new(0.0, 0.0)));
        }
    }
}

#[test]
fn nyquist_samples_survive_the_round_trip() {
    let g = GridSpec::new(2.0e9, 200e6, 200e6, 16).unwrap();
    let c = comm_in(&g, 17);
    let a = matrix(8, g.n_slices(), 17);
    let z = xample(&c.spectrum, &a, 0.0, 0).unwrap().z;
    let est = recover_slices(&z, &a, &c.s_c).unwrap();
    let got = nyquist_reconstruct(&est, &g);
    // direct inverse DFT of the Nyquist-grid spectrum
    let spec = c.spectrum.to_nyquist_spectrum();
    let l = spec.len();
    let want: Vec<Complex64> = (0..l)
        .map(|n| {
            spec.iter()
                .enumerate()
                .map(|(k, x)| {
                    x * Complex64::from_polar(
                        1.0,
                        2.0 * std::f64::consts::PI * (k * n % l) as f64 / l as f64,
                    )
                })
                .sum::<Complex64>()
                / l as f64
        })
        .collect();
    let err: f64 = got
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let norm: f64 = want.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    assert!(
        norm > 0.0 && err < 1e-9 * norm,
        "relative error {:.3e}",
        err / norm
    );
}

fn comm_in(grid: &GridSpec, seed: u64) -> specx_core::signal::CommSlices {
    let specs = [CommTransmissionSpec {
        carrier: 0.43e9,
        bandwidth: 60e6,
        power: 1.0,
        shape: BandShape::Flat,
    }];
    gen_comm_slices(&specs, grid, 0.0, seed).unwrap()
}

#[test]
fn greedy_support_matches_exhaustive_search() {
    let g = GridSpec::new(40.0, 4.0, 4.0, 4).unwrap();
    let n = g.n_slices();
    let m = 6;
    let mut agree = 0;
    let trials = 60;
    for t in 0..trials {
        let mut rng = rng_from_seed(t);
        let a = matrix(m, n, 100 + t);
        let k = 2;
        let mut idx: Vec<usize> = Vec::new();
        while idx.len() < k {
            let i = rng.random_range(0..n);
            if !idx.contains(&i) {
                idx.push(i);
            }
        }
        let mut x = CMat::zeros(n, g.bins_per_channel());
        for &i in &idx {
            for c in 0..g.bins_per_channel() {
                x[(i, c)] = complex_gaussian(&mut rng, 1.0);
            }
        }
        let z = xample(&SliceSpectrum::from_values(x, g).unwrap(), &a, 0.0, 0)
            .unwrap()
            .z;
        let cols: Vec<Vec<Complex64>> = (0..n)
            .map(|j| a.a.column(j).iter().copied().collect())
            .collect();
        let ys: Vec<Vec<Complex64>> = (0..z.ncols())
            .map(|c| z.column(c).iter().copied().collect())
            .collect();
        let (oracle, res) = best_support(&cols, &ys, k);
        assert!(
            res < 1e-12 * z.norm_squared(),
            "exhaustive search must find the exact fit"
        );
        let opts = GreedyOptions {
            rule: SelectionRule::RankAware,
            mirror_pairs: false,
        };
        let s = somp_with(&build_frame(&z, 1e-9), &a, k, 1e-9, opts, None).unwrap();
        if s.indices() == oracle.as_slice() {
            agree += 1;
        }
    }
    assert!(agree as f64 >= 0.95 * trials as f64, "{agree}/{trials}");
}

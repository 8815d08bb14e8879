use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;
use specx_core::chisq::{glrt_threshold, inverse_sf, ChiSquareModel};
use specx_core::radar::{
    doppler_focus, focused_noise_var, focused_omp, hit_or_miss, make_kappa, min_requirements,
    KappaSet,
};
use specx_core::rng::rng_from_seed;
use specx_core::signal::{
    design_radar_waveform, flat_base_spectrum, radar_fourier_coeffs, signed_index, PulseTrainSpec,
    Target, TargetScene,
};
use specx_core::{FrequencyInterval, FrequencySet};
use specx_oracles::{chi2_2_quantile_mc, doppler_focus_direct, radar_coeffs_direct};

const B_H: f64 = 1.0e6;

fn full_band() -> FrequencySet {
    FrequencySet::from_interval(FrequencyInterval::new(-B_H / 2.0, B_H / 2.0).unwrap())
}

/// Noiseless on-grid scene with `K = P = 2L` and random coefficient
/// placement; true when every target is recovered with amplitude error
/// within 1e-6 relative.
fn minimal_trial(l: usize, n: usize, seed: u64) -> bool {
    let mut rng = rng_from_seed(seed);
    let train = PulseTrainSpec::new(n as f64 / B_H, 2 * l).unwrap();
    let wf = design_radar_waveform(&flat_base_spectrum(n), B_H, &full_band(), 1.0).unwrap();
    let scene = TargetScene::random_on_grid(l, n, &train, 1.0, &mut rng).unwrap();
    let kappa = KappaSet::new(sample(&mut rng, n, 2 * l).into_vec(), n).unwrap();
    let c = radar_fourier_coeffs(&scene, &wf, &train, kappa.indices(), 0.0, 0).unwrap();
    let psi = doppler_focus(&c, &wf.spectrum(), &kappa, &train).unwrap();
    let det = focused_omp(&psi, &kappa, &train, 1e6, 1e-24, 4 * l).unwrap();
    if det.len() != l {
        return false;
    }
    scene.targets.iter().all(|t| {
        det.detections.iter().any(|d| {
            (d.tau_hat - t.tau).abs() <= 1e-6 * train.pri
                && (d.nu_hat - t.nu).abs() <= 1e-6 / train.pri
                && (d.alpha_hat - t.alpha).norm() <= 1e-6 * t.alpha.norm()
        })
    })
}

#[test]
fn minimal_sample_recovery_rate() {
    for l in 1..=5 {
        let ok = (0..100)
            .filter(|&s| minimal_trial(l, 61, 1000 * l as u64 + s))
            .count();
        assert!(ok >= 99, "L={l}: {ok}/100");
    }
}

#[test]
fn fft_focus_matches_direct_sum() {
    let n = 32;
    let train = PulseTrainSpec::new(1e-5, 12).unwrap();
    let b_h = n as f64 / train.pri;
    let band = FrequencySet::from_pairs(&[[-b_h / 4.0, b_h / 4.0]]).unwrap();
    let wf = design_radar_waveform(&flat_base_spectrum(n), b_h, &band, 2.0).unwrap();
    let kappa = make_kappa(&band, b_h, n).unwrap();
    let mut rng = rng_from_seed(4);
    let scene = TargetScene::random_off_grid(3, &train, 1.0, &mut rng).unwrap();
    let c = radar_fourier_coeffs(&scene, &wf, &train, kappa.indices(), 0.1, 5).unwrap();
    let h = wf.spectrum();
    let psi = doppler_focus(&c, &h, &kappa, &train).unwrap();
    let rows: Vec<Vec<Complex64>> = (0..kappa.len())
        .map(|r| c.row(r).iter().copied().collect())
        .collect();
    let hk: Vec<Complex64> = kappa.indices().iter().map(|&k| h[k]).collect();
    let direct = doppler_focus_direct(&rows, &hk, train.pri, train.n_pulses);
    for (r, row) in direct.iter().enumerate() {
        for (q, v) in row.iter().enumerate() {
            assert!((psi.psi[(r, q)] - v).norm() <= 1e-9 * v.norm().max(1e-3));
        }
    }
}

#[test]
fn coefficients_match_direct_sum() {
    let n = 40;
    let train = PulseTrainSpec::new(2e-5, 8).unwrap();
    let b_h = n as f64 / train.pri;
    let bands =
        FrequencySet::from_pairs(&[[-b_h / 2.0, -b_h / 4.0], [0.1 * b_h, 0.3 * b_h]]).unwrap();
    let wf = design_radar_waveform(&flat_base_spectrum(n), b_h, &bands, 1.0).unwrap();
    let kappa = make_kappa(&bands, b_h, n).unwrap();
    let mut rng = rng_from_seed(8);
    let scene = TargetScene::random_off_grid(4, &train, 0.7, &mut rng).unwrap();
    let c = radar_fourier_coeffs(&scene, &wf, &train, kappa.indices(), 0.0, 0).unwrap();
    let h = wf.spectrum();
    let targets: Vec<_> = scene
        .targets
        .iter()
        .map(|t| (t.tau, t.nu, t.alpha))
        .collect();
    let hk: Vec<(i64, Complex64)> = kappa
        .indices()
        .iter()
        .map(|&k| (signed_index(k, n), h[k]))
        .collect();
    let direct = radar_coeffs_direct(&targets, &hk, train.pri, train.n_pulses);
    for (r, row) in direct.iter().enumerate() {
        for (p, v) in row.iter().enumerate() {
            assert!((c[(r, p)] - v).norm() <= 1e-9 * v.norm().max(1e-6));
        }
    }
}

#[test]
fn focusing_gain_is_p_on_grid() {
    let n = 16;
    let train = PulseTrainSpec::new(1e-5, 20).unwrap();
    let b_h = n as f64 / train.pri;
    let band = FrequencySet::from_pairs(&[[-b_h / 2.0, b_h / 2.0]]).unwrap();
    let wf = design_radar_waveform(&flat_base_spectrum(n), b_h, &band, 1.0).unwrap();
    let kappa = KappaSet::full(n);
    let q0 = 7;
    let t = Target {
        tau: 3.0 * train.pri / n as f64,
        nu: specx_core::signal::doppler_grid_value(q0, &train),
        alpha: Complex64::new(0.0, 2.0),
    };
    let scene = TargetScene::new(vec![t], &train).unwrap();
    let c = radar_fourier_coeffs(&scene, &wf, &train, kappa.indices(), 0.0, 0).unwrap();
    let h = wf.spectrum();
    // unnormalized focus sum over pulses
    for (r, &k) in kappa.indices().iter().enumerate() {
        let psi = doppler_focus(&c, &h, &kappa, &train).unwrap();
        let raw = psi.psi[(r, q0)] * train.n_pulses as f64 * h[k] / train.pri;
        assert!((raw.norm() - train.n_pulses as f64 * c[(r, 0)].norm()).abs() < 1e-9 * raw.norm());
        for q in (0..train.n_pulses).filter(|&q| q != q0) {
            assert!(psi.psi[(r, q)].norm() < 1e-9);
        }
    }
}

#[test]
fn two_targets_with_four_samples() {
    let n = 31;
    let train = PulseTrainSpec::new(n as f64 / B_H, 4).unwrap();
    let wf = design_radar_waveform(&flat_base_spectrum(n), B_H, &full_band(), 1.0).unwrap();
    let kappa = KappaSet::new(vec![0, 5, 11, 20], n).unwrap();
    let targets = vec![
        Target {
            tau: 2.0 * train.pri / n as f64,
            nu: specx_core::signal::doppler_grid_value(1, &train),
            alpha: Complex64::new(1.0, 0.0),
        },
        Target {
            tau: 17.0 * train.pri / n as f64,
            nu: specx_core::signal::doppler_grid_value(1, &train),
            alpha: Complex64::new(0.0, -0.5),
        },
    ];
    let scene = TargetScene::new(targets, &train).unwrap();
    let c = radar_fourier_coeffs(&scene, &wf, &train, kappa.indices(), 0.0, 0).unwrap();
    let psi = doppler_focus(&c, &wf.spectrum(), &kappa, &train).unwrap();
    let det = focused_omp(&psi, &kappa, &train, 1e6, 1e-24, 8).unwrap();
    assert_eq!(det.len(), 2);
    let hm = hit_or_miss(&det, &scene, B_H, &train);
    assert_eq!(hm.hit_rate, 1.0);
}

#[test]
fn empty_scene_false_alarm_matches_design() {
    // p_fa = 0.1 over the whole grid, central model
    let n = 30;
    let train = PulseTrainSpec::new(n as f64 / B_H, 10).unwrap();
    let band = FrequencySet::from_pairs(&[[-2e5, -1e5], [1e5, 2.5e5]]).unwrap();
    let wf = design_radar_waveform(&flat_base_spectrum(n), B_H, &band, 1.0).unwrap();
    let kappa = make_kappa(&band, B_H, n).unwrap();
    let h = wf.spectrum();
    let sigma_c2 = 0.3;
    let s2 = focused_noise_var(sigma_c2, &h, &kappa, &train);
    let gamma = glrt_threshold(0.1, n * train.n_pulses, 0.0, ChiSquareModel::Central).unwrap();
    let trials = 2000;
    let alarms = (0..trials)
        .filter(|&t| {
            let c = radar_fourier_coeffs(
                &TargetScene::default(),
                &wf,
                &train,
                kappa.indices(),
                sigma_c2,
                t,
            )
            .unwrap();
            let psi = doppler_focus(&c, &h, &kappa, &train).unwrap();
            !focused_omp(&psi, &kappa, &train, gamma, s2, 5)
                .unwrap()
                .is_empty()
        })
        .count();
    let rate = alarms as f64 / trials as f64;
    // the per-cell statistics are dependent when K < N, so the grid-wide rate
    // can only fall below the union bound
    assert!(
        rate <= 0.1 + 3.0 * (0.09f64 / trials as f64).sqrt(),
        "{rate}"
    );
}

#[test]
fn noncentral_quantile_matches_monte_carlo() {
    let alpha = 1.0 - (1.0f64 - 1e-2).powf(1.0 / 100.0);
    let exact = inverse_sf(alpha, ChiSquareModel::Noncentral, 2.0).unwrap();
    let mc_alpha = 1e-2;
    let mc = chi2_2_quantile_mc(mc_alpha, 2.0, 400_000, 3);
    let exact_mc = inverse_sf(mc_alpha, ChiSquareModel::Noncentral, 2.0).unwrap();
    assert!(
        (mc - exact_mc).abs() <= 0.02 * exact_mc,
        "{mc} vs {exact_mc}"
    );
    assert!(exact > exact_mc);
    let g = glrt_threshold(1e-2, 100, 2.0, ChiSquareModel::Noncentral).unwrap();
    assert!((g - exact).abs() <= 1e-6 * exact, "{g} vs {exact}");
}

#[test]
fn requirements_follow_target_count() {
    let r = min_requirements(10, 200, 1.0, &[0.1; 4]);
    assert_eq!((r.k_min, r.p_min, r.total), (20, 20, 400));
    assert_eq!(r.b_tot, 80);
    assert!(r.feasible);
    assert!(!min_requirements(3, 10, 1.0, &[0.2]).feasible);
}

#[test]
fn hit_or_miss_geometry() {
    let train = PulseTrainSpec::new(1e-5, 50).unwrap();
    let mut rng = rng_from_seed(2);
    let scene = TargetScene::random_on_grid(1, 100, &train, 1.0, &mut rng).unwrap();
    let t = scene.targets[0];
    let b_h = 100.0 / train.pri;
    let est = |dt_bins: f64| specx_core::radar::DetectionList {
        detections: vec![specx_core::radar::Detection {
            tau_hat: t.tau + dt_bins / b_h,
            nu_hat: t.nu,
            alpha_hat: t.alpha,
            statistic: 1.0,
            delay_bin: 0,
            doppler_bin: 0,
        }],
        ..Default::default()
    };
    assert_eq!(hit_or_miss(&est(0.0), &scene, b_h, &train).hit_rate, 1.0);
    assert_eq!(hit_or_miss(&est(2.9), &scene, b_h, &train).hit_rate, 1.0);
    assert_eq!(hit_or_miss(&est(4.0), &scene, b_h, &train).hit_rate, 0.0);
    let _ = rng.random::<u8>();
}

//! One Monte-Carlo trial of each experiment. Every trial is a pure function
//! of `(config, trial index, sweep point)`; random streams come from
//! `(seed, trial, entity)` so sweep points of the same trial share scenes
//! and noise shapes.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use specx_core::bands::{blocks_of, selection_residual, MappingMatrix};
use specx_core::chisq::glrt_threshold;
use specx_core::mwc::{build_sensing_matrix, gen_mixing_sequences, xample, SensingMatrix};
use specx_core::radar::{
    doppler_focus, focused_noise_var_with, focused_omp_with, hit_or_miss, make_kappa, Detection,
};
use specx_core::rng::{derive_seed, stream, Entity};
use specx_core::sensing::{
    build_frame, detection_ratio, omp_pks_with, radar_slice_support, recover_slices,
    refine_support_by_energy, refine_support_by_energy_excluding, somp_with, support_to_freqs,
    touched_bins, GreedyOptions, SliceSupport,
};
use specx_core::signal::{
    design_radar_waveform, flat_base_spectrum, gen_comm_slices, radar_comm_occupancy,
    radar_fourier_coeffs, radar_interference, radar_slices, CommSlices, CommTransmissionSpec,
    SliceSpectrum, TargetScene,
};
use specx_core::{CMat, Error, FrequencySet};

use crate::config::{BandLayout, ScenarioConfig};
use crate::error::{PipelineError, Result};
use crate::scenario::{
    comm_noise_psd, comm_to_radar, db, draw_comm, draw_rem, layout_bands, radar_power_per_bin,
    radar_to_comm, rem_band, select_bands, Setup,
};

/// Speed of light, for delay-to-range conversion.
pub const C0: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SenseTrial {
    /// `None` for noiseless data.
    pub snr_db: Option<f64>,
    pub channels: usize,
    /// True comm slices.
    pub s_c: Vec<usize>,
    /// Known radar slices.
    pub s_r: Vec<usize>,
    /// Plain OMP ignoring the radar support.
    pub omp: Vec<usize>,
    /// OMP seeded with the radar support.
    pub pks: Vec<usize>,
    /// Fraction of the occupied slices `S_C u S_R` that each method found.
    pub p_d_omp: f64,
    pub p_d_pks: f64,
    /// The same ratio over the comm slices outside `S_R` only.
    pub p_d_comm_omp: f64,
    pub p_d_comm_pks: f64,
    /// Output equals `S_C u S_R`.
    pub exact_omp: bool,
    pub exact_pks: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandsTrial {
    /// REM energies (thermal-noise units).
    pub y: Vec<f64>,
    /// Comm occupancy inside the radar span, radar baseband.
    pub f_c: FrequencySet,
    pub f_r: FrequencySet,
    pub support: Vec<usize>,
    pub blocks: usize,
    pub disjoint: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarTrial {
    pub layout: BandLayout,
    pub snr_db: f64,
    pub f_r: FrequencySet,
    /// Processed coefficients `K`.
    pub k: usize,
    pub gamma: f64,
    pub rho: f64,
    pub targets: usize,
    pub detections: Vec<Detection>,
    pub hits: Vec<bool>,
    pub hit_rate: f64,
    /// Range error (metres) of every hit target.
    pub range_errors_m: Vec<f64>,
    /// Test statistic per iteration.
    pub statistics: Vec<f64>,
    pub truncated: bool,
    /// The layout found no room around the comm occupancy; nothing was
    /// transmitted and every target counts as missed.
    pub blocked: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecxIteration {
    /// True comm occupancy during this iteration (comm spectrum).
    pub f_c_true: FrequencySet,
    /// Comm occupancy the band selection avoided.
    pub f_c_detected: FrequencySet,
    /// Selected radar bands, radar baseband.
    pub f_r: FrequencySet,
    pub s_r: Vec<usize>,
    /// `F_R` (comm coordinates) misses the avoided comm set.
    pub disjoint: bool,
    /// `F_R` misses the true comm occupancy.
    pub disjoint_true: bool,
    pub radar: RadarTrial,
    /// Support returned by the re-sensing step.
    pub resensed: Vec<usize>,
    /// Detection ratio of the re-sensing on comm slices outside `S_R`.
    pub resense_p_d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecxTrial {
    /// First sensing pass, no radar support known.
    pub initial_support: Vec<usize>,
    pub initial_p_d: f64,
    pub iterations: Vec<SpecxIteration>,
    /// The bands selected from the latest estimate equal the bands in use,
    /// reached before the cap.
    pub converged: bool,
    /// Too few unmasked blocks were left for band selection; the loop
    /// stopped there.
    pub blocked: bool,
}

/// Per-trial record stored in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrialData {
    Sense(SenseTrial),
    Bands(BandsTrial),
    Radar(RadarTrial),
    Specx(SpecxTrial),
}

fn seed_of(cfg: &ScenarioConfig, trial: u64, entity: Entity) -> u64 {
    stream(cfg.seed, trial, entity).next_u64()
}

/// Seed of a per-iteration stream.
fn iter_seed(cfg: &ScenarioConfig, trial: u64, entity: Entity, iteration: usize) -> u64 {
    derive_seed(cfg.seed, trial, ((entity as u64) << 16) | iteration as u64)
}

/// Comm transmissions of loop iteration `iteration`.
pub fn comm_specs(
    cfg: &ScenarioConfig,
    setup: &Setup,
    trial: u64,
    iteration: usize,
) -> Vec<CommTransmissionSpec> {
    if cfg.comm.phases.is_empty() {
        draw_comm(
            cfg,
            &setup.grid,
            &mut stream(cfg.seed, trial, Entity::CommScene),
        )
    } else {
        cfg.comm.phases[iteration.min(cfg.comm.phases.len() - 1)].clone()
    }
}

fn true_occupancy(cfg: &ScenarioConfig, specs: &[CommTransmissionSpec]) -> Result<FrequencySet> {
    let mut f = FrequencySet::empty();
    for s in specs {
        f = f.union(&s.occupancy(cfg.grid.f_nyq)?);
    }
    Ok(f)
}

fn greedy_opts(cfg: &ScenarioConfig) -> GreedyOptions {
    GreedyOptions {
        rule: cfg.sensing.rule,
        mirror_pairs: cfg.sensing.mirror_pairs,
    }
}

/// Unknown-atom budget: a transmission touches at most `q + 1` slice rows
/// per image, and each image pair is one atom when mirrors are paired.
pub fn comm_budget(cfg: &ScenarioConfig, setup: &Setup) -> usize {
    let per = setup.grid.oversampling() + 1;
    let images = if cfg.sensing.mirror_pairs { 1 } else { 2 };
    cfg.comm.n_sig * per * images
}

/// Atoms spanned by a known support.
fn atoms_in(cfg: &ScenarioConfig, setup: &Setup, s: &SliceSupport) -> usize {
    if cfg.sensing.mirror_pairs {
        s.indices()
            .iter()
            .filter(|&&i| setup.grid.mirror_slice(i).is_none_or(|m| m >= i))
            .count()
    } else {
        s.len()
    }
}

fn comm_slices(
    cfg: &ScenarioConfig,
    setup: &Setup,
    specs: &[CommTransmissionSpec],
    snr_db: Option<f64>,
    seed: u64,
) -> Result<CommSlices> {
    let psd = snr_db.map_or(0.0, |s| comm_noise_psd(cfg, &setup.grid, s));
    Ok(gen_comm_slices(specs, &setup.grid, psd, seed)?)
}

fn sensing_matrix(setup: &Setup, channels: usize, seed: u64) -> Result<SensingMatrix> {
    let n = setup.grid.n_slices();
    Ok(build_sensing_matrix(
        &gen_mixing_sequences(channels, n, seed)?,
        n,
    )?)
}

/// Radar signal in the comm receiver for transmit bands `f_r`.
fn radar_view(
    cfg: &ScenarioConfig,
    setup: &Setup,
    f_r: &FrequencySet,
    seed: u64,
) -> Result<SliceSpectrum> {
    let wf = design_radar_waveform(
        &flat_base_spectrum(setup.n_delay),
        cfg.radar.b_h,
        f_r,
        cfg.radar.p_t,
    )?;
    let per_bin = radar_power_per_bin(cfg, &setup.grid, f_r);
    Ok(radar_slices(
        &wf,
        cfg.radar.carrier,
        &setup.grid,
        per_bin,
        seed,
    )?)
}

/// Comm detection with plain OMP and with OMP seeded by the radar slices.
/// The radar transmits on bands selected from the REM around the true comm
/// occupancy.
pub fn sense_trial(
    cfg: &ScenarioConfig,
    setup: &Setup,
    trial: u64,
    snr_db: Option<f64>,
    channels: usize,
) -> Result<SenseTrial> {
    let specs = comm_specs(cfg, setup, trial, 0);
    let comm = comm_slices(
        cfg,
        setup,
        &specs,
        snr_db,
        seed_of(cfg, trial, Entity::CommNoise),
    )?;
    let y = draw_rem(cfg, &mut stream(cfg.seed, trial, Entity::Rem));
    let f_r = select_bands(cfg, &setup.span, &y, &comm_to_radar(&comm.f_c, cfg))?.f_r;
    let x = comm.spectrum.add(&radar_view(
        cfg,
        setup,
        &f_r,
        seed_of(cfg, trial, Entity::RadarComm),
    )?)?;
    let s_r = radar_slice_support(&radar_to_comm(&f_r, cfg), &setup.grid);
    let a = sensing_matrix(setup, channels, seed_of(cfg, trial, Entity::Mixing))?;
    let z = xample(&x, &a, 0.0, 0)?;
    let v = build_frame(&z.z, cfg.sensing.eig_tol);
    let opts = greedy_opts(cfg);
    let full = comm.s_c.union(&s_r);
    let k_extra = if cfg.sensing.oracle_sparsity {
        atoms_in(cfg, setup, &full) - atoms_in(cfg, setup, &s_r)
    } else {
        comm_budget(cfg, setup)
    };
    let omp = somp_with(
        &v,
        &a,
        (atoms_in(cfg, setup, &s_r) + k_extra).min(channels),
        cfg.sensing.res_tol,
        opts,
        Some(&setup.grid),
    )?;
    let pks = omp_pks_with(
        &v,
        &a,
        &s_r,
        k_extra,
        cfg.sensing.res_tol,
        opts,
        Some(&setup.grid),
    )?;
    let comm_only = comm.s_c.difference(&s_r);
    Ok(SenseTrial {
        snr_db,
        channels,
        s_c: comm.s_c.indices().to_vec(),
        s_r: s_r.indices().to_vec(),
        p_d_omp: detection_ratio(&omp, &full),
        p_d_pks: detection_ratio(&pks, &full),
        p_d_comm_omp: detection_ratio(&omp, &comm_only),
        p_d_comm_pks: detection_ratio(&pks, &comm_only),
        exact_omp: omp == full,
        exact_pks: pks == full,
        omp: omp.indices().to_vec(),
        pks: pks.indices().to_vec(),
    })
}

/// Band selection on a drawn REM around the true comm occupancy.
pub fn bands_trial(cfg: &ScenarioConfig, setup: &Setup, trial: u64) -> Result<BandsTrial> {
    let specs = comm_specs(cfg, setup, trial, 0);
    let f_c = comm_to_radar(&true_occupancy(cfg, &specs)?, cfg);
    let y = draw_rem(cfg, &mut stream(cfg.seed, trial, Entity::Rem));
    let sel = select_bands(cfg, &setup.span, &y, &f_c)?;
    let support = sel.support();
    let d = MappingMatrix::uniform(cfg.rem.q, cfg.rem.p)?;
    let y_inv: Vec<f64> = y.iter().map(|&v| 1.0 / v.max(cfg.rem.floor)).collect();
    Ok(BandsTrial {
        disjoint: !sel.f_r.intersects(&f_c),
        blocks: blocks_of(&support).len(),
        residual: selection_residual(&y_inv, &d, &support),
        y,
        f_c,
        f_r: sel.f_r,
        support,
    })
}

/// Radar-side environment of one trial.
#[derive(Debug, Clone)]
pub struct RadarEnv {
    pub scene: TargetScene,
    /// REM energies (thermal-noise units).
    pub y: Vec<f64>,
    /// True comm occupancy in radar baseband; it interferes with the echo.
    pub f_c: FrequencySet,
    pub noise_seed: u64,
}

pub fn radar_env(
    cfg: &ScenarioConfig,
    setup: &Setup,
    trial: u64,
    iteration: usize,
) -> Result<RadarEnv> {
    let mut rng = stream(cfg.seed, trial, Entity::TargetScene);
    let amp = 1.0;
    let scene = if cfg.radar.off_grid {
        TargetScene::random_off_grid(cfg.radar.targets, &setup.train, amp, &mut rng)?
    } else {
        TargetScene::random_on_grid(
            cfg.radar.targets,
            setup.n_delay,
            &setup.train,
            amp,
            &mut rng,
        )?
    };
    let specs = comm_specs(cfg, setup, trial, iteration);
    Ok(RadarEnv {
        scene,
        y: draw_rem(cfg, &mut stream(cfg.seed, trial, Entity::Rem)),
        f_c: comm_to_radar(&true_occupancy(cfg, &specs)?, cfg),
        noise_seed: iter_seed(cfg, trial, Entity::RadarNoise, iteration),
    })
}

/// Thermal coefficient-noise variance for the radar SNR `snr_db`: the SNR is
/// that of a unit target's coefficient under the full-band waveform.
pub fn thermal_var(cfg: &ScenarioConfig, snr_db: f64) -> f64 {
    let h0 = cfg.radar.p_t / cfg.radar.b_h;
    h0 / (cfg.radar.pri * cfg.radar.pri) / db(snr_db)
}

/// Noncentrality of the threshold model: `P_T / (sigma^2 |F_R|)` with the
/// thermal noise density `sigma^2 = tau^2 sigma_c^2`.
pub fn derived_rho(cfg: &ScenarioConfig, snr_db: f64, f_r: &FrequencySet) -> f64 {
    cfg.radar.p_t / (cfg.radar.pri * cfg.radar.pri * thermal_var(cfg, snr_db) * f_r.measure())
}

/// Delay-Doppler recovery from the coefficients of the bands `f_r`.
pub fn radar_recover(
    cfg: &ScenarioConfig,
    setup: &Setup,
    env: &RadarEnv,
    layout: BandLayout,
    f_r: &FrequencySet,
    snr_db: f64,
) -> Result<RadarTrial> {
    let r = &cfg.radar;
    let n = setup.n_delay;
    let wf = design_radar_waveform(&flat_base_spectrum(n), r.b_h, f_r, r.p_t)?;
    let h = wf.spectrum();
    let kappa = make_kappa(f_r, r.b_h, n)?;
    let thermal = thermal_var(cfg, snr_db);
    let comm_level = db(cfg.comm.interference_db);
    let var_of = |k: usize| {
        let f = setup.coeff_freq(k);
        let comm = if env.f_c.contains(f) { comm_level } else { 0.0 };
        thermal * (1.0 + env.y[rem_band(cfg, f)] + comm)
    };
    let mut c = radar_fourier_coeffs(&env.scene, &wf, &setup.train, kappa.indices(), 0.0, 0)?;
    c += radar_interference(kappa.indices(), r.n_pulses, var_of, env.noise_seed);
    let psi = doppler_focus(&c, &h, &kappa, &setup.train)?;
    let sigma2 = focused_noise_var_with(var_of, &h, &kappa, &setup.train);
    let rho = r.rho.unwrap_or_else(|| derived_rho(cfg, snr_db, f_r));
    let gamma = glrt_threshold(r.p_fa, n * r.n_pulses, rho, r.chi_square)?;
    let det = focused_omp_with(&psi, &kappa, &setup.train, gamma, sigma2, r.max_iter, r.omp)?;
    let hm = hit_or_miss(&det, &env.scene, r.b_h, &setup.train);
    Ok(RadarTrial {
        layout,
        snr_db,
        f_r: f_r.clone(),
        k: kappa.len(),
        gamma,
        rho,
        targets: env.scene.len(),
        hits: hm.per_target,
        hit_rate: hm.hit_rate,
        range_errors_m: hm.delay_errors.iter().map(|d| C0 * d / 2.0).collect(),
        statistics: det.statistics,
        truncated: det.truncated,
        detections: det.detections,
        blocked: false,
    })
}

/// Radar trial with the given layout placed around the true comm occupancy.
pub fn radar_trial(
    cfg: &ScenarioConfig,
    setup: &Setup,
    trial: u64,
    layout: BandLayout,
    snr_db: f64,
) -> Result<RadarTrial> {
    let env = radar_env(cfg, setup, trial, 0)?;
    match layout_bands(layout, cfg, &setup.span, &env.y, &env.f_c) {
        Ok(f_r) => radar_recover(cfg, setup, &env, layout, &f_r, snr_db),
        Err(PipelineError::Core(Error::InsufficientBlocks { .. })) => {
            let targets = env.scene.len();
            Ok(RadarTrial {
                layout,
                snr_db,
                f_r: FrequencySet::empty(),
                k: 0,
                gamma: 0.0,
                rho: 0.0,
                targets,
                detections: Vec::new(),
                hits: vec![false; targets],
                hit_rate: if targets == 0 { 1.0 } else { 0.0 },
                range_errors_m: Vec::new(),
                statistics: Vec::new(),
                truncated: false,
                blocked: true,
            })
        }
        Err(e) => Err(e),
    }
}

/// Comm occupancy estimate: energy detection inside `unknown`, using a
/// least-squares fit over `fit` (which contains `unknown`).
fn occupancy_estimate(
    cfg: &ScenarioConfig,
    setup: &Setup,
    z: &CMat,
    a: &SensingMatrix,
    fit: &SliceSupport,
    unknown: &SliceSupport,
) -> Result<FrequencySet> {
    match cfg.sensing.energy_thresh_db {
        None => Ok(support_to_freqs(unknown, &setup.grid)),
        Some(t) => {
            let est = recover_slices(z, a, fit)?;
            Ok(refine_support_by_energy(&est, unknown, &setup.grid, t))
        }
    }
}

/// One run of the coexistence loop: sense, select bands, recover targets,
/// re-sense with the radar support known, and repeat until the re-sensed
/// occupancy selects the bands already in use (at most `loop_cap` passes). Iteration `t` recovers
/// targets under comm phase `t` and re-senses under phase `t + 1`.
pub fn specx_trial(cfg: &ScenarioConfig, setup: &Setup, trial: u64) -> Result<SpecxTrial> {
    let a = sensing_matrix(setup, cfg.channels, seed_of(cfg, trial, Entity::Mixing))?;
    let opts = greedy_opts(cfg);
    let k_extra = comm_budget(cfg, setup);
    let snr = Some(cfg.comm.snr_db);
    let comm_at = |t: usize| {
        let specs = comm_specs(cfg, setup, trial, t);
        comm_slices(
            cfg,
            setup,
            &specs,
            snr,
            iter_seed(cfg, trial, Entity::CommNoise, t),
        )
    };

    let comm0 = comm_at(0)?;
    let z0 = xample(&comm0.spectrum, &a, 0.0, 0)?.z;
    let s0 = somp_with(
        &build_frame(&z0, cfg.sensing.eig_tol),
        &a,
        k_extra.min(cfg.channels),
        cfg.sensing.res_tol,
        opts,
        Some(&setup.grid),
    )?;
    let mut f_c_det = occupancy_estimate(cfg, setup, &z0, &a, &s0, &s0)?;
    let mut out = SpecxTrial {
        initial_p_d: detection_ratio(&s0, &comm0.s_c),
        initial_support: s0.indices().to_vec(),
        iterations: Vec::new(),
        converged: false,
        blocked: false,
    };
    // the REM is fixed within a trial, so the selection depends on F_C only;
    // None when too few unmasked blocks remain
    let y = radar_env(cfg, setup, trial, 0)?.y;
    let select =
        |f_c: &FrequencySet| match select_bands(cfg, &setup.span, &y, &comm_to_radar(f_c, cfg)) {
            Ok(sel) => Ok(Some(sel.f_r)),
            Err(PipelineError::Core(Error::InsufficientBlocks { .. })) => Ok(None),
            Err(e) => Err(e),
        };
    let Some(mut f_r) = select(&f_c_det)? else {
        out.blocked = true;
        return Ok(out);
    };
    for t in 0..cfg.loop_cap {
        let env = radar_env(cfg, setup, trial, t)?;
        let f_r_comm = radar_to_comm(&f_r, cfg);
        let radar = radar_recover(
            cfg,
            setup,
            &env,
            BandLayout::Separated,
            &f_r,
            cfg.radar.snr_db,
        )?;

        let next = comm_at(t + 1)?;
        let x = next.spectrum.add(&radar_view(
            cfg,
            setup,
            &f_r,
            iter_seed(cfg, trial, Entity::RadarComm, t),
        )?)?;
        let z = xample(&x, &a, 0.0, 0)?.z;
        let s_r = radar_slice_support(&f_r_comm, &setup.grid);
        let detected = omp_pks_with(
            &build_frame(&z, cfg.sensing.eig_tol),
            &a,
            &s_r,
            k_extra,
            cfg.sensing.res_tol,
            opts,
            Some(&setup.grid),
        )?;
        // comm under the radar's bins (both images) keeps its last estimate
        let radar_occ = radar_comm_occupancy(&f_r, cfg.radar.carrier);
        let hidden = match cfg.sensing.energy_thresh_db {
            None => support_to_freqs(&s_r, &setup.grid),
            Some(_) => touched_bins(&radar_occ, &setup.grid),
        };
        let seen = match cfg.sensing.energy_thresh_db {
            None => support_to_freqs(&detected.difference(&s_r), &setup.grid),
            Some(t) => {
                let est = recover_slices(&z, &a, &detected)?;
                refine_support_by_energy_excluding(&est, &detected, &setup.grid, t, &radar_occ)
            }
        };
        let f_c_new = seen.union(&f_c_det.intersect(&hidden));

        let f_c_true = true_occupancy(cfg, &comm_specs(cfg, setup, trial, t))?;
        out.iterations.push(SpecxIteration {
            disjoint: !f_r_comm.intersects(&f_c_det),
            disjoint_true: !f_r_comm.intersects(&f_c_true),
            f_c_true,
            f_c_detected: f_c_det.clone(),
            f_r: f_r.clone(),
            s_r: s_r.indices().to_vec(),
            radar,
            resense_p_d: detection_ratio(&detected, &next.s_c.difference(&s_r)),
            resensed: detected.indices().to_vec(),
        });
        match select(&f_c_new)? {
            None => {
                out.blocked = true;
                break;
            }
            Some(next) if next == f_r => {
                out.converged = true;
                break;
            }
            Some(next) => f_r = next,
        }
        f_c_det = f_c_new;
    }
    Ok(out)
}

//! Experiment drivers: trials run on a worker pool and are collected in
//! trial order, so reports do not depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use specx_core::mwc::rate_line;

use crate::config::ScenarioConfig;
use crate::error::{PipelineError, Result};
use crate::report::{aggregate, Accounting, ReportHeader, ReportKind, RunReport, TrialRecord};
use crate::scenario::Setup;
use crate::trials::{bands_trial, radar_trial, sense_trial, specx_trial, TrialData};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "SPECX_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Comm SNR, plain OMP against OMP seeded with the radar support.
    Snr,
    /// Radar transmit layouts over the radar SNR points.
    BandPlacement,
    /// Channel count at the configured comm SNR.
    Channels,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::Snr => "snr",
            SweepAxis::BandPlacement => "band-placement",
            SweepAxis::Channels => "channels",
        }
    }
}

fn pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            PipelineError::Config(format!("{THREADS_ENV} must be a worker count, got {v:?}"))
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))
}

/// Runs `f(point, trial)` over every pair, ordered by point then trial.
fn run_trials<F>(points: usize, trials: usize, f: F) -> Result<Vec<TrialRecord>>
where
    F: Fn(usize, u64) -> Result<TrialData> + Sync,
{
    let jobs: Vec<(usize, u64)> = (0..points)
        .flat_map(|p| (0..trials as u64).map(move |t| (p, t)))
        .collect();
    pool()?.install(|| {
        jobs.par_iter()
            .map(|&(point, trial)| {
                Ok(TrialRecord {
                    trial,
                    point,
                    data: f(point, trial)?,
                })
            })
            .collect()
    })
}

fn report(
    cfg: &ScenarioConfig,
    command: &str,
    kind: ReportKind,
    trials: Vec<TrialRecord>,
) -> Result<RunReport> {
    let grid = cfg.grid_spec()?;
    let header = ReportHeader {
        run_id: format!("{}-{}-s{}", cfg.name, command, cfg.seed),
        command: command.into(),
        kind,
        config: cfg.clone(),
        feasibility: cfg.feasibility()?,
        accounting: Accounting {
            rate: rate_line(cfg.channels, &grid),
            physical_channels: cfg.channels / cfg.collapse,
            physical_f_s: cfg.collapse as f64 * grid.f_s(),
            radar_occupancy: cfg.radar.n_b as f64 * cfg.radar.band_width / cfg.radar.b_h,
        },
    };
    Ok(RunReport {
        aggregates: aggregate(kind, &trials),
        header,
        trials,
    })
}

/// Comm sensing at the configured SNR and channel count.
pub fn run_sense(cfg: &ScenarioConfig) -> Result<RunReport> {
    let setup = Setup::new(cfg)?;
    let trials = run_trials(1, cfg.trials, |_, t| {
        Ok(TrialData::Sense(sense_trial(
            cfg,
            &setup,
            t,
            Some(cfg.comm.snr_db),
            cfg.channels,
        )?))
    })?;
    report(cfg, "sense", ReportKind::Sense, trials)
}

/// Radar band selection on drawn environment maps.
pub fn run_select_bands(cfg: &ScenarioConfig) -> Result<RunReport> {
    let setup = Setup::new(cfg)?;
    let trials = run_trials(1, cfg.trials, |_, t| {
        Ok(TrialData::Bands(bands_trial(cfg, &setup, t)?))
    })?;
    report(cfg, "select-bands", ReportKind::Bands, trials)
}

/// Target recovery with selected (separated) bands at the configured SNR.
pub fn run_radar(cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.require_feasible()?;
    let setup = Setup::new(cfg)?;
    let trials = run_trials(1, cfg.trials, |_, t| {
        Ok(TrialData::Radar(radar_trial(
            cfg,
            &setup,
            t,
            crate::config::BandLayout::Separated,
            cfg.radar.snr_db,
        )?))
    })?;
    report(cfg, "radar", ReportKind::Radar, trials)
}

/// The full coexistence loop, `trials` independent runs.
pub fn run_specx(cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.require_feasible()?;
    let setup = Setup::new(cfg)?;
    let trials = run_trials(1, cfg.trials, |_, t| {
        Ok(TrialData::Specx(specx_trial(cfg, &setup, t)?))
    })?;
    report(cfg, "specx", ReportKind::Specx, trials)
}

/// Monte-Carlo sweep along one axis with `sweep.trials` trials per point.
/// Trial `t` of every point uses the same scene draws.
pub fn sweep(cfg: &ScenarioConfig, axis: SweepAxis) -> Result<RunReport> {
    let setup = Setup::new(cfg)?;
    let s = &cfg.sweep;
    let command = format!("sweep-{}", axis.label());
    match axis {
        SweepAxis::Snr => {
            let trials = run_trials(s.snr_db.len(), s.trials, |p, t| {
                Ok(TrialData::Sense(sense_trial(
                    cfg,
                    &setup,
                    t,
                    Some(s.snr_db[p]),
                    cfg.channels,
                )?))
            })?;
            report(cfg, &command, ReportKind::Sense, trials)
        }
        SweepAxis::Channels => {
            let trials = run_trials(s.channels.len(), s.trials, |p, t| {
                Ok(TrialData::Sense(sense_trial(
                    cfg,
                    &setup,
                    t,
                    Some(cfg.comm.snr_db),
                    s.channels[p],
                )?))
            })?;
            report(cfg, &command, ReportKind::Sense, trials)
        }
        SweepAxis::BandPlacement => {
            cfg.require_feasible()?;
            let points: Vec<_> = s
                .band_layouts
                .iter()
                .flat_map(|&l| s.radar_snr_db.iter().map(move |&snr| (l, snr)))
                .collect();
            let trials = run_trials(points.len(), s.trials, |p, t| {
                let (layout, snr) = points[p];
                Ok(TrialData::Radar(radar_trial(cfg, &setup, t, layout, snr)?))
            })?;
            report(cfg, &command, ReportKind::Radar, trials)
        }
    }
}

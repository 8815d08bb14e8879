//! Scenario configuration: one JSON document holding every physical
//! parameter, plus the built-in presets.

use std::path::Path;

use serde::{Deserialize, Serialize};
use specx_core::chisq::ChiSquareModel;
use specx_core::grid::GridParams;
use specx_core::radar::{min_requirements, RadarOmpOptions, Requirements};
use specx_core::sensing::SelectionRule;
use specx_core::signal::{BandShape, CommTransmissionSpec};
use specx_core::{FrequencyInterval, GridSpec};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Master seed; every trial derives its own streams from it.
    pub seed: u64,
    pub trials: usize,
    pub grid: GridParams,
    /// Number of MWC channels `M`, counted at slice rate (virtual channels
    /// when the front end collapses branches).
    pub channels: usize,
    /// Physical branches run at `collapse * f_s` and expand into `collapse`
    /// virtual channels each; only used for rate accounting.
    #[serde(default = "one")]
    pub collapse: usize,
    pub comm: CommConfig,
    pub radar: RadarConfig,
    pub rem: RemConfig,
    pub sensing: SensingConfig,
    pub sweep: SweepConfig,
    /// Iteration cap of the coexistence loop.
    pub loop_cap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommConfig {
    /// Transmissions drawn per trial when `phases` is empty.
    pub n_sig: usize,
    /// Two-sided bandwidth of a drawn transmission, rounded to whole bins.
    pub bandwidth: f64,
    pub power: f64,
    pub shape: BandShape,
    /// In-band SNR of each transmission against white receiver noise.
    pub snr_db: f64,
    /// Scripted transmissions, one list per loop iteration (the last one
    /// repeats). Empty means random transmissions, fixed within a trial.
    #[serde(default)]
    pub phases: Vec<Vec<CommTransmissionSpec>>,
    /// Interference a comm band puts on radar coefficients, dB above the
    /// radar's thermal noise.
    pub interference_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    /// Radar band centre in comm-spectrum coordinates.
    pub carrier: f64,
    /// Wideband reference bandwidth `B_h`.
    pub b_h: f64,
    /// Pulse repetition interval `tau`.
    pub pri: f64,
    pub n_pulses: usize,
    /// Number of transmitted bands `N_b`.
    pub n_b: usize,
    /// Width of each transmitted band.
    pub band_width: f64,
    pub p_t: f64,
    /// Per-coefficient SNR of a unit target under the full-band waveform.
    pub snr_db: f64,
    pub p_fa: f64,
    pub chi_square: ChiSquareModel,
    /// Noncentrality of the noncentral model; `None` derives it as
    /// `P_T / (sigma^2 |F_R|)`, the per-coefficient SNR of the transmitted
    /// waveform.
    pub rho: Option<f64>,
    pub targets: usize,
    pub off_grid: bool,
    /// Detection iteration cap.
    pub max_iter: usize,
    /// Fewest empty REM bins between selected bands.
    pub min_separation: Option<usize>,
    /// Radar power seen by the comm receiver, relative to one comm
    /// transmission's power.
    pub power_at_comm: f64,
    #[serde(default)]
    pub omp: RadarOmpOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemConfig {
    /// REM bands across `B_h`.
    pub q: usize,
    /// Fine selection bins (a multiple of `q`).
    pub p: usize,
    /// Ambient interference per REM band, drawn uniformly in dB above
    /// thermal noise from this range.
    pub ambient_db: [f64; 2],
    /// Bands (drawn at random) carrying strong interference.
    pub hot_bands: usize,
    pub hot_db: f64,
    /// Fixed map (linear, in thermal-noise units) replacing the draw.
    #[serde(default)]
    pub y: Option<Vec<f64>>,
    /// Floor applied before inversion.
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensingConfig {
    pub eig_tol: f64,
    /// Relative residual stop of the greedy solvers.
    pub res_tol: f64,
    pub rule: SelectionRule,
    /// Select each slice together with its mirror.
    pub mirror_pairs: bool,
    /// Energy-detection threshold (dB below the strongest bin) that trims
    /// detected slices to occupied bins; `None` keeps whole slices.
    pub energy_thresh_db: Option<f64>,
    /// Size sensing budgets from the true support in standalone sensing
    /// trials instead of the worst-case occupancy bound.
    #[serde(default)]
    pub oracle_sparsity: bool,
}

fn one() -> usize {
    1
}

/// Transmit layouts compared in the band-placement sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandLayout {
    /// `N_b` bands chosen by structured band selection on the REM.
    Separated,
    /// One contiguous block of the same total width at the quietest spot.
    Adjacent,
    /// The whole `B_h`.
    Wideband,
}

impl BandLayout {
    pub fn label(&self) -> &'static str {
        match self {
            BandLayout::Separated => "separated",
            BandLayout::Adjacent => "adjacent",
            BandLayout::Wideband => "wideband",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Comm SNR points of the detection sweep.
    pub snr_db: Vec<f64>,
    /// Radar SNR points of the band-placement sweep.
    pub radar_snr_db: Vec<f64>,
    pub band_layouts: Vec<BandLayout>,
    pub channels: Vec<usize>,
    pub trials: usize,
}

/// Derived quantities checked at load time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub grid: GridSpec,
    pub n_delay: usize,
    pub requirements: Requirements,
    /// Pulses satisfy `P >= 2L`.
    pub pulses_ok: bool,
}

impl Feasibility {
    pub fn feasible(&self) -> bool {
        self.requirements.feasible && self.pulses_ok
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(
            self.grid.f_nyq,
            self.grid.f_p,
            self.grid.f_s,
            self.grid.n_grid,
        )
        .map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Delay bins `N = tau B_h`.
    pub fn n_delay(&self) -> Result<usize> {
        let n = self.radar.pri * self.radar.b_h;
        if !(n >= 1.0) || (n - n.round()).abs() > 1e-6 * n {
            return Err(PipelineError::Config(format!(
                "pri * b_h must be a positive integer number of delay bins, got {n}"
            )));
        }
        Ok(n.round() as usize)
    }

    /// Radar span `[-B_h/2, B_h/2)` in radar baseband.
    pub fn radar_span(&self) -> FrequencyInterval {
        FrequencyInterval::new(-self.radar.b_h / 2.0, self.radar.b_h / 2.0).expect("b_h validated")
    }

    /// Fine selection bins per transmitted band.
    pub fn band_bins(&self) -> usize {
        let b_w = self.radar.b_h / self.rem.p as f64;
        ((self.radar.band_width / b_w).round() as usize).max(1)
    }

    /// Structural checks; Theorem-style feasibility is reported separately.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Config(m));
        let grid = self.grid_spec()?;
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.channels == 0 {
            return bad("channels must be >= 1".into());
        }
        if self.collapse == 0 || self.collapse % 2 == 0 || self.channels % self.collapse != 0 {
            return bad(format!(
                "collapse must be odd and divide the channel count (channels={}, collapse={})",
                self.channels, self.collapse
            ));
        }
        if self.comm.bandwidth <= 0.0 || self.comm.bandwidth > grid.f_p() {
            return bad(format!(
                "comm bandwidth must lie in (0, f_p], got {}",
                self.comm.bandwidth
            ));
        }
        if self.comm.power <= 0.0 {
            return bad("comm power must be positive".into());
        }
        let r = &self.radar;
        if !(r.b_h > 0.0 && r.pri > 0.0 && r.p_t > 0.0) {
            return bad("radar b_h, pri and p_t must be positive".into());
        }
        self.n_delay()?;
        if r.n_pulses == 0 || r.n_b == 0 {
            return bad("radar needs n_pulses >= 1 and n_b >= 1".into());
        }
        if !(r.band_width > 0.0) || r.band_width * r.n_b as f64 > r.b_h * (1.0 + 1e-9) {
            return bad("radar bands must be positive and fit inside b_h".into());
        }
        if !(r.p_fa > 0.0 && r.p_fa < 1.0) {
            return bad(format!("p_fa must lie in (0, 1), got {}", r.p_fa));
        }
        let half = grid.f_nyq() / 2.0;
        if r.carrier - r.b_h / 2.0 < -half || r.carrier + r.b_h / 2.0 > half {
            return bad("radar band must sit inside +/- f_nyq/2 of the comm spectrum".into());
        }
        let rem = &self.rem;
        if rem.q == 0 || rem.p == 0 || rem.p % rem.q != 0 {
            return bad(format!(
                "REM needs p a positive multiple of q (q={}, p={})",
                rem.q, rem.p
            ));
        }
        if rem.ambient_db[0] > rem.ambient_db[1] {
            return bad("ambient_db range is reversed".into());
        }
        if rem.hot_bands > rem.q {
            return bad("more hot bands than REM bands".into());
        }
        if let Some(y) = &rem.y {
            if y.len() != rem.q {
                return bad(format!("fixed REM has {} entries, q = {}", y.len(), rem.q));
            }
        }
        if !(rem.floor > 0.0) {
            return bad("REM floor must be positive".into());
        }
        let s = &self.sweep;
        if s.trials == 0 {
            return bad("sweep trials must be >= 1".into());
        }
        if self.loop_cap == 0 {
            return bad("loop_cap must be >= 1".into());
        }
        Ok(())
    }

    /// Sample-count feasibility of the target recovery for `n_b` bands of
    /// `band_width` each.
    pub fn feasibility(&self) -> Result<Feasibility> {
        let grid = self.grid_spec()?;
        let n_delay = self.n_delay()?;
        let widths = vec![self.radar.band_width; self.radar.n_b];
        let requirements = min_requirements(self.radar.targets, n_delay, self.radar.b_h, &widths);
        Ok(Feasibility {
            grid,
            n_delay,
            requirements,
            pulses_ok: self.radar.n_pulses >= 2 * self.radar.targets,
        })
    }

    /// Errors with [`PipelineError::Infeasible`] when the target count cannot
    /// be recovered from the configured samples.
    pub fn require_feasible(&self) -> Result<Feasibility> {
        let f = self.feasibility()?;
        if !f.feasible() {
            return Err(PipelineError::Infeasible(format!(
                "{} targets need K >= {} coefficients and P >= {} pulses; have {} coefficients and {} pulses",
                self.radar.targets,
                f.requirements.k_min,
                f.requirements.p_min,
                f.requirements.b_tot,
                self.radar.n_pulses
            )));
        }
        Ok(f)
    }
}

/// Named presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Small grids for quick runs and tests.
    Desk,
    /// The published software scenario with the radar time-bandwidth
    /// product scaled to an integer delay grid.
    PaperScaled,
}

impl Preset {
    pub fn config(self) -> ScenarioConfig {
        match self {
            Preset::Desk => desk(),
            Preset::PaperScaled => paper_scaled(),
        }
    }
}

fn common_radar() -> RadarConfig {
    RadarConfig {
        carrier: 2.5e9,
        b_h: 162e6,
        pri: 1e-6,
        n_pulses: 100,
        n_b: 4,
        band_width: 8.1e6,
        p_t: 1.0,
        snr_db: -5.0,
        p_fa: 1e-2,
        chi_square: ChiSquareModel::Noncentral,
        rho: None,
        targets: 10,
        off_grid: false,
        max_iter: 30,
        min_separation: None,
        power_at_comm: 1.0,
        omp: RadarOmpOptions::default(),
    }
}

fn common_rem() -> RemConfig {
    RemConfig {
        q: 20,
        p: 20,
        ambient_db: [0.0, 20.0],
        hot_bands: 2,
        hot_db: 30.0,
        y: None,
        floor: 1e-6,
    }
}

fn common_sweep() -> SweepConfig {
    SweepConfig {
        snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
        radar_snr_db: vec![-15.0, -10.0, -5.0, 0.0],
        band_layouts: vec![
            BandLayout::Separated,
            BandLayout::Wideband,
            BandLayout::Adjacent,
        ],
        channels: vec![8, 12, 16, 20, 24],
        trials: 200,
    }
}

/// Desk-scale scenario: 26 slices of 400 MHz over a 10 GHz Nyquist band.
pub fn desk() -> ScenarioConfig {
    ScenarioConfig {
        name: "desk".into(),
        seed: 1,
        trials: 50,
        grid: GridParams {
            f_nyq: 10e9,
            f_p: 400e6,
            f_s: 400e6,
            n_grid: 64,
        },
        channels: 16,
        collapse: 1,
        comm: CommConfig {
            n_sig: 2,
            bandwidth: 50e6,
            power: 1.0,
            shape: BandShape::Flat,
            snr_db: 20.0,
            phases: Vec::new(),
            interference_db: 30.0,
        },
        radar: common_radar(),
        rem: common_rem(),
        sensing: SensingConfig {
            eig_tol: 0.1,
            res_tol: 1e-6,
            rule: SelectionRule::RankAware,
            mirror_pairs: false,
            energy_thresh_db: Some(13.0),
            oracle_sparsity: true,
        },
        sweep: common_sweep(),
        loop_cap: 5,
    }
}

/// Published software scenario: 10 GHz Nyquist band, 50 MHz transmissions,
/// 25 branches at about 154 MHz, modelled as 75 virtual channels at
/// f_p = f_Nyq / 195; 4 radar bands holding 20% of the wideband, 100 pulses.
pub fn paper_scaled() -> ScenarioConfig {
    let f_p = 10e9 / 195.0;
    ScenarioConfig {
        name: "paper-scaled".into(),
        seed: 1,
        trials: 20,
        grid: GridParams {
            f_nyq: 10e9,
            f_p,
            f_s: f_p,
            n_grid: 32,
        },
        channels: 75,
        collapse: 3,
        comm: CommConfig {
            n_sig: 2,
            bandwidth: 50e6,
            power: 1.0,
            shape: BandShape::Flat,
            snr_db: 20.0,
            phases: Vec::new(),
            interference_db: 30.0,
        },
        radar: common_radar(),
        rem: common_rem(),
        sensing: SensingConfig {
            eig_tol: 0.1,
            res_tol: 1e-6,
            rule: SelectionRule::RankAware,
            mirror_pairs: false,
            energy_thresh_db: Some(13.0),
            oracle_sparsity: true,
        },
        sweep: SweepConfig {
            trials: 1000,
            ..common_sweep()
        },
        loop_cap: 5,
    }
}

//! Scene construction shared by every experiment: comm transmissions on the
//! bin lattice, the radar environment map, transmit-band layouts and the
//! mapping between comm-spectrum and radar-baseband coordinates.

use rand::seq::index::sample;
use rand::Rng;
use specx_core::bands::{
    invert_rem, mask_comm, struct_omp, BandConstraints, BandSelection, MappingMatrix, RemGrid,
};
use specx_core::signal::{signed_index, CommTransmissionSpec, PulseTrainSpec};
use specx_core::{Error, FrequencyInterval, FrequencySet, GridSpec};

use crate::config::{BandLayout, ScenarioConfig};
use crate::error::Result;

/// Derived, validated quantities of a configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: GridSpec,
    pub n_delay: usize,
    pub train: PulseTrainSpec,
    /// Radar baseband span `[-B_h/2, B_h/2)`.
    pub span: FrequencyInterval,
}

impl Setup {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            grid: cfg.grid_spec()?,
            n_delay: cfg.n_delay()?,
            train: PulseTrainSpec::new(cfg.radar.pri, cfg.radar.n_pulses)?,
            span: cfg.radar_span(),
        })
    }

    /// Frequency of radar coefficient `k` (DFT order).
    pub fn coeff_freq(&self, k: usize) -> f64 {
        signed_index(k, self.n_delay) as f64 * self.span.width() / self.n_delay as f64
    }
}

/// Comm bandwidth rounded to a whole number of bins (at least one, at most
/// one slice).
pub fn lattice_bins(cfg: &ScenarioConfig, grid: &GridSpec) -> usize {
    let bins = (cfg.comm.bandwidth / grid.bin_width()).round() as usize;
    bins.clamp(1, grid.n_grid())
}

/// `n_sig` random transmissions whose edges sit on bin boundaries, with
/// positive carriers inside the Nyquist band.
pub fn draw_comm<R: Rng>(
    cfg: &ScenarioConfig,
    grid: &GridSpec,
    rng: &mut R,
) -> Vec<CommTransmissionSpec> {
    let w = grid.bin_width();
    let nb = lattice_bins(cfg, grid);
    let last = (grid.f_nyq() / 2.0 / w - 0.5).floor() as usize;
    (0..cfg.comm.n_sig)
        .map(|_| {
            let k0 = rng.random_range(1..=last + 1 - nb);
            let lo = (k0 as f64 - 0.5) * w;
            CommTransmissionSpec {
                carrier: lo + nb as f64 * w / 2.0,
                bandwidth: nb as f64 * w,
                power: cfg.comm.power,
                shape: cfg.comm.shape,
            }
        })
        .collect()
}

/// Per-bin noise variance giving each transmission the in-band SNR `snr_db`.
pub fn comm_noise_psd(cfg: &ScenarioConfig, grid: &GridSpec, snr_db: f64) -> f64 {
    let per_bin = cfg.comm.power / lattice_bins(cfg, grid) as f64;
    per_bin / db(snr_db)
}

/// Per-bin variance of the radar signal in the comm receiver.
pub fn radar_power_per_bin(cfg: &ScenarioConfig, grid: &GridSpec, f_r: &FrequencySet) -> f64 {
    let bins = (f_r.measure() / grid.bin_width()).round().max(1.0);
    cfg.radar.power_at_comm * cfg.comm.power / bins
}

pub fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// Part of a comm-spectrum set inside the radar span, in radar baseband.
pub fn comm_to_radar(f_c: &FrequencySet, cfg: &ScenarioConfig) -> FrequencySet {
    let c = cfg.radar.carrier;
    let h = cfg.radar.b_h / 2.0;
    f_c.clipped(c - h, c + h).shifted(-c)
}

/// Radar baseband bands in comm-spectrum coordinates (positive image).
pub fn radar_to_comm(f_r: &FrequencySet, cfg: &ScenarioConfig) -> FrequencySet {
    f_r.shifted(cfg.radar.carrier)
}

/// REM energies in thermal-noise units: the configured map, or a uniform dB
/// draw per band with `hot_bands` random bands raised to `hot_db`.
pub fn draw_rem<R: Rng>(cfg: &ScenarioConfig, rng: &mut R) -> Vec<f64> {
    let rem = &cfg.rem;
    if let Some(y) = &rem.y {
        return y.clone();
    }
    let [lo, hi] = rem.ambient_db;
    let mut y_db: Vec<f64> = (0..rem.q)
        .map(|_| {
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        })
        .collect();
    for i in sample(rng, rem.q, rem.hot_bands) {
        y_db[i] = rem.hot_db;
    }
    y_db.into_iter().map(db).collect()
}

/// REM band index holding radar-baseband frequency `f`.
pub fn rem_band(cfg: &ScenarioConfig, f: f64) -> usize {
    let b_y = cfg.radar.b_h / cfg.rem.q as f64;
    (((f + cfg.radar.b_h / 2.0) / b_y).floor().max(0.0) as usize).min(cfg.rem.q - 1)
}

/// Structured band selection on the masked, floored and inverted REM.
pub fn select_bands(
    cfg: &ScenarioConfig,
    span: &FrequencyInterval,
    y: &[f64],
    f_c_radar: &FrequencySet,
) -> Result<BandSelection> {
    let rem = RemGrid::new(y.to_vec(), *span)?;
    let y_inv = invert_rem(&mask_comm(&rem, f_c_radar).floored(cfg.rem.floor))?;
    let d = MappingMatrix::uniform(cfg.rem.q, cfg.rem.p)?;
    let constraints = BandConstraints {
        max_block_len: Some(cfg.band_bins()),
        min_separation: cfg.radar.min_separation,
    };
    Ok(struct_omp(&y_inv, &d, cfg.radar.n_b, span, &constraints)?)
}

/// One contiguous block of `n_b * band_bins` fine bins over the quietest
/// stretch of unmasked REM bands (lowest index on ties).
pub fn adjacent_bands(
    cfg: &ScenarioConfig,
    span: &FrequencyInterval,
    y: &[f64],
    f_c_radar: &FrequencySet,
) -> Result<FrequencySet> {
    let rem = mask_comm(&RemGrid::new(y.to_vec(), *span)?, f_c_radar);
    let d = MappingMatrix::uniform(cfg.rem.q, cfg.rem.p)?;
    let p = cfg.rem.p;
    let width = (cfg.radar.n_b * cfg.band_bins()).min(p);
    let mut best: Option<(usize, f64)> = None;
    for start in 0..=p - width {
        let cost: f64 = (start..start + width).map(|j| rem.y[d.row_of(j)]).sum();
        if cost.is_finite() && best.is_none_or(|(_, b)| cost < b) {
            best = Some((start, cost));
        }
    }
    let Some((start, _)) = best else {
        return Err(Error::InsufficientBlocks {
            available: 0,
            requested: 1,
        }
        .into());
    };
    let b_w = span.width() / p as f64;
    let lo = span.lo() + start as f64 * b_w;
    Ok(FrequencySet::from_interval(FrequencyInterval::new(
        lo,
        lo + width as f64 * b_w,
    )?))
}

/// Transmit support of a layout.
pub fn layout_bands(
    layout: BandLayout,
    cfg: &ScenarioConfig,
    span: &FrequencyInterval,
    y: &[f64],
    f_c_radar: &FrequencySet,
) -> Result<FrequencySet> {
    match layout {
        BandLayout::Separated => Ok(select_bands(cfg, span, y, f_c_radar)?.f_r),
        BandLayout::Adjacent => adjacent_bands(cfg, span, y, f_c_radar),
        BandLayout::Wideband => Ok(FrequencySet::from_interval(*span)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::desk;
    use specx_core::rng::rng_from_seed;
    use specx_core::signal::gen_comm_slices;

    #[test]
    fn drawn_comm_sits_on_the_lattice() {
        let cfg = desk();
        let grid = cfg.grid_spec().unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..50 {
            let specs = draw_comm(&cfg, &grid, &mut rng);
            assert_eq!(specs.len(), cfg.comm.n_sig);
            let out = gen_comm_slices(&specs, &grid, 0.0, 1).unwrap();
            let nb = lattice_bins(&cfg, &grid) as f64;
            for s in &specs {
                assert!(s.carrier > 0.0 && s.carrier + s.bandwidth / 2.0 <= grid.f_nyq() / 2.0);
                assert!((s.bandwidth - nb * grid.bin_width()).abs() < 1e-6);
            }
            assert!(out.s_c.len() >= 2 && out.s_c.len() <= 4 * cfg.comm.n_sig);
        }
    }

    #[test]
    fn coordinate_maps_invert() {
        let cfg = desk();
        let f_r = FrequencySet::from_pairs(&[[-10e6, -2e6], [30e6, 40e6]]).unwrap();
        let back = comm_to_radar(&radar_to_comm(&f_r, &cfg), &cfg);
        assert!((back.measure() - f_r.measure()).abs() < 1e-3);
        let far = FrequencySet::from_pairs(&[[0.0, 1e9]]).unwrap();
        assert!(comm_to_radar(&far, &cfg).is_empty());
    }

    #[test]
    fn layouts_have_matched_width_and_avoid_comm() {
        let cfg = desk();
        let setup = Setup::new(&cfg).unwrap();
        let mut rng = rng_from_seed(9);
        let y = draw_rem(&cfg, &mut rng);
        assert_eq!(
            y.iter().filter(|&&v| v == db(cfg.rem.hot_db)).count(),
            cfg.rem.hot_bands
        );
        let f_c = FrequencySet::from_pairs(&[[-20e6, 5e6]]).unwrap();
        let sep = layout_bands(BandLayout::Separated, &cfg, &setup.span, &y, &f_c).unwrap();
        let adj = layout_bands(BandLayout::Adjacent, &cfg, &setup.span, &y, &f_c).unwrap();
        let wide = layout_bands(BandLayout::Wideband, &cfg, &setup.span, &y, &f_c).unwrap();
        let target = cfg.radar.n_b as f64 * cfg.radar.band_width;
        assert!((sep.measure() - target).abs() < 1e-3 * target);
        assert!((adj.measure() - target).abs() < 1e-3 * target);
        assert_eq!(sep.len(), cfg.radar.n_b);
        assert_eq!(adj.len(), 1);
        assert!((wide.measure() - cfg.radar.b_h).abs() < 1e-3);
        assert!(!sep.intersects(&f_c) && !adj.intersects(&f_c));
    }
}

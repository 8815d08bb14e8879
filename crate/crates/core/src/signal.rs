//! Synthesis of the comm multiband signal, the multiband radar waveform and
//! the radar echo Fourier coefficients.
//!
//! Comm and radar-as-seen-by-comm signals are produced directly in the
//! slice domain on a [`GridSpec`]. The underlying signals are real, so the
//! Nyquist-grid spectrum is conjugate symmetric (`X[-k] = X[k]*`).
//!
//! Doppler frequencies are in cycles per second throughout: pulse `p` of a
//! target with Doppler `nu` carries the phase `exp(-j 2 pi nu p tau)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::freqset::{FrequencyInterval, FrequencySet};
use crate::grid::GridSpec;
use crate::linalg::{CMat, ZERO};
use crate::rng::{complex_gaussian, real_gaussian, rng_from_seed};
use crate::sensing::SliceSupport;

/// Power spectral shape of one comm transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BandShape {
    #[default]
    Flat,
    /// Raised-cosine PSD whose total (two-sided) occupied width is the
    /// transmission bandwidth.
    RaisedCosine { rolloff: f64 },
}

impl BandShape {
    /// Relative PSD at offset `df` from the carrier for a band of width `b`.
    fn weight(&self, df: f64, b: f64) -> f64 {
        match *self {
            BandShape::Flat => 1.0,
            BandShape::RaisedCosine { rolloff } => {
                let r = rolloff.clamp(0.0, 1.0);
                let symbol_rate = b / (1.0 + r);
                let flat_edge = (1.0 - r) * symbol_rate / 2.0;
                let a = df.abs();
                if a <= flat_edge || r == 0.0 {
                    1.0
                } else {
                    0.5 * (1.0 + (PI / (r * symbol_rate) * (a - flat_edge)).cos())
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommTransmissionSpec {
    /// Carrier in Hz; the real signal also occupies the mirrored band.
    pub carrier: f64,
    /// Two-sided bandwidth of one image in Hz.
    pub bandwidth: f64,
    /// Power of one spectral image (sum of per-bin variances).
    pub power: f64,
    #[serde(default)]
    pub shape: BandShape,
}

impl CommTransmissionSpec {
    /// Two-sided occupancy (positive image and its mirror), clipped to the
    /// Nyquist range.
    pub fn occupancy(&self, f_nyq: f64) -> Result<FrequencySet> {
        let c = self.carrier.abs();
        let image = FrequencySet::from_interval(FrequencyInterval::centered(c, self.bandwidth)?);
        Ok(image
            .union(&image.mirrored())
            .clipped(-f_nyq / 2.0, f_nyq / 2.0))
    }
}

/// Slice-domain spectrum: row `i` holds `X(f + (i - ceil(N/2)) f_p)` for
/// `f` on the in-channel grid spanning `[-f_s/2, f_s/2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpectrum {
    values: CMat,
    grid: GridSpec,
}

impl SliceSpectrum {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            values: CMat::zeros(grid.n_slices(), grid.bins_per_channel()),
            grid,
        }
    }

    pub fn from_values(values: CMat, grid: GridSpec) -> Result<Self> {
        if values.nrows() != grid.n_slices() || values.ncols() != grid.bins_per_channel() {
            return Err(Error::DimensionMismatch(format!(
                "slice array is {}x{}, grid expects {}x{}",
                values.nrows(),
                values.ncols(),
                grid.n_slices(),
                grid.bins_per_channel()
            )));
        }
        Ok(Self { values, grid })
    }

    /// Reshapes a Nyquist-grid spectrum (indexed by `grid.wrap(k)`) into slices.
    pub fn from_nyquist_spectrum(spec: &[Complex64], grid: GridSpec) -> Result<Self> {
        if spec.len() != grid.nyquist_len() {
            return Err(Error::DimensionMismatch(format!(
                "spectrum has {} bins, grid expects {}",
                spec.len(),
                grid.nyquist_len()
            )));
        }
        let values = CMat::from_fn(grid.n_slices(), grid.bins_per_channel(), |i, g| {
            spec[grid.wrap(grid.global_bin(i, g))]
        });
        Ok(Self { values, grid })
    }

    /// Inverse of [`SliceSpectrum::from_nyquist_spectrum`]; each bin is read
    /// from the slice that owns it.
    pub fn to_nyquist_spectrum(&self) -> Vec<Complex64> {
        let g = &self.grid;
        let mut out = vec![ZERO; g.nyquist_len()];
        let off = ((g.bins_per_channel() - g.n_grid()) / 2) as i64;
        for i in 0..g.n_slices() {
            let (lo, hi) = g.slice_bins(i);
            for k in lo..hi {
                let col = (k - lo + off) as usize;
                out[g.wrap(k)] = self.values[(i, col)];
            }
        }
        out
    }

    pub fn values(&self) -> &CMat {
        &self.values
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn into_values(self) -> CMat {
        self.values
    }

    /// Rows carrying energy above `tol` times the strongest row.
    pub fn active_slices(&self, tol: f64) -> SliceSupport {
        let energy: Vec<f64> = self
            .values
            .row_iter()
            .map(|r| r.iter().map(|z| z.norm_sqr()).sum())
            .collect();
        let max = energy.iter().cloned().fold(0.0, f64::max);
        if max == 0.0 {
            return SliceSupport::empty();
        }
        SliceSupport::from_unchecked(
            energy
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > tol * max)
                .map(|(i, _)| i)
                .collect(),
        )
    }

    pub fn add(&self, other: &SliceSpectrum) -> Result<SliceSpectrum> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch(
                "slice spectra on different grids".into(),
            ));
        }
        Ok(SliceSpectrum {
            values: &self.values + &other.values,
            grid: self.grid,
        })
    }

    pub fn scaled(&self, s: f64) -> SliceSpectrum {
        SliceSpectrum {
            values: self.values.map(|z| z * s),
            grid: self.grid,
        }
    }
}

/// Rows of the slice array whose in-channel span contains a bin centre in `occ`.
pub fn occupied_slices(occ: &FrequencySet, grid: &GridSpec) -> SliceSupport {
    let mut rows = Vec::new();
    let half_span = (grid.bins_per_channel() / 2) as i64;
    for i in 0..grid.n_slices() {
        let (lo, hi) = grid.slice_bins(i);
        let c = (lo + hi) / 2;
        let hit = occ.intervals().iter().any(|iv| {
            let k_lo = (iv.lo() / grid.bin_width()).ceil() as i64;
            let k_hi = (iv.hi() / grid.bin_width()).ceil() as i64; // exclusive
            k_lo.max(c - half_span) < k_hi.min(c + half_span)
        });
        if hit {
            rows.push(i);
        }
    }
    SliceSupport::from_unchecked(rows)
}

/// Signed Nyquist-grid bins with centre frequency in `occ`, non-negative half only.
fn nonnegative_bins(occ: &FrequencySet, grid: &GridSpec) -> Vec<i64> {
    let w = grid.bin_width();
    let mut bins = Vec::new();
    for iv in occ.intervals() {
        let lo = ((iv.lo() / w).ceil() as i64).max(0);
        let hi = (iv.hi() / w).ceil() as i64;
        bins.extend(lo..hi);
    }
    bins.sort_unstable();
    bins.dedup();
    bins
}

/// Adds a conjugate-symmetric draw with per-bin variance `var(k)` at each
/// non-negative bin (and its mirror).
fn add_real_noise<R: Rng>(
    spec: &mut [Complex64],
    grid: &GridSpec,
    bins: &[i64],
    var: impl Fn(i64) -> f64,
    rng: &mut R,
) {
    for &k in bins {
        let v = var(k);
        if v <= 0.0 {
            continue;
        }
        if k == 0 {
            spec[grid.wrap(0)] += Complex64::new(v.sqrt() * real_gaussian(rng), 0.0);
        } else {
            let z = complex_gaussian(rng, v);
            spec[grid.wrap(k)] += z;
            spec[grid.wrap(-k)] += z.conj();
        }
    }
}

/// Ground truth produced alongside a synthesized comm spectrum.
#[derive(Debug, Clone)]
pub struct CommSlices {
    pub spectrum: SliceSpectrum,
    /// Two-sided occupied support `F_C`.
    pub f_c: FrequencySet,
    /// Active slice rows `S_C`.
    pub s_c: SliceSupport,
}

/// Synthesizes the slice-domain spectrum of a real multiband comm signal.
///
/// Each transmission is band-limited complex Gaussian content with the
/// requested PSD shape; `noise_psd` is the per-bin variance of white noise
/// added across `|f| < f_nyq / 2`.
pub fn gen_comm_slices(
    specs: &[CommTransmissionSpec],
    grid: &GridSpec,
    noise_psd: f64,
    seed: u64,
) -> Result<CommSlices> {
    let mut rng = rng_from_seed(seed);
    let mut spec = vec![ZERO; grid.nyquist_len()];
    let mut f_c = FrequencySet::empty();
    let nyq_half = grid.f_nyq() / 2.0;
    for (i, t) in specs.iter().enumerate() {
        if !(t.bandwidth > 0.0) || t.bandwidth > grid.f_p() {
            return invalid(format!(
                "transmission {i}: bandwidth {} must lie in (0, f_p = {}]",
                t.bandwidth,
                grid.f_p()
            ));
        }
        if !t.carrier.is_finite() || t.carrier.abs() > nyq_half {
            return invalid(format!(
                "transmission {i}: carrier {} outside +/- f_nyq/2",
                t.carrier
            ));
        }
        if !(t.power >= 0.0) {
            return invalid(format!("transmission {i}: negative power"));
        }
        let occ = t.occupancy(grid.f_nyq())?;
        let bins = nonnegative_bins(&occ, grid);
        let c = t.carrier.abs();
        let w = |k: i64| t.shape.weight(grid.bin_freq(k).abs() - c, t.bandwidth);
        let norm: f64 = bins.iter().map(|&k| w(k)).sum();
        if norm > 0.0 && t.power > 0.0 {
            let scale = t.power / norm;
            add_real_noise(&mut spec, grid, &bins, |k| scale * w(k), &mut rng);
        }
        f_c = f_c.union(&occ);
    }
    if noise_psd > 0.0 {
        let w = grid.bin_width();
        let kmax = (nyq_half / w).ceil() as i64;
        let bins: Vec<i64> = (0..kmax).filter(|&k| grid.bin_freq(k) < nyq_half).collect();
        add_real_noise(&mut spec, grid, &bins, |_| noise_psd, &mut rng);
    }
    let s_c = occupied_slices(&f_c, grid);
    Ok(CommSlices {
        spectrum: SliceSpectrum::from_nyquist_spectrum(&spec, *grid)?,
        f_c,
        s_c,
    })
}

/// Signed frequency index of DFT position `i` in a length-`n` spectrum.
pub fn signed_index(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Multiband radar transmit spectrum with power renormalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarWaveformSpec {
    pub b_h: f64,
    pub n_b: usize,
    /// Transmit support `F_R` in radar baseband coordinates.
    pub bands: FrequencySet,
    /// Common gain applied on every band.
    pub beta: f64,
    /// `H_Nyq` in DFT order on the grid `f_k = k b_h / N`, scaled so that
    /// its total power equals `p_t`.
    pub base_spectrum: Vec<Complex64>,
    pub p_t: f64,
}

impl RadarWaveformSpec {
    pub fn n(&self) -> usize {
        self.base_spectrum.len()
    }

    pub fn bin_width(&self) -> f64 {
        self.b_h / self.n() as f64
    }

    pub fn freq(&self, i: usize) -> f64 {
        signed_index(i, self.n()) as f64 * self.bin_width()
    }

    /// Transmitted spectrum `H_R` in DFT order.
    pub fn spectrum(&self) -> Vec<Complex64> {
        (0..self.n())
            .map(|i| {
                if self.bands.contains(self.freq(i)) {
                    self.base_spectrum[i] * self.beta
                } else {
                    ZERO
                }
            })
            .collect()
    }

    /// `sum |H|^2 df` over the full band (the reference power).
    pub fn reference_power(&self) -> f64 {
        self.base_spectrum.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.bin_width()
    }

    /// `sum |H_R|^2 df` over the transmitted bands.
    pub fn transmitted_power(&self) -> f64 {
        self.spectrum().iter().map(|z| z.norm_sqr()).sum::<f64>() * self.bin_width()
    }
}

/// Flat unit-magnitude `H_Nyq` of `n` bins.
pub fn flat_base_spectrum(n: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0, 0.0); n]
}

/// Restricts `base_spectrum` to `bands` and rescales so the transmitted
/// power equals the full-band power, which is itself set to `p_t`.
pub fn design_radar_waveform(
    base_spectrum: &[Complex64],
    b_h: f64,
    bands: &FrequencySet,
    p_t: f64,
) -> Result<RadarWaveformSpec> {
    let n = base_spectrum.len();
    if n == 0 || !(b_h > 0.0) || !(p_t > 0.0) {
        return invalid("waveform needs a non-empty spectrum, b_h > 0 and p_t > 0");
    }
    if bands.measure() <= 0.0 {
        return invalid("transmit bands have zero measure; beta undefined");
    }
    let span = FrequencySet::from_interval(FrequencyInterval::new(-b_h / 2.0, b_h / 2.0)?);
    if bands.difference(&span).measure() > 0.0 {
        return invalid(format!("bands {bands} exceed [-B_h/2, B_h/2)"));
    }
    let df = b_h / n as f64;
    let full: f64 = base_spectrum.iter().map(|z| z.norm_sqr()).sum::<f64>() * df;
    if full <= 0.0 {
        return invalid("base spectrum carries no power");
    }
    let scale = (p_t / full).sqrt();
    let base: Vec<Complex64> = base_spectrum.iter().map(|z| z * scale).collect();
    let in_band: f64 = (0..n)
        .filter(|&i| bands.contains(signed_index(i, n) as f64 * df))
        .map(|i| base[i].norm_sqr())
        .sum::<f64>()
        * df;
    if in_band <= 0.0 {
        return invalid("no spectrum samples fall inside the transmit bands");
    }
    Ok(RadarWaveformSpec {
        b_h,
        n_b: bands.len(),
        bands: bands.clone(),
        beta: (p_t / in_band).sqrt(),
        base_spectrum: base,
        p_t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseTrainSpec {
    /// Pulse repetition interval in seconds.
    pub pri: f64,
    pub n_pulses: usize,
}

impl PulseTrainSpec {
    pub fn new(pri: f64, n_pulses: usize) -> Result<Self> {
        if !(pri > 0.0) || n_pulses == 0 {
            return invalid(format!(
                "pulse train needs pri > 0 and P >= 1 (pri={pri}, P={n_pulses})"
            ));
        }
        Ok(Self { pri, n_pulses })
    }

    /// Doppler grid spacing `1 / (P tau)`.
    pub fn doppler_resolution(&self) -> f64 {
        1.0 / (self.n_pulses as f64 * self.pri)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    /// Delay in seconds.
    pub tau: f64,
    /// Doppler in Hz.
    pub nu: f64,
    pub alpha: Complex64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TargetScene {
    pub targets: Vec<Target>,
}

impl TargetScene {
    pub fn new(targets: Vec<Target>, train: &PulseTrainSpec) -> Result<Self> {
        for (l, t) in targets.iter().enumerate() {
            if !(0.0..train.pri).contains(&t.tau) {
                return invalid(format!("target {l}: delay {} outside [0, pri)", t.tau));
            }
            if t.nu.abs() > 0.5 / train.pri * (1.0 + 1e-12) {
                return invalid(format!("target {l}: Doppler {} beyond 1/(2 pri)", t.nu));
            }
        }
        Ok(Self { targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Random scene on the Nyquist delay-Doppler grid with distinct cells
    /// and unit-modulus random-phase amplitudes scaled by `amplitude`.
    pub fn random_on_grid<R: Rng>(
        l: usize,
        n_delay: usize,
        train: &PulseTrainSpec,
        amplitude: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let p = train.n_pulses;
        if l > n_delay * p {
            return invalid(format!("{l} targets do not fit in {n_delay}x{p} cells"));
        }
        let mut cells: Vec<(usize, usize)> = Vec::with_capacity(l);
        while cells.len() < l {
            let c = (rng.random_range(0..n_delay), rng.random_range(0..p));
            if !cells.contains(&c) {
                cells.push(c);
            }
        }
        let targets = cells
            .into_iter()
            .map(|(r, q)| Target {
                tau: train.pri * r as f64 / n_delay as f64,
                nu: doppler_grid_value(q, train),
                alpha: Complex64::from_polar(amplitude, rng.random_range(0.0..2.0 * PI)),
            })
            .collect();
        Self::new(targets, train)
    }

    /// Random scene with continuous (off-grid) delays and Dopplers.
    pub fn random_off_grid<R: Rng>(
        l: usize,
        train: &PulseTrainSpec,
        amplitude: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let half = 0.5 / train.pri;
        let targets = (0..l)
            .map(|_| Target {
                tau: rng.random_range(0.0..train.pri),
                nu: rng.random_range(-half..half),
                alpha: Complex64::from_polar(amplitude, rng.random_range(0.0..2.0 * PI)),
            })
            .collect();
        Self::new(targets, train)
    }
}

/// Doppler value of focusing column `q`: `-1/(2 tau) + q/(P tau)`.
pub fn doppler_grid_value(q: usize, train: &PulseTrainSpec) -> f64 {
    -0.5 / train.pri + q as f64 * train.doppler_resolution()
}

/// Echo Fourier coefficients `c_p[k]` for `k` in `kappa` (DFT indices of the
/// waveform grid), as a `|kappa| x P` matrix, plus white noise of variance
/// `noise_var` per entry.
pub fn radar_fourier_coeffs(
    scene: &TargetScene,
    wf: &RadarWaveformSpec,
    train: &PulseTrainSpec,
    kappa: &[usize],
    noise_var: f64,
    seed: u64,
) -> Result<CMat> {
    let n = wf.n();
    let h = wf.spectrum();
    let tau = train.pri;
    let p_count = train.n_pulses;
    for &k in kappa {
        if k >= n {
            return invalid(format!("coefficient index {k} outside 0..{n}"));
        }
        if h[k] == ZERO {
            return Err(Error::ZeroSpectrum(signed_index(k, n)));
        }
    }
    // slow-time phasors per target
    let doppler: Vec<Vec<Complex64>> = scene
        .targets
        .iter()
        .map(|t| {
            (0..p_count)
                .map(|p| Complex64::from_polar(1.0, -2.0 * PI * t.nu * p as f64 * tau))
                .collect()
        })
        .collect();
    let mut c = CMat::zeros(kappa.len(), p_count);
    for (row, &k) in kappa.iter().enumerate() {
        let ks = signed_index(k, n) as f64;
        let delay: Vec<Complex64> = scene
            .targets
            .iter()
            .map(|t| t.alpha * Complex64::from_polar(1.0, -2.0 * PI * ks * t.tau / tau))
            .collect();
        let gain = h[k] / tau;
        for p in 0..p_count {
            let s: Complex64 = delay.iter().zip(&doppler).map(|(d, ph)| d * ph[p]).sum();
            c[(row, p)] = gain * s;
        }
    }
    if noise_var > 0.0 {
        let mut rng = rng_from_seed(seed);
        for z in c.iter_mut() {
            *z += complex_gaussian(&mut rng, noise_var);
        }
    }
    Ok(c)
}

/// Additive coloured interference on radar coefficients: entry `(row, p)`
/// has variance `var_of(kappa[row])`.
pub fn radar_interference(
    kappa: &[usize],
    n_pulses: usize,
    var_of: impl Fn(usize) -> f64,
    seed: u64,
) -> CMat {
    let mut rng = rng_from_seed(seed);
    let mut out = CMat::zeros(kappa.len(), n_pulses);
    for (row, &k) in kappa.iter().enumerate() {
        let v = var_of(k);
        for p in 0..n_pulses {
            out[(row, p)] = if v > 0.0 {
                complex_gaussian(&mut rng, v)
            } else {
                ZERO
            };
        }
    }
    out
}

/// Radar bands in comm-spectrum coordinates: `carrier + F_R` and its mirror.
pub fn radar_comm_occupancy(bands: &FrequencySet, carrier: f64) -> FrequencySet {
    let pos = bands.shifted(carrier);
    pos.union(&pos.mirrored())
}

/// The radar signal sensed by the comm receiver: band-limited real noise of
/// per-bin variance `power_scale` over `carrier + F_R` (and mirror).
pub fn radar_slices(
    wf: &RadarWaveformSpec,
    carrier: f64,
    grid: &GridSpec,
    power_scale: f64,
    seed: u64,
) -> Result<SliceSpectrum> {
    let half = grid.f_nyq() / 2.0;
    if wf.bands.is_empty() {
        return Ok(SliceSpectrum::zeros(*grid));
    }
    let pos = wf.bands.shifted(carrier);
    let (lo, hi) = (pos.intervals()[0].lo(), pos.intervals()[pos.len() - 1].hi());
    if lo < -half || hi > half {
        return invalid(format!(
            "radar bands at carrier {carrier} span [{lo}, {hi}) beyond +/- f_nyq/2"
        ));
    }
    let mut spec = vec![ZERO; grid.nyquist_len()];
    if power_scale > 0.0 {
        let occ = radar_comm_occupancy(&wf.bands, carrier);
        let bins = nonnegative_bins(&occ, grid);
        let mut rng = rng_from_seed(seed);
        add_real_noise(&mut spec, grid, &bins, |_| power_scale, &mut rng);
    }
    SliceSpectrum::from_nyquist_spectrum(&spec, *grid)
}
